//! Conforming triangulations of the unit square with labeled boundary edges.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Which part of the boundary an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryLabel {
    /// Displacement (Dirichlet) boundary.
    Gamma0,
    /// Traction (Neumann) boundary.
    Gamma1,
}

impl BoundaryLabel {
    fn code(self) -> u8 {
        match self {
            BoundaryLabel::Gamma0 => 0,
            BoundaryLabel::Gamma1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub label: BoundaryLabel,
}

/// How each lattice cell of [`build_unit_square`] is split into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalPattern {
    /// Diagonal from lower-left to upper-right in every cell.
    Right,
    /// Diagonal from lower-right to upper-left in every cell.
    Left,
    /// Checkerboard of the two.
    #[default]
    Alternating,
}

impl DiagonalPattern {
    pub fn name(self) -> &'static str {
        match self {
            DiagonalPattern::Right => "right",
            DiagonalPattern::Left => "left",
            DiagonalPattern::Alternating => "alternating",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "right" => Some(DiagonalPattern::Right),
            "left" => Some(DiagonalPattern::Left),
            "alternating" => Some(DiagonalPattern::Alternating),
            _ => None,
        }
    }
}

/// Area and constant barycentric gradients of one P1 triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad_basis: [[f64; 2]; 3],
}

impl ElementGeometry {
    /// Geometry of the triangle `p`. Vertex order may be either orientation;
    /// gradients always belong to the listed vertex.
    pub fn from_vertices(p: [Point; 3]) -> std::result::Result<Self, f64> {
        let det = signed_double_area(p);
        if det == 0.0 || !det.is_finite() {
            return Err(0.5 * det);
        }
        let [p1, p2, p3] = p;
        let grad_basis = [
            [(p2[1] - p3[1]) / det, (p3[0] - p2[0]) / det],
            [(p3[1] - p1[1]) / det, (p1[0] - p3[0]) / det],
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        ];
        Ok(ElementGeometry { area: 0.5 * det.abs(), grad_basis })
    }
}

// Coordinate differences and products are carried with their rounding errors
// (two-sum / fma), so areas of lattice triangles come out correctly rounded
// and tile the domain without drift.
fn signed_double_area(p: [Point; 3]) -> f64 {
    fn diff(a: f64, b: f64) -> (f64, f64) {
        let s = a - b;
        let bb = s - a;
        (s, (a - (s - bb)) - (b + bb))
    }
    fn prod(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        let h = a.0 * b.0;
        (h, a.0.mul_add(b.0, -h) + a.0 * b.1 + a.1 * b.0)
    }
    let [p1, p2, p3] = p;
    let l = prod(diff(p2[0], p1[0]), diff(p3[1], p1[1]));
    let r = prod(diff(p3[0], p1[0]), diff(p2[1], p1[1]));
    let (h, e) = diff(l.0, r.0);
    h + (e + l.1 - r.1)
}

/// Triangulation with counter-clockwise triangles and a complete, labeled
/// list of boundary edges. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    geometry: Vec<ElementGeometry>,
}

impl Mesh {
    /// Validates connectivity and orientation. Clockwise triangles are
    /// reoriented by swapping their last two vertices.
    pub fn new(nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>, boundary: Vec<BoundaryEdge>) -> Result<Self> {
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        let n = nodes.len();
        for (k, t) in triangles.iter().enumerate() {
            if let Some(&i) = t.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!("triangle {k} references node {i} but only {n} nodes exist")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("triangle {k} repeats a vertex")));
            }
        }
        for (k, e) in boundary.iter().enumerate() {
            if let Some(&i) = e.nodes.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!("boundary edge {k} references node {i} but only {n} nodes exist")));
            }
        }

        let mut geometry = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter_mut().enumerate() {
            let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            let det = signed_double_area(p);
            if det == 0.0 || !det.is_finite() {
                return Err(Error::DegenerateElement { element: k, area: 0.5 * det });
            }
            if det < 0.0 {
                t.swap(1, 2);
            }
            let g = ElementGeometry::from_vertices([nodes[t[0]], nodes[t[1]], nodes[t[2]]])
                .map_err(|area| Error::DegenerateElement { element: k, area })?;
            geometry.push(g);
        }

        let mut edge_count: HashMap<[usize; 2], usize> = HashMap::new();
        for t in &triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edge_count.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        if let Some((e, c)) = edge_count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!("edge {:?} is shared by {c} triangles", e)));
        }
        let mut listed: HashMap<[usize; 2], usize> = HashMap::new();
        for (k, e) in boundary.iter().enumerate() {
            let key = edge_key(e.nodes[0], e.nodes[1]);
            if listed.insert(key, k).is_some() {
                return Err(Error::InvalidMesh(format!("boundary edge {:?} listed twice", e.nodes)));
            }
            if edge_count.get(&key) != Some(&1) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {:?} is not a boundary edge of the triangulation",
                    e.nodes
                )));
            }
        }
        let open = edge_count.iter().filter(|(_, &c)| c == 1).count();
        if open != listed.len() {
            return Err(Error::InvalidMesh(format!(
                "triangulation has {open} boundary edges but {} are listed (non-conforming or incomplete boundary)",
                listed.len()
            )));
        }

        Ok(Mesh { nodes, triangles, boundary, geometry })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    /// Number of scalar displacement unknowns (two per node).
    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn element_geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    pub fn geometries(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn vertices(&self, k: usize) -> [Point; 3] {
        let t = self.triangles[k];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let [a, b] = e.nodes.map(|i| self.nodes[i]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn edge_midpoint(&self, e: &BoundaryEdge) -> Point {
        let [a, b] = e.nodes.map(|i| self.nodes[i]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn count_label(&self, label: BoundaryLabel) -> usize {
        self.boundary.iter().filter(|e| e.label == label).count()
    }

    /// Relabels every boundary edge by evaluating `predicate` at its midpoint.
    /// At least one edge must end up on `Gamma0`.
    pub fn classify_boundary<F>(mut self, predicate: F) -> Result<Self>
    where
        F: Fn(Point) -> BoundaryLabel,
    {
        for i in 0..self.boundary.len() {
            let mid = self.edge_midpoint(&self.boundary[i]);
            self.boundary[i].label = predicate(mid);
        }
        if self.count_label(BoundaryLabel::Gamma0) == 0 {
            return Err(Error::EmptyDirichlet);
        }
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "nodes {}", self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{} {}", p[0], p[1]).unwrap();
        }
        writeln!(s, "triangles {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "boundary {}", self.boundary.len()).unwrap();
        for e in &self.boundary {
            writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.label.code()).unwrap();
        }
        s
    }

    /// Parses the plain-text mesh format; `origin` only labels error messages.
    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { path: origin.to_string(), line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        fn header<'a>(
            lines: &mut impl Iterator<Item = (usize, &'a str)>,
            name: &str,
            perr: &dyn Fn(usize, String) -> Error,
        ) -> Result<usize> {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, format!("unexpected end of file, expected `{name} <count>`")))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(name) {
                return Err(perr(ln, format!("expected `{name} <count>`, found `{l}`")));
            }
            let count = it
                .next()
                .and_then(|c| c.parse::<usize>().ok())
                .ok_or_else(|| perr(ln, format!("missing or invalid count after `{name}`")))?;
            if it.next().is_some() {
                return Err(perr(ln, format!("trailing tokens after `{name} {count}`")));
            }
            Ok(count)
        }

        fn fields<T: std::str::FromStr>(
            l: &str,
            n: usize,
            ln: usize,
            perr: &dyn Fn(usize, String) -> Error,
        ) -> Result<Vec<T>> {
            let v: Vec<&str> = l.split_whitespace().collect();
            if v.len() != n {
                return Err(perr(ln, format!("expected {n} fields, found {}", v.len())));
            }
            v.iter()
                .map(|s| s.parse::<T>().map_err(|_| perr(ln, format!("cannot parse `{s}`"))))
                .collect()
        }

        let n_nodes = header(&mut lines, "nodes", &perr)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in node list".into()))?;
            let v: Vec<f64> = fields(l, 2, ln, &perr)?;
            nodes.push([v[0], v[1]]);
        }
        let n_tri = header(&mut lines, "triangles", &perr)?;
        let mut triangles = Vec::with_capacity(n_tri);
        for _ in 0..n_tri {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in triangle list".into()))?;
            let v: Vec<usize> = fields(l, 3, ln, &perr)?;
            if let Some(&i) = v.iter().find(|&&i| i >= n_nodes) {
                return Err(perr(ln, format!("node index {i} out of range (0..{n_nodes})")));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let n_bnd = header(&mut lines, "boundary", &perr)?;
        let mut boundary = Vec::with_capacity(n_bnd);
        for _ in 0..n_bnd {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in boundary list".into()))?;
            let v: Vec<usize> = fields(l, 3, ln, &perr)?;
            if let Some(&i) = v[..2].iter().find(|&&i| i >= n_nodes) {
                return Err(perr(ln, format!("node index {i} out of range (0..{n_nodes})")));
            }
            let label = match v[2] {
                0 => BoundaryLabel::Gamma0,
                1 => BoundaryLabel::Gamma1,
                x => return Err(perr(ln, format!("boundary label must be 0 or 1, found {x}"))),
            };
            boundary.push(BoundaryEdge { nodes: [v[0], v[1]], label });
        }
        if let Some((ln, l)) = lines.next() {
            return Err(perr(ln, format!("unexpected trailing content `{l}`")));
        }
        Mesh::new(nodes, triangles, boundary)
    }
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Uniform `n x n` lattice of `[0,1]^2`, each cell split into two triangles.
/// All boundary edges start out labeled `Gamma1`.
pub fn build_unit_square(n: usize, pattern: DiagonalPattern) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("mesh division number must be at least 1".into()));
    }
    let h = n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / h, j as f64 / h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let right = match pattern {
                DiagonalPattern::Right => true,
                DiagonalPattern::Left => false,
                DiagonalPattern::Alternating => (i + j) % 2 == 0,
            };
            if right {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    let mut push = |a, b| boundary.push(BoundaryEdge { nodes: [a, b], label: BoundaryLabel::Gamma1 });
    for i in 0..n {
        push(id(i, 0), id(i + 1, 0));
    }
    for j in 0..n {
        push(id(n, j), id(n, j + 1));
    }
    for i in (0..n).rev() {
        push(id(i + 1, n), id(i, n));
    }
    for j in (0..n).rev() {
        push(id(0, j + 1), id(0, j));
    }
    Mesh::new(nodes, triangles, boundary)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Mesh::from_text(&text, &path.display().to_string())
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mesh.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_square() {
        let m = build_unit_square(1, DiagonalPattern::Right).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements(), m.boundary_edges().len()), (4, 2, 4));
    }

    #[test]
    fn counts_and_areas_n40() {
        for pattern in [DiagonalPattern::Right, DiagonalPattern::Left, DiagonalPattern::Alternating] {
            let m = build_unit_square(40, pattern).unwrap();
            assert_eq!(m.num_nodes(), 1681);
            assert_eq!(m.num_elements(), 3200);
            let expected = 1.0 / (2.0 * 1600.0);
            for g in m.geometries() {
                assert!((g.area - expected).abs() < 1e-13 * expected);
            }
            // Neumaier summation, so the check measures the areas and not the adder.
            let (mut total, mut comp) = (0.0f64, 0.0f64);
            for g in m.geometries() {
                let t = total + g.area;
                comp += if total.abs() >= g.area.abs() { (total - t) + g.area } else { (g.area - t) + total };
                total = t;
            }
            assert!((total + comp - 1.0).abs() < 1e-14, "{pattern:?}: {}", total + comp - 1.0);
        }
    }

    #[test]
    fn rejects_zero_divisions() {
        assert!(build_unit_square(0, DiagonalPattern::Right).is_err());
    }

    #[test]
    fn classification_counts() {
        let m = build_unit_square(40, DiagonalPattern::Alternating).unwrap();
        let top = m.clone().classify_boundary(|p| if p[1] == 1.0 { BoundaryLabel::Gamma0 } else { BoundaryLabel::Gamma1 }).unwrap();
        assert_eq!(top.count_label(BoundaryLabel::Gamma0), 40);
        assert_eq!(top.count_label(BoundaryLabel::Gamma1), 120);

        let sides = m
            .clone()
            .classify_boundary(|p| if p[0] == 0.0 || p[0] == 1.0 { BoundaryLabel::Gamma0 } else { BoundaryLabel::Gamma1 })
            .unwrap();
        assert_eq!(sides.count_label(BoundaryLabel::Gamma0), 80);
        assert_eq!(sides.count_label(BoundaryLabel::Gamma1), 80);

        let all = m.clone().classify_boundary(|_| BoundaryLabel::Gamma0).unwrap();
        assert_eq!(all.count_label(BoundaryLabel::Gamma0), 160);
        assert_eq!(all.count_label(BoundaryLabel::Gamma1), 0);

        assert!(matches!(m.classify_boundary(|_| BoundaryLabel::Gamma1), Err(Error::EmptyDirichlet)));
    }

    #[test]
    fn reference_triangle_geometry() {
        let g = ElementGeometry::from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.area, 0.5);
        assert_eq!(g.grad_basis, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);

        let shifted = ElementGeometry::from_vertices([[3.0, -2.0], [4.0, -2.0], [3.0, -1.0]]).unwrap();
        assert_eq!(shifted, g);

        let big = ElementGeometry::from_vertices([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(big.area, 2.0);
        assert_eq!(big.grad_basis, [[-0.5, -0.5], [0.5, 0.0], [0.0, 0.5]]);

        assert!(ElementGeometry::from_vertices([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
    }

    #[test]
    fn gradients_sum_to_zero() {
        let m = build_unit_square(5, DiagonalPattern::Alternating).unwrap();
        for g in m.geometries() {
            let sx: f64 = g.grad_basis.iter().map(|v| v[0]).sum();
            let sy: f64 = g.grad_basis.iter().map(|v| v[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }

    #[test]
    fn interior_edges_shared_twice() {
        let n = 6;
        let m = build_unit_square(n, DiagonalPattern::Alternating).unwrap();
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for t in m.triangles() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *count.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        let boundary: Vec<_> = m.boundary_edges().iter().map(|e| edge_key(e.nodes[0], e.nodes[1])).collect();
        for (e, c) in count {
            let expected = if boundary.contains(&e) { 1 } else { 2 };
            assert_eq!(c, expected, "edge {e:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        let m = build_unit_square(1, DiagonalPattern::Right).unwrap();
        let back = Mesh::from_text(&m.to_text(), "mem").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 3\nboundary 3\n0 1 0\n1 2 1\n2 0 1\n";
        let err = Mesh::from_text(text, "bad.msh").unwrap_err();
        assert!(err.to_string().contains("bad.msh:6"), "{err}");
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let text = "# clockwise\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\nboundary 3\n0 1 0\n1 2 1\n2 0 1\n";
        let m = Mesh::from_text(text, "cw.msh").unwrap();
        assert_eq!(m.triangles()[0], [0, 1, 2]);
        assert_eq!(m.element_geometry(0).area, 0.5);
    }

    #[test]
    fn rejects_incomplete_boundary() {
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary 2\n0 1 0\n1 2 1\n";
        assert!(matches!(Mesh::from_text(text, "m"), Err(Error::InvalidMesh(_))));
    }
}
