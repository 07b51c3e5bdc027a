//! P1 displacement / P0 tensor fields, boundary data and Dirichlet constraints.

use std::collections::BTreeSet;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryLabel, ElementGeometry, Mesh, Point};
use crate::tensor::SymTensor2;

/// Continuous piecewise-linear displacement, one 2-vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP1(pub Vec<[f64; 2]>);

impl FieldP1 {
    pub fn zeros(num_nodes: usize) -> Self {
        FieldP1(vec![[0.0; 2]; num_nodes])
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> [f64; 2]) -> Self {
        FieldP1(mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    /// Interleaved DOF vector `[u1(0), u2(0), u1(1), ...]`.
    pub fn from_dofs(dofs: &[f64]) -> Self {
        FieldP1(dofs.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        self.0.iter().flat_map(|v| v.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }

    /// `(self - other) / tau` nodewise.
    pub fn backward_difference(&self, prev: &FieldP1, tau: f64) -> FieldP1 {
        FieldP1(
            self.0
                .iter()
                .zip(&prev.0)
                .map(|(a, b)| [(a[0] - b[0]) / tau, (a[1] - b[1]) / tau])
                .collect(),
        )
    }
}

impl Index<usize> for FieldP1 {
    type Output = [f64; 2];
    fn index(&self, i: usize) -> &[f64; 2] {
        &self.0[i]
    }
}

/// Piecewise-constant symmetric tensor field, one value per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP0(pub Vec<SymTensor2>);

impl FieldP0 {
    pub fn zeros(num_elements: usize) -> Self {
        FieldP0(vec![SymTensor2::ZERO; num_elements])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SymTensor2> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(SymTensor2::is_finite)
    }

    pub fn backward_difference(&self, prev: &FieldP0, tau: f64) -> FieldP0 {
        FieldP0(self.0.iter().zip(&prev.0).map(|(a, b)| (1.0 / tau) * (*a - *b)).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &FieldP0) -> FieldP0 {
        FieldP0(self.0.iter().zip(&other.0).map(|(a, b)| *a + s * *b).collect())
    }

    pub fn sub(&self, other: &FieldP0) -> FieldP0 {
        self.axpy(-1.0, other)
    }
}

impl Index<usize> for FieldP0 {
    type Output = SymTensor2;
    fn index(&self, k: usize) -> &SymTensor2 {
        &self.0[k]
    }
}

impl IndexMut<usize> for FieldP0 {
    fn index_mut(&mut self, k: usize) -> &mut SymTensor2 {
        &mut self.0[k]
    }
}

/// `x -> A x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineMap {
    pub const ZERO: AffineMap = AffineMap { a: [[0.0; 2]; 2], b: [0.0; 2] };

    /// From six numbers: `A` row-major, then `b`.
    pub fn from_coefficients(c: [f64; 6]) -> Self {
        AffineMap { a: [[c[0], c[1]], [c[2], c[3]]], b: [c[4], c[5]] }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1], self.b[0], self.b[1]]
    }

    pub fn eval(&self, x: Point) -> [f64; 2] {
        [
            self.a[0][0] * x[0] + self.a[0][1] * x[1] + self.b[0],
            self.a[1][0] * x[0] + self.a[1][1] * x[1] + self.b[1],
        ]
    }

    /// Symmetric gradient of the map.
    pub fn strain(&self) -> SymTensor2 {
        SymTensor2::sym_part(self.a)
    }
}

/// Time-independent data: Dirichlet `g` on `Gamma0`, traction `q` on
/// `Gamma1`, body force `f`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryData {
    pub g: AffineMap,
    pub q: [f64; 2],
    pub f: [f64; 2],
}

impl BoundaryData {
    pub fn validate(&self) -> Result<()> {
        let all = self.g.coefficients().into_iter().chain(self.q).chain(self.f);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("boundary data must be finite".into()));
        }
        Ok(())
    }
}

/// Constrained nodes (closure of the `Gamma0` edges) with their prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSet {
    nodes: Vec<usize>,
    values: Vec<[f64; 2]>,
}

impl DirichletSet {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, [f64; 2])> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    /// Per-DOF constraint mask and prescribed values, length `2 * num_nodes`.
    pub fn dof_values(&self, num_nodes: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; 2 * num_nodes];
        for (n, v) in self.iter() {
            out[2 * n] = Some(v[0]);
            out[2 * n + 1] = Some(v[1]);
        }
        out
    }

    /// Overwrites the constrained nodes of `u` with their prescribed values.
    pub fn impose(&self, u: &mut FieldP1) {
        for (n, v) in self.iter() {
            u.0[n] = v;
        }
    }
}

/// Constrains every endpoint of a `Gamma0` edge to `g(x)`.
pub fn build_dirichlet(mesh: &Mesh, g: &AffineMap) -> Result<DirichletSet> {
    let nodes: BTreeSet<usize> = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.label == BoundaryLabel::Gamma0)
        .flat_map(|e| e.nodes)
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptyDirichlet);
    }
    let nodes: Vec<usize> = nodes.into_iter().collect();
    let values = nodes.iter().map(|&n| g.eval(mesh.nodes()[n])).collect();
    Ok(DirichletSet { nodes, values })
}

/// Symmetric gradient of the P1 field `u` on triangle `tri` (vertex indices
/// in the same order as `geom.grad_basis`).
pub fn strain_of(geom: &ElementGeometry, u: &FieldP1, tri: &[usize; 3]) -> SymTensor2 {
    let mut grad = [[0.0; 2]; 2];
    for (i, &node) in tri.iter().enumerate() {
        let g = geom.grad_basis[i];
        let v = u.0[node];
        for a in 0..2 {
            for b in 0..2 {
                grad[a][b] += v[a] * g[b];
            }
        }
    }
    SymTensor2::sym_part(grad)
}

/// `e[u]` on every element.
pub fn strain_field(mesh: &Mesh, u: &FieldP1) -> FieldP0 {
    FieldP0(
        mesh.triangles()
            .iter()
            .zip(mesh.geometries())
            .map(|(t, g)| strain_of(g, u, t))
            .collect(),
    )
}

/// Strain of the P1 basis function of local vertex `i`, displacement component `comp`.
pub fn basis_strain(geom: &ElementGeometry, i: usize, comp: usize) -> SymTensor2 {
    let [gx, gy] = geom.grad_basis[i];
    match comp {
        0 => SymTensor2::new(gx, 0.0, 0.5 * gy),
        _ => SymTensor2::new(0.0, gy, 0.5 * gx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square, DiagonalPattern};

    fn square(n: usize) -> Mesh {
        build_unit_square(n, DiagonalPattern::Alternating).unwrap()
    }

    #[test]
    fn strain_of_simple_fields() {
        let m = square(3);
        let trans = FieldP1::interpolate(&m, |_| [0.3, -1.2]);
        let stretch = FieldP1::interpolate(&m, |x| [x[0], 0.0]);
        let rot = FieldP1::interpolate(&m, |x| [-x[1], x[0]]);
        for (k, t) in m.triangles().iter().enumerate() {
            let g = m.element_geometry(k);
            assert!(strain_of(g, &trans, t).max_abs() < 1e-14);
            assert!((strain_of(g, &stretch, t) - SymTensor2::diag(1.0, 0.0)).max_abs() < 1e-14);
            assert!(strain_of(g, &rot, t).max_abs() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_example2() {
        let m = square(40)
            .classify_boundary(|p| if p[0] == 0.0 || p[0] == 1.0 { BoundaryLabel::Gamma0 } else { BoundaryLabel::Gamma1 })
            .unwrap();
        let g = AffineMap::from_coefficients([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let ds = build_dirichlet(&m, &g).unwrap();
        assert_eq!(ds.len(), 82);
        for (n, v) in ds.iter() {
            let x = m.nodes()[n];
            assert!(x[0] == 0.0 || x[0] == 1.0);
            assert_eq!(v, [x[0], 0.0]);
        }
    }

    #[test]
    fn dirichlet_example1_includes_corners() {
        let m = square(40).classify_boundary(|p| if p[1] == 1.0 { BoundaryLabel::Gamma0 } else { BoundaryLabel::Gamma1 }).unwrap();
        let ds = build_dirichlet(&m, &AffineMap::ZERO).unwrap();
        assert_eq!(ds.len(), 41);
        let corners: Vec<_> = ds.nodes().iter().map(|&n| m.nodes()[n]).filter(|p| p[0] == 0.0 || p[0] == 1.0).collect();
        assert_eq!(corners.len(), 2);
        assert!(ds.values().iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn dirichlet_requires_gamma0() {
        assert!(matches!(build_dirichlet(&square(2), &AffineMap::ZERO), Err(Error::EmptyDirichlet)));
    }

    #[test]
    fn dof_layout_round_trip() {
        let u = FieldP1(vec![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(u.to_dofs(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(FieldP1::from_dofs(&u.to_dofs()), u);
    }
}
