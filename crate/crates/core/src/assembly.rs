//! Global stiffness matrices and load vectors.
//!
//! Every integrand of the scheme is piecewise constant on the mesh (P1
//! gradients, P0 tensors, constant body force against the vertex rule), so
//! the single-point rules used here are exact. DOFs are interleaved:
//! node `n` owns `2n` (x) and `2n + 1` (y).

use crate::mesh::{BoundaryLabel, ElementGeometry, Mesh};
use crate::space::{basis_strain, BoundaryData, DirichletSet, FieldP0};
use crate::tensor::{apply_c, apply_d_inv, apply_effective, ddot, Material, StepParams, SymTensor2};

/// Which fourth-order tensor a system is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TensorOperator {
    /// `C`: equilibrium solves for a given `phi`.
    Plain,
    /// `C (I - D^{-1} C)`: the per-step displacement system.
    Effective(StepParams),
}

impl TensorOperator {
    pub fn apply(&self, m: &Material, x: &SymTensor2) -> SymTensor2 {
        match self {
            TensorOperator::Plain => apply_c(m, x),
            TensorOperator::Effective(s) => apply_effective(m, s, x),
        }
    }

    /// Tensor load generated by a P0 field: `C phi` (plain) or
    /// `(eta/tau) C D^{-1} phi` (effective).
    pub fn load_tensor(&self, m: &Material, phi: &SymTensor2) -> SymTensor2 {
        match self {
            TensorOperator::Plain => apply_c(m, phi),
            TensorOperator::Effective(s) => s.viscous_weight(m) * apply_c(m, &apply_d_inv(m, s, phi)),
        }
    }
}

/// Square sparse matrix in compressed-row layout, symmetric by construction,
/// with a per-DOF record of Dirichlet-constrained rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSPD {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    constrained: Vec<bool>,
}

impl SparseSPD {
    /// Builds from per-row column lists (sorted, deduplicated) with zero values.
    fn with_pattern(rows: Vec<Vec<usize>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows {
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SparseSPD { dim, row_ptr, col_idx, values: vec![0.0; nnz], constrained: vec![false; dim] }
    }

    /// From a dense row-major matrix, dropping exact zeros off the diagonal.
    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let rows = a
            .iter()
            .enumerate()
            .map(|(i, r)| (0..r.len()).filter(|&j| i == j || r[j] != 0.0).collect())
            .collect();
        let mut m = SparseSPD::with_pattern(rows);
        for i in 0..m.dim {
            for p in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.values[p] = a[i][m.col_idx[p]];
            }
        }
        m
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SparseSPD::with_pattern((0..dim).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|p| p + self.row_ptr[i])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j).expect("entry outside sparsity pattern");
        self.values[p] += v;
    }

    /// Iterates `(col, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// `max |A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

/// 6x6 element matrix `area * (T e[N_l]) : e[N_m]`, local DOF `l = 2 i + comp`.
pub fn element_matrix(geom: &ElementGeometry, op: impl Fn(&SymTensor2) -> SymTensor2) -> [[f64; 6]; 6] {
    let strains: [SymTensor2; 6] = std::array::from_fn(|l| basis_strain(geom, l / 2, l % 2));
    let images: [SymTensor2; 6] = std::array::from_fn(|l| op(&strains[l]));
    let mut k = [[0.0; 6]; 6];
    for l in 0..6 {
        for m in 0..6 {
            k[l][m] = geom.area * ddot(&images[l], &strains[m]);
        }
    }
    k
}

fn stiffness_pattern(mesh: &Mesh) -> SparseSPD {
    let mut neighbours: Vec<Vec<usize>> = (0..mesh.num_nodes()).map(|i| vec![i]).collect();
    for t in mesh.triangles() {
        for &a in t {
            neighbours[a].extend_from_slice(t);
        }
    }
    let mut rows = Vec::with_capacity(mesh.num_dofs());
    for mut nb in neighbours {
        nb.sort_unstable();
        nb.dedup();
        let cols: Vec<usize> = nb.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect();
        rows.push(cols.clone());
        rows.push(cols);
    }
    SparseSPD::with_pattern(rows)
}

/// Global stiffness for `(T e[u], e[v])` with `T` the chosen operator.
pub fn assemble_stiffness(mesh: &Mesh, m: &Material, op: TensorOperator) -> SparseSPD {
    let mut a = stiffness_pattern(mesh);
    for (t, geom) in mesh.triangles().iter().zip(mesh.geometries()) {
        let k = element_matrix(geom, |x| op.apply(m, x));
        for l in 0..6 {
            let gl = 2 * t[l / 2] + l % 2;
            for r in 0..6 {
                let gr = 2 * t[r / 2] + r % 2;
                a.add(gl, gr, k[l][r]);
            }
        }
    }
    a
}

/// Adds `(W_K, e[v])` for a per-element tensor `W` to `rhs`.
pub fn add_tensor_load(mesh: &Mesh, tensors: impl IntoIterator<Item = SymTensor2>, rhs: &mut [f64]) {
    for ((t, geom), w) in mesh.triangles().iter().zip(mesh.geometries()).zip(tensors) {
        for (i, &node) in t.iter().enumerate() {
            for comp in 0..2 {
                rhs[2 * node + comp] += geom.area * ddot(&w, &basis_strain(geom, i, comp));
            }
        }
    }
}

/// Adds the external load `l(v) = (f, v) + int_{Gamma1} q . v ds` to `rhs`.
pub fn add_external_load(mesh: &Mesh, bd: &BoundaryData, rhs: &mut [f64]) {
    if bd.f != [0.0, 0.0] {
        for (t, geom) in mesh.triangles().iter().zip(mesh.geometries()) {
            let w = geom.area / 3.0;
            for &node in t {
                rhs[2 * node] += w * bd.f[0];
                rhs[2 * node + 1] += w * bd.f[1];
            }
        }
    }
    if bd.q != [0.0, 0.0] {
        for e in mesh.boundary_edges().iter().filter(|e| e.label == BoundaryLabel::Gamma1) {
            let w = 0.5 * mesh.edge_length(e);
            for &node in &e.nodes {
                rhs[2 * node] += w * bd.q[0];
                rhs[2 * node + 1] += w * bd.q[1];
            }
        }
    }
}

/// Right-hand side of the displacement system: tensor load from `phi`
/// (see [`TensorOperator::load_tensor`]) plus the external load.
pub fn assemble_rhs(mesh: &Mesh, m: &Material, op: TensorOperator, phi: &FieldP0, bd: &BoundaryData) -> Vec<f64> {
    let mut rhs = vec![0.0; mesh.num_dofs()];
    add_tensor_load(mesh, phi.iter().map(|p| op.load_tensor(m, p)), &mut rhs);
    add_external_load(mesh, bd, &mut rhs);
    rhs
}

/// A stiffness matrix after symmetric Dirichlet elimination, reusable for
/// any number of right-hand sides.
///
/// Constrained rows and columns are zeroed except for the diagonal, which
/// keeps its assembled value `d`; the constrained equation reads `d x = d g`.
/// The columns removed from free rows are folded into `lift`.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    matrix: SparseSPD,
    lift: Vec<f64>,
}

impl ConstrainedSystem {
    pub fn new(full: &SparseSPD, ds: &DirichletSet) -> Self {
        let prescribed = ds.dof_values(full.dim() / 2);
        let mut matrix = full.clone();
        let mut lift = vec![0.0; full.dim()];
        for i in 0..full.dim() {
            let range = matrix.row_ptr[i]..matrix.row_ptr[i + 1];
            if let Some(g) = prescribed[i] {
                matrix.constrained[i] = true;
                for p in range {
                    if matrix.col_idx[p] == i {
                        lift[i] = matrix.values[p] * g;
                    } else {
                        matrix.values[p] = 0.0;
                    }
                }
            } else {
                for p in range {
                    if let Some(g) = prescribed[matrix.col_idx[p]] {
                        lift[i] -= matrix.values[p] * g;
                        matrix.values[p] = 0.0;
                    }
                }
            }
        }
        ConstrainedSystem { matrix, lift }
    }

    pub fn matrix(&self) -> &SparseSPD {
        &self.matrix
    }

    /// Reduced right-hand side for an assembled load vector.
    pub fn rhs(&self, load: &[f64]) -> Vec<f64> {
        load.iter()
            .zip(&self.lift)
            .zip(&self.matrix.constrained)
            .map(|((&b, &l), &c)| if c { l } else { b + l })
            .collect()
    }
}

/// One-shot symmetric elimination of `ds` from `(a, rhs)`.
pub fn apply_dirichlet(a: &SparseSPD, rhs: &[f64], ds: &DirichletSet) -> (SparseSPD, Vec<f64>) {
    let sys = ConstrainedSystem::new(a, ds);
    let b = sys.rhs(rhs);
    (sys.matrix, b)
}

/// `A u - b` restricted to free DOFs (constrained entries set to zero).
pub fn free_residual(a: &SparseSPD, u: &[f64], b: &[f64], constrained: &[bool]) -> Vec<f64> {
    a.mul_vec(u)
        .iter()
        .zip(b)
        .zip(constrained)
        .map(|((au, bi), &c)| if c { 0.0 } else { au - bi })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square, DiagonalPattern};
    use crate::space::{build_dirichlet, AffineMap, FieldP1};

    fn unit() -> Material {
        Material::new(1.0, 1.0, 1.0, 0.0)
    }

    /// Plain-C element matrix of the reference triangle, integrated by hand:
    /// with B the 3x6 strain-displacement matrix (engineering shear) and
    /// E = [[3,1,0],[1,3,0],[0,0,1]] for lambda = mu = 1, K = area * B^T E B.
    #[test]
    fn reference_element_matrix() {
        let g = ElementGeometry::from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let k = element_matrix(&g, |x| apply_c(&unit(), x));
        #[rustfmt::skip]
        let expected = [
            [ 2.0,  1.0, -1.5, -0.5, -0.5, -0.5],
            [ 1.0,  2.0, -0.5, -0.5, -0.5, -1.5],
            [-1.5, -0.5,  1.5,  0.0,  0.0,  0.5],
            [-0.5, -0.5,  0.0,  0.5,  0.5,  0.0],
            [-0.5, -0.5,  0.0,  0.5,  0.5,  0.0],
            [-0.5, -1.5,  0.5,  0.0,  0.0,  1.5],
        ];
        for l in 0..6 {
            for m in 0..6 {
                assert!((k[l][m] - expected[l][m]).abs() < 1e-14, "({l},{m}): {} vs {}", k[l][m], expected[l][m]);
            }
        }
    }

    #[test]
    fn symmetric_and_translation_kernel() {
        let mesh = build_unit_square(4, DiagonalPattern::Alternating).unwrap();
        let m = Material::new(0.7, 1.3, 2.0, 0.5);
        let s = StepParams::new(&m, 0.05).unwrap();
        for op in [TensorOperator::Plain, TensorOperator::Effective(s)] {
            let a = assemble_stiffness(&mesh, &m, op);
            assert_eq!(a.max_asymmetry(), 0.0);
            for t in [[1.0, 0.0], [0.0, 1.0], [0.3, -2.0]] {
                let u = FieldP1(vec![t; mesh.num_nodes()]).to_dofs();
                let r = a.mul_vec(&u);
                assert!(r.iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn zero_load() {
        let mesh = build_unit_square(2, DiagonalPattern::Right).unwrap();
        let b = assemble_rhs(&mesh, &unit(), TensorOperator::Plain, &FieldP0::zeros(8), &BoundaryData::default());
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn body_force_vertex_rule() {
        let mesh = crate::mesh::Mesh::from_text(
            "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary 3\n0 1 1\n1 2 1\n2 0 1\n",
            "tri",
        )
        .unwrap();
        let bd = BoundaryData { f: [0.0, -1.0], ..Default::default() };
        let b = assemble_rhs(&mesh, &unit(), TensorOperator::Plain, &FieldP0::zeros(1), &bd);
        for n in 0..3 {
            assert!(b[2 * n].abs() < 1e-16);
            assert!((b[2 * n + 1] + 1.0 / 6.0).abs() < 1e-16);
        }
    }

    #[test]
    fn traction_edge_rule() {
        let mesh = crate::mesh::Mesh::from_text(
            "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary 3\n0 1 1\n1 2 0\n2 0 0\n",
            "tri",
        )
        .unwrap();
        let bd = BoundaryData { q: [1.0, 0.0], ..Default::default() };
        let b = assemble_rhs(&mesh, &unit(), TensorOperator::Plain, &FieldP0::zeros(1), &bd);
        assert_eq!(b, vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn elimination_keeps_symmetry() {
        let mesh = build_unit_square(3, DiagonalPattern::Alternating)
            .unwrap()
            .classify_boundary(|p| if p[0] == 0.0 { BoundaryLabel::Gamma0 } else { BoundaryLabel::Gamma1 })
            .unwrap();
        let a = assemble_stiffness(&mesh, &unit(), TensorOperator::Plain);
        let ds = build_dirichlet(&mesh, &AffineMap::from_coefficients([0.0, 0.0, 0.0, 0.0, 0.5, 0.0])).unwrap();
        let (r, b) = apply_dirichlet(&a, &vec![0.0; a.dim()], &ds);
        assert_eq!(r.max_asymmetry(), 0.0);
        assert!(r.diagonal().iter().all(|&d| d > 0.0));
        for (i, &c) in r.constrained().iter().enumerate() {
            if c {
                assert!(r.row(i).all(|(j, v)| j == i || v == 0.0));
                let expected = if i % 2 == 0 { 0.5 } else { 0.0 };
                assert!((b[i] / r.get(i, i) - expected).abs() < 1e-15);
            }
        }
    }
}
