//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use zener_fem::space::build_dirichlet;
use zener_fem::{BoundaryData, Material, Mesh, SymTensor2};

/// Matrix of `C` acting on Voigt vectors `(xx, yy, xy)` with tensor shear.
pub fn c_voigt(m: &Material) -> Matrix3<f64> {
    let (l, mu) = (m.lambda, m.mu);
    Matrix3::new(l + 2.0 * mu, l, 0.0, l, l + 2.0 * mu, 0.0, 0.0, 0.0, 2.0 * mu)
}

/// `X : Y = x^T W y`.
pub fn weight() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0))
}

pub fn voigt(x: &SymTensor2) -> Vector3<f64> {
    Vector3::new(x.xx, x.yy, x.xy)
}

/// Homogeneous strain history: `phi^k` from
/// `(eta/tau + alpha) phi^k + C phi^k = C e + (eta/tau) phi^{k-1}`, solved by LU.
pub fn relaxation_recursion(m: &Material, tau: f64, e: Vector3<f64>, steps: usize) -> Vec<Vector3<f64>> {
    let c = c_voigt(m);
    let w = m.eta / tau;
    let lu = (Matrix3::identity() * (w + m.alpha) + c).lu();
    let mut out = vec![Vector3::zeros()];
    for k in 1..=steps {
        let rhs = c * e + w * out[k - 1];
        out.push(lu.solve(&rhs).expect("D is invertible"));
    }
    out
}

fn barycentric_gradients(p: [[f64; 2]; 3]) -> (f64, [[f64; 2]; 3]) {
    let m = nalgebra::Matrix3::new(1.0, p[0][0], p[0][1], 1.0, p[1][0], p[1][1], 1.0, p[2][0], p[2][1]);
    let inv = m.try_inverse().expect("non-degenerate triangle");
    // Row r of inv (r = 1, 2) holds d(lambda_i)/dx_r for i = 0..3.
    let grads = [[inv[(1, 0)], inv[(2, 0)]], [inv[(1, 1)], inv[(2, 1)]], [inv[(1, 2)], inv[(2, 2)]]];
    (0.5 * m.determinant().abs(), grads)
}

/// 3 x 6 strain matrix of one triangle, local DOF `2 i + comp`.
fn strain_matrix(g: &[[f64; 2]; 3]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(3, 6);
    for i in 0..3 {
        let [gx, gy] = g[i];
        b[(0, 2 * i)] = gx;
        b[(2, 2 * i)] = 0.5 * gy;
        b[(1, 2 * i + 1)] = gy;
        b[(2, 2 * i + 1)] = 0.5 * gx;
    }
    b
}

/// One backward Euler step of the coupled system in `(u, phi)`, assembled
/// densely and solved by LU. Constrained DOFs take `g`; body force `f` by
/// the exact vertex rule; traction is not supported (`q` must be zero).
/// Returns nodal DOFs (interleaved) and per-element Voigt `phi`.
pub fn monolithic_step(mesh: &Mesh, m: &Material, tau: f64, bd: &BoundaryData, phi_prev: &[Vector3<f64>]) -> (Vec<f64>, Vec<Vector3<f64>>) {
    assert_eq!(bd.q, [0.0, 0.0]);
    let nu = 2 * mesh.num_nodes();
    let ne = mesh.num_elements();
    let dim = nu + 3 * ne;
    let c = c_voigt(m);
    let wc = weight() * c;
    let w = m.eta / tau;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    let ds = build_dirichlet(mesh, &bd.g).unwrap();
    let prescribed = ds.dof_values(mesh.num_nodes());

    for (k, tri) in mesh.triangles().iter().enumerate() {
        let p = [mesh.nodes()[tri[0]], mesh.nodes()[tri[1]], mesh.nodes()[tri[2]]];
        let (area, grads) = barycentric_gradients(p);
        let b = strain_matrix(&grads);
        let dofs: Vec<usize> = tri.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect();
        let wc_dyn = DMatrix::from_fn(3, 3, |i, j| wc[(i, j)]);
        let c_dyn = DMatrix::from_fn(3, 3, |i, j| c[(i, j)]);
        // Momentum rows: sum_K area B^T W C (B u - phi_K) = l.
        let kuu = area * b.transpose() * &wc_dyn * &b;
        let kup = -area * b.transpose() * &wc_dyn;
        for (li, &gi) in dofs.iter().enumerate() {
            for (lj, &gj) in dofs.iter().enumerate() {
                a[(gi, gj)] += kuu[(li, lj)];
            }
            for r in 0..3 {
                a[(gi, nu + 3 * k + r)] += kup[(li, r)];
            }
        }
        for &n in tri {
            rhs[2 * n] += area / 3.0 * bd.f[0];
            rhs[2 * n + 1] += area / 3.0 * bd.f[1];
        }
        // Relaxation rows: (w + alpha) phi_K - C(B u - phi_K) = w phi_prev_K.
        let cb = &c_dyn * &b;
        for r in 0..3 {
            let row = nu + 3 * k + r;
            for (lj, &gj) in dofs.iter().enumerate() {
                a[(row, gj)] -= cb[(r, lj)];
            }
            for s in 0..3 {
                a[(row, nu + 3 * k + s)] += c[(r, s)] + if r == s { w + m.alpha } else { 0.0 };
            }
            rhs[row] = w * phi_prev[k][r];
        }
    }
    for (i, g) in prescribed.iter().enumerate() {
        if let Some(g) = g {
            a.row_mut(i).fill(0.0);
            a[(i, i)] = 1.0;
            rhs[i] = *g;
        }
    }
    let z = a.lu().solve(&rhs).expect("coupled system is nonsingular");
    let u = z.rows(0, nu).iter().copied().collect();
    let phi = (0..ne).map(|k| Vector3::new(z[nu + 3 * k], z[nu + 3 * k + 1], z[nu + 3 * k + 2])).collect();
    (u, phi)
}
