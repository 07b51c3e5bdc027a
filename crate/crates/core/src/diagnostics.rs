//! Energies, norms, stress statistics and numerical checks of the
//! gradient-flow structure of the discrete scheme.

use rand::Rng;

use crate::assembly::TensorOperator;
use crate::error::Result;
use crate::mesh::{BoundaryLabel, Mesh};
use crate::space::{strain_field, BoundaryData, FieldP0, FieldP1};
use crate::stepper::EquilibriumSolver;
use crate::tensor::{c_inner, ddot, stress, Material, StepParams, SymTensor2};

/// Decomposition `total = elastic + relax - work`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub total: f64,
    /// `1/2 ||e[u] - phi||_C^2`
    pub elastic: f64,
    /// `alpha/2 ||phi||^2`
    pub relax: f64,
    /// `l(u)`
    pub work: f64,
    /// Residual of the discrete energy identity for the step that produced
    /// this state; zero for the initial state.
    pub identity_residual: f64,
}

/// `(a, b)_Psi = int a : b`.
pub fn psi_inner(mesh: &Mesh, a: &FieldP0, b: &FieldP0) -> f64 {
    mesh.geometries().iter().zip(a.iter().zip(b.iter())).map(|(g, (x, y))| g.area * ddot(x, y)).sum()
}

/// `(a, b)_C = int (C a) : b`.
pub fn c_inner_field(mesh: &Mesh, m: &Material, a: &FieldP0, b: &FieldP0) -> f64 {
    mesh.geometries().iter().zip(a.iter().zip(b.iter())).map(|(g, (x, y))| g.area * c_inner(m, x, y)).sum()
}

/// `l(u) = (f, u) + int_{Gamma1} q . u ds`, exact for P1 `u`.
pub fn external_work(mesh: &Mesh, bd: &BoundaryData, u: &FieldP1) -> f64 {
    let mut w = 0.0;
    if bd.f != [0.0, 0.0] {
        for (t, g) in mesh.triangles().iter().zip(mesh.geometries()) {
            let s: [f64; 2] = t.iter().fold([0.0, 0.0], |acc, &n| [acc[0] + u[n][0], acc[1] + u[n][1]]);
            w += g.area / 3.0 * (bd.f[0] * s[0] + bd.f[1] * s[1]);
        }
    }
    if bd.q != [0.0, 0.0] {
        for e in mesh.boundary_edges().iter().filter(|e| e.label == BoundaryLabel::Gamma1) {
            let [a, b] = e.nodes;
            let avg = [0.5 * (u[a][0] + u[b][0]), 0.5 * (u[a][1] + u[b][1])];
            w += mesh.edge_length(e) * (bd.q[0] * avg[0] + bd.q[1] * avg[1]);
        }
    }
    w
}

/// `E(u, phi) = 1/2 ||e[u] - phi||_C^2 + alpha/2 ||phi||^2 - l(u)`.
pub fn energy(mesh: &Mesh, m: &Material, u: &FieldP1, phi: &FieldP0, bd: &BoundaryData) -> EnergyReport {
    let elastic_strain = strain_field(mesh, u).sub(phi);
    let elastic = 0.5 * c_inner_field(mesh, m, &elastic_strain, &elastic_strain);
    let relax = 0.5 * m.alpha * psi_inner(mesh, phi, phi);
    let work = external_work(mesh, bd, u);
    EnergyReport { total: elastic + relax - work, elastic, relax, work, identity_residual: 0.0 }
}

/// Terms of the per-step energy identity
/// `D E + (alpha tau/2)||D phi||^2 + (tau/2)||D(e[u] - phi)||_C^2 = -eta ||D phi||^2`
/// with `D` the backward difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIdentity {
    /// `(E^k - E^{k-1}) / tau`
    pub energy_rate: f64,
    /// `(alpha tau / 2) ||D phi||^2`
    pub relax_dissipation: f64,
    /// `(tau / 2) ||D(e[u] - phi)||_C^2`
    pub elastic_dissipation: f64,
    /// `eta ||D phi||^2`
    pub viscous_dissipation: f64,
}

impl EnergyIdentity {
    pub fn residual(&self) -> f64 {
        (self.energy_rate + self.relax_dissipation + self.elastic_dissipation + self.viscous_dissipation).abs()
    }
}

/// Evaluates the energy identity between two consecutive states.
#[allow(clippy::too_many_arguments)]
pub fn energy_identity(
    mesh: &Mesh,
    m: &Material,
    tau: f64,
    u_prev: &FieldP1,
    phi_prev: &FieldP0,
    e_prev: f64,
    u_curr: &FieldP1,
    phi_curr: &FieldP0,
    e_curr: f64,
) -> EnergyIdentity {
    let d_phi = phi_curr.backward_difference(phi_prev, tau);
    let d_u = u_curr.backward_difference(u_prev, tau);
    let d_elastic = strain_field(mesh, &d_u).sub(&d_phi);
    let phi_sq = psi_inner(mesh, &d_phi, &d_phi);
    EnergyIdentity {
        energy_rate: (e_curr - e_prev) / tau,
        relax_dissipation: 0.5 * m.alpha * tau * phi_sq,
        elastic_dissipation: 0.5 * tau * c_inner_field(mesh, m, &d_elastic, &d_elastic),
        viscous_dissipation: m.eta * phi_sq,
    }
}

/// `|LHS - RHS|` of the energy identity, recomputing both energies.
#[allow(clippy::too_many_arguments)]
pub fn energy_identity_residual(
    mesh: &Mesh,
    m: &Material,
    bd: &BoundaryData,
    tau: f64,
    u_prev: &FieldP1,
    phi_prev: &FieldP0,
    u_curr: &FieldP1,
    phi_curr: &FieldP0,
) -> f64 {
    let e_prev = energy(mesh, m, u_prev, phi_prev, bd).total;
    let e_curr = energy(mesh, m, u_curr, phi_curr, bd).total;
    energy_identity(mesh, m, tau, u_prev, phi_prev, e_prev, u_curr, phi_curr, e_curr).residual()
}

/// Piecewise-constant stress `C(e[u] - phi)`.
pub fn stress_field(mesh: &Mesh, m: &Material, u: &FieldP1, phi: &FieldP0) -> FieldP0 {
    FieldP0(strain_field(mesh, u).iter().zip(phi.iter()).map(|(e, p)| stress(m, e, p)).collect())
}

/// Exact `L^inf` norm of the stress component `(i, j)`.
pub fn stress_linf(mesh: &Mesh, m: &Material, u: &FieldP1, phi: &FieldP0, component: (usize, usize)) -> f64 {
    stress_field(mesh, m, u, phi).iter().map(|s| s.get(component.0, component.1).abs()).fold(0.0, f64::max)
}

/// `L^inf` norms of `(sigma11, sigma22, sigma12)`.
pub fn stress_linf_all(mesh: &Mesh, m: &Material, u: &FieldP1, phi: &FieldP0) -> [f64; 3] {
    stress_field(mesh, m, u, phi).iter().fold([0.0; 3], |acc, s| {
        [acc[0].max(s.xx.abs()), acc[1].max(s.yy.abs()), acc[2].max(s.xy.abs())]
    })
}

/// Max over elements of `|eta (phi - phi_prev)/tau + alpha phi - sigma[u, phi]|`.
pub fn scheme_residual(mesh: &Mesh, m: &Material, s: &StepParams, u: &FieldP1, phi: &FieldP0, phi_prev: &FieldP0) -> f64 {
    let w = s.viscous_weight(m);
    strain_field(mesh, u)
        .iter()
        .zip(phi.iter().zip(phi_prev.iter()))
        .map(|(e, (p, q))| (w * (*p - *q) + m.alpha * *p - stress(m, e, p)).max_abs())
        .fold(0.0, f64::max)
}

/// Max norm over free DOFs of the weak residual
/// `(sigma[u, phi], e[v]) - l(v)` of the momentum equation.
pub fn momentum_residual(solver: &EquilibriumSolver, u: &FieldP1, phi: &FieldP0) -> f64 {
    let p = solver.problem();
    let load = crate::assembly::assemble_rhs(&p.mesh, &p.material, TensorOperator::Plain, phi, &p.boundary);
    crate::assembly::free_residual(solver.full_matrix(), &u.to_dofs(), &load, solver.system().matrix().constrained())
        .iter()
        .fold(0.0, |a, r| a.max(r.abs()))
}

/// Random P0 direction with `||psi||_Psi = 1`.
pub fn random_direction<R: Rng + ?Sized>(mesh: &Mesh, rng: &mut R) -> FieldP0 {
    let raw = FieldP0(
        (0..mesh.num_elements())
            .map(|_| SymTensor2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    );
    let norm = psi_inner(mesh, &raw, &raw).sqrt();
    FieldP0(raw.iter().map(|t| (1.0 / norm) * *t).collect())
}

/// Outcome of one directional check of the discrete gradient flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientFlowCheck {
    /// `(eta D phi, psi)`
    pub flux: f64,
    /// `[E*(phi + eps psi) - E*(phi - eps psi)] / (2 eps)`
    pub central_difference: f64,
    /// `(alpha phi - sigma[u(phi), phi], psi)` with `u(phi)` the constrained minimizer.
    pub reduced_derivative: f64,
}

impl GradientFlowCheck {
    /// `|flux + cd| / max(1, |cd|)`
    pub fn relative_error(&self) -> f64 {
        (self.flux + self.central_difference).abs() / self.central_difference.abs().max(1.0)
    }

    /// `|reduced - cd| / max(1, |cd|)`
    pub fn reduced_relative_error(&self) -> f64 {
        (self.reduced_derivative - self.central_difference).abs() / self.central_difference.abs().max(1.0)
    }
}

/// Reduced energy `E*(phi) = min_{v in V_h(g)} E(v, phi)`, by an actual solve.
pub fn reduced_energy(solver: &EquilibriumSolver, phi: &FieldP0) -> Result<(f64, FieldP1)> {
    reduced_energy_from(solver, phi, &solver.problem().lifting())
}

fn reduced_energy_from(solver: &EquilibriumSolver, phi: &FieldP0, guess: &FieldP1) -> Result<(f64, FieldP1)> {
    let (u, _) = solver.solve_from(phi, guess)?;
    let p = solver.problem();
    Ok((energy(&p.mesh, &p.material, &u, phi, &p.boundary).total, u))
}

/// Compares `(eta D phi, psi)` against a central difference of the reduced
/// energy along `psi`, and the closed-form derivative against the same difference.
pub fn gradient_flow_check(
    solver: &EquilibriumSolver,
    tau: f64,
    phi: &FieldP0,
    phi_prev: &FieldP0,
    psi: &FieldP0,
    eps: f64,
) -> Result<GradientFlowCheck> {
    let p = solver.problem();
    let (mesh, m) = (&p.mesh, &p.material);
    let (u_bar, _) = solver.solve(phi)?;

    // The perturbed minimizers are within O(eps) of u_bar, so start CG there.
    let (e_plus, _) = reduced_energy_from(solver, &phi.axpy(eps, psi), &u_bar)?;
    let (e_minus, _) = reduced_energy_from(solver, &phi.axpy(-eps, psi), &u_bar)?;
    let central_difference = (e_plus - e_minus) / (2.0 * eps);

    let flux = m.eta * psi_inner(mesh, &phi.backward_difference(phi_prev, tau), psi);

    let sigma = stress_field(mesh, m, &u_bar, phi);
    let driving = FieldP0(phi.iter().zip(sigma.iter()).map(|(p, s)| m.alpha * *p - *s).collect());
    let reduced_derivative = psi_inner(mesh, &driving, psi);

    Ok(GradientFlowCheck { flux, central_difference, reduced_derivative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square, DiagonalPattern};

    #[test]
    fn zero_state_has_zero_energy() {
        let mesh = build_unit_square(3, DiagonalPattern::Alternating).unwrap();
        let m = Material::new(1.0, 1.0, 1.0, 1.0);
        let bd = BoundaryData { f: [0.0, -1.0], q: [0.5, 0.5], ..Default::default() };
        let e = energy(&mesh, &m, &FieldP1::zeros(16), &FieldP0::zeros(18), &bd);
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn uniform_stretch_energy() {
        let mesh = build_unit_square(4, DiagonalPattern::Alternating).unwrap();
        let m = Material::new(1.0, 1.0, 1.0, 0.0);
        let u = FieldP1::interpolate(&mesh, |x| [x[0], 0.0]);
        let e = energy(&mesh, &m, &u, &FieldP0::zeros(mesh.num_elements()), &BoundaryData::default());
        assert!((e.total - 1.5).abs() < 1e-14);
        assert!((e.elastic + e.relax - e.work - e.total).abs() < 1e-15);
    }

    #[test]
    fn work_is_exact_for_linear_fields() {
        // f = (0, -1), u = (0, y): (f, u) = -int y = -1/2.
        // q = (1, 0) on the whole boundary, u = (x, 0): int_dOmega x ds = 0 + 1 + 1/2 + 1/2 = 2.
        let mesh = build_unit_square(3, DiagonalPattern::Right).unwrap();
        let bd = BoundaryData { f: [0.0, -1.0], ..Default::default() };
        let u = FieldP1::interpolate(&mesh, |x| [0.0, x[1]]);
        assert!((external_work(&mesh, &bd, &u) + 0.5).abs() < 1e-15);
        let bd = BoundaryData { q: [1.0, 0.0], ..Default::default() };
        let u = FieldP1::interpolate(&mesh, |x| [x[0], 0.0]);
        assert!((external_work(&mesh, &bd, &u) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn stress_norms() {
        let mesh = build_unit_square(2, DiagonalPattern::Left).unwrap();
        let m = Material::new(1.0, 1.0, 1.0, 0.0);
        let zero_u = FieldP1::zeros(mesh.num_nodes());
        let zero_phi = FieldP0::zeros(mesh.num_elements());
        assert_eq!(stress_linf(&mesh, &m, &zero_u, &zero_phi, (0, 0)), 0.0);
        let u = FieldP1::interpolate(&mesh, |x| [x[0] + 0.2 * x[1], -0.1 * x[1]]);
        let phi = strain_field(&mesh, &u);
        assert!(stress_linf_all(&mesh, &m, &u, &phi).iter().all(|&v| v < 1e-15));
        assert!((stress_linf(&mesh, &m, &u, &zero_phi, (0, 0)) - 2.9).abs() < 1e-14);
    }

    #[test]
    fn random_direction_is_normalized() {
        use rand::SeedableRng;
        let mesh = build_unit_square(3, DiagonalPattern::Alternating).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let psi = random_direction(&mesh, &mut rng);
        assert!((psi_inner(&mesh, &psi, &psi) - 1.0).abs() < 1e-14);
    }
}
