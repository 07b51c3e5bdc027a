//! Linear solvers for the reduced SPD systems.

use crate::assembly::SparseSPD;
use crate::error::{Error, Result};

/// Largest system accepted by [`solve_dense_spd`].
pub const DENSE_DOF_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

impl Preconditioner {
    pub fn name(self) -> &'static str {
        match self {
            Preconditioner::None => "none",
            Preconditioner::Jacobi => "jacobi",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Preconditioner::None),
            "jacobi" => Some(Preconditioner::Jacobi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Stop once `||b - A x|| <= tolerance * ||b||`.
    pub tolerance: f64,
    /// `None` means `20 * dim`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tolerance: 1e-12, max_iterations: None, preconditioner: Preconditioner::Jacobi }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!("solver tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidParameter("solver max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iterations.unwrap_or(20 * dim.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit.
    pub relative_residual: f64,
    /// `||r_k||_2` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    /// Quadratic functional `x^T A x / 2 - b^T x` at every iterate; CG
    /// minimizes it over growing Krylov spaces, so it never increases.
    pub energy_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn solve_spd(a: &SparseSPD, b: &[f64], settings: &SolverSettings) -> Result<(Vec<f64>, ConvergenceReport)> {
    let mut x = vec![0.0; a.dim()];
    let report = solve_spd_from(a, b, &mut x, settings)?;
    Ok((x, report))
}

/// Preconditioned conjugate gradients starting from `x`, which holds the
/// solution on success. On failure the best iterate is returned in the error.
pub fn solve_spd_from(a: &SparseSPD, b: &[f64], x: &mut [f64], settings: &SolverSettings) -> Result<ConvergenceReport> {
    settings.validate()?;
    let n = a.dim();
    assert_eq!(b.len(), n, "right-hand side length mismatch");
    assert_eq!(x.len(), n, "initial guess length mismatch");

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(ConvergenceReport {
            iterations: 0,
            relative_residual: 0.0,
            residual_history: vec![0.0],
            energy_history: vec![0.0],
        });
    }

    let inv_diag: Vec<f64> = match settings.preconditioner {
        Preconditioner::Jacobi => a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect(),
        Preconditioner::None => vec![1.0; n],
    };

    let mut ap = a.mul_vec(x);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let functional = |x: &[f64], r: &[f64]| -0.5 * x.iter().zip(b).zip(r).map(|((x, b), r)| x * (b + r)).sum::<f64>();

    let target = settings.tolerance * b_norm;
    let cap = settings.iteration_cap(n);
    let mut r_norm = dot(&r, &r).sqrt();
    let mut report = ConvergenceReport {
        iterations: 0,
        relative_residual: r_norm / b_norm,
        residual_history: vec![r_norm],
        energy_history: vec![functional(x, &r)],
    };
    if r_norm <= target {
        return Ok(report);
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    while report.iterations < cap {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Breakdown: the matrix is not positive definite along p.
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        report.iterations += 1;
        r_norm = dot(&r, &r).sqrt();
        report.residual_history.push(r_norm);
        report.energy_history.push(functional(x, &r));
        report.relative_residual = r_norm / b_norm;
        if r_norm <= target {
            return Ok(report);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { report, best: x.to_vec() })
}

/// Dense Cholesky solve for small systems (at most [`DENSE_DOF_LIMIT`] DOFs).
pub fn solve_dense_spd(a: &SparseSPD, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if n > DENSE_DOF_LIMIT {
        return Err(Error::DenseSolve(format!("{n} DOFs exceeds the dense limit of {DENSE_DOF_LIMIT}")));
    }
    let mut l = a.to_dense();
    for j in 0..n {
        let mut d = l[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return Err(Error::DenseSolve(format!("matrix is not positive definite (pivot {j} = {d:e})")));
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            let mut s = l[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k][i] * y[k];
        }
        y[i] /= l[i][i];
    }
    Ok(y)
}
