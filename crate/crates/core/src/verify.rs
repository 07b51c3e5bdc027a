//! Run-time verification of the energy structure: monotone energy, the
//! per-step energy identity, the element-wise relaxation residual and
//! directional gradient-flow checks at a few sampled steps.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{gradient_flow_check, random_direction, GradientFlowCheck};
use crate::error::Result;
use crate::stepper::{run_with, EquilibriumSolver, RunConfig, RunResult};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Allowed increase `E^k - E^{k-1}` relative to `max(1, |E^{k-1}|)`.
    pub monotone_slack: f64,
    /// Allowed identity residual relative to `max(1, |E^k|)`.
    pub identity_tolerance: f64,
    /// Allowed element-wise residual of the relaxation equation.
    pub scheme_tolerance: f64,
    /// Allowed relative error of each gradient-flow check.
    pub gradient_tolerance: f64,
    pub directions: usize,
    /// Number of steps at which gradient-flow checks run.
    pub sampled_steps: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            monotone_slack: 1e-10,
            identity_tolerance: 1e-8,
            scheme_tolerance: 1e-12,
            gradient_tolerance: 1e-4,
            directions: 10,
            sampled_steps: 3,
            eps: 1e-5,
            seed: 20240101,
        }
    }
}

impl VerifyOptions {
    /// Steps `1`, `N/2` and `N` (deduplicated, truncated to `sampled_steps`).
    pub fn sample_steps(&self, n_steps: usize) -> Vec<usize> {
        if n_steps == 0 || self.sampled_steps == 0 {
            return Vec::new();
        }
        let mut ks: Vec<usize> = match self.sampled_steps {
            1 => vec![n_steps],
            s => (0..s).map(|i| 1 + i * (n_steps - 1) / (s - 1)).collect(),
        };
        ks.dedup();
        ks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub k: usize,
    pub check: GradientFlowCheck,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    /// Steps where the energy rose beyond the slack: `(k, E^k - E^{k-1})`.
    pub monotone_violations: Vec<(usize, f64)>,
    /// Largest `identity_residual / max(1, |E^k|)`.
    pub max_identity_ratio: f64,
    pub max_scheme_residual: f64,
    pub gradient_samples: Vec<GradientSample>,
    pub max_gradient_error: f64,
    pub max_reduced_error: f64,
    /// Wall time spent in the gradient-flow checks.
    pub check_time: Duration,
}

impl VerificationReport {
    pub fn monotone_ok(&self) -> bool {
        self.monotone_violations.is_empty()
    }

    pub fn passed(&self, opts: &VerifyOptions) -> bool {
        self.monotone_ok()
            && self.max_identity_ratio <= opts.identity_tolerance
            && self.max_scheme_residual <= opts.scheme_tolerance
            && self.max_gradient_error <= opts.gradient_tolerance
            && self.max_reduced_error <= opts.gradient_tolerance
    }

    /// Human-readable failure reasons; empty when everything passed.
    pub fn failures(&self, opts: &VerifyOptions) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(&(k, inc)) = self.monotone_violations.first() {
            out.push(format!(
                "energy increased at {} step(s), first at k = {k} by {inc:e}",
                self.monotone_violations.len()
            ));
        }
        if self.max_identity_ratio > opts.identity_tolerance {
            out.push(format!(
                "energy identity residual {:e} exceeds {:e}",
                self.max_identity_ratio, opts.identity_tolerance
            ));
        }
        if self.max_scheme_residual > opts.scheme_tolerance {
            out.push(format!(
                "relaxation residual {:e} exceeds {:e}",
                self.max_scheme_residual, opts.scheme_tolerance
            ));
        }
        if self.max_gradient_error > opts.gradient_tolerance {
            out.push(format!(
                "gradient-flow error {:e} exceeds {:e}",
                self.max_gradient_error, opts.gradient_tolerance
            ));
        }
        if self.max_reduced_error > opts.gradient_tolerance {
            out.push(format!(
                "reduced-energy derivative error {:e} exceeds {:e}",
                self.max_reduced_error, opts.gradient_tolerance
            ));
        }
        out
    }
}

/// Checks monotonicity, identity and relaxation residuals on recorded data.
pub fn check_records(result: &RunResult, opts: &VerifyOptions, report: &mut VerificationReport) {
    for w in result.records.windows(2) {
        let (prev, curr) = (&w[0], &w[1]);
        let increase = curr.energy.total - prev.energy.total;
        if increase > opts.monotone_slack * prev.energy.total.abs().max(1.0) {
            report.monotone_violations.push((curr.k, increase));
        }
        let ratio = curr.energy.identity_residual / curr.energy.total.abs().max(1.0);
        report.max_identity_ratio = report.max_identity_ratio.max(ratio);
        report.max_scheme_residual = report.max_scheme_residual.max(curr.scheme_residual);
    }
}

/// Runs `cfg` and verifies the discrete energy structure along the way.
pub fn run_verified(cfg: &RunConfig, opts: &VerifyOptions) -> Result<(RunResult, VerificationReport)> {
    let samples = opts.sample_steps(cfg.num_steps());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut equilibrium: Option<EquilibriumSolver> = None;
    let mut report = VerificationReport::default();

    let result = run_with(cfg, |stepper, prev, curr| {
        if !samples.contains(&curr.k) {
            return Ok(());
        }
        let start = Instant::now();
        let solver = equilibrium.get_or_insert_with(|| EquilibriumSolver::new(stepper.problem().clone(), *stepper.settings()));
        for _ in 0..opts.directions {
            let psi = random_direction(&stepper.problem().mesh, &mut rng);
            let check = gradient_flow_check(solver, stepper.step_params().tau, &curr.phi, &prev.phi, &psi, opts.eps)?;
            report.max_gradient_error = report.max_gradient_error.max(check.relative_error());
            report.max_reduced_error = report.max_reduced_error.max(check.reduced_relative_error());
            report.gradient_samples.push(GradientSample { k: curr.k, check });
        }
        report.check_time += start.elapsed();
        Ok(())
    })?;
    check_records(&result, opts, &mut report);
    Ok((result, report))
}
