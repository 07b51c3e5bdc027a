//! Time stepping: the initial equilibrium solve, the two-phase step
//! (displacement solve with the effective tensor, then the explicit
//! per-element relaxation update) and the whole-run driver.

use std::path::PathBuf;

use crate::assembly::{assemble_rhs, assemble_stiffness, ConstrainedSystem, SparseSPD, TensorOperator};
use crate::diagnostics::{energy, energy_identity, scheme_residual, stress_linf_all, EnergyReport};
use crate::error::{Error, Result};
use crate::mesh::{build_unit_square, load_mesh, BoundaryLabel, DiagonalPattern, Mesh, Point};
use crate::solver::{solve_spd_from, ConvergenceReport, SolverSettings};
use crate::space::{build_dirichlet, strain_field, BoundaryData, DirichletSet, FieldP0, FieldP1};
use crate::tensor::{relax_update, validate_material, Material, StepParams};

/// Which sides of the unit square carry the displacement condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma0Region {
    Top,
    Bottom,
    Left,
    Right,
    LeftRight,
    TopBottom,
    All,
    /// Keep the labels stored in an imported mesh file.
    FromMesh,
}

impl Gamma0Region {
    pub const ALL: [Gamma0Region; 8] = [
        Gamma0Region::Top,
        Gamma0Region::Bottom,
        Gamma0Region::Left,
        Gamma0Region::Right,
        Gamma0Region::LeftRight,
        Gamma0Region::TopBottom,
        Gamma0Region::All,
        Gamma0Region::FromMesh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gamma0Region::Top => "top",
            Gamma0Region::Bottom => "bottom",
            Gamma0Region::Left => "left",
            Gamma0Region::Right => "right",
            Gamma0Region::LeftRight => "left_right",
            Gamma0Region::TopBottom => "top_bottom",
            Gamma0Region::All => "all",
            Gamma0Region::FromMesh => "mesh",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }

    /// Label of a boundary edge with midpoint `x` on the unit square.
    pub fn label(self, x: Point) -> BoundaryLabel {
        const TOL: f64 = 1e-12;
        let (left, right) = (x[0].abs() < TOL, (x[0] - 1.0).abs() < TOL);
        let (bottom, top) = (x[1].abs() < TOL, (x[1] - 1.0).abs() < TOL);
        let on = match self {
            Gamma0Region::Top => top,
            Gamma0Region::Bottom => bottom,
            Gamma0Region::Left => left,
            Gamma0Region::Right => right,
            Gamma0Region::LeftRight => left || right,
            Gamma0Region::TopBottom => top || bottom,
            Gamma0Region::All => true,
            Gamma0Region::FromMesh => unreachable!("mesh labels are not recomputed"),
        };
        if on {
            BoundaryLabel::Gamma0
        } else {
            BoundaryLabel::Gamma1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    UnitSquare { n: usize, pattern: DiagonalPattern },
    File(PathBuf),
}

impl MeshSpec {
    pub fn build(&self, gamma0: Gamma0Region) -> Result<Mesh> {
        let mesh = match self {
            MeshSpec::UnitSquare { n, pattern } => build_unit_square(*n, *pattern)?,
            MeshSpec::File(path) => load_mesh(path)?,
        };
        match gamma0 {
            Gamma0Region::FromMesh => {
                if mesh.count_label(BoundaryLabel::Gamma0) == 0 {
                    return Err(Error::EmptyDirichlet);
                }
                Ok(mesh)
            }
            region => mesh.classify_boundary(|x| region.label(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    /// Snapshot every `cadence` steps (plus the first and last step).
    pub cadence: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: PathBuf::from("out"), cadence: 10 }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub material: Material,
    pub tau: f64,
    pub final_time: f64,
    pub mesh: MeshSpec,
    pub gamma0: Gamma0Region,
    pub boundary: BoundaryData,
    pub output: OutputSpec,
    pub solver: SolverSettings,
}

impl RunConfig {
    /// `N_T = floor(T / tau)`. The quotient is nudged by a relative `1e-12`
    /// so that e.g. `T = 0.3, tau = 0.1` gives 3 steps, not 2.
    pub fn num_steps(&self) -> usize {
        (self.final_time / self.tau * (1.0 + 1e-12)).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        validate_material(&self.material)?;
        StepParams::new(&self.material, self.tau)?;
        if !(self.final_time.is_finite() && self.final_time >= self.tau) {
            return Err(Error::InvalidParameter(format!(
                "final time T = {} must be at least tau = {}",
                self.final_time, self.tau
            )));
        }
        if let MeshSpec::UnitSquare { n: 0, .. } = self.mesh {
            return Err(Error::InvalidParameter("mesh division number must be at least 1".into()));
        }
        if self.output.cadence == 0 {
            return Err(Error::InvalidParameter("output cadence must be at least 1".into()));
        }
        self.boundary.validate()?;
        self.solver.validate()
    }
}

/// Mesh, material, data and the Dirichlet set derived from them.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub material: Material,
    pub boundary: BoundaryData,
    pub dirichlet: DirichletSet,
}

impl Problem {
    pub fn new(mesh: Mesh, material: Material, boundary: BoundaryData) -> Result<Self> {
        validate_material(&material)?;
        boundary.validate()?;
        let dirichlet = build_dirichlet(&mesh, &boundary.g)?;
        Ok(Problem { mesh, material, boundary, dirichlet })
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Problem::new(cfg.mesh.build(cfg.gamma0)?, cfg.material, cfg.boundary)
    }

    /// P1 interpolant of `g` (the initial guess for every solve).
    pub fn lifting(&self) -> FieldP1 {
        FieldP1::interpolate(&self.mesh, |x| self.boundary.g.eval(x))
    }
}

fn solve_constrained(
    system: &ConstrainedSystem,
    dirichlet: &DirichletSet,
    load: &[f64],
    guess: &FieldP1,
    settings: &SolverSettings,
) -> Result<(FieldP1, ConvergenceReport)> {
    let b = system.rhs(load);
    let mut x = guess.to_dofs();
    let report = solve_spd_from(system.matrix(), &b, &mut x, settings)?;
    let mut u = FieldP1::from_dofs(&x);
    dirichlet.impose(&mut u);
    Ok((u, report))
}

/// Plain-`C` solver: `u(phi) = argmin_{v in V_h(g)} E(v, phi)`, i.e.
/// `(C(e[u] - phi), e[v]) = l(v)` for all test fields `v`.
#[derive(Debug, Clone)]
pub struct EquilibriumSolver {
    problem: Problem,
    full: SparseSPD,
    system: ConstrainedSystem,
    settings: SolverSettings,
}

impl EquilibriumSolver {
    pub fn new(problem: Problem, settings: SolverSettings) -> Self {
        let full = assemble_stiffness(&problem.mesh, &problem.material, TensorOperator::Plain);
        let system = ConstrainedSystem::new(&full, &problem.dirichlet);
        EquilibriumSolver { problem, full, system, settings }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Assembled matrix before Dirichlet elimination.
    pub fn full_matrix(&self) -> &SparseSPD {
        &self.full
    }

    pub fn system(&self) -> &ConstrainedSystem {
        &self.system
    }

    pub fn solve(&self, phi: &FieldP0) -> Result<(FieldP1, ConvergenceReport)> {
        self.solve_from(phi, &self.problem.lifting())
    }

    /// Same as [`solve`](Self::solve) with CG started from `guess`.
    pub fn solve_from(&self, phi: &FieldP0, guess: &FieldP1) -> Result<(FieldP1, ConvergenceReport)> {
        let p = &self.problem;
        let load = assemble_rhs(&p.mesh, &p.material, TensorOperator::Plain, phi, &p.boundary);
        solve_constrained(&self.system, &p.dirichlet, &load, guess, &self.settings)
    }
}

/// One-shot equilibrium solve with default solver settings.
pub fn equilibrium_solve(mesh: &Mesh, m: &Material, phi: &FieldP0, bd: &BoundaryData) -> Result<FieldP1> {
    let problem = Problem::new(mesh.clone(), *m, *bd)?;
    Ok(EquilibriumSolver::new(problem, SolverSettings::default()).solve(phi)?.0)
}

/// `(u_h^k, phi_h^k)` at `t = k tau`, with its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub k: usize,
    pub t: f64,
    pub u: FieldP1,
    pub phi: FieldP0,
    pub energy: EnergyReport,
}

/// Per-step diagnostics produced alongside each state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub energy: EnergyReport,
    /// `L^inf` norms of `(sigma11, sigma22, sigma12)`.
    pub stress_linf: [f64; 3],
    /// Max element residual of the relaxation equation; zero at `k = 0`.
    pub scheme_residual: f64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
}

/// Reusable per-run machinery: the effective system is assembled and
/// constrained once, since `tau` and the data do not change between steps.
#[derive(Debug, Clone)]
pub struct TimeStepper {
    problem: Problem,
    step: StepParams,
    effective: ConstrainedSystem,
    settings: SolverSettings,
}

impl TimeStepper {
    pub fn new(problem: Problem, tau: f64, settings: SolverSettings) -> Result<Self> {
        let step = StepParams::new(&problem.material, tau)?;
        settings.validate()?;
        let full = assemble_stiffness(&problem.mesh, &problem.material, TensorOperator::Effective(step));
        let effective = ConstrainedSystem::new(&full, &problem.dirichlet);
        Ok(TimeStepper { problem, step, effective, settings })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn step_params(&self) -> &StepParams {
        &self.step
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    fn make_state(&self, k: usize, u: FieldP1, phi: FieldP0) -> SimulationState {
        let p = &self.problem;
        let energy = energy(&p.mesh, &p.material, &u, &phi, &p.boundary);
        SimulationState { k, t: k as f64 * self.step.tau, u, phi, energy }
    }

    /// `k = 0`: equilibrium for the initial `phi`.
    pub fn initial_state(&self, phi0: FieldP0) -> Result<(SimulationState, ConvergenceReport)> {
        let p = &self.problem;
        if phi0.len() != p.mesh.num_elements() {
            return Err(Error::InvalidParameter(format!(
                "initial phi has {} values for {} elements",
                phi0.len(),
                p.mesh.num_elements()
            )));
        }
        let full = assemble_stiffness(&p.mesh, &p.material, TensorOperator::Plain);
        let system = ConstrainedSystem::new(&full, &p.dirichlet);
        let load = assemble_rhs(&p.mesh, &p.material, TensorOperator::Plain, &phi0, &p.boundary);
        let (u, report) = solve_constrained(&system, &p.dirichlet, &load, &p.lifting(), &self.settings)?;
        Ok((self.make_state(0, u, phi0), report))
    }

    /// Advances `state` by one step: solve for `u^k` with the effective
    /// tensor, then update `phi^k` element by element.
    pub fn step(&self, state: &SimulationState) -> Result<(SimulationState, ConvergenceReport)> {
        let p = &self.problem;
        let op = TensorOperator::Effective(self.step);
        let load = assemble_rhs(&p.mesh, &p.material, op, &state.phi, &p.boundary);
        let (u, report) = solve_constrained(&self.effective, &p.dirichlet, &load, &state.u, &self.settings)?;
        let phi = self.relax(&u, &state.phi);
        Ok((self.make_state(state.k + 1, u, phi), report))
    }

    /// `phi^k = D^{-1}(C e[u^k] + (eta/tau) phi^{k-1})` on every element.
    pub fn relax(&self, u: &FieldP1, phi_prev: &FieldP0) -> FieldP0 {
        let m = &self.problem.material;
        FieldP0(
            strain_field(&self.problem.mesh, u)
                .iter()
                .zip(phi_prev.iter())
                .map(|(e, q)| relax_update(m, &self.step, e, q))
                .collect(),
        )
    }

    /// Diagnostics for `curr`, given the preceding state (if any).
    pub fn record(&self, prev: Option<&SimulationState>, curr: &SimulationState, report: &ConvergenceReport) -> StepRecord {
        let p = &self.problem;
        let mut energy = curr.energy;
        let mut scheme = 0.0;
        if let Some(prev) = prev {
            energy.identity_residual = energy_identity(
                &p.mesh,
                &p.material,
                self.step.tau,
                &prev.u,
                &prev.phi,
                prev.energy.total,
                &curr.u,
                &curr.phi,
                curr.energy.total,
            )
            .residual();
            scheme = scheme_residual(&p.mesh, &p.material, &self.step, &curr.u, &curr.phi, &prev.phi);
        }
        StepRecord {
            k: curr.k,
            t: curr.t,
            energy,
            stress_linf: stress_linf_all(&p.mesh, &p.material, &curr.u, &curr.phi),
            scheme_residual: scheme,
            solver_iterations: report.iterations,
            solver_residual: report.relative_residual,
        }
    }
}

/// Recorded time series plus snapshots of a completed run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub problem: Problem,
    pub num_steps: usize,
    /// One record per `k = 0..=N_T`.
    pub records: Vec<StepRecord>,
    /// States at `k = 0`, every `cadence` steps, and `k = N_T`.
    pub snapshots: Vec<SimulationState>,
}

impl RunResult {
    pub fn final_snapshot(&self) -> &SimulationState {
        self.snapshots.last().expect("a run always records k = 0")
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy.total).collect()
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.records.iter().map(|r| r.energy.identity_residual).fold(0.0, f64::max)
    }
}

/// Runs `cfg` from `phi^0 = 0`.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    run_with(cfg, |_, _, _| Ok(()))
}

/// Like [`run`], calling `observe(prev, curr)` after every step; an error
/// from the observer aborts the run.
pub fn run_with<F>(cfg: &RunConfig, mut observe: F) -> Result<RunResult>
where
    F: FnMut(&TimeStepper, &SimulationState, &SimulationState) -> Result<()>,
{
    cfg.validate()?;
    let problem = Problem::from_config(cfg)?;
    let stepper = TimeStepper::new(problem, cfg.tau, cfg.solver)?;
    let n_steps = cfg.num_steps();
    let cadence = cfg.output.cadence;

    let phi0 = FieldP0::zeros(stepper.problem().mesh.num_elements());
    let (mut state, report) = stepper.initial_state(phi0)?;
    let mut records = vec![stepper.record(None, &state, &report)];
    let mut snapshots = vec![state.clone()];
    for k in 1..=n_steps {
        let (next, report) = stepper.step(&state)?;
        records.push(stepper.record(Some(&state), &next, &report));
        observe(&stepper, &state, &next)?;
        if k % cadence == 0 || k == n_steps {
            snapshots.push(next.clone());
        }
        state = next;
    }
    Ok(RunResult { config: cfg.clone(), problem: stepper.problem, num_steps: n_steps, records, snapshots })
}
