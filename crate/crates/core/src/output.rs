//! CSV time series, legacy VTK snapshots and the run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::write_config;
use crate::diagnostics::stress_field;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::stepper::{RunResult, SimulationState};
use crate::tensor::Material;
use crate::verify::{VerificationReport, VerifyOptions};

/// C-style `%.12e`: twelve fractional digits and a signed, two-digit exponent.
pub fn sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn energy_csv(result: &RunResult) -> String {
    let mut s = String::from("t,E,elastic,relax,work,identity_residual\n");
    for r in &result.records {
        let e = &r.energy;
        writeln!(
            s,
            "{},{},{},{},{},{}",
            sci(r.t),
            sci(e.total),
            sci(e.elastic),
            sci(e.relax),
            sci(e.work),
            sci(e.identity_residual)
        )
        .unwrap();
    }
    s
}

pub fn stress_csv(result: &RunResult) -> String {
    let mut s = String::from("t,sigma11_linf,sigma22_linf,sigma12_linf\n");
    for r in &result.records {
        let [a, b, c] = r.stress_linf;
        writeln!(s, "{},{},{},{}", sci(r.t), sci(a), sci(b), sci(c)).unwrap();
    }
    s
}

/// Legacy ASCII VTK unstructured grid: point vectors `u`, cell data `phi`
/// and `sigma` as 3-component scalars `(xx, yy, xy)`.
pub fn vtk_snapshot(mesh: &Mesh, m: &Material, state: &SimulationState) -> String {
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 2.0").unwrap();
    writeln!(s, "viscoelastic state k={} t={}", state.k, sci(state.t)).unwrap();
    writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.num_nodes()).unwrap();
    for p in mesh.nodes() {
        writeln!(s, "{} {} 0", p[0], p[1]).unwrap();
    }
    let ne = mesh.num_elements();
    writeln!(s, "CELLS {} {}", ne, 4 * ne).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        writeln!(s, "5").unwrap();
    }
    writeln!(s, "POINT_DATA {}", mesh.num_nodes()).unwrap();
    writeln!(s, "VECTORS u double").unwrap();
    for v in &state.u.0 {
        writeln!(s, "{} {} 0", sci(v[0]), sci(v[1])).unwrap();
    }
    writeln!(s, "CELL_DATA {ne}").unwrap();
    let sigma = stress_field(mesh, m, &state.u, &state.phi);
    for (name, field) in [("phi", &state.phi), ("sigma", &sigma)] {
        writeln!(s, "SCALARS {name} double 3\nLOOKUP_TABLE default").unwrap();
        for t in field.iter() {
            writeln!(s, "{} {} {}", sci(t.xx), sci(t.yy), sci(t.xy)).unwrap();
        }
    }
    s
}

pub fn summary(result: &RunResult, verification: Option<(&VerificationReport, &VerifyOptions)>) -> String {
    let cfg = &result.config;
    let mut s = String::new();
    writeln!(s, "# configuration").unwrap();
    s.push_str(&write_config(cfg));
    writeln!(s, "\n# mesh").unwrap();
    let mesh = &result.problem.mesh;
    writeln!(s, "nodes = {}\nelements = {}\nconstrained_nodes = {}", mesh.num_nodes(), mesh.num_elements(), result.problem.dirichlet.len())
        .unwrap();
    writeln!(s, "\n# results").unwrap();
    let last = result.records.last().expect("k = 0 is always recorded");
    writeln!(s, "N_T = {}", result.num_steps).unwrap();
    writeln!(s, "final_time = {}", sci(last.t)).unwrap();
    writeln!(s, "initial_energy = {}", sci(result.records[0].energy.total)).unwrap();
    writeln!(s, "final_energy = {}", sci(last.energy.total)).unwrap();
    writeln!(s, "final_sigma11_linf = {}", sci(last.stress_linf[0])).unwrap();
    writeln!(s, "max_identity_residual = {}", sci(result.max_identity_residual())).unwrap();
    let max_scheme = result.records.iter().map(|r| r.scheme_residual).fold(0.0, f64::max);
    writeln!(s, "max_scheme_residual = {}", sci(max_scheme)).unwrap();
    let its: Vec<usize> = result.records.iter().map(|r| r.solver_iterations).collect();
    let total: usize = its.iter().sum();
    writeln!(
        s,
        "solver_iterations = min {} / mean {:.1} / max {} / total {}",
        its.iter().min().unwrap(),
        total as f64 / its.len() as f64,
        its.iter().max().unwrap(),
        total
    )
    .unwrap();
    let worst = result.records.iter().map(|r| r.solver_residual).fold(0.0, f64::max);
    writeln!(s, "max_solver_relative_residual = {}", sci(worst)).unwrap();

    if let Some((rep, opts)) = verification {
        writeln!(s, "\n# verification").unwrap();
        writeln!(s, "energy_monotone = {}", rep.monotone_ok()).unwrap();
        writeln!(s, "max_identity_ratio = {}", sci(rep.max_identity_ratio)).unwrap();
        writeln!(s, "gradient_checks = {}", rep.gradient_samples.len()).unwrap();
        writeln!(s, "max_gradient_flow_error = {}", sci(rep.max_gradient_error)).unwrap();
        writeln!(s, "max_reduced_derivative_error = {}", sci(rep.max_reduced_error)).unwrap();
        let failures = rep.failures(opts);
        writeln!(s, "passed = {}", failures.is_empty()).unwrap();
        for f in failures {
            writeln!(s, "failure = {f}").unwrap();
        }
    }
    s
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `energy.csv`, `stress.csv`, `summary.txt` and one
/// `state_kNNNNN.vtk` per snapshot into `dir`.
pub fn write_outputs(
    result: &RunResult,
    verification: Option<(&VerificationReport, &VerifyOptions)>,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, body) in [
        ("energy.csv", energy_csv(result)),
        ("stress.csv", stress_csv(result)),
        ("summary.txt", summary(result, verification)),
    ] {
        let p = dir.join(name);
        write(p.clone(), &body)?;
        written.push(p);
    }
    for snap in &result.snapshots {
        let p = dir.join(format!("state_k{:05}.vtk", snap.k));
        write(p.clone(), &vtk_snapshot(&result.problem.mesh, &result.problem.material, snap))?;
        written.push(p);
    }
    Ok(written)
}
