use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use zener_fem::config::{parse_config, write_config, Preset};
use zener_fem::output::{sci, write_outputs};
use zener_fem::stepper::RunConfig;
use zener_fem::verify::{run_verified, VerificationReport, VerifyOptions};

#[derive(Parser)]
#[command(name = "zener", version, about = "P1/P0 finite element solver for the extended Maxwell viscoelastic model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a configuration file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Check energy decay, the energy identity and the gradient-flow structure.
        #[arg(long)]
        verify: bool,
    },
    /// Run one of the built-in experiments (example1: creep, example2: stress relaxation).
    Preset {
        #[arg(value_parser = ["example1", "example2"])]
        name: String,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        tau: Option<f64>,
        /// Mesh divisions per side.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
        /// Run alpha = 0, 1, 2 concurrently into separate directories.
        #[arg(long)]
        sweep: bool,
        /// Print the preset configuration instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Parse and validate a configuration file.
    CheckConfig { path: PathBuf },
}

fn execute(cfg: &RunConfig, verify: bool) -> Result<bool, String> {
    let start = Instant::now();
    let opts = VerifyOptions::default();
    let (result, report) = if verify {
        let (r, rep) = run_verified(cfg, &opts).map_err(|e| e.to_string())?;
        (r, Some(rep))
    } else {
        let r = zener_fem::run(cfg).map_err(|e| e.to_string())?;
        (r, None)
    };
    let elapsed = start.elapsed();
    let verification = report.as_ref().map(|r| (r, &opts));
    let files = write_outputs(&result, verification, &cfg.output.directory).map_err(|e| e.to_string())?;

    let last = result.records.last().expect("k = 0 is always recorded");
    println!(
        "{}: N_T = {}, E(0) = {}, E(T) = {}, |sigma11|_inf(T) = {}, {:.2} s, {} files",
        cfg.output.directory.display(),
        result.num_steps,
        sci(result.records[0].energy.total),
        sci(last.energy.total),
        sci(last.stress_linf[0]),
        elapsed.as_secs_f64(),
        files.len()
    );
    Ok(match report {
        None => true,
        Some(rep) => report_verification(&rep, &opts),
    })
}

fn report_verification(rep: &VerificationReport, opts: &VerifyOptions) -> bool {
    let failures = rep.failures(opts);
    println!(
        "  verify: monotone={} identity={} gradient-flow={} ({} checks) reduced-derivative={}",
        rep.monotone_ok(),
        sci(rep.max_identity_ratio),
        sci(rep.max_gradient_error),
        rep.gradient_samples.len(),
        sci(rep.max_reduced_error)
    );
    for f in &failures {
        eprintln!("  FAILED: {f}");
    }
    failures.is_empty()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::CheckConfig { path } => match parse_config(&path) {
            Ok(cfg) => {
                println!("{}: ok (N_T = {})", path.display(), cfg.num_steps());
                Ok(true)
            }
            Err(e) => Err(e.to_string()),
        },
        Command::Solve { config, alpha, tau, out, verify } => parse_config(&config).map_err(|e| e.to_string()).and_then(|mut cfg| {
            if let Some(a) = alpha {
                cfg.material.alpha = a;
            }
            if let Some(t) = tau {
                cfg.tau = t;
            }
            if let Some(o) = out {
                cfg.output.directory = o;
            }
            execute(&cfg, verify)
        }),
        Command::Preset { name, alpha, tau, n, out, verify, sweep, print_config } => {
            let preset = Preset::from_name(&name).expect("validated by clap");
            let configure = |alpha: f64, dir: Option<PathBuf>| {
                let mut cfg = preset.config(alpha);
                if let Some(t) = tau {
                    cfg.tau = t;
                }
                if let Some(n) = n {
                    if let zener_fem::stepper::MeshSpec::UnitSquare { n: ref mut m, .. } = cfg.mesh {
                        *m = n;
                    }
                }
                if let Some(d) = dir {
                    cfg.output.directory = d;
                }
                cfg
            };
            if print_config {
                print!("{}", write_config(&configure(alpha, out)));
                Ok(true)
            } else if sweep {
                let cfgs: Vec<RunConfig> = [0.0, 1.0, 2.0]
                    .into_iter()
                    .map(|a| configure(a, out.as_ref().map(|d| d.join(format!("alpha{a}")))))
                    .collect();
                let outcomes: Vec<Result<bool, String>> = std::thread::scope(|s| {
                    let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || execute(c, verify))).collect();
                    handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("worker panicked".into()))).collect()
                });
                outcomes.into_iter().try_fold(true, |acc, o| o.map(|ok| acc && ok))
            } else {
                execute(&configure(alpha, out), verify)
            }
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
