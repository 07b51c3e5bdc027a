//! `key = value` configuration files with `[section]` headers, and the
//! presets for the creep and stress-relaxation experiments.
//!
//! ```text
//! [material]
//! lambda = 1
//! mu = 1
//! eta = 1
//! alpha = 1
//!
//! [time]
//! tau = 0.01
//! T = 1
//!
//! [mesh]
//! n = 40
//! pattern = alternating    # or: path = my.mesh
//!
//! [bc]
//! gamma0 = top             # top bottom left right left_right top_bottom all mesh
//! g = 0 0 0 0 0 0          # A row-major, then b: g(x) = A x + b
//! q = 0 0
//! f = 0 -1
//!
//! [output]
//! directory = out/example1
//! cadence = 10
//!
//! [solver]
//! tolerance = 1e-12
//! max_iterations = 50000
//! preconditioner = jacobi
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::DiagonalPattern;
use crate::solver::{Preconditioner, SolverSettings};
use crate::space::{AffineMap, BoundaryData};
use crate::stepper::{Gamma0Region, MeshSpec, OutputSpec, RunConfig};
use crate::tensor::Material;

const SECTIONS: &[(&str, &[&str])] = &[
    ("material", &["lambda", "mu", "eta", "alpha"]),
    ("time", &["tau", "T"]),
    ("mesh", &["n", "pattern", "path"]),
    ("bc", &["gamma0", "g", "q", "f"]),
    ("output", &["directory", "cadence"]),
    ("solver", &["tolerance", "max_iterations", "preconditioner"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Creep: top lid fixed, gravity-like body force, `T = 1`.
    Example1,
    /// Stress relaxation: sides pulled to `g = (x1, 0)`, `T = 2`.
    Example2,
}

impl Preset {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "example1" => Some(Preset::Example1),
            "example2" => Some(Preset::Example2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
        }
    }

    /// Unit square, `n = 40`, `lambda = mu = eta = 1`, `q = 0`, `tau = 0.01`.
    pub fn config(self, alpha: f64) -> RunConfig {
        let (gamma0, final_time, boundary) = match self {
            Preset::Example1 => (Gamma0Region::Top, 1.0, BoundaryData { g: AffineMap::ZERO, q: [0.0, 0.0], f: [0.0, -1.0] }),
            Preset::Example2 => (
                Gamma0Region::LeftRight,
                2.0,
                BoundaryData { g: AffineMap::from_coefficients([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), q: [0.0, 0.0], f: [0.0, 0.0] },
            ),
        };
        RunConfig {
            material: Material::new(1.0, 1.0, 1.0, alpha),
            tau: 0.01,
            final_time,
            mesh: MeshSpec::UnitSquare { n: 40, pattern: DiagonalPattern::Alternating },
            gamma0,
            boundary,
            output: OutputSpec { directory: PathBuf::from(format!("out/{}_alpha{}", self.name(), alpha)), cadence: 10 },
            solver: SolverSettings::default(),
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Parses and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parses configuration text; `origin` only labels error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    let err = |line: usize, msg: String| Error::Parse { path: origin.to_string(), line, msg };

    let mut entries: HashMap<(String, String), Entry> = HashMap::new();
    let mut section: Option<&str> = None;
    let mut section_lines: HashMap<&str, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        if let Some(name) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            let (known, _) = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| err(line, format!("unknown section [{name}]")))?;
            if section_lines.insert(known, line).is_some() {
                return Err(err(line, format!("section [{name}] appears twice")));
            }
            section = Some(known);
            continue;
        }
        let (key, value) = l.split_once('=').ok_or_else(|| err(line, format!("expected `key = value`, found `{l}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| err(line, format!("key `{key}` appears before any [section]")))?;
        let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(err(line, format!("unknown key `{key}` in [{sec}]")));
        }
        if value.is_empty() {
            return Err(err(line, format!("key `{key}` has no value")));
        }
        let prev = entries.insert((sec.to_string(), key.to_string()), Entry { value: value.to_string(), line });
        if prev.is_some() {
            return Err(err(line, format!("key `{key}` in [{sec}] given twice")));
        }
    }

    let get = |sec: &str, key: &str| entries.get(&(sec.to_string(), key.to_string()));
    let line_of = |sec: &str, key: &str| get(sec, key).map(|e| e.line).unwrap_or_else(|| section_lines.get(sec).copied().unwrap_or(0));

    let number = |sec: &str, key: &str| -> Result<Option<f64>> {
        match get(sec, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| err(e.line, format!("`{key}` must be a finite number, found `{}`", e.value))),
        }
    };
    let required = |sec: &str, key: &str| -> Result<f64> {
        number(sec, key)?.ok_or_else(|| err(line_of(sec, key), format!("missing required key `{key}` in [{sec}]")))
    };
    let vector = |sec: &str, key: &str, n: usize| -> Result<Option<Vec<f64>>> {
        match get(sec, key) {
            None => Ok(None),
            Some(e) => {
                let v: Option<Vec<f64>> = e
                    .value
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect();
                match v {
                    Some(v) if v.len() == n => Ok(Some(v)),
                    _ => Err(err(e.line, format!("`{key}` must be {n} finite numbers, found `{}`", e.value))),
                }
            }
        }
    };
    let integer = |sec: &str, key: &str| -> Result<Option<usize>> {
        match get(sec, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<usize>()
                .map(Some)
                .map_err(|_| err(e.line, format!("`{key}` must be a non-negative integer, found `{}`", e.value))),
        }
    };

    // [material]
    let lambda = required("material", "lambda")?;
    let mu = required("material", "mu")?;
    let eta = required("material", "eta")?;
    let alpha = required("material", "alpha")?;
    if !(mu > 0.0) {
        return Err(err(line_of("material", "mu"), format!("mu must be > 0 (got {mu})")));
    }
    if !(2.0 * mu + 2.0 * lambda > 0.0) {
        return Err(err(line_of("material", "lambda"), format!("lambda must exceed -mu for positivity of C (got lambda = {lambda}, mu = {mu})")));
    }
    if !(eta > 0.0) {
        return Err(err(line_of("material", "eta"), format!("eta must be > 0 (got {eta})")));
    }
    if !(alpha >= 0.0) {
        return Err(err(line_of("material", "alpha"), format!("alpha must be >= 0 (got {alpha})")));
    }

    // [time]
    let tau = required("time", "tau")?;
    if !(tau > 0.0) {
        return Err(err(line_of("time", "tau"), format!("tau must be > 0 (got {tau})")));
    }
    let final_time = required("time", "T")?;
    if !(final_time >= tau) {
        return Err(err(line_of("time", "T"), format!("T must be at least tau (T = {final_time}, tau = {tau})")));
    }

    // [mesh]
    let mesh = match (get("mesh", "path"), get("mesh", "n")) {
        (Some(p), None) => {
            if let Some(e) = get("mesh", "pattern") {
                return Err(err(e.line, "`pattern` only applies to generated meshes, not `path`".into()));
            }
            MeshSpec::File(PathBuf::from(&p.value))
        }
        (Some(p), Some(_)) => return Err(err(p.line, "give either `n` or `path` in [mesh], not both".into())),
        (None, _) => {
            let n = integer("mesh", "n")?.unwrap_or(40);
            if n == 0 {
                return Err(err(line_of("mesh", "n"), "`n` must be at least 1".into()));
            }
            let pattern = match get("mesh", "pattern") {
                None => DiagonalPattern::default(),
                Some(e) => DiagonalPattern::from_name(&e.value)
                    .ok_or_else(|| err(e.line, format!("unknown pattern `{}` (right, left, alternating)", e.value)))?,
            };
            MeshSpec::UnitSquare { n, pattern }
        }
    };

    // [bc]
    let gamma0 = match get("bc", "gamma0") {
        None => return Err(err(line_of("bc", "gamma0"), "missing required key `gamma0` in [bc]".into())),
        Some(e) => Gamma0Region::from_name(&e.value).ok_or_else(|| {
            let names: Vec<_> = Gamma0Region::ALL.iter().map(|r| r.name()).collect();
            err(e.line, format!("unknown gamma0 `{}` (one of {})", e.value, names.join(", ")))
        })?,
    };
    if gamma0 == Gamma0Region::FromMesh && !matches!(mesh, MeshSpec::File(_)) {
        return Err(err(line_of("bc", "gamma0"), "`gamma0 = mesh` requires `path` in [mesh]".into()));
    }
    let g = vector("bc", "g", 6)?.map(|v| AffineMap::from_coefficients([v[0], v[1], v[2], v[3], v[4], v[5]])).unwrap_or_default();
    let q = vector("bc", "q", 2)?.map(|v| [v[0], v[1]]).unwrap_or_default();
    let f = vector("bc", "f", 2)?.map(|v| [v[0], v[1]]).unwrap_or_default();

    // [output]
    let mut output = OutputSpec::default();
    if let Some(e) = get("output", "directory") {
        output.directory = PathBuf::from(&e.value);
    }
    if let Some(c) = integer("output", "cadence")? {
        if c == 0 {
            return Err(err(line_of("output", "cadence"), "`cadence` must be at least 1".into()));
        }
        output.cadence = c;
    }

    // [solver]
    let mut solver = SolverSettings::default();
    if let Some(t) = number("solver", "tolerance")? {
        if !(t > 0.0 && t < 1.0) {
            return Err(err(line_of("solver", "tolerance"), format!("`tolerance` must lie in (0, 1) (got {t})")));
        }
        solver.tolerance = t;
    }
    if let Some(m) = integer("solver", "max_iterations")? {
        if m == 0 {
            return Err(err(line_of("solver", "max_iterations"), "`max_iterations` must be at least 1".into()));
        }
        solver.max_iterations = Some(m);
    }
    if let Some(e) = get("solver", "preconditioner") {
        solver.preconditioner = Preconditioner::from_name(&e.value)
            .ok_or_else(|| err(e.line, format!("unknown preconditioner `{}` (none, jacobi)", e.value)))?;
    }

    let cfg = RunConfig {
        material: Material::new(lambda, mu, eta, alpha),
        tau,
        final_time,
        mesh,
        gamma0,
        boundary: BoundaryData { g, q, f },
        output,
        solver,
    };
    cfg.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(cfg)
}

/// Serializes `cfg` in the format read by [`parse_config_str`].
pub fn write_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let m = &cfg.material;
    let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
    writeln!(s, "[material]\nlambda = {}\nmu = {}\neta = {}\nalpha = {}\n", m.lambda, m.mu, m.eta, m.alpha).unwrap();
    writeln!(s, "[time]\ntau = {}\nT = {}\n", cfg.tau, cfg.final_time).unwrap();
    match &cfg.mesh {
        MeshSpec::UnitSquare { n, pattern } => writeln!(s, "[mesh]\nn = {n}\npattern = {}\n", pattern.name()).unwrap(),
        MeshSpec::File(p) => writeln!(s, "[mesh]\npath = {}\n", p.display()).unwrap(),
    }
    let bd = &cfg.boundary;
    writeln!(
        s,
        "[bc]\ngamma0 = {}\ng = {}\nq = {}\nf = {}\n",
        cfg.gamma0.name(),
        join(&bd.g.coefficients()),
        join(&bd.q),
        join(&bd.f)
    )
    .unwrap();
    writeln!(s, "[output]\ndirectory = {}\ncadence = {}\n", cfg.output.directory.display(), cfg.output.cadence).unwrap();
    writeln!(s, "[solver]\ntolerance = {:e}", cfg.solver.tolerance).unwrap();
    if let Some(mi) = cfg.solver.max_iterations {
        writeln!(s, "max_iterations = {mi}").unwrap();
    }
    writeln!(s, "preconditioner = {}", cfg.solver.preconditioner.name()).unwrap();
    s
}
