use std::fs;

use zener_fem::config::{parse_config, parse_config_str, write_config, Preset};
use zener_fem::mesh::{load_mesh, save_mesh};
use zener_fem::output::write_outputs;
use zener_fem::stepper::{Gamma0Region, MeshSpec};
use zener_fem::verify::{run_verified, VerifyOptions};
use zener_fem::{build_unit_square, run, DiagonalPattern, Error};

fn small(preset: Preset, alpha: f64) -> zener_fem::RunConfig {
    let mut cfg = preset.config(alpha);
    cfg.mesh = MeshSpec::UnitSquare { n: 6, pattern: DiagonalPattern::Alternating };
    cfg.final_time = 0.25;
    cfg.tau = 0.01;
    cfg
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for preset in [Preset::Example1, Preset::Example2] {
        for alpha in [0.0, 1.0, 2.0] {
            let cfg = preset.config(alpha);
            let path = dir.path().join(format!("{}_{alpha}.toml", preset.name()));
            fs::write(&path, write_config(&cfg)).unwrap();
            assert_eq!(parse_config(&path).unwrap(), cfg);
        }
    }
}

#[test]
fn config_errors_name_file_and_line() {
    let text = "[material]\nlambda = 1\nmu = 1\neta = 1\nalpha = 0\n[time]\ntau = 0.01\nT = 1\n[mesh]\nn = 4\n[bc]\ngamma0 = sideways\n";
    match parse_config_str(text, "c.toml") {
        Err(e @ Error::Parse { .. }) => {
            let s = e.to_string();
            assert!(s.starts_with("c.toml:12:"), "{s}");
            assert!(s.contains("gamma0"), "{s}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    let missing = tempfile::tempdir().unwrap().path().join("nope.toml");
    assert!(matches!(parse_config(&missing), Err(Error::Io { .. })));
}

#[test]
fn outputs_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Preset::Example2, 1.0);
    let opts = VerifyOptions::default();
    let (result, report) = run_verified(&cfg, &opts).unwrap();
    assert!(report.passed(&opts), "{:?}", report.failures(&opts));
    let files = write_outputs(&result, Some((&report, &opts)), dir.path()).unwrap();
    assert!(files.iter().all(|f| f.exists()));

    let energy = fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    let mut lines = energy.lines();
    assert_eq!(lines.next(), Some("t,E,elastic,relax,work,identity_residual"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), cfg.num_steps() + 1);
    assert_eq!(rows.len(), 26);
    for row in &rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 6);
        assert!((cols[1] - (cols[2] + cols[3] - cols[4])).abs() < 1e-11);
    }
    assert!(rows[0].starts_with("0.000000000000e+00,"));

    let stress = fs::read_to_string(dir.path().join("stress.csv")).unwrap();
    assert_eq!(stress.lines().next(), Some("t,sigma11_linf,sigma22_linf,sigma12_linf"));
    assert_eq!(stress.lines().count(), 27);

    let vtk = fs::read_to_string(dir.path().join("state_k00000.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 2.0\n"));
    assert!(vtk.contains("POINTS 49 double"));
    assert!(vtk.contains("CELLS 72 288"));
    assert!(vtk.contains("SCALARS sigma double 3"));
    for k in [10, 20, 25] {
        assert!(dir.path().join(format!("state_k{k:05}.vtk")).exists());
    }

    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("N_T = 25"));
    assert!(summary.contains("passed = true"));
}

#[test]
fn mesh_file_run_matches_generated_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(Preset::Example2, 2.0);
    let mesh = build_unit_square(6, DiagonalPattern::Alternating).unwrap().classify_boundary(|x| Gamma0Region::LeftRight.label(x)).unwrap();
    let path = dir.path().join("square.msh");
    save_mesh(&mesh, &path).unwrap();
    assert_eq!(load_mesh(&path).unwrap(), mesh);

    for gamma0 in [Gamma0Region::FromMesh, Gamma0Region::LeftRight] {
        let mut from_file = cfg.clone();
        from_file.mesh = MeshSpec::File(path.clone());
        from_file.gamma0 = gamma0;
        let a = run(&cfg).unwrap().energies();
        let b = run(&from_file).unwrap().energies();
        assert_eq!(a, b);
    }
}

#[test]
fn malformed_mesh_file_is_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.msh");
    let mesh = build_unit_square(1, DiagonalPattern::Right).unwrap();
    let text = mesh.to_text().replacen("triangles 2", "triangles 3", 1);
    fs::write(&path, text).unwrap();
    let err = load_mesh(&path).unwrap_err().to_string();
    assert!(err.contains("bad.msh"), "{err}");
}
