//! End-to-end checks of the CLI verbs and the binary's exit codes.

use std::path::Path;
use std::process::Command;

use dedsim::commands::*;
use dedsim::{parse_config, RunConfig};
use dedsim_core::filters::import_filter_profile;
use dedsim_core::raman::load_raman_table;

fn cfg(text: &str) -> RunConfig {
    parse_config(text, Path::new("inline.conf")).unwrap()
}

/// Data rows of a CSV with `#` comments, header dropped.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn fwhm(x: &[f64], y: &[f64]) -> f64 {
    let peak = y.iter().copied().fold(0.0, f64::max);
    let above: Vec<f64> = x.iter().zip(y).filter(|(_, v)| **v >= peak / 2.0).map(|(x, _)| *x).collect();
    above.last().unwrap() - above.first().unwrap()
}

#[test]
fn modes_table() {
    let dir = tempfile::tempdir().unwrap();
    cmd_modes(&RunConfig::default(), dir.path()).unwrap();
    let r = rows(&dir.path().join(MODES_FILE));
    assert_eq!(r.len(), 201);
    let x: Vec<f64> = r.iter().map(|r| r[0]).collect();
    let pump: Vec<f64> = r.iter().map(|r| r[1]).collect();
    let psi0: Vec<f64> = r.iter().map(|r| r[2].abs()).collect();
    assert!(fwhm(&x, &psi0) > fwhm(&x, &pump));
    // Matched filter: φ₀ is ψ₀ (to the printed precision).
    for row in &r {
        assert!((row[2] - row[4]).abs() <= 1e-6 * row[2].abs().max(1e-12));
    }
    let text = std::fs::read_to_string(dir.path().join(MODES_FILE)).unwrap();
    assert!(text.contains("# overlap_phi0_psi0 = 1.000000e+00"));
    assert!(text.contains("# fiber.gamma = 1.6"));
}

#[test]
fn open_filter_modes_table() {
    let dir = tempfile::tempdir().unwrap();
    cmd_modes(&cfg("filter.kind = open\n"), dir.path()).unwrap();
    let r = rows(&dir.path().join(MODES_FILE));
    assert!(r.windows(2).all(|w| w[0][4] == w[1][4]));
}

#[test]
fn ppair_sweep_rows() {
    let c = cfg("sweep.kind = p_pair\nsweep.p_min = 1e-6\nsweep.p_max = 1e-2\nsweep.points = 5\n");
    let dir = tempfile::tempdir().unwrap();
    cmd_sweep_ppair(&c, dir.path()).unwrap();
    let r = rows(&dir.path().join(PPAIR_FILE));
    assert_eq!(r.len(), 5);
    let last = &r[4];
    assert_eq!(last[0], 0.01);
    assert!((last[1] - 0.72).abs() < 0.02);
    assert!((last[2] - 0.88).abs() < 0.03);
    assert!((r[0][1] - 0.82).abs() < 0.01);
    assert!((r[0][2] - 0.95).abs() < 0.01);
    for row in &r {
        assert!(row[2] >= row[1]);
        assert!((0.0..=0.5).contains(&row[3]) && (0.0..=0.5).contains(&row[4]));
        assert!(row[5] >= 0.0 && row[6] >= 0.0);
    }
    assert_eq!(last[5], 0.0);
}

#[test]
fn f_ec_override_changes_key() {
    let base = ppair_rows(&cfg("")).unwrap().0;
    let ideal = ppair_rows(&cfg("qkd.f_ec = 1.0\n")).unwrap().0;
    let (a, b) = (base.last().unwrap(), ideal.last().unwrap());
    assert_eq!(a.v_filtered, b.v_filtered);
    assert!(b.key_filtered > a.key_filtered);
    let halved = ppair_rows(&cfg("qkd.q_basis_applied = true\n")).unwrap().0;
    assert!((halved.last().unwrap().key_filtered - 0.5 * a.key_filtered).abs() < 1e-15);
}

#[test]
fn band_override_reaches_raman_lookup() {
    let near = ppair_rows(&cfg("band.b0_nm = 5\n")).unwrap().0;
    let far = ppair_rows(&cfg("")).unwrap().0;
    assert!(near[0].v_open > far[0].v_open + 0.1);
}

#[test]
fn detuning_sweep_flags_clamping() {
    let c = cfg("sweep.kind = detuning\nsweep.delta_min_nm = 4\nsweep.delta_max_nm = 16\nsweep.points = 3\n");
    let r = detuning_rows(&c).unwrap();
    assert!(r[0].raman_clamped && !r[1].raman_clamped && r[2].raman_clamped);
    assert!(r.iter().all(|r| r.v_sat_filtered >= r.v_sat_open));
}

#[test]
fn optimize_writes_profiles_and_report() {
    let c = cfg("optimize.order = 2\noptimize.shutter_min_sigma = 0.35\noptimize.shutter_max_sigma = 0.35\noptimize.objective = mode_overlap\n");
    let dir = tempfile::tempdir().unwrap();
    let files = cmd_optimize(&c, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let anti = import_filter_profile(&dir.path().join(FILTER_ANTISTOKES_FILE)).unwrap();
    let stokes = import_filter_profile(&dir.path().join(FILTER_STOKES_FILE)).unwrap();
    assert!(anti.wavelengths_nm.iter().all(|&l| l < 1538.7));
    assert!(stokes.wavelengths_nm.iter().all(|&l| l > 1538.7));
    assert_eq!(anti.transmission.len(), stokes.transmission.len());
    let report = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    let get = |k: &str| -> f64 {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{k} = ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(get("overlap_phi0_psi0") >= 0.99);
    assert!((get("chi0") - 0.35).abs() < 0.05);

    // The sweep's filtered arm, fed the same optimization, reproduces the report.
    let sweep = cfg("filter.kind = optimize\noptimize.order = 2\noptimize.shutter_min_sigma = 0.35\noptimize.shutter_max_sigma = 0.35\noptimize.objective = mode_overlap\nsweep.kind = p_pair\nsweep.p_min = 0.01\nsweep.p_max = 0.01\nsweep.points = 1\n");
    let row = ppair_rows(&sweep).unwrap().0[0];
    assert!((row.v_filtered - get("visibility")).abs() < 1e-6);
}

#[test]
fn calibrate_round_trips_through_the_table_reader() {
    let dir = tempfile::tempdir().unwrap();
    cmd_calibrate(&RunConfig::default(), dir.path()).unwrap();
    let model = load_raman_table(&dir.path().join(RAMAN_FILE)).unwrap();
    let builtin = dedsim_core::RamanModel::calibrated_default();
    for ((d1, r1), (d2, r2)) in model.anchors().iter().zip(builtin.anchors()) {
        assert!((d1 - d2).abs() < 1e-6 * d2);
        assert!((r1 - r2).abs() < 1e-8 * r2);
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_dedsim");
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");

    std::fs::write(&conf, "grid.points = 61\n").unwrap();
    let ok = Command::new(exe).args(["modes", "--config"]).arg(&conf).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    std::fs::write(&conf, "fiber.gamma = 1.6\nbogus.key = 1\n").unwrap();
    let bad = Command::new(exe).args(["modes", "--config"]).arg(&conf).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains(":2:"));

    std::fs::write(&conf, "calibrate.points = 10:1.5\n").unwrap();
    let infeasible = Command::new(exe).args(["calibrate", "--config"]).arg(&conf).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(infeasible.status.code(), Some(2));

    let missing = Command::new(exe).args(["modes", "--config"]).arg(dir.path().join("nope.conf")).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
