//! The five CLI verbs. Each writes its files under `out` and returns their
//! paths. Outputs depend only on the configuration, so reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use dedsim_core::filters::SpectralProfile;
use dedsim_core::modes::mode_overlap;
use dedsim_core::optimize::{optimize_filter, OptimizedFilter};
use dedsim_core::raman::{calibrate_raman, write_raman_table};
use dedsim_core::sfwm::sfwm_modes_with;
use dedsim_core::units::detuning_to_angular;
use dedsim_core::visibility::{
    build_filter, evaluate, saturated_matched_visibility, saturated_open_visibility,
};
use dedsim_core::{ExperimentParams, FilterChoice, FilterSpec, RamanModel};

use crate::config::{FilterKind, RunConfig, Sweep};
use crate::error::CliError;
use crate::format::{row, sci};

pub const MODES_FILE: &str = "modes.csv";
pub const PPAIR_FILE: &str = "visibility_vs_ppair.csv";
pub const DETUNING_FILE: &str = "saturation_vs_detuning.csv";
pub const FILTER_STOKES_FILE: &str = "filter_stokes.csv";
pub const FILTER_ANTISTOKES_FILE: &str = "filter_antistokes.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const RAMAN_FILE: &str = "raman_table.csv";

/// Sweep used by `sweep-ppair` when the config names none: half-decade
/// steps from 1e−7 up to 0.01.
pub const DEFAULT_PPAIR_SWEEP: Sweep = Sweep::PPair { min: 1e-7, max: 1e-2, points: 11, log: true };
pub const DEFAULT_DETUNING_SWEEP: Sweep = Sweep::Detuning { min_nm: 5.0, max_nm: 14.0, points: 10 };

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn prepare(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })
}

fn header(command: &str, cfg: &RunConfig, extra: &[String]) -> String {
    let mut s = format!("# dedsim {command}\n");
    for line in cfg.resolved_lines().iter().chain(extra) {
        let _ = writeln!(s, "# {line}");
    }
    s
}

/// Filtered-arm choice for the configured filter kind. Optimization runs
/// once, at the configured pair probability.
fn resolve_filter(
    cfg: &RunConfig,
    params: &ExperimentParams,
    raman: &RamanModel,
) -> Result<(FilterChoice, Option<OptimizedFilter>), CliError> {
    Ok(match cfg.filter {
        FilterKind::Open => (FilterChoice::Open, None),
        FilterKind::Matched => (FilterChoice::IdealMatched, None),
        FilterKind::Practical { .. } => {
            let spec = cfg.practical_spec(params)?.expect("practical kind");
            (FilterChoice::Practical(spec), None)
        }
        FilterKind::Optimize => {
            let best = optimize_filter(params, raman, &cfg.search_space(params), &cfg.optimize_settings())?;
            (FilterChoice::Practical(best.spec.clone()), Some(best))
        }
    })
}

fn optimizer_notes(best: &OptimizedFilter) -> Vec<String> {
    vec![
        format!("optimized order = {}", best.order),
        format!("optimized width_sigma = {}", sci(best.width)),
        format!("optimized shutter_t_sigma = {}", sci(best.shutter_fwhm)),
        format!("optimized converged = {}", best.converged),
    ]
}

pub fn cmd_modes(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    prepare(out)?;
    let params = cfg.params()?;
    let raman = cfg.raman_model()?;
    let couplings = params.couplings(&raman)?;
    let settings = cfg.eval_settings();
    let sfwm = sfwm_modes_with(&params, &couplings, settings.n_points)?;
    let grid = sfwm.grid().clone();
    let (choice, best) = resolve_filter(cfg, &params, &raman)?;
    let (filter, _) = build_filter(&choice, &params, &couplings, &settings)?;

    let psi0 = sfwm.mode(0);
    let psi1 = sfwm.mode(1);
    let phi0 = match choice {
        // Every mode passes; the flat mode stands in for the fundamental.
        FilterChoice::Open => {
            let norm = (2.0 * std::f64::consts::PI / params.band_width_rel()).sqrt();
            vec![norm; grid.len()]
        }
        _ => filter.fundamental(),
    };
    let overlap = mode_overlap(&phi0, &psi0, &grid)?.abs();

    let mut extra = vec![
        format!("filter = {}", choice.describe()),
        format!("zeta0 = {}", sci(sfwm.eigenvalues()[0])),
        format!("zeta1 = {}", sci(sfwm.eigenvalues()[1])),
        format!("chi0 = {}", sci(filter.chi0())),
        format!("overlap_phi0_psi0 = {}", sci(overlap)),
    ];
    if let Some(b) = &best {
        extra.extend(optimizer_notes(b));
    }
    let mut text = header("modes", cfg, &extra);
    text.push_str("omega_over_sigma,pump,psi0,psi1,phi0\n");
    for (i, x) in grid.nodes().iter().enumerate() {
        let pump = (-x * x / 2.0).exp();
        let _ = writeln!(text, "{}", row(&[*x, pump, psi0[i], psi1[i], phi0[i]]));
    }
    let path = out.join(MODES_FILE);
    write_file(&path, &text)?;
    Ok(vec![path])
}

fn ppair_points(sweep: &Sweep) -> Vec<f64> {
    let Sweep::PPair { min, max, points, log } = *sweep else {
        unreachable!("p_pair sweep")
    };
    if points == 1 {
        return vec![min];
    }
    let last = points - 1;
    (0..points)
        .map(|i| {
            if i == last {
                return max;
            }
            let t = i as f64 / last as f64;
            if log {
                10f64.powf(min.log10() + t * (max.log10() - min.log10()))
            } else {
                min + t * (max - min)
            }
        })
        .collect()
}

fn detuning_points(sweep: &Sweep) -> Vec<f64> {
    let Sweep::Detuning { min_nm, max_nm, points } = *sweep else {
        unreachable!("detuning sweep")
    };
    if points == 1 {
        return vec![min_nm];
    }
    let last = points - 1;
    (0..points)
        .map(|i| if i == last { max_nm } else { min_nm + i as f64 * (max_nm - min_nm) / last as f64 })
        .collect()
}

fn sweep_or(cfg: &RunConfig, wanted: &str, default: Sweep) -> Result<Sweep, CliError> {
    match (&cfg.sweep, wanted) {
        (Sweep::None, _) => Ok(default),
        (s @ Sweep::PPair { .. }, "p_pair") | (s @ Sweep::Detuning { .. }, "detuning") => Ok(s.clone()),
        (other, _) => Err(CliError::Usage(format!(
            "this command needs sweep.kind = {wanted}, config has {other}"
        ))),
    }
}

/// One row of the pair-probability sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PPairRow {
    pub p_pair: f64,
    pub v_open: f64,
    pub v_filtered: f64,
    pub qber_open: f64,
    pub qber_filtered: f64,
    pub key_open: f64,
    pub key_filtered: f64,
}

pub fn ppair_rows(cfg: &RunConfig) -> Result<(Vec<PPairRow>, FilterChoice, Option<OptimizedFilter>), CliError> {
    let sweep = sweep_or(cfg, "p_pair", DEFAULT_PPAIR_SWEEP)?;
    let params = cfg.params()?;
    let raman = cfg.raman_model()?;
    let (choice, best) = resolve_filter(cfg, &params, &raman)?;
    let settings = cfg.eval_settings();
    let rows = ppair_points(&sweep)
        .par_iter()
        .map(|&p| {
            let point = |source| CliError::Point { point: format!("p_pair = {p}"), source };
            let at = params.with_pair_probability(p).map_err(point)?;
            let open = evaluate(&at, &raman, &FilterChoice::Open, &settings, &cfg.qkd).map_err(point)?;
            let filt = evaluate(&at, &raman, &choice, &settings, &cfg.qkd).map_err(point)?;
            Ok(PPairRow {
                p_pair: p,
                v_open: open.visibility,
                v_filtered: filt.visibility,
                qber_open: open.qber,
                qber_filtered: filt.qber,
                key_open: open.key_fraction_per_pulse,
                key_filtered: filt.key_fraction_per_pulse,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((rows, choice, best))
}

pub fn cmd_sweep_ppair(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    prepare(out)?;
    let (rows, choice, best) = ppair_rows(cfg)?;
    let mut extra = vec![
        format!("filtered arm = {}", choice.describe()),
        "open arm = open (no filter)".to_string(),
    ];
    if let Some(b) = &best {
        extra.extend(optimizer_notes(b));
    }
    let mut text = header("sweep-ppair", cfg, &extra);
    text.push_str("p_pair,v_open,v_filtered,qber_open,qber_filtered,key_open,key_filtered\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{}",
            row(&[r.p_pair, r.v_open, r.v_filtered, r.qber_open, r.qber_filtered, r.key_open, r.key_filtered])
        );
    }
    let path = out.join(PPAIR_FILE);
    write_file(&path, &text)?;
    Ok(vec![path])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningRow {
    pub delta_nm: f64,
    pub v_sat_open: f64,
    pub v_sat_filtered: f64,
    pub raman_clamped: bool,
}

pub fn detuning_rows(cfg: &RunConfig) -> Result<Vec<DetuningRow>, CliError> {
    let sweep = sweep_or(cfg, "detuning", DEFAULT_DETUNING_SWEEP)?;
    let params = cfg.params()?;
    let raman = cfg.raman_model()?;
    let settings = cfg.eval_settings();
    detuning_points(&sweep)
        .par_iter()
        .map(|&d| {
            let point = |source| CliError::Point { point: format!("delta = {d} nm"), source };
            let center = detuning_to_angular(cfg.lambda_nm, d).map_err(point)?;
            let at = params.with_band_center(center);
            at.validate().map_err(point)?;
            let lookup = raman.gain_ratio(center).map_err(point)?;
            Ok(DetuningRow {
                delta_nm: d,
                v_sat_open: saturated_open_visibility(&at, lookup.ratio).map_err(point)?,
                v_sat_filtered: saturated_matched_visibility(&at, lookup.ratio, &settings).map_err(point)?,
                raman_clamped: lookup.clamped,
            })
        })
        .collect()
}

pub fn cmd_sweep_detuning(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    prepare(out)?;
    let rows = detuning_rows(cfg)?;
    let extra = vec![
        "v_sat_open = closed-form weak-pump limit, open filter".to_string(),
        "v_sat_filtered = ideal matched filter at q = 1e-4 (checked against q = 5e-5)".to_string(),
        "raman_clamped = 1 where the detuning lies outside the Raman model's anchors".to_string(),
    ];
    let mut text = header("sweep-detuning", cfg, &extra);
    text.push_str("delta_nm,v_sat_open,v_sat_filtered,raman_clamped\n");
    for r in &rows {
        if r.raman_clamped {
            eprintln!("warning: delta = {} nm outside the Raman anchor span, gain ratio clamped", r.delta_nm);
        }
        let _ = writeln!(
            text,
            "{},{}",
            row(&[r.delta_nm, r.v_sat_open, r.v_sat_filtered]),
            u8::from(r.raman_clamped)
        );
    }
    let path = out.join(DETUNING_FILE);
    write_file(&path, &text)?;
    Ok(vec![path])
}

pub fn run_optimizer(cfg: &RunConfig) -> Result<OptimizedFilter, CliError> {
    let params = cfg.params()?;
    let raman = cfg.raman_model()?;
    Ok(optimize_filter(&params, &raman, &cfg.search_space(&params), &cfg.optimize_settings())?)
}

pub fn cmd_optimize(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    prepare(out)?;
    let params = cfg.params()?;
    let best = run_optimizer(cfg)?;

    let anti = out.join(FILTER_ANTISTOKES_FILE);
    dedsim_core::filters::export_filter_profile(&best.spec, cfg.lambda_nm, params.sigma, &anti)?;
    // The same profile mirrored onto the Stokes band.
    let grid = best.spec.spectral.grid().clone();
    let stokes_grid = grid.with_band_center(-params.band_center_rel());
    let stokes_profile = SpectralProfile::new(
        best.spec.spectral.samples().to_vec(),
        stokes_grid,
        best.spec.spectral.description(),
    )?;
    let stokes_spec = FilterSpec::new(stokes_profile, best.spec.shutter_fwhm)?;
    let stokes = out.join(FILTER_STOKES_FILE);
    dedsim_core::filters::export_filter_profile(&stokes_spec, cfg.lambda_nm, params.sigma, &stokes)?;

    let mut text = header("optimize", cfg, &[]);
    let lines = [
        ("objective", best.objective.name().to_string()),
        ("order", best.order.to_string()),
        ("width_sigma", sci(best.width)),
        ("shutter_t_sigma", sci(best.shutter_fwhm)),
        ("shutter_fwhm_ps", sci(best.shutter_fwhm / params.sigma * 1e12)),
        ("chi0", sci(best.chi0())),
        ("residual_sum", sci(best.residual_sum())),
        ("visibility", sci(best.visibility)),
        ("collection_fraction", sci(best.collection_fraction)),
        ("overlap_phi0_psi0", sci(best.overlap)),
        ("evaluations", best.evaluations.to_string()),
        ("converged", best.converged.to_string()),
    ];
    if !best.converged {
        text.push_str("# WARNING: optimizer hit its iteration cap; values are best-so-far\n");
    }
    for (k, v) in lines {
        let _ = writeln!(text, "{k} = {v}");
    }
    let report = out.join(REPORT_FILE);
    write_file(&report, &text)?;
    Ok(vec![stokes, anti, report])
}

pub fn cmd_calibrate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    prepare(out)?;
    let params = cfg.params()?;
    let anchors = cfg
        .calibrate_points
        .iter()
        .map(|&(d, v)| {
            let point = |source| CliError::Point { point: format!("delta = {d} nm"), source };
            let w = detuning_to_angular(cfg.lambda_nm, d).map_err(point)?;
            Ok((w, calibrate_raman(v, w, &params).map_err(point)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let model = RamanModel::new(anchors)?;
    let path = out.join(RAMAN_FILE);
    write_raman_table(&model, &path)?;
    let body = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let text = header("calibrate", cfg, &["gain ratios solve the unfiltered saturated visibility targets".into()]) + &body;
    write_file(&path, &text)?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points() {
        let p = ppair_points(&DEFAULT_PPAIR_SWEEP);
        assert_eq!(p.len(), 11);
        assert_eq!(p[10], 0.01);
        assert!((p[0] - 1e-7).abs() < 1e-22);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        let d = detuning_points(&DEFAULT_DETUNING_SWEEP);
        assert_eq!(d, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0]);
        let lin = ppair_points(&Sweep::PPair { min: 0.01, max: 0.03, points: 3, log: false });
        for (a, b) in lin.iter().zip([0.01, 0.02, 0.03]) {
            assert!((a - b).abs() < 1e-17);
        }
        assert_eq!(detuning_points(&Sweep::Detuning { min_nm: 7.0, max_nm: 7.0, points: 1 }), vec![7.0]);
    }

    #[test]
    fn wrong_sweep_kind_is_a_usage_error() {
        let cfg = RunConfig { sweep: DEFAULT_DETUNING_SWEEP, ..RunConfig::default() };
        let e = sweep_or(&cfg, "p_pair", DEFAULT_PPAIR_SWEEP).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
