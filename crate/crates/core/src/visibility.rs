//! Two-photon-interference visibility of the filtered pair source.
//!
//! V = Ϝ / (Ϝ + 2(S_a + R_a)(S_s + R_s)), with S the per-pulse pair-photon
//! number, R the Raman photon number and Ϝ the coincidence term, each
//! evaluated by quadrature over the filter eigenmodes. The unfiltered closed
//! forms double as oracles for the quadrature.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filters::{ideal_matched_filter, FilterModes, FilterSpec};
use crate::modes::{weighted, ModeDecomposition};
use crate::quadrature::{make_band_grid, Grid, QuadratureRule};
use crate::raman::{open_noise_geometry, RamanModel};
use crate::sfwm::{sfwm_modes_with, unfiltered_pair_number, xi, Couplings, ExperimentParams};
use crate::units::{binary_entropy, erf, thermal_occupation};

pub const DEFAULT_GRID_POINTS: usize = 201;
/// Outer-integral padding beyond each band edge, units of σ.
pub const DEFAULT_PADDING: f64 = 6.0;
/// Kerr strengths standing in for the weak-pump limit.
pub const SATURATION_KERR: f64 = 1e-4;
pub const SATURATION_KERR_CHECK: f64 = 5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Stokes,
    AntiStokes,
}

impl Band {
    /// Sign of the band's detuning from the pump.
    pub fn sign(self) -> f64 {
        match self {
            Band::Stokes => -1.0,
            Band::AntiStokes => 1.0,
        }
    }
}

/// How n_T is evaluated across a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occupation {
    /// At the absolute detuning of every outer node.
    Exact,
    /// Frozen at the band center ∓B₀.
    Frozen,
}

/// Which part of ξ enters the coincidence term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiForm {
    Full,
    /// e^{−x²/4σ²} only.
    Leading,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub n_points: usize,
    pub padding: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            n_points: DEFAULT_GRID_POINTS,
            padding: DEFAULT_PADDING,
        }
    }
}

impl EvalSettings {
    pub fn band_grid(&self, params: &ExperimentParams) -> Result<Grid> {
        params.band_grid(self.n_points)
    }

    pub fn outer_grid(&self, params: &ExperimentParams) -> Result<Grid> {
        make_band_grid(
            0.0,
            params.band_width_rel(),
            self.padding,
            self.n_points,
            QuadratureRule::GaussLegendre,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QkdSettings {
    /// Error-correction inefficiency f ≥ 1.
    pub f_ec: f64,
    pub q_basis: f64,
    pub apply_q_basis: bool,
}

impl Default for QkdSettings {
    fn default() -> Self {
        QkdSettings {
            f_ec: 1.22,
            q_basis: 0.5,
            apply_q_basis: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMetadata {
    pub params: ExperimentParams,
    pub gain_ratio: f64,
    pub p_pair: f64,
    pub filter: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport {
    pub s_stokes: f64,
    pub s_antistokes: f64,
    pub r_stokes: f64,
    pub r_antistokes: f64,
    pub f_coincidence: f64,
    pub visibility: f64,
    pub qber: f64,
    /// Secret-key fraction per pulse with the detection efficiency factored out.
    pub key_fraction_per_pulse: f64,
    pub metadata: ReportMetadata,
}

/// S_μ = √(π/2)·q²·Σⱼ χⱼ ∬ e^{−(ω−ω′)²/8}φⱼ(ω)φⱼ(ω′), σ = 1.
pub fn pair_term_s(filter: &FilterModes, params: &ExperimentParams) -> f64 {
    let q = params.kerr_strength();
    if q == 0.0 {
        return 0.0;
    }
    let modes = filter.retained();
    let grid = modes.grid();
    let x = grid.nodes();
    let g = DMatrix::from_fn(x.len(), x.len(), |i, k| (-(x[i] - x[k]).powi(2) / 8.0).exp());
    let p = weighted(grid, modes.modes());
    let gp = &g * &p;
    let total: f64 = modes
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(j, chi)| chi * p.column(j).dot(&gp.column(j)))
        .sum();
    (PI / 2.0).sqrt() * q * q * total
}

/// R_μ = (1/2π)·g_rLA₀²σ·∫dω n_T(ω)·Σⱼ χⱼ|∫dω′ e^{−(ω′−ω)²/2}φⱼ(ω′)|², σ = 1.
///
/// `outer` must extend at least 6σ past each band edge. n_T is taken at the
/// absolute detuning of the band (negative on the Stokes side).
pub fn raman_term_r(
    filter: &FilterModes,
    params: &ExperimentParams,
    band: Band,
    couplings: &Couplings,
    outer: &Grid,
    occupation: Occupation,
) -> Result<f64> {
    let half = 0.5 * params.band_width_rel();
    let (lo, hi) = outer.interval();
    let need = DEFAULT_PADDING - 1e-9;
    if lo > -half - need || hi < half + need {
        return Err(Error::domain(format!(
            "outer grid [{lo}, {hi}] must cover the band with at least {DEFAULT_PADDING} sigma padding"
        )));
    }
    if couplings.raman == 0.0 {
        return Ok(0.0);
    }
    let modes = filter.retained();
    let grid = modes.grid();
    let x = grid.nodes();
    let y = outer.nodes();
    let g = DMatrix::from_fn(y.len(), x.len(), |k, i| (-(x[i] - y[k]).powi(2) / 2.0).exp());
    let proj = &g * weighted(grid, modes.modes());
    let chi = modes.eigenvalues();

    let center = band.sign() * params.band_center_rel();
    let frozen = thermal_occupation(center * params.sigma, params.temperature)?;
    let mut total = 0.0;
    for (k, w) in outer.weights().iter().enumerate() {
        let n_t = match occupation {
            Occupation::Frozen => frozen,
            Occupation::Exact => thermal_occupation((center + y[k]) * params.sigma, params.temperature)?,
        };
        let s: f64 = proj
            .row(k)
            .iter()
            .zip(chi)
            .map(|(p, c)| c * p * p)
            .sum();
        total += w * n_t * s;
    }
    Ok(couplings.raman / (2.0 * PI) * total)
}

/// Ϝ = (1/4π)·q²·Σⱼₖ χ_sⱼχ_aₖ |∬ φ_sⱼ(ω)φ_aₖ(ω′)ξ(ω+ω′)|², σ = 1.
pub fn coincidence_term_f(
    stokes: &FilterModes,
    anti_stokes: &FilterModes,
    couplings: &Couplings,
    form: XiForm,
) -> Result<f64> {
    let ms = stokes.retained();
    let ma = anti_stokes.retained();
    if !ms.grid().same_nodes(ma.grid()) {
        return Err(Error::domain("Stokes and anti-Stokes filters use different grids"));
    }
    let q = couplings.kerr;
    if q == 0.0 {
        return Ok(0.0);
    }
    let x = ms.grid().nodes();
    let kernel = match form {
        XiForm::Full => DMatrix::from_fn(x.len(), x.len(), |i, k| xi(x[i] + x[k], couplings)),
        XiForm::Leading => {
            DMatrix::from_fn(x.len(), x.len(), |i, k| (-(x[i] + x[k]).powi(2) / 4.0).exp())
        }
    };
    Ok(coincidence_with_kernel(&ms, &ma, &kernel, q))
}

fn coincidence_with_kernel(
    ms: &ModeDecomposition,
    ma: &ModeDecomposition,
    kernel: &DMatrix<f64>,
    q: f64,
) -> f64 {
    let ps = weighted(ms.grid(), ms.modes());
    let pa = weighted(ma.grid(), ma.modes());
    let m = ps.transpose() * kernel * pa;
    let mut total = 0.0;
    for (j, cs) in ms.eigenvalues().iter().enumerate() {
        for (k, ca) in ma.eigenvalues().iter().enumerate() {
            total += cs * ca * m[(j, k)].powi(2);
        }
    }
    q * q / (4.0 * PI) * total
}

pub fn tpi_visibility(s_s: f64, s_a: f64, r_s: f64, r_a: f64, f: f64) -> Result<f64> {
    for (name, v) in [("S_s", s_s), ("S_a", s_a), ("R_s", r_s), ("R_a", r_a), ("F", f)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
        }
    }
    let denom = f + 2.0 * (s_a + r_a) * (s_s + r_s);
    if denom <= 0.0 {
        return Err(Error::domain("visibility undefined: no coincidences and no noise"));
    }
    Ok((f / denom).clamp(0.0, 1.0))
}

/// Closed-form photon numbers without any filter, with n_T frozen at ∓B₀
/// and only the leading Gaussian of ξ in Ϝ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfilteredBudget {
    pub s: f64,
    pub r_stokes: f64,
    pub r_antistokes: f64,
    pub f: f64,
}

impl UnfilteredBudget {
    pub fn visibility(&self) -> Result<f64> {
        tpi_visibility(self.s, self.s, self.r_stokes, self.r_antistokes, self.f)
    }
}

/// (e^{−B²/2} − 1) + √(π/2)·B·erf(B/√2), B in units of σ.
pub(crate) fn open_coincidence_bracket(b: f64) -> f64 {
    ((-b * b / 2.0).exp() - 1.0) + (PI / 2.0).sqrt() * b * erf(b / 2f64.sqrt())
}

pub fn unfiltered_budget(params: &ExperimentParams, raman: &RamanModel) -> Result<UnfilteredBudget> {
    let c = params.couplings(raman)?;
    unfiltered_budget_with(params, &c)
}

pub fn unfiltered_budget_with(params: &ExperimentParams, c: &Couplings) -> Result<UnfilteredBudget> {
    let b = params.band_width_rel();
    let n_a = thermal_occupation(params.band_center, params.temperature)?;
    let n_s = thermal_occupation(-params.band_center, params.temperature)?;
    let q = c.kerr;
    let r_unit = PI.sqrt() * c.raman * b;
    Ok(UnfilteredBudget {
        s: unfiltered_pair_number(params),
        r_stokes: r_unit * n_s,
        r_antistokes: r_unit * n_a,
        f: 2.0 * PI * q * q * open_coincidence_bracket(b),
    })
}

/// Weak-pump limit of the unfiltered closed-form visibility for gain ratio r:
/// 1 / (1 + r²·(B/σ)²·n_T(−B₀)n_T(B₀)/bracket).
pub fn saturated_open_visibility(params: &ExperimentParams, gain_ratio: f64) -> Result<f64> {
    let geometry = open_noise_geometry(params.band_center, params)?;
    Ok(1.0 / (1.0 + gain_ratio * gain_ratio * geometry))
}

pub fn qber_from_visibility(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("visibility {v} outside [0, 1]")));
    }
    Ok((1.0 - v) / 2.0)
}

/// p_pair·max(0, 1 − f_ec·H₂(e) − H₂(e)), times `q_basis` when given.
pub fn key_fraction(qber: f64, p_pair: f64, f_ec: f64, q_basis: Option<f64>) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_pair) {
        return Err(Error::domain(format!("pair probability {p_pair} outside [0, 1]")));
    }
    if !(f_ec >= 1.0) {
        return Err(Error::domain(format!("error-correction factor {f_ec} below 1")));
    }
    let h = binary_entropy(qber)?;
    let bracket = (1.0 - f_ec * h - h).max(0.0);
    Ok(q_basis.unwrap_or(1.0) * p_pair * bracket)
}

/// Filter arrangement applied identically to both arms.
#[derive(Debug, Clone)]
pub enum FilterChoice {
    Open,
    /// Single-mode filter on the fundamental SFWM mode at the operating point.
    IdealMatched,
    Practical(FilterSpec),
}

impl FilterChoice {
    pub fn describe(&self) -> String {
        match self {
            FilterChoice::Open => "open (no filter)".into(),
            FilterChoice::IdealMatched => "ideal single-mode filter matched to psi0".into(),
            FilterChoice::Practical(spec) => spec.describe(),
        }
    }
}

/// Filter modes for `choice` at the operating point. The SFWM decomposition
/// is returned alongside when it was needed.
pub fn build_filter(
    choice: &FilterChoice,
    params: &ExperimentParams,
    couplings: &Couplings,
    settings: &EvalSettings,
) -> Result<(FilterModes, Option<ModeDecomposition>)> {
    match choice {
        FilterChoice::Open => Ok((FilterModes::open(&settings.band_grid(params)?), None)),
        FilterChoice::IdealMatched => {
            let sfwm = sfwm_modes_with(params, couplings, settings.n_points)?;
            let filter = ideal_matched_filter(&sfwm.mode(0), sfwm.grid())?;
            Ok((filter, Some(sfwm)))
        }
        FilterChoice::Practical(spec) => {
            let band = settings.band_grid(params)?;
            if !spec.spectral.grid().same_nodes(&band) {
                return Err(Error::domain(
                    "practical filter profile is not sampled on the evaluation grid",
                ));
            }
            Ok((spec.modes()?, None))
        }
    }
}

/// Full report for one operating point with the same filter on both arms.
pub fn evaluate(
    params: &ExperimentParams,
    raman: &RamanModel,
    choice: &FilterChoice,
    settings: &EvalSettings,
    qkd: &QkdSettings,
) -> Result<VisibilityReport> {
    params.validate()?;
    let lookup = raman.gain_ratio(params.band_center)?;
    let couplings = params.couplings_with_ratio(lookup.ratio);
    let (filter, _) = build_filter(choice, params, &couplings, settings)?;
    let mut report = evaluate_with_filters(params, &couplings, &filter, &filter, settings, qkd)?;
    report.metadata.gain_ratio = lookup.ratio;
    report.metadata.filter = choice.describe();
    Ok(report)
}

pub fn evaluate_with_filters(
    params: &ExperimentParams,
    couplings: &Couplings,
    stokes: &FilterModes,
    anti_stokes: &FilterModes,
    settings: &EvalSettings,
    qkd: &QkdSettings,
) -> Result<VisibilityReport> {
    let outer = settings.outer_grid(params)?;
    let s_stokes = pair_term_s(stokes, params);
    let s_antistokes = pair_term_s(anti_stokes, params);
    let r_stokes =
        raman_term_r(stokes, params, Band::Stokes, couplings, &outer, Occupation::Exact)?;
    let r_antistokes =
        raman_term_r(anti_stokes, params, Band::AntiStokes, couplings, &outer, Occupation::Exact)?;
    let f = coincidence_term_f(stokes, anti_stokes, couplings, XiForm::Full)?;
    let visibility = tpi_visibility(s_stokes, s_antistokes, r_stokes, r_antistokes, f)?;
    let qber = qber_from_visibility(visibility)?;
    let p_pair = unfiltered_pair_number(params);
    let q_basis = qkd.apply_q_basis.then_some(qkd.q_basis);
    let key = key_fraction(qber, p_pair, qkd.f_ec, q_basis)?;
    Ok(VisibilityReport {
        s_stokes,
        s_antistokes,
        r_stokes,
        r_antistokes,
        f_coincidence: f,
        visibility,
        qber,
        key_fraction_per_pulse: key,
        metadata: ReportMetadata {
            params: *params,
            gain_ratio: if couplings.kerr > 0.0 { couplings.raman / couplings.kerr } else { 0.0 },
            p_pair,
            filter: String::new(),
        },
    })
}

/// Weak-pump visibility with the ideal matched filter, evaluated at
/// q = 1e−4 and cross-checked against q = 5e−5.
pub fn saturated_matched_visibility(
    params: &ExperimentParams,
    gain_ratio: f64,
    settings: &EvalSettings,
) -> Result<f64> {
    let at = |q: f64| -> Result<f64> {
        let p = params.with_kerr_strength(q);
        let c = p.couplings_with_ratio(gain_ratio);
        let (filter, _) = build_filter(&FilterChoice::IdealMatched, &p, &c, settings)?;
        let r = evaluate_with_filters(&p, &c, &filter, &filter, settings, &QkdSettings::default())?;
        Ok(r.visibility)
    };
    let v = at(SATURATION_KERR)?;
    let check = at(SATURATION_KERR_CHECK)?;
    if (v - check).abs() >= 1e-3 {
        return Err(Error::Numerical(format!(
            "saturated visibility not converged: {v} at q = {SATURATION_KERR}, {check} at q = {SATURATION_KERR_CHECK}"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::detuning_to_angular;

    fn reference() -> (ExperimentParams, RamanModel) {
        (ExperimentParams::reference_point(), RamanModel::calibrated_default())
    }

    #[test]
    fn visibility_limits() {
        assert_eq!(tpi_visibility(0.0, 0.0, 0.0, 0.0, 0.3).unwrap(), 1.0);
        assert_eq!(tpi_visibility(0.1, 0.1, 0.2, 0.2, 0.0).unwrap(), 0.0);
        assert!(tpi_visibility(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(tpi_visibility(-0.1, 0.0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn hand_evaluated_operating_point() {
        // σ = 1, q = 0.01127, r = 0.032, B = 10, Δ = 10 nm, T = 300 K.
        let mut p = ExperimentParams::reference_point();
        p = p.with_kerr_strength(0.01127);
        let b = unfiltered_budget_with(&p, &p.couplings_with_ratio(0.032)).unwrap();
        assert!((b.f - 9.20e-3).abs() < 0.01e-3, "{}", b.f);
        assert!((b.s - 0.01).abs() < 1e-4);
        assert!((b.r_antistokes - 0.0284).abs() < 3e-4, "{}", b.r_antistokes);
        assert!((b.r_stokes - 0.0348).abs() < 5e-4, "{}", b.r_stokes);
        let v = b.visibility().unwrap();
        assert!((v - 0.72).abs() < 0.01, "{v}");
    }

    #[test]
    fn qber_and_key() {
        assert!((qber_from_visibility(0.72).unwrap() - 0.14).abs() < 1e-15);
        assert!((qber_from_visibility(0.88).unwrap() - 0.06).abs() < 1e-15);
        assert_eq!(qber_from_visibility(1.0).unwrap(), 0.0);
        assert!(qber_from_visibility(1.1).is_err());

        assert_eq!(key_fraction(0.14, 0.01, 1.22, None).unwrap(), 0.0);
        assert_eq!(key_fraction(0.14, 0.3, 1.22, None).unwrap(), 0.0);
        assert_eq!(key_fraction(0.0, 0.01, 1.22, None).unwrap(), 0.01);
        let k = key_fraction(0.06, 0.01, 1.22, None).unwrap();
        let h = binary_entropy(0.06).unwrap();
        assert!((k - 0.01 * (1.0 - 2.22 * h)).abs() < 1e-15);
        assert!((k - 0.0027).abs() < 0.0001);
        let halved = key_fraction(0.06, 0.01, 1.22, Some(0.5)).unwrap();
        assert!((halved - 0.5 * k).abs() < 1e-15);
        let f1 = key_fraction(0.06, 0.01, 1.0, None).unwrap();
        assert!((f1 - 0.01 * (1.0 - 2.0 * h)).abs() < 1e-15);
        assert!(key_fraction(0.06, 0.01, 0.9, None).is_err());
    }

    #[test]
    fn open_filter_matches_closed_forms() {
        let (p, raman) = reference();
        let c = p.couplings(&raman).unwrap();
        let settings = EvalSettings::default();
        let open = FilterModes::open(&settings.band_grid(&p).unwrap());
        let outer = settings.outer_grid(&p).unwrap();
        let budget = unfiltered_budget_with(&p, &c).unwrap();

        let s = pair_term_s(&open, &p);
        assert!((s - budget.s).abs() < 1e-3 * budget.s);
        for (band, want) in [(Band::Stokes, budget.r_stokes), (Band::AntiStokes, budget.r_antistokes)] {
            let r = raman_term_r(&open, &p, band, &c, &outer, Occupation::Frozen).unwrap();
            assert!((r - want).abs() < 1e-3 * want, "{band:?}: {r} vs {want}");
        }
        let f = coincidence_term_f(&open, &open, &c, XiForm::Leading).unwrap();
        assert!((f - budget.f).abs() < 1e-3 * budget.f);
    }

    #[test]
    fn terms_vanish_without_sources() {
        let (p, _) = reference();
        let settings = EvalSettings::default();
        let open = FilterModes::open(&settings.band_grid(&p).unwrap());
        let outer = settings.outer_grid(&p).unwrap();
        let dark = p.with_kerr_strength(0.0);
        assert_eq!(pair_term_s(&open, &dark), 0.0);
        let no_raman = p.couplings_with_ratio(0.0);
        for band in [Band::Stokes, Band::AntiStokes] {
            assert_eq!(
                raman_term_r(&open, &p, band, &no_raman, &outer, Occupation::Exact).unwrap(),
                0.0
            );
        }
        let none = Couplings { kerr: 0.0, raman: 0.0 };
        assert_eq!(coincidence_term_f(&open, &open, &none, XiForm::Full).unwrap(), 0.0);
    }

    #[test]
    fn stokes_noise_exceeds_anti_stokes() {
        let (p, raman) = reference();
        let c = p.couplings(&raman).unwrap();
        let settings = EvalSettings::default();
        let open = FilterModes::open(&settings.band_grid(&p).unwrap());
        let outer = settings.outer_grid(&p).unwrap();
        let rs = raman_term_r(&open, &p, Band::Stokes, &c, &outer, Occupation::Exact).unwrap();
        let ra = raman_term_r(&open, &p, Band::AntiStokes, &c, &outer, Occupation::Exact).unwrap();
        assert!(rs > ra);
    }

    #[test]
    fn unpadded_outer_grid_rejected() {
        let (p, raman) = reference();
        let c = p.couplings(&raman).unwrap();
        let settings = EvalSettings { n_points: 51, padding: 2.0 };
        let open = FilterModes::open(&settings.band_grid(&p).unwrap());
        let outer = settings.outer_grid(&p).unwrap();
        assert!(raman_term_r(&open, &p, Band::Stokes, &c, &outer, Occupation::Exact).is_err());
    }

    #[test]
    fn matched_filter_selects_pairs() {
        let (p, raman) = reference();
        let settings = EvalSettings::default();
        let open = evaluate(&p, &raman, &FilterChoice::Open, &settings, &QkdSettings::default()).unwrap();
        let matched =
            evaluate(&p, &raman, &FilterChoice::IdealMatched, &settings, &QkdSettings::default())
                .unwrap();
        assert!(matched.s_stokes < open.s_stokes);
        assert!(matched.visibility > open.visibility);
        // F = 4π³ζ₀²q² for the single matched mode.
        let c = p.couplings(&raman).unwrap();
        let sfwm = sfwm_modes_with(&p, &c, settings.n_points).unwrap();
        let zeta0 = sfwm.eigenvalues()[0];
        let q = p.kerr_strength();
        let closed = 4.0 * PI.powi(3) * zeta0 * zeta0 * q * q;
        assert!((matched.f_coincidence - closed).abs() < 1e-6 * closed);
    }

    #[test]
    fn report_is_self_consistent() {
        let (p, raman) = reference();
        let r = evaluate(&p, &raman, &FilterChoice::IdealMatched, &EvalSettings::default(), &QkdSettings::default())
            .unwrap();
        let v = r.f_coincidence
            / (r.f_coincidence + 2.0 * (r.s_antistokes + r.r_antistokes) * (r.s_stokes + r.r_stokes));
        assert!((v - r.visibility).abs() < 1e-12);
        assert!((r.qber - (1.0 - r.visibility) / 2.0).abs() < 1e-15);
        assert!((r.metadata.p_pair - 0.01).abs() < 1e-12);
    }

    #[test]
    fn saturated_open_matches_calibration() {
        let (p, raman) = reference();
        let d = detuning_to_angular(1538.7, 10.0).unwrap();
        let r = raman.gain_ratio(d).unwrap().ratio;
        let v = saturated_open_visibility(&p.with_band_center(d), r).unwrap();
        assert!((v - 0.82).abs() < 1e-10);
    }

    #[test]
    fn budget_scaling() {
        let (p, raman) = reference();
        let b1 = unfiltered_budget(&p, &raman).unwrap();
        let mut p2 = p;
        p2.pump_energy *= 2.0;
        let b2 = unfiltered_budget(&p2, &raman).unwrap();
        assert!((b2.s / b1.s - 4.0).abs() < 1e-12);
        assert!((b2.f / b1.f - 4.0).abs() < 1e-12);
        assert!((b2.r_stokes / b1.r_stokes - 2.0).abs() < 1e-12);
        // Both carry A₀⁴, so S/Ϝ is independent of the pump.
        assert!((b2.s / b2.f - b1.s / b1.f).abs() < 1e-12 * b1.s / b1.f);

        let mut narrow = p;
        narrow.band_width = 1e-6 * p.sigma;
        let b = unfiltered_budget(&narrow, &raman).unwrap();
        assert!(b.s < 1e-8 && b.r_stokes < 1e-6 && b.f < 1e-12);
    }
}
