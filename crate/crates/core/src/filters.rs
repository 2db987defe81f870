//! Spectral-temporal filters: correlation kernels κ(ω,ω′), their eigenmodes
//! (χⱼ, φⱼ), and the concrete filters used by the model.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::modes::{decompose_kernel, mode_overlap, ModeDecomposition};
use crate::quadrature::Grid;
use crate::units::wavelength_at_offset_nm;

/// Attenuation written for transmissions below [`MIN_TRANSMISSION`].
pub const ATTENUATION_CAP_DB: f64 = 120.0;
pub const MIN_TRANSMISSION: f64 = 1e-6;

const NOISE_FLOOR: f64 = 1e-10;
const GAIN_TOLERANCE: f64 = 1e-6;

/// Amplitude transmission h(ω) sampled on a band grid.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    samples: Vec<f64>,
    grid: Grid,
    description: String,
}

impl SpectralProfile {
    pub fn new(samples: Vec<f64>, grid: Grid, description: impl Into<String>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} profile samples for a {}-node grid",
                samples.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::domain(format!(
                "transmission {v} at node {i} is outside [0, 1]"
            )));
        }
        Ok(SpectralProfile {
            samples,
            grid,
            description: description.into(),
        })
    }

    /// h ≡ 1.
    pub fn flat(grid: &Grid) -> Self {
        SpectralProfile {
            samples: vec![1.0; grid.len()],
            grid: grid.clone(),
            description: "flat".into(),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Pointwise multiplication by `s`, which must lie in [0, 1].
    pub fn scaled(&self, s: f64) -> Result<Self> {
        SpectralProfile::new(
            self.samples.iter().map(|h| h * s).collect(),
            self.grid.clone(),
            format!("{} x {s}", self.description),
        )
    }
}

/// Spectral profile followed by a Gaussian time shutter of intensity FWHM
/// `shutter_fwhm` (units of 1/σ).
#[derive(Debug, Clone)]
pub struct FilterSpec {
    pub spectral: SpectralProfile,
    pub shutter_fwhm: f64,
}

impl FilterSpec {
    pub fn new(spectral: SpectralProfile, shutter_fwhm: f64) -> Result<Self> {
        if !(shutter_fwhm > 0.0) || !shutter_fwhm.is_finite() {
            return Err(Error::domain(format!(
                "shutter FWHM must be positive, got {shutter_fwhm}"
            )));
        }
        Ok(FilterSpec {
            spectral,
            shutter_fwhm,
        })
    }

    pub fn kernel(&self) -> Result<DMatrix<f64>> {
        kappa_gaussian_shutter(&self.spectral, self.shutter_fwhm, self.spectral.grid())
    }

    pub fn modes(&self) -> Result<FilterModes> {
        filter_modes(&self.kernel()?, self.spectral.grid())
    }

    pub fn describe(&self) -> String {
        format!("{}; shutter T = {}/sigma", self.spectral.description(), self.shutter_fwhm)
    }
}

/// Filter eigenmodes φⱼ with pass probabilities χⱼ, sorted descending.
#[derive(Debug, Clone)]
pub struct FilterModes {
    decomposition: ModeDecomposition,
    chi0: f64,
    residual_sum: f64,
}

impl FilterModes {
    fn from_decomposition(decomposition: ModeDecomposition) -> Self {
        let chi = decomposition.eigenvalues();
        let chi0 = chi.first().copied().unwrap_or(0.0);
        let residual_sum = chi.iter().skip(1).sum();
        FilterModes {
            decomposition,
            chi0,
            residual_sum,
        }
    }

    /// No filtering at all: every grid mode passes with probability one.
    ///
    /// Uses the discrete delta basis φⱼ(ωᵢ) = √(2π/wⱼ)·δᵢⱼ, which is
    /// orthonormal and complete on the grid.
    pub fn open(grid: &Grid) -> Self {
        let n = grid.len();
        let w = grid.weights();
        let modes = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (2.0 * PI / w[i]).sqrt()
            } else {
                0.0
            }
        });
        let decomposition = ModeDecomposition::from_parts(vec![1.0; n], modes, grid.clone())
            .expect("square delta basis");
        FilterModes::from_decomposition(decomposition)
    }

    pub fn decomposition(&self) -> &ModeDecomposition {
        &self.decomposition
    }

    pub fn grid(&self) -> &Grid {
        self.decomposition.grid()
    }

    pub fn chi(&self) -> &[f64] {
        self.decomposition.eigenvalues()
    }

    pub fn chi0(&self) -> f64 {
        self.chi0
    }

    /// Σ_{j≥1} χⱼ.
    pub fn residual_sum(&self) -> f64 {
        self.residual_sum
    }

    pub fn fundamental(&self) -> Vec<f64> {
        self.decomposition.mode(0)
    }

    /// Modes with χⱼ > 1e−6·χ₀; the rest contribute below quadrature error.
    pub fn retained(&self) -> ModeDecomposition {
        let cut = 1e-6 * self.chi0;
        let count = self.chi().iter().take_while(|&&c| c > cut).count().max(1);
        self.decomposition.truncated(count)
    }
}

/// κ(ω,ω′) = h(ω)h(ω′)·F(ω−ω′) with F the cosine transform of a sampled,
/// even temporal intensity |f(t)|², integrated by the trapezoid rule.
#[derive(Debug, Clone)]
pub struct TemporalIntensity {
    pub start: f64,
    pub step: f64,
    pub samples: Vec<f64>,
}

impl TemporalIntensity {
    pub fn sample<F: Fn(f64) -> f64>(half_span: f64, count: usize, f: F) -> Self {
        let step = 2.0 * half_span / (count - 1) as f64;
        TemporalIntensity {
            start: -half_span,
            step,
            samples: (0..count).map(|k| f(-half_span + step * k as f64)).collect(),
        }
    }

    fn transform(&self, delta: f64) -> f64 {
        let n = self.samples.len();
        self.samples
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let t = self.start + self.step * k as f64;
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                w * v * (delta * t).cos()
            })
            .sum::<f64>()
            * self.step
    }
}

pub fn kappa_general(
    h: &SpectralProfile,
    f_t: &TemporalIntensity,
    grid: &Grid,
) -> Result<DMatrix<f64>> {
    check_profile_grid(h, grid)?;
    if f_t.samples.len() < 2 || !(f_t.step > 0.0) {
        return Err(Error::domain("temporal window needs at least two samples"));
    }
    let (lo, hi) = grid.interval();
    let max_delta = hi - lo;
    if f_t.step * max_delta >= PI {
        return Err(Error::domain(format!(
            "time step {} cannot resolve frequency differences up to {max_delta}",
            f_t.step
        )));
    }
    let x = grid.nodes();
    let hs = h.samples();
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = hs[i] * hs[j] * f_t.transform(x[i] - x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Closed form for a Gaussian shutter f(t) = e^{−2ln2·t²/T²}:
/// κ = (T/2)√(π/ln2)·h(ω)h(ω′)·e^{−(ω−ω′)²T²/(16 ln2)}.
pub fn kappa_gaussian_shutter(h: &SpectralProfile, t: f64, grid: &Grid) -> Result<DMatrix<f64>> {
    check_profile_grid(h, grid)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("shutter FWHM must be positive, got {t}")));
    }
    let x = grid.nodes();
    let hs = h.samples();
    let amp = 0.5 * t * (PI / LN_2).sqrt();
    let rate = t * t / (16.0 * LN_2);
    Ok(DMatrix::from_fn(x.len(), x.len(), |i, j| {
        let d = x[i] - x[j];
        amp * hs[i] * hs[j] * (-d * d * rate).exp()
    }))
}

fn check_profile_grid(h: &SpectralProfile, grid: &Grid) -> Result<()> {
    if !h.grid().same_nodes(grid) {
        return Err(Error::domain("spectral profile is sampled on a different grid"));
    }
    Ok(())
}

/// Eigenmodes of a filter kernel. Round-off negatives down to −1e−10 are
/// clamped to zero; anything above 1 + 1e−6 means the kernel claims gain.
pub fn filter_modes(kernel: &DMatrix<f64>, grid: &Grid) -> Result<FilterModes> {
    let d = decompose_kernel(grid, kernel)?;
    let mut chi = d.eigenvalues().to_vec();
    for c in chi.iter_mut() {
        if *c > 1.0 + GAIN_TOLERANCE {
            return Err(Error::Physicality { value: *c });
        }
        if *c < -NOISE_FLOOR {
            return Err(Error::domain(format!(
                "filter kernel is not positive semidefinite (eigenvalue {c:e})"
            )));
        }
        *c = c.clamp(0.0, 1.0);
    }
    let decomposition = ModeDecomposition::from_parts(chi, d.modes().clone(), d.grid().clone())?;
    Ok(FilterModes::from_decomposition(decomposition))
}

/// Single-mode filter passing exactly `psi0` with probability one.
pub fn ideal_matched_filter(psi0: &[f64], grid: &Grid) -> Result<FilterModes> {
    let norm = mode_overlap(psi0, psi0, grid)?;
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!(
            "matched mode must satisfy (1/2pi)∫|psi|^2 = 1, got {norm}"
        )));
    }
    let modes = DMatrix::from_column_slice(psi0.len(), 1, psi0);
    let decomposition = ModeDecomposition::from_parts(vec![1.0], modes, grid.clone())?;
    Ok(FilterModes::from_decomposition(decomposition))
}

pub const SUPER_GAUSSIAN_ORDERS: [u32; 5] = [2, 4, 6, 8, 10];

/// h(ω) = exp(−(ω/width)^order / 2).
pub fn super_gaussian(order: u32, width: f64, grid: &Grid) -> Result<SpectralProfile> {
    if !SUPER_GAUSSIAN_ORDERS.contains(&order) {
        return Err(Error::domain(format!(
            "super-Gaussian order must be one of {SUPER_GAUSSIAN_ORDERS:?}, got {order}"
        )));
    }
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::domain(format!("profile width must be positive, got {width}")));
    }
    let samples = grid.map(|w| (-0.5 * (w / width).powi(order as i32)).exp().clamp(0.0, 1.0));
    SpectralProfile::new(
        samples,
        grid.clone(),
        format!("super-Gaussian order {order}, width {width}/sigma"),
    )
}

fn attenuation_db(h: f64) -> f64 {
    if h < MIN_TRANSMISSION {
        ATTENUATION_CAP_DB
    } else {
        // Avoid writing "-0.000000" for unit transmission.
        (-20.0 * h.log10()).max(0.0)
    }
}

/// Writes the spectral profile as `wavelength_nm,attenuation_db` rows, one
/// per grid node, preceded by a `# shutter_fwhm_ps=` line.
///
/// Grid offsets are in units of σ (rad/s) relative to the grid's band
/// center, also in units of σ.
pub fn export_filter_profile(
    spec: &FilterSpec,
    lambda_pump_nm: f64,
    sigma: f64,
    path: &Path,
) -> Result<()> {
    let grid = spec.spectral.grid();
    let shutter_ps = spec.shutter_fwhm / sigma * 1e12;
    let mut out = String::new();
    writeln!(out, "# shutter_fwhm_ps={shutter_ps:.6}").unwrap();
    out.push_str("wavelength_nm,attenuation_db\n");
    for (x, h) in grid.nodes().iter().zip(spec.spectral.samples()) {
        let offset = (grid.band_center() + x) * sigma;
        let lambda = wavelength_at_offset_nm(lambda_pump_nm, offset)?;
        writeln!(out, "{lambda:.6},{:.6}", attenuation_db(*h)).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// A profile read back from [`export_filter_profile`] output.
#[derive(Debug, Clone)]
pub struct ImportedProfile {
    pub shutter_fwhm_ps: Option<f64>,
    pub wavelengths_nm: Vec<f64>,
    pub transmission: Vec<f64>,
}

pub fn import_filter_profile(path: &Path) -> Result<ImportedProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as u64,
        message,
    };
    let mut shutter = None;
    let mut header_seen = false;
    let mut wavelengths = Vec::new();
    let mut transmission = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("shutter_fwhm_ps=") {
                shutter = Some(
                    v.parse::<f64>()
                        .map_err(|e| parse_err(line_no, format!("bad shutter value: {e}")))?,
                );
            }
            continue;
        }
        if !header_seen {
            if line != "wavelength_nm,attenuation_db" {
                return Err(parse_err(line_no, format!("unexpected header `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let mut parts = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            parts
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| parse_err(line_no, format!("missing or invalid {name}")))
        };
        let lambda = next("wavelength")?;
        let db = next("attenuation")?;
        wavelengths.push(lambda);
        transmission.push(if db >= ATTENUATION_CAP_DB {
            0.0
        } else {
            10f64.powf(-db / 20.0)
        });
    }
    if !header_seen {
        return Err(parse_err(1, "missing header".into()));
    }
    Ok(ImportedProfile {
        shutter_fwhm_ps: shutter,
        wavelengths_nm: wavelengths,
        transmission,
    })
}
