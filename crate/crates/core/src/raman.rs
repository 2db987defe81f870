//! Raman gain ratio r = g_r/γ as a function of detuning.
//!
//! No measured curve is built in. The default model holds three anchors,
//! each chosen so that the closed-form unfiltered saturated visibility
//! matches a reference value at that detuning. Values between anchors are
//! linearly interpolated, which is a modeling choice.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::sfwm::ExperimentParams;
use crate::units::{detuning_to_angular, thermal_occupation};
use crate::visibility::saturated_open_visibility;

/// Reference (detuning nm, unfiltered saturated visibility) pairs the
/// built-in model is calibrated against.
pub const DEFAULT_CALIBRATION: [(f64, f64); 3] = [(5.0, 0.96), (10.0, 0.82), (14.0, 0.71)];

const RAD_PER_THZ: f64 = 2.0 * PI * 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RamanModel {
    /// (detuning rad/s, g_r/γ), detunings strictly increasing.
    anchors: Vec<(f64, f64)>,
}

/// Result of a gain lookup; `clamped` is set when the detuning fell outside
/// the anchor span and the nearest anchor value was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanLookup {
    pub ratio: f64,
    pub clamped: bool,
}

impl RamanModel {
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::domain("Raman model needs at least one anchor"));
        }
        for (i, &(d, r)) in anchors.iter().enumerate() {
            if !d.is_finite() || !r.is_finite() {
                return Err(Error::domain(format!("anchor {i} is not finite")));
            }
            if r < 0.0 {
                return Err(Error::domain(format!("anchor {i} has negative gain ratio {r}")));
            }
        }
        if anchors.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::domain("anchor detunings must be strictly increasing"));
        }
        Ok(RamanModel { anchors })
    }

    /// Detuning-independent ratio.
    pub fn constant(ratio: f64) -> Self {
        RamanModel {
            anchors: vec![(1.0, ratio.max(0.0))],
        }
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    /// Built-in model calibrated at [`DEFAULT_CALIBRATION`] with the
    /// reference fiber, pump and band parameters.
    pub fn calibrated_default() -> Self {
        static MODEL: OnceLock<RamanModel> = OnceLock::new();
        MODEL
            .get_or_init(|| {
                let params = ExperimentParams::reference_point();
                let anchors = DEFAULT_CALIBRATION
                    .iter()
                    .map(|&(nm, v)| {
                        let d = detuning_to_angular(params.lambda_pump_nm, nm)
                            .expect("positive pump wavelength");
                        let r = calibrate_raman(v, d, &params).expect("reference calibration");
                        (d, r)
                    })
                    .collect();
                RamanModel::new(anchors).expect("calibrated anchors are valid")
            })
            .clone()
    }

    /// g_r/γ at |detuning|.
    pub fn gain_ratio(&self, detuning: f64) -> Result<RamanLookup> {
        raman_gain_ratio(detuning, self)
    }
}

/// Piecewise-linear interpolation of the anchors at |detuning|, clamped to
/// the end anchors outside their span.
pub fn raman_gain_ratio(detuning: f64, raman: &RamanModel) -> Result<RamanLookup> {
    let a = &raman.anchors;
    let (first, last) = match (a.first(), a.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::domain("empty Raman model")),
    };
    let d = detuning.abs();
    if a.len() == 1 {
        return Ok(RamanLookup {
            ratio: first.1,
            clamped: d != first.0,
        });
    }
    if d <= first.0 {
        return Ok(RamanLookup {
            ratio: first.1,
            clamped: d < first.0,
        });
    }
    if d >= last.0 {
        return Ok(RamanLookup {
            ratio: last.1,
            clamped: d > last.0,
        });
    }
    let k = a.partition_point(|&(x, _)| x <= d);
    let (x0, y0) = a[k - 1];
    let (x1, y1) = a[k];
    let t = (d - x0) / (x1 - x0);
    Ok(RamanLookup {
        ratio: y0 + t * (y1 - y0),
        clamped: false,
    })
}

/// 2R_aR_s/Ϝ per unit r² for the unfiltered, weak-pump band pair:
/// (B/σ)²·n_T(−Δ)·n_T(+Δ) / [(e^{−B²/2σ²} − 1) + √(π/2)(B/σ)·erf(B/√2σ)].
pub(crate) fn open_noise_geometry(detuning: f64, params: &ExperimentParams) -> Result<f64> {
    let b = params.band_width_rel();
    let n_a = thermal_occupation(detuning.abs(), params.temperature)?;
    let n_s = thermal_occupation(-detuning.abs(), params.temperature)?;
    Ok(b * b * n_a * n_s / crate::visibility::open_coincidence_bracket(b))
}

/// Gain ratio r at which the closed-form unfiltered saturated visibility at
/// `detuning` equals `target_saturated_v`. Solved by bisection to 1e−10 in V.
pub fn calibrate_raman(
    target_saturated_v: f64,
    detuning: f64,
    params: &ExperimentParams,
) -> Result<f64> {
    if target_saturated_v > 1.0 {
        return Err(Error::Infeasible(format!(
            "saturated visibility {target_saturated_v} exceeds 1"
        )));
    }
    if !(target_saturated_v > 0.0) {
        return Err(Error::domain(format!(
            "saturated visibility must be positive, got {target_saturated_v}"
        )));
    }
    if target_saturated_v == 1.0 {
        return Ok(0.0);
    }
    let at = params.with_band_center(detuning.abs());
    let v_of = |r: f64| saturated_open_visibility(&at, r);

    let mut hi = 1e-3;
    while v_of(hi)? > target_saturated_v {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible(format!(
                "no gain ratio reaches saturated visibility {target_saturated_v}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = v_of(mid)?;
        if (v - target_saturated_v).abs() < 1e-12 {
            return Ok(mid);
        }
        // V falls as r grows.
        if v > target_saturated_v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let r = 0.5 * (lo + hi);
    if (v_of(r)? - target_saturated_v).abs() > 1e-10 {
        return Err(Error::Numerical("Raman calibration bisection stalled".into()));
    }
    Ok(r)
}

/// Reads a `detuning_thz,gr_over_gamma` table. Lines starting with `#` are
/// comments. Detunings must be strictly increasing.
pub fn load_raman_table(path: &Path) -> Result<RamanModel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["detuning_thz", "gr_over_gamma"] {
        return Err(parse_err(
            1,
            format!("expected header `detuning_thz,gr_over_gamma`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut anchors: Vec<(f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("invalid {name} `{raw}`")))
        };
        let thz = field(0, "detuning")?;
        let ratio = field(1, "gain ratio")?;
        if ratio < 0.0 {
            return Err(parse_err(line, format!("negative gain ratio {ratio}")));
        }
        if thz < 0.0 {
            return Err(parse_err(line, format!("negative detuning {thz}")));
        }
        let d = thz * RAD_PER_THZ;
        if let Some(&(prev, _)) = anchors.last() {
            if d <= prev {
                return Err(parse_err(
                    line,
                    "detunings must be strictly increasing".to_string(),
                ));
            }
        }
        anchors.push((d, ratio));
    }
    if anchors.is_empty() {
        return Err(parse_err(1, "table has no rows".to_string()));
    }
    RamanModel::new(anchors)
}

/// Writes a model in the format read by [`load_raman_table`].
pub fn write_raman_table(model: &RamanModel, path: &Path) -> Result<()> {
    let mut out = String::from("detuning_thz,gr_over_gamma\n");
    for &(d, r) in model.anchors() {
        out.push_str(&format!("{:.9},{:.9e}\n", d / RAD_PER_THZ, r));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
