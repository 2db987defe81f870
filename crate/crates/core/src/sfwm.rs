//! Photon-pair generation by spontaneous four-wave mixing: experiment
//! parameters, the joint-spectral kernel ξ(ω+ω′) and its Schmidt modes.
//!
//! All model frequencies are measured in units of the pump width σ. The only
//! combinations of γ, L, A₀² and g_r that enter the photon numbers are the
//! Kerr strength q = γ·L·A₀²·σ and the Raman strength g_r·L·A₀²·σ = r·q with
//! r = g_r/γ.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::modes::{decompose_kernel, ModeDecomposition};
use crate::quadrature::{make_band_grid, Grid, QuadratureRule};
use crate::raman::RamanModel;
use crate::units::detuning_to_angular;

pub const REFERENCE_GAMMA: f64 = 1.6;
pub const REFERENCE_LENGTH_KM: f64 = 0.3;
pub const REFERENCE_TEMPERATURE: f64 = 300.0;
pub const REFERENCE_LAMBDA_NM: f64 = 1538.7;
pub const REFERENCE_SIGMA_NM: f64 = 0.5;
pub const REFERENCE_B0_NM: f64 = 10.0;
pub const REFERENCE_BAND_NM: f64 = 5.0;
pub const REFERENCE_P_PAIR: f64 = 0.01;

/// Largest Kerr strength for which the perturbative expressions are used.
pub const MAX_KERR_STRENGTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    /// SFWM coefficient γ, 1/(W·km).
    pub gamma: f64,
    /// Effective fiber length L, km.
    pub length_km: f64,
    /// Fiber temperature, K.
    pub temperature: f64,
    pub lambda_pump_nm: f64,
    /// Pump spectral width σ, rad/s.
    pub sigma: f64,
    /// Stokes/anti-Stokes detuning magnitude B₀, rad/s.
    pub band_center: f64,
    /// Collection bandwidth B, rad/s.
    pub band_width: f64,
    /// Squared pump spectral amplitude A₀², in units where γ·L·A₀²·σ is
    /// dimensionless (W·s with γ in 1/(W·km) and L in km).
    pub pump_energy: f64,
}

/// Dimensionless strengths of the three processes at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// q = γ·L·A₀²·σ.
    pub kerr: f64,
    /// g_r(B₀)·L·A₀²·σ.
    pub raman: f64,
}

impl ExperimentParams {
    /// Parameters from wavelength-domain inputs (nm), without pump energy.
    pub fn from_nm(
        gamma: f64,
        length_km: f64,
        temperature: f64,
        lambda_pump_nm: f64,
        sigma_nm: f64,
        band_center_nm: f64,
        band_width_nm: f64,
    ) -> Result<Self> {
        let p = ExperimentParams {
            gamma,
            length_km,
            temperature,
            lambda_pump_nm,
            sigma: detuning_to_angular(lambda_pump_nm, sigma_nm)?,
            band_center: detuning_to_angular(lambda_pump_nm, band_center_nm)?,
            band_width: detuning_to_angular(lambda_pump_nm, band_width_nm)?,
            pump_energy: 0.0,
        };
        Ok(p)
    }

    /// The fiber, pump and band parameters of the reference operating point,
    /// with the pump set for a pair probability of 0.01.
    pub fn reference_point() -> Self {
        let p = Self::from_nm(
            REFERENCE_GAMMA,
            REFERENCE_LENGTH_KM,
            REFERENCE_TEMPERATURE,
            REFERENCE_LAMBDA_NM,
            REFERENCE_SIGMA_NM,
            REFERENCE_B0_NM,
            REFERENCE_BAND_NM,
        )
        .expect("reference parameters are valid");
        p.with_pair_probability(REFERENCE_P_PAIR)
            .expect("reference pair probability is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("length_km", self.length_km),
            ("temperature", self.temperature),
            ("lambda_pump_nm", self.lambda_pump_nm),
            ("sigma", self.sigma),
            ("band_center", self.band_center),
            ("band_width", self.band_width),
            ("pump_energy", self.pump_energy),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.band_center - 0.5 * self.band_width <= 0.0 {
            return Err(Error::domain(
                "collection bands overlap the pump: need band_center > band_width/2",
            ));
        }
        let q = self.kerr_strength();
        if q >= MAX_KERR_STRENGTH {
            return Err(Error::domain(format!(
                "Kerr strength q = {q:.4} is outside the perturbative regime (< {MAX_KERR_STRENGTH})"
            )));
        }
        Ok(())
    }

    /// q = γ·L·A₀²·σ.
    pub fn kerr_strength(&self) -> f64 {
        self.gamma * self.length_km * self.pump_energy * self.sigma
    }

    /// Band width B/σ.
    pub fn band_width_rel(&self) -> f64 {
        self.band_width / self.sigma
    }

    /// Band center B₀/σ.
    pub fn band_center_rel(&self) -> f64 {
        self.band_center / self.sigma
    }

    pub fn couplings(&self, raman: &RamanModel) -> Result<Couplings> {
        let ratio = raman.gain_ratio(self.band_center)?.ratio;
        Ok(self.couplings_with_ratio(ratio))
    }

    pub fn couplings_with_ratio(&self, gain_ratio: f64) -> Couplings {
        let kerr = self.kerr_strength();
        Couplings {
            kerr,
            raman: gain_ratio * kerr,
        }
    }

    /// Sets A₀² to give a Kerr strength `q`.
    pub fn with_kerr_strength(mut self, q: f64) -> Self {
        self.pump_energy = q / (self.gamma * self.length_km * self.sigma);
        self
    }

    pub fn with_pair_probability(self, p_pair: f64) -> Result<Self> {
        let a0sq = pair_probability_to_amplitude(p_pair, &self)?;
        Ok(ExperimentParams {
            pump_energy: a0sq,
            ..self
        })
    }

    pub fn with_band_center(mut self, band_center: f64) -> Self {
        self.band_center = band_center;
        self
    }

    /// Relative-offset quadrature grid over one collection band (no padding).
    pub fn band_grid(&self, n_points: usize) -> Result<Grid> {
        make_band_grid(
            self.band_center_rel(),
            self.band_width_rel(),
            0.0,
            n_points,
            QuadratureRule::GaussLegendre,
        )
    }
}

/// ξ(x) = e^{−x²/4} − (π/√2)·g_rLA₀²σ²·e^{−x²/8} + (2π²/√3)·γ²L²A₀⁴σ⁴·e^{−x²/12},
/// with `x` the frequency sum in units of σ.
pub fn xi(x: f64, c: &Couplings) -> f64 {
    let x2 = x * x;
    (-x2 / 4.0).exp() - PI / 2f64.sqrt() * c.raman * (-x2 / 8.0).exp()
        + 2.0 * PI * PI / 3f64.sqrt() * c.kerr * c.kerr * (-x2 / 12.0).exp()
}

/// Samples ξ(ωᵢ+ωₖ) on a band grid.
pub fn xi_kernel(grid: &Grid, c: &Couplings) -> DMatrix<f64> {
    let x = grid.nodes();
    DMatrix::from_fn(x.len(), x.len(), |i, k| xi(x[i] + x[k], c))
}

/// Schmidt modes (ζⱼ, ψⱼ) of ξ(ω+ω′) over the Stokes × anti-Stokes band pair.
///
/// Both windows share one relative grid; the absolute centers ∓B₀ cancel in
/// the frequency sum. ζ keeps its sign, so ζ₀ is the leading-|ζ| value.
pub fn sfwm_modes(
    params: &ExperimentParams,
    raman: &RamanModel,
    n_points: usize,
) -> Result<ModeDecomposition> {
    let c = params.couplings(raman)?;
    sfwm_modes_with(params, &c, n_points)
}

pub fn sfwm_modes_with(
    params: &ExperimentParams,
    c: &Couplings,
    n_points: usize,
) -> Result<ModeDecomposition> {
    let grid = params.band_grid(n_points)?;
    decompose_kernel(&grid, &xi_kernel(&grid, c))
}

/// Pump energy A₀² for which the unfiltered per-pulse pair number
/// S = √(2π)·π·(γL)²·A₀⁴·σ³·B equals `p_pair`.
pub fn pair_probability_to_amplitude(p_pair: f64, params: &ExperimentParams) -> Result<f64> {
    if !(p_pair > 0.0 && p_pair < 0.1) {
        return Err(Error::domain(format!("pair probability {p_pair} outside (0, 0.1)")));
    }
    let q2 = p_pair / ((2.0 * PI).sqrt() * PI * params.band_width_rel());
    Ok(q2.sqrt() / (params.gamma * params.length_km * params.sigma))
}

/// S = √(2π)·π·q²·B/σ: unfiltered per-pulse pair number in one band.
pub fn unfiltered_pair_number(params: &ExperimentParams) -> f64 {
    let q = params.kerr_strength();
    (2.0 * PI).sqrt() * PI * q * q * params.band_width_rel()
}
