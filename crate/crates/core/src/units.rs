//! Physical constants, wavelength/frequency conversion and the small special
//! functions shared by the rest of the crate.
//!
//! Frequencies are angular (rad/s) everywhere; wavelengths in nanometres are
//! converted at the boundary.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// CODATA 2018 exact/recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light in vacuum, m/s.
    pub c: f64,
    /// Reduced Planck constant, J·s.
    pub h_bar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    c: 299_792_458.0,
    h_bar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
};

/// Smallest |ω| (rad/s) at which the thermal occupation is evaluated.
pub const OMEGA_MIN: f64 = 1e6;

/// Angular-frequency offset Δω = 2πcΔλ/λ² of a detuning `delta_lambda_nm`
/// from the pump at `lambda_pump_nm`. Positive Δλ maps to positive Δω.
pub fn detuning_to_angular(lambda_pump_nm: f64, delta_lambda_nm: f64) -> Result<f64> {
    if !(lambda_pump_nm > 0.0) || !lambda_pump_nm.is_finite() {
        return Err(Error::domain(format!(
            "pump wavelength must be positive, got {lambda_pump_nm} nm"
        )));
    }
    let lp = lambda_pump_nm * 1e-9;
    Ok(2.0 * PI * CONSTANTS.c * delta_lambda_nm * 1e-9 / (lp * lp))
}

/// Inverse of [`detuning_to_angular`].
pub fn angular_to_detuning_nm(lambda_pump_nm: f64, delta_omega: f64) -> Result<f64> {
    let per_nm = detuning_to_angular(lambda_pump_nm, 1.0)?;
    Ok(delta_omega / per_nm)
}

/// Absolute vacuum wavelength (nm) of light offset by `delta_omega` from the pump.
pub fn wavelength_at_offset_nm(lambda_pump_nm: f64, delta_omega: f64) -> Result<f64> {
    if !(lambda_pump_nm > 0.0) {
        return Err(Error::domain("pump wavelength must be positive"));
    }
    let omega_p = 2.0 * PI * CONSTANTS.c / (lambda_pump_nm * 1e-9);
    let omega = omega_p + delta_omega;
    if !(omega > 0.0) {
        return Err(Error::domain("offset places the optical frequency below zero"));
    }
    Ok(2.0 * PI * CONSTANTS.c / omega * 1e9)
}

/// Thermal phonon occupation n_T(ω) = 1/(e^{ħ|ω|/k_BT} − 1) + θ(−ω).
///
/// `omega` is the signed detuning from the pump; the Stokes side (ω < 0)
/// carries the extra spontaneous term.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::domain(format!(
            "temperature must be positive, got {temperature} K"
        )));
    }
    if !(omega.abs() >= OMEGA_MIN) {
        return Err(Error::domain(format!(
            "|omega| = {:e} rad/s is below the {OMEGA_MIN:e} rad/s cutoff",
            omega.abs()
        )));
    }
    let x = CONSTANTS.h_bar * omega.abs() / (CONSTANTS.k_b * temperature);
    let bose = 1.0 / x.exp_m1();
    Ok(if omega < 0.0 { bose + 1.0 } else { bose })
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Error function (musl's implementation via libm, accurate to about 1 ulp).
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ten_nm() -> f64 {
        detuning_to_angular(1538.7, 10.0).unwrap()
    }

    #[test]
    fn detuning_examples() {
        assert_eq!(detuning_to_angular(1538.7, 0.0).unwrap(), 0.0);
        let w = ten_nm();
        // 2π·c·1e-8 / (1538.7e-9)² evaluated by hand
        let by_hand = 2.0 * PI * 299_792_458.0 * 1e-8 / (1538.7e-9f64 * 1538.7e-9);
        assert_relative_eq!(w, by_hand, max_relative = 1e-14);
        assert!((w - 7.96e12).abs() < 0.01e12);
        assert_relative_eq!(w / (2.0 * PI), 1.267e12, max_relative = 1e-3);
        assert_eq!(detuning_to_angular(1538.7, -10.0).unwrap(), -w);
        assert!(detuning_to_angular(0.0, 1.0).is_err());
        assert!(detuning_to_angular(-5.0, 1.0).is_err());
    }

    #[test]
    fn wavelength_round_trip() {
        let w = ten_nm();
        let back = angular_to_detuning_nm(1538.7, w).unwrap();
        assert_relative_eq!(back, 10.0, max_relative = 1e-12);
        // Blue side: shorter wavelength, approximately λ_p − Δλ.
        let lam = wavelength_at_offset_nm(1538.7, w).unwrap();
        assert!((lam - 1528.7).abs() < 0.1, "{lam}");
        let lam = wavelength_at_offset_nm(1538.7, -w).unwrap();
        assert!((lam - 1548.7).abs() < 0.1, "{lam}");
    }

    #[test]
    fn thermal_occupation_examples() {
        let t = 300.0;
        let w = 2f64.ln() * CONSTANTS.k_b * t / CONSTANTS.h_bar;
        assert_relative_eq!(thermal_occupation(w, t).unwrap(), 1.0, max_relative = 1e-14);

        let na = thermal_occupation(ten_nm(), t).unwrap();
        let ns = thermal_occupation(-ten_nm(), t).unwrap();
        assert!((na - 4.45).abs() < 0.01, "{na}");
        assert!((ns - 5.45).abs() < 0.01, "{ns}");
        assert_relative_eq!(ns - na, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn thermal_occupation_rejects_bad_input() {
        assert!(thermal_occupation(1e5, 300.0).is_err());
        assert!(thermal_occupation(0.0, 300.0).is_err());
        assert!(thermal_occupation(1e12, 0.0).is_err());
        assert!(thermal_occupation(1e12, -1.0).is_err());
        assert!(thermal_occupation(f64::NAN, 300.0).is_err());
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let h = binary_entropy(0.06).unwrap();
        let direct = -0.06 * 0.06f64.log2() - 0.94 * 0.94f64.log2();
        assert_relative_eq!(h, direct, max_relative = 1e-15);
        assert!((h - 0.3274).abs() < 1e-4);
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn erf_fixed_points() {
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erf(f64::INFINITY), 1.0);
        assert_eq!(erf(-7.5), -1.0);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
    }

    #[test]
    fn erf_against_quadrature() {
        // (2/√π)∫₀ˣ e^{−t²} dt with composite Simpson, independent of the library.
        for x in [0.3, 1.0, 2.2, 3.7, 5.5] {
            let n = 20_000;
            let h = x / n as f64;
            let f = |t: f64| (-t * t).exp();
            let mut s = f(0.0) + f(x);
            for i in 1..n {
                let t = i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
            }
            let integral = 2.0 / PI.sqrt() * s * h / 3.0;
            assert!((erf(x) - integral).abs() < 1e-12, "x = {x}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn occupation_branch_identity(w in 1e7f64..5e14, t in 1.0f64..2000.0) {
                let up = thermal_occupation(w, t).unwrap();
                let down = thermal_occupation(-w, t).unwrap();
                prop_assert!(((down - up) - 1.0).abs() <= 1e-12 * down.max(1.0));
            }

            #[test]
            fn occupation_monotone(w in 1e8f64..1e14, t in 10.0f64..1000.0) {
                let base = thermal_occupation(w, t).unwrap();
                prop_assert!(thermal_occupation(w * 1.01, t).unwrap() < base);
                prop_assert!(thermal_occupation(w, t * 1.01).unwrap() > base);
            }

            #[test]
            fn entropy_symmetric(p in 0.0f64..=1.0) {
                let a = binary_entropy(p).unwrap();
                let b = binary_entropy(1.0 - p).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }

            #[test]
            fn erf_odd_and_monotone(x in -6.5f64..6.5, dx in 1e-3f64..0.5) {
                prop_assert_eq!(erf(-x), -erf(x));
                prop_assert!(erf(x + dx) >= erf(x));
            }
        }
    }
}
