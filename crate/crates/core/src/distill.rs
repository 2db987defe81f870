//! Purification by mode-selective filtering alone.
//!
//! A pair state √F|S_e⟩ + √(1−F)|S_n⟩ passed through a filter matched to
//! |S_e⟩ keeps the entangled part and suppresses the noise part by the mode
//! overlap |⟨S_n|S_e⟩|, giving F′ = [1 + (1/F − 1)|⟨S_n|S_e⟩|²]⁻¹.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpureState {
    fidelity: f64,
    overlap: f64,
}

impl ImpureState {
    pub fn new(fidelity: f64, overlap: f64) -> Result<Self> {
        if !(fidelity > 0.0 && fidelity <= 1.0) {
            return Err(Error::domain(format!("fidelity {fidelity} outside (0, 1]")));
        }
        if !(0.0..=1.0).contains(&overlap) {
            return Err(Error::domain(format!("overlap {overlap} outside [0, 1]")));
        }
        Ok(ImpureState { fidelity, overlap })
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }
}

pub fn purified_fidelity(state: &ImpureState) -> f64 {
    let f = state.fidelity;
    let o2 = state.overlap * state.overlap;
    1.0 / (1.0 + (1.0 / f - 1.0) * o2)
}

/// Fidelity after a filter that is not matched to |S_e⟩ but chosen
/// orthogonal-ish to the noise, passing the signal with probability
/// `signal_pass`. The fidelity depends only on the overlap; the pass
/// probability is carried along as the throughput.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredOutcome {
    pub fidelity: f64,
    pub signal_pass: f64,
}

pub fn purified_with_throughput(state: &ImpureState, signal_pass: f64) -> Result<FilteredOutcome> {
    if !(signal_pass > 0.0 && signal_pass <= 1.0) {
        return Err(Error::domain(format!("signal pass probability {signal_pass} outside (0, 1]")));
    }
    Ok(FilteredOutcome {
        fidelity: purified_fidelity(state),
        signal_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pf(f: f64, o: f64) -> f64 {
        purified_fidelity(&ImpureState::new(f, o).unwrap())
    }

    #[test]
    fn worked_values() {
        assert_eq!(pf(0.5, 0.0), 1.0);
        assert!((pf(0.8, 1.0) - 0.8).abs() < 1e-15);
        assert!((pf(0.6, 0.5) - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(pf(1.0, 0.3), 1.0);
    }

    #[test]
    fn rejects_bad_states() {
        assert!(ImpureState::new(0.0, 0.5).is_err());
        assert!(ImpureState::new(1.2, 0.5).is_err());
        assert!(ImpureState::new(0.5, -0.1).is_err());
        assert!(ImpureState::new(0.5, f64::NAN).is_err());
        let s = ImpureState::new(0.5, 0.5).unwrap();
        assert!(purified_with_throughput(&s, 0.0).is_err());
        let out = purified_with_throughput(&s, 0.3).unwrap();
        assert_eq!(out.fidelity, pf(0.5, 0.5));
        assert_eq!(out.signal_pass, 0.3);
    }

    proptest! {
        #[test]
        fn never_worse(f in 1e-6f64..=1.0, o in 0.0f64..=1.0) {
            let p = pf(f, o);
            prop_assert!(p >= f - 1e-15);
            prop_assert!(p <= 1.0);
            if o < 1.0 && f < 1.0 {
                prop_assert!(p > f);
            }
        }

        #[test]
        fn monotone(f in 0.01f64..0.99, o in 0.01f64..0.99, d in 1e-3f64..0.01) {
            prop_assert!(pf(f, o + d) <= pf(f, o));
            prop_assert!(pf(f + d, o) >= pf(f, o));
        }

        #[test]
        fn two_filters_compose(f in 0.01f64..=1.0, o1 in 0.0f64..=1.0, o2 in 0.0f64..=1.0) {
            let once = pf(pf(f, o1), o2);
            let both = pf(f, o1 * o2);
            prop_assert!((once - both).abs() < 1e-12);
        }
    }
}
