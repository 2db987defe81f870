//! Numerical model of direct entanglement distillation by mode-matched
//! filtering of fiber-generated photon pairs.
//!
//! Internally all spectral variables are expressed in units of the pump
//! bandwidth σ. Parameters enter in SI (rad/s, K) or via nm helpers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distill;
pub mod error;
pub mod filters;
pub mod modes;
pub mod optimize;
pub mod quadrature;
pub mod raman;
pub mod sfwm;
pub mod units;
pub mod visibility;

pub use error::{Error, Result};
pub use filters::{FilterModes, FilterSpec, SpectralProfile};
pub use modes::ModeDecomposition;
pub use quadrature::{Grid, QuadratureRule};
pub use raman::RamanModel;
pub use sfwm::{Couplings, ExperimentParams};
pub use visibility::{EvalSettings, FilterChoice, QkdSettings, VisibilityReport};
