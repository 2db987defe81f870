//! Quadrature grids over spectral bands.
//!
//! Grid nodes are offsets relative to a band center. The frequency unit is
//! whatever the caller works in; the model code uses units of the pump
//! width σ.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    GaussLegendre,
    Simpson,
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    band_center: f64,
    lower: f64,
    upper: f64,
    padding: f64,
}

impl Grid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Absolute detuning of the band center from the pump.
    pub fn band_center(&self) -> f64 {
        self.band_center
    }

    /// Closed interval covered by the rule, in relative offsets.
    pub fn interval(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// Extra support on each side beyond the nominal band.
    pub fn padding(&self) -> f64 {
        self.padding
    }

    pub fn with_band_center(mut self, center: f64) -> Self {
        self.band_center = center;
        self
    }

    /// Index of the node closest to zero offset.
    pub fn center_index(&self) -> usize {
        self.nodes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Same nodes and weights, compared to round-off.
    pub fn same_nodes(&self, other: &Grid) -> bool {
        self.len() == other.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

/// Grid spanning `[-width/2 - padding, width/2 + padding]` around `center`.
pub fn make_band_grid(
    center: f64,
    width: f64,
    padding: f64,
    n_points: usize,
    rule: QuadratureRule,
) -> Result<Grid> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::domain(format!("band width must be positive, got {width}")));
    }
    if !(padding >= 0.0) || !padding.is_finite() {
        return Err(Error::domain(format!("padding must be non-negative, got {padding}")));
    }
    let lower = -0.5 * width - padding;
    let upper = 0.5 * width + padding;
    let (nodes, weights) = match rule {
        QuadratureRule::GaussLegendre => {
            if n_points < 2 {
                return Err(Error::domain("Gauss-Legendre needs at least 2 points"));
            }
            let (x, w) = gauss_legendre(n_points);
            let half = 0.5 * (upper - lower);
            let mid = 0.5 * (upper + lower);
            (
                x.iter().map(|&t| mid + half * t).collect(),
                w.iter().map(|&v| half * v).collect(),
            )
        }
        QuadratureRule::Simpson => {
            if n_points < 3 || n_points.is_multiple_of(2) {
                return Err(Error::domain(format!(
                    "Simpson's rule needs an odd count >= 3, got {n_points}"
                )));
            }
            let h = (upper - lower) / (n_points - 1) as f64;
            let nodes = (0..n_points).map(|i| lower + h * i as f64).collect();
            let weights = (0..n_points)
                .map(|i| {
                    let c = if i == 0 || i == n_points - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 3.0
                })
                .collect();
            (nodes, weights)
        }
        QuadratureRule::Trapezoid => {
            if n_points < 2 {
                return Err(Error::domain("trapezoid rule needs at least 2 points"));
            }
            let h = (upper - lower) / (n_points - 1) as f64;
            let nodes = (0..n_points).map(|i| lower + h * i as f64).collect();
            let weights = (0..n_points)
                .map(|i| if i == 0 || i == n_points - 1 { 0.5 * h } else { h })
                .collect();
            (nodes, weights)
        }
    };
    Ok(Grid {
        nodes,
        weights,
        band_center: center,
        lower,
        upper,
        padding,
    })
}

/// Σ wᵢ·fᵢ.
pub fn integrate(grid: &Grid, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::domain(format!(
            "{} samples for a {}-node grid",
            samples.len(),
            grid.len()
        )));
    }
    Ok(grid.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
///
/// Newton iteration on Pₙ from the Tricomi initial guess; symmetric pairs are
/// filled from one half.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}
