//! Quadrature against independent references: the unfiltered closed forms,
//! the single-mode closed form, and a brute-force Jacobi eigensolver.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use dedsim_core::filters::{super_gaussian, FilterModes, FilterSpec};
use dedsim_core::modes::decompose_kernel;
use dedsim_core::quadrature::Grid;
use dedsim_core::sfwm::{sfwm_modes_with, xi_kernel, Couplings, ExperimentParams};
use dedsim_core::visibility::{
    coincidence_term_f, pair_term_s, raman_term_r, unfiltered_budget_with, Band, EvalSettings,
    FilterChoice, Occupation, XiForm, build_filter,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn worst_open_error(p: &ExperimentParams, r: f64, n: usize) -> f64 {
    let c = p.couplings_with_ratio(r);
    let settings = EvalSettings { n_points: n, ..EvalSettings::default() };
    let open = FilterModes::open(&settings.band_grid(p).unwrap());
    let outer = settings.outer_grid(p).unwrap();
    let b = unfiltered_budget_with(p, &c).unwrap();
    let rs = raman_term_r(&open, p, Band::Stokes, &c, &outer, Occupation::Frozen).unwrap();
    let ra = raman_term_r(&open, p, Band::AntiStokes, &c, &outer, Occupation::Frozen).unwrap();
    [
        rel(pair_term_s(&open, p), b.s),
        rel(rs, b.r_stokes),
        rel(ra, b.r_antistokes),
        rel(coincidence_term_f(&open, &open, &c, XiForm::Leading).unwrap(), b.f),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[test]
fn open_filter_closed_forms_at_reference_point() {
    let p = ExperimentParams::reference_point();
    assert!(worst_open_error(&p, 0.032, 201) < 1e-3);
    assert!(worst_open_error(&p, 0.032, 401) < 1e-5);
}

#[test]
fn open_filter_closed_forms_off_reference() {
    // Narrow pump, wide band, cold fiber: grids have to stretch further.
    let p = ExperimentParams::from_nm(2.0, 0.5, 77.0, 1550.0, 0.3, 12.0, 6.0)
        .unwrap()
        .with_pair_probability(0.02)
        .unwrap();
    assert!(p.band_width_rel() > 19.0);
    assert!(worst_open_error(&p, 0.05, 201) < 1e-3);
    assert!(worst_open_error(&p, 0.05, 401) < 1e-5);
}

#[test]
fn matched_filter_single_mode_closed_form() {
    let p = ExperimentParams::reference_point();
    let c = p.couplings_with_ratio(0.032);
    let settings = EvalSettings::default();
    let (filter, sfwm) = build_filter(&FilterChoice::IdealMatched, &p, &c, &settings).unwrap();
    let zeta0 = sfwm.unwrap().eigenvalues()[0];
    let q = p.kerr_strength();
    let f = coincidence_term_f(&filter, &filter, &c, XiForm::Full).unwrap();
    assert!(rel(f, 4.0 * PI.powi(3) * zeta0 * zeta0 * q * q) < 1e-6);
}

/// Cyclic Jacobi rotations on a dense symmetric matrix; eigenvalues only.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    ev
}

fn symmetrized(grid: &Grid, k: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    let w = grid.weights();
    (0..grid.len())
        .map(|i| (0..grid.len()).map(|j| w[i].sqrt() * k[(i, j)] * w[j].sqrt() / (2.0 * PI)).collect())
        .collect()
}

#[test]
fn sfwm_eigenvalues_match_jacobi() {
    let p = ExperimentParams::reference_point();
    let c = Couplings { kerr: p.kerr_strength(), raman: 0.032 * p.kerr_strength() };
    let grid = p.band_grid(61).unwrap();
    let k = xi_kernel(&grid, &c);
    let ours = decompose_kernel(&grid, &k).unwrap();
    let theirs = jacobi_eigenvalues(symmetrized(&grid, &k));
    for j in 0..12 {
        assert!((ours.eigenvalues()[j] - theirs[j]).abs() < 1e-12, "mode {j}");
    }
    // Same modes as the full pipeline on the same grid.
    let via = sfwm_modes_with(&p, &c, 61).unwrap();
    assert_eq!(via.eigenvalues()[0], ours.eigenvalues()[0]);
}

#[test]
fn filter_eigenvalues_match_jacobi() {
    let p = ExperimentParams::reference_point();
    let grid = EvalSettings { n_points: 61, ..EvalSettings::default() }.band_grid(&p).unwrap();
    let spec = FilterSpec::new(super_gaussian(6, 3.0, &grid).unwrap(), 2.0).unwrap();
    let k = spec.kernel().unwrap();
    let ours = spec.modes().unwrap();
    let theirs = jacobi_eigenvalues(symmetrized(&grid, &k));
    for j in 0..10 {
        assert!((ours.chi()[j] - theirs[j].max(0.0)).abs() < 1e-12, "mode {j}");
    }
}
