//! Super-Gaussian filter design by derivative-free search.
//!
//! For each discrete order, Nelder–Mead runs over (width, T) in box
//! coordinates rescaled to [0, 1]. Points leaving the box are clamped.
//! The start simplex is fixed, so a search is fully deterministic.

use crate::error::{Error, Result};
use crate::filters::{super_gaussian, FilterModes, FilterSpec, SUPER_GAUSSIAN_ORDERS};
use crate::modes::mode_overlap;
use crate::raman::RamanModel;
use crate::sfwm::{sfwm_modes_with, Couplings, ExperimentParams};
use crate::visibility::{evaluate_with_filters, EvalSettings, QkdSettings};

pub const DEFAULT_MAX_ITERATIONS: usize = 200;
/// Starting shutter width, units of 1/σ.
pub const DEFAULT_SHUTTER: f64 = 3.5;

/// What the search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// TPI visibility at the configured pair probability.
    Visibility,
    /// |overlap| of the filter's fundamental mode with ψ₀.
    ModeOverlap,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Visibility => "visibility",
            Objective::ModeOverlap => "mode_overlap",
        }
    }
}

/// Search box. Widths in units of σ, shutter FWHM in units of 1/σ.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub orders: Vec<u32>,
    pub width: (f64, f64),
    pub shutter: (f64, f64),
}

impl SearchSpace {
    pub fn default_for(params: &ExperimentParams) -> Self {
        SearchSpace {
            orders: SUPER_GAUSSIAN_ORDERS.to_vec(),
            width: (0.5, params.band_width_rel()),
            shutter: (1.0, 10.0),
        }
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.orders = vec![order];
        self
    }

    pub fn with_shutter(mut self, t: f64) -> Self {
        self.shutter = (t, t);
        self
    }

    pub fn with_width(mut self, w: f64) -> Self {
        self.width = (w, w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(Error::domain("search space has no orders"));
        }
        for &o in &self.orders {
            if !SUPER_GAUSSIAN_ORDERS.contains(&o) {
                return Err(Error::domain(format!("super-Gaussian order {o} not in {SUPER_GAUSSIAN_ORDERS:?}")));
            }
        }
        for (name, (lo, hi)) in [("width", self.width), ("shutter", self.shutter)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::domain(format!("{name} range [{lo}, {hi}] is not a positive ordered interval")));
            }
        }
        Ok(())
    }

    fn free_dims(&self) -> Vec<usize> {
        let mut d = Vec::new();
        if self.width.1 > self.width.0 {
            d.push(0);
        }
        if self.shutter.1 > self.shutter.0 {
            d.push(1);
        }
        d
    }

    fn start(&self) -> [f64; 2] {
        let w = clamp_to(0.5 * (self.width.0 + self.width.1), self.width);
        let t = clamp_to(DEFAULT_SHUTTER, self.shutter);
        [w, t]
    }
}

fn clamp_to(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSettings {
    pub eval: EvalSettings,
    pub objective: Objective,
    pub max_iterations: usize,
    pub restarts: usize,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            eval: EvalSettings::default(),
            objective: Objective::Visibility,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedFilter {
    pub spec: FilterSpec,
    pub modes: FilterModes,
    pub order: u32,
    pub width: f64,
    pub shutter_fwhm: f64,
    pub objective: Objective,
    pub visibility: f64,
    pub overlap: f64,
    /// χ_s0·χ_a0 with identical arms.
    pub collection_fraction: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl OptimizedFilter {
    pub fn chi0(&self) -> f64 {
        self.modes.chi0()
    }

    pub fn residual_sum(&self) -> f64 {
        self.modes.residual_sum()
    }
}

struct Context<'a> {
    params: &'a ExperimentParams,
    couplings: Couplings,
    psi0: Vec<f64>,
    settings: &'a OptimizeSettings,
}

struct Evaluation {
    spec: FilterSpec,
    modes: FilterModes,
    visibility: f64,
    overlap: f64,
}

impl Context<'_> {
    fn build(&self, order: u32, width: f64, t: f64) -> Result<Evaluation> {
        let grid = self.settings.eval.band_grid(self.params)?;
        let h = super_gaussian(order, width, &grid)?;
        let spec = FilterSpec::new(h, t)?;
        let modes = spec.modes()?;
        let report = evaluate_with_filters(
            self.params,
            &self.couplings,
            &modes,
            &modes,
            &self.settings.eval,
            &QkdSettings::default(),
        )?;
        let overlap = mode_overlap(&modes.fundamental(), &self.psi0, modes.grid())?.abs();
        Ok(Evaluation {
            spec,
            modes,
            visibility: report.visibility,
            overlap,
        })
    }

    fn score(&self, order: u32, width: f64, t: f64) -> Result<f64> {
        let e = self.build(order, width, t).map_err(|err| {
            Error::Numerical(format!(
                "objective failed at order {order}, width {width}, T {t}: {err}"
            ))
        })?;
        Ok(match self.settings.objective {
            Objective::Visibility => e.visibility,
            Objective::ModeOverlap => e.overlap,
        })
    }
}

/// Best super-Gaussian + Gaussian-shutter filter in `space`, applied to both arms.
pub fn optimize_filter(
    params: &ExperimentParams,
    raman: &RamanModel,
    space: &SearchSpace,
    settings: &OptimizeSettings,
) -> Result<OptimizedFilter> {
    params.validate()?;
    space.validate()?;
    let couplings = params.couplings(raman)?;
    let sfwm = sfwm_modes_with(params, &couplings, settings.eval.n_points)?;
    let ctx = Context {
        params,
        couplings,
        psi0: sfwm.mode(0),
        settings,
    };

    let dims = space.free_dims();
    let start = space.start();
    let bounds = [space.width, space.shutter];
    let to_point = |u: &[f64]| -> [f64; 2] {
        let mut p = start;
        for (k, &d) in dims.iter().enumerate() {
            let (lo, hi) = bounds[d];
            p[d] = lo + u[k].clamp(0.0, 1.0) * (hi - lo);
        }
        p
    };
    let u0: Vec<f64> = dims
        .iter()
        .map(|&d| {
            let (lo, hi) = bounds[d];
            (start[d] - lo) / (hi - lo)
        })
        .collect();

    let mut best: Option<(f64, u32, [f64; 2])> = None;
    let mut evaluations = 0;
    let mut converged = true;
    for &order in &space.orders {
        let mut objective = |u: &[f64]| -> Result<f64> {
            let p = to_point(u);
            ctx.score(order, p[0], p[1]).map(|s| -s)
        };
        let (value, u, run) = if dims.is_empty() {
            (objective(&u0)?, u0.clone(), NelderMeadRun { evaluations: 1, converged: true })
        } else {
            let mut run = nelder_mead(&mut objective, &u0, settings.max_iterations)?;
            for _ in 0..settings.restarts {
                let again = nelder_mead(&mut objective, &run.1, settings.max_iterations)?;
                let evals = run.2.evaluations + again.2.evaluations;
                if again.0 <= run.0 {
                    run = again;
                }
                run.2.evaluations = evals;
            }
            run
        };
        evaluations += run.evaluations;
        let point = to_point(&u);
        let score = -value;
        // Strictly better only: ties keep the lower order.
        if best.is_none_or(|(b, _, _)| score > b + 1e-12) {
            best = Some((score, order, point));
            converged = run.converged;
        }
    }

    let (_, order, [width, t]) = best.expect("at least one order searched");
    let e = ctx.build(order, width, t)?;
    let chi0 = e.modes.chi0();
    Ok(OptimizedFilter {
        spec: e.spec,
        modes: e.modes,
        order,
        width,
        shutter_fwhm: t,
        objective: settings.objective,
        visibility: e.visibility,
        overlap: e.overlap,
        collection_fraction: chi0 * chi0,
        converged,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadRun {
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`, returning (f_min, x_min, run info). The first
/// simplex steps 0.15 along each axis, toward the interior of [0, 1].
pub fn nelder_mead<F>(f: &mut F, x0: &[f64], max_iterations: usize) -> Result<(f64, Vec<f64>, NelderMeadRun)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    const STEP: f64 = 0.15;
    const FTOL: f64 = 1e-10;
    const XTOL: f64 = 1e-7;
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((eval(x0, &mut evals)?, x0.to_vec()));
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += if x0[k] + STEP <= 1.0 { STEP } else { -STEP };
        simplex.push((eval(&x, &mut evals)?, x));
    }

    let mut converged = false;
    for _ in 0..max_iterations {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = simplex[n].0 - simplex[0].0;
        let size = simplex
            .iter()
            .skip(1)
            .flat_map(|(_, x)| x.iter().zip(&simplex[0].1).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() < FTOL && size < XTOL {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(_, x)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].1)
                .map(|(c, w)| (c + t * (w - c)).clamp(0.0, 1.0))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals)?;
        if fr < simplex[0].0 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let t = if fr < simplex[n].0 { -0.5 } else { 0.5 };
            let xc = along(t);
            let fc = eval(&xc, &mut evals)?;
            if fc < simplex[n].0.min(fr) {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for (fv, x) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *fv = eval(x, &mut evals)?;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (fmin, xmin) = simplex.swap_remove(0);
    Ok((fmin, xmin, NelderMeadRun { evaluations: evals, converged }))
}
