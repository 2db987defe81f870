//! Flat `key = value` run configuration.
//!
//! One dotted key per line, `#` starts a comment. Unknown keys, repeated
//! keys and unparsable values are errors carrying the line number. Every
//! key has a default, so an empty file is the reference operating point.

use std::fmt;
use std::path::{Path, PathBuf};

use dedsim_core::filters::{super_gaussian, FilterSpec, SUPER_GAUSSIAN_ORDERS};
use dedsim_core::optimize::{Objective, OptimizeSettings, SearchSpace, DEFAULT_MAX_ITERATIONS};
use dedsim_core::raman::{load_raman_table, DEFAULT_CALIBRATION};
use dedsim_core::sfwm::{
    REFERENCE_B0_NM, REFERENCE_BAND_NM, REFERENCE_GAMMA, REFERENCE_LAMBDA_NM, REFERENCE_LENGTH_KM, REFERENCE_P_PAIR,
    REFERENCE_SIGMA_NM, REFERENCE_TEMPERATURE,
};
use dedsim_core::visibility::{EvalSettings, QkdSettings, DEFAULT_GRID_POINTS, DEFAULT_PADDING};
use dedsim_core::{ExperimentParams, RamanModel};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum RamanSource {
    Builtin,
    Table(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    Open,
    Matched,
    /// Fixed super-Gaussian profile with a Gaussian shutter.
    Practical { order: u32, width: f64, shutter: f64 },
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    None,
    PPair { min: f64, max: f64, points: usize, log: bool },
    Detuning { min_nm: f64, max_nm: f64, points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub order: Option<u32>,
    /// Upper bound defaults to the band width.
    pub width_sigma: (f64, Option<f64>),
    pub shutter_sigma: (f64, f64),
    pub objective: Objective,
    pub max_iterations: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub length_km: f64,
    pub temperature_k: f64,
    pub lambda_nm: f64,
    pub sigma_nm: f64,
    pub p_pair: f64,
    pub b0_nm: f64,
    pub width_nm: f64,
    pub grid_points: usize,
    pub padding_sigma: f64,
    pub raman: RamanSource,
    pub filter: FilterKind,
    pub optimize: OptimizeConfig,
    pub sweep: Sweep,
    pub qkd: QkdSettings,
    /// (Δ nm, saturated open visibility) targets for `calibrate`.
    pub calibrate_points: Vec<(f64, f64)>,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: REFERENCE_GAMMA,
            length_km: REFERENCE_LENGTH_KM,
            temperature_k: REFERENCE_TEMPERATURE,
            lambda_nm: REFERENCE_LAMBDA_NM,
            sigma_nm: REFERENCE_SIGMA_NM,
            p_pair: REFERENCE_P_PAIR,
            b0_nm: REFERENCE_B0_NM,
            width_nm: REFERENCE_BAND_NM,
            grid_points: DEFAULT_GRID_POINTS,
            padding_sigma: DEFAULT_PADDING,
            raman: RamanSource::Builtin,
            filter: FilterKind::Matched,
            optimize: OptimizeConfig {
                order: None,
                width_sigma: (0.5, None),
                shutter_sigma: (1.0, 10.0),
                objective: Objective::Visibility,
                max_iterations: DEFAULT_MAX_ITERATIONS,
                restarts: 1,
            },
            sweep: Sweep::None,
            qkd: QkdSettings::default(),
            calibrate_points: DEFAULT_CALIBRATION.to_vec(),
            output_dir: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "fiber.gamma",
    "fiber.length_km",
    "fiber.temperature_k",
    "pump.lambda_nm",
    "pump.sigma_nm",
    "pump.p_pair",
    "band.b0_nm",
    "band.width_nm",
    "grid.points",
    "grid.padding_sigma",
    "raman.source",
    "filter.kind",
    "filter.order",
    "filter.width_sigma",
    "filter.shutter_t_sigma",
    "optimize.order",
    "optimize.width_min_sigma",
    "optimize.width_max_sigma",
    "optimize.shutter_min_sigma",
    "optimize.shutter_max_sigma",
    "optimize.objective",
    "optimize.max_iterations",
    "optimize.restarts",
    "sweep.kind",
    "sweep.p_min",
    "sweep.p_max",
    "sweep.points",
    "sweep.log",
    "sweep.delta_min_nm",
    "sweep.delta_max_nm",
    "qkd.f_ec",
    "qkd.q_basis",
    "qkd.q_basis_applied",
    "calibrate.points",
    "output.dir",
];

/// Raw values collected before cross-key validation.
#[derive(Default)]
struct Raw {
    entries: Vec<(String, String, usize)>,
}

impl Raw {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, origin: &Path) -> Result<RunConfig, CliError> {
    let err = |line: usize, message: String| CliError::Config {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut raw = Raw::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(line_no, format!("expected `key = value`, got `{content}`")));
        };
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(err(line_no, format!("unknown key `{key}`")));
        }
        if let Some((_, first)) = raw.get(key) {
            return Err(err(line_no, format!("key `{key}` already set on line {first}")));
        }
        if value.is_empty() {
            return Err(err(line_no, format!("key `{key}` has no value")));
        }
        raw.entries.push((key.to_string(), value.to_string(), line_no));
    }

    let mut c = RunConfig::default();
    let num = |key: &str, slot: &mut f64| -> Result<(), CliError> {
        if let Some((v, l)) = raw.get(key) {
            *slot = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(l, format!("`{key}`: `{v}` is not a finite number")))?;
        }
        Ok(())
    };
    let int = |key: &str| -> Result<Option<(usize, usize)>, CliError> {
        match raw.get(key) {
            None => Ok(None),
            Some((v, l)) => v
                .parse::<usize>()
                .map(|n| Some((n, l)))
                .map_err(|_| err(l, format!("`{key}`: `{v}` is not a non-negative integer"))),
        }
    };
    let boolean = |key: &str, slot: &mut bool| -> Result<(), CliError> {
        if let Some((v, l)) = raw.get(key) {
            *slot = match v {
                "true" => true,
                "false" => false,
                _ => return Err(err(l, format!("`{key}`: expected true or false, got `{v}`"))),
            };
        }
        Ok(())
    };
    let line_of = |key: &str| raw.get(key).map(|(_, l)| l).unwrap_or(0);

    num("fiber.gamma", &mut c.gamma)?;
    num("fiber.length_km", &mut c.length_km)?;
    num("fiber.temperature_k", &mut c.temperature_k)?;
    num("pump.lambda_nm", &mut c.lambda_nm)?;
    num("pump.sigma_nm", &mut c.sigma_nm)?;
    num("pump.p_pair", &mut c.p_pair)?;
    num("band.b0_nm", &mut c.b0_nm)?;
    num("band.width_nm", &mut c.width_nm)?;
    if let Some((n, l)) = int("grid.points")? {
        if !(11..=801).contains(&n) {
            return Err(err(l, format!("`grid.points` must lie in [11, 801], got {n}")));
        }
        c.grid_points = n;
    }
    num("grid.padding_sigma", &mut c.padding_sigma)?;
    if c.padding_sigma < DEFAULT_PADDING {
        return Err(err(
            line_of("grid.padding_sigma"),
            format!("`grid.padding_sigma` must be at least {DEFAULT_PADDING}"),
        ));
    }

    if let Some((v, _)) = raw.get("raman.source") {
        c.raman = if v == "builtin" {
            RamanSource::Builtin
        } else {
            let p = PathBuf::from(v);
            // Relative tables resolve against the config file's directory.
            RamanSource::Table(match origin.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            })
        };
    }

    let order_of = |key: &str| -> Result<Option<u32>, CliError> {
        match int(key)? {
            None => Ok(None),
            Some((n, l)) => {
                let o = u32::try_from(n).ok().filter(|o| SUPER_GAUSSIAN_ORDERS.contains(o));
                o.map(Some).ok_or_else(|| {
                    err(l, format!("`{key}` must be one of {SUPER_GAUSSIAN_ORDERS:?}, got {n}"))
                })
            }
        }
    };
    let mut fw = 3.0;
    let mut ft = 3.5;
    num("filter.width_sigma", &mut fw)?;
    num("filter.shutter_t_sigma", &mut ft)?;
    let fo = order_of("filter.order")?.unwrap_or(8);
    if let Some((v, l)) = raw.get("filter.kind") {
        c.filter = match v {
            "open" => FilterKind::Open,
            "matched" => FilterKind::Matched,
            "practical" => FilterKind::Practical { order: fo, width: fw, shutter: ft },
            "optimize" => FilterKind::Optimize,
            _ => {
                return Err(err(
                    l,
                    format!("`filter.kind` must be open, matched, practical or optimize, got `{v}`"),
                ))
            }
        };
    }
    if let FilterKind::Practical { width, shutter, .. } = c.filter {
        if !(width > 0.0 && shutter > 0.0) {
            return Err(err(line_of("filter.kind"), "practical filter needs positive width and shutter".into()));
        }
    }

    let o = &mut c.optimize;
    o.order = order_of("optimize.order")?;
    num("optimize.width_min_sigma", &mut o.width_sigma.0)?;
    let mut wmax = f64::NAN;
    num("optimize.width_max_sigma", &mut wmax)?;
    if !wmax.is_nan() {
        o.width_sigma.1 = Some(wmax);
    }
    num("optimize.shutter_min_sigma", &mut o.shutter_sigma.0)?;
    num("optimize.shutter_max_sigma", &mut o.shutter_sigma.1)?;
    if let Some((v, l)) = raw.get("optimize.objective") {
        o.objective = match v {
            "visibility" => Objective::Visibility,
            "mode_overlap" => Objective::ModeOverlap,
            _ => return Err(err(l, format!("`optimize.objective` must be visibility or mode_overlap, got `{v}`"))),
        };
    }
    if let Some((n, l)) = int("optimize.max_iterations")? {
        if n == 0 {
            return Err(err(l, "`optimize.max_iterations` must be positive".into()));
        }
        o.max_iterations = n;
    }
    if let Some((n, _)) = int("optimize.restarts")? {
        o.restarts = n;
    }

    let mut p_min = 1e-4;
    let mut p_max = 0.05;
    let mut d_min = 5.0;
    let mut d_max = 14.0;
    let mut log = true;
    num("sweep.p_min", &mut p_min)?;
    num("sweep.p_max", &mut p_max)?;
    num("sweep.delta_min_nm", &mut d_min)?;
    num("sweep.delta_max_nm", &mut d_max)?;
    boolean("sweep.log", &mut log)?;
    let points = int("sweep.points")?.map(|(n, _)| n);
    let sweep_line = line_of("sweep.kind");
    if let Some((v, l)) = raw.get("sweep.kind") {
        c.sweep = match v {
            "none" => Sweep::None,
            "p_pair" => Sweep::PPair { min: p_min, max: p_max, points: points.unwrap_or(15), log },
            "detuning" => Sweep::Detuning { min_nm: d_min, max_nm: d_max, points: points.unwrap_or(10) },
            _ => return Err(err(l, format!("`sweep.kind` must be none, p_pair or detuning, got `{v}`"))),
        };
    }
    match c.sweep {
        Sweep::PPair { min, max, points, .. } => {
            if !(min > 0.0 && max >= min && points >= 1) || (points > 1 && max == min) {
                return Err(err(sweep_line, format!("p_pair sweep range [{min}, {max}] with {points} points is empty or unordered")));
            }
        }
        Sweep::Detuning { min_nm, max_nm, points } => {
            if !(min_nm > 0.0 && max_nm >= min_nm && points >= 1) || (points > 1 && max_nm == min_nm) {
                return Err(err(sweep_line, format!("detuning sweep range [{min_nm}, {max_nm}] with {points} points is empty or unordered")));
            }
        }
        Sweep::None => {}
    }

    num("qkd.f_ec", &mut c.qkd.f_ec)?;
    if c.qkd.f_ec < 1.0 {
        return Err(err(line_of("qkd.f_ec"), format!("`qkd.f_ec` must be at least 1, got {}", c.qkd.f_ec)));
    }
    num("qkd.q_basis", &mut c.qkd.q_basis)?;
    if !(c.qkd.q_basis > 0.0 && c.qkd.q_basis <= 1.0) {
        return Err(err(line_of("qkd.q_basis"), "`qkd.q_basis` must lie in (0, 1]".into()));
    }
    boolean("qkd.q_basis_applied", &mut c.qkd.apply_q_basis)?;

    if let Some((v, l)) = raw.get("calibrate.points") {
        c.calibrate_points = parse_points(v).map_err(|m| err(l, m))?;
    }
    if let Some((v, _)) = raw.get("output.dir") {
        c.output_dir = Some(PathBuf::from(v));
    }

    // Physical parameters are validated together so the message names the key.
    c.params().map_err(|e| err(0, e.to_string()))?;
    Ok(c)
}

/// `5:0.96, 10:0.82` → [(5, 0.96), (10, 0.82)].
fn parse_points(v: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for item in v.split(',') {
        let (d, t) = item
            .trim()
            .split_once(':')
            .ok_or_else(|| format!("calibration point `{item}` is not `delta_nm:visibility`"))?;
        let d: f64 = d.trim().parse().map_err(|_| format!("bad detuning in `{item}`"))?;
        let t: f64 = t.trim().parse().map_err(|_| format!("bad visibility in `{item}`"))?;
        out.push((d, t));
    }
    if out.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("calibration detunings must be strictly increasing".into());
    }
    Ok(out)
}

impl RunConfig {
    pub fn params(&self) -> dedsim_core::Result<ExperimentParams> {
        let p = ExperimentParams::from_nm(
            self.gamma,
            self.length_km,
            self.temperature_k,
            self.lambda_nm,
            self.sigma_nm,
            self.b0_nm,
            self.width_nm,
        )?;
        let p = p.with_pair_probability(self.p_pair)?;
        p.validate()?;
        Ok(p)
    }

    pub fn raman_model(&self) -> dedsim_core::Result<RamanModel> {
        match &self.raman {
            RamanSource::Builtin => Ok(RamanModel::calibrated_default()),
            RamanSource::Table(p) => load_raman_table(p),
        }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings { n_points: self.grid_points, padding: self.padding_sigma }
    }

    pub fn search_space(&self, params: &ExperimentParams) -> SearchSpace {
        let mut s = SearchSpace::default_for(params);
        let o = &self.optimize;
        if let Some(order) = o.order {
            s = s.with_order(order);
        }
        s.width.0 = o.width_sigma.0;
        if let Some(hi) = o.width_sigma.1 {
            s.width.1 = hi;
        }
        s.shutter = o.shutter_sigma;
        s
    }

    pub fn optimize_settings(&self) -> OptimizeSettings {
        OptimizeSettings {
            eval: self.eval_settings(),
            objective: self.optimize.objective,
            max_iterations: self.optimize.max_iterations,
            restarts: self.optimize.restarts,
        }
    }

    /// Fixed practical filter, if configured.
    pub fn practical_spec(&self, params: &ExperimentParams) -> dedsim_core::Result<Option<FilterSpec>> {
        match self.filter {
            FilterKind::Practical { order, width, shutter } => {
                let grid = self.eval_settings().band_grid(params)?;
                Ok(Some(FilterSpec::new(super_gaussian(order, width, &grid)?, shutter)?))
            }
            _ => Ok(None),
        }
    }

    /// `key = value` lines of the fully resolved configuration.
    pub fn resolved_lines(&self) -> Vec<String> {
        let o = &self.optimize;
        let mut v = vec![
            format!("fiber.gamma = {}", self.gamma),
            format!("fiber.length_km = {}", self.length_km),
            format!("fiber.temperature_k = {}", self.temperature_k),
            format!("pump.lambda_nm = {}", self.lambda_nm),
            format!("pump.sigma_nm = {}", self.sigma_nm),
            format!("pump.p_pair = {}", self.p_pair),
            format!("band.b0_nm = {}", self.b0_nm),
            format!("band.width_nm = {}", self.width_nm),
            format!("grid.points = {}", self.grid_points),
            format!("grid.padding_sigma = {}", self.padding_sigma),
            format!("raman.source = {}", self.raman),
            format!("filter.kind = {}", self.filter),
            format!("optimize.order = {}", o.order.map_or("all".into(), |x| x.to_string())),
            format!("optimize.width_sigma = [{}, {}]", o.width_sigma.0, o.width_sigma.1.map_or("band".into(), |w| w.to_string())),
            format!("optimize.shutter_sigma = [{}, {}]", o.shutter_sigma.0, o.shutter_sigma.1),
            format!("optimize.objective = {}", o.objective.name()),
            format!("optimize.max_iterations = {}", o.max_iterations),
            format!("optimize.restarts = {}", o.restarts),
            format!("sweep = {}", self.sweep),
            format!("qkd.f_ec = {}", self.qkd.f_ec),
            format!("qkd.q_basis = {}", self.qkd.q_basis),
            format!("qkd.q_basis_applied = {}", self.qkd.apply_q_basis),
        ];
        let pts: Vec<String> = self.calibrate_points.iter().map(|(d, t)| format!("{d}:{t}")).collect();
        v.push(format!("calibrate.points = {}", pts.join(",")));
        v
    }
}

impl fmt::Display for RamanSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RamanSource::Builtin => f.write_str("builtin"),
            RamanSource::Table(p) => write!(f, "{}", p.display()),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterKind::Open => f.write_str("open"),
            FilterKind::Matched => f.write_str("matched"),
            FilterKind::Practical { order, width, shutter } => {
                write!(f, "practical (order {order}, width {width} sigma, T {shutter}/sigma)")
            }
            FilterKind::Optimize => f.write_str("optimize"),
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sweep::None => f.write_str("none"),
            Sweep::PPair { min, max, points, log } => {
                write!(f, "p_pair [{min}, {max}] {points} points{}", if *log { " log-spaced" } else { "" })
            }
            Sweep::Detuning { min_nm, max_nm, points } => {
                write!(f, "detuning [{min_nm}, {max_nm}] nm {points} points")
            }
        }
    }
}
