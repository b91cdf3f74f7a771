//! Scenario configuration, synthetic weather and PV profiles, and CSV
//! profile ingestion.
//!
//! The configuration file is TOML written as flat dotted keys, e.g.
//!
//! ```text
//! horizon = 72
//! fleet.n_buildings = 14
//! controller.estimator = "algebraic"
//! pv.peak = 12
//! ```
//!
//! Every omitted key keeps its default and unknown keys are rejected.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordinator::FleetConfig;
use crate::error::{Error, Result};
use crate::mfc::Estimator;
use crate::plant::{BuildingState, DisturbanceSample, SANE_RANGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub alpha: f64,
    pub kp: f64,
    pub window_capacity: usize,
    pub estimator: Estimator,
    /// Length of the initial reference ramp (h); 0 disables it.
    pub ramp_hours: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            alpha: 5.0,
            kp: 2.0,
            window_capacity: 5,
            estimator: Estimator::Algebraic,
            ramp_hours: 0.0,
        }
    }
}

/// Shape parameters of the synthetic summer-day weather.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceParams {
    /// Daily mean outside temperature (°C).
    pub d1_mean: f64,
    /// Half peak-to-peak swing of the outside temperature (°C).
    pub d1_amp: f64,
    /// Solar gain at 13:00 (kW).
    pub d2_peak: f64,
    /// Internal gains during occupancy, 08:00 to 18:00 (kW).
    pub d3_day: f64,
    /// Internal gains otherwise (kW).
    pub d3_night: f64,
}

impl Default for DisturbanceParams {
    fn default() -> Self {
        DisturbanceParams {
            d1_mean: 28.0,
            d1_amp: 6.0,
            d2_peak: 0.4,
            d3_day: 1.0,
            d3_night: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PvSourceKind {
    #[default]
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvConfig {
    pub source: PvSourceKind,
    /// Peak of the synthetic profile (kW).
    pub peak: f64,
    /// CSV profile, required when `source = "csv"`.
    pub path: Option<PathBuf>,
}

impl Default for PvConfig {
    fn default() -> Self {
        PvConfig {
            source: PvSourceKind::Synthetic,
            peak: 12.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PvSource {
    Synthetic(f64),
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: PathBuf::from("trace.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Simulated duration (h).
    pub horizon: f64,
    pub setpoint: f64,
    pub comfort_low: f64,
    pub comfort_high: f64,
    /// Range of the uniformly drawn initial room temperatures (°C).
    pub initial_t1_range: (f64, f64),
    pub seed: u64,
    /// RK4 substeps per sampling interval.
    pub substeps: usize,
    /// Start-up period excluded from comfort metrics (h).
    pub transient_hours: f64,
    pub fleet: FleetConfig,
    pub controller: ControllerConfig,
    pub disturbance: DisturbanceParams,
    pub pv: PvConfig,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            horizon: 72.0,
            setpoint: 23.0,
            comfort_low: 22.0,
            comfort_high: 24.0,
            initial_t1_range: (22.5, 26.5),
            seed: 1,
            substeps: 10,
            transient_hours: 6.0,
            fleet: FleetConfig::default(),
            controller: ControllerConfig::default(),
            disturbance: DisturbanceParams::default(),
            pv: PvConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.fleet.validate()?;

        for (name, v) in [
            ("horizon", self.horizon),
            ("setpoint", self.setpoint),
            ("comfort_low", self.comfort_low),
            ("comfort_high", self.comfort_high),
            ("transient_hours", self.transient_hours),
            ("controller.alpha", self.controller.alpha),
            ("controller.kp", self.controller.kp),
            ("controller.ramp_hours", self.controller.ramp_hours),
            ("disturbance.d1_mean", self.disturbance.d1_mean),
            ("disturbance.d1_amp", self.disturbance.d1_amp),
            ("disturbance.d2_peak", self.disturbance.d2_peak),
            ("disturbance.d3_day", self.disturbance.d3_day),
            ("disturbance.d3_night", self.disturbance.d3_night),
            ("pv.peak", self.pv.peak),
        ] {
            finite(name, v)?;
        }

        if !(self.comfort_low < self.setpoint && self.setpoint < self.comfort_high) {
            return Err(config_err(format!(
                "comfort band must satisfy comfort_low < setpoint < comfort_high, got {} < {} < {}",
                self.comfort_low, self.setpoint, self.comfort_high
            )));
        }
        if self.horizon < 0.0 {
            return Err(config_err(format!(
                "horizon must be >= 0, got {}",
                self.horizon
            )));
        }
        let steps = (self.horizon / self.fleet.sample_dt).round();
        if (steps * self.fleet.sample_dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(config_err(format!(
                "horizon {} h is not a multiple of fleet.sample_dt {} h",
                self.horizon, self.fleet.sample_dt
            )));
        }
        let (lo, hi) = self.initial_t1_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(config_err(format!(
                "initial_t1_range must be an ordered pair, got [{lo}, {hi}]"
            )));
        }
        if lo < SANE_RANGE.0 || hi + 1.0 > SANE_RANGE.1 {
            return Err(config_err(format!(
                "initial_t1_range [{lo}, {hi}] is outside the plausible range"
            )));
        }
        if self.substeps == 0 {
            return Err(config_err("substeps must be at least 1"));
        }
        if self.transient_hours < 0.0 {
            return Err(config_err("transient_hours must be >= 0"));
        }

        let c = &self.controller;
        if c.alpha == 0.0 {
            return Err(config_err("controller.alpha must be non-zero"));
        }
        if c.kp <= 0.0 {
            return Err(config_err(format!(
                "controller.kp must be > 0, got {}",
                c.kp
            )));
        }
        if c.window_capacity < 3 || c.window_capacity.is_multiple_of(2) {
            return Err(config_err(format!(
                "controller.window_capacity must be odd and >= 3, got {}",
                c.window_capacity
            )));
        }
        if c.ramp_hours < 0.0 {
            return Err(config_err("controller.ramp_hours must be >= 0"));
        }

        let d = &self.disturbance;
        if d.d2_peak < 0.0 || d.d3_day < 0.0 || d.d3_night < 0.0 {
            return Err(config_err("disturbance heat gains must be >= 0"));
        }
        if self.pv.peak < 0.0 {
            return Err(config_err(format!(
                "pv.peak must be >= 0, got {}",
                self.pv.peak
            )));
        }
        if self.pv.source == PvSourceKind::Csv && self.pv.path.is_none() {
            return Err(config_err("pv.source = \"csv\" requires pv.path"));
        }
        Ok(())
    }

    /// Number of sampling intervals in the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.fleet.sample_dt).round() as usize
    }

    pub fn pv_source(&self) -> PvSource {
        match (self.pv.source, &self.pv.path) {
            (PvSourceKind::Csv, Some(path)) => PvSource::Csv(path.clone()),
            _ => PvSource::Synthetic(self.pv.peak),
        }
    }

    /// Initial states drawn from `initial_t1_range` with `T2 = T1` and
    /// `T3 = T1 + 1`, reproducible for a given seed.
    pub fn initial_states(&self, seed: u64) -> Vec<BuildingState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = self.initial_t1_range;
        (0..self.fleet.n_buildings)
            .map(|_| {
                let t1 = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                BuildingState::new(t1, t1, t1 + 1.0)
            })
            .collect()
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| config_err(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Synthetic summer weather at time `t` (h); a pure, 24 h periodic function.
pub fn synth_disturbances(t: f64, p: &DisturbanceParams) -> DisturbanceSample {
    let h = t.rem_euclid(24.0);
    let d1 = p.d1_mean + p.d1_amp * (2.0 * PI * (h - 9.0) / 24.0).sin();
    let d2 = p.d2_peak * daylight_shape(h);
    let d3 = if (8.0..=18.0).contains(&h) {
        p.d3_day
    } else {
        p.d3_night
    };
    DisturbanceSample::new(d1, d2, d3)
}

/// Synthetic PV generation (kW), zero outside 06:00 to 20:00 and `peak` at 13:00.
pub fn synth_pv(t: f64, peak: f64) -> f64 {
    peak * daylight_shape(t.rem_euclid(24.0))
}

fn daylight_shape(h: f64) -> f64 {
    if (6.0..=20.0).contains(&h) {
        (PI * (h - 6.0) / 14.0).sin().max(0.0).powi(2)
    } else {
        0.0
    }
}

/// Uniformly sampled time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(Error::Input(format!(
                "invalid profile grid t0={t0}, dt={dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Input("profile has no values".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("profile value {v} is not finite")));
        }
        Ok(Profile { t0, dt, values })
    }

    /// Samples `f` on `t0 + k·dt` for `k in 0..n`.
    pub fn sample(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Profile::new(t0, dt, (0..n).map(|k| f(t0 + k as f64 * dt)).collect())
    }

    pub fn end(&self) -> f64 {
        self.t0 + (self.values.len() - 1) as f64 * self.dt
    }

    /// Linear interpolation; queries outside the sampled span are errors.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let slack = 1e-9 * self.dt;
        let end = self.end();
        if !(t >= self.t0 - slack && t <= end + slack) {
            return Err(Error::OutOfSpan {
                t,
                start: self.t0,
                end,
            });
        }
        let x = ((t - self.t0) / self.dt).max(0.0);
        let last = self.values.len() - 1;
        let i = (x.floor() as usize).min(last);
        if i == last {
            return Ok(self.values[last]);
        }
        let frac = x - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_hours,value\n");
        for (k, v) in self.values.iter().enumerate() {
            let t = self.t0 + k as f64 * self.dt;
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// What a loaded profile represents; PV profiles must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Pv,
    Signed,
}

/// Relative tolerance on time-column spacing in profile files.
const FILE_SPACING_RTOL: f64 = 1e-6;

pub fn parse_profile_csv(text: &str, kind: ProfileKind, origin: &Path) -> Result<Profile> {
    let parse_err = |line: usize, detail: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        detail,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, header)) if header.trim() == "t_hours,value" => {}
        Some((n, header)) => {
            return Err(parse_err(
                n,
                format!("expected header `t_hours,value`, found `{header}`"),
            ))
        }
        None => return Err(parse_err(1, "empty file".into())),
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(n, format!("expected 2 columns in `{line}`")));
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("malformed time `{t}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("malformed value `{v}`")))?;
        if !t.is_finite() || !v.is_finite() {
            return Err(parse_err(n, "non-finite number".into()));
        }
        if kind == ProfileKind::Pv && v < 0.0 {
            return Err(parse_err(n, format!("negative PV value {v}")));
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(parse_err(n, format!("time {t} does not increase")));
            }
            if times.len() >= 2 {
                let dt = times[1] - times[0];
                if ((t - prev) - dt).abs() > FILE_SPACING_RTOL * dt {
                    return Err(parse_err(
                        n,
                        format!("non-uniform spacing {} h, expected {dt} h", t - prev),
                    ));
                }
            }
        }
        times.push(t);
        values.push(v);
    }

    match times.len() {
        0 => Err(parse_err(1, "no data rows".into())),
        1 => Err(parse_err(2, "at least two rows are needed".into())),
        _ => Profile::new(times[0], times[1] - times[0], values),
    }
}

pub fn load_profile_csv(path: impl AsRef<Path>, kind: ProfileKind) -> Result<Profile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile_csv(&text, kind, path)
}
