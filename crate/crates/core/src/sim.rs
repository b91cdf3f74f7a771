//! Scenario runner, trace CSV I/O and summary metrics.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use crate::coordinator::{coordinator_step, Building, StepRecord};
use crate::error::{Error, Result};
use crate::mfc::{IpController, Reference, SampleWindow};
use crate::plant::BuildingParams;
use crate::scenario::{
    load_profile_csv, synth_disturbances, synth_pv, ProfileKind, PvSource, ScenarioConfig,
};

const SHARED_COLUMNS: [&str; 6] = [
    "t_hours",
    "pv_kw",
    "sum_p_kw",
    "band_lo_kw",
    "band_hi_kw",
    "infeasible",
];
const PER_BUILDING_COLUMNS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingRow {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Applied thermal input (kW, ≤ 0).
    pub u: f64,
    /// Electrical consumption (kW).
    pub p: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub pv: f64,
    pub sum_p: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub infeasible: bool,
    pub buildings: Vec<BuildingRow>,
}

impl From<StepRecord> for TraceRow {
    fn from(r: StepRecord) -> Self {
        TraceRow {
            t: r.t,
            pv: r.pv,
            sum_p: r.sum_p,
            band_lo: r.band.lower,
            band_hi: r.band.upper,
            infeasible: r.bounds.infeasible,
            buildings: r
                .buildings
                .iter()
                .map(|b| BuildingRow {
                    t1: b.state.t1,
                    t2: b.state.t2,
                    t3: b.state.t3,
                    u: b.u_applied,
                    p: b.p,
                    clamped: b.clamped,
                })
                .collect(),
        }
    }
}

/// Per-step record of a fleet run. Each row holds the state at the start of
/// the interval and the inputs applied over it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub n_buildings: usize,
    pub rows: Vec<TraceRow>,
}

impl SimulationTrace {
    pub fn new(n_buildings: usize) -> Self {
        SimulationTrace {
            n_buildings,
            rows: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn build_fleet(cfg: &ScenarioConfig) -> Result<Vec<Building>> {
    let c = &cfg.controller;
    cfg.initial_states(cfg.seed)
        .into_iter()
        .map(|state| {
            let reference = if c.ramp_hours > 0.0 {
                Reference::ramp(state.t1, cfg.setpoint, c.ramp_hours)
            } else {
                Reference::constant(cfg.setpoint)
            };
            let window = SampleWindow::new(c.window_capacity, cfg.fleet.sample_dt)?;
            let controller = IpController::new(c.alpha, c.kp, reference, c.estimator, window)?;
            Ok(Building { controller, state })
        })
        .collect()
}

/// Runs the configured scenario; the result depends only on `cfg`.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimulationTrace> {
    cfg.validate()?;
    let params = BuildingParams::default();
    let dt = cfg.fleet.sample_dt;

    let pv_profile = match cfg.pv_source() {
        PvSource::Csv(path) => Some(load_profile_csv(path, ProfileKind::Pv)?),
        PvSource::Synthetic(_) => None,
    };
    let pv_at = |t: f64| -> Result<f64> {
        match &pv_profile {
            Some(profile) => profile.value_at(t),
            None => Ok(synth_pv(t, cfg.pv.peak)),
        }
    };

    let mut fleet = build_fleet(cfg)?;
    let mut trace = SimulationTrace::new(cfg.fleet.n_buildings);
    trace.rows.reserve(cfg.steps());
    for k in 0..cfg.steps() {
        let t = k as f64 * dt;
        let w = synth_disturbances(t, &cfg.disturbance);
        let pv = pv_at(t)?;
        let record = coordinator_step(&mut fleet, pv, &w, &cfg.fleet, &params, cfg.substeps, t)?;
        trace.rows.push(record.into());
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub steps: usize,
    pub n_buildings: usize,
    /// Building-steps with `T1` outside the comfort band after the transient.
    pub comfort_violation_steps: usize,
    /// Largest excursion outside the comfort band (°C).
    pub comfort_max_depth: f64,
    /// Steps with `PV > 0`.
    pub tracking_steps: usize,
    /// RMS of `sum_p - PV` over PV-active steps; `None` without any.
    pub tracking_rms: Option<f64>,
    pub tracking_within_eps_pct: Option<f64>,
    pub peak_sum_p: f64,
    pub infeasible_steps: usize,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        writeln!(f, "steps={}", self.steps)?;
        writeln!(f, "buildings={}", self.n_buildings)?;
        writeln!(
            f,
            "comfort_violation_steps={}",
            self.comfort_violation_steps
        )?;
        writeln!(f, "comfort_max_depth_c={:.6}", self.comfort_max_depth)?;
        writeln!(f, "tracking_steps={}", self.tracking_steps)?;
        writeln!(f, "tracking_rms_kw={}", opt(self.tracking_rms))?;
        writeln!(
            f,
            "tracking_within_eps_pct={}",
            opt(self.tracking_within_eps_pct)
        )?;
        writeln!(f, "peak_sum_p_kw={:.6}", self.peak_sum_p)?;
        write!(f, "infeasible_steps={}", self.infeasible_steps)
    }
}

/// Summarises a trace; `None` for an empty trace.
pub fn compute_metrics(
    trace: &SimulationTrace,
    cfg: &ScenarioConfig,
    transient_hours: f64,
) -> Option<MetricsReport> {
    if trace.is_empty() {
        return None;
    }
    let (lo, hi) = (cfg.comfort_low, cfg.comfort_high);
    let eps = cfg.fleet.epsilon;

    let mut violations = 0;
    let mut max_depth = 0.0_f64;
    let mut tracking_steps = 0;
    let mut within = 0;
    let mut sq_sum = 0.0;
    let mut peak = 0.0_f64;
    let mut infeasible = 0;

    for row in &trace.rows {
        peak = peak.max(row.sum_p);
        if row.infeasible {
            infeasible += 1;
        }
        if row.pv > 0.0 {
            tracking_steps += 1;
            let err = row.sum_p - row.pv;
            sq_sum += err * err;
            if err.abs() <= eps + 1e-9 {
                within += 1;
            }
        }
        if row.t < transient_hours {
            continue;
        }
        for b in &row.buildings {
            let depth = (lo - b.t1).max(b.t1 - hi);
            if depth > 0.0 {
                violations += 1;
                max_depth = max_depth.max(depth);
            }
        }
    }

    let (rms, pct) = if tracking_steps > 0 {
        let n = tracking_steps as f64;
        (Some((sq_sum / n).sqrt()), Some(100.0 * within as f64 / n))
    } else {
        (None, None)
    };

    Some(MetricsReport {
        steps: trace.rows.len(),
        n_buildings: trace.n_buildings,
        comfort_violation_steps: violations,
        comfort_max_depth: max_depth,
        tracking_steps,
        tracking_rms: rms,
        tracking_within_eps_pct: pct,
        peak_sum_p: peak,
        infeasible_steps: infeasible,
    })
}

/// Formats `v` with `digits` significant digits, `%g` style.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_fraction(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trace_header(n_buildings: usize) -> String {
    let mut h = SHARED_COLUMNS.join(",");
    for i in 1..=n_buildings {
        let _ = write!(h, ",T1_{i},T2_{i},T3_{i},u_{i}_kw,p_{i}_kw,clamped_{i}");
    }
    h
}

pub fn trace_to_csv(trace: &SimulationTrace) -> String {
    let g = |v: f64| format_sig(v, 6);
    let flag = |b: bool| if b { "1" } else { "0" };
    let mut out = trace_header(trace.n_buildings);
    out.push('\n');
    for r in &trace.rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            g(r.t),
            g(r.pv),
            g(r.sum_p),
            g(r.band_lo),
            g(r.band_hi),
            flag(r.infeasible)
        );
        for b in &r.buildings {
            let _ = write!(
                out,
                ",{},{},{},{},{},{}",
                g(b.t1),
                g(b.t2),
                g(b.t3),
                g(b.u),
                g(b.p),
                flag(b.clamped)
            );
        }
        out.push('\n');
    }
    out
}

pub fn write_trace(trace: &SimulationTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

pub fn parse_trace(text: &str, origin: &Path) -> Result<SimulationTrace> {
    let parse_err = |line: usize, detail: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        detail,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines
        .next()
        .map(|(_, h)| h)
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let columns = header.split(',').count();
    if columns < SHARED_COLUMNS.len() + PER_BUILDING_COLUMNS
        || !(columns - SHARED_COLUMNS.len()).is_multiple_of(PER_BUILDING_COLUMNS)
    {
        return Err(parse_err(1, format!("unexpected column count {columns}")));
    }
    let n = (columns - SHARED_COLUMNS.len()) / PER_BUILDING_COLUMNS;
    if header != trace_header(n) {
        return Err(parse_err(
            1,
            "header does not match the trace layout".into(),
        ));
    }

    let mut trace = SimulationTrace::new(n);
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(parse_err(
                line_no,
                format!("expected {columns} fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| parse_err(line_no, format!("malformed number `{}`", fields[i])))
        };
        let flag = |i: usize| -> Result<bool> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(parse_err(line_no, format!("malformed flag `{other}`"))),
            }
        };
        let mut buildings = Vec::with_capacity(n);
        for b in 0..n {
            let o = SHARED_COLUMNS.len() + b * PER_BUILDING_COLUMNS;
            buildings.push(BuildingRow {
                t1: num(o)?,
                t2: num(o + 1)?,
                t3: num(o + 2)?,
                u: num(o + 3)?,
                p: num(o + 4)?,
                clamped: flag(o + 5)?,
            });
        }
        trace.rows.push(TraceRow {
            t: num(0)?,
            pv: num(1)?,
            sum_p: num(2)?,
            band_lo: num(3)?,
            band_hi: num(4)?,
            infeasible: flag(5)?,
            buildings,
        });
    }
    Ok(trace)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<SimulationTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path)
}
