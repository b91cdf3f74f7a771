//! Fleet coordination: turns PV generation into an admissible consumption
//! band, splits it evenly across identical buildings and advances every
//! building one sampling interval.
//!
//! Plant inputs use the thermal convention (`u ≤ 0` cools). All band and
//! actuator limits apply to electrical consumption `p = -u ≥ 0` (COP of 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfc::IpController;
use crate::plant::{plant_step, BuildingParams, BuildingState, DisturbanceSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub n_buildings: usize,
    /// Half-width ε of the consumption band (kW).
    pub epsilon: f64,
    /// Per-unit HVAC electrical limit (kW).
    pub hvac_max: f64,
    /// Sampling interval (h).
    pub sample_dt: f64,
    /// When false the band is computed and recorded but never enforced.
    pub pv_tracking: bool,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            n_buildings: 13,
            epsilon: 1.0,
            hvac_max: 3.0,
            sample_dt: 1.0 / 6.0,
            pv_tracking: true,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_buildings == 0 {
            return Err(Error::Config("fleet.n_buildings must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "fleet.epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.hvac_max > 0.0 && self.hvac_max.is_finite()) {
            return Err(Error::Config(format!(
                "fleet.hvac_max must be positive, got {}",
                self.hvac_max
            )));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::Config(format!(
                "fleet.sample_dt must be positive, got {}",
                self.sample_dt
            )));
        }
        Ok(())
    }
}

/// Admissible aggregate consumption (kW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBand {
    pub lower: f64,
    pub upper: f64,
    pub pv_active: bool,
}

/// Admissible per-building consumption (kW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingBounds {
    pub lower: f64,
    pub upper: f64,
    /// The even share of the band lies outside `[0, hvac_max]`.
    pub infeasible: bool,
}

pub fn power_band(pv: f64, epsilon: f64) -> Result<PowerBand> {
    if !pv.is_finite() || pv < 0.0 {
        return Err(Error::Input(format!("PV power must be >= 0, got {pv}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Input(format!("epsilon must be > 0, got {epsilon}")));
    }
    if pv == 0.0 {
        return Ok(PowerBand {
            lower: 0.0,
            upper: 0.0,
            pv_active: false,
        });
    }
    Ok(PowerBand {
        lower: (pv - epsilon).max(0.0),
        upper: pv + epsilon,
        pv_active: true,
    })
}

/// Bounds for each building when the band is shared evenly among
/// `cfg.n_buildings` identical units.
pub fn per_building_bounds(band: &PowerBand, cfg: &FleetConfig) -> BuildingBounds {
    if !band.pv_active {
        return BuildingBounds {
            lower: 0.0,
            upper: cfg.hvac_max,
            infeasible: false,
        };
    }
    let n = cfg.n_buildings as f64;
    let raw_lo = band.lower / n;
    let raw_hi = band.upper / n;
    if raw_lo > cfg.hvac_max {
        BuildingBounds {
            lower: cfg.hvac_max,
            upper: cfg.hvac_max,
            infeasible: true,
        }
    } else if raw_hi < 0.0 {
        BuildingBounds {
            lower: 0.0,
            upper: 0.0,
            infeasible: true,
        }
    } else {
        BuildingBounds {
            lower: raw_lo.max(0.0),
            upper: raw_hi.min(cfg.hvac_max),
            infeasible: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    /// Applied thermal input (kW, ≤ 0).
    pub u_applied: f64,
    /// Electrical consumption (kW, ≥ 0).
    pub p: f64,
    pub clamped: bool,
}

pub fn clamp_to_bounds(u_raw: f64, b: &BuildingBounds) -> Clamped {
    let requested = -u_raw;
    let p = requested.max(b.lower).min(b.upper);
    Clamped {
        u_applied: -p,
        p,
        clamped: p != requested,
    }
}

/// A building with its dedicated controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub controller: IpController,
    pub state: BuildingState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingRecord {
    /// State at the start of the interval.
    pub state: BuildingState,
    pub u_applied: f64,
    pub p: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub pv: f64,
    pub band: PowerBand,
    pub bounds: BuildingBounds,
    pub buildings: Vec<BuildingRecord>,
    pub sum_p: f64,
}

/// Advances every building over `[t, t + cfg.sample_dt]`.
///
/// Per building: estimate and control, clamp to the shared bounds, integrate
/// the plant under the applied input, then store that input in the
/// controller's window.
pub fn coordinator_step(
    fleet: &mut [Building],
    pv: f64,
    w: &DisturbanceSample,
    cfg: &FleetConfig,
    params: &BuildingParams,
    substeps: usize,
    t: f64,
) -> Result<StepRecord> {
    w.validate()?;
    let band = power_band(pv, cfg.epsilon)?;
    let bounds = if cfg.pv_tracking {
        per_building_bounds(&band, cfg)
    } else {
        per_building_bounds(
            &PowerBand {
                pv_active: false,
                ..band
            },
            cfg,
        )
    };

    let mut records = Vec::with_capacity(fleet.len());
    for (i, b) in fleet.iter_mut().enumerate() {
        let u_raw = b.controller.step(b.state.t1, t)?;
        let c = clamp_to_bounds(u_raw, &bounds);
        let next =
            plant_step(&b.state, c.u_applied, w, params, cfg.sample_dt, substeps).map_err(|e| {
                Error::Divergence {
                    building: i,
                    t,
                    detail: e.to_string(),
                }
            })?;
        b.controller.record_applied(c.u_applied)?;
        records.push(BuildingRecord {
            state: b.state,
            u_applied: c.u_applied,
            p: c.p,
            clamped: c.clamped,
        });
        b.state = next;
    }

    let sum_p = records.iter().map(|r| r.p).sum();
    Ok(StepRecord {
        t,
        pv,
        band,
        bounds,
        buildings: records,
        sum_p,
    })
}
