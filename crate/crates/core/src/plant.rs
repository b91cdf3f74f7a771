//! Three-state RC thermal model of a building: room air `T1`, interior wall
//! surface `T2` and exterior wall core `T3`.
//!
//! Capacitances are in kJ/°C and conductances in kW/°C, which gives °C/s;
//! everything here is rescaled to °C/h.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Plausible temperature range (°C) used as a divergence guard.
pub const SANE_RANGE: (f64, f64) = (-20.0, 60.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildingParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub k1: f64,
    pub k2: f64,
    /// Listed with the other constants but not used by any equation.
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
}

impl Default for BuildingParams {
    fn default() -> Self {
        BuildingParams {
            c1: 9.356e5,
            c2: 2.970e6,
            c3: 6.695e5,
            k1: 16.48,
            k2: 108.5,
            k3: 5.0,
            k4: 30.5,
            k5: 23.04,
        }
    }
}

impl BuildingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k4", self.k4),
            ("k5", self.k5),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingState {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl BuildingState {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Self {
        BuildingState { t1, t2, t3 }
    }

    pub fn uniform(t: f64) -> Self {
        BuildingState::new(t, t, t)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.t1, self.t2, self.t3]
    }

    fn from_array(a: [f64; 3]) -> Self {
        BuildingState::new(a[0], a[1], a[2])
    }

    pub fn is_sane(&self) -> bool {
        self.as_array()
            .iter()
            .all(|v| v.is_finite() && *v >= SANE_RANGE.0 && *v <= SANE_RANGE.1)
    }
}

/// External inputs held over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSample {
    /// Outside air temperature (°C).
    pub d1: f64,
    /// Solar gain (kW).
    pub d2: f64,
    /// Internal heat sources (kW).
    pub d3: f64,
}

impl DisturbanceSample {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Self {
        DisturbanceSample { d1, d2, d3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()) {
            return Err(Error::Input(format!("non-finite disturbance {self:?}")));
        }
        if self.d2 < 0.0 || self.d3 < 0.0 {
            return Err(Error::Input(format!(
                "heat gains must be non-negative, got d2={}, d3={}",
                self.d2, self.d3
            )));
        }
        Ok(())
    }
}

/// State derivative in °C/h for cooling power `u_c` (kW, ≤ 0 when cooling).
pub fn plant_derivative(
    x: &BuildingState,
    u_c: f64,
    w: &DisturbanceSample,
    p: &BuildingParams,
) -> [f64; 3] {
    let k12 = p.k1 + p.k2;
    let dt1 = (k12 * (x.t2 - x.t1) + p.k5 * (x.t3 - x.t1) + u_c + w.d2 + w.d3) / p.c1;
    let dt2 = (k12 * (x.t1 - x.t2) + w.d2) / p.c2;
    let dt3 = (p.k5 * (x.t1 - x.t3) + p.k4 * (w.d1 - x.t3)) / p.c3;
    [
        SECONDS_PER_HOUR * dt1,
        SECONDS_PER_HOUR * dt2,
        SECONDS_PER_HOUR * dt3,
    ]
}

/// Advances the state by `dt` hours with RK4, holding `u_c` and `w` constant.
pub fn plant_step(
    x: &BuildingState,
    u_c: f64,
    w: &DisturbanceSample,
    p: &BuildingParams,
    dt: f64,
    substeps: usize,
) -> Result<BuildingState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Input(format!(
            "step length must be positive, got {dt}"
        )));
    }
    if substeps == 0 {
        return Err(Error::Input("substeps must be at least 1".into()));
    }
    if !u_c.is_finite() || u_c > 0.0 {
        return Err(Error::Input(format!(
            "cooling power must be finite and <= 0, got {u_c}"
        )));
    }

    let h = dt / substeps as f64;
    let f = |s: [f64; 3]| plant_derivative(&BuildingState::from_array(s), u_c, w, p);
    let axpy =
        |s: [f64; 3], a: f64, k: [f64; 3]| [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]];

    let mut s = x.as_array();
    for _ in 0..substeps {
        let k1 = f(s);
        let k2 = f(axpy(s, h / 2.0, k1));
        let k3 = f(axpy(s, h / 2.0, k2));
        let k4 = f(axpy(s, h, k3));
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    let next = BuildingState::from_array(s);
    if next.is_sane() {
        Ok(next)
    } else {
        Err(Error::StateOutOfRange(s))
    }
}

/// Continuous-time matrices of `ẋ = A·x + B·u + C·w`, in hour units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: [[f64; 3]; 3],
}

impl StateSpace {
    pub fn apply(&self, x: &BuildingState, u_c: f64, w: &DisturbanceSample) -> [f64; 3] {
        let x = x.as_array();
        let w = [w.d1, w.d2, w.d3];
        std::array::from_fn(|i| {
            (0..3)
                .map(|j| self.a[i][j] * x[j] + self.c[i][j] * w[j])
                .sum::<f64>()
                + self.b[i] * u_c
        })
    }
}

pub fn build_matrices(p: &BuildingParams) -> StateSpace {
    let s = SECONDS_PER_HOUR;
    let k12 = p.k1 + p.k2;
    StateSpace {
        a: [
            [-s * (k12 + p.k5) / p.c1, s * k12 / p.c1, s * p.k5 / p.c1],
            [s * k12 / p.c2, -s * k12 / p.c2, 0.0],
            [s * p.k5 / p.c3, 0.0, -s * (p.k5 + p.k4) / p.c3],
        ],
        b: [s / p.c1, 0.0, 0.0],
        c: [
            [0.0, s / p.c1, s / p.c1],
            [0.0, s / p.c2, 0.0],
            [s * p.k4 / p.c3, 0.0, 0.0],
        ],
    }
}
