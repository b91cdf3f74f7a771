//! Model-free control: the ultra-local model `ẏ = F + α·u`, the intelligent
//! proportional (iP) law and the two windowed estimators of `F`.
//!
//! Time is in hours throughout, so `α` is in °C/h per kW and `K_P` in 1/h.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the spacing between consecutive window samples.
pub const SPACING_RTOL: f64 = 1e-9;

/// One measurement/actuation record fed to the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Time (h).
    pub t: f64,
    /// Measured output (°C).
    pub y: f64,
    /// Applied control, thermal sign convention (kW, ≤ 0 when cooling).
    pub u: f64,
    /// Tracking error `y - y*` (°C).
    pub e: f64,
    /// Reference derivative (°C/h).
    pub y_star_dot: f64,
}

impl Sample {
    pub fn new(t: f64, y: f64, u: f64, e: f64, y_star_dot: f64) -> Self {
        Sample {
            t,
            y,
            u,
            e,
            y_star_dot,
        }
    }

    fn is_finite(&self) -> bool {
        [self.t, self.y, self.u, self.e, self.y_star_dot]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Fixed-capacity FIFO of uniformly spaced samples.
///
/// The capacity is odd so that the span `τ = (capacity - 1)·dt` contains an
/// even number of intervals and composite Simpson quadrature applies.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    capacity: usize,
    dt: f64,
    samples: VecDeque<Sample>,
}

impl SampleWindow {
    pub fn new(capacity: usize, dt: f64) -> Result<Self> {
        if capacity < 3 || capacity.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window capacity must be odd and at least 3, got {capacity}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "window spacing must be positive, got {dt}"
            )));
        }
        Ok(SampleWindow {
            capacity,
            dt,
            samples: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Window span `τ` in hours.
    pub fn span(&self) -> f64 {
        (self.capacity - 1) as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &Sample> + '_ {
        self.samples.iter()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.back()
    }

    /// Appends `s`, evicting the oldest sample when the window is full.
    pub fn push(&mut self, s: Sample) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::Input(format!("non-finite sample {s:?}")));
        }
        if let Some(last) = self.samples.back() {
            if s.t <= last.t {
                return Err(Error::NonMonotoneTime {
                    t: s.t,
                    last: last.t,
                });
            }
            let gap = s.t - last.t;
            if (gap - self.dt).abs() > SPACING_RTOL * self.dt {
                return Err(Error::NonUniformSpacing {
                    got: gap,
                    expected: self.dt,
                });
            }
        }
        if self.is_full() {
            self.samples.pop_front();
        }
        self.samples.push_back(s);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    fn ready(&self) -> Result<()> {
        if self.is_full() {
            Ok(())
        } else {
            Err(Error::WindowNotReady {
                have: self.samples.len(),
                need: self.capacity,
            })
        }
    }

    /// Composite Simpson integral over the window of `f(σ, sample)`, with
    /// `σ` measured in hours from the oldest sample.
    fn integrate(&self, f: impl Fn(f64, &Sample) -> f64) -> f64 {
        let h = self.dt;
        let last = self.samples.len() - 1;
        let sum: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let weight = if i == 0 || i == last {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                weight * f(i as f64 * h, s)
            })
            .sum();
        sum * h / 3.0
    }
}

/// Which windowed estimate of `F` a controller uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Algebraic estimate from the measured output and applied input.
    #[default]
    Algebraic,
    /// Average of `ẏ* - α·u - K_P·e` over the window.
    ClosedLoop,
}

/// The iP law `u = -(F̂ - ẏ* + K_P·e) / α`. No saturation is applied here.
pub fn ip_control(f_hat: f64, y_star_dot: f64, e: f64, alpha: f64, kp: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::Config("alpha must be non-zero".into()));
    }
    if ![f_hat, y_star_dot, e, alpha, kp]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::Input("ip_control inputs must be finite".into()));
    }
    Ok(-(f_hat - y_star_dot + kp * e) / alpha)
}

/// Algebraic estimate
///
/// `F̂ = -(6/τ³) ∫₀^τ [(τ - 2σ)·y(σ) + α·σ(τ - σ)·u(σ)] dσ`
///
/// with `σ` running from the oldest to the newest sample. Exact for affine
/// `y` with constant `u`, since the integrand is then at most quadratic.
pub fn estimate_f_algebraic(window: &SampleWindow, alpha: f64) -> Result<f64> {
    window.ready()?;
    let tau = window.span();
    let integral = window
        .integrate(|sigma, s| (tau - 2.0 * sigma) * s.y + alpha * sigma * (tau - sigma) * s.u);
    Ok(-6.0 / tau.powi(3) * integral)
}

/// Closed-loop estimate `F̂ = (1/τ) ∫ (ẏ* - α·u - K_P·e) dσ`.
///
/// When the stored `u` is exactly the iP output the integrand equals the
/// `F̂` that produced it, so this estimate only moves when the applied
/// control differs from the requested one (saturation, band clamping).
pub fn estimate_f_closed_loop(window: &SampleWindow, alpha: f64, kp: f64) -> Result<f64> {
    window.ready()?;
    let tau = window.span();
    let integral = window.integrate(|_, s| s.y_star_dot - alpha * s.u - kp * s.e);
    Ok(integral / tau)
}

/// Reference trajectory: a constant setpoint, optionally reached by a linear
/// ramp starting at `t = 0` from the initial measured value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub setpoint: f64,
    pub ramp_from: f64,
    pub ramp_hours: f64,
}

impl Reference {
    pub fn constant(setpoint: f64) -> Self {
        Reference {
            setpoint,
            ramp_from: setpoint,
            ramp_hours: 0.0,
        }
    }

    pub fn ramp(from: f64, setpoint: f64, hours: f64) -> Self {
        Reference {
            setpoint,
            ramp_from: from,
            ramp_hours: hours.max(0.0),
        }
    }

    /// `(y*, ẏ*)` at time `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        if self.ramp_hours > 0.0 && t < self.ramp_hours {
            let slope = (self.setpoint - self.ramp_from) / self.ramp_hours;
            (self.ramp_from + slope * t.max(0.0), slope)
        } else {
            (self.setpoint, 0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingStep {
    t: f64,
    y: f64,
    e: f64,
    y_star_dot: f64,
}

/// Intelligent proportional controller with its own estimator window.
///
/// Each sampling instant: [`IpController::step`] returns the raw command,
/// the caller saturates and applies it, then reports the applied value via
/// [`IpController::record_applied`].
#[derive(Debug, Clone, PartialEq)]
pub struct IpController {
    alpha: f64,
    kp: f64,
    reference: Reference,
    estimator: Estimator,
    f_hat: f64,
    window: SampleWindow,
    last_t: Option<f64>,
    pending: Option<PendingStep>,
}

impl IpController {
    pub fn new(
        alpha: f64,
        kp: f64,
        reference: Reference,
        estimator: Estimator,
        window: SampleWindow,
    ) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::Config(format!(
                "alpha must be finite and non-zero, got {alpha}"
            )));
        }
        if !(kp > 0.0 && kp.is_finite()) {
            return Err(Error::Config(format!("kp must be positive, got {kp}")));
        }
        if !reference.setpoint.is_finite() || !reference.ramp_from.is_finite() {
            return Err(Error::Config("reference must be finite".into()));
        }
        Ok(IpController {
            alpha,
            kp,
            reference,
            estimator,
            f_hat: 0.0,
            window,
            last_t: None,
            pending: None,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kp(&self) -> f64 {
        self.kp
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn f_hat(&self) -> f64 {
        self.f_hat
    }

    pub fn window(&self) -> &SampleWindow {
        &self.window
    }

    /// Estimate from the configured estimator, or `WindowNotReady`.
    pub fn estimate(&self) -> Result<f64> {
        match self.estimator {
            Estimator::Algebraic => estimate_f_algebraic(&self.window, self.alpha),
            Estimator::ClosedLoop => estimate_f_closed_loop(&self.window, self.alpha, self.kp),
        }
    }

    /// Computes the raw command for measurement `y` at time `t`.
    ///
    /// `F̂` is refreshed once the window is full and stays at its default
    /// of zero before that.
    pub fn step(&mut self, y: f64, t: f64) -> Result<f64> {
        if self.window.is_full() {
            self.f_hat = self.estimate()?;
        }
        self.step_with_estimate(y, t, self.f_hat)
    }

    /// Same as [`IpController::step`] but with `F̂` supplied by the caller.
    pub fn step_with_estimate(&mut self, y: f64, t: f64, f_hat: f64) -> Result<f64> {
        if !y.is_finite() || !t.is_finite() || !f_hat.is_finite() {
            return Err(Error::Input(format!(
                "non-finite controller input y={y}, t={t}, f_hat={f_hat}"
            )));
        }
        if self.pending.is_some() {
            return Err(Error::Input(
                "applied control of the previous step was not recorded".into(),
            ));
        }
        if let Some(last) = self.last_t {
            let dt = self.window.dt();
            if (t - last - dt).abs() > SPACING_RTOL * dt {
                return Err(Error::NonUniformSpacing {
                    got: t - last,
                    expected: dt,
                });
            }
        }
        let (y_star, y_star_dot) = self.reference.at(t);
        let e = y - y_star;
        let u = ip_control(f_hat, y_star_dot, e, self.alpha, self.kp)?;
        self.f_hat = f_hat;
        self.last_t = Some(t);
        self.pending = Some(PendingStep {
            t,
            y,
            e,
            y_star_dot,
        });
        Ok(u)
    }

    /// Stores the control actually applied for the last step.
    pub fn record_applied(&mut self, u_applied: f64) -> Result<()> {
        let p = self.pending.take().ok_or_else(|| {
            Error::Input("no controller step awaiting its applied control".into())
        })?;
        self.window
            .push(Sample::new(p.t, p.y, u_applied, p.e, p.y_star_dot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 6.0;

    fn sample(t: f64, y: f64, u: f64) -> Sample {
        Sample::new(t, y, u, 0.0, 0.0)
    }

    fn filled(capacity: usize, dt: f64, f: impl Fn(f64) -> Sample) -> SampleWindow {
        let mut w = SampleWindow::new(capacity, dt).unwrap();
        for i in 0..capacity {
            w.push(f(i as f64 * dt)).unwrap();
        }
        w
    }

    #[test]
    fn push_into_empty_window() {
        let mut w = SampleWindow::new(3, DT).unwrap();
        w.push(Sample::new(0.0, 23.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn push_evicts_oldest() {
        let mut w = SampleWindow::new(3, DT).unwrap();
        for k in 0..4 {
            w.push(sample(k as f64 / 6.0, 23.0, 0.0)).unwrap();
        }
        let ts: Vec<f64> = w.samples().map(|s| s.t).collect();
        assert_eq!(ts, vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
    }

    #[test]
    fn push_rejects_repeated_time() {
        let mut w = SampleWindow::new(3, DT).unwrap();
        w.push(sample(1.0 / 6.0, 23.0, 0.0)).unwrap();
        assert!(matches!(
            w.push(sample(1.0 / 6.0, 23.0, 0.0)),
            Err(Error::NonMonotoneTime { .. })
        ));
    }

    #[test]
    fn push_rejects_uneven_spacing() {
        let mut w = SampleWindow::new(3, DT).unwrap();
        w.push(sample(0.0, 23.0, 0.0)).unwrap();
        assert!(matches!(
            w.push(sample(0.2, 23.0, 0.0)),
            Err(Error::NonUniformSpacing { .. })
        ));
    }

    #[test]
    fn window_capacity_must_be_odd() {
        assert!(SampleWindow::new(4, DT).is_err());
        assert!(SampleWindow::new(1, DT).is_err());
        assert!(SampleWindow::new(5, 0.0).is_err());
    }

    #[test]
    fn ip_control_examples() {
        assert_eq!(ip_control(0.0, 0.0, 0.0, 5.0, 2.0).unwrap(), 0.0);
        assert!((ip_control(0.0, 0.0, 1.0, 5.0, 2.0).unwrap() + 0.4).abs() < 1e-15);
        assert!((ip_control(2.0, 0.0, 0.0, 5.0, 2.0).unwrap() + 0.4).abs() < 1e-15);
        assert!(matches!(
            ip_control(0.0, 0.0, 1.0, 0.0, 2.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn algebraic_constant_output_is_zero() {
        let w = filled(5, DT, |t| sample(t, 23.0, 0.0));
        assert!(estimate_f_algebraic(&w, 5.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn algebraic_ramp_gives_slope() {
        // τ = 0.5 h with three samples.
        let w = filled(3, 0.25, |t| sample(t, 2.0 * t, 0.0));
        assert!((estimate_f_algebraic(&w, 5.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn algebraic_subtracts_input() {
        let w = filled(5, DT, |t| sample(t, 1.0 + 3.0 * t, 0.5));
        assert!((estimate_f_algebraic(&w, 5.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimators_need_full_window() {
        let mut w = SampleWindow::new(3, DT).unwrap();
        w.push(sample(0.0, 23.0, 0.0)).unwrap();
        assert!(matches!(
            estimate_f_algebraic(&w, 5.0),
            Err(Error::WindowNotReady { have: 1, need: 3 })
        ));
        assert!(estimate_f_closed_loop(&w, 5.0, 2.0).is_err());
    }

    #[test]
    fn closed_loop_constant_integrands() {
        let zero = filled(3, DT, |t| Sample::new(t, 23.0, 0.0, 0.0, 0.0));
        assert_eq!(estimate_f_closed_loop(&zero, 5.0, 2.0).unwrap(), 0.0);

        let cooling = filled(3, DT, |t| Sample::new(t, 23.0, -0.4, 0.0, 0.0));
        assert!((estimate_f_closed_loop(&cooling, 5.0, 2.0).unwrap() - 2.0).abs() < 1e-12);

        let mixed = filled(5, DT, |t| Sample::new(t, 23.5, 0.2, 0.5, 1.0));
        assert!((estimate_f_closed_loop(&mixed, 5.0, 2.0).unwrap() + 1.0).abs() < 1e-12);
    }

    fn controller(estimator: Estimator) -> IpController {
        IpController::new(
            5.0,
            2.0,
            Reference::constant(23.0),
            estimator,
            SampleWindow::new(5, DT).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn first_step_uses_zero_estimate() {
        let mut c = controller(Estimator::Algebraic);
        assert_eq!(c.step(23.0, 0.0).unwrap(), 0.0);

        let mut c = controller(Estimator::Algebraic);
        assert!((c.step(24.0, 0.0).unwrap() + 0.4).abs() < 1e-15);
        assert_eq!(c.f_hat(), 0.0);
    }

    #[test]
    fn step_requires_recorded_control() {
        let mut c = controller(Estimator::Algebraic);
        c.step(23.0, 0.0).unwrap();
        assert!(c.step(23.0, DT).is_err());
        c.record_applied(0.0).unwrap();
        c.step(23.0, DT).unwrap();
        assert!(c.record_applied(0.0).is_ok());
        assert!(c.record_applied(0.0).is_err());
    }

    #[test]
    fn step_rejects_skipped_interval() {
        let mut c = controller(Estimator::Algebraic);
        c.step(23.0, 0.0).unwrap();
        c.record_applied(0.0).unwrap();
        assert!(matches!(
            c.step(23.0, 2.0 * DT),
            Err(Error::NonUniformSpacing { .. })
        ));
    }

    #[test]
    fn controller_rejects_bad_gains() {
        let w = SampleWindow::new(3, DT).unwrap();
        let r = Reference::constant(23.0);
        assert!(IpController::new(0.0, 2.0, r, Estimator::Algebraic, w.clone()).is_err());
        assert!(IpController::new(5.0, 0.0, r, Estimator::Algebraic, w.clone()).is_err());
        assert!(IpController::new(5.0, -1.0, r, Estimator::Algebraic, w).is_err());
    }

    #[test]
    fn ramp_reference() {
        let r = Reference::ramp(26.0, 23.0, 3.0);
        let (y, yd) = r.at(1.5);
        assert!((y - 24.5).abs() < 1e-12);
        assert!((yd + 1.0).abs() < 1e-12);
        assert_eq!(r.at(3.0), (23.0, 0.0));
        assert_eq!(Reference::constant(23.0).at(0.0), (23.0, 0.0));
    }

    #[test]
    fn closed_loop_estimate_reproduces_unclamped_command() {
        // With u applied exactly as commanded the integrand is the F̂ in use.
        let mut c = controller(Estimator::ClosedLoop);
        let mut y = 24.0;
        for k in 0..12 {
            let u = c.step_with_estimate(y, k as f64 * DT, 1.5).unwrap();
            c.record_applied(u).unwrap();
            y += 0.1 * (k % 3) as f64;
        }
        assert!((c.estimate().unwrap() - 1.5).abs() < 1e-12);
    }
}
