#![allow(dead_code)]

//! Test-only oracles, written independently of the library code paths.

use pvflock::{Estimator, IpController, Reference, SampleWindow};

pub const DT: f64 = 1.0 / 6.0;

/// Paper constants, restated here so the oracle does not share code with
/// the plant module.
pub const C1: f64 = 9.356e5;
pub const C2: f64 = 2.970e6;
pub const C3: f64 = 6.695e5;
pub const K1: f64 = 16.48;
pub const K2: f64 = 108.5;
pub const K4: f64 = 30.5;
pub const K5: f64 = 23.04;

/// RC model right-hand side in °C/h.
pub fn rc_rhs(x: &[f64; 3], u: f64, d: [f64; 3]) -> [f64; 3] {
    let [t1, t2, t3] = *x;
    let [d1, d2, d3] = d;
    [
        3600.0 / C1 * ((K1 + K2) * (t2 - t1) + K5 * (t3 - t1) + u + d2 + d3),
        3600.0 / C2 * ((K1 + K2) * (t1 - t2) + d2),
        3600.0 / C3 * (K5 * (t1 - t3) + K4 * (d1 - t3)),
    ]
}

/// Adaptive Dormand–Prince 5(4) integration of `ẋ = f(x)` over `[0, t_end]`.
pub fn dopri5<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    x0: [f64; N],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> [f64; N] {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut t = 0.0;
    let mut x = x0;
    let mut h = (t_end / 100.0).min(0.01);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = f(&x);
        for s in 1..7 {
            let mut xs = x;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    xs[i] += h * A[s - 1][j] * kj[i];
                }
            }
            k[s] = f(&xs);
        }
        let mut x5 = x;
        let mut err = 0.0_f64;
        for i in 0..N {
            let mut hi5 = 0.0;
            let mut hi4 = 0.0;
            for s in 0..7 {
                hi5 += B5[s] * k[s][i];
                hi4 += B4[s] * k[s][i];
            }
            x5[i] += h * hi5;
            let scale = atol + rtol * x[i].abs().max(x5[i].abs());
            err = err.max((h * (hi5 - hi4)).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            x = x5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            0.9 * err.powf(-0.2)
        };
        h *= factor.clamp(0.2, 5.0);
    }
    x
}

/// Scalar test plant `ẏ = F₀ + α·u`. With `u` held over the interval the
/// update is exact.
pub struct ScalarPlant {
    pub f0: f64,
    pub alpha: f64,
    pub y: f64,
}

impl ScalarPlant {
    pub fn advance(&mut self, u: f64, dt: f64) {
        self.y += dt * (self.f0 + self.alpha * u);
    }
}

pub fn controller(estimator: Estimator, capacity: usize, setpoint: f64) -> IpController {
    IpController::new(
        5.0,
        2.0,
        Reference::constant(setpoint),
        estimator,
        SampleWindow::new(capacity, DT).unwrap(),
    )
    .unwrap()
}
