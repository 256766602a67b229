//! Dormand-Prince 5(4) stepper with embedded error control.
//!
//! The driver is deliberately step-at-a-time: callers (the shooting code)
//! inspect every accepted state to decide on blow-up, trapping, or output.

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Why a step could not be taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepFailure {
    /// Step size fell below `min_step_rel·|t|`.
    Collapse { t: f64, h: f64 },
    /// The right-hand side produced a non-finite value.
    NonFinite { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub rtol: f64,
    pub atol: f64,
    pub min_step_rel: f64,
    pub max_step: f64,
    t: f64,
    y: [f64; N],
    h: f64,
    k1: [f64; N],
    /// Sum of the local error estimates of every accepted step, per component.
    pub error_sum: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new<F>(rhs: &F, t0: f64, y0: [f64; N], h0: f64, rtol: f64, atol: f64) -> Self
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        Self {
            rtol,
            atol,
            min_step_rel: 1e-14,
            max_step: f64::INFINITY,
            t: t0,
            y: y0,
            h: h0,
            k1: rhs(t0, &y0),
            error_sum: [0.0; N],
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Derivative at the current state (first stage of the next step).
    pub fn dy(&self) -> [f64; N] {
        self.k1
    }

    /// Takes one accepted step, never overshooting `t_limit` (which must lie
    /// ahead of the current time in the direction of integration).
    pub fn step<F>(&mut self, rhs: &F, t_limit: f64) -> Result<(f64, [f64; N]), StepFailure>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let dir = (t_limit - self.t).signum();
        loop {
            let mut h = self.h.abs().min(self.max_step).min((t_limit - self.t).abs()) * dir;
            let hmin = self.min_step_rel * self.t.abs().max(1e-300);
            if h.abs() < hmin && (t_limit - self.t).abs() > hmin {
                return Err(StepFailure::Collapse { t: self.t, h: h.abs() });
            }
            if h == 0.0 {
                h = hmin * dir;
            }
            let mut k = [[0.0; N]; 7];
            k[0] = self.k1;
            for s in 1..7 {
                let mut ys = self.y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    *yi += h * acc;
                }
                k[s] = rhs(self.t + C[s] * h, &ys);
            }
            let mut ynew = self.y;
            for (i, yi) in ynew.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..6 {
                    acc += A[6][j] * k[j][i];
                }
                *yi += h * acc;
            }
            if ynew.iter().chain(k[6].iter()).any(|v| !v.is_finite()) {
                self.h = 0.25 * h.abs();
                self.rejected += 1;
                if self.h < hmin {
                    return Err(StepFailure::NonFinite { t: self.t });
                }
                continue;
            }
            let mut err = 0.0f64;
            let mut local = [0.0; N];
            for i in 0..N {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                local[i] = (h * e).abs();
                let sc = self.atol + self.rtol * self.y[i].abs().max(ynew[i].abs());
                err = err.max(local[i] / sc);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t += h;
                self.y = ynew;
                self.k1 = k[6];
                self.h = h.abs() * fac;
                self.accepted += 1;
                for i in 0..N {
                    self.error_sum[i] += local[i];
                }
                return Ok((self.t, self.y));
            }
            self.rejected += 1;
            self.h = h.abs() * fac.min(1.0);
        }
    }
}
