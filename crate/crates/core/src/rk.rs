//! Dormand-Prince 5(4) embedded Runge-Kutta integrator with step-size
//! control and sign-change event location.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// B5 - B4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-13,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

/// Direction of a zero crossing of the event function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
}

/// One explicit Dormand-Prince step. Returns the 5th-order solution and the
/// embedded error estimate.
pub fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    (y5, err)
}

/// Adaptive integrator carrying its step size between calls.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub tol: Tolerances,
    h: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Integrator {
    pub fn new(tol: Tolerances, h0: f64) -> Self {
        Self {
            tol,
            h: h0,
            accepted: 0,
            rejected: 0,
        }
    }

    fn error_norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        (0..N)
            .map(|i| err[i].abs() / (self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs())))
            .fold(0.0, f64::max)
    }

    /// Attempts steps from `(t, y)` until one is accepted; the step never
    /// passes `t_end`. Returns the new time and state.
    fn advance<const N: usize, F>(&mut self, f: &F, t: f64, y: &[f64; N], t_end: f64) -> Result<(f64, [f64; N])>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        loop {
            let h = self.h.min(t_end - t);
            let (y_new, err) = dp_step(f, t, y, h);
            let norm = self.error_norm(y, &y_new, &err);
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if norm <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                self.accepted += 1;
                // keep the proposal when the step was shortened to hit t_end
                if h == self.h {
                    self.h *= factor;
                }
                return Ok((t + h, y_new));
            }
            self.rejected += 1;
            self.h = h * factor.min(0.5);
            if self.h < self.tol.h_min {
                return Err(Error::IntegrationFailure(format!(
                    "step size underflow at t = {t} (error norm {norm:e})"
                )));
            }
        }
    }

    /// Integrates from `t0` to `t1 > t0`.
    pub fn integrate<const N: usize, F>(&mut self, f: &F, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let (mut t, mut y) = (t0, y0);
        let mut steps = 0;
        while t < t1 {
            (t, y) = self.advance(f, t, &y, t1)?;
            steps += 1;
            if steps > self.tol.max_steps {
                return Err(Error::IntegrationFailure("step budget exhausted".into()));
            }
        }
        Ok(y)
    }

    /// Integrates from `t0` until `event(y)` crosses zero in the requested
    /// direction, or fails after `t_max`. The crossing is located by solving
    /// for the length of a single step from the last accepted state.
    pub fn integrate_to_event<const N: usize, F, G>(
        &mut self,
        f: &F,
        t0: f64,
        y0: [f64; N],
        t_max: f64,
        event: G,
        crossing: Crossing,
    ) -> Result<(f64, [f64; N])>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        G: Fn(&[f64; N]) -> f64,
    {
        let (mut t, mut y) = (t0, y0);
        let mut g = event(&y);
        let mut steps = 0;
        while t < t_max {
            let (t_new, y_new) = self.advance(f, t, &y, t_max)?;
            let g_new = event(&y_new);
            let crossed = match crossing {
                Crossing::Rising => g < 0.0 && g_new >= 0.0,
                Crossing::Falling => g > 0.0 && g_new <= 0.0,
            };
            if crossed {
                return Ok(locate(f, &event, t, &y, g, t_new - t));
            }
            (t, y, g) = (t_new, y_new, g_new);
            steps += 1;
            if steps > self.tol.max_steps {
                return Err(Error::IntegrationFailure("step budget exhausted".into()));
            }
        }
        Err(Error::IntegrationFailure(format!(
            "no {crossing:?} event before t = {t_max}"
        )))
    }
}

/// Illinois regula falsi on the step length `θ ∈ (0, h]`.
fn locate<const N: usize, F, G>(f: &F, event: &G, t: f64, y: &[f64; N], g0: f64, h: f64) -> (f64, [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> f64,
{
    let eval = |theta: f64| {
        let (ys, _) = dp_step(f, t, y, theta);
        (event(&ys), ys)
    };
    let (mut lo, mut glo) = (0.0, g0);
    let (mut hi, (mut ghi, mut yhi)) = (h, eval(h));
    let mut side = 0i8;
    for _ in 0..200 {
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * (t.abs() + h) || ghi == 0.0 {
            break;
        }
        let theta = (lo * ghi - hi * glo) / (ghi - glo);
        let theta = if theta > lo && theta < hi { theta } else { 0.5 * (lo + hi) };
        let (gt, yt) = eval(theta);
        if gt == 0.0 {
            return (t + theta, yt);
        }
        if (gt < 0.0) == (glo < 0.0) {
            lo = theta;
            glo = gt;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = theta;
            ghi = gt;
            yhi = yt;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    (t + hi, yhi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_over_one_period() {
        let mut it = Integrator::new(Tolerances::default(), 1e-2);
        let y = it.integrate(&oscillator, 0.0, [1.0, 0.0], 2.0 * PI).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn exponential_growth() {
        let mut it = Integrator::new(Tolerances::default(), 1e-3);
        let y = it.integrate(&|_t, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn event_locates_quarter_period() {
        let mut it = Integrator::new(Tolerances::default(), 1e-2);
        let (t, y) = it
            .integrate_to_event(&oscillator, 0.0, [1.0, 0.0], 10.0, |y| y[0], Crossing::Falling)
            .unwrap();
        assert!((t - PI / 2.0).abs() < 1e-12, "{t}");
        assert!(y[0].abs() < 1e-12);
        let (t2, _) = it
            .integrate_to_event(&oscillator, t, y, 10.0, |y| y[1], Crossing::Rising)
            .unwrap();
        assert!((t2 - PI).abs() < 1e-11, "{t2}");
    }

    #[test]
    fn missing_event_is_an_error() {
        let mut it = Integrator::new(Tolerances::default(), 1e-2);
        let r = it.integrate_to_event(&oscillator, 0.0, [1.0, 0.0], 1.0, |y| y[0], Crossing::Falling);
        assert!(matches!(r, Err(Error::IntegrationFailure(_))));
    }
}
