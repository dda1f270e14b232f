//! Seeded generators of regular test curves.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::curve::{beta_grid, CurveSpec, TrigPoly};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which family a random curve is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// `k = 1`, small perturbation of a circle about the origin.
    StarShaped,
    /// `k = 0`, perturbed circle contained in an open half-plane.
    HalfPlane,
}

fn random_poly<R: Rng>(rng: &mut R, a0: f64, degree: usize, amp: impl Fn(usize) -> f64) -> TrigPoly {
    let mut cos = Vec::with_capacity(degree);
    let mut sin = Vec::with_capacity(degree);
    for n in 1..=degree {
        let a = amp(n);
        cos.push(rng.random_range(-a..=a));
        sin.push(rng.random_range(-a..=a));
    }
    TrigPoly::new(a0, cos, sin)
}

fn add_poly(base: &TrigPoly, extra: &TrigPoly) -> TrigPoly {
    let deg = base.degree().max(extra.degree());
    let at = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
    TrigPoly::new(
        base.a0 + extra.a0,
        (0..deg).map(|i| at(&base.cos, i) + at(&extra.cos, i)).collect(),
        (0..deg).map(|i| at(&base.sin, i) + at(&extra.sin, i)).collect(),
    )
}

/// Draws a regular curve of the requested kind.
pub fn random_curve<R: Rng>(rng: &mut R, kind: CurveKind) -> CurveSpec {
    loop {
        let curve = match kind {
            CurveKind::StarShaped => {
                let a0 = rng.random_range(-0.5..0.5);
                let degree = rng.random_range(1..=3);
                let log_rho = random_poly(rng, a0, degree, |n| 0.15 / n as f64);
                let f = random_poly(rng, 0.0, degree, |n| 0.1 / (n * n) as f64);
                CurveSpec::new(log_rho, f, 1)
            }
            CurveKind::HalfPlane => {
                let d = rng.random_range(1.6..3.0);
                let phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let Ok(base) = CurveSpec::shifted_circle(Complex64::from_polar(d, phase), 1.0) else {
                    continue;
                };
                let bump_r = random_poly(rng, 0.0, 2, |_| 0.03);
                let bump_f = random_poly(rng, 0.0, 2, |_| 0.03);
                CurveSpec::new(
                    add_poly(&base.log_rho, &bump_r),
                    add_poly(&base.f_periodic, &bump_f),
                    0,
                )
            }
        };
        if curve.check_regularity().is_ok() {
            return curve;
        }
    }
}

/// Random curve of either kind, alternating by a coin flip.
pub fn random_mixed_curve<R: Rng>(rng: &mut R) -> CurveSpec {
    let kind = if rng.random_bool(0.5) {
        CurveKind::StarShaped
    } else {
        CurveKind::HalfPlane
    };
    random_curve(rng, kind)
}

/// Variance of `ρ(β)` over a uniform `β` grid.
pub fn rho_variance(curve: &CurveSpec, n: usize) -> f64 {
    let values: Vec<f64> = beta_grid(n).map(|b| curve.rho(b)).collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64
}

/// Random regular curve whose `ρ`-variance is at least `min_variance`.
pub fn random_noncircular_curve<R: Rng>(rng: &mut R, min_variance: f64) -> CurveSpec {
    loop {
        let c = random_mixed_curve(rng);
        if rho_variance(&c, 512) >= min_variance {
            return c;
        }
    }
}
