//! Profile ODE for a hypothetical stationary curve written in the arc
//! variable `u`. With `R = r/r̲` the constraint reads
//! `(R′)² = c²R²(R_min − R)(R − R_max)`, which closes on a period that is
//! always too long for the `k = 0` angular bookkeeping.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rk::{Crossing, Integrator, Tolerances};

/// Slack allowed on `R ∈ [R_min, R_max]` before integration is declared failed.
pub const RANGE_SLACK: f64 = 1e-9;

fn check_c(c: f64) -> Result<()> {
    if !c.is_finite() || c <= 2.0 {
        return Err(Error::domain(format!("c must be finite and > 2, got {c}")));
    }
    Ok(())
}

fn check_k(k: i64) -> Result<()> {
    if k != 0 && k != 1 {
        return Err(Error::domain(format!("k must be 0 or 1, got {k}")));
    }
    Ok(())
}

/// `(R_min, R_max) = ((c − 2)/c, (c + 2)/c)`.
pub fn bounds(c: f64) -> Result<(f64, f64)> {
    check_c(c)?;
    Ok(((c - 2.0) / c, (c + 2.0) / c))
}

/// `u(R)` on the descending branch starting from `R(0) = R_max`.
pub fn closed_form_u(r: f64, c: f64) -> Result<f64> {
    let (r_min, r_max) = bounds(c)?;
    if !(r_min..=r_max).contains(&r) {
        return Err(Error::domain(format!("R = {r} outside [{r_min}, {r_max}]")));
    }
    let s = (c * c - 4.0).sqrt();
    let delta = 0.5 * c * (r - 1.0);
    // 1 − δ² = (c/2)²(R_max − R)(R − R_min), exact at both endpoints
    let cos_part = 0.5 * c * ((r_max - r) * (r - r_min)).max(0.0).sqrt();
    let angle = (c * delta + 2.0).atan2(s * cos_part);
    Ok((0.5 * PI - angle) / s)
}

/// `u(R)` on the ascending branch, between `u1` and `u*`.
pub fn closed_form_u_ascending(r: f64, c: f64) -> Result<f64> {
    Ok(2.0 * half_period(c)? - closed_form_u(r, c)?)
}

/// `u1 = π/√(c² − 4)`, the time from `R_max` down to `R_min`.
pub fn half_period(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(PI / (c * c - 4.0).sqrt())
}

/// Period bookkeeping for a given `c` and winding `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodAnalysis {
    pub c: f64,
    pub k: i64,
    pub r_min: f64,
    pub r_max: f64,
    pub u1: f64,
    pub u_star: f64,
    pub required_u_star: f64,
    pub closure_gap: f64,
}

pub fn period_analysis(c: f64, k: i64) -> Result<PeriodAnalysis> {
    check_k(k)?;
    let (r_min, r_max) = bounds(c)?;
    let u1 = half_period(c)?;
    let u_star = 2.0 * u1;
    let required_u_star = 2.0 * (k + 1) as f64 * PI / c;
    Ok(PeriodAnalysis {
        c,
        k,
        r_min,
        r_max,
        u1,
        u_star,
        required_u_star,
        closure_gap: u_star - required_u_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub u: f64,
    pub r: f64,
    pub r_prime: f64,
    /// Candidate `ρ = (r̲R)^{-1/2}` with `r̲ = 1`.
    pub rho: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeProfile {
    #[serde(flatten)]
    pub header: PeriodAnalysis,
    /// Coefficient in `f(u) = (c/2)u + K·I(u) + f(0)`.
    pub k_coeff: f64,
    /// `I* = ∫₀^{u*} ρ^{-2}` over the required period.
    pub i_star: f64,
    pub r_underline: f64,
    /// First turning point `R = R_min` found by event location.
    pub numeric_u1: f64,
    pub numeric_period: f64,
    /// `∫ R` over the numeric period.
    pub numeric_i: f64,
    /// `|f(T) − f(0) − 2kπ|` with `T` the numeric period.
    pub angular_closure_defect: f64,
    /// Largest `|(R′)² − c²R²(R_min − R)(R − R_max)|` along the integrated states.
    pub max_constraint_residual: f64,
    /// Largest `|(ρ′/ρ)² + (f′)² − 1|` along the samples.
    pub max_unit_speed_residual: f64,
    pub min_df_du: f64,
    pub samples: Vec<ProfileSample>,
}

/// Coefficient `K = (2kπ − c u*/2)/I*` for the required period, with
/// `r̲ = 1` so that `I* = u*`.
pub fn k_coefficient(c: f64, k: i64) -> Result<(f64, f64)> {
    let pa = period_analysis(c, k)?;
    let i_star = pa.required_u_star;
    Ok(((2.0 * k as f64 * PI - 0.5 * c * pa.required_u_star) / i_star, i_star))
}

/// `c²R²(R_min − R)(R − R_max)`.
pub fn constraint_rhs(r: f64, c: f64) -> f64 {
    let (r_min, r_max) = ((c - 2.0) / c, (c + 2.0) / c);
    c * c * r * r * (r_min - r) * (r - r_max)
}

/// Second-order form of the constraint together with `I′ = R`.
fn vector_field(c: f64) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
    let c2 = c * c;
    move |_u, y| {
        let r = y[0];
        let d = r - 1.0;
        [y[1], 4.0 * r - c2 * r * d * d - c2 * r * r * d, r]
    }
}

/// `integrate_profile_k` with the `k = 0` period assignment.
pub fn integrate_profile(c: f64, n_steps: usize) -> Result<OdeProfile> {
    integrate_profile_k(c, 0, n_steps)
}

/// Integrates one oscillation of `R` from `R_max`, locates both turning
/// points, then resamples the closed orbit on `n_steps` uniform nodes and
/// rebuilds the candidate `(ρ, f)`.
pub fn integrate_profile_k(c: f64, k: i64, n_steps: usize) -> Result<OdeProfile> {
    let header = period_analysis(c, k)?;
    if n_steps < 8 {
        return Err(Error::domain(format!("n_steps must be at least 8, got {n_steps}")));
    }
    let (k_coeff, i_star) = k_coefficient(c, k)?;
    let field = vector_field(c);
    let y0 = [header.r_max, 0.0, 0.0];
    let t_max = 4.0 * header.u_star;

    let mut it = Integrator::new(Tolerances::default(), 1e-3 / c);
    let (numeric_u1, y1) = it.integrate_to_event(&field, 0.0, y0, t_max, |y| y[1], Crossing::Rising)?;
    let (numeric_period, y_end) =
        it.integrate_to_event(&field, numeric_u1, y1, t_max, |y| y[1], Crossing::Falling)?;
    check_range(&header, y1[0], numeric_u1)?;
    check_range(&header, y_end[0], numeric_period)?;

    let f_of = |u: f64, i: f64| 0.5 * c * u + k_coeff * i;
    let h = numeric_period / n_steps as f64;
    let mut samples = Vec::with_capacity(n_steps);
    let mut y = y0;
    let mut max_constraint_residual: f64 = 0.0;
    let mut max_unit_speed_residual: f64 = 0.0;
    let mut min_df_du = f64::INFINITY;
    for j in 0..n_steps {
        let u = j as f64 * h;
        if j > 0 {
            y = it.integrate(&field, (j - 1) as f64 * h, y, u)?;
        }
        let [r, p, i] = y;
        check_range(&header, r, u)?;
        let rho = r.powf(-0.5);
        let df = 0.5 * c + k_coeff * r;
        let log_rho_d = -0.5 * p / r;
        max_constraint_residual = max_constraint_residual.max((p * p - constraint_rhs(r, c)).abs());
        max_unit_speed_residual = max_unit_speed_residual.max((log_rho_d * log_rho_d + df * df - 1.0).abs());
        min_df_du = min_df_du.min(df);
        samples.push(ProfileSample {
            u,
            r,
            r_prime: p,
            rho,
            f: f_of(u, i),
        });
    }
    let f_end = f_of(numeric_period, y_end[2]);
    let angular_closure_defect = (f_end - 2.0 * k as f64 * PI).abs();

    Ok(OdeProfile {
        header,
        k_coeff,
        i_star,
        r_underline: i_star / header.required_u_star,
        numeric_u1,
        numeric_period,
        numeric_i: y_end[2],
        angular_closure_defect,
        max_constraint_residual,
        max_unit_speed_residual,
        min_df_du,
        samples,
    })
}

fn check_range(h: &PeriodAnalysis, r: f64, u: f64) -> Result<()> {
    if r < h.r_min - RANGE_SLACK || r > h.r_max + RANGE_SLACK || !r.is_finite() {
        return Err(Error::IntegrationFailure(format!(
            "R = {r} left [{}, {}] at u = {u}",
            h.r_min, h.r_max
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_examples() {
        let (a, b) = bounds(3.0).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 5.0 / 3.0).abs() < 1e-15);
        let (a, b) = bounds(10.0).unwrap();
        assert!((a - 0.8).abs() < 1e-15 && (b - 1.2).abs() < 1e-15);
        assert!(matches!(bounds(2.0), Err(Error::DomainError(_))));
        assert!(matches!(bounds(f64::NAN), Err(Error::DomainError(_))));
    }

    #[test]
    fn closed_form_endpoints() {
        for c in [2.1, 3.0, 7.0] {
            let (r_min, r_max) = bounds(c).unwrap();
            assert_eq!(closed_form_u(r_max, c).unwrap(), 0.0);
            let u1 = closed_form_u(r_min, c).unwrap();
            assert!((u1 - PI / (c * c - 4.0).sqrt()).abs() < 1e-14);
            assert!(closed_form_u(r_max + 1e-6, c).is_err());
        }
        let u = closed_form_u(1.0, 2.5).unwrap();
        assert!((u - (0.5 * PI - (4.0f64 / 3.0).atan()) / 1.5).abs() < 1e-14);
        assert!((u - 0.42900).abs() < 5e-6);
    }

    #[test]
    fn period_examples() {
        let p = period_analysis(2.5, 0).unwrap();
        assert!((p.u_star - 4.18879).abs() < 1e-5);
        assert!((p.required_u_star - 2.51327).abs() < 1e-5);
        assert!((p.closure_gap - 1.67552).abs() < 1e-5);
        let p = period_analysis(2.0 * 2f64.sqrt(), 0).unwrap();
        assert!((p.u1 - PI / 2.0).abs() < 1e-14);
        assert!(period_analysis(3.0, 2).is_err());
        let gaps: Vec<f64> = [2.5, 3.0, 5.0, 10.0, 100.0]
            .iter()
            .map(|&c| period_analysis(c, 0).unwrap().closure_gap)
            .collect();
        assert!(gaps.iter().all(|&g| g > 0.0));
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn profile_matches_closed_period() {
        let p = integrate_profile(3.0, 512).unwrap();
        let rel = (p.numeric_period - p.header.u_star).abs() / p.header.u_star;
        assert!(rel < 1e-6, "{rel}");
        assert!((p.numeric_u1 - p.header.u1).abs() < 1e-9);
        assert!(p.max_constraint_residual < 1e-9);
        assert!(p.max_unit_speed_residual < 1e-9);
        let (lo, hi) = bounds(3.0).unwrap();
        assert!(p.samples.iter().all(|s| s.r >= lo - RANGE_SLACK && s.r <= hi + RANGE_SLACK));
    }

    #[test]
    fn closure_defect_for_k0() {
        let c = 2.5;
        let p = integrate_profile(c, 256).unwrap();
        let expected = c * PI / (c * c - 4.0).sqrt() - PI;
        assert!(p.angular_closure_defect > 0.1);
        assert!((p.angular_closure_defect - expected).abs() < 1e-8);
        // ∫R over one period equals 2π/c
        assert!((p.numeric_i - 2.0 * PI / c).abs() < 1e-9);
    }

    #[test]
    fn k1_profile_has_increasing_angle() {
        let p = integrate_profile_k(4.0, 1, 256).unwrap();
        assert!(p.k_coeff.abs() < 1e-15);
        assert!(p.min_df_du > 0.0);
        assert!(p.samples.windows(2).all(|w| w[1].f > w[0].f));
    }
}
