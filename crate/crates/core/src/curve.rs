//! Closed plane curves `γ(β) = ρ(β) e^{i f(β)}` avoiding the origin.
//!
//! The log-radius `ln ρ` is a trigonometric polynomial, so `ρ > 0` holds by
//! construction. The angle is `f(β) = kβ + p(β)` with `p` a trigonometric
//! polynomial, which makes `f(β + 2π) = f(β) + 2kπ` exact. All derivatives
//! are analytic.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{
    adaptive_gauss_kronrod, periodic_trapezoid, periodic_trapezoid_converged,
    DEFAULT_PERIODIC_NODES, DEFAULT_PERIODIC_TOL,
};

/// `v² + w²` must stay above this everywhere.
pub const REGULARITY_THRESHOLD: f64 = 1e-12;
/// Grid used by [`CurveSpec::check_regularity`].
pub const REGULARITY_GRID: usize = 4096;

/// `a0 + Σ_n (cos[n-1] cos nβ + sin[n-1] sin nβ)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub a0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn constant(a0: f64) -> Self {
        Self {
            a0,
            ..Self::default()
        }
    }

    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { a0, cos, sin }
    }

    /// Highest harmonic with a stored coefficient.
    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    /// Value and first three derivatives at `beta`.
    pub fn eval_d3(&self, beta: f64) -> [f64; 4] {
        let mut out = [self.a0, 0.0, 0.0, 0.0];
        let step = Complex64::cis(beta);
        let mut rot = Complex64::new(1.0, 0.0);
        for n in 1..=self.degree() {
            // exact evaluation every 16 harmonics keeps the recurrence drift bounded
            rot = if n % 16 == 0 {
                Complex64::cis(n as f64 * beta)
            } else {
                rot * step
            };
            let a = self.cos.get(n - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(n - 1).copied().unwrap_or(0.0);
            let (c, s) = (rot.re, rot.im);
            let nf = n as f64;
            let even = a * c + b * s;
            let odd = b * c - a * s;
            out[0] += even;
            out[1] += nf * odd;
            out[2] -= nf * nf * even;
            out[3] -= nf * nf * nf * odd;
        }
        out
    }

    pub fn eval(&self, beta: f64) -> f64 {
        self.eval_d3(beta)[0]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a0: self.a0 * factor,
            cos: self.cos.iter().map(|c| c * factor).collect(),
            sin: self.sin.iter().map(|c| c * factor).collect(),
        }
    }

    fn all_finite(&self) -> bool {
        self.a0.is_finite() && self.cos.iter().chain(&self.sin).all(|c| c.is_finite())
    }
}

/// Analytic description of a closed curve: `ρ = exp(log_rho)`,
/// `f = kβ + f_periodic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveSpecWire", into = "CurveSpecWire")]
pub struct CurveSpec {
    pub log_rho: TrigPoly,
    pub f_periodic: TrigPoly,
    pub k: i64,
}

/// JSON layout: `{"log_rho": {"a0", "cos", "sin"}, "f": {"k", "cos", "sin"}}`.
#[derive(Serialize, Deserialize)]
struct CurveSpecWire {
    log_rho: TrigPoly,
    f: AngleWire,
}

#[derive(Serialize, Deserialize)]
struct AngleWire {
    k: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    a0: f64,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<CurveSpecWire> for CurveSpec {
    type Error = Error;

    fn try_from(wire: CurveSpecWire) -> Result<Self> {
        let spec = CurveSpec {
            log_rho: wire.log_rho,
            f_periodic: TrigPoly::new(wire.f.a0, wire.f.cos, wire.f.sin),
            k: wire.f.k,
        };
        if !spec.log_rho.all_finite() || !spec.f_periodic.all_finite() {
            return Err(Error::InvalidSpec("non-finite coefficient".into()));
        }
        Ok(spec)
    }
}

impl From<CurveSpec> for CurveSpecWire {
    fn from(spec: CurveSpec) -> Self {
        CurveSpecWire {
            log_rho: spec.log_rho,
            f: AngleWire {
                k: spec.k,
                a0: spec.f_periodic.a0,
                cos: spec.f_periodic.cos,
                sin: spec.f_periodic.sin,
            },
        }
    }
}

/// Pointwise data of a curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveJet {
    pub beta: f64,
    pub rho: f64,
    pub rho_d1: f64,
    pub rho_d2: f64,
    pub rho_d3: f64,
    pub f_val: f64,
    pub f_d1: f64,
    pub f_d2: f64,
    pub f_d3: f64,
    /// `ρ̇/ρ`
    pub v: f64,
    /// `ḟ`
    pub w: f64,
    pub v_d1: f64,
    pub w_d1: f64,
    pub v_d2: f64,
    pub w_d2: f64,
    /// `v + i w`, so that `γ̇ = τ γ`.
    pub tau: Complex64,
}

impl CurveJet {
    /// `v² + w² = |τ|²`.
    pub fn speed_sq(&self) -> f64 {
        self.v * self.v + self.w * self.w
    }

    pub fn gamma(&self) -> Complex64 {
        Complex64::from_polar(self.rho, self.f_val)
    }

    pub fn gamma_d1(&self) -> Complex64 {
        self.tau * self.gamma()
    }

    pub fn gamma_d2(&self) -> Complex64 {
        let tau_d1 = Complex64::new(self.v_d1, self.w_d1);
        (tau_d1 + self.tau * self.tau) * self.gamma()
    }
}

impl CurveSpec {
    pub fn new(log_rho: TrigPoly, f_periodic: TrigPoly, k: i64) -> Self {
        Self {
            log_rho,
            f_periodic,
            k,
        }
    }

    /// Circle of radius `radius` centred at the origin, traversed once
    /// counterclockwise.
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Self::new(TrigPoly::constant(radius.ln()), TrigPoly::default(), 1))
    }

    /// Circle `center + radius·e^{iβ}`. The log-radius and angle are the
    /// (geometrically convergent) Fourier series of `log(center + radius e^{iβ})`,
    /// truncated where the remaining terms drop below double precision.
    pub fn shifted_circle(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::domain("shifted circle needs a positive radius and finite centre"));
        }
        let d = center.norm();
        let phase = center.arg();
        let (encloses, big, q) = if d < radius {
            (true, radius, d / radius)
        } else if d > radius {
            (false, d, radius / d)
        } else {
            return Err(Error::domain("circle passes through the origin"));
        };
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        if q > 0.0 {
            let mut qn = 1.0;
            for n in 1..=4000usize {
                qn *= q;
                let nf = n as f64;
                if qn * nf * nf < 1e-18 {
                    break;
                }
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                let amp = sign * qn / nf;
                let (sp, cp) = (nf * phase).sin_cos();
                cos.push(amp * cp);
                sin.push(amp * sp);
            }
        }
        let log_rho = TrigPoly::new(big.ln(), cos.clone(), sin.clone());
        let f_periodic = if encloses {
            // log(1 + q e^{i(φ-β)}): imaginary part is q^n sin(nφ - nβ)/n
            TrigPoly::new(0.0, sin, cos.iter().map(|c| -c).collect())
        } else {
            // log(1 + q e^{i(β-φ)}): imaginary part is q^n sin(nβ - nφ)/n
            TrigPoly::new(phase, sin.iter().map(|s| -s).collect(), cos)
        };
        Ok(Self::new(log_rho, f_periodic, if encloses { 1 } else { 0 }))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Same curve scaled by `lambda` about the origin.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain("scale factor must be positive"));
        }
        let mut out = self.clone();
        out.log_rho.a0 += lambda.ln();
        Ok(out)
    }

    /// Same curve rotated by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let mut out = self.clone();
        out.f_periodic.a0 += angle;
        out
    }

    pub fn rho(&self, beta: f64) -> f64 {
        self.log_rho.eval(beta).exp()
    }

    pub fn angle(&self, beta: f64) -> f64 {
        self.k as f64 * beta + self.f_periodic.eval(beta)
    }

    pub fn point(&self, beta: f64) -> Complex64 {
        Complex64::from_polar(self.rho(beta), self.angle(beta))
    }

    /// Full jet without the regularity check.
    pub fn jet_unchecked(&self, beta: f64) -> CurveJet {
        let [l0, l1, l2, l3] = self.log_rho.eval_d3(beta);
        let [p0, p1, p2, p3] = self.f_periodic.eval_d3(beta);
        let rho = l0.exp();
        let k = self.k as f64;
        let (v, w) = (l1, k + p1);
        CurveJet {
            beta,
            rho,
            rho_d1: rho * l1,
            rho_d2: rho * (l2 + l1 * l1),
            rho_d3: rho * (l3 + 3.0 * l1 * l2 + l1 * l1 * l1),
            f_val: k * beta + p0,
            f_d1: w,
            f_d2: p2,
            f_d3: p3,
            v,
            w,
            v_d1: l2,
            w_d1: p2,
            v_d2: l3,
            w_d2: p3,
            tau: Complex64::new(v, w),
        }
    }

    /// Smallest `v² + w²` on the regularity grid; errors if it is below
    /// [`REGULARITY_THRESHOLD`].
    pub fn check_regularity(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        let mut at = 0.0;
        for j in 0..REGULARITY_GRID {
            let beta = TAU * j as f64 / REGULARITY_GRID as f64;
            let s = self.jet_unchecked(beta).speed_sq();
            if s < min {
                min = s;
                at = beta;
            }
        }
        if min <= REGULARITY_THRESHOLD {
            return Err(Error::RegularityViolation {
                beta: at,
                speed_sq: min,
            });
        }
        Ok(min)
    }
}

/// Jet of `curve` at `beta` with exact analytic derivatives.
pub fn eval_jet(curve: &CurveSpec, beta: f64) -> Result<CurveJet> {
    let jet = curve.jet_unchecked(beta);
    let s = jet.speed_sq();
    if !(s > REGULARITY_THRESHOLD) {
        return Err(Error::RegularityViolation { beta, speed_sq: s });
    }
    Ok(jet)
}

/// Winding number about the origin. Returns the structural `k` after
/// checking it against `(1/2πi)∮ γ̇/γ dβ` evaluated on `n_samples` nodes.
pub fn winding_number(curve: &CurveSpec, n_samples: usize) -> Result<i64> {
    let quad = winding_quadrature(curve, n_samples)?;
    if (quad - curve.k as f64).abs() >= 0.5 {
        return Err(Error::CrossCheckMismatch {
            structural: curve.k,
            quadrature: quad,
        });
    }
    Ok(curve.k)
}

/// `(1/2π)∮ w dβ`, the real part of `(1/2πi)∮ τ dβ`.
pub fn winding_quadrature(curve: &CurveSpec, n_samples: usize) -> Result<f64> {
    let total = periodic_trapezoid(|b| Ok(eval_jet(curve, b)?.w), n_samples)?;
    Ok(total / TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    /// Signed area vanishes to rounding.
    Degenerate,
}

/// `½∮(x dy − y dx) = ½∮ ρ² ḟ dβ`.
pub fn signed_area(curve: &CurveSpec, n_samples: usize) -> Result<f64> {
    periodic_trapezoid(
        |b| {
            let j = eval_jet(curve, b)?;
            Ok(0.5 * j.rho * j.rho * j.w)
        },
        n_samples,
    )
}

pub fn orientation_check(curve: &CurveSpec, n_samples: usize) -> Result<Orientation> {
    let area = signed_area(curve, n_samples)?;
    let scale = (curve.log_rho.a0 * 2.0).exp();
    Ok(if area.abs() <= 1e-14 * scale {
        Orientation::Degenerate
    } else if area > 0.0 {
        Orientation::CounterClockwise
    } else {
        Orientation::Clockwise
    })
}

/// `u(β) = ∫₀^β √(v² + w²) dβ'`.
pub fn u_parameter(curve: &CurveSpec, beta: f64) -> Result<f64> {
    adaptive_gauss_kronrod(|b| Ok(eval_jet(curve, b)?.speed_sq().sqrt()), 0.0, beta, 1e-13)
}

/// `u* = u(2π)` by doubling periodic trapezoid.
pub fn u_star(curve: &CurveSpec) -> Result<f64> {
    Ok(periodic_trapezoid_converged(
        |b| Ok(eval_jet(curve, b)?.speed_sq().sqrt()),
        DEFAULT_PERIODIC_NODES,
        DEFAULT_PERIODIC_TOL,
    )?
    .value)
}

/// Signed curvature from the jet:
/// `κ = (1/ρ)[(ẇv − wv̇)/(v²+w²)^{3/2} + w/√(v²+w²)]`.
pub fn curvature_from_jet(jet: &CurveJet) -> f64 {
    let q = jet.speed_sq();
    let sq = q.sqrt();
    ((jet.w_d1 * jet.v - jet.w * jet.v_d1) / (q * sq) + jet.w / sq) / jet.rho
}

pub fn signed_curvature(curve: &CurveSpec, beta: f64) -> Result<f64> {
    Ok(curvature_from_jet(&eval_jet(curve, beta)?))
}

/// `∮ κ ds = ∮ κ ρ √(v²+w²) dβ`, equal to 2π times the turning number.
pub fn total_curvature(curve: &CurveSpec) -> Result<f64> {
    Ok(periodic_trapezoid_converged(
        |b| {
            let j = eval_jet(curve, b)?;
            Ok(curvature_from_jet(&j) * j.rho * j.speed_sq().sqrt())
        },
        DEFAULT_PERIODIC_NODES,
        DEFAULT_PERIODIC_TOL,
    )?
    .value)
}

/// Centre of the circle of radius `radius` at real offset `d`; helper for
/// the Chekanov-type example `d + e^{iβ}`.
pub fn offset_circle(d: f64, radius: f64) -> Result<CurveSpec> {
    CurveSpec::shifted_circle(Complex64::new(d, 0.0), radius)
}

/// `β` grid of `n` equispaced nodes on `[0, 2π)`.
pub fn beta_grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |j| TAU * j as f64 / n as f64)
}

/// Wraps an angle into `(-π, π]`.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn circle_jet_is_trivial() {
        let c = CurveSpec::circle(2.0).unwrap();
        for beta in [0.0, 1.0, 4.0] {
            let j = eval_jet(&c, beta).unwrap();
            assert!(close(j.rho, 2.0, 1e-15));
            assert_eq!(j.v, 0.0);
            assert_eq!(j.w, 1.0);
            assert_eq!(j.tau, Complex64::new(0.0, 1.0));
        }
    }

    #[test]
    fn offset_circle_jet_at_zero() {
        let c = offset_circle(2.0, 1.0).unwrap();
        let j = eval_jet(&c, 0.0).unwrap();
        assert!(close(j.rho, 3.0, 1e-14));
        assert!(close(j.v, 0.0, 1e-14));
        assert!(close(j.w, 1.0 / 3.0, 1e-14));
        assert!(close(j.v_d1, -2.0 / 9.0, 1e-14));
        assert!(close(j.w_d1, 0.0, 1e-14));
    }

    #[test]
    fn shifted_circle_traces_the_right_points() {
        for (center, radius) in [
            (Complex64::new(2.0, 0.0), 1.0),
            (Complex64::new(0.5, 0.0), 1.0),
            (Complex64::new(-0.3, 0.7), 1.2),
            (Complex64::new(1.0, -2.0), 0.9),
        ] {
            let c = CurveSpec::shifted_circle(center, radius).unwrap();
            for beta in beta_grid(37) {
                let expected = center + Complex64::from_polar(radius, beta);
                assert!((c.point(beta) - expected).norm() < 1e-13, "{center} {radius} {beta}");
            }
        }
    }

    #[test]
    fn degenerate_constant_map_is_irregular() {
        let c = CurveSpec::new(TrigPoly::default(), TrigPoly::default(), 0);
        assert!(matches!(eval_jet(&c, 0.3), Err(Error::RegularityViolation { .. })));
        assert!(c.check_regularity().is_err());
    }

    #[test]
    fn winding_examples() {
        let unit = CurveSpec::circle(1.0).unwrap();
        assert_eq!(winding_number(&unit, 256).unwrap(), 1);
        assert_eq!(winding_number(&offset_circle(2.0, 1.0).unwrap(), 256).unwrap(), 0);
        let two = CurveSpec::new(TrigPoly::default(), TrigPoly::new(0.0, vec![], vec![0.1]), 2);
        assert_eq!(winding_number(&two, 256).unwrap(), 2);
    }

    #[test]
    fn orientation_examples() {
        let ccw = CurveSpec::circle(1.0).unwrap();
        assert_eq!(orientation_check(&ccw, 256).unwrap(), Orientation::CounterClockwise);
        let cw = CurveSpec::new(TrigPoly::default(), TrigPoly::default(), -1);
        assert_eq!(orientation_check(&cw, 256).unwrap(), Orientation::Clockwise);
        let off = offset_circle(2.0, 1.0).unwrap();
        assert_eq!(orientation_check(&off, 256).unwrap(), Orientation::CounterClockwise);
        assert!(close(signed_area(&off, 1024).unwrap(), PI, 1e-12));
    }

    #[test]
    fn u_parameter_on_unit_circle() {
        let c = CurveSpec::circle(1.0).unwrap();
        assert!(close(u_parameter(&c, PI).unwrap(), PI, 1e-13));
        assert!(close(u_star(&c).unwrap(), TAU, 1e-13));
        assert_eq!(u_parameter(&c, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn u_star_matches_adaptive_rule_on_offset_circle() {
        let c = offset_circle(2.0, 1.0).unwrap();
        let trap = u_star(&c).unwrap();
        let gk = u_parameter(&c, TAU).unwrap();
        assert!(close(trap, gk, 1e-8), "{trap} vs {gk}");
    }

    #[test]
    fn curvature_examples() {
        let r = 2.5;
        let c = CurveSpec::circle(r).unwrap();
        assert!(close(signed_curvature(&c, 0.7).unwrap(), 1.0 / r, 1e-14));
        let off = offset_circle(2.0, 1.0).unwrap();
        assert!(close(signed_curvature(&off, 0.0).unwrap(), 1.0, 1e-12));
        assert!(close(total_curvature(&off).unwrap(), TAU, 1e-10));
        assert!(close(total_curvature(&c).unwrap(), TAU, 1e-12));
    }

    #[test]
    fn json_layout_matches_the_file_format() {
        let text = r#"{"log_rho": {"a0": 0.5, "cos": [0.1], "sin": []},
                       "f": {"k": 1, "cos": [], "sin": [0.05]}}"#;
        let c = CurveSpec::from_json(text).unwrap();
        assert_eq!(c.k, 1);
        assert_eq!(c.log_rho.cos, vec![0.1]);
        assert_eq!(c.f_periodic.sin, vec![0.05]);
        assert_eq!(c.f_periodic.a0, 0.0);
        let back = CurveSpec::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn wrap_angle_range() {
        assert!(close(wrap_angle(3.0 * PI), PI, 1e-15));
        assert!(close(wrap_angle(-0.5), -0.5, 1e-15));
    }

    fn arb_poly(max_deg: usize, amp: f64) -> impl Strategy<Value = TrigPoly> {
        (
            -0.5f64..0.5,
            prop::collection::vec(-amp..amp, 0..=max_deg),
            prop::collection::vec(-amp..amp, 0..=max_deg),
        )
            .prop_map(|(a0, cos, sin)| TrigPoly::new(a0, cos, sin))
    }

    proptest! {
        #[test]
        fn jet_matches_central_differences(
            lr in arb_poly(4, 0.2),
            fp in arb_poly(4, 0.15),
            k in 0i64..=2,
            beta in 0.0f64..TAU,
        ) {
            let c = CurveSpec::new(lr, fp, k);
            let j = c.jet_unchecked(beta);
            let h = 1e-5;
            let d = |g: &dyn Fn(f64) -> f64| (g(beta + h) - g(beta - h)) / (2.0 * h);
            prop_assert!((j.rho_d1 - d(&|b| c.rho(b))).abs() < 1e-6);
            prop_assert!((j.f_d1 - d(&|b| c.angle(b))).abs() < 1e-6);
            prop_assert!((j.rho_d2 - d(&|b| c.jet_unchecked(b).rho_d1)).abs() < 1e-6);
            prop_assert!((j.rho_d3 - d(&|b| c.jet_unchecked(b).rho_d2)).abs() < 1e-6);
            prop_assert!((j.f_d2 - d(&|b| c.jet_unchecked(b).f_d1)).abs() < 1e-6);
            prop_assert!((j.f_d3 - d(&|b| c.jet_unchecked(b).f_d2)).abs() < 1e-6);
            prop_assert!((j.v - j.rho_d1 / j.rho).abs() < 1e-12);
        }

        #[test]
        fn angle_is_quasi_periodic(fp in arb_poly(5, 0.3), k in -2i64..=2, beta in 0.0f64..TAU) {
            let c = CurveSpec::new(TrigPoly::default(), fp, k);
            let jump = c.angle(beta + TAU) - c.angle(beta);
            prop_assert!((jump - TAU * k as f64).abs() < 1e-11);
        }
    }
}
