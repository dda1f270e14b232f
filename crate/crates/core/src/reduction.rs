//! Symplectic reduction of `C²` by the circle action
//! `e^{iα}·(z₁, z₂) = (e^{iα}z₁, e^{−iα}z₂)` and the self-intersections of
//! `L_γ`.
//!
//! The moment map is `h = ½(|z₁|² − |z₂|²)` and the orbit map on
//! `Z₀ = h⁻¹(0)` is `l = z₁z₂`. On the reduced plane the form is
//! `ω = ω_C/(2|w|)`, which `ψ(w) = |w|w` and the half-plane map
//! `φ(w) = w²/2` both pull back to `ω_C`.
//!
//! `L_γ` has a double point whenever `γ(β₁) = −γ(β₂)`; the two sheets then
//! meet along the pairing `(α, β₁) ↔ (α + π, β₂)`.

use std::f64::consts::{LN_2, PI, TAU};

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{wrap_angle, CurveSpec};
use crate::error::{Error, Result};
use crate::geometry::{immersion, omega_c2, to_r4, Vec4};
use crate::random::seeded_rng;

/// `h(z₁, z₂) = ½(|z₁|² − |z₂|²)`.
pub fn h(z1: Complex64, z2: Complex64) -> f64 {
    0.5 * (z1.norm_sqr() - z2.norm_sqr())
}

/// `l(z₁, z₂) = z₁z₂`.
pub fn l(z1: Complex64, z2: Complex64) -> Complex64 {
    z1 * z2
}

/// Differential of `l`: `dl·X = z₁X₂ + z₂X₁`.
pub fn dl(z1: Complex64, z2: Complex64, x1: Complex64, x2: Complex64) -> Complex64 {
    z1 * x2 + z2 * x1
}

/// `ω_C(a, b) = Im(ā b)`.
pub fn omega_c(a: Complex64, b: Complex64) -> f64 {
    (a.conj() * b).im
}

/// Reduced form `ω_w(a, b) = ω_C(a, b)/(2|w|)`.
pub fn omega_reduced(w: Complex64, a: Complex64, b: Complex64) -> f64 {
    omega_c(a, b) / (2.0 * w.norm())
}

/// `ψ(w) = |w|w` on `C*`.
pub fn psi(w: Complex64) -> Result<Complex64> {
    nonzero(w)?;
    Ok(w * w.norm())
}

pub fn psi_inv(z: Complex64) -> Result<Complex64> {
    nonzero(z)?;
    Ok(z / z.norm().sqrt())
}

/// `dψ_w(a) = (Re(w̄a)/|w|)w + |w|a`.
pub fn dpsi(w: Complex64, a: Complex64) -> Complex64 {
    let r = w.norm();
    w * ((w.conj() * a).re / r) + a * r
}

/// `φ(w) = w²/2` on the open upper half-plane.
pub fn phi_half(w: Complex64) -> Result<Complex64> {
    if !(w.im > 0.0) || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::domain(format!("phi_half needs Im w > 0, got {w}")));
    }
    Ok(0.5 * w * w)
}

/// Inverse of `phi_half` on `C` minus the non-negative real axis.
pub fn phi_half_inv(z: Complex64) -> Result<Complex64> {
    nonzero(z)?;
    if z.im == 0.0 && z.re > 0.0 {
        return Err(Error::domain(format!("phi_half_inv undefined on the positive real axis, got {z}")));
    }
    let mut arg = z.arg();
    if arg < 0.0 {
        arg += TAU;
    }
    Ok(Complex64::from_polar((2.0 * z.norm()).sqrt(), 0.5 * arg))
}

/// `dφ_w(a) = w a`.
pub fn dphi_half(w: Complex64, a: Complex64) -> Complex64 {
    w * a
}

fn nonzero(z: Complex64) -> Result<()> {
    if !(z.norm() > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain(format!("expected a nonzero finite complex number, got {z}")));
    }
    Ok(())
}

/// Curve `γ̃ = ρe^{2if}/√2`, so that `ψ(γ̃) = γ²/2 = l(F(α, ·))`.
pub fn reduced_curve(curve: &CurveSpec) -> CurveSpec {
    let mut log_rho = curve.log_rho.clone();
    log_rho.a0 -= 0.5 * LN_2;
    CurveSpec::new(log_rho, curve.f_periodic.scaled(2.0), 2 * curve.k)
}

/// Largest `|l(F(α, β)) − γ(β)²/2|` on an `n × n` grid.
pub fn reduction_identity_residual(curve: &CurveSpec, n: usize) -> f64 {
    grid_max(curve, n, |jet, alpha| {
        let im = immersion(jet, alpha);
        let (z1, z2) = (Complex64::new(im.point[0], im.point[1]), Complex64::new(im.point[2], im.point[3]));
        let g = jet.gamma();
        (l(z1, z2) - 0.5 * g * g).norm()
    })
}

/// Largest `|h∘F|` on an `n × n` grid of `(α, β)`.
pub fn level_set_check(curve: &CurveSpec, n_samples: usize) -> f64 {
    grid_max(curve, n_samples, |jet, alpha| {
        let p = immersion(jet, alpha).point;
        h(Complex64::new(p[0], p[1]), Complex64::new(p[2], p[3])).abs()
    })
}

fn grid_max<G>(curve: &CurveSpec, n: usize, g: G) -> f64
where
    G: Fn(&crate::curve::CurveJet, f64) -> f64 + Sync,
{
    let n = n.max(1);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let jet = curve.jet_unchecked(TAU * i as f64 / n as f64);
            (0..n)
                .map(|j| g(&jet, TAU * j as f64 / n as f64))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Maximum residuals of the pullback identities over random trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    pub n_trials: usize,
    pub seed: u64,
    /// `|ω_{C²}(X, Y) − ω_{l(p)}(dl X, dl Y)|` for `X, Y` tangent to `Z₀`.
    pub l_pullback: f64,
    /// `|ω_{ψ(w)}(dψ a, dψ b) − ω_C(a, b)|`.
    pub psi_pullback: f64,
    /// `|ω_{φ(w)}(dφ a, dφ b) − ω_C(a, b)|`.
    pub phi_half_pullback: f64,
    /// `|h(p)|` at the sampled points.
    pub level_set: f64,
    /// `|dl X|` and `|ω_{C²}(X, Y)|` for `X` along the orbit.
    pub orbit_kernel: f64,
    pub psi_round_trip: f64,
    pub phi_half_round_trip: f64,
}

impl PullbackReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.l_pullback,
            self.psi_pullback,
            self.phi_half_pullback,
            self.level_set,
            self.orbit_kernel,
            self.psi_round_trip,
            self.phi_half_round_trip,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Point `G(r, θ, η) = r(e^{iθ}, e^{iη}) ∈ Z₀*` and the partials
/// `∂_r, ∂_θ, ∂_η`.
pub fn z0_chart(r: f64, theta: f64, eta: f64) -> ((Complex64, Complex64), [(Complex64, Complex64); 3]) {
    let a = Complex64::from_polar(1.0, theta);
    let b = Complex64::from_polar(1.0, eta);
    let i = Complex64::i();
    ((r * a, r * b), [(a, b), (i * r * a, Complex64::new(0.0, 0.0)), (Complex64::new(0.0, 0.0), i * r * b)])
}

fn combo(basis: &[(Complex64, Complex64); 3], c: [f64; 3]) -> (Complex64, Complex64) {
    basis
        .iter()
        .zip(c)
        .fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |acc, (b, s)| {
            (acc.0 + b.0 * s, acc.1 + b.1 * s)
        })
}

fn random_complex<R: Rng>(rng: &mut R, r_lo: f64, r_hi: f64) -> Complex64 {
    Complex64::from_polar(rng.random_range(r_lo..r_hi), rng.random_range(-PI..PI))
}

/// Checks the reduction identities at `n_trials` random points with random
/// tangent pairs.
pub fn verify_pullbacks(n_trials: usize, seed: u64) -> PullbackReport {
    let mut rng = seeded_rng(seed);
    let mut rep = PullbackReport {
        n_trials,
        seed,
        l_pullback: 0.0,
        psi_pullback: 0.0,
        phi_half_pullback: 0.0,
        level_set: 0.0,
        orbit_kernel: 0.0,
        psi_round_trip: 0.0,
        phi_half_round_trip: 0.0,
    };
    let coeff = |rng: &mut rand_chacha::ChaCha8Rng| -> [f64; 3] {
        [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]
    };
    for _ in 0..n_trials {
        let r = rng.random_range(0.2..2.0);
        let (theta, eta) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let ((z1, z2), basis) = z0_chart(r, theta, eta);
        let (x, y) = (combo(&basis, coeff(&mut rng)), combo(&basis, coeff(&mut rng)));
        let lhs = omega_c2(&to_r4(x.0, x.1), &to_r4(y.0, y.1));
        let w = l(z1, z2);
        let rhs = omega_reduced(w, dl(z1, z2, x.0, x.1), dl(z1, z2, y.0, y.1));
        rep.l_pullback = rep.l_pullback.max((lhs - rhs).abs());
        rep.level_set = rep.level_set.max(h(z1, z2).abs());

        let i = Complex64::i();
        let (o1, o2) = (i * z1, -i * z2);
        let kernel = dl(z1, z2, o1, o2).norm().max(omega_c2(&to_r4(o1, o2), &to_r4(y.0, y.1)).abs());
        rep.orbit_kernel = rep.orbit_kernel.max(kernel);

        let wp = random_complex(&mut rng, 0.2, 2.0);
        let (a, b) = (random_complex(&mut rng, 0.1, 1.0), random_complex(&mut rng, 0.1, 1.0));
        let target = omega_c(a, b);
        let pw = wp * wp.norm();
        rep.psi_pullback = rep
            .psi_pullback
            .max((omega_reduced(pw, dpsi(wp, a), dpsi(wp, b)) - target).abs());
        if let Ok(back) = psi(wp).and_then(psi_inv) {
            rep.psi_round_trip = rep.psi_round_trip.max((back - wp).norm());
        }

        let wh = Complex64::new(wp.re, wp.im.abs().max(1e-3));
        let phw = 0.5 * wh * wh;
        rep.phi_half_pullback = rep
            .phi_half_pullback
            .max((omega_reduced(phw, dphi_half(wh, a), dphi_half(wh, b)) - target).abs());
        if let Ok(back) = phi_half(wh).and_then(phi_half_inv) {
            rep.phi_half_round_trip = rep.phi_half_round_trip.max((back - wh).norm());
        }
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoublePointKind {
    Cross,
    Touch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublePoint {
    pub beta1: f64,
    pub beta2: f64,
    /// `F(0, β₁) = F(π, β₂)` as `(x¹, y¹, x², y²)`.
    pub ambient_point: [f64; 4],
    /// `γ(β₁)`, reported as `[re, im]`.
    pub planar_point: [f64; 2],
    pub kind: DoublePointKind,
}

impl DoublePoint {
    pub fn planar(&self) -> Complex64 {
        Complex64::new(self.planar_point[0], self.planar_point[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DoublePointSet {
    Points { points: Vec<DoublePoint> },
    /// `−γ` traces the same set as `γ`; `γ(β + beta_shift) = −γ(β)` at
    /// `β = 0`.
    CentrallySymmetric { beta_shift: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct DoublePointOptions {
    pub grid: usize,
    pub symmetry_tol: f64,
    pub newton_tol: f64,
    pub merge_tol: f64,
    pub touch_tol: f64,
}

impl Default for DoublePointOptions {
    fn default() -> Self {
        Self {
            grid: 720,
            symmetry_tol: 1e-9,
            newton_tol: 1e-12,
            merge_tol: 1e-7,
            touch_tol: 1e-9,
        }
    }
}

/// Distance from `−γ(β)` to the image of `γ`, refined by Newton on the
/// squared distance starting from the nearest sample.
fn distance_to_negated(curve: &CurveSpec, samples: &[Complex64], beta: f64) -> (f64, f64) {
    let target = -curve.point(beta);
    let n = samples.len();
    let (j, _) = samples
        .iter()
        .enumerate()
        .map(|(j, p)| (j, (p - target).norm_sqr()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let mut t = TAU * j as f64 / n as f64;
    let step = TAU / n as f64;
    for _ in 0..40 {
        let jet = curve.jet_unchecked(t);
        let d = jet.gamma() - target;
        let (g1, g2) = (jet.gamma_d1(), jet.gamma_d2());
        let grad = (d.conj() * g1).re;
        let hess = g1.norm_sqr() + (d.conj() * g2).re;
        if hess <= 0.0 {
            break;
        }
        let dt = (grad / hess).clamp(-step, step);
        t -= dt;
        if dt.abs() < 1e-15 {
            break;
        }
    }
    ((curve.point(t) - target).norm(), t)
}

/// Central symmetry test; returns the parameter shift when `−γ(β) ∈ γ` for
/// every checked `β`.
pub fn central_symmetry(curve: &CurveSpec, tol: f64) -> Option<f64> {
    let n = 1024;
    let samples: Vec<Complex64> = (0..n).map(|j| curve.point(TAU * j as f64 / n as f64)).collect();
    let scale = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (d0, t0) = distance_to_negated(curve, &samples, 0.0);
    if d0 > tol * scale.max(1.0) {
        return None;
    }
    let symmetric = (1..256)
        .into_par_iter()
        .all(|i| distance_to_negated(curve, &samples, TAU * i as f64 / 256.0).0 <= tol * scale.max(1.0));
    symmetric.then(|| t0.rem_euclid(TAU))
}

fn segment_intersection(p0: Complex64, p1: Complex64, q0: Complex64, q1: Complex64) -> Option<(f64, f64)> {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
    let den = cross(d1, d2);
    if den == 0.0 {
        return None;
    }
    let r = q0 - p0;
    let s = cross(r, d2) / den;
    let t = cross(r, d1) / den;
    let pad = 1e-9;
    ((-pad..=1.0 + pad).contains(&s) && (-pad..=1.0 + pad).contains(&t)).then_some((s, t))
}

/// Newton on `G(β₁, β₂) = γ(β₁) + γ(β₂)`.
fn newton_polish(curve: &CurveSpec, mut b1: f64, mut b2: f64, tol: f64) -> Option<(f64, f64, f64)> {
    for _ in 0..60 {
        let (j1, j2) = (curve.jet_unchecked(b1), curve.jet_unchecked(b2));
        let g = j1.gamma() + j2.gamma();
        let (a, b) = (j1.gamma_d1(), j2.gamma_d1());
        let det = a.re * b.im - a.im * b.re;
        if det.abs() < 1e-300 {
            break;
        }
        let d1 = (g.re * b.im - g.im * b.re) / det;
        let d2 = (a.re * g.im - a.im * g.re) / det;
        b1 -= d1;
        b2 -= d2;
        if d1.abs().max(d2.abs()) < tol {
            break;
        }
    }
    let res = (curve.point(b1) + curve.point(b2)).norm();
    Some((b1.rem_euclid(TAU), b2.rem_euclid(TAU), res))
}

fn torus_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    wrap_angle(a.0 - b.0).abs().max(wrap_angle(a.1 - b.1).abs())
}

/// Solutions of `γ(β₁) + γ(β₂) = 0`. Each geometric double point of the
/// planar picture appears as both ordered pairs `(β₁, β₂)` and `(β₂, β₁)`;
/// `planar_point = γ(β₁)` tells them apart.
pub fn find_double_points(curve: &CurveSpec) -> Result<DoublePointSet> {
    find_double_points_with(curve, &DoublePointOptions::default())
}

pub fn find_double_points_with(curve: &CurveSpec, opts: &DoublePointOptions) -> Result<DoublePointSet> {
    curve.check_regularity()?;
    if let Some(beta_shift) = central_symmetry(curve, opts.symmetry_tol) {
        return Ok(DoublePointSet::CentrallySymmetric { beta_shift });
    }
    let m = opts.grid.max(16);
    let pts: Vec<Complex64> = (0..=m).map(|j| curve.point(TAU * j as f64 / m as f64)).collect();
    let seg_len = pts.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
    let scale = pts.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let candidates: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (p0, p1) = (pts[i], pts[i + 1]);
            let pts = &pts;
            (0..m).filter_map(move |j| {
                let (q0, q1) = (-pts[j], -pts[j + 1]);
                let lo = (p0.re.min(p1.re), p0.im.min(p1.im));
                let hi = (p0.re.max(p1.re), p0.im.max(p1.im));
                // bounding boxes padded for near-tangent contacts
                let pad = seg_len;
                if q0.re.max(q1.re) < lo.0 - pad
                    || q0.re.min(q1.re) > hi.0 + pad
                    || q0.im.max(q1.im) < lo.1 - pad
                    || q0.im.min(q1.im) > hi.1 + pad
                {
                    return None;
                }
                let h = TAU / m as f64;
                match segment_intersection(p0, p1, q0, q1) {
                    Some((s, t)) => Some(((i as f64 + s) * h, (j as f64 + t) * h)),
                    None => {
                        let mid = 0.5 * (p0 + p1) - 0.5 * (q0 + q1);
                        (mid.norm() < 0.25 * seg_len).then_some(((i as f64 + 0.5) * h, (j as f64 + 0.5) * h))
                    }
                }
            })
        })
        .collect();

    let mut roots: Vec<(f64, f64)> = Vec::new();
    for (b1, b2) in candidates {
        let Some((r1, r2, res)) = newton_polish(curve, b1, b2, opts.newton_tol) else {
            continue;
        };
        if res > 1e-11 * scale.max(1.0) {
            continue;
        }
        if roots.iter().all(|&r| torus_dist(r, (r1, r2)) > opts.merge_tol) {
            roots.push((r1, r2));
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let points = roots
        .into_iter()
        .map(|(b1, b2)| {
            let (j1, j2) = (curve.jet_unchecked(b1), curve.jet_unchecked(b2));
            let (t1, t2) = (j1.gamma_d1(), j2.gamma_d1());
            let sine = (t1.re * t2.im - t1.im * t2.re).abs() / (t1.norm() * t2.norm());
            let kind = if sine < opts.touch_tol {
                DoublePointKind::Touch
            } else {
                DoublePointKind::Cross
            };
            let p = immersion(&j1, 0.0).point;
            let g = j1.gamma();
            DoublePoint {
                beta1: b1,
                beta2: b2,
                ambient_point: [p[0], p[1], p[2], p[3]],
                planar_point: [g.re, g.im],
                kind,
            }
        })
        .collect();
    Ok(DoublePointSet::Points { points })
}

/// Residuals of the sheet identities at a double point for a given `α`:
/// point match, `∂_αF` match, the `∂_βF` relation
/// `∂_βF(α + π, β₂) = −γ̇(β₂)/γ(β₁)·F(α, β₁)`, and the singular values of
/// the four tangent vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetCheck {
    pub point: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub singular_values: [f64; 4],
}

pub fn sheet_check(curve: &CurveSpec, dp: &DoublePoint, alpha: f64) -> SheetCheck {
    let (j1, j2) = (curve.jet_unchecked(dp.beta1), curve.jet_unchecked(dp.beta2));
    let a = immersion(&j1, alpha);
    let b = immersion(&j2, alpha + PI);
    let factor = -j2.gamma_d1() / j1.gamma();
    let (z1, z2) = (Complex64::new(a.point[0], a.point[1]), Complex64::new(a.point[2], a.point[3]));
    let predicted: Vec4 = to_r4(factor * z1, factor * z2);
    let m = Matrix4::from_columns(&[a.e1, a.e2, b.e1, b.e2]);
    let sv = m.singular_values();
    let mut s = [sv[0], sv[1], sv[2], sv[3]];
    s.sort_by(|x, y| y.total_cmp(x));
    SheetCheck {
        point: (a.point - b.point).norm(),
        d_alpha: (a.e1 - b.e1).norm(),
        d_beta: (b.e2 - predicted).norm(),
        singular_values: s,
    }
}

/// `|F(α + π, β + π) − F(α, β)|` maximised over an `n × n` grid; vanishes
/// for curves with `γ(β + π) = −γ(β)`.
pub fn cover_identity_residual(curve: &CurveSpec, n: usize) -> f64 {
    grid_max(curve, n, |jet, alpha| {
        let other = curve.jet_unchecked(jet.beta + PI);
        (immersion(jet, alpha).point - immersion(&other, alpha + PI).point).norm()
    })
}

/// `F(α, β)` in `R⁴` for a curve; convenience for callers outside the crate.
pub fn ambient_point(curve: &CurveSpec, alpha: f64, beta: f64) -> Vec4 {
    immersion(&curve.jet_unchecked(beta), alpha).point
}
