//! Induced geometry of the twisted torus `L_γ ⊂ C² ≅ R⁴`.
//!
//! Coordinates on `R⁴` are `(x¹, y¹, x², y²)`. The parametrization is
//! `F(α, β) = ρ(β)/√2 · (e^{i(f+α)}, e^{i(f−α)})`. Every scalar quantity
//! here depends on `β` only; vector-valued ones also take `α`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Vector4;
use num_complex::Complex64;

use crate::curve::{CurveJet, REGULARITY_THRESHOLD};
use crate::error::{Error, Result};

pub type Vec4 = Vector4<f64>;

/// Packs `(z₁, z₂)` as `(x¹, y¹, x², y²)`.
pub fn to_r4(z1: Complex64, z2: Complex64) -> Vec4 {
    Vec4::new(z1.re, z1.im, z2.re, z2.im)
}

pub fn from_r4(v: &Vec4) -> (Complex64, Complex64) {
    (Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
}

/// Multiplication by `i` in each complex factor.
pub fn complex_structure(v: &Vec4) -> Vec4 {
    Vec4::new(-v[1], v[0], -v[3], v[2])
}

/// Standard symplectic form `ω = dx¹∧dy¹ + dx²∧dy² = ⟨J·, ·⟩`.
pub fn omega_c2(x: &Vec4, y: &Vec4) -> f64 {
    complex_structure(x).dot(y)
}

fn require_regular(jet: &CurveJet) -> Result<f64> {
    let q = jet.speed_sq();
    if !(q > REGULARITY_THRESHOLD) {
        return Err(Error::RegularityViolation {
            beta: jet.beta,
            speed_sq: q,
        });
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Immersion {
    pub point: Vec4,
    /// `∂F/∂α`
    pub e1: Vec4,
    /// `∂F/∂β = τF`
    pub e2: Vec4,
}

/// `F(α, β)` and its coordinate tangent vectors.
pub fn immersion(jet: &CurveJet, alpha: f64) -> Immersion {
    let s = jet.rho * FRAC_1_SQRT_2;
    let z1 = Complex64::from_polar(s, jet.f_val + alpha);
    let z2 = Complex64::from_polar(s, jet.f_val - alpha);
    let i = Complex64::i();
    Immersion {
        point: to_r4(z1, z2),
        e1: to_r4(i * z1, -i * z2),
        e2: to_r4(jet.tau * z1, jet.tau * z2),
    }
}

/// Diagonal induced metric; `g_αβ = 0` identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub g_aa: f64,
    pub g_bb: f64,
    pub inv_aa: f64,
    pub inv_bb: f64,
    pub sqrt_det: f64,
}

pub fn metric(jet: &CurveJet) -> Result<Metric> {
    let q = require_regular(jet)?;
    let r2 = jet.rho * jet.rho;
    let g_bb = r2 * q;
    if !(g_bb > 0.0) {
        return Err(Error::RegularityViolation {
            beta: jet.beta,
            speed_sq: q,
        });
    }
    Ok(Metric {
        g_aa: r2,
        g_bb,
        inv_aa: 1.0 / r2,
        inv_bb: 1.0 / g_bb,
        sqrt_det: r2 * q.sqrt(),
    })
}

/// Christoffel symbols `Γ^k_{ij}` of the induced metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel {
    pub a_aa: f64,
    pub a_ab: f64,
    pub a_bb: f64,
    pub b_aa: f64,
    pub b_ab: f64,
    pub b_bb: f64,
}

impl Christoffel {
    /// `Γ^{upper}_{ij}`, indices 0 = α, 1 = β.
    pub fn get(&self, upper: usize, i: usize, j: usize) -> f64 {
        match (upper, i + j) {
            (0, 0) => self.a_aa,
            (0, 1) => self.a_ab,
            (0, _) => self.a_bb,
            (_, 0) => self.b_aa,
            (_, 1) => self.b_ab,
            _ => self.b_bb,
        }
    }
}

pub fn christoffel(jet: &CurveJet) -> Result<Christoffel> {
    let q = require_regular(jet)?;
    let (v, w) = (jet.v, jet.w);
    Ok(Christoffel {
        a_aa: 0.0,
        a_ab: v,
        a_bb: 0.0,
        b_aa: -v / q,
        b_ab: 0.0,
        b_bb: v + (v * jet.v_d1 + w * jet.w_d1) / q,
    })
}

/// Components of the second fundamental form as vectors in `R⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondForm {
    pub b_aa: Vec4,
    pub b_ab: Vec4,
    pub b_bb: Vec4,
}

/// `ẇv − wv̇`, the numerator shared by `B_ββ`, `C` and `κ`.
fn twist(jet: &CurveJet) -> f64 {
    jet.w_d1 * jet.v - jet.w * jet.v_d1
}

pub fn second_form(jet: &CurveJet, alpha: f64) -> Result<SecondForm> {
    let q = require_regular(jet)?;
    let imm = immersion(jet, alpha);
    let je1 = complex_structure(&imm.e1);
    let je2 = complex_structure(&imm.e2);
    let w = jet.w;
    Ok(SecondForm {
        b_aa: je2 * (w / q),
        b_ab: je1 * w,
        b_bb: je2 * (w + twist(jet) / q),
    })
}

/// Coefficients of the H-umbilical structure in the orthonormal frame
/// `ε₁ = e₂/|e₂|`, `ε₂ = e₁/|e₁|`:
/// `B(ε₁,ε₁) = λJε₁`, `B(ε₂,ε₂) = μJε₁`, `B(ε₁,ε₂) = μJε₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Umbilical {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCurvature {
    /// `C_{ρ,f}` with `H = C·Je₂`.
    pub c: f64,
    pub h: Vec4,
    pub norm_h: f64,
    pub rho_norm_h: f64,
    pub umbilical: Umbilical,
}

/// `C_{ρ,f} = (ẇv − wv̇ + 2w(v²+w²)) / (ρ²(v²+w²)²)`.
pub fn c_scalar(jet: &CurveJet) -> Result<f64> {
    let q = require_regular(jet)?;
    Ok((twist(jet) + 2.0 * jet.w * q) / (jet.rho * jet.rho * q * q))
}

/// `dC/dβ` from the closed form, using second derivatives of `v` and `w`.
pub fn c_derivative(jet: &CurveJet) -> Result<f64> {
    let q = require_regular(jet)?;
    let (v, w) = (jet.v, jet.w);
    let (vd, wd) = (jet.v_d1, jet.w_d1);
    let q_d = 2.0 * (v * vd + w * wd);
    let num = twist(jet) + 2.0 * w * q;
    let num_d = jet.w_d2 * v - w * jet.v_d2 + 2.0 * wd * q + 2.0 * w * q_d;
    let den = jet.rho * jet.rho * q * q;
    // d/dβ ln(ρ² q²) = 2v + 2q'/q
    Ok(num_d / den - (num / den) * (2.0 * v + 2.0 * q_d / q))
}

/// `s(β) = √det g · C_{ρ,f} = (ẇv − wv̇ + 2w(v²+w²)) / (v²+w²)^{3/2}`.
pub fn stationarity_density(jet: &CurveJet) -> Result<f64> {
    let q = require_regular(jet)?;
    Ok((twist(jet) + 2.0 * jet.w * q) / (q * q.sqrt()))
}

pub fn mean_curvature(jet: &CurveJet, alpha: f64) -> Result<MeanCurvature> {
    let q = require_regular(jet)?;
    let c = c_scalar(jet)?;
    let imm = immersion(jet, alpha);
    let sq = q.sqrt();
    let norm_h = c.abs() * jet.rho * sq;
    let mu = jet.w / (jet.rho * sq);
    Ok(MeanCurvature {
        c,
        h: complex_structure(&imm.e2) * c,
        norm_h,
        rho_norm_h: jet.rho * norm_h,
        umbilical: Umbilical {
            lambda: mu + twist(jet) / (jet.rho * q * sq),
            mu,
        },
    })
}

/// `div_g(JH) = −[dC/dβ + (d/dβ ln √det g)·C]`, with
/// `d/dβ ln √det g = Γ^α_{αβ} + Γ^β_{ββ}`.
pub fn div_jh(jet: &CurveJet) -> Result<f64> {
    let c = c_scalar(jet)?;
    let dc = c_derivative(jet)?;
    let gamma = christoffel(jet)?;
    Ok(-(dc + (gamma.a_ab + gamma.b_bb) * c))
}

/// Everything computed at one `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryFrame {
    pub beta: f64,
    pub alpha: f64,
    pub point: Vec4,
    pub e1: Vec4,
    pub e2: Vec4,
    pub metric: Metric,
    pub christoffel: Christoffel,
    pub second_form: SecondForm,
    pub c: f64,
    pub h: Vec4,
    pub norm_h: f64,
    pub rho_norm_h: f64,
    pub umbilical: Umbilical,
    pub div_jh: f64,
    /// `e₂/|e₂|`
    pub eps1: Vec4,
    /// `e₁/|e₁|`
    pub eps2: Vec4,
}

impl GeometryFrame {
    pub fn new(jet: &CurveJet, alpha: f64) -> Result<Self> {
        let imm = immersion(jet, alpha);
        let metric = metric(jet)?;
        let mc = mean_curvature(jet, alpha)?;
        Ok(Self {
            beta: jet.beta,
            alpha,
            point: imm.point,
            e1: imm.e1,
            e2: imm.e2,
            metric,
            christoffel: christoffel(jet)?,
            second_form: second_form(jet, alpha)?,
            c: mc.c,
            h: mc.h,
            norm_h: mc.norm_h,
            rho_norm_h: mc.rho_norm_h,
            umbilical: mc.umbilical,
            div_jh: div_jh(jet)?,
            eps1: imm.e2 / metric.g_bb.sqrt(),
            eps2: imm.e1 / metric.g_aa.sqrt(),
        })
    }

    /// `g^{αα} B_αα + g^{ββ} B_ββ`.
    pub fn trace_second_form(&self) -> Vec4 {
        self.second_form.b_aa * self.metric.inv_aa + self.second_form.b_bb * self.metric.inv_bb
    }
}
