//! Quadrature rules used throughout the crate.
//!
//! Closed-curve integrals use the periodic trapezoidal rule, which converges
//! geometrically for smooth periodic integrands. Integrals over partial
//! intervals use adaptive Gauss-Kronrod (7/15) bisection.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Default starting node count for closed-curve integrals.
pub const DEFAULT_PERIODIC_NODES: usize = 1024;
/// Successive doublings must agree to this absolute tolerance.
pub const DEFAULT_PERIODIC_TOL: f64 = 1e-10;
const MAX_PERIODIC_NODES: usize = 1 << 20;

/// Trapezoidal rule on `n` equispaced nodes of `[0, 2π)`.
pub fn periodic_trapezoid<F>(f: F, n: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::domain("periodic trapezoid needs at least one node"));
    }
    let h = TAU / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        sum += f(j as f64 * h)?;
    }
    Ok(sum * h)
}

/// Result of a doubling periodic quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicEstimate {
    pub value: f64,
    pub nodes: usize,
    /// Absolute difference between the last two refinements.
    pub change: f64,
}

/// Periodic trapezoid starting at `n0` nodes and doubling until two
/// successive results differ by less than `tol`. Previous nodes are reused.
pub fn periodic_trapezoid_converged<F>(f: F, n0: usize, tol: f64) -> Result<PeriodicEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    if n0 == 0 {
        return Err(Error::domain("periodic trapezoid needs at least one node"));
    }
    let mut n = n0;
    let mut raw_sum = 0.0;
    for j in 0..n {
        raw_sum += f(TAU * j as f64 / n as f64)?;
    }
    let mut value = raw_sum * TAU / n as f64;
    loop {
        let n2 = 2 * n;
        // new nodes sit at the odd indices of the refined grid
        for j in 0..n {
            raw_sum += f(TAU * (2 * j + 1) as f64 / n2 as f64)?;
        }
        let refined = raw_sum * TAU / n2 as f64;
        let change = (refined - value).abs();
        n = n2;
        value = refined;
        if change < tol {
            return Ok(PeriodicEstimate {
                value,
                nodes: n,
                change,
            });
        }
        if n >= MAX_PERIODIC_NODES {
            return Err(Error::IntegrationFailure(format!(
                "periodic trapezoid did not converge: change {change:e} at {n} nodes"
            )));
        }
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        // odd Kronrod indices coincide with the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]` by recursive
/// bisection until the local error estimate is below `tol`.
pub fn adaptive_gauss_kronrod<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    const MAX_DEPTH: u32 = 48;
    fn recurse<F>(f: &F, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: u32) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if err <= tol.max(1e-15 * whole.abs()) {
            return Ok(whole);
        }
        if depth == 0 {
            return Err(Error::IntegrationFailure(format!(
                "adaptive quadrature on [{a}, {b}] did not reach tolerance {tol:e} (error {err:e})"
            )));
        }
        let mid = 0.5 * (a + b);
        let (left, el) = gauss_kronrod_15(f, a, mid)?;
        let (right, er) = gauss_kronrod_15(f, mid, b)?;
        Ok(recurse(f, a, mid, left, el, 0.5 * tol, depth - 1)?
            + recurse(f, mid, b, right, er, 0.5 * tol, depth - 1)?)
    }
    let (whole, err) = gauss_kronrod_15(&f, a, b)?;
    recurse(&f, a, b, whole, err, tol, MAX_DEPTH)
}
