//! Named curves shipped with the crate.

use num_complex::Complex64;

use crate::curve::{offset_circle, CurveSpec, TrigPoly};
use crate::error::Result;

/// Unit circle centred at the origin (product torus).
pub fn origin_circle() -> CurveSpec {
    CurveSpec::new(TrigPoly::constant(0.0), TrigPoly::default(), 1)
}

/// `2 + e^{iβ}`: lies in the right half-plane, so `L_γ` is a Chekanov torus.
pub fn chekanov_circle() -> Result<CurveSpec> {
    offset_circle(2.0, 1.0)
}

/// `ρ = exp(0.2 cos β)`, `f = β`: encloses a star-shaped region about the origin.
pub fn star_shaped() -> CurveSpec {
    CurveSpec::new(TrigPoly::new(0.0, vec![0.2], vec![]), TrigPoly::default(), 1)
}

/// `0.5 + e^{iβ}`: meets its reflection `−γ` in two points.
pub fn half_offset_circle() -> Result<CurveSpec> {
    CurveSpec::shifted_circle(Complex64::new(0.5, 0.0), 1.0)
}

/// All corpus curves with their file stems.
pub fn all() -> Result<Vec<(&'static str, CurveSpec)>> {
    Ok(vec![
        ("circle", origin_circle()),
        ("chekanov", chekanov_circle()?),
        ("star", star_shaped()),
        ("half_offset", half_offset_circle()?),
    ])
}
