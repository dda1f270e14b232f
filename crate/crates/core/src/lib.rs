//! Differential geometry of twisted Lagrangian tori
//! `L_γ = {(γ e^{iα}, γ e^{-iα})/√2}` in `C²`.
//!
//! The crate evaluates the induced metric, Christoffel symbols, second
//! fundamental form, mean curvature and `div_g(JH)` of `L_γ` for analytic
//! closed curves `γ`, tests Hamiltonian stationarity, reproduces the
//! period-closure obstruction for non-circular stationary candidates, and
//! checks the symplectic reduction maps and the self-intersection structure
//! numerically.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod nelder_mead;
pub mod ode;
pub mod quadrature;
pub mod random;
pub mod reduction;
pub mod rk;
pub mod stationarity;
pub mod verify;

pub use curve::{eval_jet, CurveJet, CurveSpec, Orientation, TrigPoly};
pub use error::{Error, Result};
pub use geometry::GeometryFrame;
pub use ode::OdeProfile;
pub use reduction::{DoublePoint, DoublePointKind, DoublePointSet};
pub use stationarity::{StationarityReport, Verdict};
