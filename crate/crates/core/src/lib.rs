//! Numerical laboratory for the normalized p-parabolic equation
//!
//!   u_t = (1/p) |Du|^{2-p} Delta_p u
//!
//! on implicit space-time domains: explicit solutions with analytic
//! jets, barrier constructions with machine-checkable axiom
//! verification, an explicit monotone finite-difference solver, and
//! boundary-regularity experiments.

pub mod barriers;
pub mod domain;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod lab;
pub mod operator;
pub mod params;
pub mod quad;
pub mod sampling;
pub mod solutions;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{Point, SpaceTimeBox};
pub use jet::{numeric_jet, Jet2};
pub use operator::{eval_envelope, eval_operator, eval_operator_sided, residual, residual_sided};
pub use params::{PParams, DEFAULT_TAU};
