//! Inverse curve shortening flow in the upper half-plane model of the
//! hyperbolic plane: closed-form flows, soliton orbits, and a front-tracking
//! simulator used to cross-check them.

pub mod cli;
pub mod conformal;
pub mod error;
pub mod exact;
pub mod flow;
pub mod geometry;
pub mod ode;
pub mod orbit;
pub mod parabolic;
mod svg;

pub use error::{Error, Result};
