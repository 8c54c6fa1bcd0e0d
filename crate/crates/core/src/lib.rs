//! Steady transonic shocks of the one-dimensional Euler–Poisson system and
//! numerical experiments on their structural stability, the decay of the
//! subsonic region behind the shock, and linear instability.

pub mod eos;
pub mod error;
pub mod instability;
pub mod linear;
pub mod numerics;
pub mod rankine_hugoniot;
pub mod shock_fitter;
pub mod steady;
pub mod subsonic;

pub use error::{Error, Result};
