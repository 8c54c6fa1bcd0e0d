//! Free-boundary dynamics of the subsonic region behind the shock.

pub mod base;
pub mod dynamics;
