//! Impact prediction, orbit dispersion, slow-push deflection and impact
//! consequence scoring for a hypothetical Earth-impacting asteroid.

pub mod budget;
pub mod deflection;
pub mod dispersion;
pub mod dynamics;
pub mod elements;
pub mod ephemeris;
pub mod exposure;
pub mod impact;
pub mod error;
mod numerics;
pub mod timeframes;

pub use error::{Error, Result};
