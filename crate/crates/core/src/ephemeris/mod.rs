//! Heliocentric states of the perturbing bodies.
//!
//! Two sources are available: a built-in analytic model (sampled once into
//! an interpolation cache) and externally supplied CSV tables.

mod analytic;
mod interp;
mod table;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::elements::StateVector;
use crate::error::{Error, Result};
use crate::timeframes::{Epoch, Vec3};

pub use analytic::{analytic_position, moon_geocentric, AnalyticCache, PlanetTheory};
pub use interp::{lagrange_derivative_weights, lagrange_weights};
pub use table::{load_ephemeris_table, load_ephemeris_tables, write_ephemeris_csv, EphemerisTable, TABLE_HEADER};

/// Astronomical unit (m).
pub const AU_M: f64 = 1.495_978_707e11;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Heliocentric gravitational constant (m^3/s^2).
pub const GM_SUN: f64 = 1.327_124_400_18e20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Body {
    Sun,
    Mercury,
    Venus,
    Earth,
    Moon,
    Mars,
    Jupiter,
    Saturn,
    Uranus,
    Neptune,
    Ceres,
    Vesta,
    Pallas,
}

impl Body {
    pub const ALL: [Body; 13] = [
        Body::Sun,
        Body::Mercury,
        Body::Venus,
        Body::Earth,
        Body::Moon,
        Body::Mars,
        Body::Jupiter,
        Body::Saturn,
        Body::Uranus,
        Body::Neptune,
        Body::Ceres,
        Body::Vesta,
        Body::Pallas,
    ];

    /// Planets, the Moon and the three largest main-belt asteroids.
    pub const PERTURBERS: [Body; 12] = [
        Body::Mercury,
        Body::Venus,
        Body::Earth,
        Body::Moon,
        Body::Mars,
        Body::Jupiter,
        Body::Saturn,
        Body::Uranus,
        Body::Neptune,
        Body::Ceres,
        Body::Vesta,
        Body::Pallas,
    ];

    /// GM in m^3/s^2. Planet values beyond Earth are system values.
    pub fn gm(self) -> f64 {
        match self {
            Body::Sun => GM_SUN,
            Body::Mercury => 2.203_209e13,
            Body::Venus => 3.248_585_92e14,
            Body::Earth => 3.986_004_356e14,
            Body::Moon => 4.902_800_0e12,
            Body::Mars => 4.282_837_14e13,
            Body::Jupiter => 1.267_127_678_6e17,
            Body::Saturn => 3.794_062_606e16,
            Body::Uranus => 5.794_549_007e15,
            Body::Neptune => 6.836_534_064e15,
            Body::Ceres => 4.7e-10 * GM_SUN,
            Body::Vesta => 1.3e-10 * GM_SUN,
            Body::Pallas => 1.0e-10 * GM_SUN,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Body::Sun => "sun",
            Body::Mercury => "mercury",
            Body::Venus => "venus",
            Body::Earth => "earth",
            Body::Moon => "moon",
            Body::Mars => "mars",
            Body::Jupiter => "jupiter",
            Body::Saturn => "saturn",
            Body::Uranus => "uranus",
            Body::Neptune => "neptune",
            Body::Ceres => "ceres",
            Body::Vesta => "vesta",
            Body::Pallas => "pallas",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Body {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Body::ALL
            .iter()
            .copied()
            .find(|b| b.name() == lower)
            .ok_or_else(|| Error::Domain(format!("unknown body '{s}'")))
    }
}

/// Which ephemeris feeds the force model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EphemerisSource {
    Analytic(PlanetTheory),
    Table(std::path::PathBuf),
}

impl Default for EphemerisSource {
    fn default() -> Self {
        EphemerisSource::Analytic(PlanetTheory::default())
    }
}

enum Provider {
    Analytic(AnalyticCache),
    Table(Vec<Option<EphemerisTable>>),
}

/// Shared, immutable ephemeris provider. Cloning is cheap.
#[derive(Clone)]
pub struct Ephemeris {
    provider: Arc<Provider>,
}

impl fmt::Debug for Ephemeris {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.provider {
            Provider::Analytic(c) => write!(f, "Ephemeris::Analytic({:?})", c.theory()),
            Provider::Table(t) => {
                let bodies: Vec<_> = t.iter().flatten().map(|t| t.body()).collect();
                write!(f, "Ephemeris::Table({bodies:?})")
            }
        }
    }
}

impl Ephemeris {
    /// Process-wide built-in analytic ephemeris (VSOP87 planets).
    pub fn builtin() -> Ephemeris {
        static BUILTIN: OnceLock<Ephemeris> = OnceLock::new();
        BUILTIN
            .get_or_init(|| Ephemeris::analytic(PlanetTheory::Vsop87))
            .clone()
    }

    /// Process-wide analytic ephemeris built on mean secular elements.
    pub fn mean_elements() -> Ephemeris {
        static MEAN: OnceLock<Ephemeris> = OnceLock::new();
        MEAN.get_or_init(|| Ephemeris::analytic(PlanetTheory::MeanElements))
            .clone()
    }

    pub fn analytic(theory: PlanetTheory) -> Ephemeris {
        Ephemeris {
            provider: Arc::new(Provider::Analytic(AnalyticCache::new(theory))),
        }
    }

    pub fn from_tables(tables: Vec<EphemerisTable>) -> Ephemeris {
        let mut slots: Vec<Option<EphemerisTable>> = vec![None; Body::ALL.len()];
        for t in tables {
            let i = t.body().index();
            slots[i] = Some(t);
        }
        Ephemeris {
            provider: Arc::new(Provider::Table(slots)),
        }
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Ephemeris> {
        Ok(Ephemeris::from_tables(load_ephemeris_tables(path)?))
    }

    pub fn from_source(source: &EphemerisSource) -> Result<Ephemeris> {
        match source {
            EphemerisSource::Analytic(PlanetTheory::Vsop87) => Ok(Ephemeris::builtin()),
            EphemerisSource::Analytic(PlanetTheory::MeanElements) => Ok(Ephemeris::mean_elements()),
            EphemerisSource::Table(path) => Ephemeris::from_table_file(path),
        }
    }

    /// Bodies this provider can serve.
    pub fn covers(&self, body: Body) -> bool {
        match &*self.provider {
            Provider::Analytic(_) => true,
            Provider::Table(t) => body == Body::Sun || t[body.index()].is_some(),
        }
    }

    /// Heliocentric ecliptic J2000 position (m).
    pub fn position(&self, body: Body, epoch: Epoch) -> Result<Vec3> {
        if body == Body::Sun {
            return Ok(Vec3::zeros());
        }
        match &*self.provider {
            Provider::Analytic(cache) => Ok(cache.position(body, epoch)),
            Provider::Table(t) => table_slot(t, body)?.position(epoch),
        }
    }

    /// Heliocentric ecliptic J2000 position and velocity.
    pub fn state(&self, body: Body, epoch: Epoch) -> Result<StateVector> {
        if body == Body::Sun {
            return Ok(StateVector::new(Vec3::zeros(), Vec3::zeros(), epoch));
        }
        match &*self.provider {
            Provider::Analytic(cache) => Ok(cache.state(body, epoch)),
            Provider::Table(t) => table_slot(t, body)?.state(epoch),
        }
    }
}

fn table_slot(t: &[Option<EphemerisTable>], body: Body) -> Result<&EphemerisTable> {
    t[body.index()]
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("body '{body}' not present in ephemeris table")))
}

/// State of `body` at `epoch` from the given provider.
pub fn body_state(body: Body, epoch: Epoch, source: &Ephemeris) -> Result<StateVector> {
    source.state(body, epoch)
}
