use std::path::PathBuf;

use crate::timeframes::Epoch;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("epoch {epoch} outside supported span [{first}, {last}] (MJD TDB)")]
    Range { epoch: f64, first: f64, last: f64 },

    #[error("{path}:{line}: {detail}")]
    Format {
        path: String,
        line: usize,
        detail: String,
    },

    #[error("close-encounter singularity with {body} at MJD {epoch}: separation {distance_km:.1} km")]
    CloseEncounter {
        body: &'static str,
        epoch: f64,
        distance_km: f64,
    },

    #[error("step size underflow at MJD {} (h = {step_s:.3e} s)", .epoch.mjd())]
    StepUnderflow { epoch: Epoch, step_s: f64 },

    #[error("event not found in propagation span")]
    EventNotFound,

    #[error("finite-difference propagation failed on axis {axis}: {source}")]
    Perturbation {
        axis: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory misses the Earth (closest approach {distance_km:.0} km)")]
    NoImpact { distance_km: f64 },

    #[error("no impacting offset in search window: {0}")]
    NotFound(String),

    #[error("point ({lat:.4}, {lon:.4}) not covered by raster")]
    Coverage { lat: f64, lon: f64 },

    #[error("undeflected population is zero, HCI undefined")]
    UndefinedHci,

    #[error("propellant exhausted at MJD {epoch:.4} (mass {mass_kg:.3} kg)")]
    PropellantExhausted { epoch: f64, mass_kg: f64 },

    #[error("covariance not positive semidefinite: min eigenvalue {min_eig:.3e}, trace {trace:.3e}")]
    Conditioning { min_eig: f64, trace: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, line: usize, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            line,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
