//! Slow-push deflection: a tangential force scaled with heliocentric
//! distance, applied for a number of months before coasting to the encounter.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{propagate, ForceModelConfig, IntegratorConfig, Trajectory};
use crate::elements::StateVector;
use crate::ephemeris::AU_M;
use crate::error::{Error, Result};
use crate::impact::{impact_from_state, ImpactOutcome, ImpactRecord};
use crate::timeframes::{great_circle_km, initial_bearing_deg, Epoch, Vec3};

/// Mean month used to count deflection durations (days).
pub const MONTH_DAYS: f64 = 30.4375;
/// Default start of the push, 2019-11-01 00:00 TDB.
pub const DEFAULT_START_MJD: f64 = 58_788.0;
/// Default force at 1 AU (N).
pub const DEFAULT_F0_N: f64 = 0.185;
/// Default distance exponent of the force law.
pub const DEFAULT_EXPONENT: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsteroidBody {
    pub diameter_m: f64,
    pub density_kgm3: f64,
}

impl AsteroidBody {
    pub fn new(diameter_m: f64, density_kgm3: f64) -> Result<Self> {
        if !(50.0..=1000.0).contains(&diameter_m) {
            return Err(Error::Domain(format!("diameter {diameter_m} m outside [50, 1000] m")));
        }
        if !(density_kgm3 > 0.0) {
            return Err(Error::Domain("density must be positive".into()));
        }
        Ok(AsteroidBody { diameter_m, density_kgm3 })
    }

    /// Homogeneous sphere mass (kg).
    pub fn mass_kg(&self) -> f64 {
        self.density_kgm3 * PI / 6.0 * self.diameter_m.powi(3)
    }
}

impl Default for AsteroidBody {
    fn default() -> Self {
        AsteroidBody {
            diameter_m: 250.0,
            density_kgm3: 2000.0,
        }
    }
}

/// Push direction relative to the instantaneous heliocentric velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PushDirection {
    Accelerate,
    Decelerate,
}

impl PushDirection {
    pub fn sign(self) -> f64 {
        match self {
            PushDirection::Accelerate => 1.0,
            PushDirection::Decelerate => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrustLaw {
    /// Force at 1 AU (N).
    pub f0_n: f64,
    pub exponent: f64,
    pub direction: PushDirection,
    pub start: Epoch,
    pub duration_days: f64,
}

impl ThrustLaw {
    pub fn new(f0_n: f64, exponent: f64, direction: PushDirection, start: Epoch, duration_days: f64) -> Result<Self> {
        let law = ThrustLaw {
            f0_n,
            exponent,
            direction,
            start,
            duration_days,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0_n >= 0.0) {
            return Err(Error::Domain("f0 must be non-negative".into()));
        }
        if !(1.0..=2.0).contains(&self.exponent) {
            return Err(Error::Domain(format!("exponent {} outside [1, 2]", self.exponent)));
        }
        if !(self.duration_days >= 0.0) {
            return Err(Error::Domain("duration must be non-negative".into()));
        }
        Ok(())
    }

    pub fn end(&self) -> Epoch {
        self.start.add_days(self.duration_days)
    }

    pub fn window(&self) -> (Epoch, Epoch) {
        (self.start, self.end())
    }

    pub fn is_active(&self, t: Epoch) -> bool {
        t.mjd() >= self.start.mjd() && t.mjd() < self.end().mjd()
    }

    /// Force magnitude at heliocentric distance `r_m` (N).
    pub fn force_at(&self, r_m: f64) -> f64 {
        self.f0_n * (AU_M / r_m).powf(self.exponent)
    }
}

/// A thrust law acting on a given body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedThrust {
    pub law: ThrustLaw,
    pub asteroid: AsteroidBody,
}

impl AppliedThrust {
    /// False when the law can never produce a nonzero force.
    pub fn is_effective(&self) -> bool {
        self.law.f0_n > 0.0 && self.law.duration_days > 0.0
    }

    pub(crate) fn acceleration_unchecked(&self, s: &StateVector) -> Vec3 {
        let vn = s.v.norm();
        if vn == 0.0 || self.law.f0_n == 0.0 {
            return Vec3::zeros();
        }
        let mag = self.law.force_at(s.r.norm()) / self.asteroid.mass_kg();
        s.v * (self.law.direction.sign() * mag / vn)
    }
}

/// Thrust acceleration (m/s^2); zero outside the active window.
pub fn thrust_acceleration(s: &StateVector, law: &ThrustLaw, ast: &AsteroidBody) -> Vec3 {
    if !law.is_active(s.epoch) {
        return Vec3::zeros();
    }
    AppliedThrust {
        law: *law,
        asteroid: *ast,
    }
    .acceleration_unchecked(s)
}

impl ThrustLaw {
    /// Copy of this law with another duration in months.
    pub fn for_months(&self, months: u32) -> ThrustLaw {
        ThrustLaw {
            duration_days: months as f64 * MONTH_DAYS,
            ..*self
        }
    }
}

/// Integral of |a| over the part of `traj` inside the thrust window (m/s),
/// by 5-point Gauss-Legendre quadrature on every dense-output step.
pub fn thrust_delta_v(traj: &Trajectory, law: &ThrustLaw, ast: &AsteroidBody) -> Result<f64> {
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let origin = traj.start_epoch();
    let (on, off) = (law.start.seconds_since(origin), law.end().seconds_since(origin));
    let thrust = AppliedThrust { law: *law, asteroid: *ast };
    let mut total = 0.0;
    for st in traj.steps() {
        let (a, b) = (st.x0.min(st.x1()).max(on), st.x0.max(st.x1()).min(off));
        if b <= a {
            continue;
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            let t = mid + half * x;
            let s = StateVector::from_array(&st.eval(t), origin.add_seconds(t));
            total += w * half * thrust.acceleration_unchecked(&s).norm();
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionEntry {
    pub months: u32,
    pub outcome: ImpactOutcome,
    /// Great-circle distance from the undeflected point (km); None on a miss.
    pub displacement_km: Option<f64>,
    /// Initial bearing from the undeflected point (deg).
    pub bearing_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionTrack {
    pub undeflected: ImpactRecord,
    pub law: ThrustLaw,
    pub entries: Vec<DeflectionEntry>,
}

/// Propagates `s0` to the thrust start, then for every duration applies the
/// law for that many months and coasts to impact or `horizon`. Durations run
/// in parallel; entries follow the order of `months`.
pub fn deflection_sweep(
    s0: &StateVector,
    ast: &AsteroidBody,
    template: &ThrustLaw,
    months: &[u32],
    horizon: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<DeflectionTrack> {
    template.validate()?;
    if months.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("deflection months must be strictly increasing".into()));
    }
    if s0.epoch.mjd() > template.start.mjd() {
        return Err(Error::Domain("initial state is later than the thrust start".into()));
    }
    let start = propagate(s0, template.start, fcfg, icfg)?.final_state();
    let plain = fcfg.clone().with_thrust(None);
    let undeflected = match impact_from_state(&start, horizon, &plain, icfg)? {
        ImpactOutcome::Impact(r) => r,
        ImpactOutcome::Miss(m) => {
            return Err(Error::NoImpact {
                distance_km: m.distance_km,
            })
        }
    };
    let entries = months
        .par_iter()
        .map(|&m| {
            let law = template.for_months(m);
            let cfg = fcfg.clone().with_thrust(Some(AppliedThrust { law, asteroid: *ast }));
            let outcome = impact_from_state(&start, horizon, &cfg, icfg)?;
            let (d, b) = match &outcome {
                ImpactOutcome::Impact(r) => {
                    let d = great_circle_km(&undeflected.point, &r.point);
                    (Some(d), (d > 0.0).then(|| initial_bearing_deg(&undeflected.point, &r.point)))
                }
                ImpactOutcome::Miss(_) => (None, None),
            };
            Ok(DeflectionEntry {
                months: m,
                outcome,
                displacement_km: d,
                bearing_deg: b,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeflectionTrack {
        undeflected,
        law: *template,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    East,
    West,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementRow {
    pub months: u32,
    pub displacement_km: Option<f64>,
    pub bearing_deg: Option<f64>,
    pub heading: Heading,
}

/// Displacement and east/west heading per duration.
pub fn displacement_vs_duration(track: &DeflectionTrack) -> Vec<DisplacementRow> {
    track
        .entries
        .iter()
        .map(|e| DisplacementRow {
            months: e.months,
            displacement_km: e.displacement_km,
            bearing_deg: e.bearing_deg,
            heading: match e.bearing_deg {
                Some(b) if b > 0.0 && b < 180.0 => Heading::East,
                Some(b) if b > 180.0 => Heading::West,
                _ => Heading::None,
            },
        })
        .collect()
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

/// CSV `months,lat,lon,displacement_km,bearing_deg,impact_epoch_mjd_utc`;
/// misses leave every field but `months` empty.
pub fn deflection_track_csv(track: &DeflectionTrack) -> String {
    let mut out = String::from("months,lat,lon,displacement_km,bearing_deg,impact_epoch_mjd_utc\n");
    for e in &track.entries {
        let r = e.outcome.impact();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.months,
            opt(r.map(|r| r.point.lat_deg), 6),
            opt(r.map(|r| r.point.lon_deg), 6),
            opt(e.displacement_km, 3),
            opt(e.bearing_deg, 3),
            opt(r.map(|r| r.epoch_utc_mjd()), 9),
        ));
    }
    out
}

/// GeoJSON FeatureCollection with one Point per impacting duration.
pub fn deflection_track_geojson(track: &DeflectionTrack) -> Value {
    let round = |x: f64| (x * 1e6).round() / 1e6;
    let features: Vec<Value> = track
        .entries
        .iter()
        .filter_map(|e| {
            e.outcome.impact().map(|r| {
                json!({
                    "type": "Feature",
                    "properties": {
                        "months": e.months,
                        "displacement_km": e.displacement_km.map(|d| (d * 1e3).round() / 1e3),
                        "impact_epoch_mjd_utc": r.epoch_utc_mjd(),
                    },
                    "geometry": {"type": "Point", "coordinates": [round(r.point.lon_deg), round(r.point.lat_deg)]},
                })
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}
