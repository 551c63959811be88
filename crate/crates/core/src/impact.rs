//! Terminal-encounter geometry and path-of-risk generation by scanning the
//! reference epoch of a fixed element set.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{propagate_until, EventFunction, ForceModelConfig, IntegratorConfig, Trajectory};
use crate::elements::{equinoctial_to_cartesian, EquinoctialElements, StateVector};
use crate::ephemeris::{Body, Ephemeris, GM_SUN};
use crate::error::{Error, Result};
use crate::numerics::golden_min;
use crate::timeframes::{
    ecef_to_geodetic, enu_basis, geocentric_ecliptic_to_earth_fixed, great_circle_km, Epoch, GeodeticPoint, Vec3,
    WGS84_A_M,
};

/// Default end of the impact search (2023-02-25 TDB).
pub const DEFAULT_HORIZON_MJD: f64 = 60_000.0;

// geocentric distance above which the altitude event uses the cheap spherical proxy
const PREFILTER_RADIUS_M: f64 = 1.5 * WGS84_A_M;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactRecord {
    /// Contact epoch (TDB); reported in UTC.
    pub epoch: Epoch,
    pub point: GeodeticPoint,
    /// Speed relative to the rotating surface (km/s).
    pub speed_kms: f64,
    /// Angle between velocity and the local horizontal plane (deg).
    pub incidence_deg: f64,
    /// Geocentric inertial speed at contact (km/s).
    pub inertial_speed_kms: f64,
    /// Heliocentric state at contact.
    #[serde(skip)]
    pub state: StateVector,
}

impl ImpactRecord {
    pub fn epoch_utc_mjd(&self) -> f64 {
        self.epoch.to_utc().mjd()
    }
}

/// Closest geocentric approach of a non-impacting propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MissRecord {
    pub epoch: Epoch,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ImpactOutcome {
    Impact(ImpactRecord),
    Miss(MissRecord),
}

impl ImpactOutcome {
    pub fn impact(&self) -> Option<&ImpactRecord> {
        match self {
            ImpactOutcome::Impact(r) => Some(r),
            ImpactOutcome::Miss(_) => None,
        }
    }

    pub fn is_impact(&self) -> bool {
        self.impact().is_some()
    }
}

/// Geodetic altitude of the asteroid above the Earth ellipsoid.
pub struct AltitudeEvent<'a> {
    pub ephemeris: &'a Ephemeris,
}

impl EventFunction for AltitudeEvent<'_> {
    fn value(&self, epoch: Epoch, s: &StateVector) -> Result<f64> {
        let earth = self.ephemeris.position(Body::Earth, epoch)?;
        let geo = s.r - earth;
        let d = geo.norm();
        if d > PREFILTER_RADIUS_M {
            return Ok(d - WGS84_A_M);
        }
        let (ef, _) = geocentric_ecliptic_to_earth_fixed(epoch, &geo, &Vec3::zeros());
        Ok(ecef_to_geodetic(&ef)?.alt_m)
    }

    fn samples_per_step(&self) -> usize {
        8
    }
}

/// Surface contact geometry of a heliocentric state lying on the ellipsoid.
pub fn contact_record(s: &StateVector, eph: &Ephemeris) -> Result<ImpactRecord> {
    let earth = eph.state(Body::Earth, s.epoch)?;
    let geo_r = s.r - earth.r;
    let geo_v = s.v - earth.v;
    let (r_ef, v_ef) = geocentric_ecliptic_to_earth_fixed(s.epoch, &geo_r, &geo_v);
    let p = ecef_to_geodetic(&r_ef)?;
    let point = GeodeticPoint::surface(p.lat_deg, p.lon_deg);
    let (_, _, up) = enu_basis(&point);
    let speed = v_ef.norm();
    let incidence = (-v_ef.dot(&up) / speed).clamp(-1.0, 1.0).asin().to_degrees();
    Ok(ImpactRecord {
        epoch: s.epoch,
        point,
        speed_kms: speed / 1e3,
        incidence_deg: incidence,
        inertial_speed_kms: geo_v.norm() / 1e3,
        state: *s,
    })
}

/// Minimum geocentric distance along a trajectory.
pub fn closest_approach(traj: &Trajectory, eph: &Ephemeris) -> Result<MissRecord> {
    let origin = traj.start_epoch();
    let dist = |x: f64| -> Result<f64> {
        let e = origin.add_seconds(x);
        let s = traj.state_at(e)?;
        Ok((s.r - eph.position(Body::Earth, e)?).norm())
    };
    const SAMPLES: usize = 16;
    let mut best = (0.0, dist(0.0)?);
    let mut best_step = None;
    for (i, st) in traj.steps().iter().enumerate() {
        for j in 1..=SAMPLES {
            let x = st.x0 + st.h * j as f64 / SAMPLES as f64;
            let d = dist(x)?;
            if d < best.1 {
                best = (x, d);
                best_step = Some(i);
            }
        }
    }
    if let Some(i) = best_step {
        let st = &traj.steps()[i];
        let w = st.h / SAMPLES as f64;
        let lo = (best.0 - w).max(st.x0.min(st.x1()));
        let hi = (best.0 + w).min(st.x0.max(st.x1()));
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let (x, d) = golden_min(dist, lo, hi, 1e-3)?;
        if d < best.1 {
            best = (x, d);
        }
    }
    Ok(MissRecord {
        epoch: origin.add_seconds(best.0),
        distance_km: best.1 / 1e3,
    })
}

/// Propagates a heliocentric state to Earth contact or to `horizon`.
pub fn impact_from_state(
    s0: &StateVector,
    horizon: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<ImpactOutcome> {
    let g = AltitudeEvent {
        ephemeris: &fcfg.ephemeris,
    };
    let (traj, hit) = propagate_until(s0, horizon, fcfg, icfg, &g)?;
    match hit {
        Some(h) => Ok(ImpactOutcome::Impact(contact_record(&h.state, &fcfg.ephemeris)?)),
        None => Ok(ImpactOutcome::Miss(closest_approach(&traj, &fcfg.ephemeris)?)),
    }
}

/// Propagates the orbit defined by `el` to Earth contact, searching up to
/// [`DEFAULT_HORIZON_MJD`].
pub fn impact_from_elements(
    el: &EquinoctialElements,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<ImpactOutcome> {
    impact_from_elements_until(el, Epoch::from_mjd_tdb(DEFAULT_HORIZON_MJD), fcfg, icfg)
}

pub fn impact_from_elements_until(
    el: &EquinoctialElements,
    horizon: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<ImpactOutcome> {
    el.validate()?;
    let s0 = equinoctial_to_cartesian(el, GM_SUN)?;
    impact_from_state(&s0, horizon, fcfg, icfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskSample {
    pub offset_days: f64,
    pub outcome: ImpactOutcome,
}

/// Impact outcomes over re-dated copies of one element set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPath {
    pub samples: Vec<RiskSample>,
}

impl RiskPath {
    pub fn impacts(&self) -> impl Iterator<Item = (f64, &ImpactRecord)> {
        self.samples
            .iter()
            .filter_map(|s| s.outcome.impact().map(|r| (s.offset_days, r)))
    }
}

/// Evenly spaced offsets from `lo` to `hi` inclusive.
pub fn offset_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Scans the reference epoch: each offset re-dates `el` and propagates it.
/// Runs on the current rayon pool; results keep the offset order.
pub fn risk_path(
    el: &EquinoctialElements,
    offsets: &[f64],
    horizon: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<RiskPath> {
    if offsets.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("risk path offsets must be strictly increasing".into()));
    }
    let samples = offsets
        .par_iter()
        .map(|&d| {
            let outcome = impact_from_elements_until(&el.redated(d), horizon, fcfg, icfg)?;
            Ok(RiskSample {
                offset_days: d,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskPath { samples })
}

/// Uniform scan of `window` with `n` offsets, followed by `bisections`
/// halvings of every impact/miss transition so that the grazing ends of the
/// corridor are resolved. Returns the merged, offset-ordered path.
pub fn risk_corridor(
    el: &EquinoctialElements,
    window: (f64, f64),
    n: usize,
    bisections: usize,
    horizon: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<RiskPath> {
    let mut path = risk_path(el, &offset_grid(window.0, window.1, n), horizon, fcfg, icfg)?;
    let edges: Vec<(RiskSample, RiskSample)> = path
        .samples
        .windows(2)
        .filter(|w| w[0].outcome.is_impact() != w[1].outcome.is_impact())
        .map(|w| (w[0], w[1]))
        .collect();
    let refined = edges
        .par_iter()
        .map(|&(a, b)| {
            let (mut a, mut b) = (a, b);
            for _ in 0..bisections {
                let mid = 0.5 * (a.offset_days + b.offset_days);
                let s = RiskSample {
                    offset_days: mid,
                    outcome: impact_from_elements_until(&el.redated(mid), horizon, fcfg, icfg)?,
                };
                if s.outcome.is_impact() == a.outcome.is_impact() {
                    a = s;
                } else {
                    b = s;
                }
            }
            Ok([a, b])
        })
        .collect::<Result<Vec<_>>>()?;
    path.samples.extend(refined.into_iter().flatten());
    path.samples.sort_by(|x, y| x.offset_days.total_cmp(&y.offset_days));
    path.samples.dedup_by(|x, y| x.offset_days == y.offset_days);
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReanchorOptions {
    pub coarse_samples: usize,
    pub xtol_days: f64,
    pub horizon: Epoch,
}

impl Default for ReanchorOptions {
    fn default() -> Self {
        ReanchorOptions {
            coarse_samples: 81,
            xtol_days: 1e-8,
            horizon: Epoch::from_mjd_tdb(DEFAULT_HORIZON_MJD),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reanchored {
    pub offset_days: f64,
    pub record: ImpactRecord,
    pub distance_km: f64,
}

/// Finds the epoch offset in `window` whose impact point lies closest to
/// `target`. A coarse scan brackets the best impacting sample; golden-section
/// search refines it until the distance is below 50 km or the bracket closes.
pub fn reanchor_epoch(
    el: &EquinoctialElements,
    target: &GeodeticPoint,
    window: (f64, f64),
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
    opts: &ReanchorOptions,
) -> Result<Reanchored> {
    let (lo, hi) = window;
    if !(hi > lo) || opts.coarse_samples < 3 {
        return Err(Error::Domain("reanchor window must be non-empty with at least 3 samples".into()));
    }
    let offsets = offset_grid(lo, hi, opts.coarse_samples);
    let path = risk_path(el, &offsets, opts.horizon, fcfg, icfg)?;
    let best = path
        .impacts()
        .map(|(d, r)| (d, *r, great_circle_km(&r.point, target)))
        .min_by(|a, b| a.2.total_cmp(&b.2));
    let Some((d0, r0, dist0)) = best else {
        let nearest = path
            .samples
            .iter()
            .filter_map(|s| match s.outcome {
                ImpactOutcome::Miss(m) => Some((s.offset_days, m.distance_km)),
                ImpactOutcome::Impact(_) => None,
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let detail = match nearest {
            Some((d, km)) => format!(
                "{} offsets in [{lo}, {hi}] d all miss; closest approach {km:.0} km at offset {d}",
                offsets.len()
            ),
            None => "empty scan".into(),
        };
        return Err(Error::NotFound(detail));
    };

    let step = offsets[1] - offsets[0];
    let mut best = (d0, r0, dist0);
    // misses score by their approach distance above any surface distance
    let objective = |d: f64| -> Result<f64> {
        match impact_from_elements_until(&el.redated(d), opts.horizon, fcfg, icfg)? {
            ImpactOutcome::Impact(r) => Ok(great_circle_km(&r.point, target)),
            ImpactOutcome::Miss(m) => Ok(2.0e4 + m.distance_km),
        }
    };
    let (d, _) = golden_min(objective, (d0 - step).max(lo), (d0 + step).min(hi), opts.xtol_days)?;
    if let ImpactOutcome::Impact(r) = impact_from_elements_until(&el.redated(d), opts.horizon, fcfg, icfg)? {
        let km = great_circle_km(&r.point, target);
        if km < best.2 {
            best = (d, r, km);
        }
    }
    Ok(Reanchored {
        offset_days: best.0,
        record: best.1,
        distance_km: best.2,
    })
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

/// CSV with columns `offset_days,lat,lon,epoch_utc_mjd,speed_kms,incidence_deg`.
/// Misses leave the geometry fields empty and report the closest-approach epoch.
pub fn risk_path_csv(path: &RiskPath) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wr = |e: csv::Error| Error::numerical("csv", e.to_string());
    w.write_record(["offset_days", "lat", "lon", "epoch_utc_mjd", "speed_kms", "incidence_deg"])
        .map_err(wr)?;
    for s in &path.samples {
        let r = s.outcome.impact();
        let epoch = match s.outcome {
            ImpactOutcome::Impact(r) => r.epoch_utc_mjd(),
            ImpactOutcome::Miss(m) => m.epoch.to_utc().mjd(),
        };
        w.write_record([
            format!("{:.9}", s.offset_days),
            fmt_opt(r.map(|r| r.point.lat_deg), 6),
            fmt_opt(r.map(|r| r.point.lon_deg), 6),
            format!("{epoch:.9}"),
            fmt_opt(r.map(|r| r.speed_kms), 6),
            fmt_opt(r.map(|r| r.incidence_deg), 4),
        ])
        .map_err(wr)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::numerical("csv", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::numerical("csv", e.to_string()))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Splits a lon/lat polyline wherever consecutive points straddle the antimeridian.
pub(crate) fn split_antimeridian(points: &[(f64, f64)]) -> Vec<Vec<[f64; 2]>> {
    let mut parts: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for &(lon, lat) in points {
        if let Some(prev) = cur.last() {
            if (lon - prev[0]).abs() > 180.0 {
                parts.push(std::mem::take(&mut cur));
            }
        }
        cur.push([round6(lon), round6(lat)]);
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    parts
}

/// GeoJSON FeatureCollection: the corridor as a MultiLineString (split at the
/// antimeridian) plus one Point per impacting offset.
pub fn risk_path_geojson(path: &RiskPath) -> Value {
    let pts: Vec<(f64, f64)> = path.impacts().map(|(_, r)| (r.point.lon_deg, r.point.lat_deg)).collect();
    let mut features = vec![json!({
        "type": "Feature",
        "properties": {"kind": "corridor"},
        "geometry": {"type": "MultiLineString", "coordinates": split_antimeridian(&pts)},
    })];
    for (d, r) in path.impacts() {
        features.push(json!({
            "type": "Feature",
            "properties": {
                "offset_days": d,
                "epoch_utc_mjd": r.epoch_utc_mjd(),
                "speed_kms": round6(r.speed_kms),
                "incidence_deg": round6(r.incidence_deg),
            },
            "geometry": {"type": "Point", "coordinates": [round6(r.point.lon_deg), round6(r.point.lat_deg)]},
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

#[cfg(test)]
mod tests;
