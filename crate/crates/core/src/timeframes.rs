//! Epochs, time scales, frame rotations and geodetic conversions.
//!
//! Dynamics run in a uniform TDB-like scale. UTC is derived from it with a
//! constant offset, and the Earth-fixed frame is reached from the
//! heliocentric ecliptic frame by the J2000 obliquity rotation followed by
//! the Earth Rotation Angle. Precession, nutation and polar motion are not
//! modelled.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

pub const SECONDS_PER_DAY: f64 = 86_400.0;
/// MJD of the J2000.0 epoch.
pub const MJD_J2000: f64 = 51_544.5;
/// Constant TDB - UTC offset (TT - TAI plus 37 leap seconds, TT taken equal to TDB).
pub const TDB_MINUS_UTC_S: f64 = 69.184;
/// Window inside which ephemeris accuracy is claimed.
pub const ANALYSIS_WINDOW_MJD: (f64, f64) = (50_000.0, 70_000.0);

/// Obliquity of the ecliptic at J2000 (84381.406 arcsec).
pub const OBLIQUITY_J2000_RAD: f64 = 84_381.406 / 3600.0 * PI / 180.0;

const ERA_AT_J2000: f64 = 0.779_057_273_264_0;
const ERA_RATE: f64 = 1.002_737_811_911_354_48;

/// WGS84 ellipsoid.
pub const WGS84_A_M: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// Mean Earth radius used for surface distances and areas (never for dynamics).
pub const MEAN_EARTH_RADIUS_KM: f64 = 6_371.008_8;

/// Continuous day count in the dynamical time scale (MJD TDB).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Epoch(f64);

impl Epoch {
    pub const fn from_mjd_tdb(mjd: f64) -> Self {
        Epoch(mjd)
    }

    pub fn mjd(self) -> f64 {
        self.0
    }

    pub fn jd(self) -> f64 {
        self.0 + 2_400_000.5
    }

    /// Signed elapsed time `self - earlier` in seconds.
    pub fn seconds_since(self, earlier: Epoch) -> f64 {
        (self.0 - earlier.0) * SECONDS_PER_DAY
    }

    pub fn add_seconds(self, seconds: f64) -> Epoch {
        Epoch(self.0 + seconds / SECONDS_PER_DAY)
    }

    pub fn add_days(self, days: f64) -> Epoch {
        Epoch(self.0 + days)
    }

    /// Julian centuries of TDB since J2000.
    pub fn centuries_since_j2000(self) -> f64 {
        (self.0 - MJD_J2000) / 36_525.0
    }

    pub fn in_analysis_window(self) -> bool {
        (ANALYSIS_WINDOW_MJD.0..=ANALYSIS_WINDOW_MJD.1).contains(&self.0)
    }

    pub fn total_cmp(&self, other: &Epoch) -> Ordering {
        self.0.total_cmp(&other.0)
    }

    pub fn to_utc(self) -> UtcEpoch {
        tdb_to_utc(self)
    }

    /// Calendar date for the MJD TDB 0h convention of the epoch
    /// (proleptic Gregorian). Returns (year, month, day, seconds of day).
    pub fn calendar(self) -> (i32, u32, u32, f64) {
        mjd_to_calendar(self.0)
    }

    /// Epoch of a Gregorian calendar date at 0h TDB.
    pub fn from_calendar(year: i32, month: u32, day: u32) -> Epoch {
        Epoch(calendar_to_mjd(year, month, day))
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MJD {:.7} TDB", self.0)
    }
}

impl Sub for Epoch {
    type Output = f64;

    /// Difference in seconds.
    fn sub(self, rhs: Epoch) -> f64 {
        self.seconds_since(rhs)
    }
}

impl Add<f64> for Epoch {
    type Output = Epoch;

    /// Adds seconds.
    fn add(self, rhs: f64) -> Epoch {
        self.add_seconds(rhs)
    }
}

/// An instant expressed in UTC.
///
/// The underlying TDB epoch is kept so that TDB -> UTC -> TDB is the
/// identity bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UtcEpoch {
    tdb: Epoch,
}

impl UtcEpoch {
    pub fn from_mjd_utc(mjd_utc: f64) -> Self {
        UtcEpoch {
            tdb: Epoch(mjd_utc + TDB_MINUS_UTC_S / SECONDS_PER_DAY),
        }
    }

    pub fn mjd(self) -> f64 {
        self.tdb.0 - TDB_MINUS_UTC_S / SECONDS_PER_DAY
    }

    pub fn to_tdb(self) -> Epoch {
        self.tdb
    }

    pub fn calendar(self) -> (i32, u32, u32, f64) {
        mjd_to_calendar(self.mjd())
    }

    /// ISO-8601 style timestamp, whole seconds.
    pub fn iso(self) -> String {
        let (y, m, d, s) = self.calendar();
        let s = s.round() as u32;
        let (hh, mm, ss) = (s / 3600, (s % 3600) / 60, s % 60);
        format!("{y:04}-{m:02}-{d:02}T{hh:02}:{mm:02}:{ss:02}Z")
    }
}

pub fn tdb_to_utc(e: Epoch) -> UtcEpoch {
    UtcEpoch { tdb: e }
}

pub fn utc_to_tdb(u: UtcEpoch) -> Epoch {
    u.to_tdb()
}

fn calendar_to_mjd(year: i32, month: u32, day: u32) -> f64 {
    // Fliegel & Van Flandern day number.
    let (y, m, d) = (year as i64, month as i64, day as i64);
    let a = (14 - m) / 12;
    let yy = y + 4800 - a;
    let mm = m + 12 * a - 3;
    let jdn = d + (153 * mm + 2) / 5 + 365 * yy + yy / 4 - yy / 100 + yy / 400 - 32045;
    (jdn - 2_400_001) as f64
}

fn mjd_to_calendar(mjd: f64) -> (i32, u32, u32, f64) {
    let day = mjd.floor();
    let secs = (mjd - day) * SECONDS_PER_DAY;
    let jdn = day as i64 + 2_400_001;
    let a = jdn + 32044;
    let b = (4 * a + 3) / 146_097;
    let c = a - 146_097 * b / 4;
    let d = (4 * c + 3) / 1461;
    let e = c - 1461 * d / 4;
    let m = (5 * e + 2) / 153;
    let dd = e - (153 * m + 2) / 5 + 1;
    let mm = m + 3 - 12 * (m / 10);
    let yy = 100 * b + d - 4800 + m / 10;
    (yy as i32, mm as u32, dd as u32, secs)
}

/// Earth Rotation Angle in [0, 2pi), with UTC standing in for UT1.
pub fn earth_rotation_angle(e: Epoch) -> f64 {
    // Split into whole and fractional days so the ERA fraction keeps full
    // precision far from J2000.
    let du = e.mjd() - MJD_J2000;
    let whole = du.floor();
    let frac = (du - whole) - TDB_MINUS_UTC_S / SECONDS_PER_DAY;
    era_from_ut_days(whole, frac)
}

/// ERA for `JD_UT - 2451545.0 = whole + frac`.
pub fn era_from_ut_days(whole: f64, frac: f64) -> f64 {
    let turns = ERA_AT_J2000 + frac + (ERA_RATE - 1.0) * (whole + frac);
    let f = turns - turns.floor();
    let theta = TAU * f;
    if theta >= TAU {
        0.0
    } else {
        theta
    }
}

/// ERA rate in rad/s.
pub fn earth_rotation_rate() -> f64 {
    TAU * ERA_RATE / SECONDS_PER_DAY
}

/// Rotation matrix taking ecliptic J2000 vectors to equatorial J2000.
pub fn ecliptic_to_equatorial_matrix() -> Matrix3<f64> {
    let (s, c) = OBLIQUITY_J2000_RAD.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn ecliptic_to_equatorial(v: &Vec3) -> Vec3 {
    ecliptic_to_equatorial_matrix() * v
}

pub fn equatorial_to_ecliptic(v: &Vec3) -> Vec3 {
    ecliptic_to_equatorial_matrix().transpose() * v
}

/// Rotation about +z taking equatorial (inertial) vectors to Earth-fixed.
pub fn inertial_to_earth_fixed_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Earth-fixed position and velocity (relative to the rotating surface) of a
/// geocentric ecliptic state.
pub fn geocentric_ecliptic_to_earth_fixed(e: Epoch, r_ecl: &Vec3, v_ecl: &Vec3) -> (Vec3, Vec3) {
    let q = ecliptic_to_equatorial_matrix();
    let rot = inertial_to_earth_fixed_matrix(earth_rotation_angle(e));
    let r_eq = q * r_ecl;
    let v_eq = q * v_ecl;
    let omega = Vec3::new(0.0, 0.0, earth_rotation_rate());
    let r_ef = rot * r_eq;
    let v_ef = rot * (v_eq - omega.cross(&r_eq));
    (r_ef, v_ef)
}

/// Geodetic coordinates on the WGS84 ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl GeodeticPoint {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        GeodeticPoint {
            lat_deg: lat_deg.clamp(-90.0, 90.0),
            lon_deg: wrap_lon_deg(lon_deg),
            alt_m,
        }
    }

    pub fn surface(lat_deg: f64, lon_deg: f64) -> Self {
        Self::new(lat_deg, lon_deg, 0.0)
    }
}

impl fmt::Display for GeodeticPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = if self.lat_deg >= 0.0 { 'N' } else { 'S' };
        let ew = if self.lon_deg >= 0.0 { 'E' } else { 'W' };
        write!(
            f,
            "{:.3}{} {:.3}{}",
            self.lat_deg.abs(),
            ns,
            self.lon_deg.abs(),
            ew
        )
    }
}

/// Wraps a longitude into (-180, 180].
pub fn wrap_lon_deg(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l <= -180.0 {
        l += 360.0;
    } else if l > 180.0 {
        l -= 360.0;
    }
    l
}

fn wgs84_e2() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

pub fn geodetic_to_ecef(p: &GeodeticPoint) -> Vec3 {
    let e2 = wgs84_e2();
    let (sl, cl) = p.lat_deg.to_radians().sin_cos();
    let (so, co) = p.lon_deg.to_radians().sin_cos();
    let n = WGS84_A_M / (1.0 - e2 * sl * sl).sqrt();
    Vec3::new(
        (n + p.alt_m) * cl * co,
        (n + p.alt_m) * cl * so,
        (n * (1.0 - e2) + p.alt_m) * sl,
    )
}

pub fn ecef_to_geodetic(r: &Vec3) -> Result<GeodeticPoint> {
    let norm = r.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Domain(format!(
            "geodetic conversion needs a finite nonzero vector, got {r:?}"
        )));
    }
    let e2 = wgs84_e2();
    let p = r.x.hypot(r.y);
    let lon = r.y.atan2(r.x);
    let mut lat = r.z.atan2(p * (1.0 - e2));
    let mut converged = false;
    for _ in 0..50 {
        let s = lat.sin();
        let n = WGS84_A_M / (1.0 - e2 * s * s).sqrt();
        let next = (r.z + e2 * n * s).atan2(p);
        let delta = (next - lat).abs();
        lat = next;
        if delta < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(
            "ecef_to_geodetic",
            format!("latitude iteration did not converge for {r:?}"),
        ));
    }
    let (s, c) = lat.sin_cos();
    let alt = p * c + r.z * s - WGS84_A_M * (1.0 - e2 * s * s).sqrt();
    Ok(GeodeticPoint::new(lat.to_degrees(), lon.to_degrees(), alt))
}

/// Unit vectors (east, north, up) of the local horizon at a geodetic point,
/// in the Earth-fixed frame.
pub fn enu_basis(p: &GeodeticPoint) -> (Vec3, Vec3, Vec3) {
    let (sl, cl) = p.lat_deg.to_radians().sin_cos();
    let (so, co) = p.lon_deg.to_radians().sin_cos();
    let east = Vec3::new(-so, co, 0.0);
    let north = Vec3::new(-sl * co, -sl * so, cl);
    let up = Vec3::new(cl * co, cl * so, sl);
    (east, north, up)
}

/// Great-circle distance on the mean-radius sphere (km).
pub fn great_circle_km(a: &GeodeticPoint, b: &GeodeticPoint) -> f64 {
    let (p1, p2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dphi = p2 - p1;
    let dl = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * MEAN_EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Initial bearing from `a` to `b`, degrees clockwise from north in [0, 360).
pub fn initial_bearing_deg(a: &GeodeticPoint, b: &GeodeticPoint) -> f64 {
    let (p1, p2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dl = (b.lon_deg - a.lon_deg).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

/// Point reached travelling `dist_km` from `start` along `bearing_deg`.
pub fn destination(start: &GeodeticPoint, bearing_deg: f64, dist_km: f64) -> GeodeticPoint {
    let d = dist_km / MEAN_EARTH_RADIUS_KM;
    let b = bearing_deg.to_radians();
    let p1 = start.lat_deg.to_radians();
    let l1 = start.lon_deg.to_radians();
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * b.cos()).asin();
    let l2 = l1 + (b.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    GeodeticPoint::surface(p2.to_degrees(), l2.to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn utc_offset_matches_constant() {
        let u = tdb_to_utc(Epoch::from_mjd_tdb(57125.0));
        assert_abs_diff_eq!(u.mjd(), 57125.0 - 69.184 / 86400.0, epsilon = 1e-11);
        assert_abs_diff_eq!(u.mjd(), 57124.99919926, epsilon = 1e-8);
        let impact = Epoch::from_mjd_tdb(59825.161227);
        let du = (impact.mjd() - tdb_to_utc(impact).mjd()) * SECONDS_PER_DAY;
        assert_abs_diff_eq!(du, 69.184, epsilon = 1e-6);
    }

    #[test]
    fn utc_round_trip_is_identity() {
        for mjd in [50000.0, 57125.0, 59825.161227, 69999.999] {
            let e = Epoch::from_mjd_tdb(mjd);
            assert_eq!(utc_to_tdb(tdb_to_utc(e)), e);
        }
    }

    #[test]
    fn calendar_conversions() {
        assert_eq!(Epoch::from_calendar(2015, 4, 13).mjd(), 57125.0);
        assert_eq!(Epoch::from_calendar(2019, 11, 1).mjd(), 58788.0);
        assert_eq!(Epoch::from_calendar(2000, 1, 1).mjd(), 51544.0);
        let (y, m, d, s) = Epoch::from_mjd_tdb(59825.161227).calendar();
        assert_eq!((y, m, d), (2022, 9, 3));
        assert_abs_diff_eq!(s, 0.161227 * 86400.0, epsilon = 1e-5);
    }

    #[test]
    fn era_at_j2000() {
        // JD_UT 2451545.0 corresponds to TDB MJD 51544.5 plus the offset.
        let e = Epoch::from_mjd_tdb(MJD_J2000 + TDB_MINUS_UTC_S / SECONDS_PER_DAY);
        assert_abs_diff_eq!(earth_rotation_angle(e), TAU * 0.779_057_273_264_0, epsilon = 1e-9);
        assert_abs_diff_eq!(era_from_ut_days(0.0, 0.0), 4.894_961_212_823_756, epsilon = 1e-12);
    }

    #[test]
    fn era_is_periodic_and_linear() {
        let t = Epoch::from_mjd_tdb(59825.0);
        let period_days = 1.0 / ERA_RATE;
        let a = earth_rotation_angle(t);
        let b = earth_rotation_angle(t.add_days(period_days));
        let d = (b - a).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-9);
        for delta in [0.125, 0.5, 1.25, 3.0, 7.75, 10.0] {
            let a = earth_rotation_angle(t);
            let b = earth_rotation_angle(t.add_days(delta));
            let expected = (TAU * ERA_RATE * delta).rem_euclid(TAU);
            let got = (b - a).rem_euclid(TAU);
            let diff = (got - expected).abs();
            assert!(diff.min(TAU - diff) < 1e-12, "delta {delta}: diff {diff}");
        }
    }

    #[test]
    fn era_increases_within_a_day() {
        let t = Epoch::from_mjd_tdb(58000.3);
        let a = earth_rotation_angle(t);
        let b = earth_rotation_angle(t.add_seconds(60.0));
        assert_abs_diff_eq!(b - a, earth_rotation_rate() * 60.0, epsilon = 1e-10);
    }

    #[test]
    fn obliquity_rotation() {
        let x = ecliptic_to_equatorial(&Vec3::x());
        assert_abs_diff_eq!(x, Vec3::x(), epsilon = 1e-15);
        let y = ecliptic_to_equatorial(&Vec3::y());
        let (s, c) = OBLIQUITY_J2000_RAD.sin_cos();
        assert_abs_diff_eq!(y, Vec3::new(0.0, c, s), epsilon = 1e-15);
        let v = Vec3::new(0.3, -1.7, 2.2);
        assert_abs_diff_eq!(equatorial_to_ecliptic(&ecliptic_to_equatorial(&v)), v, epsilon = 1e-15);
    }

    #[test]
    fn rotations_are_orthonormal() {
        let q = ecliptic_to_equatorial_matrix();
        assert!((q.transpose() * q - Matrix3::identity()).abs().max() < 1e-14);
        assert_abs_diff_eq!(q.determinant(), 1.0, epsilon = 1e-14);
        for theta in [0.0, 1.0, 4.2, 6.2] {
            let r = inertial_to_earth_fixed_matrix(theta);
            assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-14);
        }
    }

    #[test]
    fn geodetic_reference_points() {
        let g = ecef_to_geodetic(&Vec3::new(6_378_137.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(g.lat_deg, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.lon_deg, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.alt_m, 0.0, epsilon = 1e-9);

        // 6356752.3142 is the semi-minor axis rounded to 0.1 mm.
        let b = WGS84_A_M * (1.0 - WGS84_F);
        let g = ecef_to_geodetic(&Vec3::new(0.0, 0.0, 6_356_752.3142)).unwrap();
        assert_abs_diff_eq!(g.lat_deg, 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.alt_m, 6_356_752.3142 - b, epsilon = 1e-6);
        let g = ecef_to_geodetic(&Vec3::new(0.0, 0.0, b)).unwrap();
        assert_abs_diff_eq!(g.alt_m, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn geodetic_rejects_zero_vector() {
        assert!(matches!(ecef_to_geodetic(&Vec3::zeros()), Err(Error::Domain(_))));
    }

    #[test]
    fn longitude_wrapping() {
        assert_eq!(wrap_lon_deg(180.0), 180.0);
        assert_eq!(wrap_lon_deg(-180.0), 180.0);
        assert_abs_diff_eq!(wrap_lon_deg(190.0), -170.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_lon_deg(-541.0), 179.0, epsilon = 1e-12);
    }

    #[test]
    fn great_circle_and_bearing() {
        let a = GeodeticPoint::surface(0.0, 0.0);
        let b = GeodeticPoint::surface(0.0, 1.0);
        assert_abs_diff_eq!(great_circle_km(&a, &b), MEAN_EARTH_RADIUS_KM * PI / 180.0, epsilon = 1e-9);
        assert_abs_diff_eq!(initial_bearing_deg(&a, &b), 90.0, epsilon = 1e-9);
        assert_abs_diff_eq!(initial_bearing_deg(&b, &a), 270.0, epsilon = 1e-9);
        let c = destination(&GeodeticPoint::surface(28.6, 77.2), 281.0, 900.0);
        assert_abs_diff_eq!(great_circle_km(&GeodeticPoint::surface(28.6, 77.2), &c), 900.0, epsilon = 1e-6);
    }

    #[test]
    fn earth_fixed_velocity_removes_rotation() {
        // A point co-rotating with the surface has zero Earth-fixed velocity.
        let e = Epoch::from_mjd_tdb(59000.25);
        let theta = earth_rotation_angle(e);
        let r_ef = Vec3::new(6.4e6, 0.0, 0.0);
        let rot = inertial_to_earth_fixed_matrix(theta);
        let r_eq = rot.transpose() * r_ef;
        let v_eq = Vec3::new(0.0, 0.0, earth_rotation_rate()).cross(&r_eq);
        let q = ecliptic_to_equatorial_matrix();
        let (r2, v2) = geocentric_ecliptic_to_earth_fixed(e, &(q.transpose() * r_eq), &(q.transpose() * v_eq));
        assert_abs_diff_eq!(r2, r_ef, epsilon = 1e-6);
        assert!(v2.norm() < 1e-9);
    }
}
