//! Equinoctial orbital elements and their Cartesian image.
//!
//! Convention: `p1 = e sin(varpi)`, `p2 = e cos(varpi)`,
//! `q1 = tan(i/2) sin(Omega)`, `q2 = tan(i/2) cos(Omega)`,
//! `lambda = varpi + M`, prograde (retrograde factor +1). The alternative
//! reading with each pair swapped is available through
//! [`ElementConvention::Swapped`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeframes::{Epoch, Vec3};

/// Which ordering of the (P1, P2) and (Q1, Q2) pairs a set of tabulated
/// elements follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementConvention {
    /// `P1 = e sin(varpi)`, `Q1 = tan(i/2) sin(Omega)`.
    #[default]
    Standard,
    /// `P1 = e cos(varpi)`, `Q1 = tan(i/2) cos(Omega)`.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquinoctialElements {
    /// Semi-major axis (m).
    pub a: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    /// Mean longitude (deg).
    pub ml_deg: f64,
    pub epoch: Epoch,
}

/// Heliocentric ecliptic J2000 Cartesian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    /// Position (m).
    pub r: Vec3,
    /// Velocity (m/s).
    pub v: Vec3,
    pub epoch: Epoch,
}

impl StateVector {
    pub fn new(r: Vec3, v: Vec3, epoch: Epoch) -> Self {
        StateVector { r, v, epoch }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.r.x, self.r.y, self.r.z, self.v.x, self.v.y, self.v.z]
    }

    pub fn from_array(y: &[f64; 6], epoch: Epoch) -> Self {
        StateVector {
            r: Vec3::new(y[0], y[1], y[2]),
            v: Vec3::new(y[3], y[4], y[5]),
            epoch,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Specific orbital energy about a central body (J/kg).
    pub fn energy(&self, mu: f64) -> f64 {
        0.5 * self.v.norm_squared() - mu / self.r.norm()
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.r.cross(&self.v)
    }
}

impl EquinoctialElements {
    /// Builds elements from classical Keplerian ones (angles in degrees).
    pub fn from_keplerian(
        a: f64,
        e: f64,
        inc_deg: f64,
        node_deg: f64,
        argp_deg: f64,
        mean_anomaly_deg: f64,
        epoch: Epoch,
    ) -> Self {
        let varpi = (node_deg + argp_deg).to_radians();
        let node = node_deg.to_radians();
        let t = (inc_deg.to_radians() / 2.0).tan();
        EquinoctialElements {
            a,
            p1: e * varpi.sin(),
            p2: e * varpi.cos(),
            q1: t * node.sin(),
            q2: t * node.cos(),
            ml_deg: (node_deg + argp_deg + mean_anomaly_deg).rem_euclid(360.0),
            epoch,
        }
    }

    /// Reinterprets tabulated values under `convention` as standard elements.
    pub fn with_convention(self, convention: ElementConvention) -> Self {
        match convention {
            ElementConvention::Standard => self,
            ElementConvention::Swapped => EquinoctialElements {
                p1: self.p2,
                p2: self.p1,
                q1: self.q2,
                q2: self.q1,
                ..self
            },
        }
    }

    /// Same elements re-dated by `days`.
    pub fn redated(self, days: f64) -> Self {
        EquinoctialElements {
            epoch: self.epoch.add_days(days),
            ..self
        }
    }

    pub fn eccentricity(&self) -> f64 {
        self.p1.hypot(self.p2)
    }

    pub fn inclination_deg(&self) -> f64 {
        (2.0 * self.q1.hypot(self.q2).atan()).to_degrees()
    }

    pub fn node_deg(&self) -> f64 {
        self.q1.atan2(self.q2).to_degrees().rem_euclid(360.0)
    }

    pub fn longitude_of_perihelion_deg(&self) -> f64 {
        self.p1.atan2(self.p2).to_degrees().rem_euclid(360.0)
    }

    pub fn perihelion(&self) -> f64 {
        self.a * (1.0 - self.eccentricity())
    }

    pub fn aphelion(&self) -> f64 {
        self.a * (1.0 + self.eccentricity())
    }

    pub fn period_s(&self, mu: f64) -> f64 {
        TAU * (self.a.powi(3) / mu).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.a, self.p1, self.p2, self.q1, self.q2, self.ml_deg, self.epoch.mjd()];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite equinoctial elements {self:?}")));
        }
        if self.a <= 0.0 {
            return Err(Error::Domain(format!("semi-major axis must be positive, got {}", self.a)));
        }
        if self.p1 * self.p1 + self.p2 * self.p2 >= 1.0 {
            return Err(Error::Domain(format!(
                "eccentricity {} is not elliptic",
                self.eccentricity()
            )));
        }
        Ok(())
    }
}

/// Solves the generalized Kepler equation
/// `lambda = F + p1 cos F - p2 sin F` for the eccentric longitude `F`.
pub fn solve_eccentric_longitude(ml: f64, p1: f64, p2: f64) -> Result<f64> {
    let e = p1.hypot(p2);
    if !(e < 1.0) || !ml.is_finite() {
        return Err(Error::Domain(format!(
            "eccentric longitude needs e < 1 and finite lambda (e = {e}, lambda = {ml})"
        )));
    }
    let residual = |f: f64| f + p1 * f.cos() - p2 * f.sin() - ml;
    // The residual is strictly increasing and the root lies within e of lambda.
    let mut lo = ml - e - 1e-12;
    let mut hi = ml + e + 1e-12;
    let mut f = ml;
    for _ in 0..60 {
        let g = residual(f);
        if g.abs() < 1e-15 * ml.abs().max(1.0) {
            return Ok(f);
        }
        if g > 0.0 {
            hi = f;
        } else {
            lo = f;
        }
        let dg = 1.0 - p1 * f.sin() - p2 * f.cos();
        let step = (g / dg).clamp(-0.5, 0.5);
        let mut next = f - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - f).abs() <= 4.0 * f64::EPSILON * f.abs().max(1.0) {
            return Ok(next);
        }
        f = next;
    }
    if residual(f).abs() < 1e-13 {
        return Ok(f);
    }
    Err(Error::numerical(
        "solve_eccentric_longitude",
        format!("no convergence in 60 iterations (lambda = {ml}, p1 = {p1}, p2 = {p2})"),
    ))
}

fn frame_vectors(q1: f64, q2: f64) -> (Vec3, Vec3, Vec3) {
    let (p, q) = (q1, q2);
    let s = 1.0 + p * p + q * q;
    let f = Vec3::new(1.0 - p * p + q * q, 2.0 * p * q, -2.0 * p) / s;
    let g = Vec3::new(2.0 * p * q, 1.0 + p * p - q * q, 2.0 * q) / s;
    let w = Vec3::new(2.0 * p, -2.0 * q, 1.0 - p * p - q * q) / s;
    (f, g, w)
}

pub fn equinoctial_to_cartesian(el: &EquinoctialElements, mu: f64) -> Result<StateVector> {
    el.validate()?;
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("gravitational parameter must be positive, got {mu}")));
    }
    let (a, h, k) = (el.a, el.p1, el.p2);
    let ecl = solve_eccentric_longitude(el.ml_deg.to_radians(), h, k)?;
    let (sf, cf) = ecl.sin_cos();
    let beta = 1.0 / (1.0 + (1.0 - h * h - k * k).sqrt());
    let x1 = a * ((1.0 - h * h * beta) * cf + h * k * beta * sf - k);
    let y1 = a * ((1.0 - k * k * beta) * sf + h * k * beta * cf - h);
    let n = (mu / (a * a * a)).sqrt();
    let r = a * (1.0 - k * cf - h * sf);
    let xd = n * a * a / r * (h * k * beta * cf - (1.0 - h * h * beta) * sf);
    let yd = n * a * a / r * ((1.0 - k * k * beta) * cf - h * k * beta * sf);
    let (f, g, _) = frame_vectors(el.q1, el.q2);
    Ok(StateVector {
        r: f * x1 + g * y1,
        v: f * xd + g * yd,
        epoch: el.epoch,
    })
}

pub fn cartesian_to_equinoctial(s: &StateVector, mu: f64) -> Result<EquinoctialElements> {
    if !s.is_finite() || !(s.r.norm() > 0.0) {
        return Err(Error::Domain(format!("invalid state vector {s:?}")));
    }
    let rn = s.r.norm();
    let energy = s.energy(mu);
    if !(energy < 0.0) {
        return Err(Error::Domain(format!("orbit is not bound (energy {energy:.6e} J/kg)")));
    }
    let hvec = s.angular_momentum();
    let hn = hvec.norm();
    if !(hn > 1e-12 * rn * s.v.norm()) {
        return Err(Error::Domain("rectilinear orbit has no orbital plane".into()));
    }
    let w = hvec / hn;
    if w.z <= -1.0 + 1e-14 {
        return Err(Error::Domain("retrograde equatorial orbit not representable".into()));
    }
    let q1 = w.x / (1.0 + w.z);
    let q2 = -w.y / (1.0 + w.z);
    let (f, g, _) = frame_vectors(q1, q2);
    let evec = s.v.cross(&hvec) / mu - s.r / rn;
    let p2 = evec.dot(&f);
    let p1 = evec.dot(&g);
    let a = 1.0 / (2.0 / rn - s.v.norm_squared() / mu);
    let x1 = s.r.dot(&f);
    let y1 = s.r.dot(&g);
    let (h, k) = (p1, p2);
    let beta = 1.0 / (1.0 + (1.0 - h * h - k * k).sqrt());
    let root = a * (1.0 - h * h - k * k).sqrt();
    let sf = h + ((1.0 - h * h * beta) * y1 - h * k * beta * x1) / root;
    let cf = k + ((1.0 - k * k * beta) * x1 - h * k * beta * y1) / root;
    let ecl = sf.atan2(cf);
    let ml = ecl + h * cf - k * sf;
    Ok(EquinoctialElements {
        a,
        p1,
        p2,
        q1,
        q2,
        ml_deg: ml.to_degrees().rem_euclid(360.0),
        epoch: s.epoch,
    })
}
