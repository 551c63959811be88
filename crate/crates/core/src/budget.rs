//! Propellant and mass bookkeeping for the ion propulsion system.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deflection::{ThrustLaw, MONTH_DAYS};
use crate::dynamics::{propagate, ForceModelConfig, IntegratorConfig, Trajectory};
use crate::elements::StateVector;
use crate::ephemeris::{AU_M, GM_SUN};
use crate::numerics::brent_root;
use crate::error::{Error, Result};
use crate::timeframes::{Epoch, Vec3};

pub const G0: f64 = 9.806_65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropulsionConfig {
    pub isp_s: f64,
    /// Hardware thrust ceiling at 1 AU (N).
    pub f_max_1au_n: f64,
    pub exponent: f64,
    pub m0_kg: f64,
    pub dry_floor_kg: f64,
}

impl Default for PropulsionConfig {
    fn default() -> Self {
        PropulsionConfig {
            isp_s: 3500.0,
            f_max_1au_n: 0.4,
            exponent: 1.7,
            m0_kg: 1200.0,
            dry_floor_kg: 0.0,
        }
    }
}

impl PropulsionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.isp_s > 0.0) || !(self.f_max_1au_n >= 0.0) || !(self.m0_kg > 0.0) || !(self.dry_floor_kg >= 0.0) {
            return Err(Error::Domain("propulsion config needs isp > 0, f_max >= 0, m0 > 0, dry floor >= 0".into()));
        }
        if !self.exponent.is_finite() {
            return Err(Error::Domain("power exponent must be finite".into()));
        }
        Ok(())
    }

    fn exhaust_speed(&self) -> f64 {
        G0 * self.isp_s
    }
}

/// Available thrust at `r_au` for a given throttle (N).
pub fn thrust_at(r_au: f64, throttle: f64, cfg: &PropulsionConfig) -> Result<f64> {
    if !(r_au > 0.05) {
        return Err(Error::Domain(format!("heliocentric distance {r_au} AU below 0.05")));
    }
    let f = (cfg.f_max_1au_n * throttle).min(cfg.f_max_1au_n);
    Ok((f * (1.0 / r_au).powf(cfg.exponent)).min(cfg.f_max_1au_n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrustArc {
    pub start: Epoch,
    pub end: Epoch,
    pub throttle: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThrustSchedule {
    pub arcs: Vec<ThrustArc>,
    /// Heliocentric distance samples (epoch, AU), strictly increasing in time.
    pub r_profile: Vec<(Epoch, f64)>,
}

impl ThrustSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.r_profile.windows(2).any(|w| w[1].0.mjd() <= w[0].0.mjd()) {
            return Err(Error::Domain("r-profile epochs must increase strictly".into()));
        }
        let mut prev_end = f64::NEG_INFINITY;
        for (k, a) in self.arcs.iter().enumerate() {
            if !(a.end.mjd() > a.start.mjd()) {
                return Err(Error::Domain(format!("arc {k} ends before it starts")));
            }
            if !(0.0..=1.0).contains(&a.throttle) {
                return Err(Error::Domain(format!("arc {k} throttle {} outside [0, 1]", a.throttle)));
            }
            if a.start.mjd() < prev_end {
                return Err(Error::Domain(format!("arc {k} overlaps its predecessor")));
            }
            prev_end = a.end.mjd();
            let covered = match (self.r_profile.first(), self.r_profile.last()) {
                (Some(f), Some(l)) => f.0.mjd() <= a.start.mjd() && l.0.mjd() >= a.end.mjd(),
                _ => false,
            };
            if !covered {
                return Err(Error::Domain(format!("r-profile does not cover arc {k}")));
            }
        }
        Ok(())
    }
}

fn interpolate(profile: &[(Epoch, f64)], t: f64) -> f64 {
    let k = profile.partition_point(|s| s.0.mjd() <= t);
    if k == 0 {
        return profile[0].1;
    }
    if k == profile.len() {
        return profile[k - 1].1;
    }
    let (a, b) = (profile[k - 1], profile[k]);
    let w = (t - a.0.mjd()) / (b.0.mjd() - a.0.mjd());
    a.1 + w * (b.1 - a.1)
}

/// Trapezoid nodes of the window [t0, t1]: its ends plus the interior samples.
fn nodes(profile: &[(Epoch, f64)], t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(t0, interpolate(profile, t0))];
    out.extend(
        profile
            .iter()
            .filter(|s| s.0.mjd() > t0 && s.0.mjd() < t1)
            .map(|s| (s.0.mjd(), s.1)),
    );
    out.push((t1, interpolate(profile, t1)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassSample {
    pub epoch: Epoch,
    pub mass_kg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassHistory {
    pub m0_kg: f64,
    pub samples: Vec<MassSample>,
    /// Accumulated propellant (kg).
    pub propellant_kg: f64,
}

impl MassHistory {
    pub fn final_mass(&self) -> f64 {
        self.m0_kg - self.propellant_kg
    }
}

/// Integrates dm/dt = -F(r(t))/(g0 Isp) over the thrust arcs.
pub fn mass_history(schedule: &ThrustSchedule, cfg: &PropulsionConfig) -> Result<MassHistory> {
    cfg.validate()?;
    schedule.validate()?;
    let ve = cfg.exhaust_speed();
    let mut used = 0.0;
    let mut samples = Vec::new();
    for arc in &schedule.arcs {
        let pts = nodes(&schedule.r_profile, arc.start.mjd(), arc.end.mjd());
        let force = |r: f64| thrust_at(r, arc.throttle, cfg);
        samples.push(MassSample {
            epoch: arc.start,
            mass_kg: cfg.m0_kg - used,
        });
        let mut f_prev = force(pts[0].1)?;
        for w in pts.windows(2) {
            let f_next = force(w[1].1)?;
            let dm = 0.5 * (f_prev + f_next) * (w[1].0 - w[0].0) * 86_400.0 / ve;
            if cfg.m0_kg - used - dm <= cfg.dry_floor_kg {
                let frac = (cfg.m0_kg - used - cfg.dry_floor_kg) / dm;
                return Err(Error::PropellantExhausted {
                    epoch: w[0].0 + frac * (w[1].0 - w[0].0),
                    mass_kg: cfg.dry_floor_kg,
                });
            }
            used += dm;
            f_prev = f_next;
            samples.push(MassSample {
                epoch: Epoch::from_mjd_tdb(w[1].0),
                mass_kg: cfg.m0_kg - used,
            });
        }
    }
    Ok(MassHistory {
        m0_kg: cfg.m0_kg,
        samples,
        propellant_kg: used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeflectionPropulsion {
    pub isp_s: f64,
    pub xenon_available_kg: f64,
}

impl Default for DeflectionPropulsion {
    fn default() -> Self {
        DeflectionPropulsion {
            isp_s: 3500.0,
            xenon_available_kg: 300.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflectionBudget {
    pub months: u32,
    /// Beam side only.
    pub single_kg: f64,
    /// Beam plus counter-thruster.
    pub dual_kg: f64,
    pub available_kg: f64,
    /// Dual-sided consumption exceeds the available Xenon.
    pub exceeded: bool,
}

/// Propellant for `months` of thrusting with `law` (per-side force), the
/// asteroid distance given by `r_profile` (epoch, AU).
pub fn deflection_propellant(
    months: u32,
    law: &ThrustLaw,
    r_profile: &[(Epoch, f64)],
    cfg: &DeflectionPropulsion,
) -> Result<DeflectionBudget> {
    if !(cfg.isp_s > 0.0) {
        return Err(Error::Domain("isp must be positive".into()));
    }
    let t0 = law.start.mjd();
    let t1 = t0 + months as f64 * MONTH_DAYS;
    let mut single = 0.0;
    if months > 0 {
        match (r_profile.first(), r_profile.last()) {
            (Some(f), Some(l)) if f.0.mjd() <= t0 && l.0.mjd() >= t1 => {}
            _ => return Err(Error::Domain("r-profile does not cover the deflection window".into())),
        }
        let f = |r_au: f64| law.force_at(r_au * AU_M);
        for w in nodes(r_profile, t0, t1).windows(2) {
            single += 0.5 * (f(w[0].1) + f(w[1].1)) * (w[1].0 - w[0].0) * 86_400.0;
        }
        single /= G0 * cfg.isp_s;
    }
    let dual = 2.0 * single;
    Ok(DeflectionBudget {
        months,
        single_kg: single,
        dual_kg: dual,
        available_kg: cfg.xenon_available_kg,
        exceeded: dual > cfg.xenon_available_kg,
    })
}

/// Heliocentric distance samples of a trajectory every `step_days`, ending
/// exactly at its final epoch.
pub fn r_profile_of(traj: &Trajectory, step_days: f64) -> Vec<(Epoch, f64)> {
    let mut out: Vec<(Epoch, f64)> = traj
        .sample(step_days)
        .iter()
        .map(|s| (s.epoch, s.r.norm() / AU_M))
        .collect();
    let last = traj.final_state();
    if out.last().map(|s| s.0.mjd()) != Some(last.epoch.mjd()) {
        out.push((last.epoch, last.r.norm() / AU_M));
    }
    out
}

fn stumpff(z: f64) -> (f64, f64) {
    if z > 1e-8 {
        let s = z.sqrt();
        ((1.0 - s.cos()) / z, (s - s.sin()) / (s * z))
    } else if z < -1e-8 {
        let s = (-z).sqrt();
        ((1.0 - s.cosh()) / z, (s.sinh() - s) / (s * -z))
    } else {
        (0.5 - z / 24.0, 1.0 / 6.0 - z / 120.0)
    }
}

/// Departure velocity of the prograde, zero-revolution conic joining `r1`
/// and `r2` in `tof_s` seconds (universal-variable formulation).
pub fn lambert(r1: &Vec3, r2: &Vec3, tof_s: f64, mu: f64) -> Result<Vec3> {
    if !(tof_s > 0.0) {
        return Err(Error::Domain("time of flight must be positive".into()));
    }
    let (n1, n2) = (r1.norm(), r2.norm());
    let cos_dth = (r1.dot(r2) / (n1 * n2)).clamp(-1.0, 1.0);
    let mut dth = cos_dth.acos();
    if r1.cross(r2).z < 0.0 {
        dth = 2.0 * std::f64::consts::PI - dth;
    }
    let a = dth.sin() * (n1 * n2 / (1.0 - cos_dth)).sqrt();
    if !a.is_finite() || a == 0.0 {
        return Err(Error::Domain("degenerate transfer geometry".into()));
    }
    let y = |z: f64| {
        let (c, s) = stumpff(z);
        n1 + n2 + a * (z * s - 1.0) / c.sqrt()
    };
    let f = |z: f64| {
        let (c, s) = stumpff(z);
        let yz = y(z);
        Ok((yz / c).powf(1.5) * s + a * yz.sqrt() - mu.sqrt() * tof_s)
    };
    // f is increasing in z wherever y > 0; bracket its root on a grid
    let span = 4.0 * std::f64::consts::PI.powi(2);
    let grid: Vec<(f64, f64)> = (0..=4000)
        .map(|k| -span + 2.0 * span * k as f64 / 4000.0 * (1.0 - 1e-12))
        .filter(|&z| y(z) > 0.0)
        .filter_map(|z| f(z).ok().filter(|v: &f64| v.is_finite()).map(|v| (z, v)))
        .collect();
    let (lo, hi) = grid
        .windows(2)
        .find(|w| w[0].1 <= 0.0 && w[1].1 >= 0.0)
        .map(|w| (w[0], w[1]))
        .ok_or_else(|| Error::numerical("lambert", "time of flight not bracketed by zero-revolution conics"))?;
    let z = brent_root(f, lo.0, hi.0, lo.1, hi.1, 1e-14)?;
    let yz = y(z);
    let fl = 1.0 - yz / n1;
    let g = a * (yz / mu).sqrt();
    Ok((r2 - fl * r1) / g)
}

/// Heliocentric distance profile of the ballistic Sun-only transfer from
/// `from` (position at departure epoch) to `to_r` after `tof_days`.
pub fn ballistic_transfer_profile(from: &StateVector, to_r: &Vec3, tof_days: f64, step_days: f64) -> Result<Vec<(Epoch, f64)>> {
    let v1 = lambert(&from.r, to_r, tof_days * 86_400.0, GM_SUN)?;
    let s0 = StateVector::new(from.r, v1, from.epoch);
    let traj = propagate(&s0, from.epoch.add_days(tof_days), &ForceModelConfig::two_body(), &IntegratorConfig::default())?;
    Ok(r_profile_of(&traj, step_days))
}

/// Reads `arc,start_mjd,end_mjd,throttle` and `mjd,r_au` CSV files.
pub fn load_schedule(arcs_csv: &Path, profile_csv: &Path) -> Result<ThrustSchedule> {
    #[derive(Deserialize)]
    struct ArcRow {
        #[allow(dead_code)]
        arc: u32,
        start_mjd: f64,
        end_mjd: f64,
        throttle: f64,
    }
    #[derive(Deserialize)]
    struct RRow {
        mjd: f64,
        r_au: f64,
    }
    fn rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        rdr.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
    }
    let arcs = rows::<ArcRow>(arcs_csv)?
        .into_iter()
        .map(|r| ThrustArc {
            start: Epoch::from_mjd_tdb(r.start_mjd),
            end: Epoch::from_mjd_tdb(r.end_mjd),
            throttle: r.throttle,
        })
        .collect();
    let r_profile = rows::<RRow>(profile_csv)?
        .into_iter()
        .map(|r| (Epoch::from_mjd_tdb(r.mjd), r.r_au))
        .collect();
    let s = ThrustSchedule { arcs, r_profile };
    s.validate()?;
    Ok(s)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::format(path, line, format!("{kind:?}")),
    }
}

/// CSV `mjd_tdb,mass_kg`.
pub fn mass_history_csv(h: &MassHistory) -> String {
    let mut out = String::from("mjd_tdb,mass_kg\n");
    for s in &h.samples {
        out.push_str(&format!("{:.6},{:.6}\n", s.epoch.mjd(), s.mass_kg));
    }
    out
}
