//! Heliocentric force model and adaptive propagation with dense output and
//! event location.

mod dop853;

use std::ops::ControlFlow;

use crate::deflection::AppliedThrust;
use crate::elements::StateVector;
use crate::ephemeris::{Body, Ephemeris, AU_M, GM_SUN, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::numerics::brent_root;
use crate::timeframes::{Epoch, Vec3, SECONDS_PER_DAY};

pub use dop853::DenseStep;
use dop853::{Controls, State};

/// Minimum heliocentric distance accepted by the force model (AU).
pub const MIN_SOLAR_DISTANCE_AU: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ForceModelConfig {
    pub perturbers: Vec<Body>,
    pub relativity: bool,
    pub thrust: Option<AppliedThrust>,
    pub ephemeris: Ephemeris,
    /// Separation from any perturber below which evaluation fails (m).
    pub encounter_guard_m: f64,
}

impl Default for ForceModelConfig {
    fn default() -> Self {
        ForceModelConfig::full(Ephemeris::builtin())
    }
}

impl ForceModelConfig {
    /// Planets, Moon, Ceres, Vesta, Pallas and relativity.
    pub fn full(ephemeris: Ephemeris) -> Self {
        ForceModelConfig {
            perturbers: Body::PERTURBERS.to_vec(),
            relativity: true,
            thrust: None,
            ephemeris,
            encounter_guard_m: 1.0e6,
        }
    }

    /// Sun only, Newtonian.
    pub fn two_body() -> Self {
        ForceModelConfig {
            perturbers: Vec::new(),
            relativity: false,
            ..ForceModelConfig::full(Ephemeris::builtin())
        }
    }

    pub fn with_thrust(mut self, thrust: Option<AppliedThrust>) -> Self {
        self.thrust = thrust;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.perturbers.contains(&Body::Sun) {
            return Err(Error::Domain("the Sun is the central body and cannot be a perturber".into()));
        }
        for b in &self.perturbers {
            if !self.ephemeris.covers(*b) {
                return Err(Error::Domain(format!("ephemeris has no data for perturber {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Absolute position tolerance (m).
    pub abs_tol_pos: f64,
    /// Absolute velocity tolerance (m/s).
    pub abs_tol_vel: f64,
    /// Maximum step (s).
    pub max_step: f64,
    /// Minimum step (s).
    pub min_step: f64,
    /// Geocentric distance inside which the encounter step cap applies (m).
    pub encounter_radius_m: f64,
    /// Step cap during an Earth encounter (s).
    pub encounter_max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-12,
            abs_tol_pos: 1e-3,
            abs_tol_vel: 1e-9,
            max_step: 10.0 * SECONDS_PER_DAY,
            min_step: 1e-3,
            encounter_radius_m: 0.01 * AU_M,
            encounter_max_step: 300.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(Error::Domain(format!("rel_tol {} outside (0, 1e-6]", self.rel_tol)));
        }
        if !(self.abs_tol_pos > 0.0 && self.abs_tol_vel > 0.0) {
            return Err(Error::Domain("absolute tolerances must be positive".into()));
        }
        if !(self.min_step > 0.0 && self.min_step < self.max_step) {
            return Err(Error::Domain("require 0 < min_step < max_step".into()));
        }
        Ok(())
    }

    fn controls(&self) -> Controls {
        let (p, v) = (self.abs_tol_pos, self.abs_tol_vel);
        Controls {
            rtol: self.rel_tol,
            atol: [p, p, p, v, v, v],
            h_max: self.max_step,
            h_min: self.min_step,
            h_init: None,
        }
    }
}

/// Total acceleration on the asteroid (m/s^2).
pub fn acceleration(s: &StateVector, cfg: &ForceModelConfig) -> Result<Vec3> {
    let active = cfg.thrust.as_ref().map(|t| t.law.is_active(s.epoch)).unwrap_or(false);
    acceleration_phase(s, cfg, active)
}

fn acceleration_phase(s: &StateVector, cfg: &ForceModelConfig, thrust_on: bool) -> Result<Vec3> {
    let r = s.r;
    let rn = r.norm();
    if rn < MIN_SOLAR_DISTANCE_AU * AU_M {
        return Err(Error::Domain(format!(
            "heliocentric distance {:.4} AU below {MIN_SOLAR_DISTANCE_AU} AU",
            rn / AU_M
        )));
    }
    let r3 = rn * rn * rn;
    let mut a = -GM_SUN / r3 * r;
    for &b in &cfg.perturbers {
        let rj = cfg.ephemeris.position(b, s.epoch)?;
        let d = rj - r;
        let dn = d.norm();
        if dn < cfg.encounter_guard_m {
            return Err(Error::CloseEncounter {
                body: b.name(),
                epoch: s.epoch.mjd(),
                distance_km: dn / 1e3,
            });
        }
        a += third_body_acceleration(&r, &rj, b.gm());
    }
    if cfg.relativity {
        let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
        let v = s.v;
        a += GM_SUN / (c2 * r3) * ((4.0 * GM_SUN / rn - v.norm_squared()) * r + 4.0 * r.dot(&v) * v);
    }
    if thrust_on {
        if let Some(t) = &cfg.thrust {
            a += t.acceleration_unchecked(s);
        }
    }
    Ok(a)
}

/// Direct plus indirect acceleration from a body of parameter `gm` at `rj`.
pub fn third_body_acceleration(r: &Vec3, rj: &Vec3, gm: f64) -> Vec3 {
    let d = rj - r;
    let dn = d.norm();
    let rjn = rj.norm();
    gm * (d / (dn * dn * dn) - rj / (rjn * rjn * rjn))
}

/// Dense propagation record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    origin: Epoch,
    initial: StateVector,
    steps: Vec<DenseStep>,
}

impl Trajectory {
    fn new(initial: StateVector) -> Self {
        Trajectory {
            origin: initial.epoch,
            initial,
            steps: Vec::new(),
        }
    }

    pub fn initial(&self) -> StateVector {
        self.initial
    }

    pub fn final_state(&self) -> StateVector {
        match self.steps.last() {
            Some(s) => StateVector::from_array(&s.end(), self.origin.add_seconds(s.x1())),
            None => self.initial,
        }
    }

    pub fn start_epoch(&self) -> Epoch {
        self.origin
    }

    pub fn end_epoch(&self) -> Epoch {
        self.final_state().epoch
    }

    pub fn steps(&self) -> &[DenseStep] {
        &self.steps
    }

    /// Epochs of all accepted step boundaries, including the start.
    pub fn node_epochs(&self) -> Vec<Epoch> {
        std::iter::once(self.origin)
            .chain(self.steps.iter().map(|s| self.origin.add_seconds(s.x1())))
            .collect()
    }

    fn forward(&self) -> bool {
        self.steps.first().map(|s| s.h > 0.0).unwrap_or(true)
    }

    /// Interpolated state at `epoch` within the propagated span.
    pub fn state_at(&self, epoch: Epoch) -> Result<StateVector> {
        let x = epoch.seconds_since(self.origin);
        if self.steps.is_empty() {
            if x == 0.0 {
                return Ok(self.initial);
            }
        } else {
            let fwd = self.forward();
            let idx = self
                .steps
                .partition_point(|s| if fwd { s.x1() < x } else { s.x1() > x });
            if let Some(step) = self.steps.get(idx) {
                if step.contains(x) {
                    return Ok(StateVector::from_array(&step.eval(x), epoch));
                }
            }
        }
        let (a, b) = (self.origin.mjd(), self.end_epoch().mjd());
        Err(Error::Range {
            epoch: epoch.mjd(),
            first: a.min(b),
            last: a.max(b),
        })
    }

    /// States every `interval_days` from the start, plus the final state.
    pub fn sample(&self, interval_days: f64) -> Vec<StateVector> {
        let total = self.end_epoch().mjd() - self.origin.mjd();
        let dir = total.signum();
        let n = (total.abs() / interval_days).floor() as usize;
        let mut out: Vec<StateVector> = (0..=n)
            .filter_map(|k| self.state_at(self.origin.add_days(dir * interval_days * k as f64)).ok())
            .collect();
        let last = self.final_state();
        if out.last().map(|s| s.epoch.mjd() != last.epoch.mjd()).unwrap_or(true) {
            out.push(last);
        }
        out
    }

    fn push(&mut self, step: DenseStep) {
        self.steps.push(step);
    }
}

/// Located event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub epoch: Epoch,
    pub state: StateVector,
}

/// Scalar event function; an event is a crossing from positive to non-positive.
pub trait EventFunction {
    fn value(&self, epoch: Epoch, s: &StateVector) -> Result<f64>;

    /// Number of interior samples per accepted step used to detect crossings.
    fn samples_per_step(&self) -> usize {
        1
    }
}

impl<F> EventFunction for F
where
    F: Fn(Epoch, &StateVector) -> Result<f64>,
{
    fn value(&self, epoch: Epoch, s: &StateVector) -> Result<f64> {
        self(epoch, s)
    }
}

const EVENT_TIME_TOL_S: f64 = 1e-4;

fn locate_in_step<G: EventFunction + ?Sized>(
    origin: Epoch,
    step: &DenseStep,
    g: &G,
    prev: &mut Option<(f64, f64)>,
) -> Result<Option<EventHit>> {
    let n = g.samples_per_step().max(1);
    let eval = |x: f64| -> Result<f64> {
        let e = origin.add_seconds(x);
        g.value(e, &StateVector::from_array(&step.eval(x), e))
    };
    if prev.is_none() {
        *prev = Some((step.x0, eval(step.x0)?));
    }
    for j in 1..=n {
        let x = step.x0 + step.h * j as f64 / n as f64;
        let gx = eval(x)?;
        let (xp, gp) = prev.unwrap();
        *prev = Some((x, gx));
        if gp > 0.0 && gx <= 0.0 {
            let root = brent_root(eval, xp, x, gp, gx, EVENT_TIME_TOL_S)?;
            // take the bracket end on the non-positive side
            let root = if eval(root)? > 0.0 {
                let d = (x - xp).signum() * EVENT_TIME_TOL_S * 0.5;
                root + d
            } else {
                root
            };
            let epoch = origin.add_seconds(root);
            return Ok(Some(EventHit {
                epoch,
                state: StateVector::from_array(&step.eval(root), epoch),
            }));
        }
    }
    Ok(None)
}

/// Finds the first event crossing along a finished trajectory.
pub fn find_event<G: EventFunction + ?Sized>(traj: &Trajectory, g: &G) -> Result<EventHit> {
    let mut prev = None;
    for step in &traj.steps {
        if let Some(hit) = locate_in_step(traj.origin, step, g, &mut prev)? {
            return Ok(hit);
        }
    }
    Err(Error::EventNotFound)
}

/// Propagates `s0` to `tf`.
pub fn propagate(s0: &StateVector, tf: Epoch, fcfg: &ForceModelConfig, icfg: &IntegratorConfig) -> Result<Trajectory> {
    run(s0, tf, fcfg, icfg, None::<&fn(Epoch, &StateVector) -> Result<f64>>).map(|(t, _)| t)
}

/// Propagates `s0` toward `tf`, stopping at the first crossing of `g`.
/// The trajectory ends at the event when one is found.
pub fn propagate_until<G: EventFunction + ?Sized>(
    s0: &StateVector,
    tf: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
    g: &G,
) -> Result<(Trajectory, Option<EventHit>)> {
    run(s0, tf, fcfg, icfg, Some(g))
}

fn run<G: EventFunction + ?Sized>(
    s0: &StateVector,
    tf: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
    g: Option<&G>,
) -> Result<(Trajectory, Option<EventHit>)> {
    fcfg.validate()?;
    icfg.validate()?;
    if !s0.is_finite() {
        return Err(Error::Domain("non-finite initial state".into()));
    }
    let origin = s0.epoch;
    let xend = tf.seconds_since(origin);
    let mut traj = Trajectory::new(*s0);
    if xend == 0.0 {
        return Ok((traj, None));
    }

    // segment boundaries where the thrust switches
    let mut cuts = vec![0.0, xend];
    if let Some(t) = fcfg.thrust.as_ref().filter(|t| t.is_effective()) {
        let (on, off) = t.law.window();
        for e in [on, off] {
            let x = e.seconds_since(origin);
            if x * xend.signum() > 0.0 && x.abs() < xend.abs() {
                cuts.push(x);
            }
        }
    }
    if xend > 0.0 {
        cuts.sort_by(f64::total_cmp);
    } else {
        cuts.sort_by(|a, b| b.total_cmp(a));
    }
    cuts.dedup();

    let ctl = icfg.controls();
    let mut y = s0.to_array();
    let mut prev_event = None;
    let mut hit = None;
    let earth = fcfg.ephemeris.clone();

    for seg in cuts.windows(2) {
        let (xa, xb) = (seg[0], seg[1]);
        let mid = origin.add_seconds(0.5 * (xa + xb));
        let thrust_on = fcfg
            .thrust
            .as_ref()
            .map(|t| t.is_effective() && t.law.is_active(mid))
            .unwrap_or(false);
        let f = |x: f64, yy: &State| -> Result<State> {
            let s = StateVector::from_array(yy, origin.add_seconds(x));
            let a = acceleration_phase(&s, fcfg, thrust_on)?;
            Ok([yy[3], yy[4], yy[5], a.x, a.y, a.z])
        };
        let cap = |x: f64, yy: &State| -> f64 {
            let e = origin.add_seconds(x);
            match earth.state(Body::Earth, e) {
                Ok(es) => {
                    let d = (Vec3::new(yy[0], yy[1], yy[2]) - es.r).norm();
                    if d <= icfg.encounter_radius_m {
                        icfg.encounter_max_step
                    } else {
                        let vrel = (Vec3::new(yy[3], yy[4], yy[5]) - es.v).norm().max(1.0);
                        ((d - icfg.encounter_radius_m) / vrel).max(icfg.encounter_max_step)
                    }
                }
                Err(_) => f64::INFINITY,
            }
        };
        let mut stop = false;
        dop853::integrate(f, origin, xa, y, xb, &ctl, cap, |step| {
            traj.push(step.clone());
            if let Some(g) = g {
                if let Some(h) = locate_in_step(origin, step, g, &mut prev_event)? {
                    hit = Some(h);
                    stop = true;
                    return Ok(ControlFlow::Break(()));
                }
            }
            Ok(ControlFlow::Continue(()))
        })?;
        if stop {
            break;
        }
        y = traj.final_state().to_array();
    }
    if let Some(h) = &hit {
        // truncate the final step at the event
        if let Some(last) = traj.steps.last_mut() {
            last.truncate(h.epoch.seconds_since(origin));
        }
    }
    Ok((traj, hit))
}
