//! One line per acceptance criterion. Tiers 1 and 2 are gated, tier 3 is
//! reported only and runs when real rasters are named through
//! `SLOWPUSH_POPULATION` and `SLOWPUSH_NIGHTLIGHT`.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{Matrix3, Matrix6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slowpush_core::budget::*;
use slowpush_core::deflection::*;
use slowpush_core::dispersion::*;
use slowpush_core::dynamics::{propagate, propagate_until, ForceModelConfig, IntegratorConfig};
use slowpush_core::elements::{cartesian_to_equinoctial, equinoctial_to_cartesian, EquinoctialElements, StateVector};
use slowpush_core::ephemeris::{Body, Ephemeris, AU_M, GM_SUN, SPEED_OF_LIGHT};
use slowpush_core::exposure::*;
use slowpush_core::impact::*;
use slowpush_core::timeframes::{initial_bearing_deg, Epoch, GeodeticPoint, Vec3};

fn table1() -> EquinoctialElements {
    EquinoctialElements {
        a: 1.775_998_173_759_480 * AU_M,
        p1: -0.448_551_534_990_503,
        p2: 0.198_239_860_639_469,
        q1: -0.015_660_086_557_340,
        q2: 0.043_990_645_962_994,
        ml_deg: 264.006_003_548_211_3,
        epoch: Epoch::from_mjd_tdb(57_125.0),
    }
}

const NOMINAL_OFFSET: f64 = 0.000_833_2;
const RENDEZVOUS_MJD: f64 = 58_788.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn tol(rel: f64) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: rel,
        ..IntegratorConfig::default()
    }
}

fn horizon() -> Epoch {
    Epoch::from_mjd_tdb(DEFAULT_HORIZON_MJD)
}

fn kepler_state(el: &EquinoctialElements, dt_s: f64) -> StateVector {
    let n = (GM_SUN / el.a.powi(3)).sqrt();
    let moved = EquinoctialElements {
        ml_deg: el.ml_deg + (n * dt_s).to_degrees(),
        epoch: el.epoch.add_seconds(dt_s),
        ..*el
    };
    equinoctial_to_cartesian(&moved, GM_SUN).unwrap()
}

fn two_body_oracle() -> Outcome {
    let el = table1();
    let s0 = equinoctial_to_cartesian(&el, GM_SUN).unwrap();
    let f = ForceModelConfig::two_body();
    let traj = propagate(&s0, s0.epoch.add_seconds(el.period_s(GM_SUN)), &f, &tol(1e-12)).unwrap();
    let sf = traj.final_state();
    let oracle = kepler_state(&el, sf.epoch.seconds_since(s0.epoch));
    let dr = (sf.r - oracle.r).norm();
    let dv = (sf.v - oracle.v).norm();

    let long = propagate(&s0, s0.epoch.add_days(7.0 * 365.25), &f, &tol(1e-12)).unwrap();
    let (e0, h0) = (s0.energy(GM_SUN), s0.angular_momentum());
    let (mut de, mut dh) = (0.0f64, 0.0f64);
    for s in long.sample(30.0) {
        de = de.max(((s.energy(GM_SUN) - e0) / e0).abs());
        dh = dh.max((s.angular_momentum() - h0).norm() / h0.norm());
    }
    outcome(
        dr < 1.0 && dv < 1e-7 && de < 1e-10 && dh < 1e-10,
        format!("one period: {dr:.4} m, {dv:.3e} m/s (limits 1 m, 1e-7 m/s); 7 yr drift: energy {de:.2e}, h {dh:.2e} (limit 1e-10)"),
    )
}

fn element_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_150_413);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let el = EquinoctialElements::from_keplerian(
            rng.gen_range(0.3..40.0) * AU_M,
            rng.gen_range(0.0..0.95),
            rng.gen_range(0.0..170.0),
            rng.gen_range(0.0..360.0),
            rng.gen_range(0.0..360.0),
            rng.gen_range(0.0..360.0),
            Epoch::from_mjd_tdb(58_000.0),
        );
        let back = cartesian_to_equinoctial(&equinoctial_to_cartesian(&el, GM_SUN).unwrap(), GM_SUN).unwrap();
        let q_scale = el.q1.hypot(el.q2).max(1.0);
        let dml = (back.ml_deg - el.ml_deg + 180.0).rem_euclid(360.0) - 180.0;
        for err in [
            ((back.a - el.a) / el.a).abs(),
            (back.p1 - el.p1).abs(),
            (back.p2 - el.p2).abs(),
            (back.q1 - el.q1).abs() / q_scale,
            (back.q2 - el.q2).abs() / q_scale,
            dml.abs() / 360.0,
        ] {
            worst = worst.max(err);
        }
    }
    let t = table1();
    let (e, i, q) = (t.eccentricity(), t.inclination_deg(), t.perihelion() / AU_M);
    outcome(
        worst < 1e-9 && (e - 0.490_406).abs() <= 1e-6 && (i - 5.347).abs() <= 0.01 && (q - 0.905_04).abs() <= 1e-4,
        format!("worst relative round-trip error {worst:.2e}; e = {e:.6}, i = {i:.4} deg, q = {q:.5} AU"),
    )
}

fn perihelion_directions(cfg: &ForceModelConfig, el: &EquinoctialElements, orbits: usize) -> Vec<Vec3> {
    let s0 = equinoctial_to_cartesian(el, GM_SUN).unwrap();
    let period = el.period_s(GM_SUN);
    let traj = propagate(&s0, s0.epoch.add_seconds(period * (orbits as f64 + 0.9)), cfg, &tol(1e-13)).unwrap();
    let mut out = Vec::new();
    let mut start = s0;
    while out.len() <= orbits {
        let g = |_: Epoch, s: &StateVector| Ok(-s.r.dot(&s.v));
        let (_, hit) = propagate_until(&start, traj.end_epoch(), cfg, &tol(1e-13), &g).unwrap();
        let Some(hit) = hit else { break };
        out.push(hit.state.r.normalize());
        start = traj.state_at(hit.epoch.add_days(10.0)).unwrap();
    }
    out
}

fn perihelion_advance() -> Outcome {
    let el = table1();
    let mut cfg = ForceModelConfig::two_body();
    cfg.relativity = true;
    let dirs = perihelion_directions(&cfg, &el, 10);
    if dirs.len() != 11 {
        return outcome(false, format!("found {} perihelia, expected 11", dirs.len()));
    }
    let h = equinoctial_to_cartesian(&el, GM_SUN).unwrap().angular_momentum().normalize();
    let adv = dirs[0].cross(&dirs[10]).dot(&h).atan2(dirs[0].dot(&dirs[10]));
    let e2 = el.p1 * el.p1 + el.p2 * el.p2;
    let expected = 10.0 * 6.0 * PI * GM_SUN / (SPEED_OF_LIGHT * SPEED_OF_LIGHT * el.a * (1.0 - e2));
    let rel = adv / expected - 1.0;
    outcome(
        rel.abs() < 0.05,
        format!("10-orbit advance {:.4} arcsec vs {:.4} arcsec ({:+.2}%)", adv.to_degrees() * 3600.0, expected.to_degrees() * 3600.0, 100.0 * rel),
    )
}

fn skew(w: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

// Clohessy-Wiltshire STM mapped to inertial axes for a circular orbit
// starting on the +x axis.
fn analytic_circular_stm(r: f64, t: f64) -> Matrix6<f64> {
    let n = (GM_SUN / r.powi(3)).sqrt();
    let (s, c) = (n * t).sin_cos();
    #[rustfmt::skip]
    let cw = Matrix6::from_row_slice(&[
        4.0 - 3.0 * c, 0.0, 0.0, s / n, 2.0 * (1.0 - c) / n, 0.0,
        6.0 * (s - n * t), 1.0, 0.0, -2.0 * (1.0 - c) / n, (4.0 * s - 3.0 * n * t) / n, 0.0,
        0.0, 0.0, c, 0.0, 0.0, s / n,
        3.0 * n * s, 0.0, 0.0, c, 2.0 * s, 0.0,
        -6.0 * n * (1.0 - c), 0.0, 0.0, -2.0 * s, 4.0 * c - 3.0, 0.0,
        0.0, 0.0, -n * s, 0.0, 0.0, c,
    ]);
    let omega = Vec3::new(0.0, 0.0, n);
    let m = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let rot = Matrix3::new(ct, -st, 0.0, st, ct, 0.0, 0.0, 0.0, 1.0);
        let mut out = Matrix6::zeros();
        out.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        out.fixed_view_mut::<3, 3>(3, 3).copy_from(&rot);
        out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(rot * skew(&omega)));
        out
    };
    m(n * t) * cw * m(0.0).try_inverse().unwrap()
}

fn stm_checks() -> Outcome {
    let v = (GM_SUN / AU_M).sqrt();
    let s0 = StateVector::new(Vec3::new(AU_M, 0.0, 0.0), Vec3::new(0.0, v, 0.0), Epoch::from_mjd_tdb(58_000.0));
    let (f, i) = (ForceModelConfig::two_body(), IntegratorConfig::default());
    let n = (GM_SUN / AU_M.powi(3)).sqrt();
    let tf = s0.epoch.add_seconds(0.5 * PI / n);
    let phi = state_transition(&s0, tf, &f, &i).unwrap();
    let exact = analytic_circular_stm(AU_M, tf.seconds_since(s0.epoch));
    let mut worst = 0.0f64;
    for (bi, bj) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        let scale = exact.fixed_view::<3, 3>(bi, bj).abs().max();
        for r in 0..3 {
            for c in 0..3 {
                let (a, b) = (phi[(bi + r, bj + c)], exact[(bi + r, bj + c)]);
                let err = if b.abs() > 1e-9 * scale { ((a - b) / b).abs() } else { a.abs() / scale * 1e-2 };
                worst = worst.max(err);
            }
        }
    }
    let at_start = state_transition(&s0, s0.epoch, &f, &i).unwrap();
    let id_err = (at_start - Matrix6::identity()).abs().max();
    let frame = FrenetFrame::new(&s0).unwrap();
    let p0 = frenet_to_inertial(&table3_covariance(), &frame).unwrap();
    let p1 = propagate_covariance(&p0, &phi, tf).unwrap();
    let p4 = propagate_covariance(&p0.scaled(4.0).unwrap(), &phi, tf).unwrap();
    let same = propagate_covariance(&p0, &Matrix6::identity(), tf).unwrap();
    let bilinear = p4.matrix == p1.matrix * 4.0 && same.matrix == p0.matrix;
    outcome(
        worst < 1e-4 && id_err < 1e-12 && bilinear,
        format!("quarter-orbit worst relative entry error {worst:.2e}; |Phi(t0,t0) - I| = {id_err:.1e}; bilinearity exact: {bilinear}"),
    )
}

fn global(cell: f64, f: impl Fn(f64, f64) -> f64) -> GeoRaster {
    let (nx, ny) = ((360.0 / cell).round() as usize, (180.0 / cell).round() as usize);
    GeoRaster::from_fn(nx, ny, -180.0, 90.0, cell, RasterKind::Population, f).unwrap()
}

fn pseudo(lat: f64, lon: f64, seed: f64) -> f64 {
    ((lat * 12.9898 + lon * 78.233 + seed).sin() * 43_758.545_3).fract().abs() * 1000.0
}

fn exposure_checks() -> Outcome {
    let p = GeodeticPoint::surface;
    let uniform = global(0.1, |_, _| 100.0);
    let d = disc_integral(&uniform, &p(20.0, 80.0), 100.0).unwrap();
    let disc_rel = d.integral / (100.0 * PI * 1e4) - 1.0;

    let pop = global(0.5, |la, lo| pseudo(la, lo, 4.0));
    let light = global(0.5, |la, lo| pseudo(la, lo, 5.0));
    let (und, def) = (p(28.6, 77.2), p(29.3, 76.8));
    let base = damage_indexes(&pop, &light, &def, &und, 100.0).unwrap();
    let mut pow2_exact = true;
    for e in [-12, -1, 1, 3, 17] {
        let k = 2f64.powi(e);
        let s = damage_indexes(&pop.scaled(k), &light.scaled(k), &def, &und, 100.0).unwrap();
        pow2_exact &= s.hci == base.hci && s.idi == base.idi;
    }
    let mut general = 0.0f64;
    for k in [1e-3, 0.3, 3.0, 7.3, 1234.5] {
        let s = damage_indexes(&pop.scaled(k), &light.scaled(k), &def, &und, 100.0).unwrap();
        general = general.max((s.hci / base.hci - 1.0).abs());
        general = general.max((s.idi.unwrap() / base.idi.unwrap() - 1.0).abs());
    }

    let fine = global(0.1, |la, lo| pseudo(la, lo, 1.0));
    let a = disc_integral(&fine, &p(0.0, 179.95), 150.0).unwrap();
    let b = disc_integral(&fine.rolled(-1800), &p(0.0, -0.05), 150.0).unwrap();
    let shift = (a.integral - b.integral).abs() / a.integral;

    outcome(
        disc_rel.abs() < 0.02 && pow2_exact && general <= 1e-13 && shift <= 1e-9,
        format!(
            "uniform disc {:+.3}%; power-of-two scaling bit-exact: {pow2_exact}; other factors {general:.1e}; antimeridian shift {shift:.1e}",
            100.0 * disc_rel
        ),
    )
}

fn constant_thrust() -> Outcome {
    let days = 100.0;
    let arc = ThrustArc {
        start: Epoch::from_mjd_tdb(58_000.0),
        end: Epoch::from_mjd_tdb(58_000.0 + days),
        throttle: 1.0,
    };
    let r_profile = (0..=100).map(|d| (Epoch::from_mjd_tdb(58_000.0 + d as f64), 1.0)).collect();
    let cfg = PropulsionConfig {
        f_max_1au_n: 0.2,
        ..PropulsionConfig::default()
    };
    let h = mass_history(&ThrustSchedule { arcs: vec![arc], r_profile }, &cfg).unwrap();
    outcome((h.propellant_kg - 50.35).abs() <= 0.01, format!("{:.4} kg (target 50.35 +/- 0.01)", h.propellant_kg))
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    common::delhi_workspace(dir);
    for (threads, out) in [(1, "t1"), (8, "t8")] {
        for (what, code) in common::delhi_pipeline(dir, out, threads) {
            if code != 0 {
                return outcome(false, format!("{threads} threads, exit {code} from {}", what.trim()));
            }
        }
    }
    let (a, b) = (common::artifacts(&dir.join("t1")), common::artifacts(&dir.join("t8")));
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != Some(&a[*k])).collect();
    outcome(
        a.len() == b.len() && differing.is_empty(),
        format!("{} artifacts compared; differing: {differing:?}", a.len()),
    )
}

fn reanchor(target: GeodeticPoint) -> Reanchored {
    reanchor_epoch(
        &table1(),
        &target,
        (-0.01, 0.01),
        &ForceModelConfig::default(),
        &IntegratorConfig::default(),
        &ReanchorOptions::default(),
    )
    .unwrap()
}

fn nominal_impact() -> Outcome {
    let r = reanchor(GeodeticPoint::surface(13.8, 113.9));
    let rec = r.record;
    let (y, m, d, _) = rec.epoch.to_utc().calendar();
    let day_off = (rec.epoch_utc_mjd().floor() - Epoch::from_calendar(2022, 9, 3).mjd().floor()).abs();
    outcome(
        day_off <= 1.0 && (rec.speed_kms - 16.0).abs() <= 1.5 && (rec.incidence_deg - 56.0).abs() <= 8.0,
        format!(
            "offset {:+.7} d: {y}-{m:02}-{d:02} at {:.2} N {:.2} E ({:.1} km from target), {:.2} km/s, {:.1} deg",
            r.offset_days, rec.point.lat_deg, rec.point.lon_deg, r.distance_km, rec.speed_kms, rec.incidence_deg
        ),
    )
}

fn risk_corridor_checks() -> Outcome {
    let (f, i) = (ForceModelConfig::default(), IntegratorConfig::default());
    let path = risk_corridor(&table1(), (-0.0015, 0.0075), 41, 24, horizon(), &f, &i).unwrap();
    let hits: Vec<GeodeticPoint> = path.impacts().map(|(_, r)| r.point).collect();
    let (Some(west), Some(east)) = (hits.first(), hits.last()) else {
        return outcome(false, "no impacting offsets".into());
    };
    let west_ok = (30.0..=42.0).contains(&west.lat_deg) && (30.0..=45.0).contains(&west.lon_deg);
    let east_ok = east.lon_deg < -110.0 && (0.0..=15.0).contains(&east.lat_deg);
    let mut ok = west_ok && east_ok;
    let mut detail = format!(
        "west end {:.2} N {:.2} E, east end {:.2} N {:.2} E",
        west.lat_deg, west.lon_deg, east.lat_deg, east.lon_deg
    );
    for (name, lat, lon) in [("New Delhi", 28.61, 77.21), ("Dhaka", 23.81, 90.41), ("Tehran", 35.7, 51.4)] {
        let r = reanchor(GeodeticPoint::surface(lat, lon));
        ok &= r.distance_km < 300.0;
        detail += &format!("; {name} {:.1} km at {:+.7} d", r.distance_km, r.offset_days);
    }
    outcome(ok, detail)
}

fn dispersion_checks() -> Outcome {
    let (f, i) = (ForceModelConfig::default(), IntegratorConfig::default());
    let start = equinoctial_to_cartesian(&table1().redated(NOMINAL_OFFSET), GM_SUN).unwrap();
    let s0 = propagate(&start, Epoch::from_mjd_tdb(RENDEZVOUS_MJD), &f, &i).unwrap().final_state();
    let nominal = *impact_from_state(&s0, horizon(), &f, &i).unwrap().impact().unwrap();
    let hist = covariance_history(&table3_covariance(), &s0, nominal.epoch, &f, &i).unwrap();
    let sigma = hist.last().unwrap().sigma_max_km;
    let j = impact_jacobian(&s0, &nominal, horizon(), &f, &i).unwrap();
    let e = surface_ellipse(&j, &table3_covariance(), 1.0).unwrap();
    let path = risk_path(&table1(), &[NOMINAL_OFFSET - 2e-5, NOMINAL_OFFSET + 2e-5], horizon(), &f, &i).unwrap();
    let pts: Vec<GeodeticPoint> = path.impacts().map(|(_, r)| r.point).collect();
    let corridor = initial_bearing_deg(&pts[0], &pts[1]).rem_euclid(180.0);
    let diff = (e.azimuth_deg - corridor).rem_euclid(180.0);
    let diff = diff.min(180.0 - diff);
    outcome(
        (40.0..=160.0).contains(&sigma) && e.aspect_ratio() >= 8.0 && diff <= 25.0,
        format!(
            "sigma at impact {sigma:.1} km; ellipse {:.1} x {:.2} km, aspect {:.0}, axis {:.1} deg vs corridor {corridor:.1} deg",
            e.semi_major_km,
            e.semi_minor_km,
            e.aspect_ratio(),
            e.azimuth_deg
        ),
    )
}

fn sweep(offset: f64, dir: PushDirection, months: &[u32]) -> DeflectionTrack {
    let s0 = equinoctial_to_cartesian(&table1().redated(offset), GM_SUN).unwrap();
    let law = ThrustLaw::new(DEFAULT_F0_N, DEFAULT_EXPONENT, dir, Epoch::from_mjd_tdb(DEFAULT_START_MJD), 0.0).unwrap();
    deflection_sweep(
        &s0,
        &AsteroidBody::default(),
        &law,
        months,
        horizon(),
        &ForceModelConfig::default(),
        &IntegratorConfig::default(),
    )
    .unwrap()
}

fn delhi_deflection() -> Outcome {
    let track = sweep(common::DELHI_OFFSET, PushDirection::Decelerate, &(0..=33).collect::<Vec<_>>());
    let rows = displacement_vs_duration(&track);
    let km: Vec<f64> = rows.iter().map(|r| r.displacement_km.unwrap_or(f64::NAN)).collect();
    let increasing = km.windows(2).all(|w| w[1] > w[0]);
    let r22 = &rows[22];
    let westward = r22.heading == Heading::West;
    let inc: Vec<f64> = km.windows(2).map(|w| w[1] - w[0]).collect();
    let first = inc[..6].iter().cloned().fold(f64::INFINITY, f64::min);
    let last = inc[inc.len() - 6..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let in_band = (450.0..=1800.0).contains(&km[22]);
    outcome(
        increasing && in_band && westward && last < first,
        format!(
            "strictly increasing: {increasing}; 22 months {:.1} km at bearing {:.0} deg (band 450-1800 km); 33 months {:.1} km; largest late increment {last:.2} km vs smallest early {first:.2} km",
            km[22],
            r22.bearing_deg.unwrap_or(f64::NAN),
            km[33]
        ),
    )
}

fn interplanetary_budget() -> Outcome {
    let (launch, coast_start, coast_end, arrival) = (57_901.0, 57_901.0 + 223.0, 57_901.0 + 635.0, 57_901.0 + 854.0);
    let s0 = equinoctial_to_cartesian(&table1(), GM_SUN).unwrap();
    let ast = propagate(&s0, Epoch::from_mjd_tdb(arrival), &ForceModelConfig::two_body(), &IntegratorConfig::default())
        .unwrap()
        .final_state();
    let earth = Ephemeris::builtin().state(Body::Earth, Epoch::from_mjd_tdb(launch)).unwrap();
    let r_profile = ballistic_transfer_profile(&earth, &ast.r, arrival - launch, 1.0).unwrap();
    let peak = r_profile.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let (r0, r1) = (r_profile[0].1, r_profile[r_profile.len() - 1].1);
    let arc = |a: f64, b: f64| ThrustArc {
        start: Epoch::from_mjd_tdb(a),
        end: Epoch::from_mjd_tdb(b),
        throttle: 1.0,
    };
    let sched = ThrustSchedule {
        arcs: vec![arc(launch, coast_start), arc(coast_end, arrival)],
        r_profile,
    };
    let h = mass_history(&sched, &PropulsionConfig::default()).unwrap();
    outcome(
        (150.0..=250.0).contains(&h.propellant_kg),
        format!("{:.1} kg over r = {r0:.2} -> {peak:.2} -> {r1:.2} AU", h.propellant_kg),
    )
}

fn real_rasters() -> Option<Outcome> {
    let pop_path = std::env::var("SLOWPUSH_POPULATION").ok()?;
    let light_path = std::env::var("SLOWPUSH_NIGHTLIGHT").ok()?;
    let pop = load_population_grid(&pop_path).unwrap();
    let light = load_nightlight(&light_path).unwrap();
    let months: Vec<u32> = (0..=33).collect();
    let score = |lat: f64, lon: f64, dir: PushDirection| {
        let offset = reanchor(GeodeticPoint::surface(lat, lon)).offset_days;
        let track = sweep(offset, dir, &months);
        score_track(&track_points(&track), &track.undeflected.point, &pop, &light, DEFAULT_RADIUS_KM).unwrap()
    };
    let delhi = score(28.61, 77.21, PushDirection::Decelerate);
    let dhaka = score(23.81, 90.41, PushDirection::Accelerate);
    let tehran = score(35.7, 51.4, PushDirection::Accelerate);

    let delhi_pop = delhi.rows[22].indexes.population;
    let dhaka_best = dhaka.rows[dhaka.best].months;
    let tehran_fast = tehran.rows.iter().find(|r| r.indexes.hci <= 0.01).map(|r| r.months);
    let tehran_dark = tehran.rows[12..=16].iter().any(|r| r.indexes.idi == Some(0.0));
    let pass = delhi_pop < 500_000.0
        && (10..=16).contains(&dhaka_best)
        && tehran_fast.is_some_and(|m| m <= 2)
        && tehran_dark;
    Some(outcome(
        pass,
        format!(
            "Delhi 22-month population {delhi_pop:.0}; Dhaka optimum at {dhaka_best} months; Tehran 100x HCI reduction at {tehran_fast:?} months, zero IDI in months 12-16: {tehran_dark}"
        ),
    ))
}

fn run(n: u32, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    println!("{} [{n:>2}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

#[test]
fn acceptance() {
    let gated: Vec<(u32, bool)> = vec![
        (1, run(1, "two-body oracle", two_body_oracle)),
        (2, run(2, "equinoctial round trip and derived elements", element_round_trip)),
        (3, run(3, "relativistic perihelion advance", perihelion_advance)),
        (4, run(4, "state transition matrix", stm_checks)),
        (5, run(5, "disc integration and damage ratios", exposure_checks)),
        (6, run(6, "constant-thrust propellant", constant_thrust)),
        (7, run(7, "CLI thread determinism", cli_determinism)),
        (8, run(8, "nominal impact after re-anchoring", nominal_impact)),
        (9, run(9, "risk corridor extent and cities", risk_corridor_checks)),
        (10, run(10, "impact dispersion", dispersion_checks)),
        (11, run(11, "Delhi westward deflection", delhi_deflection)),
        (12, run(12, "interplanetary propellant", interplanetary_budget)),
    ];
    match catch_unwind(AssertUnwindSafe(real_rasters)) {
        Ok(Some(o)) => println!("{} [13] real-raster damage (reported only): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail),
        Ok(None) => println!("SKIP [13] real-raster damage (reported only): set SLOWPUSH_POPULATION and SLOWPUSH_NIGHTLIGHT"),
        Err(_) => println!("FAIL [13] real-raster damage (reported only): panicked"),
    }
    let failed: Vec<u32> = gated.iter().filter(|g| !g.1).map(|g| g.0).collect();
    assert!(failed.is_empty(), "gated criteria failing: {failed:?}");
}
