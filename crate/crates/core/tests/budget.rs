use slowpush_core::budget::*;
use slowpush_core::deflection::{PushDirection, ThrustLaw, DEFAULT_EXPONENT, DEFAULT_F0_N, DEFAULT_START_MJD, MONTH_DAYS};
use slowpush_core::dynamics::{propagate, ForceModelConfig, IntegratorConfig};
use slowpush_core::elements::{equinoctial_to_cartesian, EquinoctialElements};
use slowpush_core::ephemeris::{Body, Ephemeris, AU_M, GM_SUN};
use slowpush_core::timeframes::Epoch;

const LAUNCH_MJD: f64 = 57_901.0;
const ARRIVAL_MJD: f64 = 58_756.0;

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

fn transfer_schedule() -> ThrustSchedule {
    let s0 = equinoctial_to_cartesian(&table1(), GM_SUN).unwrap();
    let arrival = Epoch::from_mjd_tdb(ARRIVAL_MJD);
    let ast = propagate(&s0, arrival, &ForceModelConfig::two_body(), &IntegratorConfig::default())
        .unwrap()
        .final_state();
    let earth = Ephemeris::builtin().state(Body::Earth, Epoch::from_mjd_tdb(LAUNCH_MJD)).unwrap();
    let r_profile = ballistic_transfer_profile(&earth, &ast.r, ARRIVAL_MJD - LAUNCH_MJD, 1.0).unwrap();
    let arc = |a: f64, b: f64| ThrustArc {
        start: Epoch::from_mjd_tdb(a),
        end: Epoch::from_mjd_tdb(b),
        throttle: 1.0,
    };
    ThrustSchedule {
        arcs: vec![arc(LAUNCH_MJD, LAUNCH_MJD + 223.0), arc(ARRIVAL_MJD - 219.0, ARRIVAL_MJD)],
        r_profile,
    }
}

#[test]
fn transfer_profile_matches_quoted_geometry() {
    let s = transfer_schedule();
    let r: Vec<f64> = s.r_profile.iter().map(|p| p.1).collect();
    let peak = r.iter().cloned().fold(f64::MIN, f64::max);
    assert!((r[0] - 1.0).abs() < 0.03);
    assert!((2.6..=3.0).contains(&peak), "{peak}");
    assert!((r[r.len() - 1] - 1.9).abs() < 0.05);
}

#[test]
fn interplanetary_propellant_brackets_two_hundred_kg() {
    let h = mass_history(&transfer_schedule(), &PropulsionConfig::default()).unwrap();
    eprintln!("interplanetary propellant {:.1} kg, final mass {:.1} kg", h.propellant_kg, h.final_mass());
    assert!((150.0..=250.0).contains(&h.propellant_kg), "{}", h.propellant_kg);
}

#[test]
fn deflection_budget_on_asteroid_orbit() {
    let s0 = equinoctial_to_cartesian(&table1(), GM_SUN).unwrap();
    let law = ThrustLaw::new(
        DEFAULT_F0_N,
        DEFAULT_EXPONENT,
        PushDirection::Decelerate,
        Epoch::from_mjd_tdb(DEFAULT_START_MJD),
        0.0,
    )
    .unwrap();
    let end = law.start.add_days(22.0 * MONTH_DAYS + 1.0);
    let traj = propagate(&s0, end, &ForceModelConfig::default(), &IntegratorConfig::default()).unwrap();
    let prof = r_profile_of(&traj, 1.0);
    let b = deflection_propellant(22, &law, &prof, &DeflectionPropulsion::default()).unwrap();
    let bound = 2.0 * DEFAULT_F0_N / (G0 * 3500.0) * 22.0 * MONTH_DAYS * 86_400.0;
    eprintln!("22-month deflection propellant {:.1} kg dual, {:.1} kg single", b.dual_kg, b.single_kg);
    assert!(b.dual_kg <= bound);
    assert!(b.dual_kg > 0.0);
}
