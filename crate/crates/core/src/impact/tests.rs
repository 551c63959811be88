use super::*;
use crate::ephemeris::AU_M;
use crate::timeframes::{
    earth_rotation_angle, earth_rotation_rate, ecliptic_to_equatorial_matrix, geodetic_to_ecef,
    inertial_to_earth_fixed_matrix,
};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

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

// Heliocentric ecliptic state touching the ellipsoid at `p`, moving with
// Earth-fixed speed `speed` (m/s) at `elev_deg` below the horizon along `az_deg`.
fn surface_state(e: Epoch, p: GeodeticPoint, speed: f64, elev_deg: f64, az_deg: f64) -> (StateVector, Vec3) {
    let eph = Ephemeris::builtin();
    let earth = eph.state(Body::Earth, e).unwrap();
    let (east, north, up) = enu_basis(&p);
    let (se, ce) = elev_deg.to_radians().sin_cos();
    let (sa, ca) = az_deg.to_radians().sin_cos();
    let v_ef = speed * (ce * (ca * north + sa * east) - se * up);
    let r_ef = geodetic_to_ecef(&p);
    let rot = inertial_to_earth_fixed_matrix(earth_rotation_angle(e)).transpose();
    let r_eq = rot * r_ef;
    let v_eq = rot * v_ef + Vec3::new(0.0, 0.0, earth_rotation_rate()).cross(&r_eq);
    let q = ecliptic_to_equatorial_matrix().transpose();
    let (r, v) = (q * r_eq, q * v_eq);
    (StateVector::new(earth.r + r, earth.v + v, e), v)
}

#[test]
fn contact_geometry_matches_construction() {
    let e = Epoch::from_mjd_tdb(59_825.16);
    let p = GeodeticPoint::surface(13.8, 113.9);
    let (s, _) = surface_state(e, p, 16_000.0, 56.0, 250.0);
    let rec = contact_record(&s, &Ephemeris::builtin()).unwrap();
    assert_abs_diff_eq!(rec.point.lat_deg, 13.8, epsilon = 1e-9);
    assert_abs_diff_eq!(rec.point.lon_deg, 113.9, epsilon = 1e-9);
    assert_abs_diff_eq!(rec.speed_kms, 16.0, epsilon = 1e-9);
    assert_abs_diff_eq!(rec.incidence_deg, 56.0, epsilon = 1e-7);
    assert_eq!(rec.point.alt_m, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_bounds_surface_speed(
        lat in -89.0f64..89.0,
        lon in -180.0f64..180.0,
        speed in 11_200.0f64..72_000.0,
        elev in 1.0f64..90.0,
        az in 0.0f64..360.0,
        day in 0.0f64..3000.0,
    ) {
        let e = Epoch::from_mjd_tdb(57_000.0 + day);
        let (s, v_inertial) = surface_state(e, GeodeticPoint::surface(lat, lon), speed, elev, az);
        let rec = contact_record(&s, &Ephemeris::builtin()).unwrap();
        prop_assert!((rec.speed_kms - speed / 1e3).abs() < 1e-8);
        prop_assert!((rec.inertial_speed_kms - v_inertial.norm() / 1e3).abs() < 1e-8);
        prop_assert!(rec.speed_kms <= rec.inertial_speed_kms + 0.47);
        prop_assert!(rec.incidence_deg > 0.0 && rec.incidence_deg <= 90.0);
    }
}

#[test]
fn raised_perihelion_misses() {
    let el = EquinoctialElements::from_keplerian(1.5 * AU_M, 0.2, 5.0, 10.0, 20.0, 30.0, Epoch::from_mjd_tdb(57_125.0));
    assert!(el.perihelion() > 1.1 * AU_M);
    let horizon = Epoch::from_mjd_tdb(58_000.0);
    let out = impact_from_elements_until(&el, horizon, &ForceModelConfig::default(), &IntegratorConfig::default()).unwrap();
    match out {
        ImpactOutcome::Miss(m) => assert!(m.distance_km > 0.1 * AU_M / 1e3),
        ImpactOutcome::Impact(_) => panic!("orbit beyond 1.1 AU cannot reach Earth"),
    }
}

#[test]
fn zero_offset_reproduces_direct_propagation() {
    let el = table1();
    let fcfg = ForceModelConfig::default();
    let icfg = IntegratorConfig::default();
    let horizon = Epoch::from_mjd_tdb(DEFAULT_HORIZON_MJD);
    let path = risk_path(&el, &[-1e-4, 0.0, 1e-4], horizon, &fcfg, &icfg).unwrap();
    let direct = impact_from_elements(&el, &fcfg, &icfg).unwrap();
    assert_eq!(path.samples[1].outcome, direct);
    let rec = direct.impact().expect("Table 1 orbit impacts");
    let (y, m, d, _) = rec.epoch.to_utc().calendar();
    assert_eq!((y, m, d), (2022, 9, 3));
    assert!((11.2..=72.0).contains(&rec.speed_kms));
    assert!(rec.speed_kms <= rec.inertial_speed_kms + 0.47);
}

#[test]
fn offsets_must_increase() {
    let horizon = Epoch::from_mjd_tdb(DEFAULT_HORIZON_MJD);
    let cfg = (ForceModelConfig::default(), IntegratorConfig::default());
    for bad in [vec![0.0, 0.0], vec![1e-4, 0.0]] {
        assert!(matches!(risk_path(&table1(), &bad, horizon, &cfg.0, &cfg.1), Err(Error::Domain(_))));
    }
}

#[test]
fn offset_grid_endpoints() {
    assert_eq!(offset_grid(-1.0, 1.0, 5), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    assert_eq!(offset_grid(2.0, 3.0, 1), vec![2.0]);
    assert!(offset_grid(2.0, 3.0, 0).is_empty());
}

fn fake_record(lat: f64, lon: f64) -> ImpactRecord {
    let e = Epoch::from_mjd_tdb(59_825.16);
    ImpactRecord {
        epoch: e,
        point: GeodeticPoint::surface(lat, lon),
        speed_kms: 16.0,
        incidence_deg: 56.0,
        inertial_speed_kms: 15.8,
        state: StateVector::new(Vec3::zeros(), Vec3::zeros(), e),
    }
}

#[test]
fn csv_marks_misses_with_empty_geometry() {
    let path = RiskPath {
        samples: vec![
            RiskSample {
                offset_days: -0.001,
                outcome: ImpactOutcome::Miss(MissRecord {
                    epoch: Epoch::from_mjd_tdb(59_825.2),
                    distance_km: 7000.0,
                }),
            },
            RiskSample {
                offset_days: 0.0,
                outcome: ImpactOutcome::Impact(fake_record(13.8, 113.9)),
            },
        ],
    };
    let csv = risk_path_csv(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "offset_days,lat,lon,epoch_utc_mjd,speed_kms,incidence_deg");
    assert!(lines[1].starts_with("-0.001000000,,,"));
    assert!(lines[1].ends_with(",,"));
    assert!(lines[2].starts_with("0.000000000,13.800000,113.900000,"));
}

#[test]
fn geojson_splits_at_antimeridian() {
    let samples = [(0.0, 170.0), (1e-4, 179.0), (2e-4, -179.0), (3e-4, -170.0)]
        .iter()
        .map(|&(d, lon)| RiskSample {
            offset_days: d,
            outcome: ImpactOutcome::Impact(fake_record(5.0, lon)),
        })
        .collect();
    let g = risk_path_geojson(&RiskPath { samples });
    let lines = &g["features"][0]["geometry"]["coordinates"];
    assert_eq!(lines.as_array().unwrap().len(), 2);
    assert_eq!(g["features"].as_array().unwrap().len(), 5);
    assert_eq!(g["features"][1]["geometry"]["type"], "Point");
}
