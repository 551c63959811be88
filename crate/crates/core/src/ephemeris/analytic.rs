use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::interp::{lagrange_derivative_weights_uniform, lagrange_weights_uniform};
use super::{Body, AU_M, GM_SUN};
use crate::elements::{equinoctial_to_cartesian, EquinoctialElements, StateVector};
use crate::timeframes::{Epoch, Vec3, SECONDS_PER_DAY};

/// Planetary theory behind the analytic provider.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanetTheory {
    /// VSOP87A heliocentric rectangular series.
    #[default]
    Vsop87,
    /// Mean elements with linear secular rates, valid 1800-2050.
    MeanElements,
}

// a (AU), e, I, L, long. peri, long. node (deg) and rates per Julian century.
type Secular = [[f64; 2]; 6];

const MERCURY: Secular = [
    [0.387_099_27, 0.000_000_37],
    [0.205_635_93, 0.000_019_06],
    [7.004_979_02, -0.005_947_49],
    [252.250_323_50, 149_472.674_111_75],
    [77.457_796_28, 0.160_476_89],
    [48.330_765_93, -0.125_340_81],
];
const VENUS: Secular = [
    [0.723_335_66, 0.000_003_90],
    [0.006_776_72, -0.000_041_07],
    [3.394_676_05, -0.000_788_90],
    [181.979_099_50, 58_517.815_387_29],
    [131.602_467_18, 0.002_683_29],
    [76.679_842_55, -0.277_694_18],
];
const EM_BARY: Secular = [
    [1.000_002_61, 0.000_005_62],
    [0.016_711_23, -0.000_043_92],
    [-0.000_015_31, -0.012_946_68],
    [100.464_571_66, 35_999.372_449_81],
    [102.937_681_93, 0.323_273_64],
    [0.0, 0.0],
];
const MARS: Secular = [
    [1.523_710_34, 0.000_018_47],
    [0.093_394_10, 0.000_078_82],
    [1.849_691_42, -0.008_131_31],
    [-4.553_432_05, 19_140.302_684_99],
    [-23.943_629_59, 0.444_410_88],
    [49.559_538_91, -0.292_573_43],
];
const JUPITER: Secular = [
    [5.202_887_00, -0.000_116_07],
    [0.048_386_24, -0.000_132_53],
    [1.304_396_95, -0.001_837_14],
    [34.396_440_51, 3_034.746_127_75],
    [14.728_479_83, 0.212_526_68],
    [100.473_909_09, 0.204_691_06],
];
const SATURN: Secular = [
    [9.536_675_94, -0.001_250_60],
    [0.053_861_79, -0.000_509_91],
    [2.485_991_87, 0.001_936_09],
    [49.954_244_23, 1_222.493_622_01],
    [92.598_878_31, -0.418_972_16],
    [113.662_424_48, -0.288_677_94],
];
const URANUS: Secular = [
    [19.189_164_64, -0.001_961_76],
    [0.047_257_44, -0.000_043_97],
    [0.772_637_83, -0.002_429_39],
    [313.238_104_51, 428.482_027_85],
    [170.954_276_30, 0.408_052_81],
    [74.016_925_03, 0.042_405_89],
];
const NEPTUNE: Secular = [
    [30.069_922_76, 0.000_262_91],
    [0.008_590_48, 0.000_051_05],
    [1.770_043_47, 0.000_353_72],
    [-55.120_029_69, 218.459_453_25],
    [44.964_762_27, -0.322_414_64],
    [131.784_225_74, -0.005_086_64],
];

// Osculating ecliptic J2000 elements at MJD 59000: a (AU), e, i, node, argp, M (deg).
const ASTEROID_EPOCH_MJD: f64 = 59_000.0;
const CERES: [f64; 6] = [2.769_165_2, 0.076_009_1, 10.594_07, 80.305_53, 73.597_69, 77.372_10];
const VESTA: [f64; 6] = [2.361_79, 0.088_74, 7.142_2, 103.851_4, 150.728_5, 205.549_8];
const PALLAS: [f64; 6] = [2.773_0, 0.230_2, 34.84, 173.02, 310.20, 78.23];

fn secular_position(tab: &Secular, epoch: Epoch) -> Vec3 {
    let t = epoch.centuries_since_j2000();
    let v = |k: usize| tab[k][0] + tab[k][1] * t;
    let (a, e, inc, l, varpi, node) = (v(0), v(1), v(2), v(3), v(4), v(5));
    let el = EquinoctialElements::from_keplerian(a * AU_M, e, inc, node, varpi - node, l - varpi, epoch);
    equinoctial_to_cartesian(&el, GM_SUN).expect("secular elements are elliptic").r
}

fn asteroid_position(tab: &[f64; 6], epoch: Epoch) -> Vec3 {
    let a = tab[0] * AU_M;
    let n = (GM_SUN / (a * a * a)).sqrt();
    let dt = (epoch.mjd() - ASTEROID_EPOCH_MJD) * SECONDS_PER_DAY;
    let m = tab[5] + (n * dt).to_degrees();
    let el = EquinoctialElements::from_keplerian(a, tab[1], tab[2], tab[3], tab[4], m, epoch);
    equinoctial_to_cartesian(&el, GM_SUN).expect("asteroid elements are elliptic").r
}

fn vsop_position(body: Body, jde: f64) -> Vec3 {
    use vsop87::vsop87a;
    let c = match body {
        Body::Mercury => vsop87a::mercury(jde),
        Body::Venus => vsop87a::venus(jde),
        Body::Earth => vsop87a::earth(jde),
        Body::Mars => vsop87a::mars(jde),
        Body::Jupiter => vsop87a::jupiter(jde),
        Body::Saturn => vsop87a::saturn(jde),
        Body::Uranus => vsop87a::uranus(jde),
        Body::Neptune => vsop87a::neptune(jde),
        _ => unreachable!("not a VSOP87 body"),
    };
    Vec3::new(c.x, c.y, c.z) * AU_M
}

// (D, M, M', F multipliers, coefficient)
const MOON_LON: [([i8; 4], f64); 13] = [
    ([0, 0, 1, 0], 6.288_774),
    ([2, 0, -1, 0], 1.274_027),
    ([2, 0, 0, 0], 0.658_314),
    ([0, 0, 2, 0], 0.213_618),
    ([0, 1, 0, 0], -0.185_116),
    ([0, 0, 0, 2], -0.114_332),
    ([2, 0, -2, 0], 0.058_793),
    ([2, -1, -1, 0], 0.057_066),
    ([2, 0, 1, 0], 0.053_322),
    ([2, -1, 0, 0], 0.045_758),
    ([0, 1, -1, 0], -0.040_923),
    ([1, 0, 0, 0], -0.034_720),
    ([0, 1, 1, 0], -0.030_383),
];
const MOON_DIST: [([i8; 4], f64); 13] = [
    ([0, 0, 1, 0], -20_905.355),
    ([2, 0, -1, 0], -3_699.111),
    ([2, 0, 0, 0], -2_955.968),
    ([0, 0, 2, 0], -569.925),
    ([0, 1, 0, 0], 48.888),
    ([0, 0, 0, 2], -3.149),
    ([2, 0, -2, 0], 246.158),
    ([2, -1, -1, 0], -152.138),
    ([2, 0, 1, 0], -170.733),
    ([2, -1, 0, 0], -204.586),
    ([0, 1, -1, 0], -129.620),
    ([1, 0, 0, 0], 108.743),
    ([0, 1, 1, 0], 104.755),
];
const MOON_LAT: [([i8; 4], f64); 8] = [
    ([0, 0, 0, 1], 5.128_122),
    ([0, 0, 1, 1], 0.280_602),
    ([0, 0, 1, -1], 0.277_693),
    ([2, 0, 0, -1], 0.173_237),
    ([2, 0, -1, 1], 0.055_413),
    ([2, 0, -1, -1], 0.046_271),
    ([2, 0, 0, 1], 0.032_573),
    ([0, 0, 2, 1], 0.017_198),
];

/// Geocentric lunar position, ecliptic and equinox J2000 (m).
///
/// Leading terms of the ELP-2000/82 periodic series.
pub fn moon_geocentric(epoch: Epoch) -> Vec3 {
    let t = epoch.centuries_since_j2000();
    let lp = 218.316_447_7 + 481_267.881_234_21 * t;
    let args = [
        (297.850_192_1 + 445_267.111_403_4 * t).to_radians(),
        (357.529_109_2 + 35_999.050_290_9 * t).to_radians(),
        (134.963_396_4 + 477_198.867_505_5 * t).to_radians(),
        (93.272_095_0 + 483_202.017_523_3 * t).to_radians(),
    ];
    let phase = |m: &[i8; 4]| m.iter().zip(args).map(|(&k, a)| k as f64 * a).sum::<f64>();
    let dlon: f64 = MOON_LON.iter().map(|(m, c)| c * phase(m).sin()).sum();
    let lat: f64 = MOON_LAT.iter().map(|(m, c)| c * phase(m).sin()).sum();
    let dist_km = 385_000.56 + MOON_DIST.iter().map(|(m, c)| c * phase(m).cos()).sum::<f64>();
    let precession = (5_028.796_195 * t + 1.105_434_8 * t * t) / 3600.0;
    let lon = (lp + dlon - precession).to_radians();
    let lat = lat.to_radians();
    Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()) * dist_km * 1e3
}

fn moon_mass_fraction() -> f64 {
    Body::Moon.gm() / (Body::Earth.gm() + Body::Moon.gm())
}

/// Uncached analytic heliocentric position (m).
pub fn analytic_position(theory: PlanetTheory, body: Body, epoch: Epoch) -> Vec3 {
    match body {
        Body::Sun => Vec3::zeros(),
        Body::Ceres => asteroid_position(&CERES, epoch),
        Body::Vesta => asteroid_position(&VESTA, epoch),
        Body::Pallas => asteroid_position(&PALLAS, epoch),
        Body::Earth | Body::Moon => {
            let geo = moon_geocentric(epoch);
            let earth = match theory {
                PlanetTheory::Vsop87 => vsop_position(Body::Earth, epoch.jd()),
                PlanetTheory::MeanElements => {
                    secular_position(&EM_BARY, epoch) - geo * moon_mass_fraction()
                }
            };
            if body == Body::Earth {
                earth
            } else {
                earth + geo
            }
        }
        _ => match theory {
            PlanetTheory::Vsop87 => vsop_position(body, epoch.jd()),
            PlanetTheory::MeanElements => secular_position(
                match body {
                    Body::Mercury => &MERCURY,
                    Body::Venus => &VENUS,
                    Body::Mars => &MARS,
                    Body::Jupiter => &JUPITER,
                    Body::Saturn => &SATURN,
                    Body::Uranus => &URANUS,
                    _ => &NEPTUNE,
                },
                epoch,
            ),
        },
    }
}

const CHUNK: usize = 64;
const PAD_LO: usize = 4;
const CHUNK_NODES: usize = CHUNK + 9;
const CACHE_START_MJD: f64 = 49_000.0;
const CACHE_END_MJD: f64 = 71_000.0;

// Series sampled on the cache grid: heliocentric bodies plus the geocentric Moon.
#[derive(Clone, Copy)]
enum Series {
    Helio(Body),
    MoonGeo,
}

struct SampledSeries {
    series: Series,
    step_days: f64,
    chunks: Vec<OnceLock<Box<[Vec3; CHUNK_NODES]>>>,
}

impl SampledSeries {
    fn new(series: Series, step_days: f64) -> Self {
        let n = ((CACHE_END_MJD - CACHE_START_MJD) / step_days / CHUNK as f64).ceil() as usize;
        SampledSeries {
            series,
            step_days,
            chunks: (0..n).map(|_| OnceLock::new()).collect(),
        }
    }

    fn sample(&self, theory: PlanetTheory, epoch: Epoch) -> Vec3 {
        match self.series {
            Series::Helio(b) => analytic_position(theory, b, epoch),
            Series::MoonGeo => moon_geocentric(epoch),
        }
    }

    // Position and velocity; falls back to direct evaluation outside the grid.
    fn eval(&self, theory: PlanetTheory, epoch: Epoch, want_velocity: bool) -> (Vec3, Vec3) {
        let x = (epoch.mjd() - CACHE_START_MJD) / self.step_days;
        let i = x.floor();
        let c = (i / CHUNK as f64).floor();
        if !(0.0..self.chunks.len() as f64).contains(&c) {
            return self.direct(theory, epoch, want_velocity);
        }
        let c = c as usize;
        let i = i as usize;
        let nodes = self.chunks[c].get_or_init(|| {
            let base = (c * CHUNK) as f64 - PAD_LO as f64;
            Box::new(std::array::from_fn(|k| {
                let mjd = CACHE_START_MJD + (base + k as f64) * self.step_days;
                self.sample(theory, Epoch::from_mjd_tdb(mjd))
            }))
        });
        let j = i - c * CHUNK;
        let s = x - i as f64 + PAD_LO as f64;
        let window = &nodes[j..j + 9];
        let w = lagrange_weights_uniform(s);
        let r = window.iter().zip(w).fold(Vec3::zeros(), |acc, (p, w)| acc + p * w);
        let v = if want_velocity {
            let dw = lagrange_derivative_weights_uniform(s);
            window.iter().zip(dw).fold(Vec3::zeros(), |acc, (p, w)| acc + p * w)
                / (self.step_days * SECONDS_PER_DAY)
        } else {
            Vec3::zeros()
        };
        (r, v)
    }

    fn direct(&self, theory: PlanetTheory, epoch: Epoch, want_velocity: bool) -> (Vec3, Vec3) {
        let r = self.sample(theory, epoch);
        if !want_velocity {
            return (r, Vec3::zeros());
        }
        let h = 600.0;
        let rp = self.sample(theory, epoch.add_seconds(h));
        let rm = self.sample(theory, epoch.add_seconds(-h));
        (r, (rp - rm) / (2.0 * h))
    }
}

/// Analytic ephemeris sampled lazily onto a uniform grid and interpolated
/// with 9-point Lagrange polynomials.
pub struct AnalyticCache {
    theory: PlanetTheory,
    series: Vec<SampledSeries>,
}

fn grid_step_days(body: Body) -> f64 {
    match body {
        Body::Earth | Body::Mercury => 1.0,
        Body::Venus | Body::Mars => 2.0,
        Body::Ceres | Body::Vesta | Body::Pallas => 4.0,
        _ => 8.0,
    }
}

impl AnalyticCache {
    pub fn new(theory: PlanetTheory) -> Self {
        let mut series: Vec<SampledSeries> = Body::ALL
            .iter()
            .map(|&b| SampledSeries::new(Series::Helio(b), grid_step_days(b)))
            .collect();
        series[Body::Moon.index()] = SampledSeries::new(Series::MoonGeo, 0.25);
        AnalyticCache { theory, series }
    }

    pub fn theory(&self) -> PlanetTheory {
        self.theory
    }

    fn eval(&self, body: Body, epoch: Epoch, want_velocity: bool) -> (Vec3, Vec3) {
        if body == Body::Moon {
            let (re, ve) = self.series[Body::Earth.index()].eval(self.theory, epoch, want_velocity);
            let (rg, vg) = self.series[Body::Moon.index()].eval(self.theory, epoch, want_velocity);
            return (re + rg, ve + vg);
        }
        self.series[body.index()].eval(self.theory, epoch, want_velocity)
    }

    pub fn position(&self, body: Body, epoch: Epoch) -> Vec3 {
        self.eval(body, epoch, false).0
    }

    pub fn state(&self, body: Body, epoch: Epoch) -> StateVector {
        let (r, v) = self.eval(body, epoch, true);
        StateVector::new(r, v, epoch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_matches_direct_evaluation() {
        let cache = AnalyticCache::new(PlanetTheory::Vsop87);
        for k in 0..40 {
            let e = Epoch::from_mjd_tdb(57_000.0 + 37.123 * k as f64);
            for body in [Body::Earth, Body::Moon, Body::Mercury, Body::Jupiter, Body::Ceres] {
                let d = (cache.position(body, e) - analytic_position(PlanetTheory::Vsop87, body, e)).norm();
                assert!(d < 1_000.0, "{body} off by {d} m");
            }
        }
    }

    #[test]
    fn vsop_and_mean_elements_agree_roughly() {
        let e = Epoch::from_mjd_tdb(59_825.0);
        for body in [Body::Earth, Body::Venus, Body::Mars, Body::Jupiter] {
            let a = analytic_position(PlanetTheory::Vsop87, body, e);
            let b = analytic_position(PlanetTheory::MeanElements, body, e);
            assert!((a - b).norm() / a.norm() < 5e-3, "{body}");
        }
    }

    #[test]
    fn moon_distance_oracle_at_reference_date() {
        // 1992-04-12 0h TD: 368409.7 km, longitude 133.162655 deg of date.
        let e = Epoch::from_mjd_tdb(48_724.0);
        let d = moon_geocentric(e).norm() / 1e3;
        assert!((d - 368_409.7).abs() < 300.0, "{d}");
    }

    #[test]
    fn ceres_orbit_radius_in_belt() {
        for k in 0..50 {
            let e = Epoch::from_mjd_tdb(55_000.0 + 100.0 * k as f64);
            let r = asteroid_position(&CERES, e).norm() / AU_M;
            assert!((2.5..3.0).contains(&r));
        }
    }
}
