//! Scenario file: TOML sections with every key optional and unknown keys
//! rejected.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use slowpush_core::budget::{DeflectionPropulsion, PropulsionConfig};
use slowpush_core::deflection::{
    AsteroidBody, PushDirection, ThrustLaw, DEFAULT_EXPONENT, DEFAULT_F0_N, DEFAULT_START_MJD,
};
use slowpush_core::dispersion::{table3_covariance, CovarianceFrame, CovarianceMatrix};
use slowpush_core::dynamics::{ForceModelConfig, IntegratorConfig};
use slowpush_core::elements::EquinoctialElements;
use slowpush_core::ephemeris::{Body, Ephemeris, EphemerisSource, PlanetTheory, AU_M};
use slowpush_core::exposure::DEFAULT_RADIUS_KM;
use slowpush_core::impact::DEFAULT_HORIZON_MJD;
use slowpush_core::timeframes::{Epoch, GeodeticPoint};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub output_dir: Option<PathBuf>,
    pub radius_km: f64,
    pub elements: ElementsSection,
    pub force: ForceSection,
    pub integrator: IntegratorSection,
    pub reanchor: Option<ReanchorSection>,
    pub risk: RiskSection,
    pub dispersion: DispersionSection,
    pub deflection: DeflectionSection,
    pub asteroid: AsteroidBody,
    pub rasters: RasterSection,
    pub budget: BudgetSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            output_dir: None,
            radius_km: DEFAULT_RADIUS_KM,
            elements: ElementsSection::default(),
            force: ForceSection::default(),
            integrator: IntegratorSection::default(),
            reanchor: None,
            risk: RiskSection::default(),
            dispersion: DispersionSection::default(),
            deflection: DeflectionSection::default(),
            asteroid: AsteroidBody::default(),
            rasters: RasterSection::default(),
            budget: BudgetSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElementsSection {
    pub a_au: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub ml_deg: f64,
    pub epoch_mjd: f64,
    /// Shift of the reference epoch (days), elements unchanged.
    pub offset_days: f64,
}

impl Default for ElementsSection {
    fn default() -> Self {
        ElementsSection {
            a_au: 1.775_998_173_759_480,
            p1: -0.448_551_534_990_503,
            p2: 0.198_239_860_639_469,
            q1: -0.015_660_086_557_340,
            q2: 0.043_990_645_962_994,
            ml_deg: 264.006_003_548_211_3,
            epoch_mjd: 57_125.0,
            offset_days: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceSection {
    pub perturbers: Option<Vec<String>>,
    pub relativity: bool,
    /// `analytic`, `mean_elements` or `table:PATH`.
    pub ephemeris: String,
    pub horizon_mjd: f64,
}

impl Default for ForceSection {
    fn default() -> Self {
        ForceSection {
            perturbers: None,
            relativity: true,
            ephemeris: "analytic".into(),
            horizon_mjd: DEFAULT_HORIZON_MJD,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol_pos_m: f64,
    pub abs_tol_vel_ms: f64,
    pub max_step_days: f64,
    pub min_step_s: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        IntegratorSection {
            rel_tol: d.rel_tol,
            abs_tol_pos_m: d.abs_tol_pos,
            abs_tol_vel_ms: d.abs_tol_vel,
            max_step_days: d.max_step / 86_400.0,
            min_step_s: d.min_step,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReanchorSection {
    pub lat: f64,
    pub lon: f64,
    #[serde(default = "default_reanchor_window")]
    pub window: [f64; 2],
}

fn default_reanchor_window() -> [f64; 2] {
    [-0.01, 0.01]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskSection {
    pub window: [f64; 2],
    pub samples: usize,
    pub bisections: usize,
}

impl Default for RiskSection {
    fn default() -> Self {
        RiskSection {
            window: [-0.0015, 0.0075],
            samples: 41,
            bisections: 24,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionSection {
    pub rendezvous_mjd: f64,
    pub sigma_level: f64,
    /// Frenet-frame 1-sigma values (m, m/s); defaults to Table 3.
    pub sigmas: Option<[f64; 6]>,
}

impl Default for DispersionSection {
    fn default() -> Self {
        DispersionSection {
            rendezvous_mjd: DEFAULT_START_MJD,
            sigma_level: 1.0,
            sigmas: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeflectionSection {
    pub f0_n: f64,
    pub exponent: f64,
    pub direction: PushDirection,
    pub start_mjd: f64,
    /// Inclusive duration range in months, `A..B`.
    pub months: String,
}

impl Default for DeflectionSection {
    fn default() -> Self {
        DeflectionSection {
            f0_n: DEFAULT_F0_N,
            exponent: DEFAULT_EXPONENT,
            direction: PushDirection::Decelerate,
            start_mjd: DEFAULT_START_MJD,
            months: "1..33".into(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RasterSection {
    pub population: Option<PathBuf>,
    pub nightlight: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub arcs: Option<PathBuf>,
    pub r_profile: Option<PathBuf>,
    pub propulsion: PropulsionConfig,
    pub deflection: DeflectionPropulsion,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            arcs: None,
            r_profile: None,
            propulsion: PropulsionConfig::default(),
            deflection: DeflectionPropulsion::default(),
        }
    }
}

/// Parses `A..B` (inclusive) into a month range.
pub fn parse_months(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("month range '{s}' is not of the form A..B"))?;
    let a: u32 = a.trim().parse().map_err(|_| format!("bad month '{a}'"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad month '{b}'"))?;
    if a > b {
        return Err(format!("month range '{s}' is empty"));
    }
    Ok(a..=b)
}

fn parse_ephemeris(s: &str, base: &Path) -> Result<EphemerisSource, String> {
    match s.trim() {
        "analytic" | "vsop87" => Ok(EphemerisSource::Analytic(PlanetTheory::Vsop87)),
        "mean_elements" => Ok(EphemerisSource::Analytic(PlanetTheory::MeanElements)),
        other => match other.strip_prefix("table:") {
            Some(p) if !p.is_empty() => Ok(EphemerisSource::Table(base.join(p))),
            _ => Err(format!("ephemeris '{s}' is not analytic, mean_elements or table:PATH")),
        },
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub config_path: PathBuf,
    pub elements: EquinoctialElements,
    pub ephemeris_source: EphemerisSource,
    pub integrator: IntegratorConfig,
    pub horizon: Epoch,
    pub months: RangeInclusive<u32>,
    pub population: Option<PathBuf>,
    pub nightlight: Option<PathBuf>,
    pub arcs: Option<PathBuf>,
    pub r_profile: Option<PathBuf>,
    pub reanchor: Option<(GeodeticPoint, (f64, f64))>,
    pub perturbers: Vec<Body>,
}

pub struct Overrides<'a> {
    pub ephemeris: Option<&'a str>,
    pub months: Option<&'a str>,
}

/// Reads and validates the scenario. Every input path is checked here,
/// before any computation.
pub fn load(path: &Path, ov: &Overrides) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let scenario: Scenario = toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| line_of(&text, s.start)).unwrap_or(0);
        CliError::Config(format!("{}:{line}: {}", path.display(), e.message()))
    })?;
    let cfg_err = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let resolve = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));

    let e = &scenario.elements;
    let elements = EquinoctialElements {
        a: e.a_au * AU_M,
        p1: e.p1,
        p2: e.p2,
        q1: e.q1,
        q2: e.q2,
        ml_deg: e.ml_deg,
        epoch: Epoch::from_mjd_tdb(e.epoch_mjd),
    }
    .redated(e.offset_days);
    elements.validate().map_err(|e| cfg_err(e.to_string()))?;

    let eph_spec = ov.ephemeris.unwrap_or(&scenario.force.ephemeris);
    let eph_base = if ov.ephemeris.is_some() { PathBuf::from(".") } else { base.clone() };
    let ephemeris_source = parse_ephemeris(eph_spec, &eph_base).map_err(cfg_err)?;

    let perturbers = match &scenario.force.perturbers {
        None => Body::PERTURBERS.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Body>().map_err(|e| cfg_err(e.to_string())))
            .collect::<Result<_, _>>()?,
    };

    let i = &scenario.integrator;
    let integrator = IntegratorConfig {
        rel_tol: i.rel_tol,
        abs_tol_pos: i.abs_tol_pos_m,
        abs_tol_vel: i.abs_tol_vel_ms,
        max_step: i.max_step_days * 86_400.0,
        min_step: i.min_step_s,
        ..IntegratorConfig::default()
    };
    integrator.validate().map_err(|e| cfg_err(e.to_string()))?;

    let months = parse_months(ov.months.unwrap_or(&scenario.deflection.months)).map_err(cfg_err)?;
    let d = &scenario.deflection;
    ThrustLaw::new(d.f0_n, d.exponent, d.direction, Epoch::from_mjd_tdb(d.start_mjd), 0.0)
        .map_err(|e| cfg_err(e.to_string()))?;
    AsteroidBody::new(scenario.asteroid.diameter_m, scenario.asteroid.density_kgm3)
        .map_err(|e| cfg_err(e.to_string()))?;
    scenario.budget.propulsion.validate().map_err(|e| cfg_err(e.to_string()))?;
    if !(scenario.radius_km > 0.0 && scenario.radius_km <= 2000.0) {
        return Err(cfg_err(format!("radius_km {} outside (0, 2000]", scenario.radius_km)));
    }
    if !(scenario.dispersion.sigma_level > 0.0) {
        return Err(cfg_err("dispersion.sigma_level must be positive".into()));
    }
    let r = &scenario.risk;
    if !(r.window[0] < r.window[1]) || r.samples < 2 {
        return Err(cfg_err("risk.window must be increasing with at least 2 samples".into()));
    }
    let reanchor = match &scenario.reanchor {
        None => None,
        Some(s) => {
            if !(s.window[0] < s.window[1]) || s.lat.abs() > 90.0 {
                return Err(cfg_err("reanchor needs |lat| <= 90 and an increasing window".into()));
            }
            Some((GeodeticPoint::surface(s.lat, s.lon), (s.window[0], s.window[1])))
        }
    };

    let population = resolve(&scenario.rasters.population);
    let nightlight = resolve(&scenario.rasters.nightlight);
    let arcs = resolve(&scenario.budget.arcs);
    let r_profile = resolve(&scenario.budget.r_profile);
    if arcs.is_some() != r_profile.is_some() {
        return Err(cfg_err("budget.arcs and budget.r_profile go together".into()));
    }
    let mut inputs: Vec<&PathBuf> = [&population, &nightlight, &arcs, &r_profile].into_iter().flatten().collect();
    if let EphemerisSource::Table(p) = &ephemeris_source {
        inputs.push(p);
    }
    for p in inputs {
        if !p.is_file() {
            return Err(cfg_err(format!("input file {} does not exist", p.display())));
        }
    }

    Ok(Resolved {
        horizon: Epoch::from_mjd_tdb(scenario.force.horizon_mjd),
        config_path: path.to_path_buf(),
        elements,
        ephemeris_source,
        integrator,
        months,
        population,
        nightlight,
        arcs,
        r_profile,
        reanchor,
        perturbers,
        scenario,
    })
}

impl Resolved {
    pub fn force_model(&self) -> Result<ForceModelConfig, CliError> {
        let eph = Ephemeris::from_source(&self.ephemeris_source).map_err(|e| CliError::Config(e.to_string()))?;
        let f = ForceModelConfig {
            perturbers: self.perturbers.clone(),
            relativity: self.scenario.force.relativity,
            ..ForceModelConfig::full(eph)
        };
        f.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(f)
    }

    pub fn thrust_template(&self) -> ThrustLaw {
        let d = &self.scenario.deflection;
        ThrustLaw::new(d.f0_n, d.exponent, d.direction, Epoch::from_mjd_tdb(d.start_mjd), 0.0)
            .expect("validated at load")
    }

    pub fn covariance(&self) -> Result<CovarianceMatrix, CliError> {
        let epoch = Epoch::from_mjd_tdb(self.scenario.dispersion.rendezvous_mjd);
        match self.scenario.dispersion.sigmas {
            None => Ok(CovarianceMatrix {
                frame: CovarianceFrame::Frenet(epoch),
                ..table3_covariance()
            }),
            Some(v) => CovarianceMatrix::diagonal(v, CovarianceFrame::Frenet(epoch))
                .map_err(|e| CliError::Config(format!("dispersion.sigmas: {e}"))),
        }
    }

    pub fn month_list(&self) -> Vec<u32> {
        self.months.clone().collect()
    }
}
