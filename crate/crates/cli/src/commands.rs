use std::path::Path;

use slowpush_core::budget::{deflection_propellant, load_schedule, mass_history, mass_history_csv, r_profile_of};
use slowpush_core::deflection::{deflection_sweep, deflection_track_csv, deflection_track_geojson, MONTH_DAYS};
use slowpush_core::dispersion::{
    covariance_history, ellipse_csv, ellipse_geojson, impact_ellipse, sigma_history_csv,
};
use slowpush_core::dynamics::{propagate, ForceModelConfig, IntegratorConfig};
use slowpush_core::elements::{equinoctial_to_cartesian, EquinoctialElements, StateVector};
use slowpush_core::ephemeris::GM_SUN;
use slowpush_core::exposure::{damage_series_csv, load_nightlight, load_population_grid, score_track};
use slowpush_core::impact::{
    impact_from_state, reanchor_epoch, risk_corridor, risk_path_csv, risk_path_geojson, ImpactOutcome,
    ImpactRecord, ReanchorOptions,
};
use slowpush_core::timeframes::{Epoch, GeodeticPoint};
use slowpush_core::Error;

use crate::config::Resolved;
use crate::output::Outputs;
use crate::CliError;

/// What a command produced: its files and whether the scenario missed.
pub struct Report {
    pub outputs: Outputs,
    pub miss: Option<String>,
}

impl From<Outputs> for Report {
    fn from(outputs: Outputs) -> Self {
        Report { outputs, miss: None }
    }
}

struct Setup {
    force: ForceModelConfig,
    integ: IntegratorConfig,
    elements: EquinoctialElements,
    offset_days: f64,
    s0: StateVector,
}

fn setup(res: &Resolved) -> Result<Setup, CliError> {
    let force = res.force_model()?;
    let integ = res.integrator;
    let mut elements = res.elements;
    let mut offset_days = res.scenario.elements.offset_days;
    if let Some((target, window)) = res.reanchor {
        let opts = ReanchorOptions {
            horizon: res.horizon,
            ..ReanchorOptions::default()
        };
        let r = reanchor_epoch(&elements, &target, window, &force, &integ, &opts)?;
        eprintln!(
            "re-anchored epoch by {:+.7} d: impact {:.1} km from target",
            r.offset_days, r.distance_km
        );
        elements = elements.redated(r.offset_days);
        offset_days += r.offset_days;
    }
    let s0 = equinoctial_to_cartesian(&elements, GM_SUN)?;
    Ok(Setup {
        force,
        integ,
        elements,
        offset_days,
        s0,
    })
}

const IMPACT_HEADER: &str = "epoch_tdb_mjd,epoch_utc_mjd,utc,lat,lon,speed_kms,incidence_deg,inertial_speed_kms,offset_days\n";

fn impact_csv(r: &ImpactRecord, offset_days: f64) -> String {
    format!(
        "{IMPACT_HEADER}{:.9},{:.9},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.9}\n",
        r.epoch.mjd(),
        r.epoch_utc_mjd(),
        r.epoch.to_utc().iso(),
        r.point.lat_deg,
        r.point.lon_deg,
        r.speed_kms,
        r.incidence_deg,
        r.inertial_speed_kms,
        offset_days
    )
}

fn trajectory_csv(states: &[StateVector]) -> String {
    let mut out = String::from("mjd_tdb,x_m,y_m,z_m,vx_ms,vy_ms,vz_ms\n");
    for s in states {
        out.push_str(&format!(
            "{:.9},{:.6},{:.6},{:.6},{:.9},{:.9},{:.9}\n",
            s.epoch.mjd(),
            s.r.x,
            s.r.y,
            s.r.z,
            s.v.x,
            s.v.y,
            s.v.z
        ));
    }
    out
}

pub fn propagate_cmd(res: &Resolved) -> Result<Report, CliError> {
    let su = setup(res)?;
    // split at the thrust start exactly as the deflection sweep does, so
    // both report the same undeflected point
    let split = res.thrust_template().start;
    let from = if split.mjd() > su.s0.epoch.mjd() && split.mjd() < res.horizon.mjd() {
        propagate(&su.s0, split, &su.force, &su.integ)?.final_state()
    } else {
        su.s0
    };
    let outcome = impact_from_state(&from, res.horizon, &su.force, &su.integ)?;
    let end = match &outcome {
        ImpactOutcome::Impact(r) => r.epoch,
        ImpactOutcome::Miss(_) => res.horizon,
    };
    let traj = propagate(&su.s0, end, &su.force, &su.integ)?;
    let mut out = Outputs::default();
    out.add("trajectory.csv", trajectory_csv(&traj.sample(1.0)));
    let miss = match outcome {
        ImpactOutcome::Impact(r) => {
            eprintln!(
                "impact {} at {} ({:.2} km/s, {:.1} deg)",
                r.epoch.to_utc().iso(),
                r.point,
                r.speed_kms,
                r.incidence_deg
            );
            out.add("impact.csv", impact_csv(&r, su.offset_days));
            None
        }
        ImpactOutcome::Miss(m) => {
            out.add(
                "closest_approach.csv",
                format!("epoch_tdb_mjd,distance_km\n{:.9},{:.3}\n", m.epoch.mjd(), m.distance_km),
            );
            Some(format!("closest approach {:.0} km at MJD {:.4}", m.distance_km, m.epoch.mjd()))
        }
    };
    Ok(Report { outputs: out, miss })
}

pub fn risk_cmd(res: &Resolved) -> Result<Report, CliError> {
    let su = setup(res)?;
    let r = &res.scenario.risk;
    let path = risk_corridor(
        &su.elements,
        (r.window[0], r.window[1]),
        r.samples,
        r.bisections,
        res.horizon,
        &su.force,
        &su.integ,
    )?;
    let mut out = Outputs::default();
    out.add("riskpath.csv", risk_path_csv(&path)?);
    out.add_json("riskpath.geojson", &risk_path_geojson(&path));
    eprintln!("{} of {} samples impact", path.impacts().count(), path.samples.len());
    Ok(out.into())
}

fn state_at(su: &Setup, epoch: Epoch) -> Result<StateVector, CliError> {
    if epoch.mjd() < su.s0.epoch.mjd() {
        return Err(CliError::Config(format!(
            "epoch {} precedes the element epoch {}",
            epoch.mjd(),
            su.s0.epoch.mjd()
        )));
    }
    Ok(propagate(&su.s0, epoch, &su.force, &su.integ)?.final_state())
}

pub fn dispersion_cmd(res: &Resolved) -> Result<Report, CliError> {
    let su = setup(res)?;
    let p0 = res.covariance()?;
    let s_rv = state_at(&su, Epoch::from_mjd_tdb(res.scenario.dispersion.rendezvous_mjd))?;
    let nominal = match impact_from_state(&s_rv, res.horizon, &su.force, &su.integ)? {
        ImpactOutcome::Impact(r) => r,
        ImpactOutcome::Miss(m) => return Err(Error::NoImpact { distance_km: m.distance_km }.into()),
    };
    let history = covariance_history(&p0, &s_rv, nominal.epoch, &su.force, &su.integ)?;
    let ellipse = impact_ellipse(
        &p0,
        &s_rv,
        &nominal,
        res.horizon,
        res.scenario.dispersion.sigma_level,
        &su.force,
        &su.integ,
    )?;
    let mut out = Outputs::default();
    out.add("sigma_history.csv", sigma_history_csv(&history));
    out.add("ellipse.csv", ellipse_csv(&ellipse));
    out.add_json("ellipse.geojson", &ellipse_geojson(&ellipse));
    if let Some(last) = history.last() {
        eprintln!(
            "final 1-sigma {:.1} km; ellipse {:.1} x {:.2} km at {:.1} deg",
            last.sigma_max_km, ellipse.semi_major_km, ellipse.semi_minor_km, ellipse.azimuth_deg
        );
    }
    Ok(out.into())
}

pub fn deflect_cmd(res: &Resolved) -> Result<Report, CliError> {
    let su = setup(res)?;
    let track = deflection_sweep(
        &su.s0,
        &res.scenario.asteroid,
        &res.thrust_template(),
        &res.month_list(),
        res.horizon,
        &su.force,
        &su.integ,
    )?;
    let mut out = Outputs::default();
    out.add("deflection_track.csv", deflection_track_csv(&track));
    out.add_json("deflection_track.geojson", &deflection_track_geojson(&track));
    Ok(out.into())
}

fn require(dir: &Path, name: &str, command: &'static str) -> Result<std::path::PathBuf, CliError> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::MissingInput {
            file: p.display().to_string(),
            command,
        })
    }
}

fn read_rows(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), CliError> {
    let bad = |e: csv::Error| CliError::Internal(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(bad)?;
    let header = rdr.headers().map_err(bad)?.clone();
    let rows = rdr.records().collect::<Result<Vec<_>, _>>().map_err(bad)?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Internal(format!("{}: no column '{name}'", path.display())))
}

fn number(s: &str, path: &Path) -> Result<f64, CliError> {
    s.parse()
        .map_err(|_| CliError::Internal(format!("{}: bad number '{s}'", path.display())))
}

pub fn damage_cmd(res: &Resolved, out_dir: &Path) -> Result<Report, CliError> {
    let (Some(pop_path), Some(light_path)) = (&res.population, &res.nightlight) else {
        return Err(CliError::Config("damage needs rasters.population and rasters.nightlight".into()));
    };
    let impact_path = require(out_dir, "impact.csv", "propagate")?;
    let track_path = require(out_dir, "deflection_track.csv", "deflect")?;
    let input = |e: Error| CliError::Config(e.to_string());
    let pop = load_population_grid(pop_path).map_err(input)?;
    let light = load_nightlight(light_path).map_err(input)?;

    let (h, rows) = read_rows(&impact_path)?;
    let row = rows
        .first()
        .ok_or_else(|| CliError::Internal(format!("{}: no impact row", impact_path.display())))?;
    let (ilat, ilon) = (column(&h, "lat", &impact_path)?, column(&h, "lon", &impact_path)?);
    let undeflected = GeodeticPoint::surface(number(&row[ilat], &impact_path)?, number(&row[ilon], &impact_path)?);

    let (h, rows) = read_rows(&track_path)?;
    let (im, ilat, ilon) = (
        column(&h, "months", &track_path)?,
        column(&h, "lat", &track_path)?,
        column(&h, "lon", &track_path)?,
    );
    let mut points = Vec::with_capacity(rows.len());
    for r in &rows {
        let months: u32 = r[im]
            .parse()
            .map_err(|_| CliError::Internal(format!("{}: bad months '{}'", track_path.display(), &r[im])))?;
        let p = if r[ilat].is_empty() {
            None
        } else {
            Some(GeodeticPoint::surface(number(&r[ilat], &track_path)?, number(&r[ilon], &track_path)?))
        };
        points.push((months, p));
    }
    let series = score_track(&points, &undeflected, &pop, &light, res.scenario.radius_km)?;
    let best = &series.rows[series.best];
    eprintln!(
        "least exposed duration: {} months, hci {:.4}",
        best.months, best.indexes.hci
    );
    let mut out = Outputs::default();
    out.add("damage_series.csv", damage_series_csv(&series));
    Ok(out.into())
}

pub fn budget_cmd(res: &Resolved) -> Result<Report, CliError> {
    let su = setup(res)?;
    let b = &res.scenario.budget;
    let mut out = Outputs::default();
    if let (Some(arcs), Some(prof)) = (&res.arcs, &res.r_profile) {
        let schedule = load_schedule(arcs, prof).map_err(|e| CliError::Config(e.to_string()))?;
        let h = mass_history(&schedule, &b.propulsion)?;
        eprintln!("interplanetary propellant {:.1} kg, final mass {:.1} kg", h.propellant_kg, h.final_mass());
        out.add("mass_history.csv", mass_history_csv(&h));
    }
    let law = res.thrust_template();
    let max_months = *res.months.end();
    let end = law.start.add_days(max_months as f64 * MONTH_DAYS + 1.0);
    let traj = propagate(&su.s0, end, &su.force, &su.integ)?;
    let prof = r_profile_of(&traj, 1.0);
    let mut csv = String::from("months,single_kg,dual_kg,available_kg,exceeded\n");
    for m in res.months.clone() {
        let d = deflection_propellant(m, &law.for_months(m), &prof, &b.deflection)?;
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.3},{}\n",
            d.months, d.single_kg, d.dual_kg, d.available_kg, d.exceeded
        ));
    }
    out.add("deflection_budget.csv", csv);
    Ok(out.into())
}
