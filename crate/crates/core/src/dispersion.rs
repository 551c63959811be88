//! Linear covariance propagation from the rendezvous date to impact and its
//! projection onto the Earth surface.

use nalgebra::{Matrix2x6, Matrix3, Matrix6, SymmetricEigen, Vector6};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dynamics::{propagate, ForceModelConfig, IntegratorConfig};
use crate::elements::StateVector;
use crate::error::{Error, Result};
use crate::impact::{impact_from_state, ImpactOutcome, ImpactRecord};
use crate::timeframes::{destination, enu_basis, geodetic_to_ecef, Epoch, GeodeticPoint};

/// Finite-difference position step along each Frenet axis (m).
pub const FD_POS_STEP_M: f64 = 1.0e4;
/// Finite-difference velocity step along each Frenet axis (m/s).
pub const FD_VEL_STEP_MS: f64 = 1.0e-3;
/// Spacing of covariance checkpoints (days).
pub const CHECKPOINT_DAYS: f64 = 30.0;
/// Number of times a Jacobian step is halved when a perturbed case misses.
pub const MAX_STEP_HALVINGS: usize = 4;

const PSD_TOL: f64 = 1e-9;

/// Frenet axes of a state: x along velocity, z along angular momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetFrame {
    pub origin: StateVector,
    /// Columns are the x, y, z axes in inertial components.
    pub axes: Matrix3<f64>,
}

impl FrenetFrame {
    pub fn new(s: &StateVector) -> Result<Self> {
        let h = s.r.cross(&s.v);
        if !(s.v.norm() > 0.0 && h.norm() > 0.0) {
            return Err(Error::Domain("Frenet frame needs non-collinear r and v".into()));
        }
        let x = s.v.normalize();
        let z = h.normalize();
        let y = z.cross(&x);
        Ok(FrenetFrame {
            origin: *s,
            axes: Matrix3::from_columns(&[x, y, z]),
        })
    }

    /// Block-diagonal map from Frenet state components to inertial ones.
    pub fn to_inertial(&self) -> Matrix6<f64> {
        let mut t = Matrix6::zeros();
        t.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.axes);
        t.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.axes);
        t
    }

    /// Inertial state displaced by `d` given in Frenet components.
    pub fn displaced(&self, d: &Vector6<f64>) -> StateVector {
        let dr = self.axes * d.fixed_rows::<3>(0);
        let dv = self.axes * d.fixed_rows::<3>(3);
        StateVector::new(self.origin.r + dr, self.origin.v + dv, self.origin.epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceFrame {
    Frenet(Epoch),
    Inertial(Epoch),
}

/// 6x6 state covariance (m^2, m^2/s, m^2/s^2 blocks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Matrix6<f64>,
    pub frame: CovarianceFrame,
}

impl CovarianceMatrix {
    /// Symmetrizes `m` and checks positive semidefiniteness.
    pub fn new(m: Matrix6<f64>, frame: CovarianceFrame) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("covariance has non-finite entries".into()));
        }
        let scale = m.abs().max();
        if (m - m.transpose()).abs().max() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let c = CovarianceMatrix {
            matrix: 0.5 * (m + m.transpose()),
            frame,
        };
        c.check_psd()?;
        Ok(c)
    }

    pub fn diagonal(sigmas: [f64; 6], frame: CovarianceFrame) -> Result<Self> {
        let v = Vector6::from_iterator(sigmas.iter().map(|s| s * s));
        Self::new(Matrix6::from_diagonal(&v), frame)
    }

    fn check_psd(&self) -> Result<()> {
        let trace = self.matrix.trace();
        let min_eig = SymmetricEigen::new(self.matrix).eigenvalues.min();
        if min_eig < -PSD_TOL * trace.abs() {
            return Err(Error::Conditioning { min_eig, trace });
        }
        Ok(())
    }

    pub fn epoch(&self) -> Epoch {
        match self.frame {
            CovarianceFrame::Frenet(e) | CovarianceFrame::Inertial(e) => e,
        }
    }

    /// Square root of the largest eigenvalue of the position block (m).
    pub fn largest_position_sigma(&self) -> f64 {
        let p: Matrix3<f64> = self.matrix.fixed_view::<3, 3>(0, 0).into_owned();
        SymmetricEigen::new(p).eigenvalues.max().max(0.0).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.matrix * k, self.frame)
    }
}

/// Post-rendezvous 1-sigma errors (3.6 km, 150 m, 400 m, 0.2 mm/s,
/// 0.01 mm/s, 0.05 mm/s) in Frenet axes at 2019-11-01.
pub fn table3_covariance() -> CovarianceMatrix {
    CovarianceMatrix::diagonal(
        [3600.0, 150.0, 400.0, 2e-4, 1e-5, 5e-5],
        CovarianceFrame::Frenet(Epoch::from_mjd_tdb(crate::deflection::DEFAULT_START_MJD)),
    )
    .expect("diagonal covariance is valid")
}

fn fd_steps() -> [f64; 6] {
    [FD_POS_STEP_M, FD_POS_STEP_M, FD_POS_STEP_M, FD_VEL_STEP_MS, FD_VEL_STEP_MS, FD_VEL_STEP_MS]
}

fn unit(k: usize, h: f64) -> Vector6<f64> {
    let mut d = Vector6::zeros();
    d[k] = h;
    d
}

/// Inertial state transition matrices Φ(t, t0) at each of `epochs`, from
/// central differences along the Frenet axes of `s0` (12 propagations).
pub fn stm_history(
    s0: &StateVector,
    epochs: &[Epoch],
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<Vec<Matrix6<f64>>> {
    let frame = FrenetFrame::new(s0)?;
    let Some(tf) = epochs
        .iter()
        .copied()
        .max_by(|a, b| a.seconds_since(s0.epoch).abs().total_cmp(&b.seconds_since(s0.epoch).abs()))
    else {
        return Ok(Vec::new());
    };
    let steps = fd_steps();
    let runs: Vec<(usize, f64)> = (0..6).flat_map(|k| [(k, 1.0), (k, -1.0)]).collect();
    let starts: Vec<StateVector> = runs
        .iter()
        .map(|&(k, sign)| frame.displaced(&unit(k, sign * steps[k])))
        .collect();
    let samples = runs
        .par_iter()
        .zip(&starts)
        .map(|(&(k, _), start)| {
            let wrap = |e: Error| Error::Perturbation {
                axis: k,
                source: Box::new(e),
            };
            let traj = propagate(start, tf, fcfg, icfg).map_err(wrap)?;
            epochs
                .iter()
                .map(|&e| traj.state_at(e).map(|s| Vector6::from_row_slice(&s.to_array())))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)
        })
        .collect::<Result<Vec<_>>>()?;
    // divide by the perturbations as actually represented, not the nominal steps
    let mut d0 = Matrix6::zeros();
    for k in 0..6 {
        let col = Vector6::from_row_slice(&starts[2 * k].to_array()) - Vector6::from_row_slice(&starts[2 * k + 1].to_array());
        d0.set_column(k, &col);
    }
    let d0_inv = d0
        .try_inverse()
        .ok_or_else(|| Error::numerical("state transition", "singular perturbation matrix"))?;
    Ok((0..epochs.len())
        .map(|i| {
            let mut df = Matrix6::zeros();
            for k in 0..6 {
                df.set_column(k, &(samples[2 * k][i] - samples[2 * k + 1][i]));
            }
            df * d0_inv
        })
        .collect())
}

/// Inertial Φ(tf, t0) by central finite differences.
pub fn state_transition(
    s0: &StateVector,
    tf: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<Matrix6<f64>> {
    Ok(stm_history(s0, &[tf], fcfg, icfg)?.remove(0))
}

/// Expresses a Frenet-frame covariance in inertial axes.
pub fn frenet_to_inertial(p0: &CovarianceMatrix, frame: &FrenetFrame) -> Result<CovarianceMatrix> {
    match p0.frame {
        CovarianceFrame::Inertial(_) => Ok(*p0),
        CovarianceFrame::Frenet(e) => {
            let t = frame.to_inertial();
            CovarianceMatrix::new(t * p0.matrix * t.transpose(), CovarianceFrame::Inertial(e))
        }
    }
}

/// P(t) = Φ P0 Φᵀ with `p0` expressed in inertial axes.
pub fn propagate_covariance(p0: &CovarianceMatrix, phi: &Matrix6<f64>, tf: Epoch) -> Result<CovarianceMatrix> {
    let CovarianceFrame::Inertial(_) = p0.frame else {
        return Err(Error::Domain("propagate_covariance expects an inertial covariance".into()));
    };
    let p = phi * p0.matrix * phi.transpose();
    CovarianceMatrix::new(0.5 * (p + p.transpose()), CovarianceFrame::Inertial(tf))
}

/// `t0`, then every [`CHECKPOINT_DAYS`] before `tf`, then `tf`.
pub fn checkpoint_epochs(t0: Epoch, tf: Epoch) -> Vec<Epoch> {
    let span = tf.mjd() - t0.mjd();
    let n = (span / CHECKPOINT_DAYS).ceil().max(0.0) as usize;
    let mut out: Vec<Epoch> = (0..n).map(|k| t0.add_days(CHECKPOINT_DAYS * k as f64)).collect();
    if out.last().map(|e| e.mjd() < tf.mjd()).unwrap_or(true) {
        out.push(tf);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaCheckpoint {
    pub epoch: Epoch,
    pub covariance: CovarianceMatrix,
    /// Largest 1-sigma position semi-axis (km).
    pub sigma_max_km: f64,
}

/// Covariance at 30-day checkpoints from `s0.epoch` to `tf`.
pub fn covariance_history(
    p0: &CovarianceMatrix,
    s0: &StateVector,
    tf: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<Vec<SigmaCheckpoint>> {
    let frame = FrenetFrame::new(s0)?;
    let p0i = frenet_to_inertial(p0, &frame)?;
    let epochs = checkpoint_epochs(s0.epoch, tf);
    let phis = stm_history(s0, &epochs, fcfg, icfg)?;
    epochs
        .iter()
        .zip(&phis)
        .map(|(&e, phi)| {
            let c = propagate_covariance(&p0i, phi, e)?;
            Ok(SigmaCheckpoint {
                epoch: e,
                covariance: c,
                sigma_max_km: c.largest_position_sigma() / 1e3,
            })
        })
        .collect()
}

/// CSV with columns `mjd_tdb,days,sigma_max_km`.
pub fn sigma_history_csv(history: &[SigmaCheckpoint]) -> String {
    let mut out = String::from("mjd_tdb,days,sigma_max_km\n");
    if let Some(first) = history.first() {
        for c in history {
            out.push_str(&format!(
                "{:.6},{:.6},{:.6}\n",
                c.epoch.mjd(),
                c.epoch.mjd() - first.epoch.mjd(),
                c.sigma_max_km
            ));
        }
    }
    out
}

/// Linearized impact-point map: (east km, north km) per Frenet deviation at t0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactJacobian {
    pub center: GeodeticPoint,
    pub jacobian: Matrix2x6<f64>,
    /// Steps finally used on each axis.
    pub steps: [f64; 6],
}

fn surface_offset_km(center: &GeodeticPoint, p: &GeodeticPoint) -> (f64, f64) {
    let (east, north, _) = enu_basis(center);
    let d = geodetic_to_ecef(p) - geodetic_to_ecef(center);
    (d.dot(&east) / 1e3, d.dot(&north) / 1e3)
}

/// Central-difference Jacobian of the impact point through the full
/// nonlinear propagation. Steps are halved (up to 4 times) on any axis whose
/// perturbed cases miss the Earth.
pub fn impact_jacobian(
    s0: &StateVector,
    nominal: &ImpactRecord,
    horizon: Epoch,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<ImpactJacobian> {
    let frame = FrenetFrame::new(s0)?;
    let center = nominal.point;
    let cols = (0..6)
        .into_par_iter()
        .map(|k| {
            let mut h = fd_steps()[k];
            for _ in 0..=MAX_STEP_HALVINGS {
                let hit = |sign: f64| -> Result<Option<(f64, f64)>> {
                    let s = frame.displaced(&unit(k, sign * h));
                    let out = impact_from_state(&s, horizon, fcfg, icfg).map_err(|e| Error::Perturbation {
                        axis: k,
                        source: Box::new(e),
                    })?;
                    Ok(match out {
                        ImpactOutcome::Impact(r) => Some(surface_offset_km(&center, &r.point)),
                        ImpactOutcome::Miss(_) => None,
                    })
                };
                if let (Some(p), Some(m)) = (hit(1.0)?, hit(-1.0)?) {
                    return Ok(((p.0 - m.0) / (2.0 * h), (p.1 - m.1) / (2.0 * h), h));
                }
                h *= 0.5;
            }
            Err(Error::Perturbation {
                axis: k,
                source: Box::new(Error::numerical(
                    "impact jacobian",
                    format!("perturbed cases miss the Earth after {MAX_STEP_HALVINGS} step halvings"),
                )),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut jacobian = Matrix2x6::zeros();
    let mut steps = [0.0; 6];
    for (k, (e, n, h)) in cols.into_iter().enumerate() {
        jacobian[(0, k)] = e;
        jacobian[(1, k)] = n;
        steps[k] = h;
    }
    Ok(ImpactJacobian {
        center,
        jacobian,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceEllipse {
    pub center: GeodeticPoint,
    pub semi_major_km: f64,
    pub semi_minor_km: f64,
    /// Major-axis azimuth, clockwise from north, in [0, 180).
    pub azimuth_deg: f64,
    pub sigma_level: f64,
}

impl SurfaceEllipse {
    pub fn area_km2(&self) -> f64 {
        std::f64::consts::PI * self.semi_major_km * self.semi_minor_km
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.semi_major_km / self.semi_minor_km
    }

    /// Closed polygon with `n` distinct vertices (lon, lat).
    pub fn polygon(&self, n: usize) -> Vec<[f64; 2]> {
        let az = self.azimuth_deg.to_radians();
        let (u_e, u_n) = (az.sin(), az.cos());
        let (w_e, w_n) = (az.cos(), -az.sin());
        let mut pts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (a, b) = (self.semi_major_km * t.cos(), self.semi_minor_km * t.sin());
                let (e, no) = (a * u_e + b * w_e, a * u_n + b * w_n);
                let p = destination(&self.center, e.atan2(no).to_degrees(), e.hypot(no));
                [p.lon_deg, p.lat_deg]
            })
            .collect();
        pts.push(pts[0]);
        pts
    }
}

/// Ellipse of C = J·P0·Jᵀ scaled by `sigma_level`; `p0` must be in the
/// Frenet axes the Jacobian was built in.
pub fn surface_ellipse(j: &ImpactJacobian, p0: &CovarianceMatrix, sigma_level: f64) -> Result<SurfaceEllipse> {
    let CovarianceFrame::Frenet(_) = p0.frame else {
        return Err(Error::Domain("surface ellipse expects a Frenet covariance".into()));
    };
    if !(sigma_level > 0.0) {
        return Err(Error::Domain("sigma level must be positive".into()));
    }
    let c = j.jacobian * p0.matrix * j.jacobian.transpose();
    let (a, b, d) = (c[(0, 0)], 0.5 * (c[(0, 1)] + c[(1, 0)]), c[(1, 1)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = ((mean + rad).max(0.0), (mean - rad).max(0.0));
    // angle of the major axis from east, counter-clockwise
    let phi = 0.5 * (2.0 * b).atan2(a - d);
    let azimuth = (90.0 - phi.to_degrees()).rem_euclid(180.0);
    Ok(SurfaceEllipse {
        center: j.center,
        semi_major_km: sigma_level * l1.sqrt(),
        semi_minor_km: sigma_level * l2.sqrt(),
        azimuth_deg: azimuth,
        sigma_level,
    })
}

/// Full projection: Jacobian through the impact map, then the ellipse.
pub fn impact_ellipse(
    p0: &CovarianceMatrix,
    s0: &StateVector,
    nominal: &ImpactRecord,
    horizon: Epoch,
    sigma_level: f64,
    fcfg: &ForceModelConfig,
    icfg: &IntegratorConfig,
) -> Result<SurfaceEllipse> {
    let j = impact_jacobian(s0, nominal, horizon, fcfg, icfg)?;
    surface_ellipse(&j, p0, sigma_level)
}

/// CSV row `lat,lon,smaj_km,smin_km,azimuth_deg,sigma` under a header.
pub fn ellipse_csv(e: &SurfaceEllipse) -> String {
    format!(
        "lat,lon,smaj_km,smin_km,azimuth_deg,sigma\n{:.6},{:.6},{:.6},{:.6},{:.4},{}\n",
        e.center.lat_deg, e.center.lon_deg, e.semi_major_km, e.semi_minor_km, e.azimuth_deg, e.sigma_level
    )
}

/// GeoJSON Feature with a 64-vertex polygon.
pub fn ellipse_geojson(e: &SurfaceEllipse) -> Value {
    let ring: Vec<[f64; 2]> = e
        .polygon(64)
        .into_iter()
        .map(|[lon, lat]| [(lon * 1e6).round() / 1e6, (lat * 1e6).round() / 1e6])
        .collect();
    json!({
        "type": "Feature",
        "properties": {
            "center_lat": e.center.lat_deg,
            "center_lon": e.center.lon_deg,
            "smaj_km": e.semi_major_km,
            "smin_km": e.semi_minor_km,
            "azimuth_deg": e.azimuth_deg,
            "sigma": e.sigma_level,
        },
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    })
}
