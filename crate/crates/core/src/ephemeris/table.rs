use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::interp::{lagrange_derivative_weights, lagrange_weights};
use super::Body;
use crate::elements::StateVector;
use crate::error::{Error, Result};
use crate::timeframes::{Epoch, Vec3, SECONDS_PER_DAY};

pub const TABLE_HEADER: [&str; 8] = ["body", "mjd_tdb", "x_m", "y_m", "z_m", "vx_ms", "vy_ms", "vz_ms"];

const ORDER: usize = 8;

/// Tabulated heliocentric states of one body.
#[derive(Debug, Clone)]
pub struct EphemerisTable {
    body: Body,
    samples: Vec<StateVector>,
}

impl EphemerisTable {
    pub fn new(body: Body, samples: Vec<StateVector>) -> Result<Self> {
        if samples.len() < ORDER + 1 {
            return Err(Error::Domain(format!(
                "{body}: table needs at least {} samples, got {}",
                ORDER + 1,
                samples.len()
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].epoch.mjd() <= w[0].epoch.mjd() {
                return Err(Error::Domain(format!("{body}: epochs not strictly increasing at sample {}", i + 1)));
            }
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("{body}: non-finite state at sample {i}")));
        }
        Ok(EphemerisTable { body, samples })
    }

    pub fn body(&self) -> Body {
        self.body
    }

    pub fn samples(&self) -> &[StateVector] {
        &self.samples
    }

    pub fn span(&self) -> (Epoch, Epoch) {
        (self.samples[0].epoch, self.samples[self.samples.len() - 1].epoch)
    }

    fn window(&self, epoch: Epoch) -> Result<(&[StateVector], Vec<f64>, f64)> {
        let (first, last) = self.span();
        let t = epoch.mjd();
        if !(first.mjd()..=last.mjd()).contains(&t) {
            return Err(Error::Range {
                epoch: t,
                first: first.mjd(),
                last: last.mjd(),
            });
        }
        let n = self.samples.len();
        let k = self.samples.partition_point(|s| s.epoch.mjd() <= t);
        let start = k.saturating_sub(ORDER / 2 + 1).min(n - ORDER - 1);
        let win = &self.samples[start..start + ORDER + 1];
        let t0 = win[0].epoch.mjd();
        let xs = win.iter().map(|s| s.epoch.mjd() - t0).collect();
        Ok((win, xs, t - t0))
    }

    pub fn position(&self, epoch: Epoch) -> Result<Vec3> {
        let (win, xs, x) = self.window(epoch)?;
        let w = lagrange_weights(&xs, x);
        Ok(win.iter().zip(w).fold(Vec3::zeros(), |acc, (s, w)| acc + s.r * w))
    }

    /// Position and velocity interpolated independently from the tabulated columns.
    pub fn state(&self, epoch: Epoch) -> Result<StateVector> {
        let (win, xs, x) = self.window(epoch)?;
        let w = lagrange_weights(&xs, x);
        let r = win.iter().zip(&w).fold(Vec3::zeros(), |acc, (s, w)| acc + s.r * *w);
        let v = win.iter().zip(&w).fold(Vec3::zeros(), |acc, (s, w)| acc + s.v * *w);
        Ok(StateVector::new(r, v, epoch))
    }

    /// Velocity from the derivative of the position interpolant.
    pub fn position_derivative(&self, epoch: Epoch) -> Result<Vec3> {
        let (win, xs, x) = self.window(epoch)?;
        let dw = lagrange_derivative_weights(&xs, x);
        Ok(win.iter().zip(dw).fold(Vec3::zeros(), |acc, (s, w)| acc + s.r * w) / SECONDS_PER_DAY)
    }
}

/// Loads every body present in a CSV table file.
pub fn load_ephemeris_tables(path: impl AsRef<Path>) -> Result<Vec<EphemerisTable>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::format(path, 1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != TABLE_HEADER {
        return Err(Error::format(path, 1, format!("expected header {}", TABLE_HEADER.join(","))));
    }
    let mut by_body: BTreeMap<Body, Vec<(usize, StateVector)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::format(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let body: Body = rec[0].parse().map_err(|e: Error| Error::format(path, line, e.to_string()))?;
        let mut vals = [0.0f64; 7];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = rec[k + 1]
                .parse()
                .map_err(|_| Error::format(path, line, format!("column {}: invalid number '{}'", TABLE_HEADER[k + 1], &rec[k + 1])))?;
            if !v.is_finite() {
                return Err(Error::format(path, line, format!("column {}: non-finite value", TABLE_HEADER[k + 1])));
            }
        }
        let epoch = Epoch::from_mjd_tdb(vals[0]);
        let state = StateVector::new(
            Vec3::new(vals[1], vals[2], vals[3]),
            Vec3::new(vals[4], vals[5], vals[6]),
            epoch,
        );
        let rows = by_body.entry(body).or_default();
        if let Some((prev_line, prev)) = rows.last() {
            if epoch.mjd() == prev.epoch.mjd() {
                return Err(Error::format(path, line, format!("duplicate epoch {} for {body} (row at line {prev_line})", epoch.mjd())));
            }
            if epoch.mjd() < prev.epoch.mjd() {
                return Err(Error::format(path, line, format!("epoch {} for {body} not increasing", epoch.mjd())));
            }
        }
        rows.push((line, state));
    }
    if by_body.is_empty() {
        return Err(Error::format(path, 1, "no data rows"));
    }
    by_body
        .into_iter()
        .map(|(body, rows)| {
            let last_line = rows.last().map(|r| r.0).unwrap_or(1);
            EphemerisTable::new(body, rows.into_iter().map(|r| r.1).collect())
                .map_err(|e| Error::format(path, last_line, e.to_string()))
        })
        .collect()
}

/// Loads a single-body table; multi-body files are rejected.
pub fn load_ephemeris_table(path: impl AsRef<Path>) -> Result<EphemerisTable> {
    let path = path.as_ref();
    let mut tables = load_ephemeris_tables(path)?;
    if tables.len() != 1 {
        return Err(Error::format(path, 1, format!("expected one body, found {}", tables.len())));
    }
    Ok(tables.remove(0))
}

pub fn write_ephemeris_csv(mut out: impl Write, tables: &[EphemerisTable]) -> std::io::Result<()> {
    writeln!(out, "{}", TABLE_HEADER.join(","))?;
    for t in tables {
        for s in &t.samples {
            writeln!(
                out,
                "{},{:.10},{:e},{:e},{:e},{:e},{:e},{:e}",
                t.body, s.epoch.mjd(), s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z
            )?;
        }
    }
    Ok(())
}
