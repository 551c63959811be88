//! Population and nightlight rasters, disc integrals over the radius of
//! action, and the casualty (HCI) and infrastructure (IDI) damage indexes.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeframes::{great_circle_km, GeodeticPoint, MEAN_EARTH_RADIUS_KM};

/// Default radius of action (km).
pub const DEFAULT_RADIUS_KM: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RasterKind {
    /// Persons per km^2.
    Population,
    /// Quantized light intensity 0..=100 per unit area.
    Nightlight,
}

/// North-up equirectangular grid with square cells. Row 0 is the northern
/// edge; absent cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoRaster {
    pub n_lon: usize,
    pub n_lat: usize,
    /// Western edge of column 0 (deg).
    pub lon0: f64,
    /// Northern edge of row 0 (deg).
    pub lat0: f64,
    pub cell_deg: f64,
    pub nodata: Option<f64>,
    pub values: Vec<f64>,
    pub kind: RasterKind,
}

impl GeoRaster {
    pub fn new(
        n_lon: usize,
        n_lat: usize,
        lon0: f64,
        lat0: f64,
        cell_deg: f64,
        values: Vec<f64>,
        kind: RasterKind,
    ) -> Result<Self> {
        let r = GeoRaster {
            n_lon,
            n_lat,
            lon0,
            lat0,
            cell_deg,
            nodata: None,
            values,
            kind,
        };
        r.validate()?;
        Ok(r)
    }

    /// Raster whose cell values come from `f(lat, lon)` at cell centers.
    pub fn from_fn(
        n_lon: usize,
        n_lat: usize,
        lon0: f64,
        lat0: f64,
        cell_deg: f64,
        kind: RasterKind,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n_lon * n_lat);
        for i in 0..n_lat {
            for j in 0..n_lon {
                let (lat, lon) = (lat0 - (i as f64 + 0.5) * cell_deg, lon0 + (j as f64 + 0.5) * cell_deg);
                values.push(f(lat, lon));
            }
        }
        Self::new(n_lon, n_lat, lon0, lat0, cell_deg, values, kind)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_deg > 0.0) || self.n_lon == 0 || self.n_lat == 0 {
            return Err(Error::Domain("raster needs positive cell size and dimensions".into()));
        }
        if self.values.len() != self.n_lon * self.n_lat {
            return Err(Error::Domain(format!(
                "raster holds {} values for {}x{} cells",
                self.values.len(),
                self.n_lon,
                self.n_lat
            )));
        }
        let eps = 1e-9 * self.cell_deg;
        if self.n_lon as f64 * self.cell_deg > 360.0 + eps
            || self.n_lat as f64 * self.cell_deg > 180.0 + eps
            || self.lat0 > 90.0 + eps
            || self.lat0 - self.n_lat as f64 * self.cell_deg < -90.0 - eps
        {
            return Err(Error::Domain("raster spans more than the globe".into()));
        }
        if self.kind == RasterKind::Nightlight
            && self
                .values
                .iter()
                .any(|v| !v.is_nan() && !(v.fract() == 0.0 && (0.0..=100.0).contains(v)))
        {
            return Err(Error::Domain("nightlight values must be integers in [0, 100]".into()));
        }
        Ok(())
    }

    /// True when the columns wrap all the way around in longitude.
    pub fn is_global_lon(&self) -> bool {
        (self.n_lon as f64 * self.cell_deg - 360.0).abs() < 1e-9 * self.cell_deg
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.n_lon + col];
        (!v.is_nan()).then_some(v)
    }

    pub fn scaled(&self, k: f64) -> GeoRaster {
        GeoRaster {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }

    /// Copy with columns rotated by `k` cells: the value at column j moves to
    /// column j + k. Only meaningful for globe-wrapping rasters.
    pub fn rolled(&self, k: isize) -> GeoRaster {
        let n = self.n_lon as isize;
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.n_lat {
            for j in 0..self.n_lon {
                let dst = (j as isize + k).rem_euclid(n) as usize;
                values[i * self.n_lon + dst] = self.values[i * self.n_lon + j];
            }
        }
        GeoRaster { values, ..self.clone() }
    }

    fn covers(&self, p: &GeodeticPoint) -> bool {
        let south = self.lat0 - self.n_lat as f64 * self.cell_deg;
        if p.lat_deg > self.lat0 || p.lat_deg < south {
            return false;
        }
        self.is_global_lon() || (p.lon_deg - self.lon0).rem_euclid(360.0) <= self.n_lon as f64 * self.cell_deg
    }

    /// Writes the raster as an ESRI ASCII grid.
    pub fn to_esri_ascii(&self) -> String {
        let nodata = self.nodata.unwrap_or(-9999.0);
        let mut out = format!(
            "ncols {}\nnrows {}\nxllcorner {}\nyllcorner {}\ncellsize {}\nNODATA_value {}\n",
            self.n_lon,
            self.n_lat,
            self.lon0,
            self.lat0 - self.n_lat as f64 * self.cell_deg,
            self.cell_deg,
            nodata
        );
        for row in self.values.chunks(self.n_lon) {
            let line: Vec<String> = row
                .iter()
                .map(|v| if v.is_nan() { nodata.to_string() } else { v.to_string() })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn parse_esri_ascii(text: &str, path: &Path) -> Result<GeoRaster> {
    let mut header: Vec<(String, f64)> = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            break;
        }
        let (n, line) = lines.next().unwrap();
        let value = parts
            .next()
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::format(path, n + 1, format!("header key '{key}' lacks a numeric value")))?;
        if parts.next().is_some() {
            return Err(Error::format(path, n + 1, format!("unexpected tokens in header line '{line}'")));
        }
        header.push((key.to_ascii_lowercase(), value));
    }
    let get = |k: &str| header.iter().find(|(key, _)| key == k).map(|(_, v)| *v);
    let need = |k: &str| get(k).ok_or_else(|| Error::format(path, header.len() + 1, format!("missing header key '{k}'")));
    let ncols = need("ncols")?;
    let nrows = need("nrows")?;
    let cell = need("cellsize")?;
    if ncols.fract() != 0.0 || nrows.fract() != 0.0 || ncols < 1.0 || nrows < 1.0 {
        return Err(Error::format(path, 1, "ncols and nrows must be positive integers"));
    }
    let (ncols, nrows) = (ncols as usize, nrows as usize);
    let xll = match (get("xllcorner"), get("xllcenter")) {
        (Some(x), _) => x,
        (None, Some(x)) => x - 0.5 * cell,
        _ => return Err(Error::format(path, header.len() + 1, "missing header key 'xllcorner'")),
    };
    let yll = match (get("yllcorner"), get("yllcenter")) {
        (Some(y), _) => y,
        (None, Some(y)) => y - 0.5 * cell,
        _ => return Err(Error::format(path, header.len() + 1, "missing header key 'yllcorner'")),
    };
    let nodata = get("nodata_value");
    let mut values = Vec::with_capacity(ncols * nrows);
    for (n, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::format(path, n + 1, format!("bad value '{tok}'")))?;
            if values.len() == ncols * nrows {
                return Err(Error::format(path, n + 1, format!("more than {} values", ncols * nrows)));
            }
            if Some(v) == nodata {
                values.push(f64::NAN);
            } else if !(v.is_finite() && v >= 0.0) {
                return Err(Error::format(path, n + 1, format!("negative or non-finite density {v}")));
            } else {
                values.push(v);
            }
        }
    }
    if values.len() != ncols * nrows {
        return Err(Error::format(
            path,
            text.lines().count(),
            format!("header declares {} values, found {}", ncols * nrows, values.len()),
        ));
    }
    let r = GeoRaster {
        n_lon: ncols,
        n_lat: nrows,
        lon0: xll,
        lat0: yll + nrows as f64 * cell,
        cell_deg: cell,
        nodata,
        values,
        kind: RasterKind::Population,
    };
    r.validate().map_err(|e| Error::format(path, 1, e.to_string()))?;
    Ok(r)
}

/// Reads a population-density grid in ESRI ASCII format.
pub fn load_population_grid(path: impl AsRef<Path>) -> Result<GeoRaster> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_esri_ascii(&text, path)
}

/// Maps an 8-bit gray level to the 0..=100 scale.
pub fn quantize_gray(v: u8) -> f64 {
    (v as f64 * 100.0 / 255.0).round()
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GeoRaster> {
    // header: magic, width, height, maxval; '#' comments run to end of line
    let mut pos = 0;
    let mut line = 1;
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                if bytes[pos] == b'\n' {
                    line += 1;
                }
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, line, "truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let binary = match tokens[0].as_str() {
        "P5" => true,
        "P2" => false,
        m => return Err(Error::format(path, 1, format!("not a PGM file (magic '{m}')"))),
    };
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::format(path, line, format!("bad {what} '{s}'")))
    };
    let (w, h, maxval) = (num(&tokens[1], "width")?, num(&tokens[2], "height")?, num(&tokens[3], "maxval")?);
    if maxval != 255 {
        return Err(Error::format(path, line, format!("maxval {maxval} unsupported, expected 255")));
    }
    if w == 0 || h == 0 || w != 2 * h {
        return Err(Error::format(
            path,
            line,
            format!("image {w}x{h} is not 2:1 and cannot be registered as a full-globe equirectangular grid"),
        ));
    }
    let n = w * h;
    let values: Vec<f64> = if binary {
        // exactly one whitespace byte separates maxval from the raster
        let data = &bytes[(pos + 1).min(bytes.len())..];
        if data.len() < n {
            return Err(Error::format(path, line, format!("expected {n} pixel bytes, found {}", data.len())));
        }
        data[..n].iter().map(|&v| quantize_gray(v)).collect()
    } else {
        let text = String::from_utf8_lossy(&bytes[pos..]);
        let mut out = Vec::with_capacity(n);
        for (k, l) in text.lines().enumerate() {
            let l = l.split('#').next().unwrap_or("");
            for tok in l.split_whitespace() {
                let v: u16 = tok
                    .parse()
                    .map_err(|_| Error::format(path, line + k, format!("bad pixel '{tok}'")))?;
                if v > 255 {
                    return Err(Error::format(path, line + k, format!("pixel {v} exceeds maxval")));
                }
                out.push(quantize_gray(v as u8));
            }
        }
        if out.len() != n {
            return Err(Error::format(path, line, format!("expected {n} pixels, found {}", out.len())));
        }
        out
    };
    Ok(GeoRaster {
        n_lon: w,
        n_lat: h,
        lon0: -180.0,
        lat0: 90.0,
        cell_deg: 360.0 / w as f64,
        nodata: None,
        values,
        kind: RasterKind::Nightlight,
    })
}

/// Reads a full-globe nightlight image (PGM, P5 or P2, maxval 255).
pub fn load_nightlight(path: impl AsRef<Path>) -> Result<GeoRaster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

/// Binary PGM of 8-bit gray levels, row 0 at the top.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscIntegral {
    /// Sum of value times cell area (persons, or intensity km^2).
    pub integral: f64,
    /// Area of the included cells (km^2).
    pub area_km2: f64,
}

/// Integral of the raster over the disc of great-circle radius `radius_km`
/// around `center`. Cells count when their centers lie inside the disc.
pub fn disc_integral(raster: &GeoRaster, center: &GeodeticPoint, radius_km: f64) -> Result<DiscIntegral> {
    if !(radius_km > 0.0 && radius_km <= 2000.0) {
        return Err(Error::Domain(format!("radius {radius_km} km outside (0, 2000]")));
    }
    if !raster.covers(center) {
        return Err(Error::Coverage {
            lat: center.lat_deg,
            lon: center.lon_deg,
        });
    }
    let c = raster.cell_deg;
    let k = (std::f64::consts::PI / 180.0 * MEAN_EARTH_RADIUS_KM * c).powi(2);
    let d = radius_km / MEAN_EARTH_RADIUS_KM;
    let dlat = d.to_degrees();
    let (phic, lamc) = (center.lat_deg.to_radians(), center.lon_deg);
    let row_of = |lat: f64| ((raster.lat0 - lat) / c).floor();
    let r_lo = row_of(center.lat_deg + dlat).max(0.0) as usize;
    let r_hi = (row_of(center.lat_deg - dlat).min(raster.n_lat as f64 - 1.0)).max(0.0) as usize;
    // column of the cell containing the center, and its offset inside it
    let col_pos = (lamc - raster.lon0).rem_euclid(360.0) / c;
    let c0 = col_pos.floor() as isize;
    let global = raster.is_global_lon();
    let n = raster.n_lon as isize;
    let mut total = 0.0;
    let mut area = 0.0;
    for row in r_lo..=r_hi {
        let lat = raster.lat0 - (row as f64 + 0.5) * c;
        let phi = lat.to_radians();
        let cos_dl = (d.cos() - phic.sin() * phi.sin()) / (phic.cos() * phi.cos());
        let half = if cos_dl <= -1.0 || !cos_dl.is_finite() {
            180.0
        } else if cos_dl > 1.0 {
            continue;
        } else {
            cos_dl.acos().to_degrees()
        };
        let span = (half / c).ceil() as isize + 1;
        // a full row visits every column exactly once, in an order fixed
        // relative to the center column
        let (lo, hi) = if global && 2 * span + 1 >= n { (-(n / 2), n - n / 2 - 1) } else { (-span, span) };
        let cell_area = k * phi.cos();
        for dj in lo..=hi {
            let j = c0 + dj;
            let col = if global {
                j.rem_euclid(n)
            } else if (0..n).contains(&j) {
                j
            } else {
                continue;
            };
            let Some(v) = raster.get(row, col as usize) else { continue };
            let lon = lamc + (dj as f64 + 0.5 - col_pos.fract()) * c;
            let p = GeodeticPoint::surface(lat, lon);
            if great_circle_km(center, &p) <= radius_km {
                total += v * cell_area;
                area += cell_area;
            }
        }
    }
    Ok(DiscIntegral { integral: total, area_km2: area })
}

/// Damage at one impact point relative to the undeflected one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DamageIndexes {
    pub hci: f64,
    /// None when the undeflected light integral is zero.
    pub idi: Option<f64>,
    pub population: f64,
    pub light_integral: f64,
}

/// Rasters, radius and the undeflected reference integrals.
#[derive(Debug, Clone)]
pub struct DamageScorer<'a> {
    pub population: &'a GeoRaster,
    pub nightlight: &'a GeoRaster,
    pub radius_km: f64,
    pub p0: f64,
    pub l0: f64,
}

impl<'a> DamageScorer<'a> {
    pub fn new(pop: &'a GeoRaster, light: &'a GeoRaster, undeflected: &GeodeticPoint, radius_km: f64) -> Result<Self> {
        let p0 = disc_integral(pop, undeflected, radius_km)?.integral;
        let l0 = disc_integral(light, undeflected, radius_km)?.integral;
        if p0 == 0.0 {
            return Err(Error::UndefinedHci);
        }
        Ok(DamageScorer {
            population: pop,
            nightlight: light,
            radius_km,
            p0,
            l0,
        })
    }

    pub fn score(&self, p: &GeodeticPoint) -> Result<DamageIndexes> {
        let pop = disc_integral(self.population, p, self.radius_km)?.integral;
        let light = disc_integral(self.nightlight, p, self.radius_km)?.integral;
        Ok(self.indexes(pop, light))
    }

    fn indexes(&self, pop: f64, light: f64) -> DamageIndexes {
        DamageIndexes {
            hci: pop / self.p0,
            idi: (self.l0 != 0.0).then(|| light / self.l0),
            population: pop,
            light_integral: light,
        }
    }

    /// Indexes of a trajectory that misses the Earth: no exposure.
    pub fn miss(&self) -> DamageIndexes {
        self.indexes(0.0, 0.0)
    }
}

pub fn damage_indexes(
    pop: &GeoRaster,
    light: &GeoRaster,
    deflected: &GeodeticPoint,
    undeflected: &GeodeticPoint,
    radius_km: f64,
) -> Result<DamageIndexes> {
    DamageScorer::new(pop, light, undeflected, radius_km)?.score(deflected)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DamageRow {
    pub months: u32,
    /// None when that duration misses the Earth.
    pub point: Option<GeodeticPoint>,
    pub indexes: DamageIndexes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DamageSeries {
    pub rows: Vec<DamageRow>,
    /// Index into `rows` of the least-population duration (ties: smaller
    /// idi, then shorter duration).
    pub best: usize,
}

/// Scores every track point in parallel. Misses score zero exposure.
pub fn score_track(
    points: &[(u32, Option<GeodeticPoint>)],
    undeflected: &GeodeticPoint,
    pop: &GeoRaster,
    light: &GeoRaster,
    radius_km: f64,
) -> Result<DamageSeries> {
    if points.is_empty() {
        return Err(Error::Domain("empty deflection track".into()));
    }
    let scorer = DamageScorer::new(pop, light, undeflected, radius_km)?;
    let rows = points
        .par_iter()
        .map(|&(months, p)| {
            let indexes = match p {
                Some(p) => scorer.score(&p)?,
                None => scorer.miss(),
            };
            Ok(DamageRow {
                months,
                point: p,
                indexes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let key = |r: &DamageRow| (r.indexes.population, r.indexes.idi.unwrap_or(f64::INFINITY), r.months);
    let best = (0..rows.len())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(&rows[a]), key(&rows[b]));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2))
        })
        .unwrap();
    Ok(DamageSeries { rows, best })
}

/// Track points of a deflection sweep.
pub fn track_points(track: &crate::deflection::DeflectionTrack) -> Vec<(u32, Option<GeodeticPoint>)> {
    track
        .entries
        .iter()
        .map(|e| (e.months, e.outcome.impact().map(|r| r.point)))
        .collect()
}

/// CSV `months,lat,lon,hci,idi,population,light_integral`; `idi` is `NA`
/// when not applicable, and misses leave lat/lon empty.
pub fn damage_series_csv(series: &DamageSeries) -> String {
    let mut out = String::from("months,lat,lon,hci,idi,population,light_integral\n");
    for r in &series.rows {
        let (lat, lon) = match r.point {
            Some(p) => (format!("{:.6}", p.lat_deg), format!("{:.6}", p.lon_deg)),
            None => (String::new(), String::new()),
        };
        let idi = r.indexes.idi.map(|x| format!("{x:.9}")).unwrap_or_else(|| "NA".into());
        out.push_str(&format!(
            "{},{},{},{:.9},{},{:.3},{:.3}\n",
            r.months, lat, lon, r.indexes.hci, idi, r.indexes.population, r.indexes.light_integral
        ));
    }
    out
}
