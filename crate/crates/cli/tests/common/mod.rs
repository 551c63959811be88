#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use slowpush_core::exposure::{encode_pgm, GeoRaster, RasterKind};

pub const DELHI_OFFSET: f64 = -0.000_767_2;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_slowpush"))
}

/// Runs the CLI and returns its exit code and stderr.
pub fn run(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(bin()).current_dir(dir).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn gaussian(lat: f64, lon: f64, c: (f64, f64), sigma_deg: f64) -> f64 {
    (-((lat - c.0).powi(2) + (lon - c.1).powi(2)) / (2.0 * sigma_deg * sigma_deg)).exp()
}

/// Synthetic Delhi scenario: a population blob on a regional grid, a lit
/// region on a global image, and a scenario file pointing at both.
pub fn delhi_workspace(dir: &Path) {
    let pop = GeoRaster::from_fn(350, 250, 60.0, 40.0, 0.1, RasterKind::Population, |la, lo| {
        (5000.0 * gaussian(la, lo, (28.6, 77.2), 1.0) * 1000.0).round() / 1000.0
    })
    .unwrap();
    fs::write(dir.join("pop.asc"), pop.to_esri_ascii()).unwrap();
    let (w, h) = (1440usize, 720usize);
    let mut px = Vec::with_capacity(w * h);
    for i in 0..h {
        for j in 0..w {
            let (la, lo) = (90.0 - (i as f64 + 0.5) * 0.25, -180.0 + (j as f64 + 0.5) * 0.25);
            px.push((255.0 * gaussian(la, lo, (28.6, 77.2), 1.5)).round() as u8);
        }
    }
    fs::write(dir.join("light.pgm"), encode_pgm(w, h, &px)).unwrap();
    fs::write(
        dir.join("delhi.toml"),
        format!(
            "output_dir = \"out\"\n\n[elements]\noffset_days = {DELHI_OFFSET}\n\n[deflection]\ndirection = \"decelerate\"\nmonths = \"1..33\"\n\n[rasters]\npopulation = \"pop.asc\"\nnightlight = \"light.pgm\"\n"
        ),
    )
    .unwrap();
}

/// Runs propagate, deflect and damage into `out` with the given thread count.
pub fn delhi_pipeline(dir: &Path, out: &str, threads: usize) -> Vec<(String, i32)> {
    let t = threads.to_string();
    ["propagate", "deflect", "damage"]
        .iter()
        .map(|cmd| {
            let (code, err) = run(dir, &[cmd, "--config", "delhi.toml", "--out", out, "--threads", &t]);
            (format!("{cmd}: {err}"), code)
        })
        .collect()
}

/// File name to bytes for every artifact in `dir`, manifests excluded
/// because they carry wall-clock fields.
pub fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| !e.file_name().to_string_lossy().starts_with("manifest_"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}
