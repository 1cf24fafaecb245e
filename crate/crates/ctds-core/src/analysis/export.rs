//! Text exports for maps: row-major CSV and P3 pixmaps with deterministic
//! palettes.

use super::maps::{BasinMap, CellLabel, FsleMap};
use std::fmt::Write;

/// Row-major CSV of grid values, one row per line.
pub fn map_csv<T: std::fmt::Display>(values: &[T], width: usize) -> String {
    assert!(width > 0 && values.len() % width == 0);
    let mut out = String::new();
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Deterministic label palette: RGB from the low bits of
/// splitmix64(id + 1), each channel lifted into [64, 255] so labels never
/// collide with the black reserved for unresolved cells.
pub fn label_color(id: u32) -> (u8, u8, u8) {
    let h = crate::rng::splitmix64(id as u64 + 1);
    let lift = |byte: u64| -> u8 { 64 + (byte % 192) as u8 };
    (lift(h & 0xff), lift((h >> 8) & 0xff), lift((h >> 16) & 0xff))
}

fn ppm_header(out: &mut String, width: usize, height: usize) {
    let _ = writeln!(out, "P3\n{width} {height}\n255");
}

/// Basin labels as a P3 pixmap: hashed palette per label, black for
/// unresolved cells.
pub fn basin_labels_ppm(map: &BasinMap) -> String {
    let (w, h) = map.plane.grid;
    let mut out = String::new();
    ppm_header(&mut out, w, h);
    for row in map.labels.chunks(w) {
        for label in row {
            let (r, g, b) = match label {
                CellLabel::Label(id) => label_color(*id),
                CellLabel::Unresolved => (0, 0, 0),
            };
            let _ = write!(out, "{r} {g} {b} ");
        }
        out.push('\n');
    }
    out
}

/// Maps v ∈ [0,1] onto a black→red→yellow→white ramp.
fn heat(v: f64) -> (u8, u8, u8) {
    let v = v.clamp(0.0, 1.0);
    let c = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    (c(3.0 * v), c(3.0 * v - 1.0), c(3.0 * v - 2.0))
}

/// Search times as a P3 pixmap on a log-scale heat ramp (black = fastest,
/// white = slowest); unresolved cells are pure blue.
pub fn basin_times_ppm(map: &BasinMap) -> String {
    let (w, h) = map.plane.grid;
    let finite: Vec<f64> = map
        .times
        .iter()
        .flatten()
        .map(|t| t.max(1e-12).ln())
        .collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::new();
    ppm_header(&mut out, w, h);
    for row in map.times.chunks(w) {
        for t in row {
            let (r, g, b) = match t {
                Some(t) => heat((t.max(1e-12).ln() - lo) / span),
                None => (0, 0, 255),
            };
            let _ = write!(out, "{r} {g} {b} ");
        }
        out.push('\n');
    }
    out
}

/// FSLE values as a P3 pixmap on a linear heat ramp scaled to the map's
/// maximum.
pub fn fsle_ppm(map: &FsleMap) -> String {
    let (w, h) = map.plane.grid;
    let hi = map.phi.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let mut out = String::new();
    ppm_header(&mut out, w, h);
    for row in map.phi.chunks(w) {
        for &phi in row {
            let (r, g, b) = heat(phi / hi);
            let _ = write!(out, "{r} {g} {b} ");
        }
        out.push('\n');
    }
    out
}
