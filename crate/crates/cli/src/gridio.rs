//! Grid and curve export.
//!
//! CSV grids carry one row per cell (`Z,m,re,im,intensity,flag`, Z-major)
//! with metadata in a `<path>.meta.json` sidecar. JSON grids are a single
//! object `{meta, z, m, cells}`. Numbers are written in shortest round-trip
//! form, so reading back reproduces every value bit for bit.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use zigzag_core::exact::XiCurves;
use zigzag_core::grid::{GridCell, PropagationGrid};

use crate::config::Format;
use crate::error::{CliError, Result};

pub const CSV_HEADER: [&str; 6] = ["Z", "m", "re", "im", "intensity", "flag"];
pub const XI_HEADER: [&str; 5] = ["Z", "re_xi_plus", "im_xi_plus", "re_xi_minus", "im_xi_minus"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.into(), source }
}

fn fmt_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Format { path: path.into(), msg: msg.to_string() }
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.into(), source: e.error })?;
    Ok(())
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn check_finite(grid: &PropagationGrid) -> Result<()> {
    let w = grid.m.len();
    for (i, c) in grid.cells.iter().enumerate() {
        if !(c.amplitude.re.is_finite() && c.amplitude.im.is_finite() && c.intensity.is_finite()) {
            return Err(CliError::NonFiniteOutput { z: grid.z[i / w], m: grid.m[i % w] });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonCell {
    re: f64,
    im: f64,
    intensity: f64,
    flag: bool,
}

#[derive(Serialize, Deserialize)]
struct JsonGrid {
    meta: Value,
    z: Vec<f64>,
    m: Vec<usize>,
    cells: Vec<JsonCell>,
}

pub fn grid_to_csv(grid: &PropagationGrid) -> Result<Vec<u8>> {
    check_finite(grid)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| fmt_err(Path::new("<csv>"), e);
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for (i, &z) in grid.z.iter().enumerate() {
        for (j, &m) in grid.m.iter().enumerate() {
            let c = grid.cell(i, j);
            w.write_record([
                num(z),
                m.to_string(),
                num(c.amplitude.re),
                num(c.amplitude.im),
                num(c.intensity),
                u8::from(c.flag).to_string(),
            ])
            .map_err(to_err)?;
        }
    }
    w.into_inner().map_err(|e| fmt_err(Path::new("<csv>"), e))
}

pub fn grid_to_json(grid: &PropagationGrid, meta: &Value) -> Result<Vec<u8>> {
    check_finite(grid)?;
    let doc = JsonGrid {
        meta: meta.clone(),
        z: grid.z.clone(),
        m: grid.m.clone(),
        cells: grid
            .cells
            .iter()
            .map(|c| JsonCell { re: c.amplitude.re, im: c.amplitude.im, intensity: c.intensity, flag: c.flag })
            .collect(),
    };
    Ok(serde_json::to_vec_pretty(&doc).expect("grid serializes"))
}

/// Writes `grid` to `path`; for CSV the metadata goes to the sidecar.
pub fn write_grid(path: &Path, grid: &PropagationGrid, meta: &Value, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            write_atomic(path, &grid_to_csv(grid)?)?;
            write_atomic(&meta_path(path), &serde_json::to_vec_pretty(meta).expect("meta serializes"))
        }
        Format::Json => write_atomic(path, &grid_to_json(grid, meta)?),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| fmt_err(path, format!("line {line}: bad {field} value '{s}'")))?;
    if !v.is_finite() {
        return Err(fmt_err(path, format!("line {line}: non-finite {field}")));
    }
    Ok(v)
}

pub fn grid_from_csv(path: &Path, bytes: &[u8]) -> Result<PropagationGrid> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| fmt_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(fmt_err(path, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut z: Vec<f64> = Vec::new();
    let mut m: Vec<usize> = Vec::new();
    let mut cells = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| fmt_err(path, e))?;
        if rec.len() != 6 {
            return Err(fmt_err(path, format!("line {line}: expected 6 fields")));
        }
        let zv = parse_f64(path, line, "Z", &rec[0])?;
        let mv: usize = rec[1].parse().map_err(|_| fmt_err(path, format!("line {line}: bad site '{}'", &rec[1])))?;
        let amp = Complex64::new(parse_f64(path, line, "re", &rec[2])?, parse_f64(path, line, "im", &rec[3])?);
        let intensity = parse_f64(path, line, "intensity", &rec[4])?;
        let flag = match &rec[5] {
            "0" => false,
            "1" => true,
            other => return Err(fmt_err(path, format!("line {line}: bad flag '{other}'"))),
        };
        if z.last() != Some(&zv) {
            z.push(zv);
        }
        if z.len() == 1 {
            m.push(mv);
        } else if m.get(cells.len() % m.len().max(1)) != Some(&mv) {
            return Err(fmt_err(path, format!("line {line}: rows are not Z-major with a fixed site list")));
        }
        cells.push(GridCell { amplitude: amp, intensity, flag });
    }
    if cells.len() != z.len() * m.len() {
        return Err(fmt_err(path, "incomplete grid"));
    }
    Ok(PropagationGrid::new(z, m, cells))
}

pub fn grid_from_json(path: &Path, bytes: &[u8]) -> Result<(PropagationGrid, Value)> {
    let doc: JsonGrid = serde_json::from_slice(bytes).map_err(|e| fmt_err(path, e))?;
    if doc.cells.len() != doc.z.len() * doc.m.len() {
        return Err(fmt_err(path, "cell count does not match z × m"));
    }
    let cells = doc
        .cells
        .into_iter()
        .map(|c| GridCell { amplitude: Complex64::new(c.re, c.im), intensity: c.intensity, flag: c.flag })
        .collect();
    Ok((PropagationGrid::new(doc.z, doc.m, cells), doc.meta))
}

/// Reads a grid written by [`write_grid`]; the format follows the extension.
/// CSV metadata is read from the sidecar when present.
pub fn read_grid(path: &Path) -> Result<(PropagationGrid, Value)> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    match Format::from_path(path) {
        Format::Json => grid_from_json(path, &bytes),
        Format::Csv => {
            let grid = grid_from_csv(path, &bytes)?;
            let mp = meta_path(path);
            let meta = match std::fs::read(&mp) {
                Ok(b) => serde_json::from_slice(&b).map_err(|e| fmt_err(&mp, e))?,
                Err(_) => Value::Null,
            };
            Ok((grid, meta))
        }
    }
}

pub fn xi_to_csv(curves: &XiCurves) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| fmt_err(Path::new("<csv>"), e);
    w.write_record(XI_HEADER).map_err(to_err)?;
    for i in 0..curves.z.len() {
        let row = [curves.z[i], curves.re_plus[i], curves.im_plus[i], curves.re_minus[i], curves.im_minus[i]];
        if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
            return Err(fmt_err(Path::new("<csv>"), format!("non-finite {} at Z={}", XI_HEADER[bad], curves.z[i])));
        }
        w.write_record(row.map(num)).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| fmt_err(Path::new("<csv>"), e))
}

pub fn write_xi(path: &Path, curves: &XiCurves, meta: &Value, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            write_atomic(path, &xi_to_csv(curves)?)?;
            write_atomic(&meta_path(path), &serde_json::to_vec_pretty(meta).expect("meta serializes"))
        }
        Format::Json => {
            let doc = serde_json::json!({
                "meta": meta,
                "z": curves.z,
                "re_xi_plus": curves.re_plus,
                "im_xi_plus": curves.im_plus,
                "re_xi_minus": curves.re_minus,
                "im_xi_minus": curves.im_minus,
            });
            write_atomic(path, &serde_json::to_vec_pretty(&doc).expect("curves serialize"))
        }
    }
}
