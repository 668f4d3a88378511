//! Report output: CSV tables, one JSON document, and for spatial
//! experiments binary PPM pixmaps with run-length-encoded JSON grids.
//!
//! Pixmaps have one pixel per lattice cell, top row at the largest `y`.
//! Palette: 0 white, then [`PALETTE`] for values 1, 2, ... (cycling).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{ExperimentReport, ExperimentResults, Grid};

pub const PALETTE: [[u8; 3]; 8] = [
    [228, 26, 28],
    [55, 126, 184],
    [77, 175, 74],
    [152, 78, 163],
    [255, 127, 0],
    [166, 86, 40],
    [247, 129, 191],
    [60, 60, 60],
];

pub const WHITE: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Pixmap,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "pixmap" => Ok(Format::Pixmap),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// Parses a comma-separated format list such as `csv,json`.
pub fn parse_formats(list: &str) -> Result<Vec<Format>> {
    let mut out: Vec<Format> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let f: Format = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("no output format given".into()));
    }
    Ok(out)
}

pub fn pixel(value: u32) -> [u8; 3] {
    if value == 0 {
        WHITE
    } else {
        PALETTE[(value as usize - 1) % PALETTE.len()]
    }
}

/// Binary P6 image of a grid.
pub fn pixmap_bytes(grid: &Grid) -> Vec<u8> {
    let (w, h) = (grid.region.width(), grid.region.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for row in (0..h).rev() {
        for col in 0..w {
            out.extend_from_slice(&pixel(grid.cells[row * w + col]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct RleGrid {
    pub width: usize,
    pub height: usize,
    /// Lattice point of the first cell.
    pub origin: [i64; 2],
    /// Row-major from `origin`, increasing `x` then `y`; `[value, run length]`.
    pub runs: Vec<[u64; 2]>,
}

pub fn rle(grid: &Grid) -> RleGrid {
    let mut runs: Vec<[u64; 2]> = Vec::new();
    for &c in &grid.cells {
        match runs.last_mut() {
            Some(last) if last[0] == c as u64 => last[1] += 1,
            _ => runs.push([c as u64, 1]),
        }
    }
    RleGrid {
        width: grid.region.width(),
        height: grid.region.height(),
        origin: [grid.region.min.x, grid.region.min.y],
        runs,
    }
}

pub fn decode_rle(grid: &RleGrid) -> Vec<u32> {
    grid.runs.iter().flat_map(|&[v, n]| std::iter::repeat(v as u32).take(n as usize)).collect()
}

/// Header row and data rows of the experiment's CSV table, in sweep-key order.
pub fn csv_table(results: &ExperimentResults) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let f = |x: f64| format!("{x}");
    match results {
        ExperimentResults::Shape { samples, .. } => (
            vec!["angle", "radius", "ci"],
            samples.iter().map(|s| vec![f(s.angle), f(s.radius), f(s.ci)]).collect(),
        ),
        ExperimentResults::Tau { rows, .. } => (
            vec!["n", "mean", "sd", "ci_low", "ci_high", "clipped", "total"],
            rows.iter()
                .map(|r| {
                    vec![
                        f(r.n),
                        f(r.summary.mean),
                        f(r.summary.sd),
                        f(r.summary.ci_low()),
                        f(r.summary.ci_high()),
                        r.clipped.to_string(),
                        r.total.to_string(),
                    ]
                })
                .collect(),
        ),
        ExperimentResults::Busemann { runs, .. } => (
            vec!["n", "M", "epsilon", "fraction", "ci_low", "ci_high", "clipped_fraction"],
            runs.iter()
                .flat_map(|run| run.experiment.rows.iter())
                .map(|r| {
                    vec![
                        f(r.n),
                        f(r.m_big),
                        f(r.epsilon),
                        f(r.success.fraction),
                        f(r.success.ci_low),
                        f(r.success.ci_high),
                        f(r.clipped_fraction()),
                    ]
                })
                .collect(),
        ),
        ExperimentResults::Coexist { rows, .. } => (
            vec!["M", "replicates", "coexist_fraction", "ci_low", "ci_high", "check_fraction", "argmin_violations"],
            rows.iter()
                .map(|r| {
                    vec![
                        f(r.m_big),
                        r.coexistence.trials.to_string(),
                        f(r.coexistence.fraction),
                        f(r.coexistence.ci_low),
                        f(r.coexistence.ci_high),
                        f(r.check_holds.fraction),
                        r.argmin_violations.to_string(),
                    ]
                })
                .collect(),
        ),
        ExperimentResults::Ends { rows, .. } => {
            let mut out = Vec::new();
            let reps = rows.first().map_or(0, |r| r.counts.len());
            for rep in 0..reps {
                for r in rows {
                    out.push(vec![rep.to_string(), r.rho0.to_string(), r.rho.to_string(), r.counts[rep].to_string()]);
                }
            }
            (vec!["replicate", "rho0", "rho", "count"], out)
        }
        ExperimentResults::Localize { event, m_big, n, epsilon, frequency, clipped, total, .. } => (
            vec!["event", "M", "n", "epsilon", "fraction", "ci_low", "ci_high", "clipped_fraction"],
            vec![vec![
                event.to_string(),
                f(*m_big),
                f(*n),
                f(*epsilon),
                f(frequency.fraction),
                f(frequency.ci_low),
                f(frequency.ci_high),
                f(*clipped as f64 / *total as f64),
            ]],
        ),
    }
}

pub fn csv_bytes(results: &ExperimentResults) -> Result<Vec<u8>> {
    let (header, rows) = csv_table(results);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| Error::IoFailure(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::IoFailure(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::IoFailure(e.to_string()))
}

pub fn json_bytes(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::IoFailure(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Writes the requested formats into `dir` as `<stem>.csv`, `<stem>.json`
/// and `<stem>_<grid>.ppm` / `<stem>_<grid>.grid.json`. Returns the paths.
pub fn emit(report: &ExperimentReport, dir: &Path, stem: &str, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Csv => {
                let p = dir.join(format!("{stem}.csv"));
                write(&p, &csv_bytes(&report.results)?)?;
                written.push(p);
            }
            Format::Json => {
                let p = dir.join(format!("{stem}.json"));
                write(&p, &json_bytes(report)?)?;
                written.push(p);
            }
            Format::Pixmap => {
                for g in &report.grids {
                    let p = dir.join(format!("{stem}_{}.ppm", g.name));
                    write(&p, &pixmap_bytes(g))?;
                    written.push(p);
                    let p = dir.join(format!("{stem}_{}.grid.json", g.name));
                    let bytes = serde_json::to_vec(&rle(g)).map_err(|e| Error::IoFailure(e.to_string()))?;
                    write(&p, &bytes)?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Box, LatticePoint};

    fn grid() -> Grid {
        let region = Box::new(LatticePoint::new(-1, 0), LatticePoint::new(1, 1)).unwrap();
        Grid { name: "g".into(), region, cells: vec![0, 1, 1, 2, 2, 0] }
    }

    #[test]
    fn pixmap_layout() {
        let bytes = pixmap_bytes(&grid());
        let header = b"P6\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 3 * 6);
        // Top row is y = 1: values 2, 2, 0.
        assert_eq!(&bytes[header.len()..header.len() + 3], &PALETTE[1]);
        assert_eq!(&bytes[header.len() + 6..header.len() + 9], &WHITE);
    }

    #[test]
    fn rle_round_trip() {
        let g = grid();
        let r = rle(&g);
        assert_eq!(r.runs, vec![[0, 1], [1, 2], [2, 2], [0, 1]]);
        assert_eq!(decode_rle(&r), g.cells);
    }

    #[test]
    fn formats() {
        assert_eq!(parse_formats("csv,json").unwrap(), vec![Format::Csv, Format::Json]);
        assert!(parse_formats("csv,xml").is_err());
        assert!(parse_formats("").is_err());
    }
}
