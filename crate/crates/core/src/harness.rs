//! Experiment dispatch. `run` turns a validated config into a report whose
//! content depends only on the config: replicate `i` always uses the weight
//! field seeded by `replicate_seed(master_seed, i)`, and per-replicate
//! results are merged in replicate order whatever the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::busemann::{
    lemma_bn_experiment, lemma_highprob_experiment, lemma_slope_experiment, LineExperiment, LineExperimentParams,
    TangentDecomposition,
};
use crate::config::{ExperimentConfig, ExperimentKind, LimitShapeParams, ShapeSourceKind};
use crate::error::{Error, Result};
use crate::growth::{argmin_color_violations, check_with_maps, coexistence_event, outcome_from_map, place_seeds_on_shape};
use crate::lattice::{Box, LatticePoint, RealPoint};
use crate::passage::{auto_region, shortest_paths, PassageMap};
use crate::shape::{
    estimate_shape, estimate_symmetric_images, estimate_time_constant, RadialSample, ShapeEstimate, TangentInfo, TauRow,
    DEFAULT_TANGENT_TOLERANCE, MAX_CLIPPED_FRACTION,
};
use crate::stats::{median, two_proportion_z, welch_z, Proportion, Summary, Z_95_ONE_SIDED};
use crate::trees::{ends_estimate, infection_tree, localization_event_33, localization_event_34};
use crate::weights::{mix64, WeightField};

/// Salt for the pilot weights used to estimate the limit shape.
const PILOT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact_version: String,
    pub master_seed: u64,
    pub replications: usize,
    /// How replicate `i`'s weights are seeded.
    pub replicate_seeding: String,
    /// Seed of the pilot weights behind an estimated limit shape.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilot_seed: Option<u64>,
    pub tick: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub source: String,
    pub hull: Vec<RealPoint>,
    pub sides: usize,
}

impl ShapeSummary {
    fn of(shape: &ShapeEstimate, tolerance: f64) -> Self {
        Self { source: shape.meta().source.clone(), hull: shape.hull().to_vec(), sides: shape.sides(tolerance) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub image: RealPoint,
    pub summary: Summary,
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusemannRun {
    pub m_big: f64,
    pub tangent: TangentInfo,
    pub experiment: LineExperiment,
    pub abs_ratio: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistRow {
    pub m_big: f64,
    pub seeds: Vec<LatticePoint>,
    pub check_n: Vec<f64>,
    pub coexistence: Proportion,
    /// Replicates where the Busemann check held for at least one `n`.
    pub check_holds: Proportion,
    /// Line-minimum cells not owned by their seed's color, over all
    /// replicates and all `n` where the check held.
    pub argmin_violations: usize,
    /// Mean boundary cells per color.
    pub mean_boundary_counts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndsRow {
    pub rho0: i64,
    pub rho: i64,
    pub counts: Vec<usize>,
    pub median: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentResults {
    Shape {
        samples: Vec<RadialSample>,
        shape: ShapeSummary,
    },
    Tau {
        direction: RealPoint,
        rows: Vec<TauRow>,
        /// Whether the sample sd of `tau / n` strictly decreases along `n`.
        sd_decreasing: bool,
        images: Vec<ImageRow>,
        /// Whether every pair of image intervals overlaps.
        symmetric: Option<bool>,
    },
    Busemann {
        lemma: String,
        shape: ShapeSummary,
        runs: Vec<BusemannRun>,
        #[serde(skip_serializing_if = "Option::is_none")]
        decomposition: Option<TangentDecomposition>,
        /// Slope lemma: Welch z of mean `|B|/M` at the first versus the last `M`.
        #[serde(skip_serializing_if = "Option::is_none")]
        trend_z: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        trend_significant: Option<bool>,
    },
    Coexist {
        shape: ShapeSummary,
        half_width: i64,
        boundary_threshold: usize,
        rows: Vec<CoexistRow>,
        /// Two-proportion z of coexistence at the last versus the first `M`.
        trend_z: f64,
        trend_significant: bool,
    },
    Ends {
        half_width: i64,
        rows: Vec<EndsRow>,
    },
    Localize {
        event: u8,
        shape: ShapeSummary,
        m_big: f64,
        n: f64,
        epsilon: f64,
        frequency: Proportion,
        clipped: usize,
        total: usize,
    },
}

/// A finished run. Grids are kept for pixmap output and not serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: serde_json::Value,
    pub results: ExperimentResults,
    pub provenance: Provenance,
    #[serde(skip)]
    pub grids: Vec<Grid>,
}

/// A labelled raster over a box, row-major from `region.min`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub name: String,
    pub region: Box,
    pub cells: Vec<u32>,
}

/// Runs the experiment on a pool of `config.experiment.parallelism` workers.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.experiment.parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| run_inner(config))
}

fn pilot_seed(master: u64) -> u64 {
    mix64(master ^ PILOT_SALT)
}

fn limit_shape(config: &ExperimentConfig) -> Result<ShapeEstimate> {
    let p: &LimitShapeParams = config.limit_shape.as_ref().expect("validated");
    match p.source {
        ShapeSourceKind::Diamond => Ok(ShapeEstimate::diamond()),
        ShapeSourceKind::Estimated => {
            let pilot = WeightField::new(config.distribution, pilot_seed(config.experiment.master_seed))?;
            estimate_shape(&pilot, p.angular_resolution, p.n, p.replications, config.region.margin)
        }
    }
}

fn line_indices(m_big: f64, count: usize, step: f64) -> Vec<f64> {
    (1..=count).map(|k| m_big.ceil() + k as f64 * step).collect()
}

fn run_inner(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let exp = &config.experiment;
    let base = WeightField::new(config.distribution, exp.master_seed)?;
    let reps = exp.replications;
    let margin = config.region.margin;
    let mut grids = Vec::new();
    let results = match exp.kind {
        ExperimentKind::Shape => {
            let p = config.shape.as_ref().expect("validated");
            let shape = estimate_shape(&base, p.angular_resolution, p.n, reps, margin)?;
            grids.push(shape_raster(&shape, p.raster_half_width)?);
            ExperimentResults::Shape { samples: shape.samples().to_vec(), shape: ShapeSummary::of(&shape, p.sides_tolerance) }
        }
        ExperimentKind::Tau => {
            let p = config.tau.as_ref().expect("validated");
            let v = RealPoint::new(p.direction[0], p.direction[1]);
            let est = estimate_time_constant(&base, v, &p.n_values, reps, margin)?;
            let sd_decreasing = est.rows.windows(2).all(|w| w[1].summary.sd < w[0].summary.sd);
            let (images, symmetric) = match p.symmetry_n {
                Some(n) => {
                    let ims = estimate_symmetric_images(&base, v, n, reps, margin)?;
                    let rows: Vec<ImageRow> = ims
                        .iter()
                        .map(|e| ImageRow { image: e.v, summary: e.rows[0].summary, clipped: e.rows[0].clipped })
                        .collect();
                    let ok = rows.iter().all(|a| rows.iter().all(|b| a.summary.overlaps(&b.summary)));
                    (rows, Some(ok))
                }
                None => (Vec::new(), None),
            };
            ExperimentResults::Tau { direction: v, rows: est.rows, sd_decreasing, images, symmetric }
        }
        ExperimentKind::BusemannBn => {
            let p = config.busemann_bn.as_ref().expect("validated");
            let shape = limit_shape(config)?;
            let tangent = shape.tangent_near_angle(p.direction_angle, DEFAULT_TANGENT_TOLERANCE)?;
            let params = LineExperimentParams {
                epsilon: p.epsilon,
                reps,
                margin,
                base_point: LatticePoint::new(p.base_point[0], p.base_point[1]),
            };
            let n_values = line_indices(p.m_big, p.n_count, p.n_step);
            let e = lemma_bn_experiment(&base, &shape, &tangent, p.m_big, &n_values, &params)?;
            let run = BusemannRun { m_big: p.m_big, tangent, abs_ratio: e.abs_ratio_summary(), experiment: e };
            ExperimentResults::Busemann {
                lemma: "bn".into(),
                shape: ShapeSummary::of(&shape, DEFAULT_TANGENT_TOLERANCE),
                runs: vec![run],
                decomposition: None,
                trend_z: None,
                trend_significant: None,
            }
        }
        ExperimentKind::BusemannSlope => {
            let p = config.busemann_slope.as_ref().expect("validated");
            let shape = limit_shape(config)?;
            let tangent = shape.axis_tangent(p.axis)?;
            let params = LineExperimentParams { epsilon: p.epsilon, reps, margin, base_point: LatticePoint::ORIGIN };
            let mut runs = Vec::with_capacity(p.m_values.len());
            for &m in &p.m_values {
                let n_values = line_indices(m, p.n_count, p.n_step);
                let e = lemma_slope_experiment(&base, &shape, &tangent, m, &n_values, &params)?;
                runs.push(BusemannRun { m_big: m, tangent, abs_ratio: e.abs_ratio_summary(), experiment: e });
            }
            let z = welch_z(&runs[0].abs_ratio, &runs[runs.len() - 1].abs_ratio);
            ExperimentResults::Busemann {
                lemma: "slope".into(),
                shape: ShapeSummary::of(&shape, DEFAULT_TANGENT_TOLERANCE),
                runs,
                decomposition: None,
                trend_z: Some(z),
                trend_significant: Some(z > Z_95_ONE_SIDED),
            }
        }
        ExperimentKind::BusemannHighprob => {
            let p = config.busemann_highprob.as_ref().expect("validated");
            let shape = limit_shape(config)?;
            let tangent = shape.tangent_near_angle(p.direction_angle, DEFAULT_TANGENT_TOLERANCE)?;
            let params = LineExperimentParams { epsilon: p.epsilon, reps, margin, base_point: LatticePoint::ORIGIN };
            let n_values = line_indices(p.m_big, p.n_count, p.n_step);
            let y = RealPoint::new(p.y[0], p.y[1]);
            let (dec, e) = lemma_highprob_experiment(&base, &shape, &tangent, y, p.m_big, &n_values, &params)?;
            let run = BusemannRun { m_big: p.m_big, tangent, abs_ratio: e.abs_ratio_summary(), experiment: e };
            ExperimentResults::Busemann {
                lemma: "highprob".into(),
                shape: ShapeSummary::of(&shape, DEFAULT_TANGENT_TOLERANCE),
                runs: vec![run],
                decomposition: Some(dec),
                trend_z: None,
                trend_significant: None,
            }
        }
        ExperimentKind::Coexist => run_coexist(config, &base, &mut grids)?,
        ExperimentKind::Ends => {
            let p = config.ends.as_ref().expect("validated");
            let region = Box::centered(LatticePoint::ORIGIN, p.half_width);
            let per_rep: Vec<Vec<usize>> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let tree = infection_tree(&base.derive_replicate(r as u64), LatticePoint::ORIGIN, &region)?;
                    p.radii.iter().map(|&[r0, r1]| Ok(ends_estimate(&tree, r0, r1)?.count)).collect()
                })
                .collect::<Result<_>>()?;
            let rows = p
                .radii
                .iter()
                .enumerate()
                .map(|(k, &[rho0, rho])| {
                    let counts: Vec<usize> = per_rep.iter().map(|r| r[k]).collect();
                    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
                    EndsRow { rho0, rho, median: median(&xs), summary: Summary::of(&xs), counts }
                })
                .collect();
            ExperimentResults::Ends { half_width: p.half_width, rows }
        }
        ExperimentKind::Localize => run_localize(config, &base)?,
    };
    let provenance = Provenance {
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        master_seed: exp.master_seed,
        replications: reps,
        replicate_seeding: "weights of replicate i use seed mix64(master_seed ^ mix64(i + 0x5851f42d4c957f2d))".into(),
        pilot_seed: (config.needs_shape()
            && config.limit_shape.as_ref().is_some_and(|s| s.source == ShapeSourceKind::Estimated))
        .then(|| pilot_seed(exp.master_seed)),
        tick: "weights are integer multiples of 2^-32".into(),
    };
    Ok(ExperimentReport { config: config.echo(), results, provenance, grids })
}

/// Cells inside the scaled shape (1) and its discrete boundary (2).
fn shape_raster(shape: &ShapeEstimate, half_width: i64) -> Result<Grid> {
    let region = Box::centered(LatticePoint::ORIGIN, half_width);
    let reach = shape.hull().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let scale = (half_width as f64 - 1.0) / reach;
    let inside = |z: LatticePoint| -> Result<bool> {
        if z == LatticePoint::ORIGIN {
            return Ok(true);
        }
        Ok(shape.norm_query(z.to_real())? <= scale)
    };
    let mut cells = Vec::with_capacity(region.len());
    for z in region.points() {
        let c = if !inside(z)? {
            0
        } else if z.neighbors().iter().any(|&q| !inside(q).unwrap_or(false)) {
            2
        } else {
            1
        };
        cells.push(c);
    }
    Ok(Grid { name: "shape".into(), region, cells })
}

fn run_coexist(config: &ExperimentConfig, base: &WeightField, grids: &mut Vec<Grid>) -> Result<ExperimentResults> {
    let p = config.coexist.as_ref().expect("validated");
    let reps = config.experiment.replications;
    let shape = limit_shape(config)?;
    let tangents: Vec<TangentInfo> = (0..4).map(|q| shape.axis_tangent(q)).collect::<Result<_>>()?;
    let region = Box::centered(LatticePoint::ORIGIN, p.half_width);
    // Lines L_{n,v_i} are vertical or horizontal at distance n |v_i|; keep them
    // two cells inside the window.
    let reach = tangents.iter().map(|t| t.v.norm()).fold(0.0, f64::max);
    let n_max = ((p.half_width - 2) as f64 / reach).floor();
    let mut rows = Vec::with_capacity(p.m_values.len());
    for &m in &p.m_values {
        let seeds = place_seeds_on_shape(&shape, &tangents, m)?;
        if seeds.iter().any(|s| !region.contains(*s)) {
            return Err(Error::ConfigInvalid(format!("coexist.m_values: seeds for M = {m} fall outside the window")));
        }
        let n_min = m.floor() + 1.0;
        if n_min > n_max {
            return Err(Error::ConfigInvalid(format!("coexist.half_width: no check line beyond M = {m} fits the window")));
        }
        let count = p.check_count.min((n_max - n_min) as usize + 1);
        let check_n: Vec<f64> = (0..count)
            .map(|k| if count == 1 { n_min } else { (n_min + (n_max - n_min) * k as f64 / (count - 1) as f64).round() })
            .collect();
        let per_rep: Vec<(bool, bool, usize, Vec<usize>, Option<Vec<u32>>)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let field = base.derive_replicate(r as u64);
                let joint = shortest_paths(&field, &seeds, &region, None)?;
                let outcome = outcome_from_map(&joint);
                let maps: Vec<PassageMap> =
                    seeds.iter().map(|&s| shortest_paths(&field, &[s], &region, None)).collect::<Result<_>>()?;
                let check = check_with_maps(&maps, &tangents, &check_n, &region)?;
                let co = coexistence_event(&outcome, p.boundary_threshold)?;
                let any = check.iter().any(|c| c.holds);
                let violations = argmin_color_violations(&outcome, &check);
                let grid = (r == 0).then(|| outcome.coloring.clone());
                Ok((co.overall, any, violations, outcome.boundary_counts, grid))
            })
            .collect::<Result<_>>()?;
        let coexistence = Proportion::from_flags(per_rep.iter().map(|r| r.0));
        let check_holds = Proportion::from_flags(per_rep.iter().map(|r| r.1));
        let argmin_violations = per_rep.iter().map(|r| r.2).sum();
        let mean_boundary_counts = (0..seeds.len())
            .map(|i| per_rep.iter().map(|r| r.3[i] as f64).sum::<f64>() / reps as f64)
            .collect();
        if let Some(cells) = per_rep[0].4.clone() {
            grids.push(Grid { name: format!("coexist_M{m}"), region, cells });
        }
        rows.push(CoexistRow { m_big: m, seeds, check_n, coexistence, check_holds, argmin_violations, mean_boundary_counts });
    }
    let trend_z = two_proportion_z(&rows[rows.len() - 1].coexistence, &rows[0].coexistence);
    Ok(ExperimentResults::Coexist {
        shape: ShapeSummary::of(&shape, DEFAULT_TANGENT_TOLERANCE),
        half_width: p.half_width,
        boundary_threshold: p.boundary_threshold,
        rows,
        trend_z,
        trend_significant: trend_z > Z_95_ONE_SIDED,
    })
}

fn run_localize(config: &ExperimentConfig, base: &WeightField) -> Result<ExperimentResults> {
    let p = config.localize.as_ref().expect("validated");
    let reps = config.experiment.replications;
    let shape = limit_shape(config)?;
    let tol = DEFAULT_TANGENT_TOLERANCE;
    let v = shape.tangent_near_angle(p.v_angle, tol)?;
    let dir = shape.boundary_point(v.v)?;
    let center = crate::lattice::round_to_lattice(p.m_big * dir);
    let anchor = crate::lattice::round_to_lattice(p.n * dir);
    let region = auto_region(&[LatticePoint::ORIGIN, center], &[anchor], config.region.margin)?;
    let (x, y) = if p.event == 33 {
        (Some(shape.tangent_near_angle(p.x_angle, tol)?), Some(shape.tangent_near_angle(p.y_angle, tol)?))
    } else {
        (None, None)
    };
    let per_rep: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let field = base.derive_replicate(r as u64);
            let out = match (x, y) {
                (Some(x), Some(y)) => localization_event_33(&field, &shape, &x, &v, &y, p.m_big, p.n, &region)?,
                _ => localization_event_34(&field, &shape, &v, p.m_big, p.n, p.epsilon, &region)?,
            };
            Ok((out.holds, out.clipped))
        })
        .collect::<Result<_>>()?;
    let clipped = per_rep.iter().filter(|r| r.1).count();
    if clipped as f64 > MAX_CLIPPED_FRACTION * reps as f64 {
        return Err(Error::ClippedRuns { clipped, total: reps });
    }
    Ok(ExperimentResults::Localize {
        event: p.event,
        shape: ShapeSummary::of(&shape, tol),
        m_big: p.m_big,
        n: p.n,
        epsilon: p.epsilon,
        frequency: Proportion::from_flags(per_rep.iter().filter(|r| !r.1).map(|r| r.0)),
        clipped,
        total: reps,
    })
}
