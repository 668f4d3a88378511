//! Busemann functions to lines and along geodesics, finite-range densities
//! over the line index `n`, and the Monte Carlo experiments built on them.
//!
//! All values are differences of integer tick times, so the cocycle and
//! antisymmetry identities hold exactly whenever the underlying times come
//! from the same sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{line_target_cells, round_to_lattice, Box, LatticePoint, LineSpec, RealPoint};
use crate::passage::{auto_region, passage_time_to_line, shortest_paths, Geodesic, PassageMap};
use crate::shape::{ShapeEstimate, TangentInfo, MAX_CLIPPED_FRACTION};
use crate::stats::{Proportion, Summary};
use crate::weights::{ticks_to_time, EdgeWeights, WeightField, TICKS_PER_UNIT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusemannSample {
    pub line: LineSpec,
    pub x: LatticePoint,
    pub y: LatticePoint,
    pub value: f64,
    pub clipped: bool,
}

/// `tau(x, line) - tau(y, line)` from two line sweeps.
pub fn busemann_line<W: EdgeWeights + ?Sized>(
    field: &W,
    line: &LineSpec,
    x: LatticePoint,
    y: LatticePoint,
    region: &Box,
) -> Result<BusemannSample> {
    let hx = passage_time_to_line(field, x, line, region)?;
    let hy = passage_time_to_line(field, y, line, region)?;
    Ok(BusemannSample {
        line: *line,
        x,
        y,
        value: tick_difference(hx.ticks, hy.ticks),
        clipped: hx.clipped || hy.clipped,
    })
}

fn tick_difference(a: u64, b: u64) -> f64 {
    (a as i128 - b as i128) as f64 / TICKS_PER_UNIT
}

/// Distance to a line for every vertex of the region, from one sweep
/// seeded at all of the line's cells.
#[derive(Debug, Clone)]
pub struct LinePotential {
    map: PassageMap,
}

impl LinePotential {
    pub fn new<W: EdgeWeights + ?Sized>(field: &W, line: &LineSpec, region: &Box) -> Result<Self> {
        let cells = line_target_cells(line, region)?;
        Ok(Self { map: shortest_paths(field, &cells, region, None)? })
    }

    pub fn ticks(&self, z: LatticePoint) -> Result<u64> {
        self.map.ticks(z).ok_or(Error::PointOutsideRegion(z))
    }

    pub fn busemann(&self, x: LatticePoint, y: LatticePoint) -> Result<f64> {
        Ok(tick_difference(self.ticks(x)?, self.ticks(y)?))
    }
}

/// Partial Busemann values along a geodesic `v_0, v_1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicBusemann {
    /// `tau(x, v_n) - tau(y, v_n)`.
    pub values: Vec<f64>,
    /// `tau(x, v_n) - tau(v_0, v_n)`, nonincreasing in `n`.
    pub from_x: Vec<f64>,
    /// `tau(y, v_n) - tau(v_0, v_n)`, nonincreasing in `n`.
    pub from_y: Vec<f64>,
}

impl GeodesicBusemann {
    pub fn is_monotone(&self) -> bool {
        let nonincreasing = |s: &[f64]| s.windows(2).all(|w| w[1] <= w[0]);
        nonincreasing(&self.from_x) && nonincreasing(&self.from_y)
    }
}

/// `values[n] = from_x[n] - from_y[n]`; one sweep each from `x`, `y` and `v_0`.
pub fn busemann_geodesic<W: EdgeWeights + ?Sized>(
    field: &W,
    g: &Geodesic,
    x: LatticePoint,
    y: LatticePoint,
    region: &Box,
) -> Result<GeodesicBusemann> {
    if g.vertices.len() < 2 {
        return Err(Error::InvalidArgument("geodesic needs at least two vertices".into()));
    }
    for &p in [x, y].iter().chain(&g.vertices) {
        if !region.contains(p) {
            return Err(Error::PointOutsideRegion(p));
        }
    }
    let v0 = g.first();
    let from = |s: LatticePoint| shortest_paths(field, &[s], region, None);
    let (mx, my, m0) = (from(x)?, from(y)?, from(v0)?);
    let t = |m: &PassageMap, z: LatticePoint| m.ticks(z).ok_or(Error::Unreachable(z));
    let mut out = GeodesicBusemann { values: Vec::new(), from_x: Vec::new(), from_y: Vec::new() };
    for &v in &g.vertices {
        let (tx, ty, t0) = (t(&mx, v)?, t(&my, v)?, t(&m0, v)?);
        out.values.push(tick_difference(tx, ty));
        out.from_x.push(tick_difference(tx, t0));
        out.from_y.push(tick_difference(ty, t0));
    }
    Ok(out)
}

/// Fraction of `n` in a finite range satisfying a predicate: the
/// finite-range stand-in for lower density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub n_first: f64,
    pub n_last: f64,
    pub hits: usize,
    pub count: usize,
    pub lower: f64,
    pub pattern: Vec<bool>,
}

pub fn density_over_n(results: &[bool]) -> Result<DensityEstimate> {
    density_with_range(results, 1.0, results.len() as f64)
}

fn density_with_range(results: &[bool], n_first: f64, n_last: f64) -> Result<DensityEstimate> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("density needs at least one n".into()));
    }
    let hits = results.iter().filter(|&&b| b).count();
    Ok(DensityEstimate {
        n_first,
        n_last,
        hits,
        count: results.len(),
        lower: hits as f64 / results.len() as f64,
        pattern: results.to_vec(),
    })
}

/// `v + s w = y + t v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentDecomposition {
    pub v: RealPoint,
    pub w: RealPoint,
    pub y: RealPoint,
    pub s: f64,
    pub t: f64,
}

pub fn solve_tangent_decomposition(v: RealPoint, w: RealPoint, y: RealPoint) -> Result<TangentDecomposition> {
    // Columns w and -v, right-hand side y - v; Cramer's rule.
    let b = -v;
    let c = y - v;
    let det = w.cross(b);
    if det.abs() <= 1e-12 * w.norm() * v.norm() || !det.is_finite() {
        return Err(Error::SingularSystem);
    }
    let s = c.cross(b) / det;
    let t = w.cross(c) / det;
    Ok(TangentDecomposition { v, w, y, s, t })
}

/// One row of a line experiment: the success fraction at a fixed `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineExperimentRow {
    pub n: f64,
    pub m_big: f64,
    pub epsilon: f64,
    pub success: Proportion,
    pub clipped: usize,
    pub total: usize,
    /// Mean of `B / M` over kept replicates.
    pub mean_ratio: Summary,
}

impl LineExperimentRow {
    pub fn clipped_fraction(&self) -> f64 {
        self.clipped as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineExperiment {
    pub rows: Vec<LineExperimentRow>,
    pub density: DensityEstimate,
    /// Per replicate, the mean over `n` of `|B| / |M|` (clipped entries skipped).
    pub replicate_abs_ratio: Vec<f64>,
}

impl LineExperiment {
    pub fn abs_ratio_summary(&self) -> Summary {
        Summary::of(&self.replicate_abs_ratio)
    }
}

/// Shared protocol of the three lemma experiments: for every replicate,
/// one sweep from each of the two points; then for every line index,
/// `B = tau(x, L_n) - tau(y, L_n)` and a success predicate on it.
struct LineProtocol<'a> {
    base: &'a WeightField,
    x: LatticePoint,
    y: LatticePoint,
    direction: RealPoint,
    tangent: RealPoint,
    n_values: &'a [f64],
    m_big: f64,
    epsilon: f64,
    reps: usize,
    margin: f64,
}

impl LineProtocol<'_> {
    fn run(&self, success: impl Fn(f64) -> bool + Sync) -> Result<LineExperiment> {
        if self.reps == 0 || self.n_values.is_empty() {
            return Err(Error::InvalidArgument("need replicates and line indices".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
        }
        let lines: Vec<LineSpec> = self
            .n_values
            .iter()
            .map(|&n| LineSpec::new(self.direction, self.tangent, n))
            .collect::<Result<_>>()?;
        let anchors: Vec<LatticePoint> = lines.iter().map(|l| round_to_lattice(l.anchor())).collect();
        let region = auto_region(&[self.x, self.y], &anchors, self.margin)?;
        let cells: Vec<Vec<LatticePoint>> = lines.iter().map(|l| line_target_cells(l, &region)).collect::<Result<_>>()?;

        // Per replicate, per n: (B, clipped).
        let per_rep: Vec<Vec<(f64, bool)>> = (0..self.reps)
            .into_par_iter()
            .map(|r| {
                let field = self.base.derive_replicate(r as u64);
                let mx = shortest_paths(&field, &[self.x], &region, None)?;
                let my = if self.y == self.x { mx.clone() } else { shortest_paths(&field, &[self.y], &region, None)? };
                cells
                    .iter()
                    .map(|c| {
                        let hx = mx.cells_hit(c)?;
                        let hy = my.cells_hit(c)?;
                        Ok((tick_difference(hx.ticks, hy.ticks), hx.clipped || hy.clipped))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let mut rows = Vec::with_capacity(lines.len());
        for (k, &n) in self.n_values.iter().enumerate() {
            let clipped = per_rep.iter().filter(|r| r[k].1).count();
            if clipped as f64 > MAX_CLIPPED_FRACTION * self.reps as f64 {
                return Err(Error::ClippedRuns { clipped, total: self.reps });
            }
            let kept: Vec<f64> = per_rep.iter().filter(|r| !r[k].1).map(|r| r[k].0).collect();
            let ratios: Vec<f64> = kept.iter().map(|b| b / self.m_big).collect();
            rows.push(LineExperimentRow {
                n,
                m_big: self.m_big,
                epsilon: self.epsilon,
                success: Proportion::from_flags(kept.iter().map(|&b| success(b))),
                clipped,
                total: self.reps,
                mean_ratio: Summary::of(&ratios),
            });
        }
        let flags: Vec<bool> = rows.iter().map(|r| r.success.fraction > 1.0 - self.epsilon).collect();
        let density = density_with_range(&flags, self.n_values[0], *self.n_values.last().expect("nonempty"))?;
        let replicate_abs_ratio = per_rep
            .iter()
            .map(|r| {
                let kept: Vec<f64> = r.iter().filter(|e| !e.1).map(|e| (e.0 / self.m_big).abs()).collect();
                kept.iter().sum::<f64>() / kept.len().max(1) as f64
            })
            .collect();
        Ok(LineExperiment { rows, density, replicate_abs_ratio })
    }
}

fn unit_boundary(shape: &ShapeEstimate, v: &TangentInfo) -> Result<RealPoint> {
    if !v.unique {
        return Err(Error::InvalidArgument("the boundary point must have a unique tangent".into()));
    }
    let t = shape.norm_query(v.v)?;
    Ok((1.0 / t) * v.v)
}

/// Common knobs of the lemma experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineExperimentParams {
    pub epsilon: f64,
    pub reps: usize,
    pub margin: f64,
    pub base_point: LatticePoint,
}

/// Success at `n`: `M(1-eps) < B_{L_n}(r, r + M v) < M(1+eps)` in more
/// than a `1 - eps` fraction of replicates.
pub fn lemma_bn_experiment(
    base: &WeightField,
    shape: &ShapeEstimate,
    v: &TangentInfo,
    m_big: f64,
    n_values: &[f64],
    params: &LineExperimentParams,
) -> Result<LineExperiment> {
    if !(m_big > 0.0) {
        return Err(Error::InvalidArgument("M must be positive".into()));
    }
    let dir = unit_boundary(shape, v)?;
    let r = params.base_point;
    let y = round_to_lattice(r.to_real() + m_big * dir);
    let eps = params.epsilon;
    LineProtocol {
        base,
        x: r,
        y,
        direction: dir,
        tangent: v.w,
        n_values,
        m_big,
        epsilon: eps,
        reps: params.reps,
        margin: params.margin,
    }
    .run(|b| m_big * (1.0 - eps) < b && b < m_big * (1.0 + eps))
}

/// Success at `n`: `|B_{L_n}(r, r + M w)| < eps |M|`. `M` may be negative.
pub fn lemma_slope_experiment(
    base: &WeightField,
    shape: &ShapeEstimate,
    v: &TangentInfo,
    m_big: f64,
    n_values: &[f64],
    params: &LineExperimentParams,
) -> Result<LineExperiment> {
    if m_big == 0.0 || !m_big.is_finite() {
        return Err(Error::InvalidArgument("M must be nonzero".into()));
    }
    let dir = unit_boundary(shape, v)?;
    let r = params.base_point;
    let y = round_to_lattice(r.to_real() + m_big * v.w);
    let eps = params.epsilon;
    LineProtocol {
        base,
        x: r,
        y,
        direction: dir,
        tangent: v.w,
        n_values,
        m_big,
        epsilon: eps,
        reps: params.reps,
        margin: params.margin,
    }
    .run(|b| b.abs() < eps * m_big.abs())
}

/// Success at `n`: `B_{L_n}(M y, M v) > M (t - eps)` where `v + s w = y + t v`.
pub fn lemma_highprob_experiment(
    base: &WeightField,
    shape: &ShapeEstimate,
    v: &TangentInfo,
    y_point: RealPoint,
    m_big: f64,
    n_values: &[f64],
    params: &LineExperimentParams,
) -> Result<(TangentDecomposition, LineExperiment)> {
    if !(m_big > 0.0) {
        return Err(Error::InvalidArgument("M must be positive".into()));
    }
    let dir = unit_boundary(shape, v)?;
    let dec = solve_tangent_decomposition(dir, v.w, y_point)?;
    let eps = params.epsilon;
    let threshold = m_big * (dec.t - eps);
    let exp = LineProtocol {
        base,
        x: round_to_lattice(m_big * y_point),
        y: round_to_lattice(m_big * dir),
        direction: dir,
        tangent: v.w,
        n_values,
        m_big,
        epsilon: eps,
        reps: params.reps,
        margin: params.margin,
    }
    .run(|b| b > threshold)?;
    Ok((dec, exp))
}

/// The `B / M` values of one field, exposed for deterministic checks.
pub fn line_busemann_values<W: EdgeWeights + ?Sized>(
    field: &W,
    x: LatticePoint,
    y: LatticePoint,
    lines: &[LineSpec],
    region: &Box,
) -> Result<Vec<f64>> {
    let mx = shortest_paths(field, &[x], region, None)?;
    let my = shortest_paths(field, &[y], region, None)?;
    lines
        .iter()
        .map(|l| Ok(ticks_to_time(mx.line_hit(l)?.ticks) - ticks_to_time(my.line_hit(l)?.ticks)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passage::{geodesic_between, passage_time};
    use crate::weights::DistributionSpec;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn pt(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    fn unit() -> WeightField {
        WeightField::new(DistributionSpec::Deterministic { value: 1.0 }, 0).unwrap()
    }

    fn exp(seed: u64) -> WeightField {
        WeightField::new(DistributionSpec::Exponential { rate: 1.0 }, seed).unwrap()
    }

    fn vertical(n: f64) -> LineSpec {
        LineSpec::new(RealPoint::new(1.0, 0.0), RealPoint::new(0.0, 1.0), n).unwrap()
    }

    #[test]
    fn same_point_is_zero() {
        let region = Box::centered(pt(0, 0), 15);
        let b = busemann_line(&exp(3), &vertical(10.0), pt(2, 1), pt(2, 1), &region).unwrap();
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn unit_weights_line_gap() {
        let region = Box::centered(pt(0, 0), 15);
        let b = busemann_line(&unit(), &vertical(10.0), pt(0, 0), pt(5, 0), &region).unwrap();
        assert_eq!(b.value, 5.0);
    }

    #[test]
    fn potential_agrees_with_line_sweeps() {
        let region = Box::centered(pt(0, 0), 12);
        let field = exp(8);
        let line = LineSpec::new(RealPoint::new(0.8, 0.6), RealPoint::new(-0.6, 0.8), 7.0).unwrap();
        let pot = LinePotential::new(&field, &line, &region).unwrap();
        for (x, y) in [(pt(0, 0), pt(3, -2)), (pt(-5, 4), pt(1, 1))] {
            let b = busemann_line(&field, &line, x, y, &region).unwrap();
            assert_eq!(pot.busemann(x, y).unwrap(), b.value);
        }
    }

    #[test]
    fn density_examples() {
        let even: Vec<bool> = (1..=100).map(|n| n % 2 == 0).collect();
        assert_eq!(density_over_n(&even).unwrap().lower, 0.5);
        assert_eq!(density_over_n(&[true; 7]).unwrap().lower, 1.0);
        assert_eq!(density_over_n(&[false; 7]).unwrap().lower, 0.0);
        assert!(density_over_n(&[]).is_err());
    }

    #[test]
    fn tangent_decomposition_examples() {
        let d = solve_tangent_decomposition(RealPoint::new(1.0, 0.0), RealPoint::new(0.0, 1.0), RealPoint::new(0.0, 1.0)).unwrap();
        assert_eq!((d.s, d.t), (1.0, 1.0));
        let v = RealPoint::new(0.3, 0.7);
        let d = solve_tangent_decomposition(v, RealPoint::new(0.0, 1.0), v).unwrap();
        assert_eq!((d.s, d.t), (0.0, 0.0));
        assert_eq!(
            solve_tangent_decomposition(RealPoint::new(1.0, 0.0), RealPoint::new(1.0, 0.0), v),
            Err(Error::SingularSystem)
        );
    }

    #[test]
    fn geodesic_sequences_from_root() {
        let region = Box::centered(pt(0, 0), 10);
        let field = exp(12);
        let g = geodesic_between(&field, pt(0, 0), pt(9, 4), &region).unwrap();
        let gb = busemann_geodesic(&field, &g, pt(0, 0), pt(-3, 2), &region).unwrap();
        assert!(gb.from_x.iter().all(|&v| v == 0.0));
        assert!(gb.is_monotone());
        let last = g.last();
        let want = passage_time(&field, pt(0, 0), last, &region).unwrap() - passage_time(&field, pt(-3, 2), last, &region).unwrap();
        assert!((gb.values.last().unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn bn_deterministic_diamond_edge() {
        let shape = ShapeEstimate::diamond();
        let v = shape.tangent_info(RealPoint::new(0.5, 0.5), 1e-3).unwrap();
        assert!((v.w.cross(RealPoint::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2))).abs() < 1e-12);
        let params = LineExperimentParams { epsilon: 0.05, reps: 2, margin: 3.0, base_point: pt(0, 0) };
        let n_values: Vec<f64> = (21..=30).map(f64::from).collect();
        let exp = lemma_bn_experiment(&unit(), &shape, &v, 20.0, &n_values, &params).unwrap();
        for row in &exp.rows {
            assert_eq!(row.mean_ratio.mean, 1.0, "n = {}", row.n);
            assert_eq!(row.success.fraction, 1.0);
        }
        assert_eq!(exp.density.lower, 1.0);
    }

    #[test]
    fn slope_deterministic_along_edge() {
        let shape = ShapeEstimate::diamond();
        let v = shape.tangent_info(RealPoint::new(0.5, 0.5), 1e-3).unwrap();
        let params = LineExperimentParams { epsilon: 0.1, reps: 1, margin: 3.0, base_point: pt(0, 0) };
        // M w = 10 sqrt(2) * (-1, 1) / sqrt(2) lands on the lattice point (-10, 10).
        let m = 10.0 * 2f64.sqrt();
        let n_values: Vec<f64> = (30..=40).map(f64::from).collect();
        let exp = lemma_slope_experiment(&unit(), &shape, &v, m, &n_values, &params).unwrap();
        for row in &exp.rows {
            assert_eq!(row.mean_ratio.mean, 0.0);
        }
    }

    #[test]
    fn highprob_self_comparison() {
        let shape = ShapeEstimate::diamond();
        let v = shape.tangent_info(RealPoint::new(0.5, 0.5), 1e-3).unwrap();
        let params = LineExperimentParams { epsilon: 0.2, reps: 2, margin: 0.5, base_point: pt(0, 0) };
        let n_values: Vec<f64> = (25..=30).map(f64::from).collect();
        let (dec, exp) = lemma_highprob_experiment(&exp(4), &shape, &v, v.v, 20.0, &n_values, &params).unwrap();
        assert_eq!((dec.s, dec.t), (0.0, 0.0));
        assert!(exp.rows.iter().all(|r| r.success.fraction == 1.0));
    }

    #[test]
    fn highprob_deterministic_closed_form() {
        // y = (0.75, 0.25) on the same diamond edge as v = (0.5, 0.5):
        // v + s w = y + t v has t = 0, and under unit weights
        // B(M y, M v) = |M y|_1 gap to the line x + y = n, i.e. exactly 0.
        let shape = ShapeEstimate::diamond();
        let v = shape.tangent_info(RealPoint::new(0.5, 0.5), 1e-3).unwrap();
        let y = RealPoint::new(0.75, 0.25);
        let dec = solve_tangent_decomposition(v.v, v.w, y).unwrap();
        assert!(dec.t.abs() < 1e-15);
        let params = LineExperimentParams { epsilon: 0.1, reps: 1, margin: 3.0, base_point: pt(0, 0) };
        let n_values: Vec<f64> = (25..=28).map(f64::from).collect();
        let (_, exp) = lemma_highprob_experiment(&unit(), &shape, &v, y, 20.0, &n_values, &params).unwrap();
        for row in &exp.rows {
            assert_eq!(row.mean_ratio.mean, 0.0);
            assert_eq!(row.success.fraction, 1.0);
        }
        // A point off the edge: y = (1, 0) (the corner) also has t = 0 and B = 0.
        let y2 = RealPoint::new(0.0, 0.5);
        let dec2 = solve_tangent_decomposition(v.v, v.w, y2).unwrap();
        // v + s w = y2 + t v with w = (-1, 1)/sqrt 2: t = 1/2 (|y2|_1 = 1/2, gap 1/2).
        assert!((dec2.t - 0.5).abs() < 1e-12);
        let (_, exp2) = lemma_highprob_experiment(&unit(), &shape, &v, y2, 20.0, &n_values, &params).unwrap();
        for row in &exp2.rows {
            // B = (n - 10) - (n - 20) = 10 = M t.
            assert_eq!(row.mean_ratio.mean, 0.5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cocycle_antisymmetry_bound(seed in any::<u64>(),
                                      ax in -8i64..=8, ay in -8i64..=8,
                                      bx in -8i64..=8, by in -8i64..=8,
                                      cx in -8i64..=8, cy in -8i64..=8) {
            let field = exp(seed);
            let region = Box::centered(pt(0, 0), 12);
            let line = LineSpec::new(RealPoint::new(1.0, 0.3), RealPoint::new(-0.3, 1.0).normalized().unwrap(), 9.0).unwrap();
            let pot = LinePotential::new(&field, &line, &region).unwrap();
            let (a, b, c) = (pt(ax, ay), pt(bx, by), pt(cx, cy));
            let ab = pot.busemann(a, b).unwrap();
            let bc = pot.busemann(b, c).unwrap();
            let ac = pot.busemann(a, c).unwrap();
            prop_assert!((ab + bc - ac).abs() <= 1e-9);
            prop_assert_eq!(ab, -pot.busemann(b, a).unwrap());
            let tau = passage_time(&field, a, b, &region).unwrap();
            prop_assert!(ab <= tau + 1e-9 && -ab <= tau + 1e-9);
        }

        #[test]
        fn decomposition_residual(vx in -2.0f64..2.0, vy in -2.0f64..2.0, angle in 0.0f64..6.28, yx in -3.0f64..3.0, yy in -3.0f64..3.0) {
            let v = RealPoint::new(vx, vy);
            let w = RealPoint::from_angle(angle);
            prop_assume!(v.norm() > 0.1 && v.cross(w).abs() > 0.05 * v.norm());
            let y = RealPoint::new(yx, yy);
            let d = solve_tangent_decomposition(v, w, y).unwrap();
            let lhs = v + d.s * w;
            let rhs = y + d.t * v;
            prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + d.s.abs() + d.t.abs()) * 10.0);
        }
    }
}
