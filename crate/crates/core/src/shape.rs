//! Limit-shape estimation and the convex geometry of the shape: the norm
//! `T*`, tangent angles, sides, and the selection of boundary points with
//! pairwise distinct tangent lines.
//!
//! A shape is stored as a convex polygon (counterclockwise). Its gauge is
//! `T*(u) = max_i g_i . u` where `g_i` is the outward normal of edge `i`
//! divided by that edge's support distance, which makes the norm exactly
//! convex and positively homogeneous up to one rounding per product.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{round_to_lattice, LatticePoint, RealPoint};
use crate::passage::{auto_region, shortest_paths};
use crate::stats::Summary;
use crate::weights::{ticks_to_time, DistributionSpec, WeightField};

/// Tolerance for deciding that a point lies on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
/// Default angular tolerance for unique tangents.
pub const DEFAULT_TANGENT_TOLERANCE: f64 = 1e-3;
/// Runs whose clipped fraction exceeds this are rejected.
pub const MAX_CLIPPED_FRACTION: f64 = 0.05;

/// The eight symmetries of the square lattice.
pub fn lattice_symmetries(p: RealPoint) -> [RealPoint; 8] {
    let (x, y) = (p.x, p.y);
    [
        RealPoint::new(x, y),
        RealPoint::new(-y, x),
        RealPoint::new(-x, -y),
        RealPoint::new(y, -x),
        RealPoint::new(y, x),
        RealPoint::new(-x, y),
        RealPoint::new(-y, -x),
        RealPoint::new(x, -y),
    ]
}

/// One radial sample of the boundary in direction `angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub angle: f64,
    pub radius: f64,
    /// Half-width of the 95% interval for `radius`.
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMeta {
    pub spec: Option<DistributionSpec>,
    pub n: u64,
    pub replications: usize,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeEstimate {
    samples: Vec<RadialSample>,
    hull: Vec<RealPoint>,
    #[serde(skip)]
    gauges: Vec<RealPoint>,
    convexified: bool,
    meta: ShapeMeta,
}

fn cross3(o: RealPoint, a: RealPoint, b: RealPoint) -> f64 {
    (a - o).cross(b - o)
}

/// Andrew's monotone chain. Drops collinear points up to a relative
/// tolerance; returns a counterclockwise polygon.
fn convex_hull(points: &[RealPoint]) -> Vec<RealPoint> {
    let mut pts: Vec<RealPoint> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-15 && (a.y - b.y).abs() < 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-12 * scale * scale;
    let mut lower: Vec<RealPoint> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross3(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<RealPoint> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross3(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polar_angle(p: RealPoint) -> f64 {
    let a = p.angle();
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

impl ShapeEstimate {
    /// Convex hull of `points`, which must surround the origin.
    pub fn from_points(points: &[RealPoint], samples: Vec<RadialSample>, meta: ShapeMeta) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("shape points must be finite".into()));
        }
        let mut hull = convex_hull(points);
        if hull.len() < 3 {
            return Err(Error::InvalidArgument("shape needs at least three hull points".into()));
        }
        // Start at the vertex with the smallest polar angle.
        let start = (0..hull.len())
            .min_by(|&i, &j| polar_angle(hull[i]).total_cmp(&polar_angle(hull[j])))
            .expect("nonempty");
        hull.rotate_left(start);
        let mut gauges = Vec::with_capacity(hull.len());
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            let d = b - a;
            let normal = RealPoint::new(d.y, -d.x);
            let support = normal.dot(a);
            if !(support > 0.0) {
                return Err(Error::InvalidArgument("the origin must lie inside the shape".into()));
            }
            gauges.push((1.0 / support) * normal);
        }
        Ok(Self { samples, hull, gauges, convexified: true, meta })
    }

    pub fn from_polygon(vertices: &[RealPoint], source: &str) -> Result<Self> {
        let meta = ShapeMeta { spec: None, n: 0, replications: 0, source: source.to_string() };
        Self::from_points(vertices, Vec::new(), meta)
    }

    /// The unit ball of the L1 norm.
    pub fn diamond() -> Self {
        let v = [
            RealPoint::new(1.0, 0.0),
            RealPoint::new(0.0, 1.0),
            RealPoint::new(-1.0, 0.0),
            RealPoint::new(0.0, -1.0),
        ];
        Self::from_polygon(&v, "analytic diamond").expect("valid polygon")
    }

    pub fn unit_square() -> Self {
        let v = [
            RealPoint::new(1.0, 1.0),
            RealPoint::new(-1.0, 1.0),
            RealPoint::new(-1.0, -1.0),
            RealPoint::new(1.0, -1.0),
        ];
        Self::from_polygon(&v, "analytic square").expect("valid polygon")
    }

    /// Regular `m`-gon with circumradius 1 and a vertex at angle `phase`.
    pub fn regular_polygon(m: usize, phase: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidArgument("a polygon needs at least 3 vertices".into()));
        }
        let v: Vec<RealPoint> = (0..m).map(|i| RealPoint::from_angle(phase + TAU * i as f64 / m as f64)).collect();
        Self::from_polygon(&v, &format!("analytic regular {m}-gon"))
    }

    /// Inscribed `m`-gon approximation of the Euclidean unit disk.
    pub fn disk(m: usize) -> Result<Self> {
        Self::regular_polygon(m, 0.0)
    }

    /// Symmetrizes first-octant radial samples over the eight lattice
    /// symmetries and convexifies.
    pub fn from_radial_samples(samples: Vec<RadialSample>, meta: ShapeMeta) -> Result<Self> {
        if samples.iter().any(|s| !(s.radius > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        let points: Vec<RealPoint> = samples
            .iter()
            .flat_map(|s| lattice_symmetries(s.radius * RealPoint::from_angle(s.angle)))
            .collect();
        Self::from_points(&points, samples, meta)
    }

    pub fn samples(&self) -> &[RadialSample] {
        &self.samples
    }

    pub fn hull(&self) -> &[RealPoint] {
        &self.hull
    }

    pub fn is_convexified(&self) -> bool {
        self.convexified
    }

    pub fn meta(&self) -> &ShapeMeta {
        &self.meta
    }

    fn gauges(&self) -> std::borrow::Cow<'_, [RealPoint]> {
        if self.gauges.len() == self.hull.len() {
            std::borrow::Cow::Borrowed(&self.gauges)
        } else {
            // Deserialized shapes carry no cached gauges.
            let rebuilt = Self::from_points(&self.hull, Vec::new(), self.meta.clone()).expect("valid hull");
            std::borrow::Cow::Owned(rebuilt.gauges)
        }
    }

    /// The norm `T*` whose unit ball is the shape.
    pub fn norm_query(&self, u: RealPoint) -> Result<f64> {
        if u.is_zero() {
            return Err(Error::ZeroVector);
        }
        Ok(self.gauges().iter().map(|g| g.dot(u)).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Boundary point in direction `u`.
    pub fn boundary_point(&self, u: RealPoint) -> Result<RealPoint> {
        let t = self.norm_query(u)?;
        Ok((1.0 / t) * u)
    }

    fn edge_direction(&self, i: usize) -> RealPoint {
        let n = self.hull.len();
        self.hull[(i + 1) % n] - self.hull[i % n]
    }

    /// Angle in (-pi, pi] of edge `i` traversed counterclockwise.
    fn edge_angle(&self, i: usize) -> f64 {
        self.edge_direction(i).angle()
    }

    /// Support-line angles at a boundary point.
    pub fn tangent_info(&self, v: RealPoint, tolerance: f64) -> Result<TangentInfo> {
        let norm = self.norm_query(v)?;
        if (norm - 1.0).abs() > BOUNDARY_TOLERANCE {
            return Err(Error::NotOnBoundary { norm });
        }
        let gauges = self.gauges();
        let m = self.hull.len();
        let active: Vec<bool> = gauges.iter().map(|g| (g.dot(v) - 1.0).abs() <= BOUNDARY_TOLERANCE).collect();
        // First active edge of the cyclic run of active edges.
        let first = (0..m)
            .find(|&i| active[i] && !active[(i + m - 1) % m])
            .or_else(|| active.iter().position(|&a| a))
            .expect("a boundary point touches some edge");
        let mut last = first;
        while active[(last + 1) % m] && (last + 1) % m != first {
            last = (last + 1) % m;
        }
        let w_minus = self.edge_angle(first);
        let mut w_plus = self.edge_angle(last);
        if w_plus < w_minus {
            w_plus += TAU;
        }
        let unique = w_plus - w_minus < tolerance;
        Ok(TangentInfo { v, w_minus, w_plus, unique, w: RealPoint::from_angle(w_minus) })
    }

    /// Groups hull edges into sides: maximal runs whose directions stay
    /// within `tolerance` of the run's first edge. Returns the first edge of
    /// each side, in counterclockwise order.
    fn side_starts(&self, tolerance: f64) -> Vec<usize> {
        let m = self.hull.len();
        let turn = |i: usize| {
            let mut d = self.edge_angle(i) - self.edge_angle((i + m - 1) % m);
            if d < 0.0 {
                d += TAU;
            }
            d
        };
        // Begin after the sharpest corner so that no side straddles the start.
        let start = (0..m).max_by(|&i, &j| turn(i).total_cmp(&turn(j)).then(j.cmp(&i))).expect("nonempty hull");
        let mut starts = vec![start];
        let mut run_angle = 0.0;
        let mut acc = 0.0;
        for k in 1..m {
            let i = (start + k) % m;
            acc += turn(i);
            if acc - run_angle > tolerance {
                starts.push(i);
                run_angle = acc;
            }
        }
        // The last side may close up against the first.
        let total = acc + turn(start);
        if starts.len() > 1 && total - run_angle <= tolerance {
            starts.pop();
        }
        starts.sort_unstable();
        starts
    }

    /// Number of sides of the polygonal boundary at the given collinearity
    /// tolerance. A diagnostic, not a classification of the true shape.
    pub fn sides(&self, collinearity_tolerance: f64) -> usize {
        self.side_starts(collinearity_tolerance).len()
    }

    /// `k` boundary points with unique tangents whose tangent angles are
    /// pairwise more than `tolerance` apart: the midpoint of the first edge
    /// of `k` evenly spaced sides.
    pub fn select_distinct_tangent_points(&self, k: usize, tolerance: f64) -> Result<Vec<TangentInfo>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let starts = self.side_starts(tolerance);
        if starts.len() < k {
            return Err(Error::InsufficientSides { requested: k, available: starts.len() });
        }
        let m = self.hull.len();
        (0..k)
            .map(|j| {
                let i = starts[j * starts.len() / k];
                let mid = 0.5 * (self.hull[i] + self.hull[(i + 1) % m]);
                let v = self.boundary_point(mid)?;
                self.tangent_info(v, tolerance)
            })
            .collect()
    }

    /// Tangent point at the side whose first edge is closest in angle to
    /// the boundary direction `theta`.
    pub fn tangent_near_angle(&self, theta: f64, tolerance: f64) -> Result<TangentInfo> {
        let m = self.hull.len();
        let target = theta.rem_euclid(TAU);
        let mut best: Option<(f64, TangentInfo)> = None;
        for i in self.side_starts(tolerance) {
            let mid = 0.5 * (self.hull[i] + self.hull[(i + 1) % m]);
            let d = (polar_angle(mid) - target).rem_euclid(TAU);
            let d = d.min(TAU - d);
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                let v = self.boundary_point(mid)?;
                best = Some((d, self.tangent_info(v, tolerance)?));
            }
        }
        best.map(|(_, t)| t).ok_or(Error::InsufficientSides { requested: 1, available: 0 })
    }

    /// Boundary point on the coordinate half-axis `quarter_turns * pi/2`,
    /// with the tangent perpendicular to that axis. For a shape invariant
    /// under reflection in the axis this is the only candidate tangent
    /// direction, so it is reported as unique.
    pub fn axis_tangent(&self, quarter_turns: u8) -> Result<TangentInfo> {
        let dir = RealPoint::from_angle(f64::from(quarter_turns % 4) * PI / 2.0);
        let v = self.boundary_point(dir)?;
        let w_minus = polar_angle(dir) + PI / 2.0;
        let w_minus = if w_minus > PI { w_minus - TAU } else { w_minus };
        let w = RealPoint::from_angle(w_minus);
        // Snap to exact axis directions.
        let w = RealPoint::new(snap(w.x), snap(w.y));
        Ok(TangentInfo { v, w_minus, w_plus: w_minus, unique: true, w })
    }

    /// Difference quotients `(T*(v + b w) - 1) / |b|`.
    pub fn smoothness_probe(&self, info: &TangentInfo, b_values: &[f64]) -> Result<Vec<(f64, f64)>> {
        if !info.unique {
            return Err(Error::InvalidArgument("smoothness probe needs a unique tangent".into()));
        }
        b_values
            .iter()
            .map(|&b| {
                if b == 0.0 || !b.is_finite() {
                    return Err(Error::InvalidArgument("probe offsets must be nonzero".into()));
                }
                Ok((b, (self.norm_query(info.v + b * info.w)? - 1.0) / b.abs()))
            })
            .collect()
    }
}

/// Rounds values within 1e-12 of an integer to that integer.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-12 {
        r
    } else {
        x
    }
}

/// Support lines through a boundary point. Angles are those of the boundary
/// traversed counterclockwise; `w` is the unit vector at `w_minus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentInfo {
    pub v: RealPoint,
    pub w_minus: f64,
    pub w_plus: f64,
    pub unique: bool,
    pub w: RealPoint,
}

/// Smallest circular distance between two tangent angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Per-`n` Monte Carlo statistics of `tau(0, round(n v)) / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub n: f64,
    pub summary: Summary,
    pub clipped: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeConstantEstimate {
    pub v: RealPoint,
    pub estimate: f64,
    pub ci_half: f64,
    pub rows: Vec<TauRow>,
}

fn check_clipping(clipped: usize, total: usize) -> Result<()> {
    if total > 0 && clipped as f64 > MAX_CLIPPED_FRACTION * total as f64 {
        return Err(Error::ClippedRuns { clipped, total });
    }
    Ok(())
}

/// Per-replicate `(tau / n, clipped)` for every `n`, from one sweep per
/// replicate over a region sized for the largest target.
fn replicate_tau(base: &WeightField, v: RealPoint, n_values: &[f64], rep: usize, margin: f64) -> Result<Vec<(f64, bool)>> {
    let field = base.derive_replicate(rep as u64);
    let targets: Vec<LatticePoint> = n_values.iter().map(|&n| round_to_lattice(n * v)).collect();
    let region = auto_region(&[LatticePoint::ORIGIN], &targets, margin)?;
    let map = shortest_paths(&field, &[LatticePoint::ORIGIN], &region, Some(&targets))?;
    Ok(n_values
        .iter()
        .zip(&targets)
        .map(|(&n, &z)| {
            let g = map.geodesic_to(z).expect("target settled");
            (ticks_to_time(g.total_ticks) / n, g.clipped)
        })
        .collect())
}

/// Monte Carlo estimate of `T*(v)` from `tau(0, round(n v)) / n`.
pub fn estimate_time_constant(
    base: &WeightField,
    v: RealPoint,
    n_values: &[f64],
    reps: usize,
    margin: f64,
) -> Result<TimeConstantEstimate> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    if reps == 0 || n_values.is_empty() {
        return Err(Error::InvalidArgument("need at least one replicate and one n".into()));
    }
    if n_values.windows(2).any(|w| !(w[0] < w[1])) || !(n_values[0] > 0.0) {
        return Err(Error::InvalidArgument("n values must be positive and increasing".into()));
    }
    let per_rep: Vec<Vec<(f64, bool)>> = (0..reps)
        .into_par_iter()
        .map(|r| replicate_tau(base, v, n_values, r, margin))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(n_values.len());
    for (k, &n) in n_values.iter().enumerate() {
        let clipped = per_rep.iter().filter(|r| r[k].1).count();
        check_clipping(clipped, reps)?;
        let kept: Vec<f64> = per_rep.iter().filter(|r| !r[k].1).map(|r| r[k].0).collect();
        rows.push(TauRow { n, summary: Summary::of(&kept), clipped, total: reps });
    }
    let last = rows.last().expect("nonempty").summary;
    Ok(TimeConstantEstimate { v, estimate: last.mean, ci_half: last.ci_half, rows })
}

/// Estimates the limit shape from `angular_resolution` lattice directions
/// `(D, j)`, `j = 0..=D`, of the first octant, each at a scale close to `n`.
pub fn estimate_shape(base: &WeightField, angular_resolution: usize, n: u64, reps: usize, margin: f64) -> Result<ShapeEstimate> {
    if angular_resolution < 8 {
        return Err(Error::InvalidArgument("angular resolution must be at least 8".into()));
    }
    let d = (angular_resolution - 1) as i64;
    let samples: Vec<RadialSample> = (0..=d)
        .into_par_iter()
        .map(|j| {
            let dir = RealPoint::new(d as f64, j as f64);
            let scale = ((n as f64) / dir.norm()).round().max(1.0);
            // Decorrelate directions while keeping each one reproducible.
            let field = base.derive_replicate(0x5eed_0000_0000 + j as u64);
            let est = estimate_time_constant(&field, dir, &[scale], reps, margin)?;
            let len = dir.norm();
            Ok(RadialSample {
                angle: (j as f64).atan2(d as f64),
                radius: len / est.estimate,
                ci: len * est.ci_half / (est.estimate * est.estimate),
            })
        })
        .collect::<Result<_>>()?;
    let meta = ShapeMeta {
        spec: Some(*base.spec()),
        n,
        replications: reps,
        source: "monte carlo".into(),
    };
    ShapeEstimate::from_radial_samples(samples, meta)
}

/// `T*` estimates at the eight lattice images of `v`, all at scale `n`.
pub fn estimate_symmetric_images(
    base: &WeightField,
    v: RealPoint,
    n: f64,
    reps: usize,
    margin: f64,
) -> Result<Vec<TimeConstantEstimate>> {
    lattice_symmetries(v)
        .into_iter()
        .enumerate()
        .map(|(k, image)| {
            let field = base.derive_replicate(0x5137_0000 + k as u64);
            estimate_time_constant(&field, image, &[n], reps, margin)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub m_big: f64,
    pub ratio: Summary,
    pub clipped: usize,
    pub total: usize,
}

/// Monte Carlo `E[tau(-m v, M v)] / M` for each `M`, base point the origin.
pub fn expected_segment_time(
    base: &WeightField,
    v: RealPoint,
    m: f64,
    m_values: &[f64],
    reps: usize,
    margin: f64,
) -> Result<Vec<SegmentRow>> {
    if !(m > 0.0) || m_values.windows(2).any(|w| !(w[0] < w[1])) || m_values.first().map_or(true, |&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument("need m > 0 and increasing positive M values".into()));
    }
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let start = round_to_lattice(-m * v);
    let per_rep: Vec<Vec<(f64, bool)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let field = base.derive_replicate(r as u64);
            let targets: Vec<LatticePoint> = m_values.iter().map(|&mm| round_to_lattice(mm * v)).collect();
            let region = auto_region(&[start], &targets, margin)?;
            let map = shortest_paths(&field, &[start], &region, Some(&targets))?;
            Ok(m_values
                .iter()
                .zip(&targets)
                .map(|(&mm, &z)| {
                    let g = map.geodesic_to(z).expect("settled");
                    (g.total_time() / mm, g.clipped)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    m_values
        .iter()
        .enumerate()
        .map(|(k, &mm)| {
            let clipped = per_rep.iter().filter(|r| r[k].1).count();
            check_clipping(clipped, reps)?;
            let kept: Vec<f64> = per_rep.iter().filter(|r| !r[k].1).map(|r| r[k].0).collect();
            Ok(SegmentRow { m_big: mm, ratio: Summary::of(&kept), clipped, total: reps })
        })
        .collect()
}

/// Polar angle in [0, 2 pi).
pub fn boundary_angle(p: RealPoint) -> f64 {
    polar_angle(p)
}
