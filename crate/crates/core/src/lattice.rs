//! Geometry of the square lattice: points, edges, finite boxes, and the
//! cells met by a straight line.
//!
//! A lattice point `z` stands for every real point of the half-open unit
//! cell `z + [-1/2, 1/2)^2`, so rounding a real point to the lattice is a
//! total function with no ties.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates are offset by this amount before packing into ids.
const COORD_OFFSET: i64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn is_neighbor(self, other: LatticePoint) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    /// The four lattice neighbours in the order +x, -x, +y, -y.
    pub fn neighbors(self) -> [LatticePoint; 4] {
        [
            Self::new(self.x + 1, self.y),
            Self::new(self.x - 1, self.y),
            Self::new(self.x, self.y + 1),
            Self::new(self.x, self.y - 1),
        ]
    }

    pub fn l1_norm(self) -> i64 {
        self.x.abs() + self.y.abs()
    }

    pub fn linf_norm(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }

    /// Packed, platform-stable vertex encoding used as the last tie-breaker.
    pub fn encode(self) -> u64 {
        let ux = (self.x + COORD_OFFSET) as u64;
        let uy = (self.y + COORD_OFFSET) as u64;
        (ux << 32) | uy
    }

    pub fn to_real(self) -> RealPoint {
        RealPoint::new(self.x as f64, self.y as f64)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// An undirected nearest-neighbour edge, stored with the lexicographically
/// smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: LatticePoint,
    b: LatticePoint,
}

impl Edge {
    pub fn new(p: LatticePoint, q: LatticePoint) -> Result<Self> {
        if !p.is_neighbor(q) {
            return Err(Error::InvalidArgument(format!("{p} and {q} are not lattice neighbours")));
        }
        Ok(Self::new_unchecked(p, q))
    }

    /// Caller guarantees `p` and `q` are neighbours.
    pub(crate) fn new_unchecked(p: LatticePoint, q: LatticePoint) -> Self {
        debug_assert!(p.is_neighbor(q));
        if p <= q {
            Self { a: p, b: q }
        } else {
            Self { a: q, b: p }
        }
    }

    pub fn a(&self) -> LatticePoint {
        self.a
    }

    pub fn b(&self) -> LatticePoint {
        self.b
    }

    /// The endpoint opposite `p`, if `p` is an endpoint.
    pub fn other(&self, p: LatticePoint) -> Option<LatticePoint> {
        if p == self.a {
            Some(self.b)
        } else if p == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn id(&self) -> u64 {
        canonical_edge_id(*self)
    }
}

/// Packs the smaller endpoint (offset into unsigned range) and an axis bit
/// into 64 bits. Injective for coordinates in `[-2^30, 2^30)`.
pub fn canonical_edge_id(e: Edge) -> u64 {
    let axis = u64::from(e.a.y != e.b.y);
    let ux = (e.a.x + COORD_OFFSET) as u64;
    let uy = (e.a.y + COORD_OFFSET) as u64;
    (ux << 32) | (uy << 1) | axis
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealPoint {
    pub x: f64,
    pub y: f64,
}

impl RealPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: RealPoint) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2d cross product.
    pub fn cross(self, o: RealPoint) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self::new(self.x / n, self.y / n))
    }

    pub fn distance(self, o: RealPoint) -> f64 {
        (self - o).norm()
    }
}

impl Add for RealPoint {
    type Output = RealPoint;
    fn add(self, o: RealPoint) -> RealPoint {
        RealPoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for RealPoint {
    type Output = RealPoint;
    fn sub(self, o: RealPoint) -> RealPoint {
        RealPoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for RealPoint {
    type Output = RealPoint;
    fn neg(self) -> RealPoint {
        RealPoint::new(-self.x, -self.y)
    }
}

impl Mul<RealPoint> for f64 {
    type Output = RealPoint;
    fn mul(self, p: RealPoint) -> RealPoint {
        RealPoint::new(self * p.x, self * p.y)
    }
}

impl fmt::Display for RealPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The unique `z` with `p - z` in `[-1/2, 1/2)^2`.
pub fn round_to_lattice(p: RealPoint) -> LatticePoint {
    LatticePoint::new((p.x + 0.5).floor() as i64, (p.y + 0.5).floor() as i64)
}

/// Inclusive axis-aligned box of lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Box {
    pub min: LatticePoint,
    pub max: LatticePoint,
}

impl Box {
    pub fn new(min: LatticePoint, max: LatticePoint) -> Result<Self> {
        if min.x > max.x || min.y > max.y {
            return Err(Error::EmptyRegion);
        }
        Ok(Self { min, max })
    }

    /// `[-half, half]^2` around `center`.
    pub fn centered(center: LatticePoint, half: i64) -> Self {
        let half = half.max(0);
        Self {
            min: LatticePoint::new(center.x - half, center.y - half),
            max: LatticePoint::new(center.x + half, center.y + half),
        }
    }

    pub fn width(&self) -> usize {
        (self.max.x - self.min.x + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.max.y - self.min.y + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_box(&self, other: &Box) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn on_boundary(&self, p: LatticePoint) -> bool {
        self.contains(p)
            && (p.x == self.min.x || p.x == self.max.x || p.y == self.min.y || p.y == self.max.y)
    }

    /// Row-major index, rows along y.
    pub fn index(&self, p: LatticePoint) -> Option<usize> {
        self.contains(p).then(|| {
            (p.y - self.min.y) as usize * self.width() + (p.x - self.min.x) as usize
        })
    }

    pub fn point(&self, index: usize) -> LatticePoint {
        let w = self.width();
        LatticePoint::new(self.min.x + (index % w) as i64, self.min.y + (index / w) as i64)
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (self.min.y..=self.max.y)
            .flat_map(move |y| (self.min.x..=self.max.x).map(move |x| LatticePoint::new(x, y)))
    }

    /// Boundary points, each listed once.
    pub fn boundary_points(&self) -> Vec<LatticePoint> {
        self.points().filter(|&p| self.on_boundary(p)).collect()
    }

    /// Smallest box containing every point; `None` for an empty input.
    pub fn bounding<I: IntoIterator<Item = LatticePoint>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Some(Self { min, max })
    }
}

/// The line through `n * v` in direction `w`, where `w` is a unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    v: RealPoint,
    w: RealPoint,
    n: f64,
}

impl LineSpec {
    pub fn new(v: RealPoint, w: RealPoint, n: f64) -> Result<Self> {
        if v.is_zero() || !v.is_finite() {
            return Err(Error::ZeroVector);
        }
        if !w.is_finite() || (w.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("tangent direction {w} is not a unit vector")));
        }
        if !n.is_finite() {
            return Err(Error::InvalidArgument("line index must be finite".into()));
        }
        Ok(Self { v, w, n })
    }

    pub fn v(&self) -> RealPoint {
        self.v
    }

    pub fn w(&self) -> RealPoint {
        self.w
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn anchor(&self) -> RealPoint {
        self.n * self.v
    }

    /// Same direction, different index.
    pub fn with_index(&self, n: f64) -> Self {
        Self { n, ..*self }
    }
}

/// Half-open or closed interval of the line parameter `t`.
#[derive(Debug, Clone, Copy)]
struct ParamInterval {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl ParamInterval {
    const ALL: Self = Self {
        lo: f64::NEG_INFINITY,
        lo_closed: false,
        hi: f64::INFINITY,
        hi_closed: false,
    };
    const EMPTY: Self = Self { lo: 1.0, lo_closed: false, hi: 0.0, hi_closed: false };

    /// Values of `t` with `p + t * d` in `[lo, hi)`.
    fn for_axis(p: f64, d: f64, lo: f64, hi: f64) -> Self {
        if d == 0.0 {
            return if p >= lo && p < hi { Self::ALL } else { Self::EMPTY };
        }
        let a = (lo - p) / d;
        let b = (hi - p) / d;
        if d > 0.0 {
            Self { lo: a, lo_closed: true, hi: b, hi_closed: false }
        } else {
            Self { lo: b, lo_closed: false, hi: a, hi_closed: true }
        }
    }

    fn intersect(self, o: Self) -> Self {
        let (lo, lo_closed) = if near(self.lo, o.lo) {
            (self.lo.max(o.lo), self.lo_closed && o.lo_closed)
        } else if self.lo > o.lo {
            (self.lo, self.lo_closed)
        } else {
            (o.lo, o.lo_closed)
        };
        let (hi, hi_closed) = if near(self.hi, o.hi) {
            (self.hi.min(o.hi), self.hi_closed && o.hi_closed)
        } else if self.hi < o.hi {
            (self.hi, self.hi_closed)
        } else {
            (o.hi, o.hi_closed)
        };
        Self { lo, lo_closed, hi, hi_closed }
    }

    fn is_empty(&self) -> bool {
        if near(self.lo, self.hi) {
            return !(self.lo_closed && self.hi_closed);
        }
        self.lo > self.hi
    }
}

/// Parameter values closer than this are the same point of the line. Unit
/// tangents of lattice directions are rarely exact in floating point, and
/// without the slack a line through cell corners picks up stray cells.
fn near(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-9 + 1e-12 * a.abs().max(b.abs())
}

fn cell_interval(z: LatticePoint, p: RealPoint, w: RealPoint) -> ParamInterval {
    let ix = ParamInterval::for_axis(p.x, w.x, z.x as f64 - 0.5, z.x as f64 + 0.5);
    let iy = ParamInterval::for_axis(p.y, w.y, z.y as f64 - 0.5, z.y as f64 + 0.5);
    ix.intersect(iy)
}

/// Whether the half-open cell of `z` meets the line.
pub fn cell_meets_line(z: LatticePoint, line: &LineSpec) -> bool {
    !cell_interval(z, line.anchor(), line.w).is_empty()
}

/// Cells of `region` whose half-open unit cell meets the line, sorted.
///
/// Walks the dominant axis of the direction one column (or row) at a time
/// and tests a small neighbourhood of the cells the line crosses there.
pub fn line_target_cells(line: &LineSpec, region: &Box) -> Result<Vec<LatticePoint>> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let p = line.anchor();
    let w = line.w;
    let along_x = w.x.abs() >= w.y.abs();
    let mut cells = Vec::new();
    let (outer_lo, outer_hi) = if along_x {
        (region.min.x, region.max.x)
    } else {
        (region.min.y, region.max.y)
    };
    let (inner_lo, inner_hi) = if along_x {
        (region.min.y, region.max.y)
    } else {
        (region.min.x, region.max.x)
    };
    for i in outer_lo..=outer_hi {
        // Parameter range while the dominant coordinate is inside column i.
        let (pc, dc, po, d_o) = if along_x { (p.x, w.x, p.y, w.y) } else { (p.y, w.y, p.x, w.x) };
        let t0 = (i as f64 - 0.5 - pc) / dc;
        let t1 = (i as f64 + 0.5 - pc) / dc;
        let o0 = po + t0 * d_o;
        let o1 = po + t1 * d_o;
        let lo = (o0.min(o1) + 0.5).floor() as i64 - 1;
        let hi = (o0.max(o1) + 0.5).floor() as i64 + 1;
        for j in lo.max(inner_lo)..=hi.min(inner_hi) {
            let z = if along_x { LatticePoint::new(i, j) } else { LatticePoint::new(j, i) };
            if cell_meets_line(z, line) {
                cells.push(z);
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyTarget);
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}
