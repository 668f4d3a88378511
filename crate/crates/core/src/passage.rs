//! Passage times and geodesics inside a finite box.
//!
//! The engine is a label-setting (Dijkstra) sweep over the region's internal
//! edges, using integer tick times. Candidates are ordered by
//! `(time, source label, id of the relaxing edge, vertex encoding)`, a total
//! order, so every map, label and geodesic is reproducible bit for bit even
//! when weights tie.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{line_target_cells, round_to_lattice, Box, Edge, LatticePoint, LineSpec, RealPoint};
use crate::weights::{ticks_to_time, EdgeWeights};

const UNSET: u64 = u64::MAX;
const NO_LABEL: u32 = u32::MAX;
const NO_PRED: u8 = u8::MAX;

/// Sort key of a settled vertex; earlier keys settle first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct SettleKey {
    ticks: u64,
    label: u32,
    edge_id: u64,
    vertex: u64,
}

enum StopRule<'a> {
    Never,
    /// Stop once every flagged vertex is settled.
    All(&'a [bool], usize),
    /// Stop at the first flagged vertex.
    Any(&'a [bool]),
}

#[derive(Debug, Clone)]
pub struct PassageMap {
    sources: Vec<LatticePoint>,
    region: Box,
    ticks: Vec<u64>,
    pred_dir: Vec<u8>,
    label: Vec<u32>,
    settled: usize,
}

impl PassageMap {
    pub fn sources(&self) -> &[LatticePoint] {
        &self.sources
    }

    pub fn region(&self) -> &Box {
        &self.region
    }

    pub fn settled_count(&self) -> usize {
        self.settled
    }

    pub fn is_settled(&self, z: LatticePoint) -> bool {
        self.region.index(z).is_some_and(|i| self.ticks[i] != UNSET)
    }

    pub fn ticks(&self, z: LatticePoint) -> Option<u64> {
        let i = self.region.index(z)?;
        (self.ticks[i] != UNSET).then_some(self.ticks[i])
    }

    /// Passage time from the nearest source; `None` if not settled.
    pub fn time(&self, z: LatticePoint) -> Option<f64> {
        self.ticks(z).map(ticks_to_time)
    }

    pub fn predecessor_point(&self, z: LatticePoint) -> Option<LatticePoint> {
        let i = self.region.index(z)?;
        let d = self.pred_dir[i];
        (d != NO_PRED).then(|| z.neighbors()[d as usize])
    }

    pub fn predecessor(&self, z: LatticePoint) -> Option<Edge> {
        self.predecessor_point(z).map(|p| Edge::new_unchecked(p, z))
    }

    /// Index into `sources` of the source whose tree contains `z`.
    pub fn source_label(&self, z: LatticePoint) -> Option<usize> {
        let i = self.region.index(z)?;
        (self.label[i] != NO_LABEL).then_some(self.label[i] as usize)
    }

    fn settle_key(&self, z: LatticePoint) -> Option<SettleKey> {
        let i = self.region.index(z)?;
        if self.ticks[i] == UNSET {
            return None;
        }
        Some(SettleKey {
            ticks: self.ticks[i],
            label: self.label[i],
            edge_id: self.predecessor(z).map_or(0, |e| e.id()),
            vertex: z.encode(),
        })
    }

    /// Path from the owning source to `z`, source first.
    pub fn path_to(&self, z: LatticePoint) -> Option<Vec<LatticePoint>> {
        if !self.is_settled(z) {
            return None;
        }
        let mut path = vec![z];
        let mut cur = z;
        while let Some(p) = self.predecessor_point(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    pub fn geodesic_to(&self, z: LatticePoint) -> Option<Geodesic> {
        let vertices = self.path_to(z)?;
        let total_ticks = self.ticks(z)?;
        let clipped = is_clipped(&self.region, &vertices);
        Some(Geodesic { vertices, total_ticks, clipped })
    }

    /// The settled cell of `cells` that the sweep reached first, with its time.
    pub fn first_settled(&self, cells: &[LatticePoint]) -> Option<(u64, LatticePoint)> {
        cells
            .iter()
            .filter_map(|&z| self.settle_key(z).map(|k| (k, z)))
            .min_by_key(|(k, _)| *k)
            .map(|(k, z)| (k.ticks, z))
    }

    /// Passage time from the sources to the cells of `line` in the region.
    pub fn line_hit(&self, line: &LineSpec) -> Result<LineHit> {
        let cells = line_target_cells(line, &self.region)?;
        self.cells_hit(&cells)
    }

    pub fn cells_hit(&self, cells: &[LatticePoint]) -> Result<LineHit> {
        let (ticks, argmin) = self.first_settled(cells).ok_or(Error::EmptyTarget)?;
        let path = self.path_to(argmin).expect("settled");
        Ok(LineHit {
            ticks,
            argmin,
            clipped: is_clipped(&self.region, &path),
        })
    }
}

/// True iff some vertex other than the endpoints lies on the region boundary.
pub fn is_clipped(region: &Box, path: &[LatticePoint]) -> bool {
    path.len() > 2 && path[1..path.len() - 1].iter().any(|&z| region.on_boundary(z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub vertices: Vec<LatticePoint>,
    pub total_ticks: u64,
    pub clipped: bool,
}

impl Geodesic {
    pub fn total_time(&self) -> f64 {
        ticks_to_time(self.total_ticks)
    }

    pub fn first(&self) -> LatticePoint {
        self.vertices[0]
    }

    pub fn last(&self) -> LatticePoint {
        *self.vertices.last().expect("nonempty geodesic")
    }
}

/// Minimum passage time to a target set, the cell realizing it, and whether
/// the geodesic to that cell touched the region boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineHit {
    pub ticks: u64,
    pub argmin: LatticePoint,
    pub clipped: bool,
}

impl LineHit {
    pub fn time(&self) -> f64 {
        ticks_to_time(self.ticks)
    }
}

fn validate_sources(sources: &[LatticePoint], region: &Box) -> Result<()> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if sources.is_empty() {
        return Err(Error::InvalidArgument("at least one source is required".into()));
    }
    if sources.len() >= NO_LABEL as usize {
        return Err(Error::InvalidArgument("too many sources".into()));
    }
    let mut seen = std::collections::HashSet::with_capacity(sources.len());
    for &s in sources {
        if !region.contains(s) {
            return Err(Error::SourceOutsideRegion(s));
        }
        if !seen.insert(s) {
            return Err(Error::DuplicateSource(s));
        }
    }
    Ok(())
}

fn sweep<W: EdgeWeights + ?Sized>(field: &W, sources: &[LatticePoint], region: &Box, stop: StopRule<'_>) -> Result<PassageMap> {
    validate_sources(sources, region)?;
    let n = region.len();
    // Tentative best per vertex: (ticks, label, edge id) plus predecessor.
    let mut best: Vec<(u64, u32, u64)> = vec![(UNSET, NO_LABEL, UNSET); n];
    let mut best_dir = vec![NO_PRED; n];
    let mut ticks = vec![UNSET; n];
    let mut pred_dir = vec![NO_PRED; n];
    let mut label = vec![NO_LABEL; n];
    let mut heap = BinaryHeap::new();

    for (k, &s) in sources.iter().enumerate() {
        let i = region.index(s).expect("validated");
        best[i] = (0, k as u32, 0);
        heap.push(Reverse((
            SettleKey { ticks: 0, label: k as u32, edge_id: 0, vertex: s.encode() },
            i as u32,
        )));
    }

    let mut remaining = match stop {
        StopRule::All(_, count) => count,
        _ => usize::MAX,
    };
    let mut settled = 0usize;

    while let Some(Reverse((key, i))) = heap.pop() {
        let i = i as usize;
        if ticks[i] != UNSET || (key.ticks, key.label, key.edge_id) != best[i] {
            continue;
        }
        ticks[i] = key.ticks;
        label[i] = key.label;
        pred_dir[i] = best_dir[i];
        settled += 1;

        match stop {
            StopRule::All(flags, _) if flags[i] => {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            StopRule::Any(flags) if flags[i] => break,
            _ => {}
        }

        let z = region.point(i);
        for (d, q) in z.neighbors().into_iter().enumerate() {
            let Some(j) = region.index(q) else { continue };
            if ticks[j] != UNSET {
                continue;
            }
            let edge_id = Edge::new_unchecked(z, q).id();
            let t = key.ticks + field.ticks_by_id(edge_id);
            let cand = (t, key.label, edge_id);
            if cand < best[j] {
                best[j] = cand;
                // Direction from q back to z: neighbours come in (+x,-x,+y,-y) pairs.
                best_dir[j] = (d ^ 1) as u8;
                heap.push(Reverse((SettleKey { ticks: t, label: key.label, edge_id, vertex: q.encode() }, j as u32)));
            }
        }
    }

    Ok(PassageMap {
        sources: sources.to_vec(),
        region: *region,
        ticks,
        pred_dir,
        label,
        settled,
    })
}

fn flags_for(region: &Box, targets: &[LatticePoint]) -> Result<(Vec<bool>, usize)> {
    let mut flags = vec![false; region.len()];
    let mut count = 0;
    for &t in targets {
        let i = region.index(t).ok_or(Error::PointOutsideRegion(t))?;
        if !flags[i] {
            flags[i] = true;
            count += 1;
        }
    }
    Ok((flags, count))
}

/// Labelled multi-source sweep. With `stop_targets`, the sweep ends as soon
/// as every target is settled; vertices not yet settled read as unvisited.
pub fn shortest_paths<W: EdgeWeights + ?Sized>(field: &W,
    sources: &[LatticePoint],
    region: &Box,
    stop_targets: Option<&[LatticePoint]>,
) -> Result<PassageMap> {
    match stop_targets {
        None => sweep(field, sources, region, StopRule::Never),
        Some(targets) => {
            let (flags, count) = flags_for(region, targets)?;
            if count == 0 {
                return sweep(field, sources, region, StopRule::Never);
            }
            sweep(field, sources, region, StopRule::All(&flags, count))
        }
    }
}

/// Sweep that stops at the first settled cell of `targets`.
pub fn shortest_paths_to_any<W: EdgeWeights + ?Sized>(field: &W,
    sources: &[LatticePoint],
    region: &Box,
    targets: &[LatticePoint],
) -> Result<PassageMap> {
    if targets.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let (flags, _) = flags_for(region, targets)?;
    sweep(field, sources, region, StopRule::Any(&flags))
}

fn check_in_region(region: &Box, points: &[LatticePoint]) -> Result<()> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    match points.iter().find(|p| !region.contains(**p)) {
        Some(&p) => Err(Error::PointOutsideRegion(p)),
        None => Ok(()),
    }
}

pub fn passage_ticks<W: EdgeWeights + ?Sized>(field: &W, x: LatticePoint, y: LatticePoint, region: &Box) -> Result<u64> {
    check_in_region(region, &[x, y])?;
    let map = shortest_paths(field, &[x], region, Some(&[y]))?;
    map.ticks(y).ok_or(Error::Unreachable(y))
}

/// Passage time restricted to paths inside `region`.
pub fn passage_time<W: EdgeWeights + ?Sized>(field: &W, x: LatticePoint, y: LatticePoint, region: &Box) -> Result<f64> {
    passage_ticks(field, x, y, region).map(ticks_to_time)
}

/// Passage time between real points, each represented by its lattice cell.
pub fn passage_time_real<W: EdgeWeights + ?Sized>(field: &W, p: RealPoint, q: RealPoint, region: &Box) -> Result<f64> {
    passage_time(field, round_to_lattice(p), round_to_lattice(q), region)
}

pub fn geodesic_between<W: EdgeWeights + ?Sized>(field: &W, x: LatticePoint, y: LatticePoint, region: &Box) -> Result<Geodesic> {
    check_in_region(region, &[x, y])?;
    let map = shortest_paths(field, &[x], region, Some(&[y]))?;
    map.geodesic_to(y).ok_or(Error::Unreachable(y))
}

/// Passage time from `x` to the set of region cells met by `line`.
pub fn passage_time_to_line<W: EdgeWeights + ?Sized>(field: &W, x: LatticePoint, line: &LineSpec, region: &Box) -> Result<LineHit> {
    check_in_region(region, &[x])?;
    let cells = line_target_cells(line, region)?;
    let map = shortest_paths_to_any(field, &[x], region, &cells)?;
    map.cells_hit(&cells)
}

/// Geodesic from `x` to the first-reached cell of `targets`.
pub fn geodesic_to_cells<W: EdgeWeights + ?Sized>(field: &W, x: LatticePoint, targets: &[LatticePoint], region: &Box) -> Result<Geodesic> {
    check_in_region(region, &[x])?;
    let map = shortest_paths_to_any(field, &[x], region, targets)?;
    let hit = map.cells_hit(targets)?;
    Ok(map.geodesic_to(hit.argmin).expect("settled"))
}

/// Bounding box of all points, grown on every side by `margin` times the
/// L-infinity diameter of the point set (rounded outward).
pub fn auto_region(sources: &[LatticePoint], targets: &[LatticePoint], margin: f64) -> Result<Box> {
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(Error::InvalidArgument("margin must be a finite nonnegative number".into()));
    }
    let bbox = Box::bounding(sources.iter().chain(targets).copied()).ok_or(Error::EmptyRegion)?;
    let diameter = (bbox.max.x - bbox.min.x).max(bbox.max.y - bbox.min.y) as f64;
    let pad = (margin * diameter).ceil() as i64;
    Box::new(
        LatticePoint::new(bbox.min.x - pad, bbox.min.y - pad),
        LatticePoint::new(bbox.max.x + pad, bbox.max.y + pad),
    )
}
