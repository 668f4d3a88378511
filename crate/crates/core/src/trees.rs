//! Infection trees, annulus end counts, disjoint geodesics and the two
//! geodesic-localization events.

use std::f64::consts::TAU;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{line_target_cells, round_to_lattice, Box, Edge, LatticePoint, LineSpec, RealPoint};
use crate::passage::{geodesic_to_cells, shortest_paths, Geodesic};
use crate::shape::{angle_gap, boundary_angle, ShapeEstimate, TangentInfo};
use crate::weights::{ticks_to_time, EdgeWeights};

const NONE: u32 = u32::MAX;

/// A tree rooted at `root`, stored as parent indices over the region.
#[derive(Debug, Clone, PartialEq)]
pub struct InfectionTree {
    root: LatticePoint,
    region: Box,
    parent: Vec<u32>,
    member: Vec<bool>,
    depth_time: Vec<f64>,
}

impl InfectionTree {
    pub fn root(&self) -> LatticePoint {
        self.root
    }

    pub fn region(&self) -> &Box {
        &self.region
    }

    pub fn contains(&self, z: LatticePoint) -> bool {
        self.region.index(z).is_some_and(|i| self.member[i])
    }

    pub fn parent(&self, z: LatticePoint) -> Option<LatticePoint> {
        let i = self.region.index(z)?;
        (self.member[i] && self.parent[i] != NONE).then(|| self.region.point(self.parent[i] as usize))
    }

    pub fn parent_edge(&self, z: LatticePoint) -> Option<Edge> {
        self.parent(z).map(|p| Edge::new(p, z).expect("tree edges join neighbours"))
    }

    /// Passage time from the root for swept trees, hop count for synthetic ones.
    pub fn depth_time(&self, z: LatticePoint) -> Option<f64> {
        let i = self.region.index(z)?;
        self.member[i].then_some(self.depth_time[i])
    }

    pub fn vertex_count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().zip(&self.member).filter(|(&p, &m)| m && p != NONE).count()
    }

    pub fn vertices(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.region.points().filter(|&z| self.contains(z))
    }

    /// Tree path from the root to `z`, root first.
    pub fn path_to(&self, z: LatticePoint) -> Option<Vec<LatticePoint>> {
        if !self.contains(z) {
            return None;
        }
        let mut path = vec![z];
        let mut cur = z;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    /// A tree from explicit `(child, parent)` pairs. Depth is the hop count.
    pub fn from_parent_pairs(root: LatticePoint, region: &Box, pairs: &[(LatticePoint, LatticePoint)]) -> Result<Self> {
        let ri = region.index(root).ok_or(Error::SourceOutsideRegion(root))?;
        let n = region.len();
        let mut parent = vec![NONE; n];
        let mut member = vec![false; n];
        member[ri] = true;
        for &(c, p) in pairs {
            let ci = region.index(c).ok_or(Error::PointOutsideRegion(c))?;
            let pi = region.index(p).ok_or(Error::PointOutsideRegion(p))?;
            if !c.is_neighbor(p) {
                return Err(Error::InvalidArgument(format!("{p} is not a neighbour of {c}")));
            }
            if ci == ri || member[ci] && parent[ci] != NONE {
                return Err(Error::InvalidArgument(format!("{c} has more than one parent")));
            }
            member[ci] = true;
            parent[ci] = pi as u32;
        }
        // Every member must reach the root; depths by memoised walks.
        let mut depth = vec![f64::NAN; n];
        depth[ri] = 0.0;
        for start in 0..n {
            if !member[start] || !depth[start].is_nan() {
                continue;
            }
            let mut chain = vec![start];
            let mut cur = start;
            loop {
                let p = parent[cur];
                if p == NONE || !member[p as usize] {
                    return Err(Error::InvalidArgument(format!("{} does not reach the root", region.point(start))));
                }
                cur = p as usize;
                if !depth[cur].is_nan() {
                    break;
                }
                if chain.len() > n {
                    return Err(Error::InvalidArgument("parent pairs contain a cycle".into()));
                }
                chain.push(cur);
            }
            let mut d = depth[cur];
            for &c in chain.iter().rev() {
                d += 1.0;
                depth[c] = d;
            }
        }
        Ok(Self { root, region: *region, parent, member, depth_time: depth })
    }

    /// The tree with the subtree hanging below `z` (inclusive) removed.
    pub fn pruned(&self, z: LatticePoint) -> Result<Self> {
        if z == self.root {
            return Err(Error::InvalidArgument("cannot prune the root".into()));
        }
        let zi = self.region.index(z).ok_or(Error::PointOutsideRegion(z))?;
        let mut out = self.clone();
        for i in 0..self.member.len() {
            if !self.member[i] {
                continue;
            }
            let mut cur = i;
            loop {
                if cur == zi {
                    out.member[i] = false;
                    break;
                }
                match self.parent[cur] {
                    NONE => break,
                    p => cur = p as usize,
                }
            }
        }
        Ok(out)
    }
}

/// The union of geodesics from `root`: the predecessor tree of one full sweep.
pub fn infection_tree<W: EdgeWeights + ?Sized>(field: &W, root: LatticePoint, region: &Box) -> Result<InfectionTree> {
    let map = shortest_paths(field, &[root], region, None)?;
    let n = region.len();
    let mut parent = vec![NONE; n];
    let mut member = vec![false; n];
    let mut depth_time = vec![f64::NAN; n];
    for (i, z) in region.points().enumerate() {
        if let Some(t) = map.ticks(z) {
            member[i] = true;
            depth_time[i] = ticks_to_time(t);
            if let Some(p) = map.predecessor_point(z) {
                parent[i] = region.index(p).expect("inside") as u32;
            }
        }
    }
    Ok(InfectionTree { root, region: *region, parent, member, depth_time })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndComponent {
    /// Vertices of the component at L-infinity distance `rho` from the root, sorted.
    pub contacts: Vec<LatticePoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndsEstimate {
    pub rho0: i64,
    pub rho: i64,
    pub count: usize,
    /// Ordered by first contact vertex.
    pub components: Vec<EndComponent>,
}

/// Components of the tree restricted to the annulus
/// `rho0 <= |z - root|_inf <= rho` that meet both the inner and the outer
/// radius. Components touching only the outer radius come from branches
/// that leave the annulus and fold back, and are not counted.
pub fn ends_estimate(tree: &InfectionTree, rho0: i64, rho: i64) -> Result<EndsEstimate> {
    if !(0 < rho0 && rho0 < rho) {
        return Err(Error::InvalidArgument("need 0 < rho0 < rho".into()));
    }
    let region = tree.region();
    if !region.contains_box(&Box::centered(tree.root, rho)) {
        return Err(Error::RadiusExceedsRegion { rho });
    }
    let radius = |z: LatticePoint| (z.x - tree.root.x).abs().max((z.y - tree.root.y).abs());
    let in_annulus = |z: LatticePoint| tree.contains(z) && (rho0..=rho).contains(&radius(z));
    let mut uf = UnionFind::<usize>::new(region.len());
    for z in region.points() {
        if !in_annulus(z) {
            continue;
        }
        if let Some(p) = tree.parent(z) {
            if in_annulus(p) {
                uf.union(region.index(z).expect("inside"), region.index(p).expect("inside"));
            }
        }
    }
    // A branch survives the annulus when its component also meets the inner radius.
    let mut inner: Vec<usize> = Box::centered(tree.root, rho0)
        .boundary_points()
        .into_iter()
        .filter(|&z| tree.contains(z))
        .map(|z| uf.find(region.index(z).expect("inside")))
        .collect();
    inner.sort_unstable();
    inner.dedup();
    let mut contacts = Box::centered(tree.root, rho).boundary_points();
    contacts.retain(|&z| tree.contains(z));
    contacts.sort_unstable();
    let mut groups: Vec<(usize, Vec<LatticePoint>)> = Vec::new();
    for z in contacts {
        let rep = uf.find(region.index(z).expect("inside"));
        if inner.binary_search(&rep).is_err() {
            continue;
        }
        match groups.iter_mut().find(|(r, _)| *r == rep) {
            Some((_, v)) => v.push(z),
            None => groups.push((rep, vec![z])),
        }
    }
    let components: Vec<EndComponent> = groups.into_iter().map(|(_, contacts)| EndComponent { contacts }).collect();
    Ok(EndsEstimate { rho0, rho, count: components.len(), components })
}

/// Target of one geodesic: a line's cells or an explicit set of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSet {
    Line(LineSpec),
    Cells(Vec<LatticePoint>),
}

impl TargetSet {
    pub fn cells(&self, region: &Box) -> Result<Vec<LatticePoint>> {
        match self {
            TargetSet::Line(l) => line_target_cells(l, region),
            TargetSet::Cells(c) if c.is_empty() => Err(Error::EmptyTarget),
            TargetSet::Cells(c) => Ok(c.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointGeodesics {
    pub disjoint: bool,
    pub clipped: bool,
    pub witnesses: Vec<Geodesic>,
}

/// Geodesics from each seed to its target; true iff pairwise vertex-disjoint.
pub fn disjoint_geodesics_event<W: EdgeWeights + ?Sized>(
    field: &W,
    seeds: &[LatticePoint],
    targets: &[TargetSet],
    region: &Box,
) -> Result<DisjointGeodesics> {
    if seeds.len() != targets.len() {
        return Err(Error::InvalidArgument("one target per seed is required".into()));
    }
    let witnesses: Vec<Geodesic> = seeds
        .iter()
        .zip(targets)
        .map(|(&s, t)| geodesic_to_cells(field, s, &t.cells(region)?, region))
        .collect::<Result<_>>()?;
    let mut owner = std::collections::HashMap::new();
    let mut disjoint = true;
    for (i, g) in witnesses.iter().enumerate() {
        for &z in &g.vertices {
            if let Some(&j) = owner.get(&z) {
                if j != i {
                    disjoint = false;
                }
            } else {
                owner.insert(z, i);
            }
        }
    }
    let clipped = witnesses.iter().any(|g| g.clipped);
    Ok(DisjointGeodesics { disjoint, clipped, witnesses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub holds: bool,
    pub clipped: bool,
    /// Event 33: points where the path crosses the scaled boundary outward.
    /// Event 34: path vertices inside the scaled shape but outside the ball.
    pub witnesses: Vec<RealPoint>,
    pub geodesic: Geodesic,
}

/// Open counterclockwise arc of boundary angles from `a` to `b`.
fn in_open_arc(theta: f64, a: f64, b: f64) -> bool {
    let span = (b - a).rem_euclid(TAU);
    let d = (theta - a).rem_euclid(TAU);
    d > 0.0 && d < span
}

fn gauge(shape: &ShapeEstimate, p: RealPoint) -> Result<f64> {
    if p.is_zero() {
        return Ok(0.0);
    }
    shape.norm_query(p)
}

fn distinct_tangents(a: &TangentInfo, b: &TangentInfo) -> bool {
    !(a.unique && b.unique && angle_gap(a.w_minus, b.w_minus) < 1e-9)
}

fn line_of(shape: &ShapeEstimate, v: &TangentInfo, n: f64) -> Result<(RealPoint, LineSpec)> {
    let dir = shape.boundary_point(v.v)?;
    Ok((dir, LineSpec::new(dir, v.w, n)?))
}

/// Whether every outward crossing of `M dR` by the geodesic from the origin
/// to `L_{n,v}` lies in the open arc from `x` to `y` that contains `v`.
#[allow(clippy::too_many_arguments)]
pub fn localization_event_33<W: EdgeWeights + ?Sized>(
    field: &W,
    shape: &ShapeEstimate,
    x: &TangentInfo,
    v: &TangentInfo,
    y: &TangentInfo,
    m_big: f64,
    n: f64,
    region: &Box,
) -> Result<Localization> {
    if !(distinct_tangents(x, v) && distinct_tangents(v, y) && distinct_tangents(x, y)) {
        return Err(Error::InvalidArgument("the three boundary points need distinct tangent lines".into()));
    }
    if !(m_big > 0.0 && n > m_big) {
        return Err(Error::InvalidArgument("need 0 < M < n".into()));
    }
    let (_, line) = line_of(shape, v, n)?;
    let origin = LatticePoint::ORIGIN;
    let g = geodesic_to_cells(field, origin, &line_target_cells(&line, region)?, region)?;
    let (ax, av, ay) = (boundary_angle(x.v), boundary_angle(v.v), boundary_angle(y.v));
    let (lo, hi) = if in_open_arc(av, ax, ay) { (ax, ay) } else { (ay, ax) };
    let mut witnesses = Vec::new();
    let mut holds = true;
    for w in g.vertices.windows(2) {
        let (p, q) = (w[0].to_real(), w[1].to_real());
        let (np, nq) = (gauge(shape, p)?, gauge(shape, q)?);
        if np < m_big && m_big <= nq {
            let lambda = (m_big - np) / (nq - np);
            let c = p + lambda * (q - p);
            if !in_open_arc(boundary_angle(c), lo, hi) {
                holds = false;
            }
            witnesses.push(c);
        }
    }
    let clipped = g.clipped;
    Ok(Localization { holds, clipped, witnesses, geodesic: g })
}

/// Whether every vertex of the geodesic from `round(M v)` to `L_{n,v}`
/// lying inside `M R` is within Euclidean distance `eps M` of `M v`.
#[allow(clippy::too_many_arguments)]
pub fn localization_event_34<W: EdgeWeights + ?Sized>(
    field: &W,
    shape: &ShapeEstimate,
    v: &TangentInfo,
    m_big: f64,
    n: f64,
    eps: f64,
    region: &Box,
) -> Result<Localization> {
    if !v.unique {
        return Err(Error::InvalidArgument("v needs a unique tangent".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if !(m_big > 0.0 && n > m_big) {
        return Err(Error::InvalidArgument("need 0 < M < n".into()));
    }
    let (dir, line) = line_of(shape, v, n)?;
    let center = m_big * dir;
    let g = geodesic_to_cells(field, round_to_lattice(center), &line_target_cells(&line, region)?, region)?;
    let mut witnesses = Vec::new();
    for &z in &g.vertices {
        let p = z.to_real();
        if gauge(shape, p)? < m_big && p.distance(center) >= eps * m_big {
            witnesses.push(p);
        }
    }
    let clipped = g.clipped;
    Ok(Localization { holds: witnesses.is_empty(), clipped, witnesses, geodesic: g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passage::geodesic_between;
    use crate::weights::{DistributionSpec, WeightField};

    fn pt(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    fn unit() -> WeightField {
        WeightField::new(DistributionSpec::Deterministic { value: 1.0 }, 0).unwrap()
    }

    fn exp(seed: u64) -> WeightField {
        WeightField::new(DistributionSpec::Exponential { rate: 1.0 }, seed).unwrap()
    }

    fn arm_pairs(len: i64, dirs: &[(i64, i64)]) -> Vec<(LatticePoint, LatticePoint)> {
        let mut pairs = Vec::new();
        for &(dx, dy) in dirs {
            for k in 1..=len {
                pairs.push((pt(k * dx, k * dy), pt((k - 1) * dx, (k - 1) * dy)));
            }
        }
        pairs
    }

    #[test]
    fn tree_paths_are_geodesics() {
        let region = Box::centered(pt(0, 0), 10);
        let field = exp(4);
        let tree = infection_tree(&field, pt(0, 0), &region).unwrap();
        assert_eq!(tree.vertex_count(), region.len());
        assert_eq!(tree.edge_count(), region.len() - 1);
        for z in [pt(7, -3), pt(-10, 10), pt(0, 1), pt(0, 0)] {
            let g = geodesic_between(&field, pt(0, 0), z, &region).unwrap();
            assert_eq!(tree.path_to(z).unwrap(), g.vertices);
            assert!((tree.depth_time(z).unwrap() - g.total_time()).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_trees() {
        let region = Box::centered(pt(0, 0), 12);
        let line = InfectionTree::from_parent_pairs(pt(0, 0), &region, &arm_pairs(12, &[(1, 0)])).unwrap();
        assert_eq!(ends_estimate(&line, 5, 10).unwrap().count, 1);
        let plus = InfectionTree::from_parent_pairs(pt(0, 0), &region, &arm_pairs(12, &[(1, 0), (-1, 0), (0, 1), (0, -1)])).unwrap();
        let e = ends_estimate(&plus, 5, 10).unwrap();
        assert_eq!(e.count, 4);
        assert_eq!(e.components[0].contacts, vec![pt(-10, 0)]);
        assert_eq!(plus.depth_time(pt(0, -7)), Some(7.0));
        // Pruning an arm removes exactly one end.
        let pruned = plus.pruned(pt(0, 3)).unwrap();
        assert_eq!(ends_estimate(&pruned, 5, 10).unwrap().count, 3);
        // A branch that leaves past rho and folds back onto the outer
        // radius is not a second end.
        let mut pairs = arm_pairs(12, &[(1, 0)]);
        pairs.extend((1..=5).map(|k| (pt(12, k), pt(12, k - 1))));
        pairs.extend([(pt(11, 5), pt(12, 5)), (pt(10, 5), pt(11, 5)), (pt(9, 5), pt(10, 5))]);
        let folded = InfectionTree::from_parent_pairs(pt(0, 0), &region, &pairs).unwrap();
        assert_eq!(ends_estimate(&folded, 5, 10).unwrap().count, 1);
        // Short arms never reach the outer radius.
        let short = InfectionTree::from_parent_pairs(pt(0, 0), &region, &arm_pairs(8, &[(1, 0), (0, 1)])).unwrap();
        assert_eq!(ends_estimate(&short, 5, 10).unwrap().count, 0);
    }

    #[test]
    fn synthetic_tree_errors() {
        let region = Box::centered(pt(0, 0), 5);
        assert!(InfectionTree::from_parent_pairs(pt(0, 0), &region, &[(pt(2, 0), pt(1, 0))]).is_err());
        assert!(InfectionTree::from_parent_pairs(pt(0, 0), &region, &[(pt(2, 0), pt(0, 0))]).is_err());
        let t = InfectionTree::from_parent_pairs(pt(0, 0), &region, &[]).unwrap();
        assert_eq!(ends_estimate(&t, 3, 6), Err(Error::RadiusExceedsRegion { rho: 6 }));
        assert!(ends_estimate(&t, 3, 3).is_err());
    }

    #[test]
    fn unit_weight_ends_regression() {
        let region = Box::centered(pt(0, 0), 30);
        let tree = infection_tree(&unit(), pt(0, 0), &region).unwrap();
        let e = ends_estimate(&tree, 10, 20).unwrap();
        assert_eq!(e.count, UNIT_ENDS_10_20);
    }

    const UNIT_ENDS_10_20: usize = 40;

    #[test]
    fn pruning_never_adds_ends() {
        let region = Box::centered(pt(0, 0), 25);
        let tree = infection_tree(&exp(6), pt(0, 0), &region).unwrap();
        let before = ends_estimate(&tree, 10, 20).unwrap().count;
        for z in [pt(3, 0), pt(0, -4), pt(-2, 2), pt(12, 5)] {
            assert!(ends_estimate(&tree.pruned(z).unwrap(), 10, 20).unwrap().count <= before);
        }
    }

    #[test]
    fn disjoint_geodesics() {
        let region = Box::centered(pt(0, 0), 20);
        let one = disjoint_geodesics_event(&exp(1), &[pt(0, 0)], &[TargetSet::Cells(vec![pt(5, 5)])], &region).unwrap();
        assert!(one.disjoint);
        let shared = TargetSet::Cells(vec![pt(10, 0)]);
        let two = disjoint_geodesics_event(&exp(1), &[pt(0, 0), pt(0, 5)], &[shared.clone(), shared], &region).unwrap();
        assert!(!two.disjoint);
    }

    fn diamond_points() -> Vec<TangentInfo> {
        let d = ShapeEstimate::diamond();
        [(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)]
            .iter()
            .map(|&(x, y)| d.tangent_info(RealPoint::new(x, y), 1e-3).unwrap())
            .collect()
    }

    #[test]
    fn unit_diagonal_geodesics_are_disjoint() {
        let pts = diamond_points();
        let seeds = [pt(5, 5), pt(-5, 5), pt(-5, -5), pt(5, -5)];
        let region = Box::centered(pt(0, 0), 60);
        let targets: Vec<TargetSet> = pts.iter().map(|t| TargetSet::Line(LineSpec::new(t.v, t.w, 50.0).unwrap())).collect();
        let out = disjoint_geodesics_event(&unit(), &seeds, &targets, &region).unwrap();
        assert!(out.disjoint);
        assert!(!out.clipped);
        for (g, s) in out.witnesses.iter().zip(seeds) {
            assert_eq!(g.first(), s);
        }
    }

    #[test]
    fn unit_localization_33() {
        // Ties send the unit-weight geodesic up the y axis, so it leaves
        // 20 R exactly at the corner (0, 20): outside the open edge arc,
        // inside any arc reaching into the neighbouring edges.
        let d = ShapeEstimate::diamond();
        let v = diamond_points()[0];
        let region = Box::centered(pt(0, 0), 80);
        let corner_x = d.tangent_info(RealPoint::new(1.0, 0.0), 1e-3).unwrap();
        let corner_y = d.tangent_info(RealPoint::new(0.0, 1.0), 1e-3).unwrap();
        let edge = localization_event_33(&unit(), &d, &corner_x, &v, &corner_y, 20.0, 40.0, &region).unwrap();
        assert_eq!(edge.witnesses, vec![RealPoint::new(0.0, 20.0)]);
        assert!(!edge.holds);
        let x = d.tangent_info(RealPoint::new(0.75, -0.25), 1e-3).unwrap();
        let y = d.tangent_info(RealPoint::new(-0.25, 0.75), 1e-3).unwrap();
        let wide = localization_event_33(&unit(), &d, &x, &v, &y, 20.0, 40.0, &region).unwrap();
        assert!(wide.holds);
        // The arc is the one containing v, whichever order x and y come in.
        let swapped = localization_event_33(&unit(), &d, &y, &v, &x, 20.0, 40.0, &region).unwrap();
        assert!(swapped.holds);
    }

    #[test]
    fn unit_localization_34() {
        let d = ShapeEstimate::diamond();
        let v = diamond_points()[0];
        let region = Box::centered(pt(0, 0), 80);
        for m in [10.0, 20.0] {
            let out = localization_event_34(&unit(), &d, &v, m, 2.0 * m, 2f64.sqrt() / m, &region).unwrap();
            assert!(out.holds, "{:?}", out.witnesses);
        }
        let out = localization_event_34(&exp(3), &d, &v, 10.0, 20.0, 10.0, &region).unwrap();
        assert!(out.holds);
    }

    #[test]
    fn arcs() {
        assert!(in_open_arc(1.0, 0.5, 2.0));
        assert!(!in_open_arc(0.5, 0.5, 2.0));
        assert!(in_open_arc(0.1, 6.0, 1.0));
        assert!(!in_open_arc(3.0, 6.0, 1.0));
    }
}
