//! Richardson competition between `k` seeds: limiting colorings, time
//! snapshots, a finite-window coexistence proxy, seed placement on the
//! limit shape and the line-Busemann coexistence check.
//!
//! Colors are 1-based; 0 marks an uninfected cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{line_target_cells, round_to_lattice, Box, LatticePoint, LineSpec};
use crate::passage::{shortest_paths, PassageMap};
use crate::shape::{ShapeEstimate, TangentInfo};
use crate::weights::{ticks_to_time, EdgeWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthOutcome {
    pub seeds: Vec<LatticePoint>,
    pub region: Box,
    /// Row-major over the region; every cell is reached, so no zeros.
    pub coloring: Vec<u32>,
    pub infection_ticks: Vec<u64>,
    /// Cells of each color on the region boundary, indexed by `color - 1`.
    pub boundary_counts: Vec<usize>,
}

impl GrowthOutcome {
    pub fn k(&self) -> usize {
        self.seeds.len()
    }

    pub fn color(&self, z: LatticePoint) -> Option<u32> {
        self.region.index(z).map(|i| self.coloring[i])
    }

    pub fn infection_time(&self, z: LatticePoint) -> Option<f64> {
        self.region.index(z).map(|i| ticks_to_time(self.infection_ticks[i]))
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &c in &self.coloring {
            sizes[c as usize - 1] += 1;
        }
        sizes
    }
}

/// Limiting configuration from one labelled multi-source sweep.
pub fn run_competition<W: EdgeWeights + ?Sized>(field: &W, seeds: &[LatticePoint], region: &Box) -> Result<GrowthOutcome> {
    let map = shortest_paths(field, seeds, region, None)?;
    Ok(outcome_from_map(&map))
}

pub(crate) fn outcome_from_map(map: &PassageMap) -> GrowthOutcome {
    let region = *map.region();
    let k = map.sources().len();
    let mut coloring = Vec::with_capacity(region.len());
    let mut infection_ticks = Vec::with_capacity(region.len());
    for z in region.points() {
        // The region is connected, so the full sweep settles every cell.
        coloring.push(map.source_label(z).expect("settled") as u32 + 1);
        infection_ticks.push(map.ticks(z).expect("settled"));
    }
    let mut boundary_counts = vec![0; k];
    for z in region.boundary_points() {
        boundary_counts[coloring[region.index(z).expect("inside")] as usize - 1] += 1;
    }
    GrowthOutcome { seeds: map.sources().to_vec(), region, coloring, infection_ticks, boundary_counts }
}

/// Color of each cell at time `t`, 0 if not yet infected.
pub fn snapshot(outcome: &GrowthOutcome, t: f64) -> Result<Vec<u32>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument("snapshot time must be nonnegative".into()));
    }
    Ok(outcome
        .coloring
        .iter()
        .zip(&outcome.infection_ticks)
        .map(|(&c, &ticks)| if ticks_to_time(ticks) <= t { c } else { 0 })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coexistence {
    pub per_color: Vec<bool>,
    pub overall: bool,
}

/// Every color owns at least `boundary_threshold` cells of the region boundary.
pub fn coexistence_event(outcome: &GrowthOutcome, boundary_threshold: usize) -> Result<Coexistence> {
    if boundary_threshold == 0 {
        return Err(Error::InvalidArgument("boundary threshold must be at least 1".into()));
    }
    let per_color: Vec<bool> = outcome.boundary_counts.iter().map(|&c| c >= boundary_threshold).collect();
    let overall = per_color.iter().all(|&b| b);
    Ok(Coexistence { per_color, overall })
}

/// Lattice points nearest to `M v_i`, with `v_i` scaled onto the shape boundary.
pub fn place_seeds_on_shape(shape: &ShapeEstimate, tangent_points: &[TangentInfo], m_big: f64) -> Result<Vec<LatticePoint>> {
    if !(m_big > 0.0) || !m_big.is_finite() {
        return Err(Error::InvalidArgument("M must be positive".into()));
    }
    let mut seeds = Vec::with_capacity(tangent_points.len());
    for (i, t) in tangent_points.iter().enumerate() {
        let v = shape.boundary_point(t.v)?;
        let s = round_to_lattice(m_big * v);
        if let Some(j) = seeds.iter().position(|&p| p == s) {
            return Err(Error::SeedCollision(j, i));
        }
        seeds.push(s);
    }
    Ok(seeds)
}

/// Per line index `n`: the line-Busemann values and the cells realising
/// each seed's distance to its own line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceCheckRow {
    pub n: f64,
    /// `B_{L_{n,v_i}}(x_j, x_i) > 0` for every ordered pair `i != j`.
    pub holds: bool,
    /// `argmin[i]`: first-settled cell of `L_{n,v_i}` in the sweep from `x_i`.
    pub argmin: Vec<LatticePoint>,
}

/// One single-source sweep per seed; then for each `n` the pairwise
/// comparisons `tau(x_j, L_{n,v_i}) > tau(x_i, L_{n,v_i})`.
pub fn busemann_coexistence_check<W: EdgeWeights + ?Sized>(
    field: &W,
    seeds: &[LatticePoint],
    tangent_points: &[TangentInfo],
    n_values: &[f64],
    region: &Box,
) -> Result<Vec<CoexistenceCheckRow>> {
    if seeds.len() != tangent_points.len() {
        return Err(Error::InvalidArgument("one tangent point per seed is required".into()));
    }
    let maps: Vec<PassageMap> = seeds.iter().map(|&s| shortest_paths(field, &[s], region, None)).collect::<Result<_>>()?;
    check_with_maps(&maps, tangent_points, n_values, region)
}

pub(crate) fn check_with_maps(
    maps: &[PassageMap],
    tangent_points: &[TangentInfo],
    n_values: &[f64],
    region: &Box,
) -> Result<Vec<CoexistenceCheckRow>> {
    let k = maps.len();
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut holds = true;
        let mut argmin = Vec::with_capacity(k);
        for (i, t) in tangent_points.iter().enumerate() {
            let cells = line_target_cells(&LineSpec::new(t.v, t.w, n)?, region)?;
            let own = maps[i].cells_hit(&cells)?;
            argmin.push(own.argmin);
            for (j, m) in maps.iter().enumerate() {
                if j != i && m.cells_hit(&cells)?.ticks <= own.ticks {
                    holds = false;
                }
            }
        }
        rows.push(CoexistenceCheckRow { n, holds, argmin });
    }
    Ok(rows)
}

/// Cells of `L_{n,v_i}` whose color is not `i` despite the check holding.
pub fn argmin_color_violations(outcome: &GrowthOutcome, rows: &[CoexistenceCheckRow]) -> usize {
    rows.iter()
        .filter(|r| r.holds)
        .flat_map(|r| r.argmin.iter().enumerate())
        .filter(|(i, &z)| outcome.color(z) != Some(*i as u32 + 1))
        .count()
}
