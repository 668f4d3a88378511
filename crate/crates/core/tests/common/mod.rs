//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use fpp_core::lattice::{Box, Edge, LatticePoint};
use fpp_core::weights::{hash2, EdgeWeights};

/// Minimum tick sum over all simple paths from `from`, per endpoint, and
/// every path attaining it.
pub fn enumerate<W: EdgeWeights>(field: &W, region: &Box, from: LatticePoint) -> HashMap<LatticePoint, (u64, Vec<Vec<LatticePoint>>)> {
    fn dfs<W: EdgeWeights>(
        field: &W,
        region: &Box,
        path: &mut Vec<LatticePoint>,
        cost: u64,
        best: &mut HashMap<LatticePoint, (u64, Vec<Vec<LatticePoint>>)>,
    ) {
        let z = *path.last().unwrap();
        let entry = best.entry(z).or_insert((u64::MAX, Vec::new()));
        if cost < entry.0 {
            *entry = (cost, vec![path.clone()]);
        } else if cost == entry.0 {
            entry.1.push(path.clone());
        }
        for q in z.neighbors() {
            if region.contains(q) && !path.contains(&q) {
                let w = field.ticks(Edge::new(z, q).unwrap());
                path.push(q);
                dfs(field, region, path, cost + w, best);
                path.pop();
            }
        }
    }
    let mut best = HashMap::new();
    dfs(field, region, &mut vec![from], 0, &mut best);
    best
}

/// Uniform integer in `[lo, hi]` from a counter-based stream.
pub fn uniform(seed: u64, counter: u64, lo: i64, hi: i64) -> i64 {
    lo + (hash2(seed, counter) % (hi - lo + 1) as u64) as i64
}
