//! Competition colorings and infection trees against exhaustive path
//! enumeration on small boxes.

mod common;

use common::{enumerate, uniform};
use fpp_core::growth::{coexistence_event, run_competition};
use fpp_core::lattice::{Box, LatticePoint};
use fpp_core::trees::{ends_estimate, infection_tree};
use fpp_core::weights::{ticks_to_time, DistributionSpec, WeightField};

fn pt(x: i64, y: i64) -> LatticePoint {
    LatticePoint::new(x, y)
}

fn base() -> WeightField {
    WeightField::new(DistributionSpec::Exponential { rate: 1.0 }, 77).unwrap()
}

#[test]
fn coloring_is_the_argmin_of_enumerated_times() {
    let region = Box::new(pt(0, 0), pt(3, 3)).unwrap();
    for rep in 0..40u64 {
        let field = base().derive_replicate(rep);
        let mut seeds: Vec<LatticePoint> = Vec::new();
        let mut k = 0;
        while seeds.len() < 3 {
            let s = pt(uniform(rep, k, 0, 3), uniform(rep, k + 100, 0, 3));
            if !seeds.contains(&s) {
                seeds.push(s);
            }
            k += 1;
        }
        let oracles: Vec<_> = seeds.iter().map(|&s| enumerate(&field, &region, s)).collect();
        let outcome = run_competition(&field, &seeds, &region).unwrap();
        for z in region.points() {
            let times: Vec<u64> = oracles.iter().map(|o| o[&z].0).collect();
            let best = *times.iter().min().unwrap();
            let winner = times.iter().position(|&t| t == best).unwrap();
            assert_eq!(outcome.color(z), Some(winner as u32 + 1), "rep {rep} at {z}");
            assert_eq!(outcome.infection_time(z), Some(ticks_to_time(best)));
        }
        let sizes = outcome.class_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), region.len());
        assert!(coexistence_event(&outcome, 1).is_ok());
    }
}

#[test]
fn tree_paths_are_the_enumerated_geodesics() {
    let region = Box::new(pt(0, 0), pt(3, 3)).unwrap();
    for rep in 0..40u64 {
        let field = base().derive_replicate(1000 + rep);
        let root = pt(uniform(rep, 0, 0, 3), uniform(rep, 1, 0, 3));
        let oracle = enumerate(&field, &region, root);
        let tree = infection_tree(&field, root, &region).unwrap();
        assert_eq!(tree.vertex_count(), region.len());
        assert_eq!(tree.edge_count(), region.len() - 1);
        for z in region.points() {
            let (cost, paths) = &oracle[&z];
            assert_eq!(tree.path_to(z).as_ref(), Some(&paths[0]), "rep {rep} at {z}");
            assert_eq!(tree.depth_time(z), Some(ticks_to_time(*cost)));
        }
    }
}

#[test]
fn ends_counts_stay_bounded_by_the_outer_square() {
    let region = Box::centered(pt(0, 0), 40);
    for rep in 0..5u64 {
        let tree = infection_tree(&base().derive_replicate(rep), pt(0, 0), &region).unwrap();
        let e = ends_estimate(&tree, 10, 30).unwrap();
        // Each counted component owns at least one cell of the rho square.
        assert!(e.count >= 1 && e.count <= 8 * 30, "count {}", e.count);
        assert_eq!(e.components.len(), e.count);
    }
}
