//! Line Busemann values from one multi-source sweep against two
//! single-source line sweeps.

mod common;

use common::uniform;
use fpp_core::busemann::{busemann_line, LinePotential};
use fpp_core::lattice::{Box, LatticePoint, LineSpec, RealPoint};
use fpp_core::passage::passage_time_to_line;
use fpp_core::weights::{DistributionSpec, WeightField};

#[test]
fn potential_agrees_with_line_sweeps() {
    let region = Box::centered(LatticePoint::new(0, 0), 40);
    let base = WeightField::new(DistributionSpec::Uniform { lo: 0.5, hi: 1.5 }, 8).unwrap();
    for rep in 0..6u64 {
        let field = base.derive_replicate(rep);
        let v = RealPoint::from_angle(0.37 + rep as f64);
        let line = LineSpec::new(v, RealPoint::new(-v.y, v.x), 30.0).unwrap();
        let pot = LinePotential::new(&field, &line, &region).unwrap();
        for i in 0..25u64 {
            let p = |k| LatticePoint::new(uniform(rep, 4 * i + k, -20, 20), uniform(rep, 4 * i + k + 2, -20, 20));
            let (x, y) = (p(0), p(1));
            let s = busemann_line(&field, &line, x, y, &region).unwrap();
            assert_eq!(s.value, pot.busemann(x, y).unwrap(), "rep {rep}: {x} {y}");
            assert_eq!(pot.ticks(x).unwrap(), passage_time_to_line(&field, x, &line, &region).unwrap().ticks);
        }
    }
}
