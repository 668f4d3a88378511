//! The random environment: i.i.d. edge-weight distributions and a seeded,
//! counter-based weight field.
//!
//! Every weight is a pure function of `(spec, master_seed, edge id)`. Weights
//! are quantized to integer multiples of [`TICK`], so passage times are
//! exact integer sums and comparisons between paths never suffer rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Edge;

/// Ticks per unit of time.
pub const TICKS_PER_UNIT: f64 = 4_294_967_296.0;
/// Smallest representable weight.
pub const TICK: f64 = 1.0 / TICKS_PER_UNIT;

pub fn ticks_to_time(ticks: u64) -> f64 {
    ticks as f64 * TICK
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Hash of a (key, counter) pair.
pub fn hash2(key: u64, counter: u64) -> u64 {
    mix64(mix64(key ^ GOLDEN_GAMMA).wrapping_add(counter.wrapping_mul(GOLDEN_GAMMA)) ^ key.rotate_left(17))
}

/// Maps 64 hashed bits into the open interval (0, 1).
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Deterministic { value: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    ShiftedExponential { shift: f64, rate: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: &str| {
            if c {
                Ok(())
            } else {
                Err(Error::InvalidArgument(msg.to_string()))
            }
        };
        match *self {
            Self::Deterministic { value } => ok(value > 0.0 && value.is_finite(), "deterministic value must be positive"),
            Self::Exponential { rate } => ok(rate > 0.0 && rate.is_finite(), "exponential rate must be positive"),
            Self::Uniform { lo, hi } => ok(lo > 0.0 && lo < hi && hi.is_finite(), "uniform needs 0 < lo < hi"),
            Self::ShiftedExponential { shift, rate } => ok(
                shift > 0.0 && rate > 0.0 && shift.is_finite() && rate.is_finite(),
                "shifted exponential needs positive shift and rate",
            ),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::Deterministic { .. })
    }

    /// Inverse CDF at `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::Uniform { lo, hi } => lo + (hi - lo) * u,
            Self::ShiftedExponential { shift, rate } => shift - (-u).ln_1p() / rate,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Deterministic { value } => f64::from(x >= value),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::ShiftedExponential { shift, rate } => {
                if x <= shift {
                    0.0
                } else {
                    -(-rate * (x - shift)).exp_m1()
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Exponential { rate } => 1.0 / rate,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    Guaranteed,
    Violated,
}

/// Which items of the "good measure" checklist a distribution satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub ergodic: Guarantee,
    pub lattice_symmetries: Guarantee,
    pub unique_passage_times: Guarantee,
    pub moment_bound: Guarantee,
    pub bounded_shape: Guarantee,
    pub notes: Vec<String>,
}

impl GoodnessReport {
    pub fn is_good(&self) -> bool {
        [
            self.ergodic,
            self.lattice_symmetries,
            self.unique_passage_times,
            self.moment_bound,
            self.bounded_shape,
        ]
        .iter()
        .all(|g| *g == Guarantee::Guaranteed)
    }
}

pub fn goodness(spec: &DistributionSpec) -> GoodnessReport {
    use Guarantee::*;
    let mut notes = vec!["i.i.d. edge weights: stationary, ergodic and invariant under all lattice symmetries".to_string()];
    let unique = if spec.is_continuous() {
        notes.push("continuous law: ties have probability zero; exact 64-bit ties are broken deterministically".into());
        Guaranteed
    } else {
        notes.push("atomic law: distinct paths tie, passage times are not unique".into());
        Violated
    };
    match *spec {
        DistributionSpec::Uniform { lo, .. } => notes.push(format!("support bounded away from zero (inf = {lo}); shape is bounded")),
        DistributionSpec::ShiftedExponential { shift, .. } => {
            notes.push(format!("support bounded away from zero (inf = {shift}); shape is bounded"))
        }
        DistributionSpec::Exponential { .. } => {
            notes.push("essential infimum is zero but P(w = 0) = 0 < p_c, so the time constant is positive and the shape bounded".into())
        }
        DistributionSpec::Deterministic { value } => notes.push(format!("shape is the L1 ball scaled by 1/{value}")),
    }
    GoodnessReport {
        ergodic: Guaranteed,
        lattice_symmetries: Guaranteed,
        unique_passage_times: unique,
        moment_bound: Guaranteed,
        bounded_shape: Guaranteed,
        notes,
    }
}

/// Anything that assigns a positive tick weight to every edge.
pub trait EdgeWeights: Sync {
    fn ticks_by_id(&self, edge_id: u64) -> u64;

    fn ticks(&self, e: Edge) -> u64 {
        self.ticks_by_id(e.id())
    }

    fn weight(&self, e: Edge) -> f64 {
        ticks_to_time(self.ticks(e))
    }
}

fn to_ticks(w: f64) -> u64 {
    ((w * TICKS_PER_UNIT).round() as u64).max(1)
}

/// Explicit weights on chosen edges over a constant background.
#[derive(Debug, Clone, Default)]
pub struct PinnedWeights {
    background: u64,
    pinned: std::collections::HashMap<u64, u64>,
}

impl PinnedWeights {
    pub fn new(background: f64) -> Result<Self> {
        if !(background > 0.0) || !background.is_finite() {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        Ok(Self { background: to_ticks(background), pinned: Default::default() })
    }

    pub fn pin(&mut self, e: Edge, w: f64) -> Result<&mut Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        self.pinned.insert(e.id(), to_ticks(w));
        Ok(self)
    }
}

impl EdgeWeights for PinnedWeights {
    fn ticks_by_id(&self, edge_id: u64) -> u64 {
        self.pinned.get(&edge_id).copied().unwrap_or(self.background)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightField {
    spec: DistributionSpec,
    master_seed: u64,
}

impl WeightField {
    pub fn new(spec: DistributionSpec, master_seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, master_seed })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Weight in integer ticks; always at least one tick.
    pub fn ticks(&self, e: Edge) -> u64 {
        self.ticks_by_id(e.id())
    }

    pub fn weight(&self, e: Edge) -> f64 {
        ticks_to_time(self.ticks(e))
    }

    /// Independent field for Monte Carlo replicate `index`.
    pub fn derive_replicate(&self, index: u64) -> Self {
        Self {
            spec: self.spec,
            master_seed: replicate_seed(self.master_seed, index),
        }
    }
}

impl EdgeWeights for WeightField {
    fn ticks_by_id(&self, edge_id: u64) -> u64 {
        let w = match self.spec {
            DistributionSpec::Deterministic { value } => value,
            spec => spec.quantile(open_unit(hash2(self.master_seed, edge_id))),
        };
        to_ticks(w)
    }
}

pub fn replicate_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn derive_replicate_field(field: &WeightField, replicate_index: u64) -> WeightField {
    field.derive_replicate(replicate_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticePoint;

    fn edge(i: u64) -> Edge {
        let x = (i % 1000) as i64;
        let y = (i / 1000) as i64;
        let p = LatticePoint::new(x, y);
        Edge::new(p, p.neighbors()[(i % 2) as usize * 2]).unwrap()
    }

    fn exp1() -> DistributionSpec {
        DistributionSpec::Exponential { rate: 1.0 }
    }

    #[test]
    fn deterministic_weights_are_constant() {
        let f = WeightField::new(DistributionSpec::Deterministic { value: 1.0 }, 7).unwrap();
        for i in 0..1000 {
            assert_eq!(f.weight(edge(i)), 1.0);
        }
    }

    #[test]
    fn repeated_calls_bit_identical() {
        let f = WeightField::new(exp1(), 42).unwrap();
        let e = edge(12345);
        let a = f.weight(e);
        for _ in 0..10 {
            assert_eq!(a.to_bits(), f.weight(e).to_bits());
        }
    }

    #[test]
    fn exponential_moments() {
        let f = WeightField::new(exp1(), 42).unwrap();
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut tail = 0u64;
        let mut min = f64::INFINITY;
        for i in 0..n {
            let w = f.weight(edge(i));
            sum += w;
            tail += u64::from(w > 3.0);
            min = min.min(w);
        }
        let mean = sum / n as f64;
        let p3 = tail as f64 / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((p3 - (-3.0f64).exp()).abs() < 0.005, "tail {p3}");
        assert!(min > 0.0);
    }

    fn ks_statistic(mut xs: Vec<f64>, spec: &DistributionSpec) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = spec.cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_against_cdf() {
        let specs = [
            exp1(),
            DistributionSpec::Uniform { lo: 0.5, hi: 1.5 },
            DistributionSpec::ShiftedExponential { shift: 0.25, rate: 2.0 },
        ];
        let n = 100_000u64;
        // 1% critical value of the one-sample KS statistic
        let critical = 1.628 / (n as f64).sqrt();
        for (k, spec) in specs.iter().enumerate() {
            let f = WeightField::new(*spec, 1000 + k as u64).unwrap();
            let xs = (0..n).map(|i| f.weight(edge(i))).collect();
            let d = ks_statistic(xs, spec);
            assert!(d < critical, "{spec:?}: D = {d}");
        }
    }

    #[test]
    fn weights_are_order_independent() {
        let f = WeightField::new(exp1(), 3).unwrap();
        let forward: Vec<u64> = (0..500).map(|i| f.ticks(edge(i))).collect();
        let mut backward: Vec<u64> = (0..500).rev().map(|i| f.ticks(edge(i))).collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn replicate_seeds() {
        let f = WeightField::new(exp1(), 42).unwrap();
        assert_ne!(f.derive_replicate(0).master_seed(), f.derive_replicate(1).master_seed());
        assert_eq!(f.derive_replicate(5), derive_replicate_field(&f, 5));
    }

    #[test]
    fn replicates_uncorrelated() {
        let base = WeightField::new(exp1(), 42).unwrap();
        let (a, b) = (base.derive_replicate(0), base.derive_replicate(1));
        let n = 100_000u64;
        let xs: Vec<f64> = (0..n).map(|i| a.weight(edge(i))).collect();
        let ys: Vec<f64> = (0..n).map(|i| b.weight(edge(i))).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(r.abs() < 0.01, "r = {r}");
    }

    #[test]
    fn goodness_reports() {
        assert!(goodness(&exp1()).is_good());
        assert!(goodness(&DistributionSpec::Uniform { lo: 0.5, hi: 1.5 }).is_good());
        let det = goodness(&DistributionSpec::Deterministic { value: 1.0 });
        assert_eq!(det.unique_passage_times, Guarantee::Violated);
        assert_eq!(det.ergodic, Guarantee::Guaranteed);
        assert_eq!(det.moment_bound, Guarantee::Guaranteed);
        assert!(!det.is_good());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(WeightField::new(DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }, 0).is_err());
        assert!(WeightField::new(DistributionSpec::Uniform { lo: 2.0, hi: 1.0 }, 0).is_err());
        assert!(WeightField::new(DistributionSpec::Exponential { rate: 0.0 }, 0).is_err());
        assert!(WeightField::new(DistributionSpec::Deterministic { value: -1.0 }, 0).is_err());
        assert!(WeightField::new(DistributionSpec::ShiftedExponential { shift: 0.0, rate: 1.0 }, 0).is_err());
    }

    #[test]
    fn weights_are_tick_multiples() {
        let f = WeightField::new(exp1(), 9).unwrap();
        for i in 0..1000 {
            let w = f.weight(edge(i));
            assert_eq!((w * TICKS_PER_UNIT).fract(), 0.0);
        }
    }
}
