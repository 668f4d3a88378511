//! Replication statistics: means with normal-approximation intervals,
//! Wilson intervals for proportions, and one-sided comparison tests.

use serde::{Deserialize, Serialize};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;
/// One-sided 95% standard normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one sample.
    pub sd: f64,
    /// Half-width of the 95% normal-approximation interval for the mean.
    pub ci_half: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self { count, mean: f64::NAN, sd: f64::NAN, ci_half: f64::NAN };
        }
        let n = count as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if count > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { count, mean, sd, ci_half: Z_95 * sd / n.sqrt() }
    }

    pub fn ci_low(&self) -> f64 {
        self.mean - self.ci_half
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + self.ci_half
    }

    pub fn standard_error(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        self.ci_low() <= other.ci_high() && other.ci_low() <= self.ci_high()
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Proportion with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        let fraction = if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 };
        Self { successes, trials, fraction, ci_low, ci_high }
    }

    pub fn from_flags<I: IntoIterator<Item = bool>>(flags: I) -> Self {
        let (mut s, mut t) = (0, 0);
        for f in flags {
            s += usize::from(f);
            t += 1;
        }
        Self::new(s, t)
    }
}

/// Welch z statistic for `mean(a) - mean(b)`.
pub fn welch_z(a: &Summary, b: &Summary) -> f64 {
    let se = (a.sd.powi(2) / a.count as f64 + b.sd.powi(2) / b.count as f64).sqrt();
    if se == 0.0 {
        return match (a.mean - b.mean).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        };
    }
    (a.mean - b.mean) / se
}

/// Pooled two-proportion z statistic for `p_a - p_b`.
pub fn two_proportion_z(a: &Proportion, b: &Proportion) -> f64 {
    let (na, nb) = (a.trials as f64, b.trials as f64);
    let pooled = (a.successes + b.successes) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    let diff = a.fraction - b.fraction;
    if se == 0.0 {
        return if diff > 0.0 { f64::INFINITY } else if diff < 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    diff / se
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
