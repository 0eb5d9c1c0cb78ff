//! Small statistical helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate together with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Sample mean.
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / sqrt(n)).
    pub stderr: f64,
    /// Number of samples behind the estimate.
    pub samples: usize,
}

impl Estimate {
    /// Mean and standard error of a sample. Panics on an empty slice.
    pub fn from_values(values: &[f64]) -> Estimate {
        assert!(!values.is_empty(), "estimate from empty sample");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        };
        Estimate { mean, stderr, samples: values.len() }
    }

    /// Absolute deviation of `reference` from the mean, in standard errors.
    ///
    /// Returns infinity when the standard error is zero and the values differ.
    pub fn sigma_distance(&self, reference: f64) -> f64 {
        let gap = (self.mean - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }
}

/// Harmonic number `H_n = 1 + 1/2 + … + 1/n`, with `H_0 = 0`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Total variation distance between two aligned probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Plug-in estimate of the total variation distance between the laws behind
/// two samples, computed on a shared uniform binning of the pooled range.
///
/// This is a lower-bound-flavored estimator: binning can only lose
/// distinguishing power, while sampling noise adds a small positive bias when
/// the laws coincide.
pub fn binned_tv(xs: &[f64], ys: &[f64], bins: usize) -> f64 {
    assert!(bins > 0 && !xs.is_empty() && !ys.is_empty());
    let lo = xs.iter().chain(ys).cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().chain(ys).cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return 0.0;
    }
    let width = (hi - lo) / bins as f64;
    let index = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
    let mut px = vec![0.0; bins];
    let mut py = vec![0.0; bins];
    for &x in xs {
        px[index(x)] += 1.0 / xs.len() as f64;
    }
    for &y in ys {
        py[index(y)] += 1.0 / ys.len() as f64;
    }
    tv_distance(&px, &py)
}

/// Wilson score interval for a binomial proportion at `z` standard normal
/// quantiles (e.g. `z = 1.96` for a 95% interval).
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
