//! Binomial and mean estimates with confidence intervals.

use serde::{Deserialize, Serialize};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for k successes in n trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let ph = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (ph + z2 / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, ph), (center + half).clamp(ph, 1.0))
}

/// A Monte Carlo estimate. For event probabilities with censoring the point
/// estimate counts confirmed occurrences only; the envelope runs from
/// confirmed-only to confirmed-plus-censored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub censored_frac: f64,
    pub envelope_low: f64,
    pub envelope_high: f64,
    /// Standard error of the point estimate.
    pub std_err: f64,
}

impl MCEstimate {
    pub fn binomial(k: u64, n: u64) -> Self {
        Self::censored(k, 0, n)
    }

    /// `k` confirmed successes and `c` censored trials (outcome unknown).
    pub fn censored(k: u64, c: u64, n: u64) -> Self {
        let nf = n.max(1) as f64;
        let p = k as f64 / nf;
        let (lo, hi) = wilson(k, n, Z95);
        MCEstimate {
            estimate: p,
            ci_low: lo,
            ci_high: hi,
            trials: n,
            censored_frac: c as f64 / nf,
            envelope_low: p,
            envelope_high: (k + c) as f64 / nf,
            std_err: (p * (1.0 - p) / nf).sqrt(),
        }
    }

    /// Mean of real-valued samples with a normal-approximation interval;
    /// `upper` are the samples for the upper envelope.
    pub fn mean_with_envelope(samples: &[f64], upper: &[f64], censored: u64) -> Self {
        let n = samples.len().max(1) as f64;
        let (m, se) = mean_se(samples);
        let (mu, _) = mean_se(upper);
        MCEstimate {
            estimate: m,
            ci_low: m - Z95 * se,
            ci_high: m + Z95 * se,
            trials: samples.len() as u64,
            censored_frac: censored as f64 / n,
            envelope_low: m,
            envelope_high: mu,
            std_err: se,
        }
    }

    pub fn mean(samples: &[f64]) -> Self {
        Self::mean_with_envelope(samples, samples, 0)
    }

    pub fn sigma(&self) -> f64 {
        self.std_err
    }

    /// Binomial standard error at the upper envelope.
    pub fn envelope_sigma(&self) -> f64 {
        let e = self.envelope_high.clamp(0.0, 1.0);
        (e * (1.0 - e) / self.trials.max(1) as f64).sqrt()
    }

    /// |estimate - x| within `k` standard errors. A zero standard error
    /// (all-equal samples) falls back to a one-trial resolution allowance.
    pub fn within_sigmas(&self, x: f64, k: f64) -> bool {
        let floor = 1.0 / self.trials.max(1) as f64;
        (self.estimate - x).abs() <= k * self.std_err.max(floor)
    }
}

/// Sample mean and standard error of the mean, summed in order.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
