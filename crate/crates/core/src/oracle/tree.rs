//! Cluster-size law on the d-regular tree. The root has Bin(d, p) children
//! and every other vertex Bin(d-1, p), so the cluster size is the total
//! progeny of this branching process, and |E(K)| = |K|(d-1) + 1.

use crate::error::{PercError, Result};
use serde::{Deserialize, Serialize};

fn ln_binom_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0) + k * p.ln() + (n - k) * (-p).ln_1p()
}

fn check(d: usize, p: f64) -> Result<()> {
    if d < 2 {
        return Err(PercError::Config(format!("tree degree must be at least 2, got {d}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(PercError::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// P(|K_o| = j) for j ≥ 1 through the hitting-time formula: the k subtrees
/// hanging off the root have total size m with probability
/// (k/m) P(Bin(m(d-1), p) = m - k).
fn progeny_point(d: usize, p: f64, j: u64) -> f64 {
    if p == 0.0 {
        return if j == 1 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return 0.0;
    }
    if j == 1 {
        return (1.0 - p).powi(d as i32);
    }
    let m = j - 1;
    let mut total = 0.0;
    for k in 1..=(d as u64).min(m) {
        let ln = ln_binom_pmf(d as u64, k, p) + (k as f64 / m as f64).ln() + ln_binom_pmf(m * (d as u64 - 1), m - k, p);
        total += ln.exp();
    }
    total
}

/// Point masses P(|K_o| = j) for j = 0..=j_max (index 0 is 0).
pub fn tree_progeny_pmf(d: usize, p: f64, j_max: u64) -> Result<Vec<f64>> {
    check(d, p)?;
    Ok((0..=j_max).map(|j| if j == 0 { 0.0 } else { progeny_point(d, p, j) }).collect())
}

/// Survival probability θ(p) on the d-regular tree.
pub fn theta_tree(d: usize, p: f64) -> Result<f64> {
    check(d, p)?;
    if p * (d as f64 - 1.0) <= 1.0 {
        return Ok(0.0);
    }
    let f = |q: f64| (1.0 - p + p * q).powi(d as i32 - 1);
    // iterating from 0 increases to the minimal fixed point
    let mut q = 0.0;
    for _ in 0..10_000_000 {
        let next = f(q);
        if (next - q).abs() < 1e-16 {
            q = next;
            break;
        }
        q = next;
    }
    // Newton polish on f(q) - q
    let df = |q: f64| p * (d as f64 - 1.0) * (1.0 - p + p * q).powi(d as i32 - 2);
    for _ in 0..3 {
        let step = (f(q) - q) / (df(q) - 1.0);
        if step.is_finite() {
            q -= step;
        }
    }
    Ok(1.0 - (1.0 - p + p * q).powi(d as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeTail {
    /// P(n ≤ |E(K_o)| < ∞).
    pub tail: f64,
    /// Set when p > 1/(d-1); the tail then excludes the infinite cluster.
    pub supercritical: bool,
    pub theta: f64,
}

/// Exact P(|E(K_o)| ≥ n) on the d-regular tree.
pub fn tree_cluster_tail(d: usize, p: f64, n: u64) -> Result<TreeTail> {
    check(d, p)?;
    if n > 1_000_000 {
        return Err(PercError::Budget(format!("n = {n} exceeds 10^6")));
    }
    let theta = theta_tree(d, p)?;
    let supercritical = p * (d as f64 - 1.0) > 1.0;
    // smallest cluster size with (d-1)|K| + 1 ≥ n
    let k0 = if n <= 1 { 1 } else { (n - 1).div_ceil(d as u64 - 1).max(1) };
    let mut below = 0.0;
    for j in 1..k0 {
        below += progeny_point(d, p, j);
    }
    let mut tail = (1.0 - theta - below).max(0.0);
    if p * (d as f64 - 1.0) < 1.0 && tail < 1e-6 {
        // subcritical: sum the geometrically decaying upper tail directly
        let mut s = 0.0;
        let mut j = k0;
        loop {
            let t = progeny_point(d, p, j);
            s += t;
            if t <= s * 1e-17 || t == 0.0 || j > k0 + 10_000_000 {
                break;
            }
            j += 1;
        }
        tail = s;
    }
    Ok(TreeTail { tail, supercritical, theta })
}
