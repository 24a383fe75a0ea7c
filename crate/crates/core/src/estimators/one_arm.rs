use super::{check_grid, check_p, check_trials};
use crate::error::{PercError, Result};
use crate::graphs::GraphHandle;
use crate::percolation::{radius_thresholds, PrfField, RadiusThresholds};
use crate::stats::{mean_se, MCEstimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-trial connection thresholds up to radius `r_max` (see
/// [`radius_thresholds`]), in trial order.
pub fn threshold_table(handle: &GraphHandle, r_max: u32, trials: u64, seed: u64, max_vertices: usize) -> Vec<RadiusThresholds> {
    (0..trials)
        .into_par_iter()
        .map(|t| radius_thresholds(handle, &PrfField { seed, trial: t }, r_max, max_vertices))
        .collect()
}

/// θ̂_r(p) = P̂(o ↔ S_r) for all p at once: sorted thresholds per radius.
struct ThetaTable {
    sorted: Vec<Vec<f64>>,
    n: f64,
}

impl ThetaTable {
    fn new(rows: &[RadiusThresholds], radii: &[u32]) -> Self {
        let sorted = radii
            .iter()
            .map(|&r| {
                let mut v: Vec<f64> = rows.iter().map(|t| t.thr[r as usize]).filter(|x| !x.is_nan()).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        ThetaTable { sorted, n: rows.len() as f64 }
    }

    fn count(&self, i: usize, p: f64) -> usize {
        self.sorted[i].partition_point(|&t| t < p)
    }

    fn theta(&self, i: usize, p: f64) -> f64 {
        self.count(i, p) as f64 / self.n
    }
}

/// θ̂_r(p). Trials whose invasion ran past `max_vertices` before reaching
/// distance r are undecided (upper envelope).
pub fn one_arm(handle: &GraphHandle, p: f64, r: u32, trials: u64, max_vertices: usize, seed: u64) -> Result<MCEstimate> {
    check_p(p)?;
    check_trials(trials)?;
    if r < 1 {
        return Err(PercError::Config("r must be at least 1".into()));
    }
    let rows = threshold_table(handle, r, trials, seed, max_vertices);
    let (mut k, mut c) = (0, 0);
    for row in &rows {
        match row.connects(r as usize, p) {
            Some(true) => k += 1,
            None => c += 1,
            Some(false) => {}
        }
    }
    Ok(MCEstimate::censored(k, c, trials))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PcMethod {
    /// p̂_c(r) solves θ̂_r(p) = θ*.
    Level { theta_star: f64 },
    /// p̂_c(r) solves θ̂_r/θ̂_{r/2} = θ̂_{r/2}/θ̂_{r/4}: the decay of the
    /// one-arm probability over one doubling of scale is the same at two
    /// consecutive scales. Needs r divisible by 4.
    ScaleRatio,
}

impl Default for PcMethod {
    fn default() -> Self {
        PcMethod::ScaleRatio
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub method: PcMethod,
    pub radii: Vec<u32>,
    /// p̂_c(r) per radius; None when the statistic does not cross.
    pub crossings: Vec<Option<f64>>,
    /// Batch-means standard errors of the crossings.
    pub std_errs: Vec<Option<f64>>,
    /// Largest-radius crossing.
    pub final_estimate: f64,
    pub final_std_err: f64,
    /// Crossings are nonincreasing in r up to 2 standard errors.
    pub nonincreasing: bool,
    pub trials: u64,
}

const BATCHES: usize = 10;
const GRID_STEP: f64 = 0.0005;
/// Minimum number of connections at the largest radius for a grid point to
/// enter the ratio statistic.
const MIN_EVENTS: usize = 20;

fn level_crossing(t: &ThetaTable, i: usize, theta_star: f64) -> Option<f64> {
    let m = (theta_star * t.n).ceil().max(1.0) as usize;
    let finite = t.sorted[i].iter().filter(|x| x.is_finite()).count();
    (m <= finite).then(|| t.sorted[i][m - 1])
}

/// Ratio statistic crossing: locate the maximum of
/// f(p) = θ_r/θ_{r/2} - θ_{r/2}/θ_{r/4} (reached just above p_c), then walk
/// down to where f turns negative and interpolate.
fn ratio_crossing(t: &ThetaTable, i4: usize, i2: usize, i1: usize) -> Option<f64> {
    let steps = (1.0 / GRID_STEP) as usize;
    let mut grid = Vec::with_capacity(steps);
    for s in 1..steps {
        let p = s as f64 * GRID_STEP;
        if t.count(i1, p) < MIN_EVENTS {
            continue;
        }
        let (a, b, c) = (t.theta(i4, p), t.theta(i2, p), t.theta(i1, p));
        grid.push((p, c / b - b / a));
    }
    let (imax, &(_, fmax)) = grid.iter().enumerate().max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))?;
    if fmax <= 0.0 {
        return None;
    }
    let mut j = imax;
    while j > 0 && grid[j - 1].1 >= 0.0 {
        j -= 1;
    }
    if j == 0 {
        return None;
    }
    let (p0, f0) = grid[j - 1];
    let (p1, f1) = grid[j];
    Some(p0 + (p1 - p0) * (-f0) / (f1 - f0))
}

fn crossings_for(rows: &[RadiusThresholds], method: PcMethod, r_grid: &[u32]) -> Vec<Option<f64>> {
    match method {
        PcMethod::Level { theta_star } => {
            let t = ThetaTable::new(rows, r_grid);
            (0..r_grid.len()).map(|i| level_crossing(&t, i, theta_star)).collect()
        }
        PcMethod::ScaleRatio => r_grid
            .iter()
            .map(|&r| {
                let t = ThetaTable::new(rows, &[r / 4, r / 2, r]);
                ratio_crossing(&t, 0, 1, 2)
            })
            .collect(),
    }
}

/// Finite-radius p_c estimates for each radius in the grid. Thresholds
/// from one invasion per trial give θ̂_r(p) for every p exactly, so the
/// crossing is located without any bracketing tolerance.
pub fn pc_bisection(handle: &GraphHandle, r_grid: &[u32], method: PcMethod, trials: u64, seed: u64, max_vertices: usize) -> Result<PcEstimate> {
    check_trials(trials)?;
    check_grid(r_grid, "radius")?;
    match method {
        PcMethod::Level { theta_star } if !(theta_star > 0.0 && theta_star < 1.0) => {
            return Err(PercError::Config(format!("theta* must lie in (0, 1), got {theta_star}")));
        }
        PcMethod::ScaleRatio if r_grid.iter().any(|&r| r < 4 || r % 4 != 0) => {
            return Err(PercError::Config("scale-ratio radii must be positive multiples of 4".into()));
        }
        _ => {}
    }
    if r_grid[0] == 0 {
        return Err(PercError::Config("radii must be positive".into()));
    }
    let r_max = *r_grid.last().expect("nonempty grid");
    let rows = threshold_table(handle, r_max, trials, seed, max_vertices);
    let crossings = crossings_for(&rows, method, r_grid);
    if let PcMethod::Level { theta_star } = method {
        if let Some(i) = crossings.iter().position(Option::is_none) {
            return Err(PercError::Config(format!(
                "θ̂_{}(1) < θ* = {theta_star}: the level is not bracketed",
                r_grid[i]
            )));
        }
    }
    let chunk = (rows.len() / BATCHES).max(1);
    let batch: Vec<Vec<Option<f64>>> = rows.chunks(chunk).filter(|c| c.len() == chunk).map(|c| crossings_for(c, method, r_grid)).collect();
    let std_errs: Vec<Option<f64>> = (0..r_grid.len())
        .map(|i| {
            let xs: Vec<f64> = batch.iter().filter_map(|b| b[i]).collect();
            // batch spread scaled to the full sample
            (xs.len() >= 3).then(|| mean_se(&xs).1)
        })
        .collect();
    let Some(final_estimate) = *crossings.last().expect("nonempty") else {
        return Err(PercError::InsufficientData(format!("no crossing at radius {r_max}")));
    };
    let final_std_err = std_errs.last().copied().flatten().unwrap_or(f64::NAN);
    let nonincreasing = crossings.windows(2).zip(std_errs.windows(2)).all(|(c, s)| match (c[0], c[1]) {
        (Some(a), Some(b)) => b <= a + 2.0 * (s[0].unwrap_or(0.0) + s[1].unwrap_or(0.0)),
        _ => true,
    });
    Ok(PcEstimate {
        method,
        radii: r_grid.to_vec(),
        crossings,
        std_errs,
        final_estimate,
        final_std_err,
        nonincreasing,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec::*;

    #[test]
    fn one_arm_extremes() {
        let g = GraphHandle::new(Hypercubic { d: 2 }).unwrap();
        assert_eq!(one_arm(&g, 1.0, 5, 100, 100_000, 0).unwrap().estimate, 1.0);
        assert_eq!(one_arm(&g, 0.0, 5, 100, 100_000, 0).unwrap().estimate, 0.0);
    }

    #[test]
    fn one_arm_monotone() {
        let g = GraphHandle::new(RegularTree { degree: 3 }).unwrap();
        let mut last = 1.0;
        for r in [1, 2, 4, 8] {
            let e = one_arm(&g, 0.6, r, 3000, 1_000_000, 1).unwrap().estimate;
            assert!(e <= last);
            last = e;
        }
        let mut last = 0.0;
        for p in [0.3, 0.5, 0.7, 0.9] {
            let e = one_arm(&g, p, 6, 3000, 1_000_000, 1).unwrap().estimate;
            assert!(e >= last);
            last = e;
        }
    }

    #[test]
    fn level_method_is_a_quantile() {
        let g = GraphHandle::new(RegularTree { degree: 3 }).unwrap();
        let est = pc_bisection(&g, &[4, 8], PcMethod::Level { theta_star: 0.5 }, 4000, 2, 1_000_000).unwrap();
        let p = est.crossings[1].unwrap();
        let below = one_arm(&g, p, 8, 4000, 1_000_000, 2).unwrap().estimate;
        let above = one_arm(&g, p + 1e-12, 8, 4000, 1_000_000, 2).unwrap().estimate;
        assert!(below < 0.5 && above >= 0.5);
        // the fixed-level crossing grows with r on the tree
        assert!(est.crossings[1] > est.crossings[0]);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = GraphHandle::new(Cycle { n: 6 }).unwrap();
        assert!(pc_bisection(&g, &[4], PcMethod::Level { theta_star: 0.5 }, 100, 0, 1000).is_err());
        let z = GraphHandle::new(Hypercubic { d: 2 }).unwrap();
        assert!(pc_bisection(&z, &[6], PcMethod::ScaleRatio, 100, 0, 1000).is_err());
        assert!(pc_bisection(&z, &[8], PcMethod::Level { theta_star: 1.5 }, 100, 0, 1000).is_err());
    }
}
