use super::{check_p, check_trials};
use crate::error::{PercError, Result};
use crate::graphs::{ball, root_stabilizer_orbits, GraphHandle, VertexCoord};
use crate::percolation::{Explorer, PrfField};
use crate::stats::MCEstimate;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct KappaClass {
    pub representative: VertexCoord,
    pub distance: u32,
    pub orbit_size: usize,
    pub estimate: MCEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaReport {
    pub k: u32,
    pub classes: Vec<KappaClass>,
    /// Index into `classes` of the smallest point estimate.
    pub argmin: usize,
    pub min: MCEstimate,
}

/// κ̂_p(k): the smallest estimated two-point function τ_p(o, v) over one
/// representative v per orbit of the root stabilizer on B(o, k) minus the
/// root. A trial whose exploration hits `budget` without finding v leaves
/// the connection undecided (upper envelope).
pub fn kappa_estimate(handle: &GraphHandle, p: f64, k: u32, trials: u64, budget: u64, seed: u64) -> Result<KappaReport> {
    check_p(p)?;
    check_trials(trials)?;
    if k < 1 {
        return Err(PercError::Config("k must be at least 1".into()));
    }
    let b = ball(handle, handle.root(), k)?;
    let orbits = root_stabilizer_orbits(&b);
    let mut reps: Vec<u32> = (1..b.len() as u32).filter(|&i| orbits[i as usize] == i).collect();
    if reps.is_empty() {
        return Err(PercError::Domain("the ball contains only the root".into()));
    }
    reps.sort_by(|&x, &y| (b.dist[x as usize], &b.vertices[x as usize]).cmp(&(b.dist[y as usize], &b.vertices[y as usize])));
    let targets: Vec<VertexCoord> = reps.iter().map(|&i| b.vertices[i as usize].clone()).collect();
    // per trial: bit j set when target j is connected, plus the censoring flag
    let runs: Vec<(Vec<bool>, bool)> = (0..trials)
        .into_par_iter()
        .map_init(
            || Explorer::new(handle),
            |ex, t| {
                let out = ex.run(handle.root(), &PrfField { seed, trial: t }, p, budget, false);
                (targets.iter().map(|v| ex.contains(v)).collect(), out.summary.censored)
            },
        )
        .collect();
    let classes: Vec<KappaClass> = reps
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            let hits = runs.iter().filter(|r| r.0[j]).count() as u64;
            let unknown = runs.iter().filter(|r| !r.0[j] && r.1).count() as u64;
            KappaClass {
                representative: targets[j].clone(),
                distance: b.dist[i as usize],
                orbit_size: orbits.iter().filter(|&&o| o == i).count(),
                estimate: MCEstimate::censored(hits, unknown, trials),
            }
        })
        .collect();
    let argmin = (0..classes.len())
        .min_by(|&a, &c| classes[a].estimate.estimate.total_cmp(&classes[c].estimate.estimate))
        .expect("nonempty");
    let min = classes[argmin].estimate.clone();
    Ok(KappaReport { k, classes, argmin, min })
}
