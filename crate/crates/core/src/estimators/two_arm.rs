use super::{check_grid, check_p, check_trials, Curve, CurveMeta};
use crate::error::{PercError, Result};
use crate::graphs::{root_neighbor_classes, EdgeId, GraphHandle};
use crate::percolation::two_cluster::two_cluster_with;
use crate::percolation::{EventStatus, Explorer, PrfField, TwoClusterOutcome};
use crate::stats::MCEstimate;
use rayon::prelude::*;
use serde::Serialize;

/// Two-arm estimates for every class of edges at the root, and the
/// pointwise maximum over classes (by upper envelope).
#[derive(Clone, Debug, Serialize)]
pub struct TwoArmReport {
    pub edges: Vec<EdgeId>,
    pub per_edge: Vec<Curve>,
    pub max: Curve,
}

const CLASS_BALL_LIMIT: usize = 20_000;

fn root_edges(handle: &GraphHandle) -> Result<Vec<EdgeId>> {
    Ok(root_neighbor_classes(handle, CLASS_BALL_LIMIT)?
        .into_iter()
        .map(|w| EdgeId::new(handle.root().clone(), w))
        .collect())
}

fn outcomes(handle: &GraphHandle, edges: &[EdgeId], p: f64, trials: u64, budget: u64, seed: u64) -> Vec<Vec<TwoClusterOutcome>> {
    (0..trials)
        .into_par_iter()
        .map_init(
            || Explorer::new(handle),
            |ex, t| {
                let f = PrfField { seed, trial: t };
                edges.iter().map(|e| two_cluster_with(ex, e, &f, p, 1, budget)).collect()
            },
        )
        .collect()
}

fn pick_max(curves: &[Curve]) -> Curve {
    let mut best = curves[0].clone();
    for c in &curves[1..] {
        for (i, pt) in c.points.iter().enumerate() {
            let b = &best.points[i];
            if (pt.envelope_high, pt.estimate) > (b.envelope_high, b.estimate) {
                best.points[i] = pt.clone();
            }
        }
    }
    best
}

fn meta(handle: &GraphHandle, p: f64, h: Option<f64>, seed: u64, budget: u64, trials: u64) -> CurveMeta {
    CurveMeta {
        family: handle.spec().family_name(),
        params: handle.spec().params(),
        p,
        h,
        seed,
        budget,
        trials,
    }
}

/// Q̂_p(n) = P̂(S_{e,n}) for each root edge class and each n in the grid.
/// Both-censored trials are undecided and enter the upper envelope only.
pub fn two_arm_curve(handle: &GraphHandle, p: f64, n_grid: &[u64], trials: u64, budget: u64, seed: u64) -> Result<TwoArmReport> {
    check_p(p)?;
    check_trials(trials)?;
    check_grid(n_grid, "n")?;
    let n_max = *n_grid.last().expect("nonempty grid");
    if n_max > budget {
        return Err(PercError::Config(format!("largest n ({n_max}) exceeds the budget ({budget})")));
    }
    let edges = root_edges(handle)?;
    let runs = outcomes(handle, &edges, p, trials, budget, seed);
    let per_edge: Vec<Curve> = (0..edges.len())
        .map(|j| {
            let points = n_grid
                .iter()
                .map(|&n| {
                    let (mut k, mut c) = (0, 0);
                    for r in &runs {
                        match r[j].s_status(n) {
                            EventStatus::Occurred => k += 1,
                            EventStatus::Unknown => c += 1,
                            EventStatus::NotOccurred => {}
                        }
                    }
                    MCEstimate::censored(k, c, trials)
                })
                .collect();
            Curve {
                abscissa: n_grid.iter().map(|&n| n as f64).collect(),
                points,
                meta: meta(handle, p, None, seed, budget, trials),
            }
        })
        .collect();
    let max = pick_max(&per_edge);
    Ok(TwoArmReport { edges, per_edge, max })
}

/// Mean Rao-Blackwellized ghost weight P̂(T_e) over an h grid. Trials with
/// a censored cluster that could still carry the event get weight 1 in the
/// upper envelope.
pub fn ghost_curve(handle: &GraphHandle, p: f64, h_grid: &[f64], trials: u64, budget: u64, seed: u64) -> Result<TwoArmReport> {
    check_p(p)?;
    check_trials(trials)?;
    check_grid(h_grid, "h")?;
    if h_grid[0] < 0.0 {
        return Err(PercError::Config("ghost rates must be nonnegative".into()));
    }
    let edges = root_edges(handle)?;
    let runs = outcomes(handle, &edges, p, trials, budget, seed);
    let per_edge: Vec<Curve> = (0..edges.len())
        .map(|j| {
            let undecided = runs.iter().filter(|r| r[j].ghost_undecided()).count() as u64;
            let points = h_grid
                .iter()
                .map(|&h| {
                    let lo: Vec<f64> = runs
                        .iter()
                        .map(|r| crate::percolation::ghost_two_arm_weight(&r[j], h).expect("checked rate"))
                        .collect();
                    let hi: Vec<f64> = runs
                        .iter()
                        .zip(&lo)
                        .map(|(r, &w)| if r[j].ghost_undecided() { 1.0 } else { w })
                        .collect();
                    MCEstimate::mean_with_envelope(&lo, &hi, undecided)
                })
                .collect();
            Curve {
                abscissa: h_grid.to_vec(),
                points,
                meta: meta(handle, p, None, seed, budget, trials),
            }
        })
        .collect();
    let max = pick_max(&per_edge);
    Ok(TwoArmReport { edges, per_edge, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec::*;

    #[test]
    fn full_retention_gives_zero() {
        let g = GraphHandle::new(Hypercubic { d: 2 }).unwrap();
        let r = two_arm_curve(&g, 1.0, &[1, 4, 16], 100, 100, 0).unwrap();
        assert!(r.max.points.iter().all(|e| e.estimate == 0.0 && e.envelope_high == 0.0));
        let r = ghost_curve(&g, 1.0, &[0.1, 1.0], 100, 100, 0).unwrap();
        assert!(r.max.points.iter().all(|e| e.estimate == 0.0));
    }

    #[test]
    fn classes_and_monotonicity() {
        let g = GraphHandle::new(TreeTimesLine { degree: 3 }).unwrap();
        let r = two_arm_curve(&g, 0.2, &[1, 4, 16, 64], 2000, 1000, 1).unwrap();
        assert_eq!(r.edges.len(), 2);
        for c in &r.per_edge {
            assert!(c.points.windows(2).all(|w| w[0].estimate >= w[1].estimate));
        }
        let q = ghost_curve(&g, 0.2, &[0.01, 0.1, 1.0], 2000, 1000, 1).unwrap();
        assert!(q.max.points.windows(2).all(|w| w[0].estimate <= w[1].estimate));
    }
}
