use super::{check_p, check_trials};
use crate::error::{PercError, Result};
use crate::graphs::GraphHandle;
use crate::percolation::{Explorer, PrfField};
use crate::stats::MCEstimate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Moments of the exploration martingale stopped at a horizon n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub p: f64,
    pub horizon: u64,
    /// Z_{n∧T}; mean zero.
    pub z: MCEstimate,
    pub z_sq: MCEstimate,
    /// p(1-p)(T∧n).
    pub quadratic_variation: MCEstimate,
    /// Z_{n∧T}^2 - p(1-p)(T∧n); mean zero.
    pub compensated: MCEstimate,
    /// max_{m ≤ n} Z_m^2.
    pub max_sq: MCEstimate,
    /// 4 p(1-p) n, the maximal-inequality bound on E[max Z^2].
    pub doob_bound: f64,
}

pub fn martingale_check(handle: &GraphHandle, p: f64, horizon: u64, trials: u64, seed: u64) -> Result<MartingaleReport> {
    check_p(p)?;
    check_trials(trials)?;
    if horizon == 0 {
        return Err(PercError::Config("horizon must be positive".into()));
    }
    let q = p * (1.0 - p);
    let rows: Vec<[f64; 4]> = (0..trials)
        .into_par_iter()
        .map_init(
            || Explorer::new(handle),
            |ex, t| {
                let out = ex.run(handle.root(), &PrfField { seed, trial: t }, p, horizon, true);
                let tr = out.trace.expect("trace requested");
                let z = *tr.z.last().expect("z_0 present");
                let max_sq = tr.z.iter().map(|x| x * x).fold(0.0, f64::max);
                [z, z * z, q * out.summary.touched as f64, max_sq]
            },
        )
        .collect();
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    let comp: Vec<f64> = rows.iter().map(|r| r[1] - r[2]).collect();
    Ok(MartingaleReport {
        p,
        horizon,
        z: MCEstimate::mean(&col(0)),
        z_sq: MCEstimate::mean(&col(1)),
        quadratic_variation: MCEstimate::mean(&col(2)),
        compensated: MCEstimate::mean(&comp),
        max_sq: MCEstimate::mean(&col(3)),
        doob_bound: 4.0 * q * horizon as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec::*;

    #[test]
    fn deterministic_cases() {
        let g = GraphHandle::new(Hypercubic { d: 2 }).unwrap();
        let r = martingale_check(&g, 0.0, 8, 10, 0).unwrap();
        // four closed reveals, each -0
        assert_eq!(r.z.estimate, 0.0);
        assert_eq!(r.quadratic_variation.estimate, 0.0);
        let r = martingale_check(&g, 1.0, 8, 10, 0).unwrap();
        assert_eq!(r.max_sq.estimate, 0.0);
    }

    #[test]
    fn moments_on_tree() {
        let g = GraphHandle::new(RegularTree { degree: 3 }).unwrap();
        let r = martingale_check(&g, 0.5, 16, 20_000, 3).unwrap();
        assert!(r.z.within_sigmas(0.0, 3.0));
        assert!(r.compensated.within_sigmas(0.0, 3.0));
        assert!(r.max_sq.estimate <= r.doob_bound);
    }
}
