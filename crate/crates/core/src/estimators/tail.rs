use super::{check_grid, check_p, check_trials, Curve, CurveMeta};
use crate::error::{PercError, Result};
use crate::graphs::GraphHandle;
use crate::percolation::{Explorer, PrfField};
use crate::stats::MCEstimate;
use rayon::prelude::*;

/// P̂_p(|E(K_o)| >= n) for every n in the grid from one exploration per
/// trial. A censored exploration touched more than `budget` edges, so it
/// counts as a success for every n <= budget.
pub fn tail_curve(handle: &GraphHandle, p: f64, n_grid: &[u64], trials: u64, budget: u64, seed: u64) -> Result<Curve> {
    check_p(p)?;
    check_trials(trials)?;
    check_grid(n_grid, "n")?;
    let n_max = *n_grid.last().expect("nonempty grid");
    if n_max > budget {
        return Err(PercError::Config(format!("largest n ({n_max}) exceeds the budget ({budget})")));
    }
    let runs: Vec<(u64, bool)> = (0..trials)
        .into_par_iter()
        .map_init(
            || Explorer::new(handle),
            |ex, t| {
                let s = ex.run(handle.root(), &PrfField { seed, trial: t }, p, budget, false).summary;
                (s.touched, s.censored)
            },
        )
        .collect();
    let censored = runs.iter().filter(|r| r.1).count() as u64;
    let points = n_grid
        .iter()
        .map(|&n| {
            let k = runs.iter().filter(|&&(s, c)| c || s >= n).count() as u64;
            let mut e = MCEstimate::binomial(k, trials);
            e.censored_frac = censored as f64 / trials as f64;
            e
        })
        .collect();
    Ok(Curve {
        abscissa: n_grid.iter().map(|&n| n as f64).collect(),
        points,
        meta: CurveMeta {
            family: handle.spec().family_name(),
            params: handle.spec().params(),
            p,
            h: None,
            seed,
            budget,
            trials,
        },
    })
}
