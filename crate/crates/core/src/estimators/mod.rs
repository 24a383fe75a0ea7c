//! Monte Carlo estimators. Trials run in parallel; per-trial records are
//! collected in trial order and reduced sequentially, so results do not
//! depend on the number of workers.

pub mod kappa;
pub mod martingale;
pub mod one_arm;
pub mod tail;
pub mod two_arm;

pub use kappa::{kappa_estimate, KappaClass, KappaReport};
pub use martingale::{martingale_check, MartingaleReport};
pub use one_arm::{one_arm, pc_bisection, threshold_table, PcEstimate, PcMethod};
pub use tail::tail_curve;
pub use two_arm::{ghost_curve, two_arm_curve, TwoArmReport};

use crate::error::{PercError, Result};
use crate::stats::MCEstimate;
use serde::{Deserialize, Serialize};

/// Estimates over a strictly increasing grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub abscissa: Vec<f64>,
    pub points: Vec<MCEstimate>,
    pub meta: CurveMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub family: String,
    pub params: String,
    pub p: f64,
    pub h: Option<f64>,
    pub seed: u64,
    pub budget: u64,
    pub trials: u64,
}

pub(crate) fn check_grid<T: PartialOrd + Copy + std::fmt::Debug>(grid: &[T], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(PercError::Config(format!("{what} grid is empty")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PercError::Config(format!("{what} grid must be strictly increasing: {grid:?}")));
    }
    Ok(())
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PercError::Config(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

pub(crate) fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(PercError::Config("trials must be positive".into()));
    }
    Ok(())
}
