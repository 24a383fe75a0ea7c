use super::explore::Explorer;
use super::field::{EdgeField, ForcedOpen, PrfField, SampleCtx};
use crate::error::{PercError, Result};
use crate::graphs::{EdgeId, GraphHandle, VertexCoord};
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Shortest path from `u` to `v`, exploring neighbours in key order, over at
/// most `budget` vertices.
pub fn geodesic(handle: &GraphHandle, u: &VertexCoord, v: &VertexCoord, budget: usize) -> Result<Vec<VertexCoord>> {
    handle.validate_vertex(u)?;
    handle.validate_vertex(v)?;
    let mut parent: FxHashMap<VertexCoord, Option<VertexCoord>> = FxHashMap::default();
    parent.insert(u.clone(), None);
    let mut queue = VecDeque::from([u.clone()]);
    let mut nb = Vec::new();
    while let Some(x) = queue.pop_front() {
        if &x == v {
            let mut path = vec![x.clone()];
            let mut cur = x;
            while let Some(Some(p)) = parent.get(&cur) {
                path.push(p.clone());
                cur = p.clone();
            }
            path.reverse();
            return Ok(path);
        }
        nb.clear();
        handle.neighbors_into(&x, &mut nb);
        nb.sort_unstable();
        for w in nb.drain(..) {
            if !parent.contains_key(&w) {
                if parent.len() >= budget {
                    return Err(PercError::Budget(format!("no geodesic within {budget} vertices")));
                }
                parent.insert(w.clone(), Some(x.clone()));
                queue.push_back(w);
            }
        }
    }
    Err(PercError::Path(format!("{v} is not reachable from {u}")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurgeryOutcome {
    /// A_n(u,v): u, v in distinct clusters of ω, each touching >= n edges.
    pub a_occurred: bool,
    /// Some B_{n,i} occurred.
    pub b_union_occurred: bool,
    /// B_{n,i} for i = 1..k.
    pub b: Vec<bool>,
    /// Some exploration hit the budget on both sides, leaving an event
    /// undetermined; the flags above are then not meaningful.
    pub undecided: bool,
}

struct PairStatus {
    distinct: Option<bool>,
    big: bool,
}

fn pair_status<F: EdgeField>(ex: &mut Explorer<'_>, u: &VertexCoord, v: &VertexCoord, field: &F, p: f64, n: u64, budget: u64) -> PairStatus {
    let a = ex.run(u, field, p, budget, false);
    let big_a = a.summary.censored || a.summary.touched >= n;
    if !a.summary.censored && ex.contains(v) {
        return PairStatus { distinct: Some(false), big: false };
    }
    let b = ex.run(v, field, p, budget, false);
    let big_b = b.summary.censored || b.summary.touched >= n;
    let distinct = match (a.summary.censored, b.summary.censored) {
        (false, _) => Some(true),
        (true, false) => Some(!ex.contains(u)),
        (true, true) => None,
    };
    PairStatus { distinct, big: big_a && big_b }
}

/// Evaluate A_n(u,v) under ω and each B_{n,i} under the configurations ω^i
/// that force the first i edges of a geodesic from u to v open.
pub fn verify_surgery_chain(
    handle: &GraphHandle,
    u: &VertexCoord,
    v: &VertexCoord,
    ctx: &SampleCtx,
    n: u64,
    budget: u64,
) -> Result<SurgeryOutcome> {
    if u == v {
        return Err(PercError::Config("u and v must differ".into()));
    }
    if n < 1 || budget < n {
        return Err(PercError::Config("need 1 <= n <= budget".into()));
    }
    let path = geodesic(handle, u, v, budget as usize)?;
    let gamma: Vec<EdgeId> = path.windows(2).map(|w| EdgeId::new(w[0].clone(), w[1].clone())).collect();
    Ok(surgery_with(&mut Explorer::new(handle), u, v, &gamma, &ctx.field(), ctx.p, n, budget))
}

/// Counts over many independent trials of the surgery chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgeryTally {
    pub trials: u64,
    pub a_occurred: u64,
    /// A occurred, no B_{n,i} did, and every exploration was decided.
    pub violations: u64,
    pub undecided: u64,
}

/// `verify_surgery_chain` for trials `0..trials`, sharing one geodesic.
pub fn surgery_sweep(handle: &GraphHandle, u: &VertexCoord, v: &VertexCoord, seed: u64, p: f64, n: u64, budget: u64, trials: u64) -> Result<SurgeryTally> {
    if u == v {
        return Err(PercError::Config("u and v must differ".into()));
    }
    if n < 1 || budget < n {
        return Err(PercError::Config("need 1 <= n <= budget".into()));
    }
    let path = geodesic(handle, u, v, budget as usize)?;
    let gamma: Vec<EdgeId> = path.windows(2).map(|w| EdgeId::new(w[0].clone(), w[1].clone())).collect();
    Ok((0..trials)
        .into_par_iter()
        .map_init(
            || Explorer::new(handle),
            |ex, t| {
                let o = surgery_with(ex, u, v, &gamma, &PrfField { seed, trial: t }, p, n, budget);
                SurgeryTally {
                    trials: 1,
                    a_occurred: o.a_occurred as u64,
                    violations: (!o.undecided && o.a_occurred && !o.b_union_occurred) as u64,
                    undecided: o.undecided as u64,
                }
            },
        )
        .reduce(SurgeryTally::default, |a, b| SurgeryTally {
            trials: a.trials + b.trials,
            a_occurred: a.a_occurred + b.a_occurred,
            violations: a.violations + b.violations,
            undecided: a.undecided + b.undecided,
        }))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn surgery_with<F: EdgeField>(
    ex: &mut Explorer<'_>,
    u: &VertexCoord,
    v: &VertexCoord,
    gamma: &[EdgeId],
    field: &F,
    p: f64,
    n: u64,
    budget: u64,
) -> SurgeryOutcome {
    let mut undecided = false;
    let mut status = |i: usize, ex: &mut Explorer<'_>| {
        let forced = ForcedOpen { inner: field, forced: gamma[..i].iter().cloned().collect::<FxHashSet<_>>() };
        let s = pair_status(ex, u, v, &forced, p, n, budget);
        if s.distinct.is_none() {
            undecided = true;
        }
        s
    };
    let mut prev = status(0, ex);
    let a_occurred = prev.distinct == Some(true) && prev.big;
    let mut b = Vec::with_capacity(gamma.len());
    for i in 1..=gamma.len() {
        let cur = status(i, ex);
        b.push(prev.distinct == Some(true) && prev.big && cur.distinct == Some(false));
        prev = cur;
    }
    let b_union_occurred = b.iter().any(|&x| x);
    SurgeryOutcome { a_occurred, b_union_occurred, b, undecided }
}
