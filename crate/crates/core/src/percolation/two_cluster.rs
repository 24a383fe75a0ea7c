use super::explore::Explorer;
use super::field::{EdgeField, SampleCtx};
use crate::error::{PercError, Result};
use crate::graphs::{EdgeId, GraphHandle};
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventStatus {
    Occurred,
    NotOccurred,
    /// Both clusters hit the budget; finiteness and distinctness unknown.
    Unknown,
}

/// Joint exploration of the two endpoint clusters of an edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoClusterOutcome {
    pub e_closed: bool,
    /// None when both explorations were censored.
    pub distinct: Option<bool>,
    /// (|E(K_{e-})|, |E(K_{e+})|), lower bounds when censored.
    pub sizes: (u64, u64),
    /// |E(K_{e-}) ∪ E(K_{e+})| when both clusters are finite and distinct.
    pub union_touched: Option<u64>,
    pub censored: (bool, bool),
    /// Status of the two-arm event S_{e,n}.
    pub s_event: EventStatus,
}

impl TwoClusterOutcome {
    /// Status of S_{e,n}. A censored cluster touched more edges than the
    /// budget; if n exceeds the budget that is not enough to decide.
    pub fn s_status(&self, n: u64) -> EventStatus {
        if !self.e_closed {
            return EventStatus::NotOccurred;
        }
        let big = |s: u64, c: bool| if c { (s >= n).then_some(true) } else { Some(s >= n) };
        match self.distinct {
            None => EventStatus::Unknown,
            Some(false) => EventStatus::NotOccurred,
            Some(true) => match (big(self.sizes.0, self.censored.0), big(self.sizes.1, self.censored.1)) {
                (Some(false), _) | (_, Some(false)) => EventStatus::NotOccurred,
                (Some(true), Some(true)) => EventStatus::Occurred,
                _ => EventStatus::Unknown,
            },
        }
    }

    pub fn both_finite_distinct(&self) -> bool {
        self.e_closed && self.distinct == Some(true) && !self.censored.0 && !self.censored.1
    }

    /// Whether the outcome leaves room for the ghost event: e closed and the
    /// clusters distinct or undecided, with at least one cluster censored.
    pub fn ghost_undecided(&self) -> bool {
        self.e_closed && self.distinct != Some(false) && (self.censored.0 || self.censored.1)
    }
}

pub fn two_cluster_outcome(
    handle: &GraphHandle,
    e: &EdgeId,
    ctx: &SampleCtx,
    n: u64,
    budget: u64,
) -> Result<TwoClusterOutcome> {
    if n < 1 {
        return Err(PercError::Config("n must be at least 1".into()));
    }
    if budget < 1 {
        return Err(PercError::Config("budget must be at least 1".into()));
    }
    handle.validate_vertex(&e.lo)?;
    handle.validate_vertex(&e.hi)?;
    Ok(two_cluster_with(&mut Explorer::new(handle), e, &ctx.field(), ctx.p, n, budget))
}

pub(crate) fn two_cluster_with<F: EdgeField>(
    ex: &mut Explorer<'_>,
    e: &EdgeId,
    field: &F,
    p: f64,
    n: u64,
    budget: u64,
) -> TwoClusterOutcome {
    let e_closed = field.uniform(&e.lo, &e.hi) >= p;
    if !e_closed {
        return TwoClusterOutcome {
            e_closed,
            distinct: Some(false),
            sizes: (0, 0),
            union_touched: None,
            censored: (false, false),
            s_event: EventStatus::NotOccurred,
        };
    }
    let a = ex.run(&e.lo, field, p, budget, false);
    let a_set: FxHashSet<_> = a.cluster.iter().cloned().collect();
    if !a.summary.censored && a_set.contains(&e.hi) {
        return TwoClusterOutcome {
            e_closed,
            distinct: Some(false),
            sizes: (a.summary.touched, a.summary.touched),
            union_touched: Some(a.summary.touched),
            censored: (false, false),
            s_event: EventStatus::NotOccurred,
        };
    }
    let b = ex.run(&e.hi, field, p, budget, false);
    let (ca, cb) = (a.summary.censored, b.summary.censored);
    let distinct = match (ca, cb) {
        (false, _) => Some(true),
        (true, false) => Some(!ex.contains(&e.lo)),
        (true, true) => None,
    };
    let sizes = (a.summary.touched, b.summary.touched);
    let union_touched = (distinct == Some(true) && !ca && !cb).then(|| {
        // shared touched edges join K_{e-} to K_{e+}; all of them are closed
        let mut shared = 0u64;
        for x in &a.cluster {
            let mut nb = Vec::new();
            ex.handle().neighbors_into(x, &mut nb);
            shared += nb.iter().filter(|w| ex.contains(w)).count() as u64;
        }
        sizes.0 + sizes.1 - shared
    });
    let mut out = TwoClusterOutcome {
        e_closed,
        distinct,
        sizes,
        union_touched,
        censored: (ca, cb),
        s_event: EventStatus::Unknown,
    };
    out.s_event = out.s_status(n);
    out
}

/// Conditional probability, given ω, that both endpoint clusters touch a
/// green edge: 1 - e^{-h|E1|} - e^{-h|E2|} + e^{-h|E1 ∪ E2|}. Zero unless e
/// is closed and the clusters are finite and distinct.
pub fn ghost_two_arm_weight(outcome: &TwoClusterOutcome, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(PercError::Config(format!("ghost rate must be nonnegative, got {h}")));
    }
    let Some(u) = outcome.union_touched.filter(|_| outcome.both_finite_distinct()) else {
        return Ok(0.0);
    };
    Ok(ghost_weight(outcome.sizes.0, outcome.sizes.1, u, h))
}

/// Inclusion-exclusion for two edge sets of sizes a, b with union u.
pub fn ghost_weight(a: u64, b: u64, u: u64, h: f64) -> f64 {
    if h == f64::INFINITY {
        return if a > 0 && b > 0 { 1.0 } else { 0.0 };
    }
    // (1 - e^{-ha}) + (1 - e^{-hb}) - (1 - e^{-hu}), each term via expm1
    let g = |k: u64| -(-h * k as f64).exp_m1();
    (g(a) + g(b) - g(u)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec::*;
    use crate::graphs::VertexCoord;

    fn root_edge(g: &GraphHandle) -> EdgeId {
        let w = g.neighbors(g.root()).unwrap()[0].clone();
        EdgeId::new(g.root().clone(), w)
    }

    #[test]
    fn full_retention_never_occurs() {
        let g = GraphHandle::new(Hypercubic { d: 2 }).unwrap();
        for t in 0..20 {
            let o = two_cluster_outcome(&g, &root_edge(&g), &SampleCtx::new(0, 1.0, 0.0, t), 1, 100).unwrap();
            assert_eq!(o.s_event, EventStatus::NotOccurred);
        }
    }

    #[test]
    fn empty_configuration_always_occurs_at_n1() {
        for spec in [Hypercubic { d: 2 }, RegularTree { degree: 3 }, Cycle { n: 5 }, Grandparent { b: 2 }] {
            let g = GraphHandle::new(spec).unwrap();
            let o = two_cluster_outcome(&g, &root_edge(&g), &SampleCtx::new(0, 0.0, 0.0, 0), 1, 100).unwrap();
            assert_eq!(o.s_event, EventStatus::Occurred);
            let d = g.degree() as u64;
            assert_eq!(o.sizes, (d, d));
            assert_eq!(o.union_touched, Some(2 * d - 1));
        }
    }

    #[test]
    fn shared_edges_on_a_square() {
        // Cycle(4) at p=0 around edge {0,1}: E1 = {01, 03}, E2 = {01, 12}
        let g = GraphHandle::new(Cycle { n: 4 }).unwrap();
        let e = EdgeId::new(VertexCoord::from_ints(&[0]), VertexCoord::from_ints(&[1]));
        let o = two_cluster_outcome(&g, &e, &SampleCtx::new(0, 0.0, 0.0, 0), 2, 10).unwrap();
        assert_eq!(o.union_touched, Some(3));
        let w = ghost_two_arm_weight(&o, 1.0).unwrap();
        assert!((w - (1.0 - 2.0 * (-2.0f64).exp() + (-3.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn weight_arithmetic() {
        assert!((ghost_weight(2, 2, 3, 1.0) - 0.7791).abs() < 1e-4);
        assert_eq!(ghost_weight(2, 2, 3, 0.0), 0.0);
        assert!((ghost_weight(2, 2, 3, 60.0) - 1.0).abs() < 1e-12);
        assert_eq!(ghost_weight(2, 2, 3, f64::INFINITY), 1.0);
        let mut last = 0.0;
        for i in 0..50 {
            let w = ghost_weight(5, 9, 13, i as f64 * 0.05);
            assert!(w >= last && (0.0..=1.0).contains(&w));
            last = w;
        }
    }

    #[test]
    fn negative_rate_rejected() {
        let o = TwoClusterOutcome {
            e_closed: true,
            distinct: Some(true),
            sizes: (1, 1),
            union_touched: Some(1),
            censored: (false, false),
            s_event: EventStatus::Occurred,
        };
        assert!(ghost_two_arm_weight(&o, -1.0).is_err());
    }
}
