use crate::graphs::{EdgeId, VertexCoord};
use crate::rng::{Prf, Stream};
use rustc_hash::FxHashSet;

/// Master seed, retention probability, ghost rate and trial index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleCtx {
    pub seed: u64,
    pub p: f64,
    pub h: f64,
    pub trial: u64,
}

impl SampleCtx {
    pub fn new(seed: u64, p: f64, h: f64, trial: u64) -> Self {
        SampleCtx { seed, p, h, trial }
    }

    pub fn field(&self) -> PrfField {
        PrfField { seed: self.seed, trial: self.trial }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeState {
    Open,
    Closed,
}

/// Source of the per-edge uniforms u(e); an edge is open at p iff u(e) < p.
pub trait EdgeField: Sync {
    /// Uniform attached to the edge {u, v}. Must be symmetric in u, v.
    fn uniform(&self, u: &VertexCoord, v: &VertexCoord) -> f64;
}

/// The default field: u(e) = PRF(seed, trial, e).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrfField {
    pub seed: u64,
    pub trial: u64,
}

#[inline]
fn keyed(seed: u64, trial: u64, stream: Stream, u: &VertexCoord, v: &VertexCoord) -> f64 {
    let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
    let mut prf = Prf::new(seed, trial, stream);
    lo.absorb_into(&mut prf);
    hi.absorb_into(&mut prf);
    prf.uniform()
}

impl EdgeField for PrfField {
    #[inline]
    fn uniform(&self, u: &VertexCoord, v: &VertexCoord) -> f64 {
        keyed(self.seed, self.trial, Stream::Edge, u, v)
    }
}

/// Wraps a field and forces a set of edges open at every p.
pub struct ForcedOpen<'a, F: EdgeField> {
    pub inner: &'a F,
    pub forced: FxHashSet<EdgeId>,
}

impl<F: EdgeField> EdgeField for ForcedOpen<'_, F> {
    fn uniform(&self, u: &VertexCoord, v: &VertexCoord) -> f64 {
        if !self.forced.is_empty() && self.forced.contains(&EdgeId::new(u.clone(), v.clone())) {
            -1.0
        } else {
            self.inner.uniform(u, v)
        }
    }
}

pub fn edge_uniform(ctx: &SampleCtx, e: &EdgeId) -> f64 {
    keyed(ctx.seed, ctx.trial, Stream::Edge, &e.lo, &e.hi)
}

pub fn edge_state(ctx: &SampleCtx, e: &EdgeId) -> EdgeState {
    if edge_uniform(ctx, e) < ctx.p {
        EdgeState::Open
    } else {
        EdgeState::Closed
    }
}

/// Ghost mark of an edge: green with probability 1 - e^{-h}.
pub fn ghost_green(ctx: &SampleCtx, e: &EdgeId) -> bool {
    keyed(ctx.seed, ctx.trial, Stream::Ghost, &e.lo, &e.hi) < -(-ctx.h).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: i64, b: i64) -> EdgeId {
        EdgeId::new(VertexCoord::from_ints(&[a, 0]), VertexCoord::from_ints(&[b, 0]))
    }

    #[test]
    fn extremes_and_monotone_coupling() {
        for t in 0..200 {
            for x in 0..5 {
                let edge = e(x, x + 1);
                let at = |p| edge_state(&SampleCtx::new(3, p, 0.0, t), &edge);
                assert_eq!(at(1.0), EdgeState::Open);
                assert_eq!(at(0.0), EdgeState::Closed);
                if at(0.4) == EdgeState::Open {
                    assert_eq!(at(0.6), EdgeState::Open);
                }
            }
        }
    }

    #[test]
    fn symmetric_and_deterministic() {
        let f = PrfField { seed: 9, trial: 4 };
        let (u, v) = (VertexCoord::from_ints(&[1, 2]), VertexCoord::from_ints(&[1, 3]));
        assert_eq!(f.uniform(&u, &v), f.uniform(&v, &u));
        assert_eq!(f.uniform(&u, &v), PrfField { seed: 9, trial: 4 }.uniform(&u, &v));
        assert_ne!(f.uniform(&u, &v), PrfField { seed: 9, trial: 5 }.uniform(&u, &v));
        let ctx = SampleCtx::new(9, 0.5, 0.0, 4);
        assert_eq!(edge_uniform(&ctx, &EdgeId::new(u.clone(), v.clone())), f.uniform(&u, &v));
    }

    #[test]
    fn ghost_rate() {
        let mut green = 0;
        let n = 20000;
        for t in 0..n {
            if ghost_green(&SampleCtx::new(1, 0.5, 0.5, t), &e(0, 1)) {
                green += 1;
            }
        }
        let q = 1.0 - (-0.5f64).exp();
        let sd = (q * (1.0 - q) / n as f64).sqrt();
        assert!((green as f64 / n as f64 - q).abs() < 4.0 * sd);
        assert!(!ghost_green(&SampleCtx::new(1, 0.5, 0.0, 0), &e(0, 1)));
    }

    #[test]
    fn forced_edges_open_at_zero() {
        let f = PrfField { seed: 1, trial: 0 };
        let edge = e(0, 1);
        let forced = ForcedOpen { inner: &f, forced: [edge.clone()].into_iter().collect() };
        assert!(forced.uniform(&edge.hi, &edge.lo) < 0.0);
        assert_eq!(forced.uniform(&e(1, 2).lo, &e(1, 2).hi), f.uniform(&e(1, 2).lo, &e(1, 2).hi));
    }
}
