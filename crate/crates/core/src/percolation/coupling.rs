use super::explore::{ClusterSummary, Explorer};
use super::field::{EdgeField, PrfField, SampleCtx};
use crate::error::{PercError, Result};
use crate::graphs::ball::{ball, balls_isomorphic};
use crate::graphs::canon::canonical_form;
use crate::graphs::{GraphHandle, VertexCoord};
use crate::rng::mix64;
use rustc_hash::FxHashMap;

/// Field on the second graph that reuses the first graph's uniforms on every
/// edge of the radius-R root ball, transported by a rooted isomorphism.
struct TransportedField {
    phi: FxHashMap<VertexCoord, (VertexCoord, u32)>,
    radius: u32,
    base: PrfField,
    outside: PrfField,
}

impl EdgeField for TransportedField {
    fn uniform(&self, u: &VertexCoord, v: &VertexCoord) -> f64 {
        if let (Some((a, da)), Some((b, db))) = (self.phi.get(u), self.phi.get(v)) {
            if *da < self.radius || *db < self.radius {
                return self.base.uniform(a, b);
            }
        }
        self.outside.uniform(u, v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledPair {
    pub first: ClusterSummary,
    pub second: ClusterSummary,
    /// The first cluster stays within distance R - 1 of the root, so every
    /// edge it touches lies in the matched ball.
    pub confined: bool,
}

/// Explore the root clusters of `h1` and `h2` under a coupling that gives
/// matched edges of the radius-`r` root balls identical uniforms.
pub fn coupled_pair_sample(h1: &GraphHandle, h2: &GraphHandle, r: u32, ctx: &SampleCtx, budget: u64) -> Result<CoupledPair> {
    let base = ctx.field();
    let a = Explorer::new(h1).run(h1.root(), &base, ctx.p, budget, false);
    let confined = !a.summary.censored && a.cluster.iter().all(|v| h1.distance_from_root(v) < r as u64);
    if h1.spec() == h2.spec() {
        return Ok(CoupledPair { first: a.summary.clone(), second: a.summary, confined });
    }
    let b1 = ball(h1, h1.root(), r)?;
    let b2 = ball(h2, h2.root(), r)?;
    if !balls_isomorphic(&b1, &b2) {
        return Err(PercError::Coupling(format!("root balls of radius {r} are not isomorphic")));
    }
    let c1 = canonical_form(&b1.colored(&[0]));
    let c2 = canonical_form(&b2.colored(&[0]));
    let mut inv1 = vec![0u32; b1.len()];
    for (v, &l) in c1.labeling.iter().enumerate() {
        inv1[l as usize] = v as u32;
    }
    let phi = b2
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let j = inv1[c2.labeling[i] as usize] as usize;
            (v.clone(), (b1.vertices[j].clone(), b2.dist[i]))
        })
        .collect();
    let field2 = TransportedField {
        phi,
        radius: r,
        base,
        outside: PrfField { seed: mix64(ctx.seed ^ 0x5eed), trial: ctx.trial },
    };
    let b = Explorer::new(h2).run(h2.root(), &field2, ctx.p, budget, false);
    Ok(CoupledPair { first: a.summary, second: b.summary, confined })
}
