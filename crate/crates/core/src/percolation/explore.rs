use super::field::{EdgeField, SampleCtx};
use crate::error::{PercError, Result};
use crate::graphs::{EdgeId, GraphHandle, VertexCoord};
use crate::rng::{Prf, Stream};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Outcome of one cluster exploration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub origin: VertexCoord,
    /// |K|
    pub vertices: u64,
    /// |E°(K)|
    pub open_edges: u64,
    /// |∂K|, closed edges touching K
    pub closed_edges: u64,
    /// |E(K)|, equal to the stopping time T when not censored
    pub touched: u64,
    pub censored: bool,
    /// Order-independent hash of the revealed edge set.
    pub fingerprint: u64,
}

impl ClusterSummary {
    /// p|∂K| - (1-p)|E°(K)|
    pub fn h_p(&self, p: f64) -> f64 {
        p * self.closed_edges as f64 - (1.0 - p) * self.open_edges as f64
    }
}

/// Reveal sequence of an exploration together with the martingale
/// Z_n = (1-p)|O_n| - p|C_n|.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub reveals: Vec<(EdgeId, bool)>,
    /// (|U_n|, |O_n|, |C_n|) after each reveal, starting from (1, 0, 0).
    pub counts: Vec<(u64, u64, u64)>,
    /// Z_0 .. Z_{T ∧ budget}
    pub z: Vec<f64>,
    /// T, or None when the budget was hit first.
    pub stopping_time: Option<u64>,
}

impl ExplorationTrace {
    /// Debug dump, one line per reveal: `step,edge_key,open,Zn`.
    pub fn dump(&self) -> String {
        let mut out = String::from("step,edge_key,open,Zn\n");
        for (i, (e, open)) in self.reveals.iter().enumerate() {
            let key: String = e.key_bytes().iter().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(out, "{},{},{},{}", i + 1, key, u8::from(*open), self.z[i + 1]);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ExploreOutput {
    pub summary: ClusterSummary,
    /// Vertices of K in discovery order.
    pub cluster: Vec<VertexCoord>,
    pub trace: Option<ExplorationTrace>,
}

#[inline]
pub(crate) fn edge_hash(u: &VertexCoord, v: &VertexCoord) -> u64 {
    let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
    let mut prf = Prf::new(0, 0, Stream::Aux);
    lo.absorb_into(&mut prf);
    hi.absorb_into(&mut prf);
    prf.finish()
}

/// Reusable exploration state. Edges touching the current cluster are
/// revealed vertex by vertex in discovery order, and around each vertex in
/// increasing order of the neighbour's byte key.
pub struct Explorer<'g> {
    handle: &'g GraphHandle,
    index: FxHashMap<VertexCoord, u32>,
    cluster: Vec<VertexCoord>,
    nb: Vec<VertexCoord>,
}

impl<'g> Explorer<'g> {
    pub fn new(handle: &'g GraphHandle) -> Self {
        Explorer { handle, index: FxHashMap::default(), cluster: Vec::new(), nb: Vec::new() }
    }

    pub fn run<F: EdgeField>(&mut self, v: &VertexCoord, field: &F, p: f64, budget: u64, trace: bool) -> ExploreOutput {
        self.index.clear();
        self.cluster.clear();
        self.index.insert(v.clone(), 0);
        self.cluster.push(v.clone());
        let mut tr = trace.then(|| ExplorationTrace {
            counts: vec![(1, 0, 0)],
            z: vec![0.0],
            ..Default::default()
        });
        let (mut open, mut closed, mut fp) = (0u64, 0u64, 0u64);
        let mut z = 0.0;
        let mut censored = false;
        let mut head = 0usize;
        while head < self.cluster.len() {
            let x = self.cluster[head].clone();
            let mut nb = std::mem::take(&mut self.nb);
            nb.clear();
            self.handle.neighbors_into(&x, &mut nb);
            nb.sort_unstable();
            for w in nb.iter() {
                if let Some(&j) = self.index.get(w) {
                    if (j as usize) < head {
                        continue;
                    }
                }
                if open + closed == budget {
                    censored = true;
                    break;
                }
                let is_open = field.uniform(&x, w) < p;
                fp = fp.wrapping_add(edge_hash(&x, w));
                if is_open {
                    open += 1;
                    z += 1.0 - p;
                } else {
                    closed += 1;
                    z -= p;
                }
                if let Some(t) = tr.as_mut() {
                    t.reveals.push((EdgeId::new(x.clone(), w.clone()), is_open));
                    t.z.push(z);
                }
                if is_open && !self.index.contains_key(w) {
                    self.index.insert(w.clone(), self.cluster.len() as u32);
                    self.cluster.push(w.clone());
                }
                if let Some(t) = tr.as_mut() {
                    t.counts.push((self.cluster.len() as u64, open, closed));
                }
            }
            self.nb = nb;
            if censored {
                break;
            }
            head += 1;
        }
        if let Some(t) = tr.as_mut() {
            t.stopping_time = (!censored).then_some(open + closed);
        }
        ExploreOutput {
            summary: ClusterSummary {
                origin: v.clone(),
                vertices: self.cluster.len() as u64,
                open_edges: open,
                closed_edges: closed,
                touched: open + closed,
                censored,
                fingerprint: fp,
            },
            cluster: self.cluster.clone(),
            trace: tr,
        }
    }

    pub fn handle(&self) -> &'g GraphHandle {
        self.handle
    }

    /// Whether `v` is in the cluster found by the last run.
    pub fn contains(&self, v: &VertexCoord) -> bool {
        self.index.contains_key(v)
    }
}

/// Explore the open cluster of `v` under `ctx`, revealing at most `budget`
/// edges.
pub fn explore_cluster(
    handle: &GraphHandle,
    v: &VertexCoord,
    ctx: &SampleCtx,
    budget: u64,
) -> Result<(ClusterSummary, ExplorationTrace)> {
    if budget < 1 {
        return Err(PercError::Config("budget must be at least 1".into()));
    }
    handle.validate_vertex(v)?;
    let out = Explorer::new(handle).run(v, &ctx.field(), ctx.p, budget, true);
    Ok((out.summary, out.trace.expect("trace requested")))
}
