use super::canon::{canonical_form, CanonicalCert, ColoredGraph};
use super::coord::VertexCoord;
use super::family::GraphHandle;
use crate::error::{PercError, Result};
use crate::rng::{CounterRng, Stream};
use crate::stats::MCEstimate;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

/// Default cap on ball sizes.
pub const DEFAULT_BALL_LIMIT: usize = 2_000_000;

/// Vertices within distance `radius` of `center`, in BFS order (center
/// first), with every edge that has at least one endpoint at distance
/// below `radius`. Edges between two vertices of the outer sphere are left
/// out: they are not seen by any path of length `radius` from the center.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: VertexCoord,
    pub radius: u32,
    pub vertices: Vec<VertexCoord>,
    pub adj: Vec<Vec<u32>>,
    pub dist: Vec<u32>,
    index: FxHashMap<VertexCoord, u32>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: &VertexCoord) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Number of vertices at each distance 0..=radius.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.radius as usize + 1];
        for &d in &self.dist {
            s[d as usize] += 1;
        }
        s
    }

    /// The ball as a coloured graph: the listed roots get colours 1, 2, ...
    pub fn colored(&self, roots: &[u32]) -> ColoredGraph {
        let mut colors = vec![0; self.len()];
        for (i, &r) in roots.iter().enumerate() {
            colors[r as usize] = i as u32 + 1;
        }
        ColoredGraph::new(self.adj.clone(), colors)
    }
}

pub fn ball(handle: &GraphHandle, v: &VertexCoord, r: u32) -> Result<Ball> {
    ball_with_limit(handle, v, r, DEFAULT_BALL_LIMIT)
}

pub fn ball_with_limit(handle: &GraphHandle, v: &VertexCoord, r: u32, limit: usize) -> Result<Ball> {
    handle.validate_vertex(v)?;
    let mut vertices = vec![v.clone()];
    let mut dist = vec![0u32];
    let mut index = FxHashMap::default();
    index.insert(v.clone(), 0u32);
    let mut nb = Vec::new();
    let mut head = 0;
    while head < vertices.len() {
        if dist[head] < r {
            nb.clear();
            handle.neighbors_into(&vertices[head], &mut nb);
            for w in nb.drain(..) {
                if !index.contains_key(&w) {
                    if vertices.len() >= limit {
                        return Err(PercError::Budget(format!(
                            "ball of radius {r} exceeds {limit} vertices"
                        )));
                    }
                    index.insert(w.clone(), vertices.len() as u32);
                    vertices.push(w);
                    dist.push(dist[head] + 1);
                }
            }
        }
        head += 1;
    }
    let mut adj = vec![Vec::new(); vertices.len()];
    for (i, x) in vertices.iter().enumerate() {
        nb.clear();
        handle.neighbors_into(x, &mut nb);
        for w in &nb {
            if let Some(&j) = index.get(w) {
                if dist[i] < r || dist[j as usize] < r {
                    adj[i].push(j);
                }
            }
        }
    }
    Ok(Ball { center: v.clone(), radius: r, vertices, adj, dist, index })
}

/// Certificate of the ball rooted at its center.
pub fn rooted_certificate(b: &Ball) -> CanonicalCert {
    canonical_form(&b.colored(&[0])).cert
}

/// Orbits of the automorphisms of the ball fixing its center, as the
/// smallest BFS index in each orbit.
pub fn root_stabilizer_orbits(b: &Ball) -> Vec<u32> {
    canonical_form(&b.colored(&[0])).orbits()
}

/// Representatives of the neighbours of the root up to automorphisms of the
/// largest root ball of radius <= 3 that fits in `limit` vertices.
pub fn root_neighbor_classes(handle: &GraphHandle, limit: usize) -> Result<Vec<VertexCoord>> {
    let mut last = None;
    for r in (1..=3).rev() {
        match ball_with_limit(handle, handle.root(), r, limit) {
            Ok(b) => {
                let orb = root_stabilizer_orbits(&b);
                let mut reps: Vec<u32> = (1..b.len() as u32).filter(|&i| b.dist[i as usize] == 1 && orb[i as usize] == i).collect();
                reps.sort_by(|&a, &c| b.vertices[a as usize].cmp(&b.vertices[c as usize]));
                return Ok(reps.into_iter().map(|i| b.vertices[i as usize].clone()).collect());
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one radius tried"))
}

/// min over 1 <= r <= r_max of |B(o,r)|^{1/r}. Stops early (returning the
/// minimum so far) once balls exceed the default size cap.
pub fn growth_upper(handle: &GraphHandle, r_max: u32) -> f64 {
    let mut best = f64::INFINITY;
    let mut layer = vec![handle.root().clone()];
    let mut seen: rustc_hash::FxHashSet<VertexCoord> = layer.iter().cloned().collect();
    let mut nb = Vec::new();
    for r in 1..=r_max.max(1) {
        let mut next = Vec::new();
        for x in &layer {
            nb.clear();
            handle.neighbors_into(x, &mut nb);
            for w in nb.drain(..) {
                if seen.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        best = best.min((seen.len() as f64).powf(1.0 / r as f64));
        if seen.len() > DEFAULT_BALL_LIMIT {
            break;
        }
        layer = next;
    }
    best
}

/// Largest r <= r_max such that the radius-r balls around the two roots are
/// rooted-isomorphic; 0 if already the radius-1 balls differ.
pub fn matching_radius(h1: &GraphHandle, h2: &GraphHandle, r_max: u32) -> Result<u32> {
    let mut matched = 0;
    for r in 1..=r_max {
        let b1 = ball(h1, h1.root(), r)?;
        let b2 = ball(h2, h2.root(), r)?;
        if !balls_isomorphic(&b1, &b2) {
            break;
        }
        matched = r;
    }
    Ok(matched)
}

pub fn balls_isomorphic(b1: &Ball, b2: &Ball) -> bool {
    if b1.len() != b2.len() || b1.edge_count() != b2.edge_count() || b1.sphere_sizes() != b2.sphere_sizes() {
        return false;
    }
    let mut d1: Vec<usize> = b1.adj.iter().map(Vec::len).collect();
    let mut d2: Vec<usize> = b2.adj.iter().map(Vec::len).collect();
    d1.sort_unstable();
    d2.sort_unstable();
    d1 == d2 && rooted_certificate(b1) == rooted_certificate(b2)
}

/// Monte Carlo estimate of the simple random walk return probability
/// p_{steps}(o, o).
pub fn rw_return_probability(handle: &GraphHandle, steps: u32, trials: u64, seed: u64) -> Result<MCEstimate> {
    if steps < 2 || steps % 2 != 0 {
        return Err(PercError::Config(format!("steps must be even and >= 2, got {steps}")));
    }
    if trials == 0 {
        return Err(PercError::Config("trials must be positive".into()));
    }
    let root = handle.root().clone();
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = CounterRng::new(seed, t, Stream::Walk);
            let mut x = root.clone();
            let mut nb = Vec::new();
            for _ in 0..steps {
                nb.clear();
                handle.neighbors_into(&x, &mut nb);
                let i = rng.below(nb.len());
                x = nb.swap_remove(i);
            }
            u64::from(x == root)
        })
        .sum();
    Ok(MCEstimate::binomial(hits, trials))
}
