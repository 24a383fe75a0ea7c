//! Exact per-trial connection thresholds.
//!
//! For a fixed field of uniforms, the root is joined to the sphere of radius
//! r by a path open at p iff p exceeds the minimax value of the uniforms
//! along root-to-sphere paths. Invasion from the root (always adding the
//! smallest boundary edge) reaches the sphere for the first time exactly
//! when its running maximum equals that minimax value, so one invasion run
//! gives the thresholds for every radius, and hence θ_r(p) for all p.

use super::field::EdgeField;
use crate::graphs::{GraphHandle, VertexCoord};
use rustc_hash::FxHashMap;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusThresholds {
    /// thr[r] for r = 0..=r_max: the root reaches distance r at every p >
    /// thr[r]. INFINITY if distance r does not exist in the graph, NaN if the
    /// invasion budget ran out first.
    pub thr: Vec<f64>,
    pub invaded: usize,
}

impl RadiusThresholds {
    /// Whether the root reaches distance r at p: Some(true/false), or None
    /// when undetermined.
    pub fn connects(&self, r: usize, p: f64) -> Option<bool> {
        let t = self.thr[r];
        if t.is_nan() {
            None
        } else {
            Some(t < p)
        }
    }
}

#[inline]
fn key(u: f64) -> u64 {
    u.max(0.0).to_bits()
}

struct Invasion {
    coords: Vec<VertexCoord>,
    index: FxHashMap<VertexCoord, u32>,
    invaded: Vec<bool>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    nb: Vec<VertexCoord>,
}

impl Invasion {
    fn push_from<F: EdgeField>(&mut self, x: usize, handle: &GraphHandle, field: &F) {
        self.nb.clear();
        handle.neighbors_into(&self.coords[x], &mut self.nb);
        for w in std::mem::take(&mut self.nb) {
            let j = match self.index.get(&w) {
                Some(&j) if self.invaded[j as usize] => continue,
                Some(&j) => j,
                None => {
                    let j = self.coords.len() as u32;
                    self.index.insert(w.clone(), j);
                    self.coords.push(w);
                    self.invaded.push(false);
                    j
                }
            };
            let u = field.uniform(&self.coords[x], &self.coords[j as usize]);
            self.heap.push(Reverse((key(u), j)));
        }
    }
}

/// Invade from the root until a vertex at distance `r_max` is reached, the
/// component is exhausted, or `max_vertices` have been invaded.
pub fn radius_thresholds<F: EdgeField>(handle: &GraphHandle, field: &F, r_max: u32, max_vertices: usize) -> RadiusThresholds {
    let r_max = r_max as usize;
    let mut thr = vec![f64::NAN; r_max + 1];
    thr[0] = f64::NEG_INFINITY;
    let mut inv = Invasion {
        coords: vec![handle.root().clone()],
        index: FxHashMap::default(),
        invaded: vec![true],
        heap: BinaryHeap::new(),
        nb: Vec::new(),
    };
    inv.index.insert(handle.root().clone(), 0);
    let mut reached = 0usize;
    let mut running = f64::NEG_INFINITY;
    let mut n_invaded = 1usize;
    if r_max > 0 {
        inv.push_from(0, handle, field);
    }
    while reached < r_max {
        let Some(Reverse((k, j))) = inv.heap.pop() else {
            for t in thr.iter_mut().skip(reached + 1) {
                *t = f64::INFINITY;
            }
            break;
        };
        if inv.invaded[j as usize] {
            continue;
        }
        if n_invaded >= max_vertices {
            break;
        }
        running = running.max(f64::from_bits(k));
        inv.invaded[j as usize] = true;
        n_invaded += 1;
        let d = handle.distance_from_root(&inv.coords[j as usize]) as usize;
        while reached < d.min(r_max) {
            reached += 1;
            thr[reached] = running;
        }
        if reached < r_max {
            inv.push_from(j as usize, handle, field);
        }
    }
    RadiusThresholds { thr, invaded: n_invaded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec::*;
    use crate::percolation::explore::Explorer;
    use crate::percolation::PrfField;

    /// Brute force: farthest distance reached by the open cluster of the
    /// root at p, capped at 6.
    fn reach(h: &GraphHandle, f: &PrfField, p: f64) -> u64 {
        // a cluster inside B(o, 5) touches far fewer edges than this
        let out = Explorer::new(h).run(h.root(), f, p, 20_000, false);
        if out.summary.censored {
            return 6;
        }
        out.cluster.iter().map(|v| h.distance_from_root(v)).max().unwrap().min(6)
    }

    #[test]
    fn agrees_with_direct_exploration() {
        for spec in [Hypercubic { d: 2 }, RegularTree { degree: 3 }, Cycle { n: 7 }, Grandparent { b: 2 }] {
            let h = GraphHandle::new(spec).unwrap();
            for t in 0..40 {
                let f = PrfField { seed: 8, trial: t };
                let th = radius_thresholds(&h, &f, 6, 1_000_000);
                for p in [0.2, 0.35, 0.5, 0.65, 0.8] {
                    let far = reach(&h, &f, p) as usize;
                    for r in 1..=6usize {
                        assert!(th.thr[r] >= th.thr[r - 1]);
                        assert_eq!(th.connects(r, p), Some(r <= far), "r={r} p={p}");
                    }
                }
            }
        }
    }

    #[test]
    fn unreachable_radius_on_finite_graph() {
        let h = GraphHandle::new(Cycle { n: 5 }).unwrap();
        let th = radius_thresholds(&h, &PrfField { seed: 0, trial: 0 }, 4, 100);
        assert!(th.thr[2].is_finite());
        assert_eq!(th.thr[3], f64::INFINITY);
        assert_eq!(th.connects(3, 1.0), Some(false));
    }

    #[test]
    fn budget_leaves_unknown() {
        let h = GraphHandle::new(Hypercubic { d: 2 }).unwrap();
        let th = radius_thresholds(&h, &PrfField { seed: 0, trial: 0 }, 100, 50);
        assert!(th.thr[100].is_nan());
        assert_eq!(th.connects(100, 0.5), None);
    }
}
