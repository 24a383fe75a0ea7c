//! Explicit finite graphs and exhaustive enumeration of bond configurations.

use crate::error::{PercError, Result};
use crate::graphs::canon::{certificate, ColoredGraph};
use crate::graphs::{GraphHandle, VertexCoord};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use std::collections::VecDeque;

pub const ENUMERATION_CAP: usize = 20;

#[derive(Clone, Debug)]
pub struct FiniteGraph {
    pub n: usize,
    /// Edges with lo < hi, sorted.
    pub edges: Vec<(u32, u32)>,
    pub adj: Vec<Vec<u32>>,
    /// Edge indices incident to each vertex.
    pub incident: Vec<Vec<usize>>,
    pub coords: Option<Vec<VertexCoord>>,
    pub transitive: bool,
    /// Common degree if the graph is regular.
    pub degree: Option<usize>,
}

impl FiniteGraph {
    pub fn new(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut es: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b || a as usize >= n || b as usize >= n {
                return Err(PercError::Config(format!("bad edge ({a}, {b}) for {n} vertices")));
            }
            es.push((a.min(b), a.max(b)));
        }
        es.sort_unstable();
        if es.windows(2).any(|w| w[0] == w[1]) {
            return Err(PercError::Config("repeated edge".into()));
        }
        let mut adj = vec![Vec::new(); n];
        let mut incident = vec![Vec::new(); n];
        for (i, &(a, b)) in es.iter().enumerate() {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
            incident[a as usize].push(i);
            incident[b as usize].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let degree = (n > 0 && adj.iter().all(|a| a.len() == adj[0].len())).then(|| adj[0].len());
        let mut fg = FiniteGraph { n, edges: es, adj, incident, coords: None, transitive: false, degree };
        fg.transitive = fg.degree.is_some() && {
            let base = fg.rooted_cert(0);
            (1..n as u32).all(|v| fg.rooted_cert(v) == base)
        };
        Ok(fg)
    }

    /// Explicit copy of a finite family.
    pub fn from_handle(handle: &GraphHandle) -> Result<Self> {
        let verts = handle
            .vertices()
            .ok_or_else(|| PercError::Config(format!("{} is not finite", handle.spec().label())))?;
        let index: FxHashMap<&VertexCoord, u32> = verts.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let mut edges = Vec::new();
        for (i, v) in verts.iter().enumerate() {
            for w in handle.neighbors(v)? {
                let j = index[&w];
                if (i as u32) < j {
                    edges.push((i as u32, j));
                }
            }
        }
        let mut fg = FiniteGraph::new(verts.len(), &edges)?;
        fg.coords = Some(verts);
        Ok(fg)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn rooted_cert(&self, v: u32) -> crate::graphs::CanonicalCert {
        let mut colors = vec![0; self.n];
        colors[v as usize] = 1;
        certificate(&ColoredGraph::new(self.adj.clone(), colors))
    }

    /// Graph distances from `v`.
    pub fn distances(&self, v: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        dist[v as usize] = 0;
        let mut q = VecDeque::from([v]);
        while let Some(x) = q.pop_front() {
            for &y in &self.adj[x as usize] {
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = dist[x as usize] + 1;
                    q.push_back(y);
                }
            }
        }
        dist
    }

    /// A shortest path from `u` to `v` as edge indices, neighbours taken in
    /// increasing order.
    pub fn geodesic_edges(&self, u: u32, v: u32) -> Result<Vec<usize>> {
        let mut prev = vec![u32::MAX; self.n];
        prev[u as usize] = u;
        let mut q = VecDeque::from([u]);
        while let Some(x) = q.pop_front() {
            if x == v {
                break;
            }
            for &y in &self.adj[x as usize] {
                if prev[y as usize] == u32::MAX {
                    prev[y as usize] = x;
                    q.push_back(y);
                }
            }
        }
        if prev[v as usize] == u32::MAX {
            return Err(PercError::Path(format!("{u} and {v} are not connected")));
        }
        let mut path = Vec::new();
        let mut x = v;
        while x != u {
            let y = prev[x as usize];
            path.push(self.edge_index(x, y).expect("tree edge"));
            x = y;
        }
        path.reverse();
        Ok(path)
    }

    pub fn edge_index(&self, a: u32, b: u32) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    pub(crate) fn check_cap(&self) -> Result<()> {
        if self.edges.len() > ENUMERATION_CAP {
            return Err(PercError::Budget(format!(
                "{} edges exceed the enumeration cap of {ENUMERATION_CAP}",
                self.edges.len()
            )));
        }
        Ok(())
    }
}

/// Clusters of one configuration.
pub struct Config<'a> {
    pub fg: &'a FiniteGraph,
    pub mask: u64,
    /// Cluster index of each vertex.
    pub comp: Vec<u32>,
    /// |E(K)| per cluster.
    pub touched: Vec<u32>,
    /// Open edges per cluster.
    pub open: Vec<u32>,
    parent: Vec<u32>,
}

impl<'a> Config<'a> {
    pub(crate) fn new(fg: &'a FiniteGraph) -> Self {
        Config {
            fg,
            mask: 0,
            comp: vec![0; fg.n],
            touched: Vec::with_capacity(fg.n),
            open: Vec::with_capacity(fg.n),
            parent: vec![0; fg.n],
        }
    }

    fn root(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }

    pub(crate) fn load(&mut self, mask: u64) {
        self.mask = mask;
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        for (i, &(a, b)) in self.fg.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let (ra, rb) = (self.root(a), self.root(b));
                if ra != rb {
                    self.parent[ra.max(rb) as usize] = ra.min(rb);
                }
            }
        }
        let mut label = vec![u32::MAX; self.fg.n];
        self.touched.clear();
        self.open.clear();
        for v in 0..self.fg.n as u32 {
            let r = self.root(v) as usize;
            if label[r] == u32::MAX {
                label[r] = self.touched.len() as u32;
                self.touched.push(0);
                self.open.push(0);
            }
            self.comp[v as usize] = label[r];
        }
        for (i, &(a, b)) in self.fg.edges.iter().enumerate() {
            let (ca, cb) = (self.comp[a as usize] as usize, self.comp[b as usize] as usize);
            self.touched[ca] += 1;
            if ca != cb {
                self.touched[cb] += 1;
            } else if self.mask >> i & 1 == 1 {
                self.open[ca] += 1;
            }
        }
    }

    pub fn is_open(&self, e: usize) -> bool {
        self.mask >> e & 1 == 1
    }

    pub fn cluster_of(&self, v: u32) -> usize {
        self.comp[v as usize] as usize
    }

    /// Edges touching both clusters.
    pub fn shared(&self, c1: usize, c2: usize) -> u32 {
        self.fg
            .edges
            .iter()
            .filter(|&&(a, b)| {
                let (ca, cb) = (self.comp[a as usize] as usize, self.comp[b as usize] as usize);
                (ca == c1 && cb == c2) || (ca == c2 && cb == c1)
            })
            .count() as u32
    }

    /// p |∂K| - (1-p) |E°(K)|.
    pub fn h_p(&self, c: usize, p: f64) -> f64 {
        let open = self.open[c] as f64;
        p * (self.touched[c] as f64 - open) - (1.0 - p) * open
    }
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.c
    }
}

const BLOCK_BITS: usize = 6;

/// E_p[f(ω)] for K statistics at once, summing over all 2^|E|
/// configurations. Blocks of configurations run in parallel and are reduced
/// in block order.
pub fn expectations<const K: usize>(fg: &FiniteGraph, p: f64, f: impl Fn(&Config) -> [f64; K] + Sync) -> Result<[f64; K]> {
    let v = expectations_vec(fg, p, K, |c, out| out.copy_from_slice(&f(c)))?;
    let mut out = [0.0; K];
    out.copy_from_slice(&v);
    Ok(out)
}

/// As [`expectations`] with a runtime number of statistics; `f` writes
/// into a zeroed slice.
pub fn expectations_vec(fg: &FiniteGraph, p: f64, k: usize, f: impl Fn(&Config, &mut [f64]) + Sync) -> Result<Vec<f64>> {
    fg.check_cap()?;
    let m = fg.edges.len();
    let weights: Vec<f64> = (0..=m).map(|j| p.powi(j as i32) * (1.0 - p).powi((m - j) as i32)).collect();
    let hi_bits = BLOCK_BITS.min(m);
    let lo_bits = m - hi_bits;
    let blocks: Vec<Vec<KahanSum>> = (0..1u64 << hi_bits)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![KahanSum::default(); k];
            let mut vals = vec![0.0; k];
            let mut cfg = Config::new(fg);
            for lo in 0..1u64 << lo_bits {
                let mask = b << lo_bits | lo;
                let w = weights[mask.count_ones() as usize];
                if w == 0.0 {
                    continue;
                }
                cfg.load(mask);
                vals.iter_mut().for_each(|x| *x = 0.0);
                f(&cfg, &mut vals);
                for (a, x) in acc.iter_mut().zip(&vals) {
                    a.add(w * x);
                }
            }
            acc
        })
        .collect();
    Ok((0..k)
        .map(|j| {
            let mut s = KahanSum::default();
            for b in &blocks {
                s.add(b[j].value());
            }
            s.value()
        })
        .collect())
}

/// Configurations enumerated for a graph.
pub fn configuration_count(fg: &FiniteGraph) -> u64 {
    1u64 << fg.edges.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec;

    fn cycle(n: u32) -> FiniteGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        FiniteGraph::new(n as usize, &edges).unwrap()
    }

    #[test]
    fn transitivity_flag() {
        assert!(cycle(6).transitive);
        let path = FiniteGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!path.transitive);
        // 2-regular but not transitive
        let mixed = FiniteGraph::new(7, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (5, 6), (3, 6)]).unwrap();
        assert!(!mixed.transitive);
        let t = FiniteGraph::from_handle(&GraphHandle::new(GraphFamilySpec::Torus { lengths: vec![3, 3] }).unwrap()).unwrap();
        assert!(t.transitive);
        assert_eq!(t.edge_count(), 18);
        assert_eq!(t.degree, Some(4));
    }

    #[test]
    fn total_mass_is_one() {
        let g = cycle(8);
        for p in [0.0, 0.3, 1.0] {
            let [s] = expectations(&g, p, |_| [1.0]).unwrap();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cluster_counts() {
        let g = cycle(4);
        // all open: one cluster touching 4 edges
        let mut c = Config::new(&g);
        c.load(0b1111);
        assert_eq!(c.touched, vec![4]);
        assert_eq!(c.open, vec![4]);
        c.load(0);
        assert_eq!(c.touched, vec![2; 4]);
        assert_eq!(c.shared(0, 1), 1);
        assert_eq!(c.h_p(0, 0.5), 1.0);
    }

    #[test]
    fn expected_open_edges() {
        let g = cycle(6);
        let [e] = expectations(&g, 0.3, |c| [c.mask.count_ones() as f64]).unwrap();
        assert!((e - 1.8).abs() < 1e-12);
    }

    #[test]
    fn cap_enforced() {
        let g = cycle(21);
        assert!(matches!(expectations(&g, 0.5, |_| [1.0]), Err(PercError::Budget(_))));
    }
}
