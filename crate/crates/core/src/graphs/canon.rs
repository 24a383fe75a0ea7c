//! Exact canonical forms of small coloured graphs.
//!
//! Individualisation-refinement: colour refinement to the coarsest equitable
//! partition, then branch on the vertices of the smallest non-singleton cell.
//! A leaf (discrete partition) fixes a labelling; the certificate is the
//! lexicographically smallest relabelled graph over all explored leaves.
//! Whenever a leaf reproduces the first or best certificate we have found an
//! automorphism; the rest of that subtree is then equivalent to one already
//! explored and is skipped, and the automorphisms prune sibling branches by
//! orbits. The automorphisms collected this way generate the automorphism
//! group of the coloured graph.

use crate::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Undirected graph with vertex colours. Adjacency lists must be symmetric
/// and free of loops and repeated entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    pub adj: Vec<Vec<u32>>,
    pub colors: Vec<u32>,
}

impl ColoredGraph {
    pub fn new(adj: Vec<Vec<u32>>, colors: Vec<u32>) -> Self {
        assert_eq!(adj.len(), colors.len());
        ColoredGraph { adj, colors }
    }

    pub fn from_edges(n: usize, edges: &[(u32, u32)], colors: Vec<u32>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        ColoredGraph::new(adj, colors)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// The same graph with vertex `v` renamed to `perm[v]`.
    pub fn permuted(&self, perm: &[u32]) -> ColoredGraph {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        let mut colors = vec![0; n];
        for v in 0..n {
            colors[perm[v] as usize] = self.colors[v];
            adj[perm[v] as usize] = self.adj[v].iter().map(|&u| perm[u as usize]).collect();
        }
        ColoredGraph { adj, colors }
    }
}

/// Canonical certificate: equal for two coloured graphs iff they are
/// isomorphic by a colour-preserving isomorphism.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalCert(pub Vec<u8>);

impl CanonicalCert {
    fn from_words(words: &[u32]) -> Self {
        let mut bytes = Vec::with_capacity(words.len() * 4);
        for w in words {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        CanonicalCert(bytes)
    }
}

#[derive(Clone, Debug)]
pub struct CanonResult {
    pub cert: CanonicalCert,
    /// `labeling[v]` is the canonical index of vertex `v`.
    pub labeling: Vec<u32>,
    /// Generators of the automorphism group, as vertex permutations.
    pub generators: Vec<Vec<u32>>,
    pub leaves: usize,
}

impl CanonResult {
    /// Orbit representative (smallest vertex id) for every vertex.
    pub fn orbits(&self) -> Vec<u32> {
        orbits_of(self.labeling.len(), &self.generators)
    }
}

/// Orbits of the group generated by `generators`, as the smallest member of
/// each orbit.
pub fn orbits_of(n: usize, generators: &[Vec<u32>]) -> Vec<u32> {
    let mut uf = UnionFind::new(n);
    for g in generators {
        for (v, &w) in g.iter().enumerate() {
            uf.union(v as u32, w);
        }
    }
    let mut rep = vec![u32::MAX; n];
    for v in 0..n as u32 {
        let r = uf.find(v) as usize;
        if rep[r] == u32::MAX {
            rep[r] = v;
        }
    }
    (0..n as u32).map(|v| rep[uf.find(v) as usize]).collect()
}

pub fn canonical_form(g: &ColoredGraph) -> CanonResult {
    let n = g.len();
    if n == 0 {
        return CanonResult {
            cert: CanonicalCert::from_words(&[0]),
            labeling: vec![],
            generators: vec![],
            leaves: 1,
        };
    }
    let mut s = Searcher::new(g);
    s.search(0);
    let best = s.best.take().expect("at least one leaf");
    let mut labeling = vec![0u32; n];
    for (i, &v) in best.lab.iter().enumerate() {
        labeling[v as usize] = i as u32;
    }
    CanonResult {
        cert: CanonicalCert::from_words(&best.cert),
        labeling,
        generators: s.gens,
        leaves: s.leaves,
    }
}

pub fn certificate(g: &ColoredGraph) -> CanonicalCert {
    canonical_form(g).cert
}

struct Partition {
    lab: Vec<u32>,
    pos: Vec<u32>,
    /// Cell start for every position.
    cell: Vec<u32>,
    /// End (exclusive) of the cell, indexed by its start.
    end: Vec<u32>,
    /// Search depth at which the boundary at this start was created.
    level: Vec<u32>,
}

impl Partition {
    fn undo(&mut self, depth: u32) {
        let n = self.lab.len() as u32;
        let mut s = 0;
        while s < n {
            let mut e = self.end[s as usize];
            while e < n && self.level[e as usize] > depth {
                e = self.end[e as usize];
            }
            self.end[s as usize] = e;
            for i in s..e {
                self.cell[i as usize] = s;
            }
            s = e;
        }
    }
}

struct Leaf {
    cert: Vec<u32>,
    lab: Vec<u32>,
    path: Vec<u32>,
}

struct Searcher<'a> {
    g: &'a ColoredGraph,
    part: Partition,
    queue: VecDeque<u32>,
    in_queue: Vec<bool>,
    count: Vec<u32>,
    touched: Vec<u32>,
    touched_cells: Vec<u32>,
    cell_mark: Vec<bool>,
    path: Vec<u32>,
    first: Option<Leaf>,
    best: Option<Leaf>,
    gens: Vec<Vec<u32>>,
    leaves: usize,
}

impl<'a> Searcher<'a> {
    fn new(g: &'a ColoredGraph) -> Self {
        let n = g.len();
        let mut lab: Vec<u32> = (0..n as u32).collect();
        lab.sort_by_key(|&v| (g.colors[v as usize], v));
        let mut pos = vec![0u32; n];
        for (i, &v) in lab.iter().enumerate() {
            pos[v as usize] = i as u32;
        }
        let mut cell = vec![0u32; n];
        let mut end = vec![0u32; n];
        let level = vec![0u32; n];
        let mut starts = Vec::new();
        let mut s = 0usize;
        while s < n {
            let c = g.colors[lab[s] as usize];
            let mut e = s;
            while e < n && g.colors[lab[e] as usize] == c {
                cell[e] = s as u32;
                e += 1;
            }
            end[s] = e as u32;
            starts.push(s as u32);
            s = e;
        }
        let mut searcher = Searcher {
            g,
            part: Partition { lab, pos, cell, end, level },
            queue: VecDeque::new(),
            in_queue: vec![false; n],
            count: vec![0; n],
            touched: Vec::new(),
            touched_cells: Vec::new(),
            cell_mark: vec![false; n],
            path: Vec::new(),
            first: None,
            best: None,
            gens: Vec::new(),
            leaves: 0,
        };
        for s in starts {
            searcher.in_queue[s as usize] = true;
            searcher.queue.push_back(s);
        }
        searcher.refine(0);
        searcher
    }

    /// Refine to the coarsest equitable partition finer than the current one,
    /// using the queued cells as splitters.
    fn refine(&mut self, depth: u32) {
        while let Some(s) = self.queue.pop_front() {
            self.in_queue[s as usize] = false;
            let e = self.part.end[s as usize];
            for i in s..e {
                let v = self.part.lab[i as usize];
                for &u in &self.g.adj[v as usize] {
                    if self.count[u as usize] == 0 {
                        self.touched.push(u);
                    }
                    self.count[u as usize] += 1;
                }
            }
            for &u in &self.touched {
                let c = self.part.cell[self.part.pos[u as usize] as usize];
                if !self.cell_mark[c as usize] {
                    self.cell_mark[c as usize] = true;
                    self.touched_cells.push(c);
                }
            }
            self.touched_cells.sort_unstable();
            let cells = std::mem::take(&mut self.touched_cells);
            for &c in &cells {
                self.cell_mark[c as usize] = false;
                self.split(c, depth);
            }
            self.touched_cells = cells;
            self.touched_cells.clear();
            for &u in &self.touched {
                self.count[u as usize] = 0;
            }
            self.touched.clear();
        }
    }

    fn split(&mut self, c: u32, depth: u32) {
        let e = self.part.end[c as usize];
        if e - c == 1 {
            return;
        }
        let count = &self.count;
        let lab = &mut self.part.lab[c as usize..e as usize];
        let k0 = count[lab[0] as usize];
        if lab.iter().all(|&v| count[v as usize] == k0) {
            return;
        }
        lab.sort_unstable_by_key(|&v| count[v as usize]);
        for (i, &v) in lab.iter().enumerate() {
            self.part.pos[v as usize] = c + i as u32;
        }
        // piece boundaries
        let mut pieces: Vec<(u32, u32)> = Vec::new();
        let mut ps = c;
        for i in c + 1..=e {
            if i == e
                || count[self.part.lab[i as usize] as usize] != count[self.part.lab[ps as usize] as usize]
            {
                pieces.push((ps, i));
                ps = i;
            }
        }
        for &(s, t) in &pieces {
            self.part.end[s as usize] = t;
            if s != c {
                self.part.level[s as usize] = depth;
            }
            for i in s..t {
                self.part.cell[i as usize] = s;
            }
        }
        if self.in_queue[c as usize] {
            for &(s, _) in &pieces[1..] {
                self.in_queue[s as usize] = true;
                self.queue.push_back(s);
            }
        } else {
            let mut largest = 0;
            for (i, &(s, t)) in pieces.iter().enumerate() {
                let (ls, lt) = pieces[largest];
                if t - s > lt - ls {
                    largest = i;
                }
            }
            for (i, &(s, _)) in pieces.iter().enumerate() {
                if i != largest {
                    self.in_queue[s as usize] = true;
                    self.queue.push_back(s);
                }
            }
        }
    }

    fn individualize(&mut self, v: u32, depth: u32) {
        let p = &mut self.part;
        let c = p.cell[p.pos[v as usize] as usize];
        let e = p.end[c as usize];
        debug_assert!(e - c > 1);
        let i = p.pos[v as usize];
        let w = p.lab[c as usize];
        p.lab.swap(c as usize, i as usize);
        p.pos[w as usize] = i;
        p.pos[v as usize] = c;
        p.end[c as usize] = c + 1;
        p.end[(c + 1) as usize] = e;
        p.level[(c + 1) as usize] = depth;
        for k in c + 1..e {
            p.cell[k as usize] = c + 1;
        }
        self.in_queue[c as usize] = true;
        self.queue.push_back(c);
    }

    fn target_cell(&self) -> Option<u32> {
        let n = self.part.lab.len() as u32;
        let mut best: Option<(u32, u32)> = None;
        let mut s = 0;
        while s < n {
            let e = self.part.end[s as usize];
            let size = e - s;
            if size > 1 && best.map_or(true, |(_, bs)| size < bs) {
                best = Some((s, size));
                if size == 2 {
                    break;
                }
            }
            s = e;
        }
        best.map(|(s, _)| s)
    }

    fn leaf_cert(&self) -> Vec<u32> {
        let n = self.g.len();
        let pos = &self.part.pos;
        let mut edges: Vec<u64> = Vec::new();
        for v in 0..n {
            let a = pos[v];
            for &u in &self.g.adj[v] {
                let b = pos[u as usize];
                if a < b {
                    edges.push(((a as u64) << 32) | b as u64);
                }
            }
        }
        edges.sort_unstable();
        let mut cert = Vec::with_capacity(1 + n + 2 * edges.len());
        cert.push(n as u32);
        cert.extend(self.part.lab.iter().map(|&v| self.g.colors[v as usize]));
        for e in edges {
            cert.push((e >> 32) as u32);
            cert.push(e as u32);
        }
        cert
    }

    fn divergence(a: &[u32], b: &[u32]) -> usize {
        a.iter().zip(b).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()))
    }

    fn record_automorphism(&mut self, from: &[u32]) {
        let n = from.len();
        let mut gen = vec![0u32; n];
        let mut identity = true;
        for i in 0..n {
            gen[from[i] as usize] = self.part.lab[i];
            identity &= from[i] == self.part.lab[i];
        }
        if !identity {
            self.gens.push(gen);
        }
    }

    fn at_leaf(&mut self) -> Option<usize> {
        self.leaves += 1;
        let cert = self.leaf_cert();
        let Some(first) = &self.first else {
            let leaf = Leaf { cert, lab: self.part.lab.clone(), path: self.path.clone() };
            self.best = Some(Leaf { cert: leaf.cert.clone(), lab: leaf.lab.clone(), path: leaf.path.clone() });
            self.first = Some(leaf);
            return None;
        };
        if cert == first.cert {
            let from = first.lab.clone();
            let j = Self::divergence(&self.path, &first.path);
            self.record_automorphism(&from);
            return Some(j);
        }
        let best = self.best.as_ref().expect("best leaf");
        match cert.cmp(&best.cert) {
            std::cmp::Ordering::Equal => {
                let from = best.lab.clone();
                let j = Self::divergence(&self.path, &best.path);
                self.record_automorphism(&from);
                Some(j)
            }
            std::cmp::Ordering::Less => {
                self.best = Some(Leaf { cert, lab: self.part.lab.clone(), path: self.path.clone() });
                None
            }
            std::cmp::Ordering::Greater => None,
        }
    }

    fn search(&mut self, depth: u32) -> Option<usize> {
        let Some(c) = self.target_cell() else {
            return self.at_leaf();
        };
        let e = self.part.end[c as usize];
        let mut cands: Vec<u32> = self.part.lab[c as usize..e as usize].to_vec();
        cands.sort_unstable();
        let gen_start = self.gens.len();
        let mut applied = gen_start;
        let mut uf: Option<UnionFind> = None;
        let mut tried: Vec<u32> = Vec::new();
        for v in cands {
            if self.gens.len() > applied {
                let uf = uf.get_or_insert_with(|| UnionFind::new(self.g.len()));
                for gen in &self.gens[applied..] {
                    for (x, &y) in gen.iter().enumerate() {
                        uf.union(x as u32, y);
                    }
                }
                applied = self.gens.len();
            }
            if let Some(uf) = uf.as_mut() {
                if tried.iter().any(|&t| uf.same(t, v)) {
                    continue;
                }
            }
            tried.push(v);
            self.path.push(v);
            self.individualize(v, depth + 1);
            self.refine(depth + 1);
            let r = self.search(depth + 1);
            self.part.undo(depth);
            self.path.pop();
            if let Some(j) = r {
                if j < depth as usize {
                    return Some(j);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, Stream};

    fn cycle(n: u32) -> ColoredGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        ColoredGraph::from_edges(n as usize, &edges, vec![0; n as usize])
    }

    fn grid(w: u32, h: u32) -> ColoredGraph {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1));
                }
                if y + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        ColoredGraph::from_edges((w * h) as usize, &edges, vec![0; (w * h) as usize])
    }

    fn petersen() -> ColoredGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((i + 5, (i + 2) % 5 + 5));
        }
        ColoredGraph::from_edges(10, &edges, vec![0; 10])
    }

    fn random_perm(n: usize, rng: &mut CounterRng) -> Vec<u32> {
        let mut p: Vec<u32> = (0..n as u32).collect();
        rng.shuffle(&mut p);
        p
    }

    /// Order of the group generated by the generators, by orbit enumeration
    /// of the induced action on vertex tuples (small graphs only).
    fn group_order(n: usize, gens: &[Vec<u32>]) -> usize {
        let id: Vec<u32> = (0..n as u32).collect();
        let mut seen = std::collections::HashSet::from([id.clone()]);
        let mut stack = vec![id];
        while let Some(p) = stack.pop() {
            for g in gens {
                let q: Vec<u32> = p.iter().map(|&x| g[x as usize]).collect();
                if seen.insert(q.clone()) {
                    stack.push(q);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn relabelling_preserves_certificate() {
        let mut rng = CounterRng::new(5, 0, Stream::Aux);
        for g in [cycle(7), grid(4, 3), petersen(), grid(5, 5)] {
            let c = certificate(&g);
            for _ in 0..10 {
                let p = random_perm(g.len(), &mut rng);
                assert_eq!(certificate(&g.permuted(&p)), c);
            }
        }
    }

    #[test]
    fn adding_an_edge_changes_certificate() {
        let g = grid(4, 4);
        let mut h = g.clone();
        h.adj[0].push(5);
        h.adj[5].push(0);
        assert_ne!(certificate(&g), certificate(&h));
    }

    #[test]
    fn colours_matter() {
        let mut g = cycle(6);
        let c0 = certificate(&g);
        g.colors[0] = 1;
        let c1 = certificate(&g);
        g.colors[0] = 0;
        g.colors[3] = 1;
        assert_ne!(c0, c1);
        assert_eq!(c1, certificate(&g));
    }

    #[test]
    fn distinguishes_cospectral_like_pairs() {
        // C6 versus two disjoint triangles: same degree sequence, refinement-equivalent
        let two_triangles =
            ColoredGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)], vec![0; 6]);
        assert_ne!(certificate(&cycle(6)), certificate(&two_triangles));
    }

    #[test]
    fn automorphism_groups_have_expected_order() {
        assert_eq!(group_order(7, &canonical_form(&cycle(7)).generators), 14);
        assert_eq!(group_order(10, &canonical_form(&petersen()).generators), 120);
        assert_eq!(group_order(12, &canonical_form(&grid(4, 3)).generators), 4);
        assert_eq!(group_order(9, &canonical_form(&grid(3, 3)).generators), 8);
    }

    #[test]
    fn generators_are_automorphisms() {
        let g = petersen();
        let res = canonical_form(&g);
        for gen in &res.generators {
            let h = g.permuted(gen);
            for v in 0..g.len() {
                let mut a = g.adj[v].clone();
                let mut b = h.adj[v].clone();
                a.sort();
                b.sort();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn orbits_of_rooted_binary_tree() {
        // complete binary tree of depth 3 rooted at 0: orbits are the levels
        let mut edges = Vec::new();
        for v in 1..15u32 {
            edges.push(((v - 1) / 2, v));
        }
        let mut colors = vec![0; 15];
        colors[0] = 1;
        let res = canonical_form(&ColoredGraph::from_edges(15, &edges, colors));
        let orb = res.orbits();
        assert_eq!(orb, vec![0, 1, 1, 3, 3, 3, 3, 7, 7, 7, 7, 7, 7, 7, 7]);
    }
}
