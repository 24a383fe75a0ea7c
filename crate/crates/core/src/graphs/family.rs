use super::coord::VertexCoord;
use crate::error::{PercError, Result};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::sync::Arc;

/// Graph families, in the JSON form accepted by the CLI, e.g.
/// `{"family":"slab","k":2,"d":3,"L":4}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamilySpec {
    Hypercubic { d: usize },
    Torus { lengths: Vec<usize> },
    /// `Z^k x (Z/LZ)^(d-k)`.
    Slab { k: usize, d: usize, #[serde(rename = "L")] l: usize },
    #[serde(rename = "tree")]
    RegularTree { degree: usize },
    /// `T_degree x C_L`.
    TreeTimesCycle { degree: usize, #[serde(rename = "L")] l: usize },
    /// `T_degree x Z`.
    TreeTimesLine { degree: usize },
    /// The `(b+1)`-regular tree with a fixed end, plus an edge from every
    /// vertex to its grandparent.
    Grandparent { b: usize },
    Cycle { n: usize },
    Complete { n: usize },
    FiniteEdgeList { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphFamilySpec {
    pub fn validate(&self) -> Result<()> {
        use GraphFamilySpec::*;
        let bad = |msg: String| Err(PercError::Config(msg));
        match self {
            Hypercubic { d } if *d == 0 => bad("hypercubic: d must be >= 1".into()),
            Torus { lengths } if lengths.is_empty() || lengths.iter().any(|&l| l == 0) => {
                bad("torus: lengths must be nonempty and positive".into())
            }
            Slab { k, d, l } if !(1 <= *k && k < d && *l >= 1) => {
                bad(format!("slab: need 1 <= k < d and L >= 1 (got k={k}, d={d}, L={l})"))
            }
            RegularTree { degree } | TreeTimesLine { degree } if *degree < 3 => {
                bad(format!("tree degree must be >= 3 (got {degree})"))
            }
            TreeTimesCycle { degree, l } if *degree < 3 || *l == 0 => {
                bad(format!("tree_times_cycle: need degree >= 3 and L >= 1 (got {degree}, {l})"))
            }
            Grandparent { b } if *b < 2 => bad(format!("grandparent: b must be >= 2 (got {b})")),
            Cycle { n } if *n < 2 => bad(format!("cycle: n must be >= 2 (got {n})")),
            Complete { n } if *n < 2 => bad(format!("complete: n must be >= 2 (got {n})")),
            FiniteEdgeList { n, edges } => {
                if *n == 0 {
                    return bad("finite_edge_list: n must be positive".into());
                }
                for &(a, b) in edges {
                    if a >= *n || b >= *n || a == b {
                        return bad(format!("finite_edge_list: bad edge ({a},{b})"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Family tag as written in configs, e.g. `slab`.
    pub fn family_name(&self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.get("family").and_then(|f| f.as_str()).map(str::to_owned))
            .unwrap_or_default()
    }

    /// Parameter part of the label, e.g. `k=2,d=3,L=4`.
    pub fn params(&self) -> String {
        let label = self.label();
        match (label.find('('), label.rfind(')')) {
            (Some(a), Some(b)) if a < b => label[a + 1..b].to_owned(),
            _ => String::new(),
        }
    }

    /// Short human-readable label used in CSV output.
    pub fn label(&self) -> String {
        use GraphFamilySpec::*;
        match self {
            Hypercubic { d } => format!("hypercubic(d={d})"),
            Torus { lengths } => format!(
                "torus({})",
                lengths.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("x")
            ),
            Slab { k, d, l } => format!("slab(k={k},d={d},L={l})"),
            RegularTree { degree } => format!("tree(degree={degree})"),
            TreeTimesCycle { degree, l } => format!("tree_times_cycle(degree={degree},L={l})"),
            TreeTimesLine { degree } => format!("tree_times_line(degree={degree})"),
            Grandparent { b } => format!("grandparent(b={b})"),
            Cycle { n } => format!("cycle(n={n})"),
            Complete { n } => format!("complete(n={n})"),
            FiniteEdgeList { n, edges } => format!("edge_list(n={n},m={})", edges.len()),
        }
    }
}

/// Cyclic axis of length `l`: neighbour offsets of a point, without duplicates.
#[inline]
fn cyclic_neighbors(x: i64, l: usize, out: &mut SmallVec<[i64; 2]>) {
    out.clear();
    let l = l as i64;
    match l {
        1 => {}
        2 => out.push(1 - x),
        _ => {
            out.push((x + 1).rem_euclid(l));
            out.push((x - 1).rem_euclid(l));
        }
    }
}

#[inline]
fn cyclic_degree(l: usize) -> usize {
    l.min(3) - 1
}

#[inline]
fn cyclic_dist(x: i64, l: usize) -> u64 {
    let l = l as i64;
    let x = x.rem_euclid(l);
    x.min(l - x) as u64
}

/// Lazy neighbour oracle for a graph family, rooted at the all-zero /
/// empty-word vertex. Immutable and cheap to clone.
#[derive(Clone, Debug)]
pub struct GraphHandle {
    spec: GraphFamilySpec,
    degree: usize,
    n_ints: usize,
    root: VertexCoord,
    finite_adj: Option<Arc<Vec<Vec<usize>>>>,
}

impl GraphHandle {
    pub fn new(spec: GraphFamilySpec) -> Result<Self> {
        spec.validate()?;
        use GraphFamilySpec::*;
        let (degree, n_ints) = match &spec {
            Hypercubic { d } => (2 * d, *d),
            Torus { lengths } => (lengths.iter().map(|&l| cyclic_degree(l)).sum(), lengths.len()),
            Slab { k, d, l } => (2 * k + (d - k) * cyclic_degree(*l), *d),
            RegularTree { degree } => (*degree, 0),
            TreeTimesCycle { degree, l } => (degree + cyclic_degree(*l), 1),
            TreeTimesLine { degree } => (degree + 2, 1),
            Grandparent { b } => (2 + b + b * b, 1),
            Cycle { n } => (cyclic_degree(*n), 1),
            Complete { n } => (n - 1, 1),
            FiniteEdgeList { .. } => (0, 1),
        };
        let mut finite_adj = None;
        let mut degree = degree;
        if let FiniteEdgeList { n, edges } = &spec {
            let mut adj = vec![Vec::new(); *n];
            for &(a, b) in edges {
                if !adj[a].contains(&b) {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
            degree = adj[0].len();
            finite_adj = Some(Arc::new(adj));
        }
        let root = VertexCoord::from_ints(&vec![0; n_ints]);
        Ok(GraphHandle { spec, degree, n_ints, root, finite_adj })
    }

    pub fn spec(&self) -> &GraphFamilySpec {
        &self.spec
    }

    pub fn root(&self) -> &VertexCoord {
        &self.root
    }

    /// Degree of the root (every vertex for the transitive families).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_ints(&self) -> usize {
        self.n_ints
    }

    pub fn is_finite(&self) -> bool {
        use GraphFamilySpec::*;
        matches!(self.spec, Torus { .. } | Cycle { .. } | Complete { .. } | FiniteEdgeList { .. })
    }

    /// Number of vertices for finite families.
    pub fn vertex_count(&self) -> Option<usize> {
        use GraphFamilySpec::*;
        match &self.spec {
            Torus { lengths } => Some(lengths.iter().product()),
            Cycle { n } | Complete { n } | FiniteEdgeList { n, .. } => Some(*n),
            _ => None,
        }
    }

    /// Whether the family is vertex-transitive by construction.
    pub fn is_transitive(&self) -> bool {
        !matches!(self.spec, GraphFamilySpec::FiniteEdgeList { .. })
    }

    /// Whether the family is edge-transitive by construction.
    pub fn is_edge_transitive(&self) -> bool {
        use GraphFamilySpec::*;
        match &self.spec {
            Hypercubic { .. } | RegularTree { .. } | Cycle { .. } | Complete { .. } => true,
            Torus { lengths } => lengths.iter().all(|&l| l == lengths[0] && l >= 3),
            _ => false,
        }
    }

    /// Closed-form growth rate where a standard one exists.
    pub fn analytic_growth(&self) -> Option<f64> {
        use GraphFamilySpec::*;
        match &self.spec {
            Hypercubic { .. } | Slab { .. } => Some(1.0),
            Torus { .. } | Cycle { .. } | Complete { .. } => Some(1.0),
            RegularTree { degree } | TreeTimesCycle { degree, .. } | TreeTimesLine { degree } => {
                Some((*degree - 1) as f64)
            }
            Grandparent { .. } | FiniteEdgeList { .. } => None,
        }
    }

    /// Critical probability where it is known exactly.
    pub fn known_pc(&self) -> Option<f64> {
        use GraphFamilySpec::*;
        match &self.spec {
            Hypercubic { d: 1 } => Some(1.0),
            Hypercubic { d: 2 } => Some(0.5),
            RegularTree { degree } => Some(1.0 / (*degree - 1) as f64),
            _ => None,
        }
    }

    pub fn validate_vertex(&self, v: &VertexCoord) -> Result<()> {
        use GraphFamilySpec::*;
        let bad = || Err(PercError::InvalidVertex(format!("{v} is not a vertex of {}", self.spec.label())));
        if v.ints.len() != self.n_ints {
            return bad();
        }
        let in_range = |x: i64, l: usize| x >= 0 && (x as u64) < l as u64;
        let tree_word_ok = |degree: usize, word: &[u8]| {
            word.iter()
                .enumerate()
                .all(|(i, &a)| (a as usize) < if i == 0 { degree } else { degree - 1 })
        };
        let ok = match &self.spec {
            Hypercubic { .. } => v.word.is_empty(),
            Torus { lengths } => {
                v.word.is_empty() && v.ints.iter().zip(lengths).all(|(&x, &l)| in_range(x, l))
            }
            Slab { k, l, .. } => v.word.is_empty() && v.ints[*k..].iter().all(|&x| in_range(x, *l)),
            RegularTree { degree } => tree_word_ok(*degree, &v.word),
            TreeTimesCycle { degree, l } => in_range(v.ints[0], *l) && tree_word_ok(*degree, &v.word),
            TreeTimesLine { degree } => tree_word_ok(*degree, &v.word),
            Grandparent { b } => {
                v.word.iter().all(|&a| (a as usize) < *b) && v.word.first().map_or(true, |&a| a >= 1)
            }
            Cycle { n } | Complete { n } | FiniteEdgeList { n, .. } => {
                v.word.is_empty() && in_range(v.ints[0], *n)
            }
        };
        if ok {
            Ok(())
        } else {
            bad()
        }
    }

    /// Neighbours of `v`, checking validity first.
    pub fn neighbors(&self, v: &VertexCoord) -> Result<Vec<VertexCoord>> {
        self.validate_vertex(v)?;
        let mut out = Vec::with_capacity(self.degree);
        self.neighbors_into(v, &mut out);
        Ok(out)
    }

    /// Hot-path neighbour enumeration into a reusable buffer. `v` must be valid.
    pub fn neighbors_into(&self, v: &VertexCoord, out: &mut Vec<VertexCoord>) {
        use GraphFamilySpec::*;
        out.clear();
        let mut cyc: SmallVec<[i64; 2]> = SmallVec::new();
        match &self.spec {
            Hypercubic { d } => {
                for i in 0..*d {
                    for s in [1, -1] {
                        let mut w = v.clone();
                        w.ints[i] += s;
                        out.push(w);
                    }
                }
            }
            Torus { lengths } => {
                for (i, &l) in lengths.iter().enumerate() {
                    cyclic_neighbors(v.ints[i], l, &mut cyc);
                    for &x in &cyc {
                        let mut w = v.clone();
                        w.ints[i] = x;
                        out.push(w);
                    }
                }
            }
            Slab { k, d, l } => {
                for i in 0..*d {
                    if i < *k {
                        for s in [1, -1] {
                            let mut w = v.clone();
                            w.ints[i] += s;
                            out.push(w);
                        }
                    } else {
                        cyclic_neighbors(v.ints[i], *l, &mut cyc);
                        for &x in &cyc {
                            let mut w = v.clone();
                            w.ints[i] = x;
                            out.push(w);
                        }
                    }
                }
            }
            RegularTree { degree } => tree_neighbors(*degree, v, out),
            TreeTimesCycle { degree, l } => {
                tree_neighbors(*degree, v, out);
                cyclic_neighbors(v.ints[0], *l, &mut cyc);
                for &x in &cyc {
                    let mut w = v.clone();
                    w.ints[0] = x;
                    out.push(w);
                }
            }
            TreeTimesLine { degree } => {
                tree_neighbors(*degree, v, out);
                for s in [1, -1] {
                    let mut w = v.clone();
                    w.ints[0] += s;
                    out.push(w);
                }
            }
            Grandparent { b } => grandparent_neighbors(*b, v, out),
            Cycle { n } => {
                cyclic_neighbors(v.ints[0], *n, &mut cyc);
                out.extend(cyc.iter().map(|&x| VertexCoord::from_ints(&[x])));
            }
            Complete { n } => {
                let x = v.ints[0];
                out.extend((0..*n as i64).filter(|&y| y != x).map(|y| VertexCoord::from_ints(&[y])));
            }
            FiniteEdgeList { .. } => {
                let adj = self.finite_adj.as_ref().expect("edge list adjacency");
                out.extend(adj[v.ints[0] as usize].iter().map(|&y| VertexCoord::from_ints(&[y as i64])));
            }
        }
    }

    /// Graph distance from the root, in closed form.
    pub fn distance_from_root(&self, v: &VertexCoord) -> u64 {
        use GraphFamilySpec::*;
        match &self.spec {
            Hypercubic { .. } => v.ints.iter().map(|x| x.unsigned_abs()).sum(),
            Torus { lengths } => v.ints.iter().zip(lengths).map(|(&x, &l)| cyclic_dist(x, l)).sum(),
            Slab { k, l, .. } => v
                .ints
                .iter()
                .enumerate()
                .map(|(i, &x)| if i < *k { x.unsigned_abs() } else { cyclic_dist(x, *l) })
                .sum(),
            RegularTree { .. } => v.word.len() as u64,
            TreeTimesCycle { l, .. } => v.word.len() as u64 + cyclic_dist(v.ints[0], *l),
            TreeTimesLine { .. } => v.word.len() as u64 + v.ints[0].unsigned_abs(),
            Grandparent { .. } => {
                // Heights above the lowest common ancestor on the tree; every
                // two tree levels can be covered by one grandparent edge.
                let m = v.ints[0];
                let w = v.word.len() as i64;
                let (up, down) = if m <= 0 { (0, w - m) } else { (m, w) };
                ((up + 1) / 2 + (down + 1) / 2) as u64
            }
            Cycle { n } => cyclic_dist(v.ints[0], *n),
            Complete { .. } => u64::from(v.ints[0] != 0),
            FiniteEdgeList { .. } => {
                let adj = self.finite_adj.as_ref().expect("edge list adjacency");
                let target = v.ints[0] as usize;
                let mut dist = vec![u64::MAX; adj.len()];
                let mut queue = std::collections::VecDeque::from([0usize]);
                dist[0] = 0;
                while let Some(x) = queue.pop_front() {
                    if x == target {
                        return dist[x];
                    }
                    for &y in &adj[x] {
                        if dist[y] == u64::MAX {
                            dist[y] = dist[x] + 1;
                            queue.push_back(y);
                        }
                    }
                }
                u64::MAX
            }
        }
    }

    /// Tree height of a tree-based coordinate relative to the root level
    /// (Grandparent only: the level of the vertex, parents one level up).
    pub fn grandparent_level(&self, v: &VertexCoord) -> Option<i64> {
        match &self.spec {
            GraphFamilySpec::Grandparent { .. } => Some(v.ints[0] - v.word.len() as i64),
            _ => None,
        }
    }

    /// Explicit vertex list for finite families.
    pub fn vertices(&self) -> Option<Vec<VertexCoord>> {
        use GraphFamilySpec::*;
        match &self.spec {
            Torus { lengths } => {
                let mut out = vec![VertexCoord::from_ints(&vec![0; lengths.len()])];
                for (i, &l) in lengths.iter().enumerate() {
                    let mut next = Vec::with_capacity(out.len() * l);
                    for v in &out {
                        for x in 0..l as i64 {
                            let mut w = v.clone();
                            w.ints[i] = x;
                            next.push(w);
                        }
                    }
                    out = next;
                }
                out.sort();
                Some(out)
            }
            Cycle { n } | Complete { n } | FiniteEdgeList { n, .. } => {
                Some((0..*n as i64).map(|x| VertexCoord::from_ints(&[x])).collect())
            }
            _ => None,
        }
    }
}

fn tree_neighbors(degree: usize, v: &VertexCoord, out: &mut Vec<VertexCoord>) {
    let branching = if v.word.is_empty() { degree } else { degree - 1 };
    if !v.word.is_empty() {
        let mut w = v.clone();
        w.word.pop();
        out.push(w);
    }
    for a in 0..branching as u8 {
        let mut w = v.clone();
        w.word.push(a);
        out.push(w);
    }
}

/// Grandparent-graph coordinates: `(m; w)` is the vertex reached from the
/// spine vertex `x_m` by descending along `w`, where letter 0 at the spine
/// leads back onto the spine (so a nonempty `w` starts with a letter >= 1).
/// The parent of `x_m` is `x_{m+1}`.
fn gp_parent(v: &VertexCoord) -> VertexCoord {
    let mut w = v.clone();
    if w.word.is_empty() {
        w.ints[0] += 1;
    } else {
        w.word.pop();
    }
    w
}

fn gp_children(b: usize, v: &VertexCoord, out: &mut Vec<VertexCoord>) {
    for a in 0..b as u8 {
        let mut w = v.clone();
        if v.word.is_empty() && a == 0 {
            w.ints[0] -= 1;
        } else {
            w.word.push(a);
        }
        out.push(w);
    }
}

fn grandparent_neighbors(b: usize, v: &VertexCoord, out: &mut Vec<VertexCoord>) {
    let parent = gp_parent(v);
    out.push(gp_parent(&parent));
    out.push(parent);
    let start = out.len();
    gp_children(b, v, out);
    let end = out.len();
    for i in start..end {
        let child = out[i].clone();
        gp_children(b, &child, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, Stream};
    use std::collections::{HashSet, VecDeque};

    fn handle(spec: GraphFamilySpec) -> GraphHandle {
        GraphHandle::new(spec).unwrap()
    }

    fn all_families() -> Vec<GraphHandle> {
        use GraphFamilySpec::*;
        vec![
            handle(Hypercubic { d: 1 }),
            handle(Hypercubic { d: 2 }),
            handle(Hypercubic { d: 3 }),
            handle(Torus { lengths: vec![3, 4] }),
            handle(Torus { lengths: vec![2, 5] }),
            handle(Slab { k: 2, d: 3, l: 1 }),
            handle(Slab { k: 2, d: 3, l: 2 }),
            handle(Slab { k: 2, d: 3, l: 4 }),
            handle(RegularTree { degree: 3 }),
            handle(RegularTree { degree: 4 }),
            handle(TreeTimesCycle { degree: 3, l: 5 }),
            handle(TreeTimesCycle { degree: 3, l: 2 }),
            handle(TreeTimesLine { degree: 3 }),
            handle(Grandparent { b: 2 }),
            handle(Grandparent { b: 3 }),
            handle(Cycle { n: 6 }),
            handle(Complete { n: 5 }),
        ]
    }

    /// Random vertex reached by a random walk of random length from the root.
    fn random_vertex(h: &GraphHandle, rng: &mut CounterRng) -> VertexCoord {
        let mut v = h.root().clone();
        let steps = rng.below(12);
        let mut buf = Vec::new();
        for _ in 0..steps {
            h.neighbors_into(&v, &mut buf);
            v = buf[rng.below(buf.len())].clone();
        }
        v
    }

    #[test]
    fn z2_origin_neighbors() {
        let h = handle(GraphFamilySpec::Hypercubic { d: 2 });
        let mut nb = h.neighbors(h.root()).unwrap();
        nb.sort();
        let mut want: Vec<_> =
            [[1, 0], [-1, 0], [0, 1], [0, -1]].iter().map(|c| VertexCoord::from_ints(c)).collect();
        want.sort();
        assert_eq!(nb, want);
    }

    #[test]
    fn tree_root_has_degree_neighbors() {
        let h = handle(GraphFamilySpec::RegularTree { degree: 3 });
        assert_eq!(h.neighbors(h.root()).unwrap().len(), 3);
    }

    #[test]
    fn grandparent_has_eight_neighbors() {
        // parent, grandparent, 2 children, 4 grandchildren
        let h = handle(GraphFamilySpec::Grandparent { b: 2 });
        let mut rng = CounterRng::new(1, 0, Stream::Aux);
        for _ in 0..200 {
            let v = random_vertex(&h, &mut rng);
            let nb = h.neighbors(&v).unwrap();
            assert_eq!(nb.len(), 8);
            let distinct: HashSet<_> = nb.iter().collect();
            assert_eq!(distinct.len(), 8);
        }
    }

    #[test]
    fn neighbor_relation_is_symmetric_and_regular() {
        for h in all_families() {
            let mut rng = CounterRng::new(11, 0, Stream::Aux);
            for _ in 0..1000 {
                let v = random_vertex(&h, &mut rng);
                let nb = h.neighbors(&v).unwrap();
                assert_eq!(nb.len(), h.degree(), "{} at {v}", h.spec().label());
                let distinct: HashSet<_> = nb.iter().collect();
                assert_eq!(distinct.len(), nb.len(), "duplicate neighbour in {}", h.spec().label());
                for u in &nb {
                    assert!(h.neighbors(u).unwrap().contains(&v), "{}: {u} !~ {v}", h.spec().label());
                }
            }
        }
    }

    #[test]
    fn closed_form_distance_matches_bfs() {
        for h in all_families() {
            let mut dist = std::collections::HashMap::new();
            dist.insert(h.root().clone(), 0u64);
            let mut queue = VecDeque::from([h.root().clone()]);
            let mut buf = Vec::new();
            while let Some(v) = queue.pop_front() {
                let dv = dist[&v];
                assert_eq!(h.distance_from_root(&v), dv, "{} at {v}", h.spec().label());
                if dv == 5 {
                    continue;
                }
                h.neighbors_into(&v, &mut buf);
                for u in buf.drain(..) {
                    if !dist.contains_key(&u) {
                        dist.insert(u.clone(), dv + 1);
                        queue.push_back(u);
                    }
                }
            }
        }
    }

    #[test]
    fn malformed_vertices_rejected() {
        let h = handle(GraphFamilySpec::RegularTree { degree: 3 });
        assert!(h.neighbors(&VertexCoord::new(&[], &[0, 2])).is_err());
        assert!(h.neighbors(&VertexCoord::new(&[1], &[])).is_err());
        let g = handle(GraphFamilySpec::Grandparent { b: 2 });
        assert!(g.neighbors(&VertexCoord::new(&[0], &[0])).is_err());
        let c = handle(GraphFamilySpec::Cycle { n: 4 });
        assert!(c.neighbors(&VertexCoord::from_ints(&[4])).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        use GraphFamilySpec::*;
        for spec in [
            Slab { k: 3, d: 3, l: 2 },
            Slab { k: 0, d: 3, l: 2 },
            RegularTree { degree: 2 },
            Grandparent { b: 1 },
            Hypercubic { d: 0 },
        ] {
            assert!(GraphHandle::new(spec).is_err());
        }
    }

    #[test]
    fn spec_json_form() {
        let spec: GraphFamilySpec = serde_json::from_str(r#"{"family":"slab","k":2,"d":3,"L":4}"#).unwrap();
        assert_eq!(spec, GraphFamilySpec::Slab { k: 2, d: 3, l: 4 });
        let tree: GraphFamilySpec = serde_json::from_str(r#"{"family":"tree","degree":4}"#).unwrap();
        assert_eq!(tree, GraphFamilySpec::RegularTree { degree: 4 });
    }
}
