//! Exact event probabilities and identity checks on finite graphs. Ghost
//! fields are integrated in closed form: a set of m edges contains a green
//! edge with probability 1 - e^{-hm}.

use super::finite::{configuration_count, expectations, expectations_vec, Config, FiniteGraph};
use crate::error::{PercError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ExactEvent {
    /// Edge closed, endpoints in distinct clusters each touching ≥ n edges.
    S { edge: usize, n: u32 },
    /// Endpoints of the edge in distinct clusters.
    D { edge: usize },
    /// Edge closed, endpoints in distinct clusters each touching a green edge.
    T { edge: usize, h: f64 },
    /// |E(K_0)| ≥ n.
    Tail { n: u32 },
    /// u and v in distinct clusters each touching ≥ n edges.
    A { u: u32, v: u32, n: u32 },
    /// K_0 reaches a vertex at distance ≥ r from vertex 0.
    OneArm { r: u32 },
}

impl ExactEvent {
    pub fn tag(&self) -> &'static str {
        match self {
            ExactEvent::S { .. } => "S",
            ExactEvent::D { .. } => "D",
            ExactEvent::T { .. } => "T",
            ExactEvent::Tail { .. } => "tail",
            ExactEvent::A { .. } => "A",
            ExactEvent::OneArm { .. } => "one_arm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub value: f64,
    /// Probability of the complement, computed separately.
    pub complement: f64,
    pub tag: String,
    pub configurations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl Gap {
    fn new(lhs: f64, rhs: f64) -> Self {
        Gap { lhs, rhs, gap: (lhs - rhs).abs() }
    }
}

fn green(h: f64, m: u32) -> f64 {
    -(-h * m as f64).exp_m1()
}

/// Probability that two clusters with edge counts a, b sharing s edges
/// both touch a green edge.
fn green_both(h: f64, a: u32, b: u32, s: u32) -> f64 {
    green(h, a) + green(h, b) - green(h, a + b - s)
}

fn check_edge(fg: &FiniteGraph, e: usize) -> Result<(u32, u32)> {
    fg.edges
        .get(e)
        .copied()
        .ok_or_else(|| PercError::Config(format!("edge index {e} out of range")))
}

fn check_vertex(fg: &FiniteGraph, v: u32) -> Result<()> {
    if v as usize >= fg.n {
        return Err(PercError::InvalidVertex(format!("vertex {v} out of range")));
    }
    Ok(())
}

fn check_open_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PercError::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

fn check_h(h: f64) -> Result<()> {
    if !(h >= 0.0) {
        return Err(PercError::Domain(format!("h must be nonnegative, got {h}")));
    }
    Ok(())
}

/// Conditional probability of the event given the bond configuration.
fn event_weight(c: &Config, ev: &ExactEvent, dist0: &[u32]) -> f64 {
    let fg = c.fg;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    match *ev {
        ExactEvent::S { edge, n } => {
            let (a, b) = fg.edges[edge];
            let (ca, cb) = (c.cluster_of(a), c.cluster_of(b));
            ind(ca != cb && c.touched[ca] >= n && c.touched[cb] >= n)
        }
        ExactEvent::D { edge } => {
            let (a, b) = fg.edges[edge];
            ind(c.cluster_of(a) != c.cluster_of(b))
        }
        ExactEvent::T { edge, h } => {
            let (a, b) = fg.edges[edge];
            let (ca, cb) = (c.cluster_of(a), c.cluster_of(b));
            if ca == cb {
                0.0
            } else {
                green_both(h, c.touched[ca], c.touched[cb], c.shared(ca, cb))
            }
        }
        ExactEvent::Tail { n } => ind(c.touched[c.cluster_of(0)] >= n),
        ExactEvent::A { u, v, n } => {
            let (cu, cv) = (c.cluster_of(u), c.cluster_of(v));
            ind(cu != cv && c.touched[cu] >= n && c.touched[cv] >= n)
        }
        ExactEvent::OneArm { r } => {
            let c0 = c.cluster_of(0);
            ind((0..fg.n).any(|w| c.comp[w] as usize == c0 && dist0[w] >= r))
        }
    }
}

pub fn exact_event(fg: &FiniteGraph, ev: &ExactEvent, p: f64) -> Result<ExactResult> {
    match *ev {
        ExactEvent::S { edge, .. } | ExactEvent::D { edge } => {
            check_edge(fg, edge)?;
        }
        ExactEvent::T { edge, h } => {
            check_edge(fg, edge)?;
            check_h(h)?;
        }
        ExactEvent::A { u, v, .. } => {
            check_vertex(fg, u)?;
            check_vertex(fg, v)?;
        }
        ExactEvent::Tail { .. } | ExactEvent::OneArm { .. } => {}
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(PercError::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    let dist0 = fg.distances(0);
    let [value, complement] = expectations(fg, p, |c| {
        let w = event_weight(c, ev, &dist0);
        [w, 1.0 - w]
    })?;
    Ok(ExactResult { value, complement, tag: ev.tag().to_string(), configurations: configuration_count(fg) })
}

/// Both sides of
/// P(T_e) = E[1(e closed) #{clusters touching e and green}] - ((1-p)/p) P(e open, G_e).
pub fn verify_akn_identity(fg: &FiniteGraph, e: usize, p: f64, h: f64) -> Result<Gap> {
    let (a, b) = check_edge(fg, e)?;
    check_open_p(p)?;
    check_h(h)?;
    let ratio = (1.0 - p) / p;
    let [lhs, count, open_green] = expectations(fg, p, |c| {
        let (ca, cb) = (c.cluster_of(a), c.cluster_of(b));
        if c.is_open(e) {
            [0.0, 0.0, green(h, c.touched[ca])]
        } else if ca == cb {
            [0.0, green(h, c.touched[ca]), 0.0]
        } else {
            let t = green_both(h, c.touched[ca], c.touched[cb], c.shared(ca, cb));
            [t, green(h, c.touched[ca]) + green(h, c.touched[cb]), 0.0]
        }
    })?;
    Ok(Gap::new(lhs, count - ratio * open_green))
}

/// P(e closed, G_e) against ((1-p)/p) P(e open, G_e), G_e being the event
/// that a cluster touching e touches a green edge.
pub fn verify_insertion_tolerance(fg: &FiniteGraph, e: usize, p: f64, h: f64) -> Result<Gap> {
    let (a, b) = check_edge(fg, e)?;
    check_open_p(p)?;
    check_h(h)?;
    let [closed, open] = expectations(fg, p, |c| {
        let (ca, cb) = (c.cluster_of(a), c.cluster_of(b));
        if c.is_open(e) {
            [0.0, green(h, c.touched[ca])]
        } else if ca == cb {
            [green(h, c.touched[ca]), 0.0]
        } else {
            [green(h, c.touched[ca] + c.touched[cb] - c.shared(ca, cb)), 0.0]
        }
    })?;
    Ok(Gap::new(closed, (1.0 - p) / p * open))
}

/// Clusters touching edge e (one or two).
fn clusters_at(c: &Config, e: usize) -> ([usize; 2], usize) {
    let (a, b) = c.fg.edges[e];
    let (ca, cb) = (c.cluster_of(a), c.cluster_of(b));
    if ca == cb {
        ([ca, ca], 1)
    } else {
        ([ca, cb], 2)
    }
}

fn require_transitive(fg: &FiniteGraph) -> Result<usize> {
    match fg.degree {
        Some(d) if fg.transitive && d > 0 => Ok(d),
        _ => Err(PercError::Domain("graph is not vertex-transitive".into())),
    }
}

/// P(T_η) = (1/p) E Σ{h_p(K) / |E(K)| : K touching η and green}, with η
/// uniform over edges at vertex 0.
pub fn verify_lemma_form(fg: &FiniteGraph, p: f64, h: f64) -> Result<Gap> {
    let d = require_transitive(fg)? as f64;
    check_open_p(p)?;
    check_h(h)?;
    let root_edges = fg.incident[0].clone();
    let [lhs, rhs] = expectations(fg, p, |c| {
        let (mut l, mut r) = (0.0, 0.0);
        for &e in &root_edges {
            let (cs, k) = clusters_at(c, e);
            if k == 2 {
                l += green_both(h, c.touched[cs[0]], c.touched[cs[1]], c.shared(cs[0], cs[1]));
            }
            for &ck in &cs[..k] {
                r += green(h, c.touched[ck]) * c.h_p(ck, p) / c.touched[ck] as f64;
            }
        }
        [l / d, r / (p * d)]
    })?;
    Ok(Gap::new(lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case")]
pub enum Transport {
    /// F(u, v) = 1(u ~ v).
    Adjacency,
    /// F(u, v) = dist(u, v).
    Distance,
    /// Oriented-edge transport
    /// F(e1, e2) = E Σ{[1(ω(e1)=0) - ((1-p)/p) 1(ω(e1)=1)] / (2|E(K)|) :
    ///               K touching e1, e2 and green}.
    Percolation { p: f64, h: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtpSums {
    pub sum_out: f64,
    pub sum_in: f64,
}

/// Mass sent from and received at vertex 0 (for the edge transport: from
/// and at a uniform oriented edge leaving vertex 0).
pub fn verify_mtp(fg: &FiniteGraph, transport: Transport) -> Result<MtpSums> {
    let d = require_transitive(fg)?;
    match transport {
        Transport::Adjacency => {
            let out = (0..fg.n as u32).filter(|v| fg.adj[0].binary_search(v).is_ok()).count();
            let inn = (0..fg.n).filter(|&v| fg.adj[v].binary_search(&0).is_ok()).count();
            Ok(MtpSums { sum_out: out as f64, sum_in: inn as f64 })
        }
        Transport::Distance => {
            let out: u64 = fg.distances(0).iter().map(|&x| x as u64).sum();
            let inn: u64 = (0..fg.n as u32).map(|v| fg.distances(v)[0] as u64).sum();
            Ok(MtpSums { sum_out: out as f64, sum_in: inn as f64 })
        }
        Transport::Percolation { p, h } => {
            check_open_p(p)?;
            check_h(h)?;
            let ratio = (1.0 - p) / p;
            let root_edges = fg.incident[0].clone();
            let m = fg.edges.len();
            let [out, inn] = expectations(fg, p, |c| {
                let x = |e: usize| if c.is_open(e) { -ratio } else { 1.0 };
                let (mut out, mut inn) = (0.0, 0.0);
                for &eta in &root_edges {
                    let (cs, k) = clusters_at(c, eta);
                    for &ck in &cs[..k] {
                        let w = green(h, c.touched[ck]) / (2.0 * c.touched[ck] as f64);
                        // oriented edges touching K, two per unoriented edge
                        for e in 0..m {
                            let (a, b) = c.fg.edges[e];
                            if c.cluster_of(a) == ck || c.cluster_of(b) == ck {
                                out += 2.0 * w * x(eta);
                                inn += 2.0 * w * x(e);
                            }
                        }
                    }
                }
                [out / d as f64, inn / d as f64]
            })?;
            Ok(MtpSums { sum_out: out, sum_in: inn })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryExact {
    pub p_a: f64,
    /// P(A_n(u, v) and no B_{n,i}).
    pub p_violation: f64,
    pub path_len: usize,
}

/// Exact check of A_n(u, v) ⊆ ∪_i B_{n,i} along the geodesic from u to v,
/// where ω^i forces the first i geodesic edges open and B_{n,i} asks for
/// u, v distinct with both clusters touching ≥ n edges under ω^{i-1} and
/// joined under ω^i.
pub fn exact_surgery(fg: &FiniteGraph, u: u32, v: u32, n: u32, p: f64) -> Result<SurgeryExact> {
    check_vertex(fg, u)?;
    check_vertex(fg, v)?;
    if u == v {
        return Err(PercError::Config("u and v must differ".into()));
    }
    let path = fg.geodesic_edges(u, v)?;
    let [p_a, p_violation] = expectations(fg, p, |c| {
        let big_apart = |c: &Config| {
            let (cu, cv) = (c.cluster_of(u), c.cluster_of(v));
            cu != cv && c.touched[cu] >= n && c.touched[cv] >= n
        };
        if !big_apart(c) {
            return [0.0, 0.0];
        }
        let mut forced = c.mask;
        let mut prev = Config::new(c.fg);
        let mut next = Config::new(c.fg);
        prev.load(forced);
        for &e in &path {
            forced |= 1 << e;
            next.load(forced);
            if big_apart(&prev) && next.cluster_of(u) == next.cluster_of(v) {
                return [1.0, 0.0];
            }
            std::mem::swap(&mut prev, &mut next);
        }
        [1.0, 1.0]
    })?;
    Ok(SurgeryExact { p_a, p_violation, path_len: path.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainedReport {
    pub p: f64,
    pub n: u32,
    pub k: u32,
    /// P(|E(K_0)| ≥ n).
    pub tail: f64,
    /// min over 1 ≤ dist(0, w) ≤ k of P(0 ↔ w).
    pub kappa: f64,
    /// max over edges of P(S_{e,n}).
    pub q_sup: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// p^k [P(n)^2 - κ(k)] ≤ (p/(1-p)) sup_e P(S_{e,n}).
pub fn chained_inequality(fg: &FiniteGraph, p: f64, n: u32, k: u32) -> Result<ChainedReport> {
    check_open_p(p)?;
    let dist0 = fg.distances(0);
    let targets: Vec<usize> = (0..fg.n).filter(|&w| dist0[w] >= 1 && dist0[w] <= k).collect();
    if targets.is_empty() {
        return Err(PercError::Config("no vertices within distance k".into()));
    }
    let m = fg.edges.len();
    let nt = targets.len();
    let vals = expectations_vec(fg, p, 1 + nt + m, |c, out| {
        let c0 = c.cluster_of(0);
        out[0] = if c.touched[c0] >= n { 1.0 } else { 0.0 };
        for (i, &w) in targets.iter().enumerate() {
            if c.comp[w] as usize == c0 {
                out[1 + i] = 1.0;
            }
        }
        for e in 0..m {
            out[1 + nt + e] = event_weight(c, &ExactEvent::S { edge: e, n }, &dist0);
        }
    })?;
    let tail = vals[0];
    let kappa = vals[1..1 + nt].iter().cloned().fold(f64::INFINITY, f64::min);
    let q_sup = vals[1 + nt..].iter().cloned().fold(0.0, f64::max);
    let lhs = p.powi(k as i32) * (tail * tail - kappa);
    let rhs = p / (1.0 - p) * q_sup;
    Ok(ChainedReport { p, n, k, tail, kappa, q_sup, lhs, rhs, holds: lhs <= rhs + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: u32) -> FiniteGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        FiniteGraph::new(n as usize, &edges).unwrap()
    }

    fn complete(n: u32) -> FiniteGraph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        FiniteGraph::new(n as usize, &edges).unwrap()
    }

    #[test]
    fn hand_computed_values() {
        for p in [0.2, 0.5, 0.9] {
            let d = exact_event(&cycle(4), &ExactEvent::D { edge: 0 }, p).unwrap();
            assert!((d.value - (1.0 - p) * (1.0 - p.powi(3))).abs() < 1e-14);
            assert!((d.value + d.complement - 1.0).abs() < 1e-12);
            // every cluster on a cycle touches at least two edges
            let s = exact_event(&cycle(6), &ExactEvent::S { edge: 2, n: 2 }, p).unwrap();
            assert!((s.value - (1.0 - p) * (1.0 - p.powi(5))).abs() < 1e-14);
            let t = exact_event(&cycle(6), &ExactEvent::Tail { n: 1 }, p).unwrap();
            assert!((t.value - 1.0).abs() < 1e-14);
        }
        let s = exact_event(&complete(4), &ExactEvent::S { edge: 0, n: 2 }, 1.0).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.configurations, 64);
    }

    #[test]
    fn one_arm_on_cycle() {
        // K_0 reaches distance 3 on C6 iff one of the two 3-edge arcs is open
        let p: f64 = 0.4;
        let r = exact_event(&cycle(6), &ExactEvent::OneArm { r: 3 }, p).unwrap();
        let arc = p.powi(3);
        assert!((r.value - (2.0 * arc - arc * arc)).abs() < 1e-14);
    }

    #[test]
    fn ghost_event_limits() {
        let g = cycle(6);
        let big = exact_event(&g, &ExactEvent::T { edge: 0, h: f64::INFINITY }, 0.4).unwrap();
        let d = exact_event(&g, &ExactEvent::D { edge: 0 }, 0.4).unwrap();
        assert!((big.value - d.value).abs() < 1e-14);
        let zero = exact_event(&g, &ExactEvent::T { edge: 0, h: 0.0 }, 0.4).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn identities_small() {
        for g in [cycle(6), complete(4)] {
            for p in [0.3, 0.7] {
                for h in [0.1, 1.0] {
                    assert!(verify_akn_identity(&g, 0, p, h).unwrap().gap < 1e-12);
                    assert!(verify_insertion_tolerance(&g, 1, p, h).unwrap().gap < 1e-12);
                    assert!(verify_lemma_form(&g, p, h).unwrap().gap < 1e-12);
                    let m = verify_mtp(&g, Transport::Percolation { p, h }).unwrap();
                    assert!((m.sum_out - m.sum_in).abs() < 1e-12);
                }
            }
        }
        let z = verify_lemma_form(&cycle(6), 0.5, 0.0).unwrap();
        assert!(z.lhs.abs() < 1e-15 && z.rhs.abs() < 1e-15);
        assert!(verify_akn_identity(&cycle(6), 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mtp_deterministic() {
        let g = cycle(6);
        let a = verify_mtp(&g, Transport::Adjacency).unwrap();
        assert_eq!((a.sum_out, a.sum_in), (2.0, 2.0));
        let d = verify_mtp(&g, Transport::Distance).unwrap();
        assert_eq!(d.sum_out, d.sum_in);
        let path = FiniteGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(verify_mtp(&path, Transport::Adjacency).is_err());
    }

    #[test]
    fn surgery_inclusion_exact() {
        let g = cycle(8);
        for p in [0.3, 0.5] {
            let s = exact_surgery(&g, 0, 4, 2, p).unwrap();
            assert!(s.p_a > 0.0);
            assert_eq!(s.p_violation, 0.0);
            assert_eq!(s.path_len, 4);
        }
    }

    #[test]
    fn chained_holds_on_cycle() {
        for k in 1..=3 {
            let r = chained_inequality(&cycle(6), 0.5, 2, k).unwrap();
            assert!(r.holds, "{r:?}");
            let expect = 0.5f64.powi(k as i32) + 0.5f64.powi(6 - k as i32) - 0.5f64.powi(6);
            assert!((r.kappa - expect).abs() < 1e-12);
        }
    }
}
