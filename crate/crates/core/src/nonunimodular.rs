//! Modular function from local orbit counts, unimodularity classification,
//! and half-space connection probabilities.
//!
//! For neighbours o ~ u, Δ(o,u) = |Stab_u o| / |Stab_o u|, where |Stab_o u|
//! is the size of the orbit of u under automorphisms fixing o. Orbits are
//! read off the automorphism group of the radius-r ball, so the values are
//! exact for that ball and converge as r grows.

use crate::error::{PercError, Result};
use crate::estimators::check_trials;
use crate::graphs::canon::canonical_form;
use crate::graphs::{ball, CanonicalCert, GraphHandle, VertexCoord};
use crate::percolation::{EdgeField, PrfField};
use crate::rng::{CounterRng, Stream};
use crate::stats::MCEstimate;
use num_rational::Ratio;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;

pub type Delta = Ratio<u64>;

/// One orbit of oriented edges (o, u) leaving the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeClass {
    pub representative: VertexCoord,
    /// Certificate of the ball around o with o and u marked.
    #[serde(skip)]
    pub cert: CanonicalCert,
    /// |Stab_o u|: neighbours of o in the orbit of u.
    pub orbit_out: u64,
    /// |Stab_u o|: neighbours of u in the orbit of o.
    pub orbit_in: u64,
    pub delta: Delta,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModularLabelling {
    pub radius: u32,
    pub classes: Vec<EdgeClass>,
    /// Same classes and values at radius r - 1.
    pub stabilized: bool,
    #[serde(skip)]
    root_cert: CanonicalCert,
    /// Canonical index (in the root ball) of each neighbour of o -> class.
    #[serde(skip)]
    canon_class: FxHashMap<u32, usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unimodularity {
    Unimodular,
    Nonunimodular,
    Undetermined,
}

/// Neighbour orbits around `v` and the canonical index of each neighbour.
struct LocalView {
    cert: CanonicalCert,
    /// (neighbour, orbit representative index, canonical index)
    neighbours: Vec<(VertexCoord, u32, u32)>,
    orbit_sizes: FxHashMap<u32, u64>,
}

fn local_view(handle: &GraphHandle, v: &VertexCoord, r: u32) -> Result<LocalView> {
    let b = ball(handle, v, r)?;
    let c = canonical_form(&b.colored(&[0]));
    let orbits = c.orbits();
    let mut neighbours = Vec::new();
    let mut orbit_sizes: FxHashMap<u32, u64> = FxHashMap::default();
    for &i in &b.adj[0] {
        let rep = orbits[i as usize];
        *orbit_sizes.entry(rep).or_default() += 1;
        neighbours.push((b.vertices[i as usize].clone(), rep, c.labeling[i as usize]));
    }
    neighbours.sort();
    Ok(LocalView { cert: c.cert, neighbours, orbit_sizes })
}

fn labelling_at(handle: &GraphHandle, r: u32) -> Result<(ModularLabelling, Vec<usize>)> {
    if r < 1 {
        return Err(PercError::Config("radius must be at least 1".into()));
    }
    let o = handle.root().clone();
    let root = local_view(handle, &o, r)?;
    let mut classes: Vec<EdgeClass> = Vec::new();
    let mut rep_class: FxHashMap<u32, usize> = FxHashMap::default();
    let mut canon_class = FxHashMap::default();
    let mut assignment = Vec::new();
    for (u, rep, canon) in &root.neighbours {
        let idx = match rep_class.get(rep) {
            Some(&i) => i,
            None => {
                let back = local_view(handle, u, r)?;
                if back.cert != root.cert {
                    return Err(PercError::Verification(format!("ball around {u} differs from the root ball")));
                }
                let (_, orep, _) = back
                    .neighbours
                    .iter()
                    .find(|(w, _, _)| *w == o)
                    .ok_or_else(|| PercError::Verification("adjacency is not symmetric".into()))?;
                let orbit_out = root.orbit_sizes[rep];
                let orbit_in = back.orbit_sizes[orep];
                let b = ball(handle, &o, r)?;
                let ui = b.index_of(u).expect("neighbour in ball");
                let cert = canonical_form(&b.colored(&[0, ui])).cert;
                classes.push(EdgeClass {
                    representative: u.clone(),
                    cert,
                    orbit_out,
                    orbit_in,
                    delta: Ratio::new(orbit_in, orbit_out),
                });
                rep_class.insert(*rep, classes.len() - 1);
                classes.len() - 1
            }
        };
        canon_class.insert(*canon, idx);
        assignment.push(idx);
    }
    Ok((ModularLabelling { radius: r, classes, stabilized: false, root_cert: root.cert, canon_class }, assignment))
}

/// Modular labelling of the root edges from radius-r balls.
pub fn estimate_modular(handle: &GraphHandle, r: u32) -> Result<ModularLabelling> {
    if !handle.is_transitive() {
        return Err(PercError::Config(format!("{} is not vertex-transitive", handle.spec().label())));
    }
    let (mut lab, assign) = labelling_at(handle, r)?;
    if r >= 2 {
        let (prev, prev_assign) = labelling_at(handle, r - 1)?;
        // same partition of the neighbours and the same value on each part
        let mut pairs = FxHashMap::default();
        let mut same = true;
        for (&a, &b) in assign.iter().zip(&prev_assign) {
            if *pairs.entry(a).or_insert(b) != b || lab.classes[a].delta != prev.classes[b].delta {
                same = false;
            }
        }
        lab.stabilized = same && lab.classes.len() == prev.classes.len();
    }
    Ok(lab)
}

pub fn classify_unimodular(handle: &GraphHandle, r: u32) -> Result<Unimodularity> {
    let lab = estimate_modular(handle, r)?;
    Ok(if !lab.stabilized {
        Unimodularity::Undetermined
    } else if lab.classes.iter().all(|c| c.delta == Ratio::from_integer(1)) {
        Unimodularity::Unimodular
    } else {
        Unimodularity::Nonunimodular
    })
}

/// Δ on arbitrary edges, by matching the ball around each vertex with the
/// root ball. Results are cached per vertex.
pub struct DeltaOracle<'a> {
    handle: &'a GraphHandle,
    labelling: &'a ModularLabelling,
    cache: FxHashMap<VertexCoord, Vec<(VertexCoord, Delta)>>,
}

impl<'a> DeltaOracle<'a> {
    pub fn new(handle: &'a GraphHandle, labelling: &'a ModularLabelling) -> Self {
        DeltaOracle { handle, labelling, cache: FxHashMap::default() }
    }

    /// (neighbour, Δ(v, neighbour)) for every neighbour of v, sorted.
    pub fn edges_at(&mut self, v: &VertexCoord) -> Result<&[(VertexCoord, Delta)]> {
        if !self.cache.contains_key(v) {
            let view = local_view(self.handle, v, self.labelling.radius)?;
            if view.cert != self.labelling.root_cert {
                return Err(PercError::Verification(format!("ball around {v} differs from the root ball")));
            }
            let mut out = Vec::with_capacity(view.neighbours.len());
            for (w, _, canon) in view.neighbours {
                let class = self.labelling.canon_class[&canon];
                out.push((w, self.labelling.classes[class].delta));
            }
            self.cache.insert(v.clone(), out);
        }
        Ok(&self.cache[v])
    }

    pub fn delta(&mut self, u: &VertexCoord, v: &VertexCoord) -> Result<Delta> {
        let edges = self.edges_at(u)?;
        match edges.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => Ok(edges[i].1),
            Err(_) => Err(PercError::Path(format!("{u} and {v} are not adjacent"))),
        }
    }

    /// Product of Δ along consecutive vertices.
    pub fn delta_along_path(&mut self, path: &[VertexCoord]) -> Result<Delta> {
        let mut acc = Ratio::from_integer(1u64);
        for w in path.windows(2) {
            acc *= self.delta(&w[0], &w[1])?;
        }
        Ok(acc)
    }
}

pub fn log_delta(d: Delta) -> f64 {
    (*d.numer() as f64).ln() - (*d.denom() as f64).ln()
}

/// Closed walks built from a random walk out of the root and a BFS path
/// back; returns the product of Δ around each.
pub fn cocycle_probes(oracle: &mut DeltaOracle<'_>, walks: usize, len: usize, seed: u64) -> Result<Vec<Delta>> {
    let handle = oracle.handle;
    let mut out = Vec::with_capacity(walks);
    for w in 0..walks {
        let mut rng = CounterRng::new(seed, w as u64, Stream::Walk);
        let mut path = vec![handle.root().clone()];
        let mut nb = Vec::new();
        for _ in 0..len {
            handle.neighbors_into(path.last().expect("nonempty"), &mut nb);
            nb.sort();
            path.push(nb[rng.below(nb.len())].clone());
        }
        let back = crate::percolation::geodesic(handle, path.last().expect("nonempty"), handle.root(), 1_000_000)?;
        path.extend(back.into_iter().skip(1));
        out.push(oracle.delta_along_path(&path)?);
    }
    Ok(out)
}

/// CSV dump: edge certificate (hex), Δ numerator, Δ denominator, radius,
/// stabilized.
pub fn write_labelling_csv<W: Write>(lab: &ModularLabelling, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge_certificate", "delta_num", "delta_den", "radius", "stabilized"])?;
    for c in &lab.classes {
        let hex: String = c.cert.0.iter().map(|b| format!("{b:02x}")).collect();
        w.write_record([
            hex,
            c.delta.numer().to_string(),
            c.delta.denom().to_string(),
            lab.radius.to_string(),
            lab.stabilized.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceReport {
    pub t_grid: Vec<f64>,
    /// Â_p(t, r) per t.
    pub points: Vec<MCEstimate>,
    /// -log Â_p(t, r) / t where defined.
    pub alpha: Vec<Option<f64>>,
    /// α̂ at the largest t with at least `MIN_HITS` successes.
    pub terminal: f64,
    pub terminal_t: f64,
    /// Â(t+s) ≥ Â(t)Â(s) on grid triples, up to 2σ.
    pub supermultiplicative: bool,
    pub p: f64,
    pub radius: u32,
    pub trials: u64,
}

const MIN_HITS: u64 = 10;

/// Largest log Δ(o, v) over vertices v reached from o by open paths inside
/// H_0 ∩ B(o, r).
fn halfspace_reach<F: EdgeField>(oracle: &mut DeltaOracle<'_>, field: &F, p: f64, r: u32) -> Result<f64> {
    let handle = oracle.handle;
    let o = handle.root().clone();
    let mut level: FxHashMap<VertexCoord, Delta> = FxHashMap::default();
    level.insert(o.clone(), Ratio::from_integer(1));
    let mut seen: FxHashSet<VertexCoord> = FxHashSet::default();
    seen.insert(o.clone());
    let mut queue = VecDeque::from([o]);
    let mut best = 0.0f64;
    let one = Ratio::from_integer(1u64);
    while let Some(x) = queue.pop_front() {
        let lx = level[&x];
        let edges = oracle.edges_at(&x)?.to_vec();
        for (y, d) in edges {
            if seen.contains(&y) || handle.distance_from_root(&y) > r as u64 || field.uniform(&x, &y) >= p {
                continue;
            }
            let ly = lx * d;
            if ly < one {
                continue;
            }
            best = best.max(log_delta(ly));
            seen.insert(y.clone());
            level.insert(y.clone(), ly);
            queue.push_back(y);
        }
    }
    Ok(best)
}

/// Â_p(t, r) = P(o joined to H_t by an open path in H_0 ∩ B(o, r)) on a
/// grid of t, and the decay rate α̂ = -log Â / t.
#[allow(clippy::too_many_arguments)]
pub fn alpha_decay_estimate(
    handle: &GraphHandle,
    labelling: &ModularLabelling,
    p: f64,
    t_grid: &[f64],
    r: u32,
    trials: u64,
    seed: u64,
) -> Result<HalfspaceReport> {
    check_trials(trials)?;
    crate::estimators::check_grid(t_grid, "t")?;
    if t_grid[0] < 0.0 {
        return Err(PercError::Config("t must be nonnegative".into()));
    }
    let reach: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || DeltaOracle::new(handle, labelling),
            |or, t| halfspace_reach(or, &PrfField { seed, trial: t }, p, r),
        )
        .collect::<Result<_>>()?;
    // tolerance for log sums of integers
    let hits: Vec<u64> = t_grid.iter().map(|&t| reach.iter().filter(|&&m| m >= t - 1e-9).count() as u64).collect();
    let points: Vec<MCEstimate> = hits.iter().map(|&k| MCEstimate::binomial(k, trials)).collect();
    let alpha: Vec<Option<f64>> = t_grid
        .iter()
        .zip(&points)
        .map(|(&t, e)| (t > 0.0 && e.estimate > 0.0).then(|| -e.estimate.ln() / t))
        .collect();
    let Some(i) = (0..t_grid.len()).rev().find(|&i| t_grid[i] > 0.0 && hits[i] >= MIN_HITS) else {
        return Err(PercError::InsufficientData("no positive t reached often enough".into()));
    };
    let find = |x: f64| t_grid.iter().position(|&t| (t - x).abs() < 1e-9);
    let mut supermultiplicative = true;
    for (a, &ta) in t_grid.iter().enumerate() {
        for (b, &tb) in t_grid.iter().enumerate().skip(a) {
            if let Some(c) = find(ta + tb) {
                let (pa, pb, pc) = (&points[a], &points[b], &points[c]);
                let slack = 2.0 * (pc.sigma() + pa.sigma() + pb.sigma());
                if pc.estimate + slack < pa.estimate * pb.estimate {
                    supermultiplicative = false;
                }
            }
        }
    }
    Ok(HalfspaceReport {
        t_grid: t_grid.to_vec(),
        terminal: alpha[i].expect("positive estimate"),
        terminal_t: t_grid[i],
        points,
        alpha,
        supermultiplicative,
        p,
        radius: r,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphFamilySpec::*;

    fn r(a: u64, b: u64) -> Delta {
        Ratio::new(a, b)
    }

    #[test]
    fn unimodular_families() {
        for spec in [Hypercubic { d: 2 }, RegularTree { degree: 3 }, TreeTimesLine { degree: 3 }, Torus { lengths: vec![5, 5] }] {
            let g = GraphHandle::new(spec).unwrap();
            assert_eq!(classify_unimodular(&g, 3).unwrap(), Unimodularity::Unimodular, "{}", g.spec().label());
        }
    }

    #[test]
    fn grandparent_values() {
        let g = GraphHandle::new(Grandparent { b: 2 }).unwrap();
        let lab = estimate_modular(&g, 3).unwrap();
        assert!(lab.stabilized);
        let mut oracle = DeltaOracle::new(&g, &lab);
        let o = g.root().clone();
        let lo = g.grandparent_level(&o).unwrap();
        // level differences: parent +1, grandparent +2, children -1, grandchildren -2
        for (w, d) in oracle.edges_at(&o).unwrap().to_vec() {
            let up = g.grandparent_level(&w).unwrap() - lo;
            let expect = match up {
                1 => r(2, 1),
                2 => r(4, 1),
                -1 => r(1, 2),
                -2 => r(1, 4),
                _ => panic!("unexpected level step {up}"),
            };
            assert_eq!(d, expect);
            assert_eq!(oracle.delta(&w, &o).unwrap() * d, r(1, 1));
        }
        assert_eq!(classify_unimodular(&g, 1).unwrap(), Unimodularity::Undetermined);
    }

    #[test]
    fn cocycle_and_paths() {
        let g = GraphHandle::new(Grandparent { b: 2 }).unwrap();
        let lab = estimate_modular(&g, 2).unwrap();
        let mut oracle = DeltaOracle::new(&g, &lab);
        assert_eq!(oracle.delta_along_path(&[]).unwrap(), r(1, 1));
        for d in cocycle_probes(&mut oracle, 20, 6, 1).unwrap() {
            assert_eq!(d, r(1, 1));
        }
        let far = VertexCoord::from_ints(&[5]);
        assert!(matches!(oracle.delta_along_path(&[g.root().clone(), far]), Err(PercError::Path(_))));
    }

    #[test]
    fn labelling_dump() {
        let g = GraphHandle::new(Grandparent { b: 2 }).unwrap();
        let lab = estimate_modular(&g, 2).unwrap();
        let mut buf = Vec::new();
        write_labelling_csv(&lab, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("edge_certificate,delta_num,delta_den,radius,stabilized\n"));
        assert_eq!(text.lines().count(), 1 + lab.classes.len());
    }

    #[test]
    fn halfspace_limits_and_monotonicity() {
        let g = GraphHandle::new(Grandparent { b: 2 }).unwrap();
        let lab = estimate_modular(&g, 2).unwrap();
        let ln2 = 2f64.ln();
        let ts = [ln2, 2.0 * ln2, 3.0 * ln2];
        let full = alpha_decay_estimate(&g, &lab, 1.0, &ts, 4, 20, 0).unwrap();
        assert!(full.points.iter().all(|e| e.estimate == 1.0));
        assert_eq!(full.terminal, 0.0);
        assert!(matches!(alpha_decay_estimate(&g, &lab, 0.0, &ts, 4, 20, 0), Err(PercError::InsufficientData(_))));
        let lo = alpha_decay_estimate(&g, &lab, 0.15, &ts, 4, 400, 1).unwrap();
        let hi = alpha_decay_estimate(&g, &lab, 0.25, &ts, 4, 400, 1).unwrap();
        let wide = alpha_decay_estimate(&g, &lab, 0.25, &ts, 6, 400, 1).unwrap();
        for i in 0..ts.len() {
            assert!(lo.points[i].estimate <= hi.points[i].estimate);
            assert!(hi.points[i].estimate <= wide.points[i].estimate);
        }
        assert!(hi.points.windows(2).all(|w| w[1].estimate <= w[0].estimate));
    }
}
