//! End-to-end studies driven by a JSON spec: p_c along converging graph
//! sequences, measured curves against their bounds, half-space decay and
//! the exact golden suite.

use crate::bounds::{
    kappa_bound, rate_bound, tail_bound, two_arm_rhs, TAG_HALFSPACE, TAG_KAPPA, TAG_RATE_RAW, TAG_TAIL_RAW,
    TAG_TAIL_SIMPLIFIED, TAG_TWO_ARM,
};
use crate::error::{PercError, Result};
use crate::estimators::{kappa_estimate, pc_bisection, tail_curve, two_arm_curve, PcEstimate, PcMethod};
use crate::graphs::{growth_upper, matching_radius, GraphFamilySpec, GraphHandle};
use crate::nonunimodular::{alpha_decay_estimate, estimate_modular, HalfspaceReport};
use crate::oracle::{golden, run_golden, SuiteReport};
use crate::output::CsvRow;
use crate::stats::{MCEstimate, Z95};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

pub const DEFAULT_MAX_VERTICES: usize = 2_000_000;

fn default_radii() -> Vec<u32> {
    vec![8, 16, 32]
}

fn default_r_max() -> u32 {
    12
}

fn default_max_vertices() -> usize {
    DEFAULT_MAX_VERTICES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    LocalitySequence {
        sequence: Vec<GraphFamilySpec>,
        limit: GraphFamilySpec,
        #[serde(default = "default_radii")]
        radii: Vec<u32>,
        #[serde(default)]
        method: PcMethod,
        #[serde(default = "default_r_max")]
        matching_r_max: u32,
        #[serde(default = "default_max_vertices")]
        max_vertices: usize,
        /// Degree and growth fed to the rate bound; default: the limit's.
        #[serde(default)]
        rate_d: Option<f64>,
        #[serde(default)]
        rate_gr: Option<f64>,
    },
    TailVsBound {
        graph: GraphFamilySpec,
        p: f64,
        n_grid: Vec<u64>,
        #[serde(default)]
        gr: Option<f64>,
    },
    TwoArmVsBound {
        graph: GraphFamilySpec,
        p: f64,
        n_grid: Vec<u64>,
    },
    KappaVsBound {
        graph: GraphFamilySpec,
        p: f64,
        k_grid: Vec<u32>,
        #[serde(default)]
        gr: Option<f64>,
    },
    HalfspaceDecay {
        graph: GraphFamilySpec,
        /// Either p or a multiple of the estimated p_c.
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        p_factor: Option<f64>,
        #[serde(default = "default_radii")]
        pc_radii: Vec<u32>,
        t_grid: Vec<f64>,
        radius: u32,
        labelling_radius: u32,
    },
    OracleSuite {
        #[serde(default)]
        golden: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_trials() -> u64 {
    10_000
}

fn default_budget() -> u64 {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment_id: String,
    pub checks_passed: usize,
    pub checks_failed: usize,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<CsvRow>,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    pub summary: ExperimentSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityRow {
    pub graph: GraphFamilySpec,
    pub matching_radius: u32,
    pub pc: f64,
    pub pc_std_err: f64,
    pub gap: f64,
    pub gap_std_err: f64,
    pub rate_raw: Option<f64>,
    pub rate_simplified: Option<f64>,
    pub lower_semicontinuous: bool,
    pub within_rate: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityTable {
    pub limit: GraphFamilySpec,
    pub limit_pc: f64,
    pub limit_std_err: f64,
    pub rows: Vec<LocalityRow>,
    /// Gaps nonincreasing along the sequence up to 2σ.
    pub gaps_decreasing: bool,
    /// p̂_c strictly decreasing along the sequence beyond 2σ.
    pub pc_strictly_decreasing: bool,
}

fn pc_of(handle: &GraphHandle, radii: &[u32], method: PcMethod, trials: u64, seed: u64, max_vertices: usize) -> Result<PcEstimate> {
    pc_bisection(handle, radii, method, trials, seed, max_vertices)
}

fn se(e: &PcEstimate) -> f64 {
    if e.final_std_err.is_finite() {
        e.final_std_err
    } else {
        0.0
    }
}

/// p̂_c along a sequence and at its limit, with matching radii and the
/// locality rate bound.
#[allow(clippy::too_many_arguments)]
pub fn run_locality(
    sequence: &[GraphFamilySpec],
    limit: &GraphFamilySpec,
    radii: &[u32],
    method: PcMethod,
    matching_r_max: u32,
    max_vertices: usize,
    rate_d: Option<f64>,
    rate_gr: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<LocalityTable> {
    if sequence.is_empty() {
        return Err(PercError::Config("empty graph sequence".into()));
    }
    let lim = GraphHandle::new(limit.clone())?;
    let handles = sequence.iter().cloned().map(GraphHandle::new).collect::<Result<Vec<_>>>()?;
    for h in &handles {
        if h.degree() != lim.degree() || h.n_ints() != lim.n_ints() && h.is_finite() {
            return Err(PercError::Config(format!("{} cannot converge to {}", h.spec().label(), lim.spec().label())));
        }
    }
    let radii_matched = handles
        .iter()
        .map(|h| matching_radius(h, &lim, matching_r_max))
        .collect::<Result<Vec<_>>>()?;
    if radii_matched.windows(2).any(|w| w[1] < w[0]) {
        return Err(PercError::Config(format!("matching radii {radii_matched:?} do not increase along the sequence")));
    }
    let lim_est = pc_of(&lim, radii, method, trials, seed, max_vertices)?;
    let d = rate_d.unwrap_or(lim.degree() as f64);
    let gr = rate_gr.or_else(|| lim.analytic_growth()).unwrap_or_else(|| growth_upper(&lim, 8));
    let mut rows = Vec::new();
    for (h, &r) in handles.iter().zip(&radii_matched) {
        let est = pc_of(h, radii, method, trials, seed, max_vertices)?;
        let gap_se = (se(&est).powi(2) + se(&lim_est).powi(2)).sqrt();
        let gap = (est.final_estimate - lim_est.final_estimate).abs();
        let rate = (r >= 1).then(|| rate_bound(d, gr, lim_est.final_estimate, r as f64)).and_then(|x| x.ok());
        rows.push(LocalityRow {
            graph: h.spec().clone(),
            matching_radius: r,
            pc: est.final_estimate,
            pc_std_err: se(&est),
            gap,
            gap_std_err: gap_se,
            rate_raw: rate.map(|x| x.0),
            rate_simplified: rate.map(|x| x.1),
            lower_semicontinuous: est.final_estimate >= lim_est.final_estimate - 2.0 * gap_se,
            within_rate: rate.map(|(raw, _)| gap <= raw + 2.0 * gap_se),
        });
    }
    let gaps_decreasing = rows
        .windows(2)
        .all(|w| w[1].gap <= w[0].gap + 2.0 * (w[0].gap_std_err.powi(2) + w[1].gap_std_err.powi(2)).sqrt());
    let pc_strictly_decreasing = rows
        .windows(2)
        .all(|w| w[1].pc < w[0].pc - 2.0 * (w[0].pc_std_err.powi(2) + w[1].pc_std_err.powi(2)).sqrt());
    Ok(LocalityTable {
        limit: limit.clone(),
        limit_pc: lim_est.final_estimate,
        limit_std_err: se(&lim_est),
        rows,
        gaps_decreasing,
        pc_strictly_decreasing,
    })
}

/// A p_c point estimate as an output row.
pub fn pc_row(id: &str, spec: &GraphFamilySpec, abscissa: f64, pc: f64, std_err: f64, trials: u64, budget: u64, seed: u64) -> CsvRow {
    let e = MCEstimate {
        estimate: pc,
        ci_low: pc - Z95 * std_err,
        ci_high: pc + Z95 * std_err,
        trials,
        censored_frac: 0.0,
        envelope_low: pc,
        envelope_high: pc,
        std_err,
    };
    CsvRow::from_estimate(id, &spec.family_name(), &spec.params(), f64::NAN, None, abscissa, &e, budget, seed)
}

fn satisfied(e: &MCEstimate, rhs: f64) -> bool {
    e.envelope_high <= rhs + 2.0 * e.envelope_sigma()
}

fn check(checks: &mut Vec<Check>, name: String, passed: bool) {
    checks.push(Check { name, passed });
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let start = Instant::now();
    let id = spec.id.as_str();
    let (trials, budget, seed) = (spec.trials, spec.budget, spec.seed);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let details: serde_json::Value = match &spec.kind {
        ExperimentKind::LocalitySequence {
            sequence,
            limit,
            radii,
            method,
            matching_r_max,
            max_vertices,
            rate_d,
            rate_gr,
        } => {
            let t = run_locality(sequence, limit, radii, *method, *matching_r_max, *max_vertices, *rate_d, *rate_gr, trials, seed)?;
            rows.push(pc_row(id, limit, f64::INFINITY, t.limit_pc, t.limit_std_err, trials, *max_vertices as u64, seed));
            for r in &t.rows {
                let row = pc_row(id, &r.graph, r.matching_radius as f64, r.pc, r.pc_std_err, trials, *max_vertices as u64, seed);
                rows.push(match r.rate_raw {
                    Some(b) => row.with_bound(b, TAG_RATE_RAW),
                    None => row,
                });
                let label = r.graph.label();
                check(&mut checks, format!("{label}: lower semicontinuity"), r.lower_semicontinuous);
                if let Some(ok) = r.within_rate {
                    check(&mut checks, format!("{label}: gap within rate bound"), ok);
                }
            }
            check(&mut checks, "gaps decreasing".into(), t.gaps_decreasing);
            serde_json::to_value(&t)?
        }
        ExperimentKind::TailVsBound { graph, p, n_grid, gr } => {
            let h = GraphHandle::new(graph.clone())?;
            let curve = tail_curve(&h, *p, n_grid, trials, budget, seed)?;
            let growth = gr.or_else(|| h.analytic_growth()).unwrap_or(1.0);
            let d = h.degree() as f64;
            for (i, (&n, e)) in n_grid.iter().zip(&curve.points).enumerate() {
                let base = CsvRow::from_estimate(id, &curve.meta.family, &curve.meta.params, *p, None, n as f64, e, budget, seed);
                match tail_bound(d, growth, *p, n as f64) {
                    Ok((raw, simplified)) => {
                        rows.push(base.clone().with_bound(raw, TAG_TAIL_RAW));
                        rows.push(base.with_bound(simplified, TAG_TAIL_SIMPLIFIED));
                        check(&mut checks, format!("n={n}: tail within bound"), satisfied(e, raw.min(simplified)));
                    }
                    Err(_) => rows.push(base),
                }
                let _ = i;
            }
            serde_json::to_value(&curve)?
        }
        ExperimentKind::TwoArmVsBound { graph, p, n_grid } => {
            let h = GraphHandle::new(graph.clone())?;
            let rep = two_arm_curve(&h, *p, n_grid, trials, budget, seed)?;
            let d = h.degree() as f64;
            for (&n, e) in n_grid.iter().zip(&rep.max.points) {
                let rhs = two_arm_rhs(d, *p, n as f64, h.is_edge_transitive())?;
                let m = &rep.max.meta;
                rows.push(CsvRow::from_estimate(id, &m.family, &m.params, *p, None, n as f64, e, budget, seed).with_bound(rhs, TAG_TWO_ARM));
                check(&mut checks, format!("n={n}: two-arm within bound"), satisfied(e, rhs));
            }
            serde_json::to_value(&rep.max)?
        }
        ExperimentKind::KappaVsBound { graph, p, k_grid, gr } => {
            let h = GraphHandle::new(graph.clone())?;
            let growth = gr.or_else(|| h.analytic_growth()).unwrap_or(1.0);
            let mut mins = Vec::new();
            for &k in k_grid {
                let rep = kappa_estimate(&h, *p, k, trials, budget, seed)?;
                let rhs = kappa_bound(growth, k);
                let e = &rep.min;
                rows.push(
                    CsvRow::from_estimate(id, &graph.family_name(), &graph.params(), *p, None, k as f64, e, budget, seed)
                        .with_bound(rhs, TAG_KAPPA),
                );
                check(&mut checks, format!("k={k}: kappa within bound"), e.estimate <= rhs + 2.0 * e.sigma());
                mins.push(e.clone());
            }
            serde_json::to_value(&mins)?
        }
        ExperimentKind::HalfspaceDecay { graph, p, p_factor, pc_radii, t_grid, radius, labelling_radius } => {
            let h = GraphHandle::new(graph.clone())?;
            let (p, pc) = match (p, p_factor) {
                (Some(p), None) => (*p, None),
                (None, Some(f)) => {
                    let est = pc_bisection(&h, pc_radii, PcMethod::ScaleRatio, trials, seed, DEFAULT_MAX_VERTICES)?;
                    (f * est.final_estimate, Some(est.final_estimate))
                }
                _ => return Err(PercError::Config("give exactly one of p and p_factor".into())),
            };
            let lab = estimate_modular(&h, *labelling_radius)?;
            let rep: HalfspaceReport = alpha_decay_estimate(&h, &lab, p, t_grid, *radius, trials, seed)?;
            for (&t, e) in t_grid.iter().zip(&rep.points) {
                let rhs = (-t).exp();
                rows.push(
                    CsvRow::from_estimate(id, &graph.family_name(), &graph.params(), p, None, t, e, budget, seed)
                        .with_bound(rhs, TAG_HALFSPACE),
                );
                if e.ci_high - e.ci_low < 0.1 {
                    check(&mut checks, format!("t={t:.4}: half-space decay below e^-t"), e.estimate <= rhs + 2.0 * e.sigma());
                }
            }
            serde_json::json!({ "pc_estimate": pc, "report": rep })
        }
        ExperimentKind::OracleSuite { golden: path } => {
            let recs = match path {
                Some(p) => golden::load_golden(p)?,
                None => golden::parse_golden(crate::oracle::DEFAULT_GOLDEN)?,
            };
            let report: SuiteReport = run_golden(&recs)?;
            for o in &report.outcomes {
                check(&mut checks, o.id.clone(), o.passed);
            }
            serde_json::to_value(&report)?
        }
    };
    let passed = checks.iter().filter(|c| c.passed).count();
    let summary = ExperimentSummary {
        experiment_id: spec.id.clone(),
        checks_passed: passed,
        checks_failed: checks.len() - passed,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentResult { rows, checks, details, summary })
}
