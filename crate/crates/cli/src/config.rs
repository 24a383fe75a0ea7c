use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use perclab_core::estimators::PcMethod;
use perclab_core::GraphFamilySpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn parse_graph(s: &str) -> Result<GraphFamilySpec, String> {
    serde_json::from_str(s).map_err(|e| format!("bad graph JSON: {e}"))
}

/// Every flag of an estimate run. A `--config` JSON file uses the same
/// names as keys; flags given on the command line win.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Graph family: hypercubic, torus, slab, tree, tree_times_cycle,
    /// tree_times_line, grandparent, cycle, complete.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Full family spec as JSON, e.g. '{"family":"slab","k":2,"d":3,"L":4}'.
    #[arg(long, value_parser = parse_graph, conflicts_with = "family")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphFamilySpec>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Number of infinite axes of a slab.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    /// Vertex count of a cycle or complete graph.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Ghost-field grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    /// Cluster-size grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
    /// Distance grid for kappa.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<u32>>,
    /// Half-space depth grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labelling_radius: Option<u32>,
    /// Growth rate used by tail and kappa bounds; default: the family's.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gr: Option<f64>,
    /// p_c crossing method: scale-ratio or level.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_vertices: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Draw the seed from OS entropy instead.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub fresh: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Experiment id written to the first CSV column.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig {
            $($f: $top.$f.or($base.$f),)*
            fresh: $top.fresh || $base.fresh,
        }
    };
}

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_BUDGET: u64 = 100_000;

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())).into())
    }

    /// `self` overridden by every field set in `top`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; family, graph, degree, d, k, l, b, vertices, lengths, p, h, n, k_grid, radii, t,
            horizon, radius, labelling_radius, gr, method, theta_star, trials, budget, max_vertices, seed,
            workers, out, format, id)
    }

    pub fn graph_spec(&self) -> anyhow::Result<GraphFamilySpec> {
        if let Some(g) = &self.graph {
            return Ok(g.clone());
        }
        let Some(family) = &self.family else {
            return Err(ConfigError("no graph given: use --family or --graph".into()).into());
        };
        let mut obj = serde_json::Map::new();
        obj.insert("family".into(), family.as_str().into());
        let mut put = |k: &str, v: Option<serde_json::Value>| {
            if let Some(v) = v {
                obj.insert(k.into(), v);
            }
        };
        put("degree", self.degree.map(Into::into));
        put("d", self.d.map(Into::into));
        put("k", self.k.map(Into::into));
        put("L", self.l.map(Into::into));
        put("b", self.b.map(Into::into));
        put("n", self.vertices.map(Into::into));
        put("lengths", self.lengths.clone().map(Into::into));
        serde_json::from_value(obj.into()).map_err(|e| ConfigError(format!("family {family}: {e}")).into())
    }

    pub fn p(&self) -> anyhow::Result<f64> {
        match self.p {
            Some(p) if (0.0..=1.0).contains(&p) => Ok(p),
            Some(p) => Err(ConfigError(format!("--p must lie in [0, 1], got {p}")).into()),
            None => Err(ConfigError("--p is required".into()).into()),
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    pub fn max_vertices(&self) -> usize {
        self.max_vertices.unwrap_or(perclab_core::experiments::DEFAULT_MAX_VERTICES)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn method(&self) -> anyhow::Result<PcMethod> {
        match (self.method.as_deref(), self.theta_star) {
            (None | Some("scale-ratio"), None) => Ok(PcMethod::ScaleRatio),
            (None | Some("level"), Some(theta_star)) => Ok(PcMethod::Level { theta_star }),
            (Some("level"), None) => Ok(PcMethod::Level { theta_star: 0.5 }),
            (Some(m), _) => Err(ConfigError(format!("unknown method {m:?} (or --theta-star without level)")).into()),
        }
    }
}

pub fn required<'a, T>(v: &'a Option<Vec<T>>, flag: &str) -> anyhow::Result<&'a [T]> {
    match v {
        Some(v) if !v.is_empty() => Ok(v),
        _ => bail!(ConfigError(format!("--{flag} is required"))),
    }
}

/// A user input problem (exit code 1).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"family":"tree","degree":3,"p":0.4,"n":[4,8],"seed":9}"#).unwrap();
        let flags = RunConfig { p: Some(0.3), ..Default::default() };
        let c = file.overlay(flags);
        assert_eq!(c.p, Some(0.3));
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.n, Some(vec![4, 8]));
        assert_eq!(c.graph_spec().unwrap(), GraphFamilySpec::RegularTree { degree: 3 });
    }

    #[test]
    fn family_flags_build_spec() {
        let c = RunConfig { family: Some("slab".into()), k: Some(2), d: Some(3), l: Some(4), ..Default::default() };
        assert_eq!(c.graph_spec().unwrap(), GraphFamilySpec::Slab { k: 2, d: 3, l: 4 });
        let c = RunConfig { family: Some("tree".into()), ..Default::default() };
        assert!(c.graph_spec().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"tirals":5}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let c = RunConfig { family: Some("tree".into()), degree: Some(4), n: Some(vec![4, 16]), ..Default::default() };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"family":"tree","degree":4,"n":[4,16]}"#);
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }
}
