use crate::config::{required, ConfigError, Format, RunConfig};
use crate::{Quantity, VerifyFailed};
use clap::ValueEnum;
use anyhow::Context;
use perclab_core::bounds::{kappa_bound, tail_bound, two_arm_rhs, two_ghost_rhs, TAG_HALFSPACE, TAG_KAPPA, TAG_TAIL_RAW, TAG_TWO_ARM, TAG_TWO_GHOST};
use perclab_core::estimators::{
    ghost_curve, kappa_estimate, martingale_check, one_arm, pc_bisection, tail_curve, two_arm_curve,
};
use perclab_core::experiments::{pc_row, run_experiment, ExperimentSpec};
use perclab_core::nonunimodular::{alpha_decay_estimate, classify_unimodular, estimate_modular, write_labelling_csv};
use perclab_core::oracle::{golden, run_golden};
use perclab_core::output::{rows_from_curve, write_csv, CsvRow};
use perclab_core::GraphHandle;
use std::hash::BuildHasher;
use std::io::Write;
use std::path::{Path, PathBuf};

const TAG_DOOB: &str = "doob";

fn init_workers(requested: Option<usize>) -> anyhow::Result<()> {
    let env = match std::env::var("PERCLAB_WORKERS") {
        Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| ConfigError(format!("PERCLAB_WORKERS={s:?} is not a count")))?),
        Err(_) => None,
    };
    let n = env.or(requested).unwrap_or(0);
    // A second call in one process fails harmlessly; the pool is fixed by then.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            Ok(so.flush()?)
        }
    }
}

fn csv_bytes(config_json: &str, rows: &[CsvRow]) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, config_json, rows)?;
    Ok(buf)
}

pub fn estimate(quantity: Quantity, config: Option<&Path>, flags: RunConfig) -> anyhow::Result<()> {
    let base = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.overlay(flags);
    if cfg.fresh {
        let seed = std::collections::hash_map::RandomState::new().hash_one(std::time::SystemTime::now());
        eprintln!("perclab: fresh seed {seed}");
        cfg.seed = Some(seed);
        cfg.fresh = false;
    }
    init_workers(cfg.workers)?;
    let spec = cfg.graph_spec()?;
    let handle = GraphHandle::new(spec.clone())?;
    let (trials, budget, seed) = (cfg.trials(), cfg.budget(), cfg.seed());
    let format = cfg.format.unwrap_or_default();
    let id = cfg.id.clone().unwrap_or_else(|| quantity.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default());
    let d = handle.degree() as f64;
    let et = handle.is_edge_transitive();
    let gr = cfg.gr.or_else(|| handle.analytic_growth());
    // Drop output-only keys so the header depends on what was computed.
    let header = {
        let mut c = cfg.clone();
        c.out = None;
        c.workers = None;
        c.seed = Some(seed);
        serde_json::to_string(&c)?
    };

    let (rows, json): (Vec<CsvRow>, serde_json::Value) = match quantity {
        Quantity::Tail => {
            let p = cfg.p()?;
            let grid = required(&cfg.n, "n")?;
            let curve = tail_curve(&handle, p, grid, trials, budget, seed)?;
            let bound: Option<Vec<f64>> = gr.and_then(|g| grid.iter().map(|&n| tail_bound(d, g, p, n as f64).map(|b| b.0).ok()).collect());
            let rows = rows_from_curve(&id, &curve, bound.as_deref().map(|b| (b, TAG_TAIL_RAW)));
            (rows, serde_json::to_value(&curve)?)
        }
        Quantity::TwoArm => {
            let p = cfg.p()?;
            let grid = required(&cfg.n, "n")?;
            let rep = two_arm_curve(&handle, p, grid, trials, budget, seed)?;
            let bound: Option<Vec<f64>> = grid.iter().map(|&n| two_arm_rhs(d, p, n as f64, et).ok()).collect();
            let rows = rows_from_curve(&id, &rep.max, bound.as_deref().map(|b| (b, TAG_TWO_ARM)));
            (rows, serde_json::to_value(&rep)?)
        }
        Quantity::Ghost => {
            let p = cfg.p()?;
            let grid = required(&cfg.h, "h")?;
            let rep = ghost_curve(&handle, p, grid, trials, budget, seed)?;
            let mut rows = Vec::new();
            for (&h, e) in grid.iter().zip(&rep.max.points) {
                let m = &rep.max.meta;
                let row = CsvRow::from_estimate(&id, &m.family, &m.params, p, Some(h), h, e, budget, seed);
                rows.push(match two_ghost_rhs(d, p, h, et) {
                    Ok(b) => row.with_bound(b, TAG_TWO_GHOST),
                    Err(_) => row,
                });
            }
            (rows, serde_json::to_value(&rep)?)
        }
        Quantity::Kappa => {
            let p = cfg.p()?;
            let grid = required(&cfg.k_grid, "k-grid")?;
            let mut rows = Vec::new();
            let mut reps = Vec::new();
            for &k in grid {
                let rep = kappa_estimate(&handle, p, k, trials, budget, seed)?;
                let row = CsvRow::from_estimate(&id, &spec.family_name(), &spec.params(), p, None, k as f64, &rep.min, budget, seed);
                rows.push(match gr {
                    Some(g) => row.with_bound(kappa_bound(g, k), TAG_KAPPA),
                    None => row,
                });
                reps.push(rep);
            }
            (rows, serde_json::to_value(&reps)?)
        }
        Quantity::OneArm => {
            let p = cfg.p()?;
            let radii = required(&cfg.radii, "radii")?;
            let mut rows = Vec::new();
            for &r in radii {
                let e = one_arm(&handle, p, r, trials, cfg.max_vertices(), seed)?;
                rows.push(CsvRow::from_estimate(&id, &spec.family_name(), &spec.params(), p, None, r as f64, &e, cfg.max_vertices() as u64, seed));
            }
            let json = serde_json::to_value(&rows)?;
            (rows, json)
        }
        Quantity::Pc => {
            let radii = required(&cfg.radii, "radii")?;
            let est = pc_bisection(&handle, radii, cfg.method()?, trials, seed, cfg.max_vertices())?;
            let rows = radii
                .iter()
                .zip(est.crossings.iter().zip(&est.std_errs))
                .filter_map(|(&r, (c, s))| {
                    let se = s.filter(|s| s.is_finite()).unwrap_or(0.0);
                    c.map(|c| pc_row(&id, &spec, r as f64, c, se, trials, cfg.max_vertices() as u64, seed))
                })
                .collect();
            eprintln!("perclab: p_c estimate {:.5} ± {:.5}", est.final_estimate, est.final_std_err);
            (rows, serde_json::to_value(&est)?)
        }
        Quantity::Halfspace => {
            let p = cfg.p()?;
            let t = required(&cfg.t, "t")?;
            let radius = cfg.radius.ok_or_else(|| ConfigError("--radius is required".into()))?;
            let lab = estimate_modular(&handle, cfg.labelling_radius.unwrap_or(2))?;
            let rep = alpha_decay_estimate(&handle, &lab, p, t, radius, trials, seed)?;
            let rows = t
                .iter()
                .zip(&rep.points)
                .map(|(&x, e)| {
                    CsvRow::from_estimate(&id, &spec.family_name(), &spec.params(), p, None, x, e, radius as u64, seed)
                        .with_bound((-x).exp(), TAG_HALFSPACE)
                })
                .collect();
            (rows, serde_json::to_value(&rep)?)
        }
        Quantity::Martingale => {
            let p = cfg.p()?;
            let horizons = required(&cfg.horizon, "horizon")?;
            let mut rows = Vec::new();
            let mut reps = Vec::new();
            for &n in horizons {
                let rep = martingale_check(&handle, p, n, trials, seed)?;
                rows.push(
                    CsvRow::from_estimate(&id, &spec.family_name(), &spec.params(), p, None, n as f64, &rep.max_sq, n, seed)
                        .with_bound(rep.doob_bound, TAG_DOOB),
                );
                reps.push(rep);
            }
            (rows, serde_json::to_value(&reps)?)
        }
        Quantity::Modular => {
            let r = cfg.radius.ok_or_else(|| ConfigError("--radius is required".into()))?;
            let lab = estimate_modular(&handle, r)?;
            if format == Format::Csv {
                let mut buf = Vec::new();
                write_labelling_csv(&lab, &mut buf)?;
                return emit(cfg.out.as_deref(), &buf);
            }
            let class = classify_unimodular(&handle, r)?;
            (Vec::new(), serde_json::json!({ "labelling": lab, "classification": class }))
        }
    };

    let bytes = match format {
        Format::Csv => csv_bytes(&header, &rows)?,
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(&serde_json::json!({
                "config": serde_json::from_str::<serde_json::Value>(&header)?,
                "version": perclab_core::output::VERSION,
                "result": json,
            }))?;
            s.push(b'\n');
            s
        }
    };
    emit(cfg.out.as_deref(), &bytes)
}

pub fn verify_oracle(golden_path: Option<&Path>, workers: Option<usize>) -> anyhow::Result<()> {
    init_workers(workers)?;
    let recs = match golden_path {
        Some(p) => golden::load_golden(p)?,
        None => golden::parse_golden(perclab_core::oracle::DEFAULT_GOLDEN)?,
    };
    let start = std::time::Instant::now();
    let report = run_golden(&recs)?;
    let failed: Vec<&str> = report.outcomes.iter().filter(|o| !o.passed).map(|o| o.id.as_str()).collect();
    let summary = serde_json::json!({
        "experiment_id": "oracle",
        "checks_passed": report.passed,
        "checks_failed": report.failed,
        "failed": failed,
        "wall_time": start.elapsed().as_secs_f64(),
    });
    println!("{summary}");
    if report.all_passed() {
        Ok(())
    } else {
        Err(VerifyFailed(format!("golden checks failed: {}", failed.join(", "))).into())
    }
}

fn load_specs(path: &Path) -> anyhow::Result<Vec<ExperimentSpec>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let items = match value {
        serde_json::Value::Array(v) => v,
        v => vec![v],
    };
    items
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into()))
        .collect()
}

pub fn experiment(spec_path: &Path, out_dir: Option<&Path>, workers: Option<usize>) -> anyhow::Result<()> {
    init_workers(workers)?;
    let specs = load_specs(spec_path)?;
    let mut failed = Vec::new();
    for spec in &specs {
        let result = run_experiment(spec)?;
        let path = match (&spec.output, out_dir) {
            (Some(p), _) => p.clone(),
            (None, Some(d)) => d.join(format!("{}.csv", spec.id)),
            (None, None) => PathBuf::from(format!("{}.csv", spec.id)),
        };
        let header = serde_json::to_string(spec)?;
        emit(Some(&path), &csv_bytes(&header, &result.rows)?)?;
        println!("{}", serde_json::to_string(&result.summary)?);
        for c in result.checks.iter().filter(|c| !c.passed) {
            eprintln!("perclab: {}: check failed: {}", spec.id, c.name);
        }
        if result.summary.checks_failed > 0 {
            failed.push(spec.id.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(VerifyFailed(format!("experiments with failed checks: {}", failed.join(", "))).into())
    }
}
