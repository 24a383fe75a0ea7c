//! Shared CSV schema for every estimate and experiment output.

use crate::error::Result;
use crate::estimators::Curve;
use crate::stats::MCEstimate;
use serde::Serialize;
use std::io::Write;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_COLUMNS: [&str; 17] = [
    "experiment_id",
    "family",
    "params",
    "p",
    "h",
    "abscissa",
    "estimate",
    "ci_low",
    "ci_high",
    "envelope_low",
    "envelope_high",
    "censored_frac",
    "bound_rhs",
    "bound_tag",
    "trials",
    "budget",
    "seed",
];

/// One output row; empty optional fields serialise as empty cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub experiment_id: String,
    pub family: String,
    pub params: String,
    /// NaN when the row has no single p (p_c rows); written as an empty cell.
    #[serde(serialize_with = "nan_as_empty")]
    pub p: f64,
    pub h: Option<f64>,
    pub abscissa: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub envelope_low: f64,
    pub envelope_high: f64,
    pub censored_frac: f64,
    pub bound_rhs: Option<f64>,
    pub bound_tag: Option<String>,
    pub trials: u64,
    pub budget: u64,
    pub seed: u64,
}

fn nan_as_empty<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_nan() {
        s.serialize_none()
    } else {
        s.serialize_f64(*x)
    }
}

impl CsvRow {
    #[allow(clippy::too_many_arguments)]
    pub fn from_estimate(
        experiment_id: &str,
        family: &str,
        params: &str,
        p: f64,
        h: Option<f64>,
        abscissa: f64,
        e: &MCEstimate,
        budget: u64,
        seed: u64,
    ) -> Self {
        CsvRow {
            experiment_id: experiment_id.to_string(),
            family: family.to_string(),
            params: params.to_string(),
            p,
            h,
            abscissa,
            estimate: e.estimate,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            envelope_low: e.envelope_low,
            envelope_high: e.envelope_high,
            censored_frac: e.censored_frac,
            bound_rhs: None,
            bound_tag: None,
            trials: e.trials,
            budget,
            seed,
        }
    }

    pub fn with_bound(mut self, rhs: f64, tag: &str) -> Self {
        self.bound_rhs = Some(rhs);
        self.bound_tag = Some(tag.to_string());
        self
    }
}

/// One row per grid point; `bound` supplies (rhs, tag) per abscissa.
pub fn rows_from_curve(experiment_id: &str, curve: &Curve, bound: Option<(&[f64], &str)>) -> Vec<CsvRow> {
    let m = &curve.meta;
    curve
        .abscissa
        .iter()
        .zip(&curve.points)
        .enumerate()
        .map(|(i, (&x, e))| {
            let row = CsvRow::from_estimate(experiment_id, &m.family, &m.params, m.p, m.h, x, e, m.budget, m.seed);
            match bound {
                Some((rhs, tag)) => row.with_bound(rhs[i], tag),
                None => row,
            }
        })
        .collect()
}

/// Writes a `#` comment line with the version and the configuration, then
/// the header and rows.
pub fn write_csv<W: Write>(mut out: W, config_json: &str, rows: &[CsvRow]) -> Result<()> {
    writeln!(out, "# perclab {VERSION} config={}", config_json.replace('\n', " "))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_empty_bounds() {
        let e = MCEstimate::binomial(3, 10);
        let rows = vec![
            CsvRow::from_estimate("x", "tree", "degree=3", 0.5, None, 4.0, &e, 100, 0),
            CsvRow::from_estimate("x", "tree", "degree=3", 0.5, Some(0.1), 8.0, &e, 100, 0).with_bound(0.66, "two_arm"),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, "{\"a\":1}", &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# perclab "));
        assert_eq!(lines[1], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 4);
        assert!(lines[2].contains(",,,"));
        assert!(lines[3].contains("0.66,two_arm"));
        for l in &lines[2..] {
            assert_eq!(l.split(',').count(), CSV_COLUMNS.len());
        }
    }

    #[test]
    fn header_even_without_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, "{}", &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap(), CSV_COLUMNS.join(","));
    }
}
