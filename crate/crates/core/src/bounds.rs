//! Right-hand sides of the two-ghost, two-arm, tail, two-point and
//! locality-rate inequalities, plus an audit of the numerical constants
//! used to simplify them.

use crate::error::{PercError, Result};
use serde::{Deserialize, Serialize};

/// Exponents attached to a (d, gr, p) triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub d: f64,
    pub gr: f64,
    pub p: f64,
    /// 1 - ln p / ln gr (tail calculus exponent; not the half-space rate).
    pub alpha_exponent: f64,
    /// 1 / (4 (1 + ln(d-1) / ln gr)).
    pub beta: f64,
}

impl ExponentReport {
    pub fn new(d: f64, gr: f64, p: f64) -> Result<Self> {
        check_gr(gr)?;
        check_open_p(p)?;
        Ok(ExponentReport { d, gr, p, alpha_exponent: alpha_exponent(p, gr), beta: beta(d, gr) })
    }
}

/// A bound evaluated on a grid, tagged with the formula it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub abscissa: Vec<f64>,
    pub rhs: Vec<f64>,
    pub tag: String,
}

impl BoundCurve {
    pub fn from_fn(abscissa: &[f64], tag: &str, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let rhs = abscissa.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        Ok(BoundCurve { abscissa: abscissa.to_vec(), rhs, tag: tag.to_string() })
    }
}

pub const TAG_TWO_GHOST: &str = "two_ghost";
pub const TAG_TWO_ARM: &str = "two_arm";
pub const TAG_TAIL_RAW: &str = "tail_raw";
pub const TAG_TAIL_SIMPLIFIED: &str = "tail_simplified";
pub const TAG_KAPPA: &str = "kappa";
pub const TAG_MEAN_FIELD: &str = "mean_field";
pub const TAG_RATE_RAW: &str = "rate_raw";
pub const TAG_RATE_SIMPLIFIED: &str = "rate_simplified";
pub const TAG_HALFSPACE: &str = "halfspace_exp";

fn check_gr(gr: f64) -> Result<()> {
    if !(gr > 1.0) {
        return Err(PercError::Domain(format!("growth must exceed 1, got {gr}")));
    }
    Ok(())
}

fn check_p_pos(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(PercError::Domain(format!("p must lie in (0, 1], got {p}")));
    }
    Ok(())
}

fn check_open_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PercError::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

pub fn alpha_exponent(p: f64, gr: f64) -> f64 {
    1.0 - p.ln() / gr.ln()
}

pub fn beta(d: f64, gr: f64) -> f64 {
    0.25 / (1.0 + (d - 1.0).ln() / gr.ln())
}

fn effective_d(d: f64, edge_transitive: bool) -> f64 {
    if edge_transitive {
        1.0
    } else {
        d
    }
}

/// 33 d sqrt((1-p) h / p).
pub fn two_ghost_rhs(d: f64, p: f64, h: f64, edge_transitive: bool) -> Result<f64> {
    check_p_pos(p)?;
    if !(h > 0.0) {
        return Err(PercError::Domain(format!("h must be positive, got {h}")));
    }
    Ok(33.0 * effective_d(d, edge_transitive) * ((1.0 - p) * h / p).sqrt())
}

/// 66 d sqrt((1-p) / (p n)).
pub fn two_arm_rhs(d: f64, p: f64, n: f64, edge_transitive: bool) -> Result<f64> {
    check_p_pos(p)?;
    if !(n >= 1.0) {
        return Err(PercError::Domain(format!("n must be at least 1, got {n}")));
    }
    Ok(66.0 * effective_d(d, edge_transitive) * ((1.0 - p) / (p * n)).sqrt())
}

/// Cluster-volume tail bound at p: (raw, simplified).
pub fn tail_bound(d: f64, gr: f64, p: f64, n: f64) -> Result<(f64, f64)> {
    check_gr(gr)?;
    check_open_p(p)?;
    if !(n >= 1.0) {
        return Err(PercError::Domain(format!("n must be at least 1, got {n}")));
    }
    let a = alpha_exponent(p, gr);
    let raw = 2f64.sqrt() * (66.0 * d * (1.0 / ((1.0 - p) * n)).sqrt()).powf(1.0 / (2.0 * a));
    let simplified = 5.0 * d.powf(0.25) / (1.0 - 1.0 / gr).powf(0.125) * n.powf(-beta(d, gr));
    Ok((raw, simplified))
}

/// Intermediate tail form sqrt(2) [q / (1-p)]^{1/(2 alpha)} with a supplied
/// two-arm value q.
pub fn tail_from_two_arm(q: f64, p: f64, gr: f64) -> Result<f64> {
    check_gr(gr)?;
    check_open_p(p)?;
    Ok(2f64.sqrt() * (q / (1.0 - p)).powf(1.0 / (2.0 * alpha_exponent(p, gr))))
}

pub fn kappa_bound(gr: f64, n: u32) -> f64 {
    gr.powi(-(n as i32))
}

/// (p - pc) / (p (1 - pc)).
pub fn mean_field_lower(p: f64, pc: f64) -> Result<f64> {
    if !(pc > 0.0 && pc < p && p <= 1.0) {
        return Err(PercError::Domain(format!("need 0 < pc < p <= 1, got p={p}, pc={pc}")));
    }
    Ok((p - pc) / (p * (1.0 - pc)))
}

/// Bound on |p_c(G1) - p_c(G2)| for graphs whose balls agree up to radius
/// R, with p1 = p_c(G1): (raw, simplified). The raw form carries a factor
/// (1 - p2) that is replaced by 1.
pub fn rate_bound(d: f64, gr: f64, p1: f64, r: f64) -> Result<(f64, f64)> {
    if !(r >= 1.0) {
        return Err(PercError::Domain(format!("R must be at least 1, got {r}")));
    }
    check_gr(gr)?;
    check_open_p(p1)?;
    let a = alpha_exponent(p1, gr);
    let raw = p1 * 2f64.sqrt() * (66.0 * d * (2.0 / ((1.0 - p1) * d * r)).sqrt()).powf(1.0 / (2.0 * a));
    let simplified = 5.0 * d.powf(0.125) * p1 / (1.0 - 1.0 / gr).powf(0.125) * r.powf(-beta(d, gr));
    Ok((raw, simplified))
}

/// γ_0 = 0, γ_{k+1} = (γ_k + 1/2) / (2 α), run until successive terms differ
/// by less than `tol` or `k_max` steps.
pub fn exponent_iteration(alpha: f64, k_max: usize, tol: f64) -> Result<Vec<f64>> {
    if !(alpha > 1.0) {
        return Err(PercError::Domain(format!("alpha must exceed 1, got {alpha}")));
    }
    let mut seq = vec![0.0];
    for _ in 0..k_max {
        let g = *seq.last().expect("nonempty");
        let next = (g + 0.5) / (2.0 * alpha);
        seq.push(next);
        if (next - g).abs() < tol {
            break;
        }
    }
    Ok(seq)
}

pub fn exponent_limit(alpha: f64) -> f64 {
    1.0 / (4.0 * alpha - 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsAudit {
    /// (sqrt 2 + 1) sqrt 8 / (sqrt 2 - 1).
    pub ghost_constant: f64,
    /// inf_c c^{1/2} (1 - e^{-c})^{-2}.
    pub arm_constant: f64,
    pub arm_argmin: f64,
    /// 2 * ghost_constant <= 33 and arm_constant <= 2.
    pub roundings_hold: bool,
}

fn arm_objective(c: f64) -> f64 {
    c.sqrt() / (-(-c).exp_m1()).powi(2)
}

/// Golden-section minimisation of a unimodal function on [a, b].
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

pub fn constants_audit() -> ConstantsAudit {
    let s2 = 2f64.sqrt();
    let ghost_constant = (s2 + 1.0) * 8f64.sqrt() / (s2 - 1.0);
    let arm_argmin = golden_section_min(arm_objective, 0.01, 20.0, 1e-12);
    let arm_constant = arm_objective(arm_argmin);
    ConstantsAudit {
        ghost_constant,
        arm_constant,
        arm_argmin,
        roundings_hold: 2.0 * ghost_constant <= 33.0 && arm_constant <= 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_ghost_examples() {
        assert_eq!(two_ghost_rhs(3.0, 1.0, 0.1, false).unwrap(), 0.0);
        assert!((two_ghost_rhs(3.0, 0.5, 0.01, false).unwrap() - 9.9).abs() < 1e-12);
        assert_eq!(two_ghost_rhs(1.0, 0.3, 0.2, true).unwrap(), two_ghost_rhs(7.0, 0.3, 0.2, true).unwrap());
        assert!(two_ghost_rhs(3.0, 0.0, 0.1, false).is_err());
    }

    #[test]
    fn two_arm_examples() {
        assert_eq!(two_arm_rhs(3.0, 1.0, 10.0, false).unwrap(), 0.0);
        assert!((two_arm_rhs(2.0, 0.5, 1e4, true).unwrap() - 0.66).abs() < 1e-12);
        assert!((two_arm_rhs(4.0, 1.0 / 3.0, 64.0, false).unwrap() - 46.669).abs() < 1e-3);
    }

    #[test]
    fn tail_examples() {
        let e = ExponentReport::new(3.0, 2.0, 0.5).unwrap();
        assert!((e.alpha_exponent - 2.0).abs() < 1e-12);
        assert!((e.beta - 0.125).abs() < 1e-12);
        let (_, s) = tail_bound(3.0, 2.0, 0.5, 1.0).unwrap();
        assert!((s - 7.176).abs() < 1e-3);
        assert!(tail_bound(3.0, 1.0, 0.5, 4.0).is_err());
    }

    #[test]
    fn kappa_and_mean_field() {
        assert_eq!(kappa_bound(2.0, 10), 1.0 / 1024.0);
        assert_eq!(kappa_bound(3.0, 0), 1.0);
        assert_eq!(mean_field_lower(1.0, 0.3).unwrap(), 1.0);
        assert!((mean_field_lower(0.6, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(mean_field_lower(0.5, 0.5).is_err());
    }

    #[test]
    fn rate_examples() {
        let (_, s) = rate_bound(4.0, 3.0, 1.0 / 3.0, 16.0).unwrap();
        assert!((s - 1.474).abs() < 1e-3);
        let (_, s2) = rate_bound(4.0, 3.0, 1.0 / 3.0, 32.0).unwrap();
        assert!((s2 / s - 2f64.powf(-0.125)).abs() < 1e-12);
        assert!(rate_bound(4.0, 3.0, 0.3, 0.5).is_err());
    }

    #[test]
    fn exponent_iteration_limits() {
        for alpha in [2.0, 3.0, 5.0] {
            let seq = exponent_iteration(alpha, 200, 1e-14).unwrap();
            assert!((seq[1] - 1.0 / (4.0 * alpha)).abs() < 1e-15);
            assert!(seq.windows(2).all(|w| w[1] >= w[0]));
            assert!((seq.last().unwrap() - exponent_limit(alpha)).abs() < 1e-10);
        }
        assert!((exponent_limit(2.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!(exponent_iteration(1.0, 10, 1e-9).is_err());
    }

    #[test]
    fn constants() {
        let a = constants_audit();
        assert!((a.ghost_constant - 16.485).abs() < 1e-3);
        assert!((a.arm_constant - 1.873).abs() < 1e-3);
        assert!(a.roundings_hold);
    }
}
