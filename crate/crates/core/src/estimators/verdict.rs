use serde::{Deserialize, Serialize};

use crate::estimators::EstimateReport;

/// Everything the inequality checks consume, bundled for serialization.
/// The Lyapunov report is log-scale (a Birkhoff average of ln |f'|); on the
/// conformal systems handled here the minimal and maximal expansion rates
/// coincide with it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportBundle {
    pub entropy: EstimateReport,
    pub lyapunov: EstimateReport,
    pub dimension_lower: EstimateReport,
    pub dimension_upper: EstimateReport,
    pub recurrence_lower: EstimateReport,
    pub recurrence_upper: EstimateReport,
    pub min_recurrence_lower: EstimateReport,
    pub min_recurrence_upper: EstimateReport,
}

/// Slack allowed on each family of relations.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ToleranceSpec {
    /// Absolute slack on recurrence-rate and dimension relations.
    pub rate_abs: f64,
    /// Absolute slack on minimal-return-rate relations.
    pub min_rate_abs: f64,
    /// Below this entropy every relation degenerates; checks are skipped.
    pub entropy_floor: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            rate_abs: 0.1,
            min_rate_abs: 0.15,
            entropy_floor: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "SKIPPED")]
    Skipped,
}

/// One checked relation between estimated quantities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub status: VerdictStatus,
}

fn leq(relation: &str, lhs: f64, rhs: f64, tol: f64, skip: bool) -> Verdict {
    let status = if skip {
        VerdictStatus::Skipped
    } else if lhs <= rhs + tol {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    };
    Verdict {
        relation: relation.to_string(),
        lhs,
        rhs,
        tolerance: tol,
        status,
    }
}

fn close(relation: &str, lhs: f64, rhs: f64, tol: f64, skip: bool) -> Verdict {
    let status = if skip {
        VerdictStatus::Skipped
    } else if (lhs - rhs).abs() <= tol {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    };
    Verdict {
        relation: relation.to_string(),
        lhs,
        rhs,
        tolerance: tol,
        status,
    }
}

/// The eight relations tying recurrence rates to entropy, Lyapunov exponent,
/// and local dimension: the two-sided sandwich for each rate family, then
/// the equalities expected when the measure is exact-dimensional.
pub fn check_inequalities(bundle: &ReportBundle, tol: &ToleranceSpec) -> Vec<Verdict> {
    let h = bundle.entropy.extrapolated;
    let lam = bundle.lyapunov.extrapolated;
    let dim_lo = bundle.dimension_lower.extrapolated;
    let dim_hi = bundle.dimension_upper.extrapolated;
    let r_lo = bundle.recurrence_lower.extrapolated;
    let r_hi = bundle.recurrence_upper.extrapolated;
    let s_lo = bundle.min_recurrence_lower.extrapolated;
    let s_hi = bundle.min_recurrence_upper.extrapolated;
    let skip = h < tol.entropy_floor || lam <= 0.0;

    let h_over_lam = if lam > 0.0 { h / lam } else { f64::NAN };
    let inv_lam = if lam > 0.0 { 1.0 / lam } else { f64::NAN };

    vec![
        leq(
            "entropy/lyapunov <= recurrence_rate_lower",
            h_over_lam,
            r_lo,
            tol.rate_abs,
            skip,
        ),
        leq(
            "recurrence_rate_upper <= entropy/lyapunov",
            r_hi,
            h_over_lam,
            tol.rate_abs,
            skip,
        ),
        leq(
            "1/lyapunov <= min_recurrence_rate_lower",
            inv_lam,
            s_lo,
            tol.min_rate_abs,
            skip,
        ),
        leq(
            "min_recurrence_rate_upper <= 1/lyapunov",
            s_hi,
            inv_lam,
            tol.min_rate_abs,
            skip,
        ),
        close(
            "recurrence_rate_lower == dimension",
            r_lo,
            dim_lo,
            tol.rate_abs,
            skip,
        ),
        close(
            "recurrence_rate_upper == dimension",
            r_hi,
            dim_hi,
            tol.rate_abs,
            skip,
        ),
        close(
            "min_recurrence_rate_lower == 1/lyapunov",
            s_lo,
            inv_lam,
            tol.min_rate_abs,
            skip,
        ),
        close(
            "min_recurrence_rate_upper == 1/lyapunov",
            s_hi,
            inv_lam,
            tol.min_rate_abs,
            skip,
        ),
    ]
}
