//! Growth-rate estimators on top of the return-time grids: entropy readings,
//! pressure, minimal-return ratios, and local (per-ball) rates, plus the
//! verdict layer that checks the expected relations between them.

mod entropy;
mod fit;
mod local;
mod verdict;

pub use entropy::{
    entropy_from_return_times, entropy_katok, entropy_katok_metric, entropy_ornstein_weiss,
    minimal_return_ratio, pressure_estimate,
};
pub use fit::{fit_growth_rate, median, windowed_slopes, LineFit};
pub use local::{
    lyapunov_exponent, min_recurrence_rate, pointwise_dimension, recurrence_rate, LocalRates,
};
pub use verdict::{check_inequalities, ReportBundle, ToleranceSpec, Verdict, VerdictStatus};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{OrbitBuffer, SystemSpec};

/// What a report claims to estimate. Serialized names are part of the output
/// contract, so keep them stable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    EntropyDynBall,
    #[serde(rename = "entropy_ow")]
    EntropyOW,
    EntropyKatok,
    Pressure,
    DimLower,
    DimUpper,
    RecRateLower,
    RecRateUpper,
    MinRecRateLower,
    MinRecRateUpper,
    MinReturnRatio,
    Lyapunov,
}

/// One fitted line at a fixed radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsFit {
    pub eps: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of window points that entered the fit.
    pub n_window: usize,
    /// Fraction of grid cells at this radius that were censored.
    pub censored_fraction: f64,
}

/// The standard estimator output: per-radius fits plus a small-radius
/// reading, optionally compared against a known target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: Quantity,
    pub per_eps_fits: Vec<EpsFit>,
    /// Reading at the smallest usable radius.
    pub extrapolated: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    pub sample_count: usize,
}

impl EstimateReport {
    pub fn with_target(mut self, target: f64) -> Self {
        let denom = target.abs().max(1e-12);
        self.relative_error = Some((self.extrapolated - target).abs() / denom);
        self.target = Some(target);
        self
    }
}

/// A potential function evaluated along orbits, for pressure estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Constant potential; pressure shifts by exactly the constant.
    Constant { value: f64 },
    /// First coordinate of the point. Coordinate systems only.
    Coordinate,
    /// Piecewise constant on the coding partition.
    Table { values: Vec<f64> },
}

impl PotentialSpec {
    /// Value of the potential at orbit point `j`.
    pub fn eval(&self, sys: &SystemSpec, orb: &OrbitBuffer, j: usize) -> Result<f64> {
        match self {
            PotentialSpec::Constant { value } => Ok(*value),
            PotentialSpec::Coordinate => orb.coord0(j),
            PotentialSpec::Table { values } => {
                let cell = sys.cell_of_orbit_point(orb, j)? as usize;
                values.get(cell).copied().ok_or_else(|| {
                    Error::Parameter(format!(
                        "potential table has {} entries, partition cell {cell} out of range",
                        values.len()
                    ))
                })
            }
        }
    }

    /// Birkhoff prefix sums S_0 = 0, S_j = sum of the first j orbit values.
    pub fn birkhoff_prefix(
        &self,
        sys: &SystemSpec,
        orb: &OrbitBuffer,
        upto: usize,
    ) -> Result<Vec<f64>> {
        if upto > orb.len() {
            return Err(Error::IndexOutOfRange(format!(
                "prefix length {upto} exceeds orbit length {}",
                orb.len()
            )));
        }
        let mut acc = Vec::with_capacity(upto + 1);
        let mut s = 0.0;
        acc.push(0.0);
        for j in 0..upto {
            s += self.eval(sys, orb, j)?;
            acc.push(s);
        }
        Ok(acc)
    }
}
