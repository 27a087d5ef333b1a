use crate::error::{Error, Result};
use crate::estimators::fit::{median, windowed_slopes};
use crate::estimators::{EpsFit, EstimateReport, Quantity};
use crate::recurrence::{ball_min_returns, ball_return_times, Obs};
use crate::systems::{OrbitBuffer, Point, SystemSpec};

/// Lower and upper readings of a local rate over shrinking radii.
#[derive(Clone, Debug)]
pub struct LocalRates {
    pub lower: EstimateReport,
    pub upper: EstimateReport,
}

/// Shared shape of the local-rate estimators: pool a per-radius statistic
/// across samples by median, then slope y against -ln r over sliding
/// windows. Lower rate = smallest window slope, upper = largest.
/// `y_of_median` reshapes the pooled median before the slope fit (identity
/// or ln); median commutes with monotone maps, so applying it after pooling
/// is exact.
fn rate_pair<F>(
    samples: &[OrbitBuffer],
    radii: &[f64],
    window: usize,
    quantities: (Quantity, Quantity),
    level_obs: F,
    y_of_median: fn(f64) -> f64,
) -> Result<LocalRates>
where
    F: FnMut(&OrbitBuffer) -> Result<Vec<Obs>>,
{
    if samples.is_empty() {
        return Err(Error::InsufficientData("no sample orbits".into()));
    }
    let per_sample: Vec<Vec<Obs>> = samples.iter().map(level_obs).collect::<Result<_>>()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut fracs = Vec::new();
    let mut kept_radii = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let mut pooled = Vec::new();
        let mut censored = 0usize;
        for obs in &per_sample {
            match obs[k] {
                Obs::Observed(v) => pooled.push(v as f64),
                Obs::Censored { .. } => censored += 1,
            }
        }
        let frac = censored as f64 / samples.len() as f64;
        if frac > 0.5 || pooled.is_empty() {
            continue;
        }
        xs.push(-r.ln());
        ys.push(y_of_median(median(&pooled)?));
        fracs.push(frac);
        kept_radii.push(r);
    }
    let slopes = windowed_slopes(&xs, &ys, window)?;
    let fits: Vec<EpsFit> = slopes
        .iter()
        .enumerate()
        .map(|(w, &slope)| EpsFit {
            // Tag each window by its smallest radius.
            eps: kept_radii[w + window - 1],
            slope,
            intercept: 0.0,
            r_squared: 1.0,
            n_window: window,
            censored_fraction: fracs[w..w + window].iter().sum::<f64>() / window as f64,
        })
        .collect();
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mk = |q: Quantity, v: f64| EstimateReport {
        quantity: q,
        per_eps_fits: fits.clone(),
        extrapolated: v,
        target: None,
        relative_error: None,
        sample_count: samples.len(),
    };
    Ok(LocalRates {
        lower: mk(quantities.0, lo),
        upper: mk(quantities.1, hi),
    })
}

/// Rate of growth of ln R(B(x, r)) against -ln r, where R(B) is the first
/// return of the orbit to the metric ball around its seed.
pub fn recurrence_rate(
    samples: &[OrbitBuffer],
    radii: &[f64],
    window: usize,
) -> Result<LocalRates> {
    rate_pair(
        samples,
        radii,
        window,
        (Quantity::RecRateLower, Quantity::RecRateUpper),
        |orb| ball_return_times(orb, radii),
        f64::ln,
    )
}

/// Rate of growth of the minimal return time S(B(x, r)) itself (not its
/// logarithm) against -ln r.
pub fn min_recurrence_rate(
    samples: &[OrbitBuffer],
    radii: &[f64],
    window: usize,
) -> Result<LocalRates> {
    rate_pair(
        samples,
        radii,
        window,
        (
            Quantity::MinRecRateLower,
            Quantity::MinRecRateUpper,
        ),
        |orb| ball_min_returns(orb, radii),
        |y| y,
    )
}

/// Local dimension of the empirical measure: slope of ln mu(B(x, r)) against
/// ln r, with mu estimated by point counts over a long reference orbit.
/// Lower/upper from the min/max windowed slope, as for the rates.
pub fn pointwise_dimension(
    cloud: &OrbitBuffer,
    centers: &[Point],
    radii: &[f64],
    window: usize,
) -> Result<LocalRates> {
    if centers.is_empty() {
        return Err(Error::InsufficientData("no ball centers".into()));
    }
    let mut pooled_logs: Vec<Vec<f64>> = vec![Vec::new(); radii.len()];
    let mut empty = vec![0usize; radii.len()];
    for c in centers {
        let (counts, scanned) = cloud.count_within(c, radii)?;
        if counts[0] == 0 {
            return Err(Error::EmptyBall { radius: radii[0] });
        }
        for (k, &cnt) in counts.iter().enumerate() {
            if cnt == 0 {
                empty[k] += 1;
            } else {
                pooled_logs[k].push((cnt as f64 / scanned as f64).ln());
            }
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut fracs = Vec::new();
    let mut kept = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let frac = empty[k] as f64 / centers.len() as f64;
        if frac > 0.5 || pooled_logs[k].is_empty() {
            continue;
        }
        xs.push(r.ln());
        ys.push(median(&pooled_logs[k])?);
        fracs.push(frac);
        kept.push(r);
    }
    let slopes = windowed_slopes(&xs, &ys, window)?;
    let fits: Vec<EpsFit> = slopes
        .iter()
        .enumerate()
        .map(|(w, &slope)| EpsFit {
            eps: kept[w + window - 1],
            slope,
            intercept: 0.0,
            r_squared: 1.0,
            n_window: window,
            censored_fraction: fracs[w..w + window].iter().sum::<f64>() / window as f64,
        })
        .collect();
    if fits.is_empty() {
        return Err(Error::InsufficientData(
            "no radius window survived pooling".into(),
        ));
    }
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mk = |q: Quantity, v: f64| EstimateReport {
        quantity: q,
        per_eps_fits: fits.clone(),
        extrapolated: v,
        target: None,
        relative_error: None,
        sample_count: centers.len(),
    };
    Ok(LocalRates {
        lower: mk(Quantity::DimLower, lo),
        upper: mk(Quantity::DimUpper, hi),
    })
}

/// Birkhoff average of ln |f'| along each orbit, pooled by median. Returns
/// the report and how many orbit points were skipped for sitting on the
/// critical set.
pub fn lyapunov_exponent(
    sys: &SystemSpec,
    samples: &[OrbitBuffer],
) -> Result<(EstimateReport, usize)> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no sample orbits".into()));
    }
    let mut averages = Vec::with_capacity(samples.len());
    let mut skipped_total = 0usize;
    for orb in samples {
        let mut sum = 0.0;
        let mut used = 0usize;
        for j in 0..orb.len() {
            match sys.derivative_modulus(orb, j)? {
                Some(d) => {
                    sum += d.ln();
                    used += 1;
                }
                None => skipped_total += 1,
            }
        }
        if used == 0 {
            return Err(Error::InsufficientData(
                "orbit lies entirely on the critical set".into(),
            ));
        }
        averages.push(sum / used as f64);
    }
    let value = median(&averages)?;
    let report = EstimateReport {
        quantity: Quantity::Lyapunov,
        per_eps_fits: vec![EpsFit {
            eps: 0.0,
            slope: value,
            intercept: 0.0,
            r_squared: 1.0,
            n_window: samples.len(),
            censored_fraction: 0.0,
        }],
        extrapolated: value,
        target: None,
        relative_error: None,
        sample_count: samples.len(),
    };
    Ok((report, skipped_total))
}
