use crate::error::{Error, Result};

/// Least-squares line through (x, y) pairs.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares for y against x. Needs at least three points and
/// non-degenerate x. A constant series fits exactly (r^2 = 1 by convention).
pub fn fit_growth_rate(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Parameter(format!(
            "fit input lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 points for a growth-rate fit, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "degenerate abscissa: all x values equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Median of a sample; errors on empty input.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("median of empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    Ok(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Slopes of all sliding windows of `window` consecutive points. Used where a
/// single global fit would wash out local flat/steep stretches.
pub fn windowed_slopes(xs: &[f64], ys: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 2 {
        return Err(Error::Parameter("window must span at least 2 points".into()));
    }
    if xs.len() < window {
        return Err(Error::InsufficientData(format!(
            "{} points cannot fill a window of {window}",
            xs.len()
        )));
    }
    let mut out = Vec::with_capacity(xs.len() - window + 1);
    for start in 0..=(xs.len() - window) {
        let xw = &xs[start..start + window];
        let yw = &ys[start..start + window];
        let slope = if window == 2 {
            (yw[1] - yw[0]) / (xw[1] - xw[0])
        } else {
            fit_growth_rate(xw, yw)?.slope
        };
        out.push(slope);
    }
    Ok(out)
}
