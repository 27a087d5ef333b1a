use crate::error::{Error, Result};
use crate::estimators::fit::{fit_growth_rate, median};
use crate::estimators::{EpsFit, EstimateReport, PotentialSpec, Quantity};
use crate::recurrence::{
    katok_ball_cover, katok_cylinder_count, min_return_prefix_profile, partition_return_profile,
    BallParams, Obs, ReturnTimeGrid,
};
use crate::systems::{OrbitBuffer, SymbolicWord, SystemSpec};

/// Above this censored share an n-row is dropped from the fit entirely.
const ROW_CENSOR_CUTOFF: f64 = 0.5;
/// A radius level is trusted for the extrapolated reading only below this
/// censored share.
const LEVEL_CENSOR_CUTOFF: f64 = 0.10;

/// Fit ln(value) against n at one radius level, pooling across samples by
/// median. `cell_value` maps (sample index, n index, observed R) to the
/// quantity whose growth rate is wanted.
fn ladder_fit<F>(grids: &[ReturnTimeGrid], eps_idx: usize, mut cell_value: F) -> Result<EpsFit>
where
    F: FnMut(usize, usize, u64) -> f64,
{
    let n_ladder = &grids[0].n_ladder;
    let eps = grids[0].eps_ladder[eps_idx];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut censored = 0usize;
    for (n_idx, &n) in n_ladder.iter().enumerate() {
        let mut pooled = Vec::with_capacity(grids.len());
        for (s_idx, g) in grids.iter().enumerate() {
            match g.r[eps_idx][n_idx] {
                Obs::Observed(r) => pooled.push(cell_value(s_idx, n_idx, r)),
                Obs::Censored { .. } => censored += 1,
            }
        }
        if pooled.len() as f64 >= grids.len() as f64 * (1.0 - ROW_CENSOR_CUTOFF)
            && !pooled.is_empty()
        {
            xs.push(n as f64);
            ys.push(median(&pooled)?);
        }
    }
    let censored_fraction = censored as f64 / (grids.len() * n_ladder.len()) as f64;
    let fit = fit_growth_rate(&xs, &ys)?;
    Ok(EpsFit {
        eps,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_window: xs.len(),
        censored_fraction,
    })
}

/// Pick the reading: slope at the smallest radius whose censored share stays
/// under the cutoff; if every level is badly censored, the least censored one.
fn extrapolate(fits: &[EpsFit]) -> Result<f64> {
    if fits.is_empty() {
        return Err(Error::AllCensored(
            "no radius level produced a usable fit".into(),
        ));
    }
    for f in fits.iter().rev() {
        if f.censored_fraction <= LEVEL_CENSOR_CUTOFF {
            return Ok(f.slope);
        }
    }
    let best = fits
        .iter()
        .min_by(|a, b| a.censored_fraction.partial_cmp(&b.censored_fraction).unwrap())
        .unwrap();
    Ok(best.slope)
}

fn check_grids(grids: &[ReturnTimeGrid]) -> Result<()> {
    if grids.is_empty() {
        return Err(Error::InsufficientData("no return-time grids".into()));
    }
    let first = &grids[0];
    for g in &grids[1..] {
        if g.n_ladder != first.n_ladder || g.eps_ladder != first.eps_ladder {
            return Err(Error::Incompatible(
                "grids must share one (n, eps) ladder".into(),
            ));
        }
    }
    Ok(())
}

/// Entropy as the exponential growth rate of return times to dynamical
/// balls: slope of median ln R_n(x, eps) in n, read at small eps.
pub fn entropy_from_return_times(grids: &[ReturnTimeGrid]) -> Result<EstimateReport> {
    check_grids(grids)?;
    let mut fits = Vec::new();
    for eps_idx in 0..grids[0].eps_ladder.len() {
        match ladder_fit(grids, eps_idx, |_, _, r| (r as f64).ln()) {
            Ok(f) => fits.push(f),
            Err(Error::InsufficientData(_)) | Err(Error::AllCensored(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let extrapolated = extrapolate(&fits)?;
    Ok(EstimateReport {
        quantity: Quantity::EntropyDynBall,
        per_eps_fits: fits,
        extrapolated,
        target: None,
        relative_error: None,
        sample_count: grids.len(),
    })
}

/// Entropy from first returns of n-cylinders of the coding partition. The
/// single pseudo-level is recorded with eps = 0.
pub fn entropy_ornstein_weiss(
    words: &[SymbolicWord],
    n_ladder: &[usize],
) -> Result<EstimateReport> {
    if words.is_empty() {
        return Err(Error::InsufficientData("no itineraries".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut censored = 0usize;
    let profiles: Vec<Vec<Obs>> = words
        .iter()
        .map(|w| partition_return_profile(w, n_ladder))
        .collect::<Result<_>>()?;
    for (n_idx, &n) in n_ladder.iter().enumerate() {
        let mut pooled = Vec::new();
        for p in &profiles {
            match p[n_idx] {
                Obs::Observed(r) => pooled.push((r as f64).ln()),
                Obs::Censored { .. } => censored += 1,
            }
        }
        if pooled.len() as f64 >= words.len() as f64 * (1.0 - ROW_CENSOR_CUTOFF) && !pooled.is_empty()
        {
            xs.push(n as f64);
            ys.push(median(&pooled)?);
        }
    }
    let fit = fit_growth_rate(&xs, &ys)?;
    let level = EpsFit {
        eps: 0.0,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_window: xs.len(),
        censored_fraction: censored as f64 / (words.len() * n_ladder.len()) as f64,
    };
    Ok(EstimateReport {
        quantity: Quantity::EntropyOW,
        extrapolated: level.slope,
        per_eps_fits: vec![level],
        target: None,
        relative_error: None,
        sample_count: words.len(),
    })
}

/// Entropy from the growth of the number of n-cylinders needed to capture
/// mass c of the empirical itinerary distribution.
pub fn entropy_katok(
    itineraries: &[SymbolicWord],
    n_ladder: &[usize],
    c: f64,
) -> Result<EstimateReport> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in n_ladder {
        let count = katok_cylinder_count(itineraries, n, c)?;
        xs.push(n as f64);
        ys.push((count as f64).ln());
    }
    let fit = fit_growth_rate(&xs, &ys)?;
    let level = EpsFit {
        eps: 0.0,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_window: xs.len(),
        censored_fraction: 0.0,
    };
    Ok(EstimateReport {
        quantity: Quantity::EntropyKatok,
        extrapolated: level.slope,
        per_eps_fits: vec![level],
        target: None,
        relative_error: None,
        sample_count: itineraries.len(),
    })
}

/// Metric twin of the cylinder count: growth of a greedy (n, eps)-ball cover
/// of mass c of the sample cloud.
pub fn entropy_katok_metric(
    samples: &[OrbitBuffer],
    n_ladder: &[usize],
    eps: f64,
    c: f64,
) -> Result<EstimateReport> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in n_ladder {
        let count = katok_ball_cover(samples, &BallParams::new(n, eps)?, c)?;
        xs.push(n as f64);
        ys.push((count as f64).ln());
    }
    let fit = fit_growth_rate(&xs, &ys)?;
    let level = EpsFit {
        eps,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_window: xs.len(),
        censored_fraction: 0.0,
    };
    Ok(EstimateReport {
        quantity: Quantity::EntropyKatok,
        extrapolated: level.slope,
        per_eps_fits: vec![level],
        target: None,
        relative_error: None,
        sample_count: samples.len(),
    })
}

/// Topological-pressure estimate: growth rate of S_n phi(x) + ln R_n(x, eps)
/// along the ladder. With phi = 0 this collapses to the entropy estimate,
/// and a constant phi shifts the slope by exactly that constant.
pub fn pressure_estimate(
    sys: &SystemSpec,
    samples: &[OrbitBuffer],
    grids: &[ReturnTimeGrid],
    phi: &PotentialSpec,
) -> Result<EstimateReport> {
    check_grids(grids)?;
    if samples.len() != grids.len() {
        return Err(Error::Incompatible(
            "one grid per sample orbit is required".into(),
        ));
    }
    let n_max = *grids[0].n_ladder.iter().max().unwrap();
    let prefixes: Vec<Vec<f64>> = samples
        .iter()
        .map(|orb| phi.birkhoff_prefix(sys, orb, n_max))
        .collect::<Result<_>>()?;
    let n_ladder = grids[0].n_ladder.clone();
    let mut fits = Vec::new();
    for eps_idx in 0..grids[0].eps_ladder.len() {
        let fit = ladder_fit(grids, eps_idx, |s_idx, n_idx, r| {
            prefixes[s_idx][n_ladder[n_idx]] + (r as f64).ln()
        });
        match fit {
            Ok(f) => fits.push(f),
            Err(Error::InsufficientData(_)) | Err(Error::AllCensored(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let extrapolated = extrapolate(&fits)?;
    Ok(EstimateReport {
        quantity: Quantity::Pressure,
        per_eps_fits: fits,
        extrapolated,
        target: None,
        relative_error: None,
        sample_count: grids.len(),
    })
}

/// Median of p(w_n) / n over itineraries, where p is the minimal period of
/// the length-n prefix: the exact minimal return of the n-cylinder to
/// itself. Tends to 1 from below along typical words.
pub fn minimal_return_ratio(
    words: &[SymbolicWord],
    n_ladder: &[usize],
) -> Result<EstimateReport> {
    if words.is_empty() {
        return Err(Error::InsufficientData("no itineraries".into()));
    }
    let profiles: Vec<Vec<usize>> = words
        .iter()
        .map(|w| min_return_prefix_profile(w, n_ladder))
        .collect::<Result<_>>()?;
    let mut fits = Vec::new();
    for (n_idx, &n) in n_ladder.iter().enumerate() {
        let ratios: Vec<f64> = profiles
            .iter()
            .map(|p| p[n_idx] as f64 / n as f64)
            .collect();
        fits.push(EpsFit {
            eps: 0.0,
            slope: median(&ratios)?,
            intercept: 0.0,
            r_squared: 1.0,
            n_window: n,
            censored_fraction: 0.0,
        });
    }
    let extrapolated = fits.last().unwrap().slope;
    Ok(EstimateReport {
        quantity: Quantity::MinReturnRatio,
        per_eps_fits: fits,
        extrapolated,
        target: None,
        relative_error: None,
        sample_count: words.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::compute_grid;
    use crate::systems::SystemSpec;

    fn shift_orbits(sys: &SystemSpec, samples: usize, len: usize) -> Vec<crate::systems::OrbitBuffer> {
        sys.sample_typical(samples, len + 16)
            .unwrap()
            .iter()
            .map(|p| sys.orbit(p, len).unwrap())
            .collect()
    }

    fn shift_grids(probs: Vec<f64>, samples: usize, len: usize) -> Vec<ReturnTimeGrid> {
        let sys = SystemSpec::full_shift(probs, 7).unwrap();
        let n_ladder: Vec<usize> = (8..=14).collect();
        let eps_ladder = [0.5, 0.25, 0.125];
        shift_orbits(&sys, samples, len)
            .iter()
            .map(|orb| compute_grid(orb, &n_ladder, &eps_ladder).unwrap())
            .collect()
    }

    #[test]
    fn fair_coin_entropy_close_to_log2() {
        let grids = shift_grids(vec![0.5, 0.5], 60, 1 << 17);
        let rep = entropy_from_return_times(&grids).unwrap();
        assert!(
            (rep.extrapolated - std::f64::consts::LN_2).abs() < 0.08,
            "slope {} vs ln 2",
            rep.extrapolated
        );
        assert_eq!(rep.per_eps_fits.len(), 3);
        assert!(rep.per_eps_fits.iter().all(|f| f.r_squared > 0.9));
    }

    #[test]
    fn ornstein_weiss_matches_ball_version_on_shift() {
        // At eps = 2^-m the dynamical ball is the (n+m)-cylinder, so both
        // estimates see literally the same return times.
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 11)
        .unwrap();
        let words: Vec<SymbolicWord> = sys
            .sample_typical(30, 1 << 14)
            .unwrap()
            .iter()
            .map(|p| sys.itinerary(p, 1 << 14).unwrap().word)
            .collect();
        let rep = entropy_ornstein_weiss(&words, &(8..=13).collect::<Vec<_>>()).unwrap();
        assert!((rep.extrapolated - std::f64::consts::LN_2).abs() < 0.08);
    }

    #[test]
    fn constant_potential_shifts_pressure_exactly() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 3)
        .unwrap();
        let samples = shift_orbits(&sys, 20, 1 << 13);
        let n_ladder: Vec<usize> = (4..=10).collect();
        let eps_ladder = [0.5, 0.25];
        let grids: Vec<_> = samples
            .iter()
            .map(|o| compute_grid(o, &n_ladder, &eps_ladder).unwrap())
            .collect();
        let h = entropy_from_return_times(&grids).unwrap().extrapolated;
        let p = pressure_estimate(
            &sys,
            &samples,
            &grids,
            &PotentialSpec::Constant { value: 0.25 },
        )
        .unwrap()
        .extrapolated;
        assert!((p - h - 0.25).abs() < 1e-9, "p = {p}, h = {h}");
    }

    #[test]
    fn katok_partition_slope_near_log2() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 5)
        .unwrap();
        let words: Vec<SymbolicWord> = sys
            .sample_typical(40_000, 12)
            .unwrap()
            .iter()
            .map(|p| sys.itinerary(p, 12).unwrap().word)
            .collect();
        let rep = entropy_katok(&words, &(3..=9).collect::<Vec<_>>(), 0.5).unwrap();
        assert!(
            (rep.extrapolated - std::f64::consts::LN_2).abs() < 0.07,
            "slope {}",
            rep.extrapolated
        );
    }

    #[test]
    fn minimal_return_ratio_tends_to_one() {
        let sys = SystemSpec::full_shift(vec![0.5, 0.5], 9).unwrap();
        let words: Vec<SymbolicWord> = sys
            .sample_typical(2000, 200)
            .unwrap()
            .iter()
            .map(|p| sys.itinerary(p, 200).unwrap().word)
            .collect();
        let rep = minimal_return_ratio(&words, &[50, 100, 200]).unwrap();
        assert!(rep.extrapolated <= 1.0);
        assert!(rep.extrapolated > 0.9, "ratio {}", rep.extrapolated);
        // Monotone pull toward 1 along the ladder.
        let first = rep.per_eps_fits[0].slope;
        assert!(rep.extrapolated >= first - 0.05);
    }


    #[test]
    fn relative_error_fills_in() {
        let grids = shift_grids(vec![0.5, 0.5], 10, 1 << 15);
        let rep = entropy_from_return_times(&grids)
            .unwrap()
            .with_target(std::f64::consts::LN_2);
        assert!(rep.relative_error.unwrap() < 0.2);
    }
}
