use std::f64::consts::LN_2;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use recurrence_lab::estimators::{
    check_inequalities, entropy_from_return_times, entropy_katok, entropy_ornstein_weiss,
    lyapunov_exponent, min_recurrence_rate, minimal_return_ratio, pointwise_dimension,
    pressure_estimate, recurrence_rate, PotentialSpec, Quantity, ReportBundle, ToleranceSpec,
    VerdictStatus,
};
use recurrence_lab::recurrence::{
    compute_grid, min_return_prefix_profile, partition_return_time, Obs, ReturnTimeGrid,
};
use recurrence_lab::systems::{split_seed, OrbitBuffer, Point, SymbolicWord, SystemSpec};

use crate::runner::scalar_report;
use crate::CliError;

/// Result of one acceptance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub index: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall time; excluded from the reproducibility digest.
    pub seconds: f64,
}

/// The reproducibility digest: everything except timing.
#[derive(Serialize)]
struct CanonicalRecord<'a> {
    index: usize,
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

fn canonical_bytes(outcomes: &[CriterionOutcome]) -> Result<Vec<u8>, CliError> {
    let records: Vec<CanonicalRecord> = outcomes
        .iter()
        .map(|o| CanonicalRecord {
            index: o.index,
            name: &o.name,
            passed: o.passed,
            detail: &o.detail,
        })
        .collect();
    Ok(serde_json::to_vec(&records)?)
}

/// Criteria 1-10 for one seed, plus the canonical digest of the results.
pub fn run_criteria(seed: u64) -> Result<(Vec<CriterionOutcome>, Vec<u8>), CliError> {
    let outcomes = vec![
        c1_entropy_doubling(seed)?,
        c2_ornstein_weiss(seed)?,
        c3_ball_cylinder_oracle(seed)?,
        c4_minimal_period_oracle()?,
        c5_minimal_return_ratio(seed)?,
        c6_katok(seed)?,
        c7_pressure(seed)?,
        c8_dimension_recurrence(seed)?,
        c9_inequality_bundles(seed)?,
        c10_property_suites(seed)?,
    ];
    let bytes = canonical_bytes(&outcomes)?;
    Ok((outcomes, bytes))
}

/// Run the whole suite twice and append the reproducibility criterion.
pub fn run_acceptance(seed: u64) -> Result<Vec<CriterionOutcome>, CliError> {
    let (mut outcomes, first) = run_criteria(seed)?;
    let t = Instant::now();
    let (_, second) = run_criteria(seed)?;
    let passed = first == second;
    outcomes.push(CriterionOutcome {
        index: 11,
        name: "reproducibility".into(),
        passed,
        detail: if passed {
            format!("two runs at seed {seed} agree byte for byte ({} bytes)", first.len())
        } else {
            format!(
                "digest mismatch at seed {seed}: {} vs {} bytes",
                first.len(),
                second.len()
            )
        },
        seconds: t.elapsed().as_secs_f64(),
    });
    Ok(outcomes)
}

fn words_of(sys: &SystemSpec, count: usize, len: usize) -> Result<Vec<SymbolicWord>, CliError> {
    let mut out = Vec::with_capacity(count);
    for p in sys.sample_typical(count, len)? {
        let Point::Symbols(w) = p else {
            return Err(CliError::Runtime("expected a symbolic sample".into()));
        };
        out.push(SymbolicWord::new(w, sys.alphabet())?);
    }
    Ok(out)
}

fn coord_orbits(
    sys: &SystemSpec,
    count: usize,
    len: usize,
) -> Result<Vec<OrbitBuffer>, CliError> {
    let points = sys.sample_typical(count, 0)?;
    let orbits = points
        .par_iter()
        .map(|p| sys.orbit(p, len))
        .collect::<recurrence_lab::Result<Vec<_>>>()?;
    Ok(orbits)
}

fn shift_orbits(
    sys: &SystemSpec,
    count: usize,
    len: usize,
    depth_max: usize,
) -> Result<Vec<OrbitBuffer>, CliError> {
    let points = sys.sample_typical(count, len + depth_max)?;
    let orbits = points
        .par_iter()
        .map(|p| sys.orbit(p, len))
        .collect::<recurrence_lab::Result<Vec<_>>>()?;
    Ok(orbits)
}

fn pow2_ladder(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|m| 0.5f64.powi(m)).collect()
}

/// Entropy of the doubling map from dynamical-ball return times, measured
/// single-threaded against a wall-clock budget.
fn c1_entropy_doubling(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::circle(2, split_seed(seed, 1))?;
    let n_ladder: Vec<usize> = (6..=18).collect();
    let eps_ladder = pow2_ladder(2, 8);
    let orbit_len = 1_000_000;
    let mut grids = Vec::with_capacity(50);
    for p in sys.sample_typical(50, 0)? {
        let orb = sys.orbit(&p, orbit_len)?;
        grids.push(compute_grid(&orb, &n_ladder, &eps_ladder)?);
    }
    let report = entropy_from_return_times(&grids)?.with_target(LN_2);
    let rel = report.relative_error.unwrap_or(f64::INFINITY);
    let secs = t.elapsed().as_secs_f64();
    let passed = rel <= 0.07 && secs < 60.0;
    Ok(CriterionOutcome {
        index: 1,
        name: "entropy-doubling-map".into(),
        passed,
        detail: format!(
            "extrapolated {:.4} vs ln 2 = {:.4}, rel err {:.4} (budget 0.07)",
            report.extrapolated, LN_2, rel
        ),
        seconds: secs,
    })
}

/// Cylinder first returns on a biased Bernoulli shift recover its entropy.
fn c2_ornstein_weiss(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::full_shift(vec![0.3, 0.7], split_seed(seed, 2))?;
    let target = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
    let n_ladder: Vec<usize> = (8..=20).collect();
    let words = words_of(&sys, 100, 1 << 20)?;
    let report = entropy_ornstein_weiss(&words, &n_ladder)?.with_target(target);
    let rel = report.relative_error.unwrap_or(f64::INFINITY);
    let passed = rel <= 0.05;
    Ok(CriterionOutcome {
        index: 2,
        name: "ornstein-weiss-bernoulli".into(),
        passed,
        detail: format!(
            "extrapolated {:.4} vs {:.4}, rel err {:.4} (budget 0.05)",
            report.extrapolated, target, rel
        ),
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// On the full shift, every uncensored return time to a dynamical ball of
/// radius 2^-m equals the return time of the depth-(n+m) cylinder, checked
/// against the independent Z-scan on the raw word.
fn c3_ball_cylinder_oracle(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::full_shift(vec![0.5, 0.5], split_seed(seed, 3))?;
    let n_ladder: Vec<usize> = (1..=12).collect();
    let ms: Vec<usize> = (0..=4).collect();
    let eps_ladder: Vec<f64> = ms.iter().map(|&m| 0.5f64.powi(m as i32)).collect();
    let orbit_len = 2000;
    let points = sys.sample_typical(1000, orbit_len + 16)?;
    let mismatches: usize = points
        .par_iter()
        .map(|p| -> Result<usize, CliError> {
            let orb = sys.orbit(p, orbit_len)?;
            let grid = compute_grid(&orb, &n_ladder, &eps_ladder)?;
            let Point::Symbols(w) = p else { unreachable!() };
            let word =
                SymbolicWord::new(w.clone(), 2)?;
            let mut bad = 0;
            for (ei, &m) in ms.iter().enumerate() {
                for (ni, &n) in n_ladder.iter().enumerate() {
                    if let Obs::Observed(r) = grid.r[ei][ni] {
                        match partition_return_time(&word, n + m)? {
                            Obs::Observed(o) if o == r => {}
                            _ => bad += 1,
                        }
                    }
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let secs = t.elapsed().as_secs_f64();
    let passed = mismatches == 0 && secs < 30.0;
    Ok(CriterionOutcome {
        index: 3,
        name: "ball-cylinder-oracle".into(),
        passed,
        detail: format!("{mismatches} mismatches over 1000 sequences, n<=12, m<=4"),
        seconds: secs,
    })
}

/// Failure-function minimal period against brute force on every binary word
/// of length at most 14.
fn c4_minimal_period_oracle() -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let mut mismatches = 0usize;
    let mut total = 0usize;
    for l in 1..=14usize {
        for bits in 0..(1u32 << l) {
            let w: Vec<u8> = (0..l).map(|i| ((bits >> i) & 1) as u8).collect();
            let fast = {
                let word =
                    SymbolicWord::new(w.clone(), 2)?;
                min_return_prefix_profile(&word, &[l])?[0]
            };
            let brute = (1..=l)
                .find(|&p| (0..l - p).all(|i| w[i] == w[i + p]))
                .unwrap();
            if fast != brute {
                mismatches += 1;
            }
            total += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let passed = mismatches == 0 && total == 32766 && secs < 10.0;
    Ok(CriterionOutcome {
        index: 4,
        name: "minimal-period-oracle".into(),
        passed,
        detail: format!("{mismatches} mismatches over {total} words"),
        seconds: secs,
    })
}

/// Minimal periods of typical length-200 prefixes are near-maximal.
fn c5_minimal_return_ratio(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::full_shift(vec![0.5, 0.5], split_seed(seed, 5))?;
    let n = 200usize;
    let words = words_of(&sys, 10_000, n)?;
    let report = minimal_return_ratio(&words, &[n])?;
    let med = report.extrapolated;
    let passed = (0.95..=1.0).contains(&med);
    Ok(CriterionOutcome {
        index: 5,
        name: "minimal-return-ratio".into(),
        passed,
        detail: format!("median p(w)/n = {med:.4} at n = {n} over 10^4 words"),
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// Katok cylinder-count growth at mass 1/2 recovers ln 2, and is stable in
/// the mass parameter.
fn c6_katok(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::full_shift(vec![0.5, 0.5], split_seed(seed, 6))?;
    let n_ladder: Vec<usize> = (4..=14).collect();
    let words = words_of(&sys, 1_000_000, 14)?;
    let half = entropy_katok(&words, &n_ladder, 0.5)?.with_target(LN_2);
    let rel = half.relative_error.unwrap_or(f64::INFINITY);
    let lo = entropy_katok(&words, &n_ladder, 0.25)?.extrapolated;
    let hi = entropy_katok(&words, &n_ladder, 0.75)?.extrapolated;
    let spread = (lo - hi).abs();
    let passed = rel <= 0.05 && spread <= 0.05;
    Ok(CriterionOutcome {
        index: 6,
        name: "katok-cylinder-growth".into(),
        passed,
        detail: format!(
            "slope {:.4} at c=1/2 (rel err {:.4}); |c=0.25 - c=0.75| = {spread:.4}",
            half.extrapolated, rel
        ),
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// Pressure: a constant potential shifts the entropy slope exactly, and the
/// coordinate potential lands at ln 2 + 1/2 on the doubling map.
fn c7_pressure(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::circle(2, split_seed(seed, 7))?;
    let n_ladder: Vec<usize> = (8..=16).collect();
    let eps_ladder = pow2_ladder(2, 4);
    let orbits = coord_orbits(&sys, 40, 1 << 17)?;
    let grids = orbits
        .par_iter()
        .map(|o| compute_grid(o, &n_ladder, &eps_ladder))
        .collect::<recurrence_lab::Result<Vec<_>>>()?;
    let entropy = entropy_from_return_times(&grids)?;
    let constant = pressure_estimate(
        &sys,
        &orbits,
        &grids,
        &PotentialSpec::Constant { value: 0.25 },
    )?;
    let structural = (constant.extrapolated - entropy.extrapolated - 0.25).abs();
    let coord = pressure_estimate(&sys, &orbits, &grids, &PotentialSpec::Coordinate)?
        .with_target(LN_2 + 0.5);
    let rel = coord.relative_error.unwrap_or(f64::INFINITY);
    let passed = structural <= 1e-9 && rel <= 0.07;
    Ok(CriterionOutcome {
        index: 7,
        name: "pressure".into(),
        passed,
        detail: format!(
            "constant shift residual {structural:.2e}; phi(x)=x slope {:.4} vs {:.4} (rel err {:.4})",
            coord.extrapolated,
            LN_2 + 0.5,
            rel
        ),
        seconds: t.elapsed().as_secs_f64(),
    })
}

struct RangeCheck {
    label: &'static str,
    value: f64,
    target: f64,
    tol: f64,
}

impl RangeCheck {
    fn ok(&self) -> bool {
        (self.value - self.target).abs() <= self.tol
    }
}

/// Local dimension, recurrence rates, and minimal recurrence rates on the
/// doubling map with Lebesgue, then dimension and recurrence rate under the
/// Bernoulli(0.7) coding metric.
fn c8_dimension_recurrence(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let mut checks: Vec<RangeCheck> = Vec::new();

    {
        let sys = SystemSpec::circle(2, split_seed(seed, 8))?;
        let radii = pow2_ladder(3, 10);
        let orbits = coord_orbits(&sys, 50, 400_000)?;
        let centers: Vec<Point> = orbits.iter().skip(1).map(|o| o.seed_point()).collect();
        let dim = pointwise_dimension(&orbits[0], &centers, &radii, 4)?;
        let rec = recurrence_rate(&orbits, &radii, radii.len())?;
        let min_rec = min_recurrence_rate(&orbits, &radii, radii.len())?;
        let inv_ln2 = 1.0 / LN_2;
        checks.extend([
            RangeCheck { label: "lebesgue dim lower", value: dim.lower.extrapolated, target: 1.0, tol: 0.1 },
            RangeCheck { label: "lebesgue dim upper", value: dim.upper.extrapolated, target: 1.0, tol: 0.1 },
            RangeCheck { label: "lebesgue rec lower", value: rec.lower.extrapolated, target: 1.0, tol: 0.1 },
            RangeCheck { label: "lebesgue rec upper", value: rec.upper.extrapolated, target: 1.0, tol: 0.1 },
            RangeCheck { label: "lebesgue min-rec lower", value: min_rec.lower.extrapolated, target: inv_ln2, tol: 0.15 },
            RangeCheck { label: "lebesgue min-rec upper", value: min_rec.upper.extrapolated, target: inv_ln2, tol: 0.15 },
        ]);
    }

    {
        let sys = SystemSpec::full_shift(vec![0.7, 0.3], split_seed(seed, 88))?;
        let target = -(0.7f64 * 0.7f64.ln() + 0.3 * 0.3f64.ln()) / LN_2;
        let radii = pow2_ladder(3, 9);
        let depth_max = OrbitBuffer::shift_agreement_depth(*radii.last().unwrap())?;
        let orbits = shift_orbits(&sys, 60, 1 << 16, depth_max)?;
        let center_words = sys.sample_typical(60, depth_max)?;
        let dim = pointwise_dimension(&orbits[0], &center_words, &radii, radii.len())?;
        let rec = recurrence_rate(&orbits, &radii, radii.len())?;
        checks.extend([
            RangeCheck { label: "bernoulli dim lower", value: dim.lower.extrapolated, target, tol: 0.1 },
            RangeCheck { label: "bernoulli dim upper", value: dim.upper.extrapolated, target, tol: 0.1 },
            RangeCheck { label: "bernoulli rec lower", value: rec.lower.extrapolated, target, tol: 0.1 },
            RangeCheck { label: "bernoulli rec upper", value: rec.upper.extrapolated, target, tol: 0.1 },
        ]);
    }

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.ok())
        .map(|c| format!("{} = {:.4} (want {:.4} +- {})", c.label, c.value, c.target, c.tol))
        .collect();
    let summary: Vec<String> = checks
        .iter()
        .map(|c| format!("{} {:.3}", c.label, c.value))
        .collect();
    Ok(CriterionOutcome {
        index: 8,
        name: "dimension-recurrence".into(),
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            summary.join(", ")
        } else {
            format!("out of range: {}", failed.join("; "))
        },
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn circle_bundle(sys: &SystemSpec) -> Result<ReportBundle, CliError> {
    let n_ladder: Vec<usize> = (5..=14).collect();
    // Keep every radius below 1/degree: at eps = 1/m the ball boundary
    // aligns with the m-adic partition and Bowen balls pick up satellite
    // components, so the return-time slope reads low.
    let eps_ladder = pow2_ladder(3, 5);
    let radii = pow2_ladder(3, 10);
    let orbits = coord_orbits(sys, 120, 400_000)?;
    let grids = orbits
        .par_iter()
        .map(|o| compute_grid(o, &n_ladder, &eps_ladder))
        .collect::<recurrence_lab::Result<Vec<_>>>()?;
    let entropy = entropy_from_return_times(&grids)?;
    let (lyapunov, _) = lyapunov_exponent(sys, &orbits)?;
    let centers: Vec<Point> = orbits.iter().skip(1).map(|o| o.seed_point()).collect();
    let dim = pointwise_dimension(&orbits[0], &centers, &radii, 4)?;
    let rec = recurrence_rate(&orbits, &radii, radii.len())?;
    let min_rec = min_recurrence_rate(&orbits, &radii, radii.len())?;
    Ok(ReportBundle {
        entropy,
        lyapunov,
        dimension_lower: dim.lower,
        dimension_upper: dim.upper,
        recurrence_lower: rec.lower,
        recurrence_upper: rec.upper,
        min_recurrence_lower: min_rec.lower,
        min_recurrence_upper: min_rec.upper,
    })
}

/// The full inequality bundle passes on expanding circle maps of degree 2,
/// 3, 4, and a deliberately corrupted bundle fails.
fn c9_inequality_bundles(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let tol = ToleranceSpec::default();
    let mut notes = Vec::new();
    let mut all_pass = true;
    let mut keep_for_control = None;
    for degree in [2u32, 3, 4] {
        let sys = SystemSpec::circle(degree, split_seed(seed, 900 + degree as u64))?;
        let bundle = circle_bundle(&sys)?;
        let verdicts = check_inequalities(&bundle, &tol);
        let failed: Vec<&str> = verdicts
            .iter()
            .filter(|v| v.status != VerdictStatus::Pass)
            .map(|v| v.relation.as_str())
            .collect();
        if failed.is_empty() {
            notes.push(format!("degree {degree}: 8/8 PASS"));
        } else {
            all_pass = false;
            notes.push(format!("degree {degree}: not passed: {}", failed.join(", ")));
        }
        if degree == 2 {
            keep_for_control = Some(bundle);
        }
    }
    // Negative control: inflate the dimension estimates and expect a FAIL.
    let mut control = keep_for_control.expect("degree 2 bundle");
    control.dimension_lower = scalar_report(
        Quantity::DimLower,
        control.dimension_lower.extrapolated * 1.5,
        control.dimension_lower.sample_count,
    );
    control.dimension_upper = scalar_report(
        Quantity::DimUpper,
        control.dimension_upper.extrapolated * 1.5,
        control.dimension_upper.sample_count,
    );
    let control_fails = check_inequalities(&control, &tol)
        .iter()
        .any(|v| v.status == VerdictStatus::Fail);
    if control_fails {
        notes.push("perturbed control: FAIL as expected".into());
    } else {
        all_pass = false;
        notes.push("perturbed control: unexpectedly passed".into());
    }
    Ok(CriterionOutcome {
        index: 9,
        name: "inequality-bundles".into(),
        passed: all_pass && control_fails,
        detail: notes.join("; "),
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// Structural properties of the return-time scan over 10^4 randomized
/// words: monotonicity in depth and radius, S <= R, the shifted-orbit
/// domination, and terminal censoring.
fn c10_property_suites(seed: u64) -> Result<CriterionOutcome, CliError> {
    let t = Instant::now();
    let sys = SystemSpec::full_shift(vec![0.5, 0.5], split_seed(seed, 10))?;
    let n_ladder: Vec<usize> = (1..=12).collect();
    let eps_ladder = pow2_ladder(0, 4);
    let orbit_len = 280usize;
    let word_len = 300usize;
    let points = sys.sample_typical(10_000, word_len)?;
    #[derive(Default)]
    struct Tally {
        mono_n_eps: usize,
        s_le_r: usize,
        shifted: usize,
        censoring: usize,
    }
    let tallies = points
        .par_iter()
        .map(|p| -> Result<Tally, CliError> {
            let mut t = Tally::default();
            let orb = sys.orbit(p, orbit_len)?;
            let grid = compute_grid(&orb, &n_ladder, &eps_ladder)?;
            check_grid_properties(&grid, &mut t.mono_n_eps, &mut t.s_le_r, &mut t.censoring);
            let shifted = sys.orbit(&sys.iterate(p, 1)?, orbit_len - 1)?;
            let prof = recurrence_lab::recurrence::return_time_profile(&orb, 0.25, 10)?;
            let prof_s = recurrence_lab::recurrence::return_time_profile(&shifted, 0.25, 10)?;
            for n in 2..=10usize {
                if let (Obs::Observed(rn), Obs::Observed(rm)) = (prof[n - 1], prof_s[n - 2]) {
                    if rn < rm {
                        t.shifted += 1;
                    }
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = Tally::default();
    for t in tallies {
        total.mono_n_eps += t.mono_n_eps;
        total.s_le_r += t.s_le_r;
        total.shifted += t.shifted;
        total.censoring += t.censoring;
    }
    let violations = total.mono_n_eps + total.s_le_r + total.shifted + total.censoring;
    Ok(CriterionOutcome {
        index: 10,
        name: "property-suites".into(),
        passed: violations == 0,
        detail: format!(
            "violations over 10^4 cases: monotone {}, S<=R {}, shifted {}, censoring {}",
            total.mono_n_eps, total.s_le_r, total.shifted, total.censoring
        ),
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn check_grid_properties(
    grid: &ReturnTimeGrid,
    mono: &mut usize,
    s_le_r: &mut usize,
    censoring: &mut usize,
) {
    let levels = grid.eps_ladder.len();
    let depths = grid.n_ladder.len();
    for ei in 0..levels {
        for ni in 0..depths {
            if let (Obs::Observed(r), Obs::Observed(s)) = grid.cell(ei, ni) {
                if s > r {
                    *s_le_r += 1;
                }
            }
            if ni > 0 {
                match (grid.r[ei][ni - 1], grid.r[ei][ni]) {
                    (Obs::Observed(a), Obs::Observed(b)) if b < a => *mono += 1,
                    (Obs::Censored { .. }, Obs::Observed(_)) => *censoring += 1,
                    _ => {}
                }
            }
            if ei > 0 {
                match (grid.r[ei - 1][ni], grid.r[ei][ni]) {
                    (Obs::Observed(wide), Obs::Observed(narrow)) if narrow < wide => *mono += 1,
                    (Obs::Censored { .. }, Obs::Observed(_)) => *censoring += 1,
                    _ => {}
                }
            }
        }
    }
}
