use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use recurrence_lab::estimators::{
    check_inequalities, entropy_from_return_times, entropy_katok, entropy_ornstein_weiss,
    lyapunov_exponent, min_recurrence_rate, minimal_return_ratio, pointwise_dimension,
    pressure_estimate, recurrence_rate, EpsFit, EstimateReport, PotentialSpec, Quantity,
    ReportBundle, ToleranceSpec, Verdict, VerdictStatus,
};
use recurrence_lab::recurrence::{compute_grid, write_grids_csv, ReturnTimeGrid};
use recurrence_lab::systems::{MapKind, OrbitBuffer, SymbolicWord, SystemSpec};

use crate::config::ExperimentConfig;
use crate::{plot, verify, CliError};

#[derive(Parser, Debug)]
#[command(name = "recurrence-lab", version, about = "Return-time statistics lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON). Required by every subcommand except
    /// `verify` and `plot`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample-count override.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dynamical-ball, cylinder, and Katok entropy estimates side by side.
    Entropy,
    /// Pressure estimate for the configured potential.
    Pressure,
    /// Minimal-return ratio S_n/n along itineraries.
    MinimalReturn,
    /// Pointwise dimension, recurrence rates, and their verdicts.
    Dimension,
    /// Full inequality verdict set for one system.
    Inequalities,
    /// Run the acceptance suite and report per-criterion pass/fail.
    Verify,
    /// Render an SVG from a grids CSV produced by a prior run.
    Plot {
        /// Path to the CSV.
        csv: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Verify => run_verify(&cli),
        Command::Plot { ref csv } => {
            let out_dir = out_dir(&cli, None);
            fs::create_dir_all(&out_dir)?;
            let svg = out_dir.join("grids.svg");
            plot::render_csv(csv, &svg)?;
            println!("wrote {}", svg.display());
            Ok(())
        }
        _ => run_experiment(&cli),
    }
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this subcommand".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = cli.samples {
        cfg.sample_count = samples;
        cfg.validate()?;
    }
    Ok(cfg)
}

/// Orbits plus grids for one config; the shared substrate of the estimator
/// subcommands.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub sys: SystemSpec,
    pub orbits: Vec<OrbitBuffer>,
    pub grids: Vec<ReturnTimeGrid>,
}

pub fn build_experiment(cfg: ExperimentConfig) -> Result<Experiment, CliError> {
    let sys = cfg.system()?;
    let finest = cfg
        .eps_ladder
        .last()
        .copied()
        .unwrap()
        .min(*cfg.radii().last().unwrap());
    let word_len = shift_word_len(&sys, cfg.orbit_len, finest)?;
    let points = sys.sample_typical(cfg.sample_count, word_len)?;
    let orbits: Vec<OrbitBuffer> = points
        .par_iter()
        .map(|p| sys.orbit(p, cfg.orbit_len))
        .collect::<recurrence_lab::Result<_>>()?;
    let grids: Vec<ReturnTimeGrid> = orbits
        .par_iter()
        .map(|o| compute_grid(o, &cfg.n_ladder, &cfg.eps_ladder))
        .collect::<recurrence_lab::Result<_>>()?;
    Ok(Experiment {
        cfg,
        sys,
        orbits,
        grids,
    })
}

/// Shift orbits need lookahead symbols past the orbit length so the finest
/// radius stays decidable.
pub fn shift_word_len(
    sys: &SystemSpec,
    orbit_len: usize,
    finest_radius: f64,
) -> Result<usize, CliError> {
    if !matches!(sys.kind, MapKind::FullShift { .. }) {
        return Ok(orbit_len);
    }
    let depth = OrbitBuffer::shift_agreement_depth(finest_radius)?;
    Ok(orbit_len + depth)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn write_grids(dir: &Path, grids: &[ReturnTimeGrid]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_grids_csv(grids, &mut buf)?;
    fs::write(dir.join("grids.csv"), buf)?;
    Ok(())
}

/// Itineraries for cylinder-based estimators, one per sample orbit.
fn sample_itineraries(
    sys: &SystemSpec,
    count: usize,
    len: usize,
) -> Result<Vec<SymbolicWord>, CliError> {
    let points = sys.sample_typical(count, len)?;
    let words: Vec<SymbolicWord> = points
        .par_iter()
        .map(|p| sys.itinerary(p, len).map(|it| it.word))
        .collect::<recurrence_lab::Result<_>>()?;
    Ok(words)
}

fn with_analytic_entropy(sys: &SystemSpec, report: EstimateReport) -> EstimateReport {
    match &sys.analytic {
        Some(a) => report.with_target(a.entropy),
        None => report,
    }
}

fn run_experiment(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg));
    match cli.command {
        Command::Entropy => {
            let exp = build_experiment(cfg)?;
            write_grids(&dir, &exp.grids)?;
            let entropy =
                with_analytic_entropy(&exp.sys, entropy_from_return_times(&exp.grids)?);
            let n_max = *exp.cfg.n_ladder.last().unwrap();
            // Cylinder returns at depth n need room to recur, so the
            // Ornstein-Weiss words run the full orbit length; the
            // cylinder-count estimator instead wants many short words.
            let ow_words = sample_itineraries(&exp.sys, exp.cfg.sample_count, exp.cfg.orbit_len)?;
            let ow = with_analytic_entropy(
                &exp.sys,
                entropy_ornstein_weiss(&ow_words, &exp.cfg.n_ladder)?,
            );
            let word_count = exp.cfg.sample_count.max(20_000);
            let words = sample_itineraries(&exp.sys, word_count, n_max + 1)?;
            let katok = with_analytic_entropy(
                &exp.sys,
                entropy_katok(&words, &exp.cfg.n_ladder, exp.cfg.katok_mass)?,
            );
            #[derive(Serialize)]
            struct EntropyOut {
                entropy: EstimateReport,
                ornstein_weiss: EstimateReport,
                katok: EstimateReport,
            }
            write_json(
                &dir,
                "entropy_report.json",
                &EntropyOut {
                    entropy,
                    ornstein_weiss: ow,
                    katok,
                },
            )?;
            println!("wrote {}", dir.join("entropy_report.json").display());
            Ok(())
        }
        Command::Pressure => {
            let phi = cfg
                .potential
                .clone()
                .unwrap_or(PotentialSpec::Constant { value: 0.0 });
            let exp = build_experiment(cfg)?;
            write_grids(&dir, &exp.grids)?;
            let mut report = pressure_estimate(&exp.sys, &exp.orbits, &exp.grids, &phi)?;
            if let (Some(a), PotentialSpec::Constant { value }) = (&exp.sys.analytic, &phi) {
                report = report.with_target(a.entropy + value);
            }
            write_json(&dir, "pressure_report.json", &report)?;
            println!("wrote {}", dir.join("pressure_report.json").display());
            Ok(())
        }
        Command::MinimalReturn => {
            let sys = cfg.system()?;
            let n_max = *cfg.n_ladder.last().unwrap();
            let words = sample_itineraries(&sys, cfg.sample_count, n_max)?;
            let report = minimal_return_ratio(&words, &cfg.n_ladder)?.with_target(1.0);
            write_json(&dir, "minimal_return_report.json", &report)?;
            println!("wrote {}", dir.join("minimal_return_report.json").display());
            Ok(())
        }
        Command::Dimension | Command::Inequalities => {
            let tol = ToleranceSpec {
                rate_abs: cfg.tolerances.rate_abs,
                min_rate_abs: cfg.tolerances.min_rate_abs,
                ..ToleranceSpec::default()
            };
            let exp = build_experiment(cfg)?;
            write_grids(&dir, &exp.grids)?;
            let bundle = assemble_bundle(&exp)?;
            let verdicts = check_inequalities(&bundle, &tol);
            write_json(&dir, "dimension_report.json", &bundle)?;
            write_json(&dir, "verdicts.json", &verdicts)?;
            println!("wrote {}", dir.join("verdicts.json").display());
            fail_on_verdicts(&verdicts)
        }
        Command::Verify | Command::Plot { .. } => unreachable!("handled in run()"),
    }
}

/// Full estimate bundle for the inequality checks on one system.
pub fn assemble_bundle(exp: &Experiment) -> Result<ReportBundle, CliError> {
    let radii = exp.cfg.radii().to_vec();
    // Local slopes wobble at small windows; integer-valued minimal returns
    // and noisy ball returns are fit over the full radius range, pointwise
    // dimension over short windows.
    let window = radii.len().clamp(2, 4);
    let full = radii.len();
    let entropy = with_analytic_entropy(&exp.sys, entropy_from_return_times(&exp.grids)?);
    let lyapunov = match exp.sys.kind {
        MapKind::FullShift { .. } => {
            // The shift metric halves per step; expansion is exactly log 2.
            scalar_report(Quantity::Lyapunov, 2.0f64.ln(), exp.orbits.len())
        }
        _ => lyapunov_exponent(&exp.sys, &exp.orbits)?.0,
    };
    let cloud = &exp.orbits[0];
    let centers: Vec<_> = exp
        .orbits
        .iter()
        .skip(1)
        .map(|o| o.seed_point())
        .collect();
    let dim = pointwise_dimension(cloud, &centers, &radii, window)?;
    let rec = recurrence_rate(&exp.orbits, &radii, full)?;
    let min_rec = min_recurrence_rate(&exp.orbits, &radii, full)?;
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

pub fn scalar_report(quantity: Quantity, value: f64, sample_count: usize) -> EstimateReport {
    EstimateReport {
        quantity,
        per_eps_fits: vec![EpsFit {
            eps: 0.0,
            slope: value,
            intercept: 0.0,
            r_squared: 1.0,
            n_window: 1,
            censored_fraction: 0.0,
        }],
        extrapolated: value,
        target: None,
        relative_error: None,
        sample_count,
    }
}

fn fail_on_verdicts(verdicts: &[Verdict]) -> Result<(), CliError> {
    let failed: Vec<&str> = verdicts
        .iter()
        .filter(|v| v.status == VerdictStatus::Fail)
        .map(|v| v.relation.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Fail(failed.join("; ")))
    }
}

fn run_verify(cli: &Cli) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or(7);
    let dir = out_dir(cli, None);
    let outcomes = verify::run_acceptance(seed)?;
    for o in &outcomes {
        println!(
            "criterion {:2} {} [{}] {} ({:.1}s)",
            o.index,
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            o.seconds
        );
    }
    #[derive(Serialize)]
    struct AcceptanceOut<'a> {
        seed: u64,
        outcomes: &'a [verify::CriterionOutcome],
    }
    write_json(
        &dir,
        "acceptance.json",
        &AcceptanceOut {
            seed,
            outcomes: &outcomes,
        },
    )?;
    if outcomes.iter().all(|o| o.passed) {
        Ok(())
    } else {
        let failed: Vec<String> = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| format!("criterion {}", o.index))
            .collect();
        Err(CliError::Fail(failed.join("; ")))
    }
}
