//! `ncifs` command dispatch.
//!
//! Every command reads one system (a JSON config file or a gallery name),
//! calls the matching library operation and writes CSV or JSON to stdout or
//! `--out`. Exit codes: 0 success, 1 refusal or ambiguity, 2 bad input.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncifs::classify::{self, DistanceMode, MembershipOptions, Thresholds};
use ncifs::config::{self, CONFIG_VALIDATION_DEPTH};
use ncifs::gallery::{self, GALLERY_NAMES};
use ncifs::limit_set::{self, SampleStrategy, DEFAULT_SCALE_COUNT};
use ncifs::pressure::{self, BowenOptions, CertificateOutcome, CoverStrategy, DEFAULT_ENUMERATION_BUDGET, DEFAULT_HORIZON, DEFAULT_TOL};
use ncifs::sequence::SequenceSpec;
use ncifs::subsystems;
use ncifs::{validate_system, System};
use serde::Serialize;
use serde_json::{json, Value};

/// Environment variable overriding the default enumeration budget.
pub const BUDGET_ENV: &str = "NCIFS_ENUM_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Ncifs(#[from] ncifs::Error),
    #[error("{0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ncifs::Error as E;
        match self {
            CliError::Ncifs(
                E::SignAmbiguous { .. }
                | E::HypothesisViolated(_)
                | E::BudgetExceeded { .. }
                | E::NotMaterializable { .. }
                | E::NotSampleable { .. }
                | E::DivergentLevel { .. }
                | E::Degenerate(_)
                | E::HorizonTooSmall(_),
            ) => 1,
            CliError::Ncifs(_) | CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ncifs", version, about = "Pressure, Bowen dimension and dimension certificates for non-autonomous conformal IFS")]
pub struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Default enumeration budget for exact sums and covers.
    #[arg(long, global = true, env = BUDGET_ENV, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct SystemArgs {
    /// JSON system config.
    #[arg(long, conflicts_with = "gallery")]
    pub config: Option<PathBuf>,
    /// Gallery system name.
    #[arg(long)]
    pub gallery: Option<String>,
    /// Gallery parameters as a JSON object.
    #[arg(long, default_value = "{}", requires = "gallery")]
    pub params: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CertifyKind {
    Lower,
    UpperNatural,
    UpperHull,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Uniform,
    Weighted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Uniform,
    Pointwise,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check contraction and open set condition on the first levels.
    Validate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = CONFIG_VALIDATION_DEPTH)]
        depth: usize,
    },
    /// Pressure band estimates on a t grid (CSV: t, lP_hat, uP_hat).
    Pressure {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 11)]
        t_steps: usize,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Zero of the pressure band by bisection (JSON).
    Bowen {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Modified sums series (CSV), or a dimension certificate with `--certify`.
    Tilde {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, value_enum)]
        certify: Option<CertifyKind>,
    },
    /// Growth, balance, applicability and optionally trichotomy and membership.
    Classify {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        horizon: Option<usize>,
        /// Exponent at which to classify the Hausdorff measure.
        #[arg(long)]
        measure_at: Option<f64>,
        #[arg(long)]
        membership: bool,
    },
    /// Finite subsystem by mass, or balance truncation with `--alpha`.
    Truncate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, conflicts_with = "alpha")]
        delta: Option<f64>,
        /// Growth sequence such as `n`, `pow:2` or `2^(n^2)`.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 20)]
        levels: usize,
    },
    /// Points near the limit set (CSV, one column per coordinate).
    Sample {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
        strategy: StrategyArg,
        /// Exponent for the weighted strategy.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Box-counting slope of sampled points (JSON).
    Boxdim {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_SCALE_COUNT)]
        scales: usize,
    },
    /// Natural cover at level n and its Hausdorff sum (JSON).
    Cover {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        cells: bool,
    },
    /// List gallery systems, or emit one as a config plus construction data.
    Gallery {
        name: Option<String>,
        #[arg(long, default_value = "{}")]
        params: String,
    },
    /// Expected pressure (or its zero) for a random driver file.
    Random {
        #[arg(long)]
        driver: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Evaluate at this t instead of solving for the zero.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Distance between two systems (JSON).
    Distance {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, conflicts_with = "other_gallery")]
        other_config: Option<PathBuf>,
        #[arg(long)]
        other_gallery: Option<String>,
        #[arg(long, default_value = "{}")]
        other_params: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Uniform)]
        mode: ModeArg,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
    /// Validation, classes, applicability, Bowen estimate and certificates (JSON).
    Report {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

fn parse_json(text: &str, what: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(config: &Option<PathBuf>, gallery: &Option<String>, params: &str) -> Result<System> {
    match (config, gallery) {
        (Some(path), _) => Ok(config::parse_config(&read(path)?)?),
        (None, Some(name)) => Ok(gallery::build(name, &parse_json(params, "--params")?)?),
        (None, None) => Err(CliError::Input("give --config or --gallery".into())),
    }
}

fn load_system(args: &SystemArgs) -> Result<System> {
    load(&args.config, &args.gallery, &args.params)
}

fn horizon_for(sys: &System, requested: Option<usize>) -> usize {
    sys.clamp_horizon(requested.unwrap_or(DEFAULT_HORIZON))
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(out: &mut dyn Write, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| CliError::Io(e.into()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

/// Runs a parsed command, writing to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.out {
        Some(path) => {
            let mut buf = Vec::new();
            let code = execute(cli, &mut buf)?;
            fs::write(path, buf)?;
            Ok(code)
        }
        None => execute(cli, &mut io::stdout().lock()),
    }
}

/// Runs a parsed command against an arbitrary writer; returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Validate { system, depth } => {
            let sys = load_system(system)?;
            let report = validate_system(&sys, sys.clamp_horizon(*depth));
            write_json(out, &report)?;
            Ok(if report.ok() { 0 } else { 1 })
        }
        Command::Pressure { system, t_min, t_max, t_steps, horizon, window } => {
            let sys = load_system(system)?;
            if *t_steps == 0 || !(t_min <= t_max) {
                return Err(CliError::Input("need t_steps ≥ 1 and t_min ≤ t_max".into()));
            }
            let ts: Vec<f64> = (0..*t_steps)
                .map(|i| if *t_steps == 1 { *t_min } else { t_min + (t_max - t_min) * i as f64 / (*t_steps - 1) as f64 })
                .collect();
            let curve = pressure::pressure_curve(&sys, &ts, horizon_for(&sys, *horizon), *window);
            write_csv(out, &["t", "lP_hat", "uP_hat"], curve.iter().map(|e| vec![num(e.t), num(e.lP_hat), num(e.uP_hat)]))?;
            Ok(0)
        }
        Command::Bowen { system, tol, horizon, window } => {
            let sys = load_system(system)?;
            let r = pressure::bowen_dimension(&sys, &BowenOptions { horizon: horizon_for(&sys, *horizon), window: *window, tol: *tol })?;
            write_json(out, &r)?;
            Ok(0)
        }
        Command::Tilde { system, t, horizon, window, certify } => {
            let sys = load_system(system)?;
            let h = horizon_for(&sys, *horizon);
            if let Some(kind) = certify {
                let outcome = certify_at(&sys, *kind, *t, h, *window);
                write_json(out, &outcome)?;
                return Ok(if outcome.is_certified() { 0 } else { 1 });
            }
            let rows = pressure::modified_series(&sys, *t, h);
            write_csv(
                out,
                &["n", "t", "logZ_lower", "logZ_upper", "logZtilde", "rho_n"],
                rows.iter().map(|r| vec![r.n.to_string(), num(r.t), num(r.log_Z_lower), num(r.log_Z_upper), num(r.log_Ztilde), num(r.rho_n)]),
            )?;
            Ok(0)
        }
        Command::Classify { system, horizon, measure_at, membership } => {
            let sys = load_system(system)?;
            let h = horizon_for(&sys, *horizon);
            let app = classify::applicability(&sys, h)?;
            let mut doc = json!({ "horizon": h, "applicability": app });
            if let Some(t) = measure_at {
                doc["trichotomy"] = serde_json::to_value(classify::measure_trichotomy(&sys, *t, h, Thresholds::default())?).unwrap_or(Value::Null);
            }
            if *membership {
                doc["membership"] = serde_json::to_value(classify::class_membership(&sys, h, &MembershipOptions::default())?).unwrap_or(Value::Null);
            }
            write_json(out, &doc)?;
            Ok(0)
        }
        Command::Truncate { system, t, delta, alpha, levels } => {
            let sys = load_system(system)?;
            match (delta, alpha) {
                (Some(delta), _) => {
                    let r = subsystems::truncate_by_mass(&sys, *t, *delta)?;
                    let doc = json!({
                        "t": r.t,
                        "delta": r.delta,
                        "per_level_kept": r.per_level_kept,
                        "pressure_drop_bound": r.pressure_drop_bound,
                        "system": config::config_for(&r.subsystem)?,
                    });
                    write_json(out, &doc)?;
                }
                (None, Some(alpha)) => {
                    let spec: SequenceSpec = alpha.parse().map_err(|e: ncifs::Error| CliError::Input(e.to_string()))?;
                    let sub = subsystems::truncate_for_balance(&sys, *t, spec.clone())?;
                    let n_max = sub.clamp_horizon(*levels);
                    let kept: Vec<Value> = (1..=n_max).map(|n| sub.level(n).count().map_or(Value::Null, Value::from)).collect();
                    let balance = classify::classify_balance(&sub, n_max);
                    write_json(out, &json!({ "t0": t, "alpha": spec.to_string(), "per_level_kept": kept, "balance": balance.klass }))?;
                }
                (None, None) => return Err(CliError::Input("give --delta or --alpha".into())),
            }
            Ok(0)
        }
        Command::Sample { system, seed, depth, count, strategy, t } => {
            let sys = load_system(system)?;
            let strategy = match strategy {
                StrategyArg::Uniform => SampleStrategy::UniformSymbolic,
                StrategyArg::Weighted => SampleStrategy::WeightedByDerivative { t: *t },
            };
            let pts = limit_set::sample_points(&sys, *depth, *count, strategy, *seed)?;
            let header: Vec<String> = (0..sys.dim()).map(|i| format!("x{i}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_csv(out, &header, pts.iter().map(|p| p.iter().map(|&x| num(x)).collect()))?;
            Ok(0)
        }
        Command::Boxdim { system, seed, depth, count, scales } => {
            let sys = load_system(system)?;
            let pts = limit_set::sample_points(&sys, *depth, *count, SampleStrategy::UniformSymbolic, *seed)?;
            let fit = limit_set::box_dimension(&pts, sys.domain(), None, *scales)?;
            write_json(out, &fit)?;
            Ok(0)
        }
        Command::Cover { system, n, t, cells } => {
            let sys = load_system(system)?;
            let cover = limit_set::natural_cover(&sys, *n, cli.budget)?;
            let mut doc = json!({
                "n": n,
                "t": t,
                "cells": cover.len(),
                "log_hausdorff_sum": limit_set::log_hausdorff_sum(&cover, *t),
                "hausdorff_sum": limit_set::hausdorff_sum(&cover, *t),
            });
            if *cells {
                doc["cover"] = serde_json::to_value(&cover).unwrap_or(Value::Null);
            }
            write_json(out, &doc)?;
            Ok(0)
        }
        Command::Gallery { name, params } => {
            let Some(name) = name else {
                for n in GALLERY_NAMES {
                    writeln!(out, "{n}")?;
                }
                return Ok(0);
            };
            let (sys, data) = gallery::build_with_data(name, &parse_json(params, "--params")?)?;
            let mut doc = json!({ "system": config::config_for(&sys)?, "expected": sys.expected() });
            if let Some(d) = data {
                doc["data"] = d;
            }
            write_json(out, &doc)?;
            Ok(0)
        }
        Command::Random { driver, seed, horizon, samples, t, tol } => {
            let d = config::parse_driver(&read(driver)?)?;
            match t {
                Some(t) => write_json(out, &gallery::expected_pressure(&d, *t, *horizon, *samples, *seed)?)?,
                None => write_json(out, &gallery::expected_pressure_root(&d, *horizon, *samples, *seed, *tol)?)?,
            }
            Ok(0)
        }
        Command::Distance { system, other_config, other_gallery, other_params, mode, grid, horizon } => {
            let phi = load_system(system)?;
            let psi = load(other_config, other_gallery, other_params)?;
            let mode = match mode {
                ModeArg::Uniform => DistanceMode::Uniform,
                ModeArg::Pointwise => DistanceMode::Pointwise,
            };
            write_json(out, &classify::system_distance(&phi, &psi, mode, *grid, *horizon)?)?;
            Ok(0)
        }
        Command::Report { system, horizon, tol } => {
            let sys = load_system(system)?;
            write_json(out, &report(&sys, horizon_for(&sys, *horizon), *tol)?)?;
            Ok(0)
        }
    }
}

fn certify_at(sys: &System, kind: CertifyKind, t: f64, h: usize, window: Option<usize>) -> CertificateOutcome {
    match kind {
        CertifyKind::Lower => pressure::lower_bound_certificate(sys, t, h, window),
        CertifyKind::UpperNatural => pressure::upper_bound_certificate(sys, t, h, CoverStrategy::Natural, window),
        CertifyKind::UpperHull => pressure::upper_bound_certificate(sys, t, h, CoverStrategy::LevelHull, window),
    }
}

/// Grid step for the smallest certified level-hull upper bound.
const UPPER_SCAN_STEP: f64 = 0.01;

/// The combined report document.
pub fn report(sys: &System, h: usize, tol: f64) -> Result<Value> {
    let validation = validate_system(sys, sys.clamp_horizon(CONFIG_VALIDATION_DEPTH));
    let app = classify::applicability(sys, h)?;
    let bowen = pressure::bowen_dimension(sys, &BowenOptions { horizon: h, window: None, tol });
    let mut doc = json!({
        "origin": sys.origin(),
        "expected": sys.expected(),
        "horizon": h,
        "validation": validation,
        "growth": app.growth.klass,
        "balance": app.balance.klass,
        "applicability": { "verdicts": app.verdicts, "predicted_dimension": app.predicted_dimension, "formula": app.formula },
    });
    match bowen {
        Ok(b) => {
            let d = sys.dim() as f64;
            let lo = (b.t_star - 0.05).clamp(0.0, d);
            let hi = (b.t_star + 0.05).clamp(0.0, d);
            doc["certificates"] = json!({
                "lower": pressure::lower_bound_certificate(sys, lo, h, None),
                "upper_natural": pressure::upper_bound_certificate(sys, hi, h, CoverStrategy::Natural, None),
                "upper_level_hull": pressure::upper_bound_certificate(sys, hi, h, CoverStrategy::LevelHull, None),
            });
            doc["bowen"] = serde_json::to_value(b).unwrap_or(Value::Null);
        }
        Err(e) => doc["bowen"] = json!({ "error": e.to_string() }),
    }
    // Smallest t on a grid with a level-hull upper certificate; this can sit far below t*.
    let steps = (sys.dim() as f64 / UPPER_SCAN_STEP).round() as usize;
    doc["smallest_upper_level_hull"] = (1..=steps)
        .map(|i| i as f64 * UPPER_SCAN_STEP)
        .map(|t| pressure::upper_bound_certificate(sys, t, h, CoverStrategy::LevelHull, None))
        .find(CertificateOutcome::is_certified)
        .map_or(Value::Null, |c| serde_json::to_value(c).unwrap_or(Value::Null));
    Ok(doc)
}
