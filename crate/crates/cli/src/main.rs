//! Command-line surface: scenario runs, refinement studies, and the
//! catalog listing. Exit codes: 0 = all requested checks passed,
//! 1 = at least one check failed, 2 = usage or configuration error.

mod checks;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use checks::{entropy_curve_data, residual_value, run_check, CheckResult, CurveData};
use config::{parse_config, BuiltConfig, ConfigError, ConfigFile};
use report::{ConvergenceRow, ConvergenceTable, RunReport, ScenarioSummary};
use wentropy_core::convergence::{observed_order, OrderOutcome};
use wentropy_core::geometry::EffectiveDim;

#[derive(Parser)]
#[command(name = "wentropy", version, about = "Weighted-Laplacian heat-flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks requested by a scenario config.
    Run {
        /// Path to the TOML scenario config.
        config: PathBuf,
        /// Output directory for report.json and curve CSVs.
        #[arg(long, default_value = "wentropy-out")]
        out: PathBuf,
        /// Overrides the config's family seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress the per-check stdout summary.
        #[arg(long)]
        quiet: bool,
    },
    /// Rerun the residual-valued checks across grid refinements and fit
    /// the observed order of accuracy.
    Study {
        config: PathBuf,
        /// Number of refinement levels (h, h/2, h/4, ...); at least 3.
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value = "wentropy-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// List the metric/potential/initial/check catalogs.
    ListCatalog,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, seed, quiet } => run_command(&config, &out, seed, quiet),
        Command::Study { config, levels, out, seed, quiet } => {
            study_command(&config, levels, &out, seed, quiet)
        }
        Command::ListCatalog => {
            list_catalog();
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(config_path: &Path, seed: Option<u64>) -> Result<(ConfigFile, BuiltConfig, String), ConfigError> {
    let bytes = std::fs::read(config_path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", config_path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let hash = format!("{:x}", hasher.finalize());
    let text = String::from_utf8(bytes)
        .map_err(|e| ConfigError(format!("{} is not UTF-8: {e}", config_path.display())))?;
    let file = parse_config(&text)?;
    let built = file.build(seed)?;
    Ok((file, built, hash))
}

fn summarize(built: &BuiltConfig) -> ScenarioSummary {
    let grid = &built.scenario.grid;
    ScenarioSummary {
        domain: match grid.domain() {
            wentropy_core::grid::DomainKind::PeriodicTorus => "torus".into(),
            wentropy_core::grid::DomainKind::EuclideanBox => "box".into(),
        },
        dimension: grid.dim(),
        points_per_axis: grid.points_per_axis(),
        h: grid.h(),
        k: built.k,
        k_was_auto: built.k_was_auto,
        m: match built.scenario.m {
            EffectiveDim::Infinite => "inf".into(),
            EffectiveDim::Finite(m) => format!("{m}"),
        },
        t_start: built.scenario.t_grid[0],
        t_end: built.scenario.t_end(),
        samples: built.scenario.t_grid.len(),
    }
}

fn execute_checks(built: &BuiltConfig, quiet: bool) -> (Vec<CheckResult>, Vec<CurveData>) {
    let mut results = Vec::new();
    let mut curves = Vec::new();
    // the entropy curve is emitted whenever the scenario supports it, even
    // with an empty checks list
    match entropy_curve_data(built) {
        Ok(curve) => curves.push(curve),
        Err(e) => {
            if !quiet {
                eprintln!("note: entropy curve skipped ({e})");
            }
        }
    }
    for id in &built.checks {
        let (mut rs, mut cs) = run_check(id, built);
        if !quiet {
            for r in &rs {
                let status = if r.pass { "pass" } else { "FAIL" };
                match (r.min_margin, r.value) {
                    (Some(m), _) => println!("{status}  {}  min margin {m:.3e}", r.id),
                    (_, Some(v)) => println!("{status}  {}  value {v:.3e}", r.id),
                    _ => println!(
                        "{status}  {}  {}",
                        r.id,
                        r.error.as_deref().unwrap_or(&r.detail)
                    ),
                }
            }
        }
        results.append(&mut rs);
        // drop duplicate curves (same name) deterministically
        for c in cs.drain(..) {
            if !curves.iter().any(|k: &CurveData| k.name == c.name) {
                curves.push(c);
            }
        }
    }
    (results, curves)
}

fn run_command(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    quiet: bool,
) -> Result<bool, ConfigError> {
    let clock = Instant::now();
    let (_, built, hash) = load(config_path, seed)?;
    let (results, curves) = execute_checks(&built, quiet);
    let pass = RunReport::aggregate_pass(&results);
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: hash,
        seed: built.seed,
        scenario: summarize(&built),
        checks: results,
        curves: curves.iter().map(|c| format!("curve_{}.csv", c.name)).collect(),
        convergence: Vec::new(),
        pass,
    };
    let files = report::emit(out, &report, &curves)
        .map_err(|e| ConfigError(format!("cannot write report: {e}")))?;
    if !quiet {
        for f in &files {
            println!("wrote {}", f.display());
        }
        println!("verdict: {}", if pass { "pass" } else { "fail" });
    }
    eprintln!("wall time: {:.3}s", clock.elapsed().as_secs_f64());
    Ok(pass)
}

fn study_command(
    config_path: &Path,
    levels: usize,
    out: &Path,
    seed: Option<u64>,
    quiet: bool,
) -> Result<bool, ConfigError> {
    if levels < 3 {
        return Err(ConfigError(format!("study needs at least 3 levels, got {levels}")));
    }
    if levels > 8 {
        return Err(ConfigError(format!("study supports at most 8 levels, got {levels}")));
    }
    let clock = Instant::now();
    let (file, _, hash) = load(config_path, seed)?;
    let base_points = file.grid.points_per_axis;
    // level 0 is the config's grid; each level halves h
    let mut per_level: Vec<(f64, usize, Vec<CheckResult>)> = Vec::new();
    let mut all_pass = true;
    let mut curves_out = Vec::new();
    let mut last_results = Vec::new();
    for level in 0..levels {
        let mut refined = file.clone();
        refined.grid.points_per_axis = base_points << level;
        let built = refined.build(seed)?;
        let (results, curves) = execute_checks(&built, true);
        if !quiet {
            println!(
                "level {level}: n = {}, h = {:.5}",
                built.scenario.grid.points_per_axis(),
                built.scenario.grid.h()
            );
        }
        all_pass &= RunReport::aggregate_pass(&results);
        per_level.push((built.scenario.grid.h(), built.scenario.grid.points_per_axis(), results.clone()));
        if level == 0 {
            curves_out = curves;
            last_results = results;
        }
    }
    // fit per residual-valued check id
    let mut tables = Vec::new();
    for probe in &per_level[0].2 {
        if residual_value(probe).is_none() {
            continue;
        }
        let mut hs = Vec::new();
        let mut residuals = Vec::new();
        let mut rows = Vec::new();
        for (h, n, results) in &per_level {
            if let Some(r) = results.iter().find(|r| r.id == probe.id) {
                let value = residual_value(r).unwrap_or(f64::NAN);
                hs.push(*h);
                residuals.push(value);
                rows.push(ConvergenceRow { h: *h, points_per_axis: *n, residual: value });
            }
        }
        // residuals at the exactness tolerance count as exact (identities
        // like the soliton tensor equation hold up to stencil roundoff)
        let observed = match observed_order(&hs, &residuals, 1e-10) {
            OrderOutcome::Order(p) => format!("{p:.3}"),
            OrderOutcome::Exact => "exact".into(),
            OrderOutcome::NoConvergence => "no convergence".into(),
        };
        if !quiet {
            println!("{}: observed order {observed}", probe.id);
        }
        tables.push(ConvergenceTable { target: probe.id.clone(), rows, observed_order: observed });
    }
    let built = file.build(seed)?;
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: hash,
        seed: built.seed,
        scenario: summarize(&built),
        checks: last_results,
        curves: curves_out.iter().map(|c| format!("curve_{}.csv", c.name)).collect(),
        convergence: tables,
        pass: all_pass,
    };
    let files = report::emit(out, &report, &curves_out)
        .map_err(|e| ConfigError(format!("cannot write report: {e}")))?;
    if !quiet {
        for f in &files {
            println!("wrote {}", f.display());
        }
        println!("verdict: {}", if all_pass { "pass" } else { "fail" });
    }
    eprintln!("wall time: {:.3}s", clock.elapsed().as_secs_f64());
    Ok(all_pass)
}

fn list_catalog() {
    println!("metric variants:");
    println!("  static      flat Euclidean metric");
    println!("  scaling     g(t) = e^{{2λt}} δ           (lambda)");
    println!("  conformal   g = e^{{2a}} δ, a = A e^{{-δt}} cos(k·x + θ) on the 2-D torus");
    println!("              (amplitude, freq, phase, decay)");
    println!("potential kinds:");
    println!("  zero        φ = 0");
    println!("  quadratic   φ = κ‖x‖²/2 (+ Gaussian normalizer)   (kappa, normalized)");
    println!("  trig        φ = Σ A cos(k·x + θ)                  (terms)");
    println!("  modes: free | fixed-measure (compensator keeps μ constant)");
    println!("initial data:");
    println!("  constant (value) | trig-exp (amplitude, freq) | gaussian (sigma, center)");
    println!("  near-delta (sigma = 3h default; placed at its kernel-consistent time)");
    println!("test-function generators:");
    println!("  random-trig | gaussian-bumps | near-eigen       (count, floor, seed)");
    println!("checks:");
    for (name, desc) in checks::KNOWN_CHECKS {
        println!("  {name:26} {desc}");
    }
}
