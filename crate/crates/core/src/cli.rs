//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::coverage::{CoverageConfig, CoverageSet};
use crate::error::Error;
use crate::eval::{self, EvalConfig, MonteCarloConfig};
use crate::planner::{
    base_trajectory, grid_baseline_plan, optimize_trajectory, straight_line_plan, PlannerKind,
    Trajectory,
};
use crate::scenario::{Scenario, ScenarioConfig};

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Parser)]
#[command(
    name = "covertraj",
    version,
    about = "Coverage-constrained UAV trajectory planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a city with base stations and write it as a scenario file.
    Generate(GenerateArgs),
    /// Plan trajectories on a scenario and write one JSON file per planner.
    Plan(PlanArgs),
    /// Score the planners on a single scenario.
    Eval(EvalArgs),
    /// Re-place the base stations once per seed and score the planners.
    Montecarlo(MonteCarloArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output scenario path (default: <out-dir>/scenario.json).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of base stations.
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    #[arg(long)]
    pub snr_threshold_db: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct PlanOptions {
    /// Border samples per coverage map.
    #[arg(long, default_value_t = 64)]
    pub q: usize,
    /// Grid baseline lattice step in meters.
    #[arg(long, default_value_t = eval::DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    /// Angular resolution of the coverage maps in degrees.
    #[arg(long, default_value_t = 0.5)]
    pub angular_step_deg: f64,
    /// Overrides the scenario's SNR threshold.
    #[arg(long)]
    pub snr_threshold_db: Option<f64>,
    /// Comma-separated subset of base,optimized,grid,straight.
    #[arg(long, value_delimiter = ',', default_values_t = PlannerKind::ALL)]
    pub planners: Vec<PlannerKind>,
}

impl PlanOptions {
    fn coverage(&self) -> CoverageConfig {
        CoverageConfig {
            angular_step: self.angular_step_deg.to_radians(),
            border_points: self.q,
            ..CoverageConfig::default()
        }
    }

    fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            planners: self.planners.clone(),
            coverage: self.coverage(),
            grid_step: self.grid_step,
            outage_step: eval::DEFAULT_OUTAGE_STEP,
        }
    }

    fn apply(&self, scenario: &mut Scenario) -> anyhow::Result<()> {
        if let Some(db) = self.snr_threshold_db {
            scenario.radio.snr_threshold_db = db;
            scenario.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub opts: PlanOptions,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Label written to the seed column.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub opts: PlanOptions,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    /// City template; generated from --seed when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed of the generated city.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Trial i places its base stations with seed base_seed + i.
    #[arg(long, default_value_t = 1)]
    pub base_seed: u64,
    /// Base stations per trial.
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub opts: PlanOptions,
}

/// Parses `args` and runs the command. Exit codes: 0 success, 1 input or
/// configuration error, 2 infeasible planning.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.downcast_ref::<Error>().is_some_and(Error::is_infeasible);
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
    }
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = ScenarioConfig {
        num_base_stations: a.k,
        ..ScenarioConfig::default()
    };
    if let Some(db) = a.snr_threshold_db {
        cfg.radio.snr_threshold_db = db;
    }
    let scenario = cfg.generate(a.seed)?;
    let path = match a.scenario {
        Some(p) => p,
        None => {
            ensure_dir(&a.out_dir)?;
            a.out_dir.join("scenario.json")
        }
    };
    scenario.save(&path)?;
    println!(
        "wrote {}: {} buildings, {} base stations, {:.0}x{:.0} m",
        path.display(),
        scenario.city.buildings().len(),
        scenario.base_stations.len(),
        scenario.city.width(),
        scenario.city.depth()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_trajectory(dir: &Path, t: &Trajectory) -> anyhow::Result<()> {
    let path = dir.join(format!("trajectory_{}.json", t.kind));
    std::fs::write(&path, t.to_json() + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{:<9} {:>9.1} m  {:>3} waypoints  -> {}",
        t.kind,
        t.length(),
        t.waypoints.len(),
        path.display()
    );
    Ok(())
}

fn cmd_plan(a: PlanArgs) -> anyhow::Result<ExitCode> {
    let mut scenario = Scenario::load(&a.scenario)?;
    a.opts.apply(&mut scenario)?;
    if a.opts.grid_step <= 0.0 {
        bail!(Error::InvalidConfig(format!(
            "grid step must be positive, got {}",
            a.opts.grid_step
        )));
    }
    ensure_dir(&a.out_dir)?;
    let wants = |k| a.opts.planners.contains(&k);
    let mut failure: Option<anyhow::Error> = None;

    if wants(PlannerKind::Base) || wants(PlannerKind::Optimized) {
        let cov = CoverageSet::build(&scenario, &a.opts.coverage())?;
        match base_trajectory(&scenario, &cov) {
            Ok(base) => {
                if wants(PlannerKind::Base) {
                    write_trajectory(&a.out_dir, &base.trajectory)?;
                    println!("          visited stations {:?}", base.index_set(&scenario));
                }
                if wants(PlannerKind::Optimized) {
                    write_trajectory(
                        &a.out_dir,
                        &optimize_trajectory(&base, &scenario, &cov)?.trajectory,
                    )?;
                }
            }
            Err(e) if e.is_infeasible() => failure = Some(e.into()),
            Err(e) => return Err(e.into()),
        }
    }
    if wants(PlannerKind::Grid) {
        match grid_baseline_plan(&scenario, a.opts.grid_step) {
            Ok(plan) => write_trajectory(&a.out_dir, &plan.trajectory)?,
            Err(e) if e.is_infeasible() => {
                eprintln!("grid baseline: {e}");
                failure.get_or_insert(e.into());
            }
            Err(e) => return Err(e.into()),
        }
    }
    if wants(PlannerKind::Straight) {
        write_trajectory(&a.out_dir, &straight_line_plan(&scenario.mission))?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(ExitCode::SUCCESS),
    }
}

fn print_summary(reports: &[eval::EvalReport]) {
    for p in eval::summarize(reports).planners {
        let fmt =
            |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        println!(
            "{:<9} feasible {:>3}/{:<3} mean length {:>8} m  mean outage {:>7}  mean wall {:>9.1} ms",
            p.planner,
            p.feasible,
            p.trials,
            fmt(p.mean_length_m, 1),
            fmt(p.mean_outage, 4),
            p.mean_wall_ms
        );
    }
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<ExitCode> {
    let mut scenario = Scenario::load(&a.scenario)?;
    a.opts.apply(&mut scenario)?;
    let report = eval::evaluate(&scenario, a.seed, &a.opts.eval_config())?;
    ensure_dir(&a.out_dir)?;
    let reports = [report];
    eval::write_reports(
        &reports,
        &a.out_dir.join("eval.csv"),
        &a.out_dir.join("eval_summary.json"),
    )?;
    print_summary(&reports);
    Ok(ExitCode::SUCCESS)
}

fn cmd_montecarlo(a: MonteCarloArgs) -> anyhow::Result<ExitCode> {
    let mut template = match &a.scenario {
        Some(p) => Scenario::load(p)?,
        None => ScenarioConfig::default().generate(a.seed)?,
    };
    a.opts.apply(&mut template)?;
    let cfg = MonteCarloConfig {
        trials: a.trials,
        base_seed: a.base_seed,
        num_base_stations: a.k,
        jobs: a.jobs,
        eval: a.opts.eval_config(),
    };
    let reports = eval::run_monte_carlo(&template, &cfg)?;
    ensure_dir(&a.out_dir)?;
    let csv = a.out_dir.join("montecarlo.csv");
    eval::write_reports(&reports, &csv, &a.out_dir.join("montecarlo_summary.json"))?;
    print_summary(&reports);
    println!("wrote {}", csv.display());
    Ok(ExitCode::SUCCESS)
}
