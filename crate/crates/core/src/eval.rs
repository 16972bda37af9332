//! Trajectory scoring and seeded Monte-Carlo comparison of the planners.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::coverage::{CoverageConfig, CoverageSet, LinkModel};
use crate::error::{Error, Result};
use crate::planner::{
    base_trajectory, grid_baseline_plan, optimize_trajectory, straight_line_plan, PlannerKind,
    Trajectory,
};
use crate::scenario::Scenario;

pub const DEFAULT_OUTAGE_STEP: f64 = 1.0;
pub const DEFAULT_GRID_STEP: f64 = 10.0;

pub fn trajectory_length(t: &Trajectory) -> f64 {
    t.length()
}

/// Fraction of arc-length samples (every `step` meters plus the final point)
/// at which no station reaches the SNR threshold.
pub fn outage_fraction(t: &Trajectory, scenario: &Scenario, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "outage step must be positive, got {step}"
        )));
    }
    let samples = sample_path(t, step);
    if samples.is_empty() {
        return Ok(0.0);
    }
    let model = LinkModel::new(&scenario.radio);
    let out = samples
        .par_iter()
        .filter(|p| !model.covered_by_any(**p, scenario))
        .count();
    Ok(out as f64 / samples.len() as f64)
}

fn sample_path(t: &Trajectory, step: f64) -> Vec<crate::geometry::Point2> {
    let pts: Vec<_> = t.waypoints.iter().map(|w| w.xy()).collect();
    let Some(&last) = pts.last() else {
        return Vec::new();
    };
    let mut samples = Vec::new();
    // arc length at which the current segment begins
    let mut offset = 0.0;
    let mut next = 0.0;
    for w in pts.windows(2) {
        let len = w[0].dist(w[1]);
        while next < offset + len {
            samples.push(w[0].lerp(w[1], (next - offset) / len));
            next += step;
        }
        offset += len;
    }
    if samples.last() != Some(&last) {
        samples.push(last);
    }
    samples
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerOutcome {
    pub planner: PlannerKind,
    /// `None` when the planner found no trajectory.
    pub length_m: Option<f64>,
    pub outage: Option<f64>,
    pub nodes: usize,
    pub edges: usize,
    pub wall_ms: f64,
    /// Refined-graph stations visited (base and optimized only).
    pub visited: Option<usize>,
}

impl PlannerOutcome {
    pub fn feasible(&self) -> bool {
        self.length_m.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub seed: u64,
    pub outcomes: Vec<PlannerOutcome>,
}

impl EvalReport {
    pub fn get(&self, planner: PlannerKind) -> Option<&PlannerOutcome> {
        self.outcomes.iter().find(|o| o.planner == planner)
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub planners: Vec<PlannerKind>,
    pub coverage: CoverageConfig,
    pub grid_step: f64,
    pub outage_step: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            planners: PlannerKind::ALL.to_vec(),
            coverage: CoverageConfig::default(),
            grid_step: DEFAULT_GRID_STEP,
            outage_step: DEFAULT_OUTAGE_STEP,
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs every configured planner on `scenario` and scores the results.
pub fn evaluate(scenario: &Scenario, seed: u64, cfg: &EvalConfig) -> Result<EvalReport> {
    let wants = |k| cfg.planners.contains(&k);
    let mut outcomes = Vec::new();
    let score = |t: &Trajectory| outage_fraction(t, scenario, cfg.outage_step);

    if wants(PlannerKind::Base) || wants(PlannerKind::Optimized) {
        let t0 = Instant::now();
        let cov = CoverageSet::build(scenario, &cfg.coverage)?;
        let base = base_trajectory(scenario, &cov);
        let base_ms = ms(t0);
        let infeasible = |planner| PlannerOutcome {
            planner,
            length_m: None,
            outage: None,
            nodes: 0,
            edges: 0,
            wall_ms: base_ms,
            visited: None,
        };
        match base {
            Ok(base) => {
                if wants(PlannerKind::Base) {
                    outcomes.push(PlannerOutcome {
                        planner: PlannerKind::Base,
                        length_m: Some(base.trajectory.length()),
                        outage: Some(score(&base.trajectory)?),
                        nodes: base.graph_nodes,
                        edges: base.graph_edges,
                        wall_ms: base_ms,
                        visited: Some(base.visited.len()),
                    });
                }
                if wants(PlannerKind::Optimized) {
                    let t1 = Instant::now();
                    let opt = optimize_trajectory(&base, scenario, &cov)?;
                    outcomes.push(PlannerOutcome {
                        planner: PlannerKind::Optimized,
                        length_m: Some(opt.trajectory.length()),
                        outage: Some(score(&opt.trajectory)?),
                        nodes: opt.graph_nodes,
                        edges: opt.graph_edges,
                        wall_ms: base_ms + ms(t1),
                        visited: Some(base.visited.len()),
                    });
                }
            }
            Err(e) if e.is_infeasible() => {
                for k in [PlannerKind::Base, PlannerKind::Optimized] {
                    if wants(k) {
                        outcomes.push(infeasible(k));
                    }
                }
            }
            Err(e) => return Err(e),
        }
    }
    if wants(PlannerKind::Grid) {
        let t0 = Instant::now();
        let outcome = match grid_baseline_plan(scenario, cfg.grid_step) {
            Ok(plan) => PlannerOutcome {
                planner: PlannerKind::Grid,
                length_m: Some(plan.trajectory.length()),
                outage: Some(score(&plan.trajectory)?),
                nodes: plan.graph_nodes,
                edges: plan.graph_edges,
                wall_ms: ms(t0),
                visited: None,
            },
            Err(e) if e.is_infeasible() => PlannerOutcome {
                planner: PlannerKind::Grid,
                length_m: None,
                outage: None,
                nodes: 0,
                edges: 0,
                wall_ms: ms(t0),
                visited: None,
            },
            Err(e) => return Err(e),
        };
        outcomes.push(outcome);
    }
    if wants(PlannerKind::Straight) {
        let t0 = Instant::now();
        let t = straight_line_plan(&scenario.mission);
        outcomes.push(PlannerOutcome {
            planner: PlannerKind::Straight,
            length_m: Some(t.length()),
            outage: Some(score(&t)?),
            nodes: 2,
            edges: 1,
            wall_ms: ms(t0),
            visited: None,
        });
    }
    outcomes.sort_by_key(|o| o.planner);
    Ok(EvalReport { seed, outcomes })
}

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub base_seed: u64,
    /// Stations placed per trial.
    pub num_base_stations: usize,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
    pub eval: EvalConfig,
}

/// One trial per seed `base_seed..base_seed + trials`, each re-placing the
/// stations of `template` with that seed. Reports are sorted by seed.
pub fn run_monte_carlo(template: &Scenario, cfg: &MonteCarloConfig) -> Result<Vec<EvalReport>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let seeds: Vec<u64> = (0..cfg.trials as u64).map(|i| cfg.base_seed + i).collect();
    let mut reports = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let scenario = template.with_base_stations(cfg.num_base_stations, seed)?;
                evaluate(&scenario, seed, &cfg.eval)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    reports.sort_by_key(|r| r.seed);
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerSummary {
    pub planner: PlannerKind,
    pub trials: usize,
    pub feasible: usize,
    pub feasibility_rate: f64,
    pub mean_length_m: Option<f64>,
    pub p50_length_m: Option<f64>,
    pub p90_length_m: Option<f64>,
    pub mean_outage: Option<f64>,
    pub max_outage: Option<f64>,
    pub mean_nodes: Option<f64>,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub planners: Vec<PlannerSummary>,
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Aggregates over feasible trials; infeasible trials only count toward the
/// feasibility rate.
pub fn summarize(reports: &[EvalReport]) -> Summary {
    let mut kinds: Vec<PlannerKind> = reports
        .iter()
        .flat_map(|r| r.outcomes.iter().map(|o| o.planner))
        .collect();
    kinds.sort();
    kinds.dedup();
    let planners = kinds
        .into_iter()
        .map(|planner| {
            let all: Vec<&PlannerOutcome> = reports.iter().filter_map(|r| r.get(planner)).collect();
            let ok: Vec<&PlannerOutcome> = all.iter().copied().filter(|o| o.feasible()).collect();
            let mut lengths: Vec<f64> = ok.iter().filter_map(|o| o.length_m).collect();
            lengths.sort_by(f64::total_cmp);
            let outages: Vec<f64> = ok.iter().filter_map(|o| o.outage).collect();
            let nodes: Vec<f64> = ok.iter().map(|o| o.nodes as f64).collect();
            let walls: Vec<f64> = all.iter().map(|o| o.wall_ms).collect();
            PlannerSummary {
                planner,
                trials: all.len(),
                feasible: ok.len(),
                feasibility_rate: if all.is_empty() {
                    0.0
                } else {
                    ok.len() as f64 / all.len() as f64
                },
                mean_length_m: mean(&lengths),
                p50_length_m: percentile(&lengths, 50.0),
                p90_length_m: percentile(&lengths, 90.0),
                mean_outage: mean(&outages),
                max_outage: outages.iter().copied().reduce(f64::max),
                mean_nodes: mean(&nodes),
                mean_wall_ms: mean(&walls).unwrap_or(0.0),
            }
        })
        .collect();
    Summary {
        trials: reports.len(),
        seeds: reports.iter().map(|r| r.seed).collect(),
        planners,
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "seed", "planner", "length_m", "outage", "nodes", "edges", "wall_ms",
];

/// One row per (trial, planner). Infeasible rows leave length and outage empty.
pub fn write_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let to_err = |e: csv::Error| Error::InvalidConfig(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(to_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        for o in &r.outcomes {
            w.write_record([
                r.seed.to_string(),
                o.planner.to_string(),
                opt(o.length_m),
                opt(o.outage),
                o.nodes.to_string(),
                o.edges.to_string(),
                format!("{:.3}", o.wall_ms),
            ])
            .map_err(to_err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    Ok(())
}

pub fn write_reports(reports: &[EvalReport], csv_path: &Path, summary_path: &Path) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let file = std::fs::File::create(csv_path).map_err(io(csv_path))?;
    write_csv(reports, std::io::BufWriter::new(file))?;
    let json = serde_json::to_string_pretty(&summarize(reports)).expect("summary serializes");
    std::fs::write(summary_path, json + "\n").map_err(io(summary_path))?;
    Ok(())
}
