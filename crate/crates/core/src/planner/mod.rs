//! Trajectory planners: the two-stage coverage-graph method (base and
//! optimized), the lattice baseline and the straight line.

mod feasibility;
mod graph;
mod grid;
mod refined;

use serde::Serialize;

use crate::coverage::LinkModel;
use crate::geometry::{Point2, Point3};
use crate::scenario::{Mission, Scenario};

pub use feasibility::{base_trajectory, build_feasibility_graph, BaseResult};
pub use graph::{shortest_path, Edge, Node, NodeKind, PlanGraph};
pub use grid::{grid_baseline_plan, GridPlan};
pub use refined::{build_refined_graph, line_in_coverage, optimize_trajectory, OptimizedResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Base,
    Optimized,
    Grid,
    Straight,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::Base,
        PlannerKind::Optimized,
        PlannerKind::Grid,
        PlannerKind::Straight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Base => "base",
            PlannerKind::Optimized => "optimized",
            PlannerKind::Grid => "grid",
            PlannerKind::Straight => "straight",
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown planner `{s}` (expected base, optimized, grid or straight)")
            })
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Piecewise-linear path at the UAV altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: PlannerKind,
    pub waypoints: Vec<Point3>,
}

impl Trajectory {
    /// Builds a trajectory from planar points, dropping consecutive duplicates.
    pub fn from_points(
        kind: PlannerKind,
        points: impl IntoIterator<Item = Point2>,
        altitude: f64,
    ) -> Self {
        let mut waypoints: Vec<Point3> = Vec::new();
        for p in points {
            let w = p.with_z(altitude);
            if waypoints.last() != Some(&w) {
                waypoints.push(w);
            }
        }
        Self { kind, waypoints }
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.waypoints.windows(2).map(|w| w[0].dist(w[1])).collect()
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            kind: PlannerKind,
            length_m: f64,
            waypoints: Vec<[f64; 3]>,
            edge_lengths_m: Vec<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            note: Option<&'a str>,
        }
        let out = Out {
            kind: self.kind,
            length_m: self.length(),
            waypoints: self.waypoints.iter().map(|p| [p.x, p.y, p.z]).collect(),
            edge_lengths_m: self.edge_lengths(),
            note: (self.kind == PlannerKind::Straight).then_some("no coverage guarantee"),
        };
        serde_json::to_string_pretty(&out).expect("trajectory serializes")
    }
}

pub fn straight_line_plan(mission: &Mission) -> Trajectory {
    Trajectory::from_points(
        PlannerKind::Straight,
        [mission.start.xy(), mission.goal.xy()],
        mission.start.z,
    )
}

/// Samples `a`-`b` every `step` meters (endpoints included) and returns the
/// first sample not covered by any station.
pub fn first_uncovered_sample(
    a: Point2,
    b: Point2,
    step: f64,
    model: &LinkModel,
    scenario: &Scenario,
) -> Option<Point2> {
    let n = (a.dist(b) / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| a.lerp(b, i as f64 / n as f64))
        .find(|p| !model.covered_by_any(*p, scenario))
}

/// Edges of `g` whose dense sampling leaves coverage.
pub fn audit_edges(g: &PlanGraph, scenario: &Scenario, step: f64) -> Vec<Edge> {
    use rayon::prelude::*;
    let model = LinkModel::new(&scenario.radio);
    g.edges()
        .par_iter()
        .filter(|e| {
            first_uncovered_sample(g.node(e.a).point, g.node(e.b).point, step, &model, scenario)
                .is_some()
        })
        .copied()
        .collect()
}

/// Debug-build check that every leg of a planned trajectory stays covered.
pub(crate) fn debug_audit(t: &Trajectory, scenario: &Scenario) {
    if cfg!(debug_assertions) {
        let model = LinkModel::new(&scenario.radio);
        for w in t.waypoints.windows(2) {
            let bad = first_uncovered_sample(w[0].xy(), w[1].xy(), 0.5, &model, scenario);
            debug_assert!(
                bad.is_none(),
                "{} trajectory leaves coverage at {:?}",
                t.kind,
                bad
            );
        }
    }
}
