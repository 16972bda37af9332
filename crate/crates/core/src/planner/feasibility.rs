//! Feasibility graph over station projections and common-border samples, and
//! the base trajectory found on it.

use crate::coverage::CoverageSet;
use crate::error::{Endpoint, Error, Result};
use crate::scenario::Scenario;

use super::graph::{shortest_path, NodeKind, PlanGraph};
use super::{debug_audit, PlannerKind, Trajectory};

/// Every border sample is its own node tagged with the station pair whose
/// common border it belongs to, so a hop `û_a → x → û_b` always passes
/// through a sample of the `(a, b)` common border.
pub fn build_feasibility_graph(scenario: &Scenario, cov: &CoverageSet) -> Result<PlanGraph> {
    let start = scenario.mission.start.xy();
    let goal = scenario.mission.goal.xy();
    if !cov.contains(start) {
        return Err(Error::InfeasibleEndpoint {
            which: Endpoint::Start,
            x: start.x,
            y: start.y,
        });
    }
    if !cov.contains(goal) {
        return Err(Error::InfeasibleEndpoint {
            which: Endpoint::Goal,
            x: goal.x,
            y: goal.y,
        });
    }
    let mut g = PlanGraph::new();
    let s = g.add_node(start, NodeKind::Start);
    let bs_nodes: Vec<usize> = (0..scenario.base_stations.len())
        .map(|k| g.add_node(scenario.bs_projection(k), NodeKind::BsProjection(k)))
        .collect();
    for common in &cov.commons {
        let (a, b) = common.pair;
        for &x in &common.points {
            let id = g.add_node(x, NodeKind::BorderPoint(a, b));
            g.add_edge(bs_nodes[a], id);
            g.add_edge(bs_nodes[b], id);
        }
    }
    let f = g.add_node(goal, NodeKind::Goal);
    for (k, map) in cov.maps.iter().enumerate() {
        if map.contains(start) {
            g.add_edge(bs_nodes[k], s);
        }
        if map.contains(goal) {
            g.add_edge(bs_nodes[k], f);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct BaseResult {
    pub trajectory: Trajectory,
    /// 0-based indices of the visited stations, in visit order.
    pub visited: Vec<usize>,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

impl BaseResult {
    /// 1-based station ids in visit order.
    pub fn index_set(&self, scenario: &Scenario) -> Vec<usize> {
        self.visited
            .iter()
            .map(|&k| scenario.base_stations[k].id)
            .collect()
    }
}

pub fn base_trajectory(scenario: &Scenario, cov: &CoverageSet) -> Result<BaseResult> {
    let g = build_feasibility_graph(scenario, cov)?;
    let (src, dst) = (0, g.node_count() - 1);
    let path = shortest_path(&g, src, dst).ok_or(Error::Infeasible)?;
    let visited = path
        .iter()
        .filter_map(|&id| match g.node(id).kind {
            NodeKind::BsProjection(k) => Some(k),
            _ => None,
        })
        .collect();
    let trajectory = Trajectory::from_points(
        PlannerKind::Base,
        path.iter().map(|&id| g.node(id).point),
        scenario.radio.uav_altitude,
    );
    debug_audit(&trajectory, scenario);
    Ok(BaseResult {
        trajectory,
        visited,
        graph_nodes: g.node_count(),
        graph_edges: g.edge_count(),
    })
}
