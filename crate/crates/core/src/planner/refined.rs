//! Refined graph restricted to the base trajectory's station sequence, and
//! the optimized trajectory found on it.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::coverage::{CoverageMap, CoverageSet};
use crate::error::{Error, Result};
use crate::geometry::{
    normalize_angle, point_segment_distance, segment_sector_crossings, CircularSector, Point2, EPS,
};
use crate::scenario::Scenario;

use super::feasibility::BaseResult;
use super::graph::{shortest_path, NodeKind, PlanGraph};
use super::{debug_audit, PlannerKind, Trajectory};

/// Segments passing this close to the station are tested against every sector.
const NEAR_CENTER: f64 = 1e-3;
const SPAN_PAD: f64 = 1e-6;

/// Whether the segment `x`-`y` stays inside the sector union of `map`.
///
/// Membership can only change where the segment meets a sector boundary, so
/// it suffices to test one point inside each piece between crossings.
pub fn line_in_coverage(x: Point2, y: Point2, map: &CoverageMap) -> bool {
    if map.is_empty() {
        return false;
    }
    if let (Some(a), Some(b)) = (map.sector_of(x), map.sector_of(y)) {
        if a == b {
            return true;
        }
    }
    if !(map.contains(x) && map.contains(y)) {
        return false;
    }
    let mut lams = vec![0.0, 1.0];
    for s in candidate_sectors(x, y, map) {
        lams.extend(segment_sector_crossings(x, y, s));
    }
    lams.sort_by(f64::total_cmp);
    lams.dedup();
    lams.windows(2)
        .all(|w| w[1] - w[0] <= 0.0 || map.contains(x.lerp(y, 0.5 * (w[0] + w[1]))))
}

/// Sectors whose angular range meets the azimuths swept by the segment.
fn candidate_sectors<'a>(
    x: Point2,
    y: Point2,
    map: &'a CoverageMap,
) -> Box<dyn Iterator<Item = &'a CircularSector> + 'a> {
    let c = map.center;
    if point_segment_distance(c, x, y) <= NEAR_CENTER {
        return Box::new(map.sectors.iter());
    }
    let (ax, ay) = ((x - c).azimuth(), (y - c).azimuth());
    let sweep = normalize_angle(ay - ax);
    let (from, width) = if sweep <= PI {
        (ax, sweep)
    } else {
        (ay, TAU - sweep)
    };
    let lo = from - SPAN_PAD;
    let hi = from + width + SPAN_PAD;
    Box::new(map.sectors.iter().filter(move |s| {
        [-TAU, 0.0, TAU]
            .iter()
            .any(|off| s.theta_start <= hi + off && s.theta_end >= lo + off)
    }))
}

#[derive(Debug, Clone)]
pub struct OptimizedResult {
    pub trajectory: Trajectory,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

/// Layered graph `v_I → û_1 → D̂_{1,2} → û_2 → … → û_K' → v_F` with
/// shortcut edges between consecutive layers whenever the straight segment
/// stays inside the shared station's coverage.
pub fn build_refined_graph(
    base: &BaseResult,
    scenario: &Scenario,
    cov: &CoverageSet,
) -> Result<PlanGraph> {
    let visited = &base.visited;
    if visited.is_empty() {
        return Err(Error::Infeasible);
    }
    let kp = visited.len();
    let mut g = PlanGraph::new();
    let start = g.add_node(scenario.mission.start.xy(), NodeKind::Start);
    let hubs: Vec<usize> = visited
        .iter()
        .map(|&k| g.add_node(scenario.bs_projection(k), NodeKind::BsProjection(k)))
        .collect();
    // layers[j] holds the common-border nodes between visited[j] and visited[j + 1]
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(kp.saturating_sub(1));
    for j in 0..kp.saturating_sub(1) {
        let (a, b) = (visited[j], visited[j + 1]);
        let common = cov.common(a, b).ok_or(Error::Infeasible)?;
        let ids: Vec<usize> = common
            .points
            .iter()
            .map(|&p| g.add_node(p, NodeKind::BorderPoint(common.pair.0, common.pair.1)))
            .collect();
        for &id in &ids {
            g.add_edge(hubs[j], id);
            g.add_edge(hubs[j + 1], id);
        }
        layers.push(ids);
    }
    let goal = g.add_node(scenario.mission.goal.xy(), NodeKind::Goal);
    g.add_edge(start, hubs[0]);
    g.add_edge(goal, hubs[kp - 1]);

    let point = |g: &PlanGraph, id: usize| g.node(id).point;
    let mut cross: Vec<(usize, usize)> = Vec::new();
    if kp > 1 {
        let first = &cov.maps[visited[0]];
        let last = &cov.maps[visited[kp - 1]];
        cross.par_extend(
            layers[0]
                .par_iter()
                .filter(|&&x| line_in_coverage(point(&g, start), point(&g, x), first))
                .map(|&x| (start, x)),
        );
        for k in 1..kp - 1 {
            let map = &cov.maps[visited[k]];
            let pairs: Vec<(usize, usize)> = layers[k - 1]
                .iter()
                .flat_map(|&u| layers[k].iter().map(move |&v| (u, v)))
                .collect();
            cross.par_extend(
                pairs
                    .into_par_iter()
                    .filter(|&(u, v)| line_in_coverage(point(&g, u), point(&g, v), map)),
            );
        }
        cross.par_extend(
            layers[kp - 2]
                .par_iter()
                .filter(|&&x| line_in_coverage(point(&g, x), point(&g, goal), last))
                .map(|&x| (x, goal)),
        );
    }
    for (a, b) in cross {
        g.add_edge(a, b);
    }
    Ok(g)
}

pub fn optimize_trajectory(
    base: &BaseResult,
    scenario: &Scenario,
    cov: &CoverageSet,
) -> Result<OptimizedResult> {
    let g = build_refined_graph(base, scenario, cov)?;
    let goal = g.node_count() - 1;
    let path = shortest_path(&g, 0, goal).ok_or(Error::Infeasible)?;
    let trajectory = Trajectory::from_points(
        PlannerKind::Optimized,
        path.iter().map(|&id| g.node(id).point),
        scenario.radio.uav_altitude,
    );
    debug_assert!(
        trajectory.length() <= base.trajectory.length() + EPS,
        "optimized path longer than base"
    );
    debug_audit(&trajectory, scenario);
    Ok(OptimizedResult {
        trajectory,
        graph_nodes: g.node_count(),
        graph_edges: g.edge_count(),
    })
}
