//! Occupancy-grid baseline: an 8-connected lattice of covered cells.

use rayon::prelude::*;

use crate::coverage::LinkModel;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scenario::Scenario;

use super::graph::{shortest_path, NodeKind, PlanGraph};
use super::{PlannerKind, Trajectory};

/// How many lattice steps around an endpoint are searched for a snap target.
const SNAP_REACH: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct GridPlan {
    pub trajectory: Trajectory,
    /// Lattice sites before the coverage filter.
    pub candidate_nodes: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

fn segment_covered(
    a: Point2,
    b: Point2,
    samples: usize,
    model: &LinkModel,
    scenario: &Scenario,
) -> bool {
    (1..samples).all(|i| model.covered_by_any(a.lerp(b, i as f64 / samples as f64), scenario))
}

/// Shortest path on the lattice of cell centres `((i + ½)Δ, (j + ½)Δ)` that
/// are covered by some station, with `v_I` and `v_F` snapped onto it.
pub fn grid_baseline_plan(scenario: &Scenario, grid_step: f64) -> Result<GridPlan> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    let model = LinkModel::new(&scenario.radio);
    let nx = (scenario.city.width() / grid_step).floor() as usize;
    let ny = (scenario.city.depth() / grid_step).floor() as usize;
    let site = |i: usize, j: usize| {
        Point2::new((i as f64 + 0.5) * grid_step, (j as f64 + 0.5) * grid_step)
    };

    let covered: Vec<bool> = (0..nx * ny)
        .into_par_iter()
        .map(|c| model.covered_by_any(site(c % nx, c / nx), scenario))
        .collect();

    let mut g = PlanGraph::new();
    let mut id_of = vec![usize::MAX; nx * ny];
    for (c, _) in covered.iter().enumerate().filter(|(_, &ok)| ok) {
        id_of[c] = g.add_node(site(c % nx, c / nx), NodeKind::Lattice);
    }

    // each undirected neighbour pair once: E, N, NE, NW
    const DIRS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];
    let edges: Vec<(usize, usize)> = (0..nx * ny)
        .into_par_iter()
        .filter(|&c| covered[c])
        .flat_map_iter(|c| {
            let (i, j) = ((c % nx) as isize, (c / nx) as isize);
            DIRS.iter().filter_map(move |&(di, dj)| {
                let (a, b) = (i + di, j + dj);
                if a >= 0 && (a as usize) < nx && (b as usize) < ny {
                    Some((c, b as usize * nx + a as usize))
                } else {
                    None
                }
            })
        })
        .filter(|&(c, d)| {
            covered[d]
                && segment_covered(
                    site(c % nx, c / nx),
                    site(d % nx, d / nx),
                    4,
                    &model,
                    scenario,
                )
        })
        .collect();
    for (c, d) in edges {
        g.add_edge(id_of[c], id_of[d]);
    }

    let start = scenario.mission.start.xy();
    let goal = scenario.mission.goal.xy();
    let snap = |p: Point2| -> Option<usize> {
        if !model.covered_by_any(p, scenario) {
            return None;
        }
        let reach = (SNAP_REACH + 1.0).ceil() as isize;
        let ci = (p.x / grid_step - 0.5).round() as isize;
        let cj = (p.y / grid_step - 0.5).round() as isize;
        let mut near: Vec<(f64, usize)> = Vec::new();
        for j in cj - reach..=cj + reach {
            for i in ci - reach..=ci + reach {
                if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
                    continue;
                }
                let c = j as usize * nx + i as usize;
                let q = site(i as usize, j as usize);
                if covered[c] && q.dist(p) <= SNAP_REACH * grid_step * std::f64::consts::SQRT_2 {
                    near.push((q.dist(p), c));
                }
            }
        }
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near.into_iter().map(|(_, c)| c).find(|&c| {
            let q = site(c % nx, c / nx);
            let n = ((p.dist(q) / (0.25 * grid_step)).ceil() as usize).max(1);
            segment_covered(p, q, n, &model, scenario)
        })
    };
    let s_cell = snap(start).ok_or(Error::Infeasible)?;
    let f_cell = snap(goal).ok_or(Error::Infeasible)?;
    let path = shortest_path(&g, id_of[s_cell], id_of[f_cell]).ok_or(Error::Infeasible)?;

    let points = std::iter::once(start)
        .chain(path.iter().map(|&id| g.node(id).point))
        .chain(std::iter::once(goal));
    let trajectory =
        Trajectory::from_points(PlannerKind::Grid, points, scenario.radio.uav_altitude);
    Ok(GridPlan {
        trajectory,
        candidate_nodes: nx * ny,
        graph_nodes: g.node_count() + 2,
        graph_edges: g.edge_count() + 2,
    })
}
