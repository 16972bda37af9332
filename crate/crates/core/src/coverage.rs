//! Link budget, LoS classification and per-station coverage maps.
//!
//! A station's coverage area at the UAV altitude is star-shaped around its
//! projection: along every azimuth the link stays LoS up to the first
//! building shadow, and NLoS points are covered only inside the smaller NLoS
//! disk. The map approximates that region from inside by a union of convex
//! circular sectors, one radius per angular bin, where each bin radius is the
//! exact minimum of the coverage radius over the whole bin (shrunk by a small
//! guard). Sector membership therefore always implies `snr >= threshold`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    clip_half_plane, normalize_angle, point_in_sector, point_segment_distance, CircularSector,
    Point2, Point3, Rect, EPS,
};
use crate::scenario::{BaseStation, CityMap, RadioParams, Scenario};

/// Radii are pulled inward by this much so points on a sector arc keep a
/// strictly positive SNR margin under floating point.
pub const RADIUS_GUARD: f64 = 1e-3;

/// Angular padding applied to every bin cone when computing its radius.
const CONE_PAD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkState {
    Los,
    Nlos,
}

pub fn classify_los(p: Point3, bs: &BaseStation, city: &CityMap) -> LinkState {
    if city.segment_clears(p, bs.position) {
        LinkState::Los
    } else {
        LinkState::Nlos
    }
}

/// Received SNR (linear) at `p` from `bs`; distances under 1 m are clamped.
pub fn snr(p: Point3, bs: &BaseStation, params: &RadioParams, city: &CityMap) -> f64 {
    let state = classify_los(p, bs, city);
    snr_for_state(p.dist(bs.position), state, params)
}

fn snr_for_state(distance: f64, state: LinkState, params: &RadioParams) -> f64 {
    let d = distance.max(1.0);
    let (alpha, beta) = match state {
        LinkState::Los => (params.alpha_los, params.beta_los),
        LinkState::Nlos => (params.alpha_nlos, params.beta_nlos),
    };
    params.tx_power_over_noise() * beta / d.powf(alpha)
}

/// Squared horizontal radius of the disk where `state` links meet the SNR
/// threshold; zero when even the point straight above the station fails.
pub fn coverage_disk_radius_sq(params: &RadioParams, state: LinkState) -> f64 {
    let (alpha, beta) = match state {
        LinkState::Los => (params.alpha_los, params.beta_los),
        LinkState::Nlos => (params.alpha_nlos, params.beta_nlos),
    };
    let budget = params.tx_power_over_noise() * beta / params.snr_threshold();
    let dh = params.bs_height - params.uav_altitude;
    (budget.powf(2.0 / alpha) - dh * dh).max(0.0)
}

/// Precomputed link constants for repeated coverage queries at the UAV altitude.
#[derive(Debug, Clone, Copy)]
pub struct LinkModel {
    pub params: RadioParams,
    pub threshold: f64,
    pub los_radius_sq: f64,
    pub nlos_radius_sq: f64,
}

impl LinkModel {
    pub fn new(params: &RadioParams) -> Self {
        Self {
            params: *params,
            threshold: params.snr_threshold(),
            los_radius_sq: coverage_disk_radius_sq(params, LinkState::Los),
            nlos_radius_sq: coverage_disk_radius_sq(params, LinkState::Nlos),
        }
    }

    pub fn los_radius(&self) -> f64 {
        self.los_radius_sq.sqrt()
    }

    pub fn nlos_radius(&self) -> f64 {
        self.nlos_radius_sq.sqrt()
    }

    pub fn max_radius(&self) -> f64 {
        self.los_radius().max(self.nlos_radius())
    }

    /// `snr(p) >= threshold` for a point at the UAV altitude.
    ///
    /// Points clearly inside both disks or clearly outside both skip the
    /// LoS test; everything in between is decided by the full SNR formula.
    pub fn covers(&self, p: Point2, bs: &BaseStation, city: &CityMap) -> bool {
        let dh2 = p.dist_sq(bs.xy());
        let dz = self.params.uav_altitude - self.params.bs_height;
        if dz.abs() >= 1.0 {
            let inner = self.los_radius_sq.min(self.nlos_radius_sq);
            let outer = self.los_radius_sq.max(self.nlos_radius_sq);
            if dh2 > outer * (1.0 + 1e-9) + 1e-9 {
                return false;
            }
            if dh2 < inner * (1.0 - 1e-9) - 1e-9 {
                return true;
            }
        }
        let p3 = p.with_z(self.params.uav_altitude);
        snr(p3, bs, &self.params, city) >= self.threshold
    }

    /// Best-server coverage: `max_k snr(p, k) >= threshold`.
    pub fn covered_by_any(&self, p: Point2, scenario: &Scenario) -> bool {
        scenario
            .base_stations
            .iter()
            .any(|bs| self.covers(p, bs, &scenario.city))
    }

    /// Coverage radius along a ray given the distance to the first building
    /// shadow on it (infinite when the ray never becomes NLoS).
    fn radius_from_shadow(&self, shadow: f64) -> f64 {
        let (r_los, r_nlos) = (self.los_radius(), self.nlos_radius());
        if r_nlos >= r_los {
            // every point is covered at least up to r_los whatever its state
            return r_los;
        }
        if shadow > r_los {
            r_los
        } else {
            shadow.max(r_nlos)
        }
    }
}

/// Largest radius reached by marching outward from the station projection in
/// steps of `step` while every sample stays covered.
pub fn azimuth_coverage_radius(
    bs: &BaseStation,
    theta: f64,
    city: &CityMap,
    params: &RadioParams,
    step: f64,
) -> f64 {
    let model = LinkModel::new(params);
    let dir = Point2::new(theta.cos(), theta.sin());
    let limit = model.max_radius() + step;
    let mut r = 0.0;
    if !model.covers(bs.xy(), bs, city) {
        return 0.0;
    }
    loop {
        let next = r + step;
        if next > limit || !model.covers(bs.xy() + dir * next, bs, city) {
            return r;
        }
        r = next;
    }
}

/// A building that can shadow a station: its footprint and the ratio between
/// the shadow start and the footprint entry distance along a ray.
struct Shadower {
    footprint: Rect,
    scale: f64,
}

fn shadowers(center: Point2, city: &CityMap, model: &LinkModel) -> Vec<Shadower> {
    let h = model.params.uav_altitude;
    let hg = model.params.bs_height;
    let reach = model.los_radius();
    city.buildings()
        .iter()
        .filter(|b| b.height + EPS > hg)
        .filter_map(|b| {
            // link altitude at horizontal distance s from the station is
            // hg + (h - hg) s / r; it is blocked once that is <= height + EPS
            // at the footprint entry, i.e. for r >= scale * entry
            let scale = ((h - hg) / (b.height + EPS - hg)).max(1.0);
            (scale * b.footprint.distance_to(center) <= reach).then_some(Shadower {
                footprint: b.footprint,
                scale,
            })
        })
        .collect()
}

/// Distance from `apex` to the part of `rect` inside the cone `[a, b]` (b - a ≤ π).
fn cone_distance(apex: Point2, rect: &Rect, a: f64, b: f64) -> Option<f64> {
    let ua = Point2::new(a.cos(), a.sin());
    let ub = Point2::new(b.cos(), b.sin());
    let poly = clip_half_plane(&rect.corners(), apex, Point2::new(-ua.y, ua.x));
    let poly = clip_half_plane(&poly, apex, Point2::new(ub.y, -ub.x));
    let poly = clip_half_plane(&poly, apex, ua + ub);
    if poly.is_empty() {
        return None;
    }
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(apex, poly[i], poly[(i + 1) % n]))
        .min_by(f64::total_cmp)
}

/// Exact coverage radius along the single azimuth `theta` (no guard).
pub fn ray_coverage_radius(
    bs: &BaseStation,
    theta: f64,
    city: &CityMap,
    params: &RadioParams,
) -> f64 {
    let model = LinkModel::new(params);
    let center = bs.xy();
    let far = model.max_radius() + 1.0;
    let tip = center + Point2::new(theta.cos(), theta.sin()) * far;
    let shadow = shadowers(center, city, &model)
        .iter()
        .filter_map(|s| {
            s.footprint
                .clip_segment(center, tip)
                .map(|(t0, _)| t0 * far * s.scale)
        })
        .fold(f64::INFINITY, f64::min);
    model.radius_from_shadow(shadow)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageConfig {
    pub angular_step: f64,
    pub radius_merge_tol: f64,
    pub min_radius: f64,
    pub border_points: usize,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            angular_step: TAU / 720.0,
            radius_merge_tol: 2.0,
            min_radius: 5.0,
            border_points: 64,
        }
    }
}

impl CoverageConfig {
    fn bins(&self) -> Result<usize> {
        let n = (TAU / self.angular_step).round();
        if self.angular_step <= 0.0
            || self.angular_step.is_nan()
            || n < 2.0
            || (n * self.angular_step - TAU).abs() > 1e-9
        {
            return Err(Error::InvalidConfig(format!(
                "angular step {} rad does not divide 2π",
                self.angular_step
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageMap {
    /// 1-based station id.
    pub bs_id: usize,
    pub center: Point2,
    /// Sorted by azimuth, non-overlapping, each with central angle ≤ π.
    pub sectors: Vec<CircularSector>,
    pub border_points: Vec<Point2>,
}

impl CoverageMap {
    pub fn q(&self) -> usize {
        self.border_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.sectors.iter().map(|s| s.radius).fold(0.0, f64::max)
    }

    /// Membership in the sector union.
    pub fn contains(&self, p: Point2) -> bool {
        let n = self.sectors.len();
        if n == 0 {
            return false;
        }
        let v = p - self.center;
        if v.norm() <= EPS {
            return true;
        }
        let az = v.azimuth();
        let idx = self.sectors.partition_point(|s| s.theta_start <= az);
        // the owning sector, or a neighbour within tolerance of a shared edge
        let candidates = [idx + n - 1, idx, idx + n - 2];
        candidates
            .iter()
            .any(|&i| point_in_sector(p, &self.sectors[i % n]))
    }

    /// Sector containing `p`, if any.
    pub fn sector_of(&self, p: Point2) -> Option<usize> {
        self.sectors.iter().position(|s| point_in_sector(p, s))
    }

    /// Ordered boundary pieces of the sector union: arcs and radial walls.
    fn boundary(&self) -> Vec<BoundaryPiece> {
        let n = self.sectors.len();
        let mut pieces = Vec::new();
        for (i, s) in self.sectors.iter().enumerate() {
            pieces.push(BoundaryPiece::Arc {
                theta0: s.theta_start,
                theta1: s.theta_end,
                radius: s.radius,
            });
            let next = &self.sectors[(i + 1) % n];
            let gap = normalize_angle(next.theta_start - s.theta_end);
            let contiguous = gap < 1e-9 || TAU - gap < 1e-9;
            if contiguous {
                if (next.radius - s.radius).abs() > 0.0 {
                    pieces.push(BoundaryPiece::Wall {
                        theta: s.theta_end,
                        r0: s.radius,
                        r1: next.radius,
                    });
                }
            } else {
                pieces.push(BoundaryPiece::Wall {
                    theta: s.theta_end,
                    r0: s.radius,
                    r1: 0.0,
                });
                pieces.push(BoundaryPiece::Wall {
                    theta: next.theta_start,
                    r0: 0.0,
                    r1: next.radius,
                });
            }
        }
        pieces
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary().iter().map(BoundaryPiece::length).sum()
    }

    /// Distance from `p` to the boundary of the sector union.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.boundary()
            .iter()
            .map(|piece| piece.distance(self.center, p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy)]
enum BoundaryPiece {
    Arc {
        theta0: f64,
        theta1: f64,
        radius: f64,
    },
    Wall {
        theta: f64,
        r0: f64,
        r1: f64,
    },
}

impl BoundaryPiece {
    fn length(&self) -> f64 {
        match *self {
            BoundaryPiece::Arc {
                theta0,
                theta1,
                radius,
            } => radius * (theta1 - theta0),
            BoundaryPiece::Wall { r0, r1, .. } => (r1 - r0).abs(),
        }
    }

    fn at(&self, center: Point2, s: f64) -> Point2 {
        match *self {
            BoundaryPiece::Arc { theta0, radius, .. } => {
                let theta = if radius > 0.0 {
                    theta0 + s / radius
                } else {
                    theta0
                };
                Point2::from_polar(center, radius, theta)
            }
            BoundaryPiece::Wall { theta, r0, r1 } => {
                let r = if r1 >= r0 { r0 + s } else { r0 - s };
                Point2::from_polar(center, r, theta)
            }
        }
    }

    fn distance(&self, center: Point2, p: Point2) -> f64 {
        match *self {
            BoundaryPiece::Arc {
                theta0,
                theta1,
                radius,
            } => {
                let v = p - center;
                let az = v.azimuth();
                let inside = (az >= theta0 && az <= theta1) || (theta1 > TAU - 1e-12 && az == 0.0);
                if inside {
                    (v.norm() - radius).abs()
                } else {
                    let a = Point2::from_polar(center, radius, theta0);
                    let b = Point2::from_polar(center, radius, theta1);
                    p.dist(a).min(p.dist(b))
                }
            }
            BoundaryPiece::Wall { theta, r0, r1 } => point_segment_distance(
                p,
                Point2::from_polar(center, r0, theta),
                Point2::from_polar(center, r1, theta),
            ),
        }
    }
}

/// Builds the sector approximation of `bs`'s coverage area. Border points are
/// left empty; see [`discretize_border`].
pub fn build_coverage_map(
    bs: &BaseStation,
    city: &CityMap,
    params: &RadioParams,
    cfg: &CoverageConfig,
) -> Result<CoverageMap> {
    let n_bins = cfg.bins()?;
    let step = TAU / n_bins as f64;
    let model = LinkModel::new(params);
    let center = bs.xy();
    let bin_start = |i: usize| if i == n_bins { TAU } else { i as f64 * step };

    let mut shadow = vec![f64::INFINITY; n_bins];
    for s in shadowers(center, city, &model) {
        // azimuth interval subtended by the footprint; the station is outside it
        let mid = (Point2::new(
            0.5 * (s.footprint.x_min + s.footprint.x_max),
            0.5 * (s.footprint.y_min + s.footprint.y_max),
        ) - center)
            .azimuth();
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for c in s.footprint.corners() {
            let rel = normalize_angle((c - center).azimuth() - mid + PI) - PI;
            lo = lo.min(rel);
            hi = hi.max(rel);
        }
        let first = ((mid + lo - CONE_PAD) / step).floor() as i64 - 1;
        let last = ((mid + hi + CONE_PAD) / step).floor() as i64 + 1;
        for k in first..=last {
            let i = k.rem_euclid(n_bins as i64) as usize;
            if let Some(d) = cone_distance(
                center,
                &s.footprint,
                bin_start(i) - CONE_PAD,
                bin_start(i + 1) + CONE_PAD,
            ) {
                shadow[i] = shadow[i].min(d * s.scale);
            }
        }
    }
    let radii: Vec<f64> = shadow
        .iter()
        .map(|&sh| (model.radius_from_shadow(sh) - RADIUS_GUARD).max(0.0))
        .collect();

    // group consecutive bins whose radii stay within the merge tolerance
    let mut groups: Vec<(usize, usize, f64)> = Vec::new();
    let (mut start, mut lo, mut hi) = (0usize, radii[0], radii[0]);
    for (i, &r) in radii.iter().enumerate().skip(1) {
        if r.max(hi) - r.min(lo) < cfg.radius_merge_tol {
            lo = lo.min(r);
            hi = hi.max(r);
        } else {
            groups.push((start, i, lo));
            (start, lo, hi) = (i, r, r);
        }
    }
    groups.push((start, n_bins, lo));

    let mut sectors = Vec::new();
    for (b0, b1, radius) in groups {
        if radius < cfg.min_radius {
            continue;
        }
        let (t0, t1) = (bin_start(b0), bin_start(b1));
        let pieces = ((t1 - t0) / PI - 1e-12).ceil().max(1.0) as usize;
        let pieces = pieces.next_power_of_two();
        for p in 0..pieces {
            let a = t0 + (t1 - t0) * p as f64 / pieces as f64;
            let b = if p + 1 == pieces {
                t1
            } else {
                t0 + (t1 - t0) * (p + 1) as f64 / pieces as f64
            };
            sectors.push(CircularSector::new(center, a, b, radius)?);
        }
    }
    Ok(CoverageMap {
        bs_id: bs.id,
        center,
        sectors,
        border_points: Vec::new(),
    })
}

/// Places `q` points uniformly by arc length along the sector-union perimeter.
pub fn discretize_border(map: &mut CoverageMap, q: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidConfig(
            "border sample count must be positive".into(),
        ));
    }
    map.border_points.clear();
    if map.sectors.is_empty() {
        return Ok(());
    }
    let pieces = map.boundary();
    let total: f64 = pieces.iter().map(BoundaryPiece::length).sum();
    if total <= 0.0 {
        return Ok(());
    }
    let spacing = total / q as f64;
    let mut piece = 0usize;
    let mut consumed = 0.0;
    for j in 0..q {
        let s = j as f64 * spacing;
        while piece + 1 < pieces.len() && s >= consumed + pieces[piece].length() {
            consumed += pieces[piece].length();
            piece += 1;
        }
        let local = (s - consumed).clamp(0.0, pieces[piece].length());
        map.border_points.push(pieces[piece].at(map.center, local));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonBorder {
    /// Indices (0-based) of the two stations, `pair.0 < pair.1`.
    pub pair: (usize, usize),
    pub points: Vec<Point2>,
}

/// Border samples of either map that fall inside the other map.
pub fn common_border_points(
    pair: (usize, usize),
    map_k: &CoverageMap,
    map_j: &CoverageMap,
) -> CommonBorder {
    let far = map_k.center.dist(map_j.center) > map_k.max_radius() + map_j.max_radius() + EPS;
    let points = if far || map_k.is_empty() || map_j.is_empty() {
        Vec::new()
    } else {
        map_k
            .border_points
            .iter()
            .filter(|p| map_j.contains(**p))
            .chain(map_j.border_points.iter().filter(|p| map_k.contains(**p)))
            .copied()
            .collect()
    };
    CommonBorder { pair, points }
}

/// All coverage maps of a scenario plus every non-empty common border.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageSet {
    pub maps: Vec<CoverageMap>,
    pub commons: Vec<CommonBorder>,
}

impl CoverageSet {
    pub fn build(scenario: &Scenario, cfg: &CoverageConfig) -> Result<Self> {
        let maps = scenario
            .base_stations
            .par_iter()
            .map(|bs| {
                let mut map = build_coverage_map(bs, &scenario.city, &scenario.radio, cfg)?;
                discretize_border(&mut map, cfg.border_points)?;
                Ok(map)
            })
            .collect::<Result<Vec<_>>>()?;
        let k = maps.len();
        let pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .collect();
        let commons = pairs
            .par_iter()
            .map(|&(a, b)| common_border_points((a, b), &maps[a], &maps[b]))
            .filter(|c| !c.points.is_empty())
            .collect();
        Ok(Self { maps, commons })
    }

    /// Membership in any station's sector union.
    pub fn contains(&self, p: Point2) -> bool {
        self.maps.iter().any(|m| m.contains(p))
    }

    pub fn common(&self, a: usize, b: usize) -> Option<&CommonBorder> {
        let key = (a.min(b), a.max(b));
        self.commons.iter().find(|c| c.pair == key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coverage serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Building, Rect};
    use crate::scenario::Mission;

    fn defaults() -> RadioParams {
        RadioParams::default()
    }

    fn bs_at(x: f64, y: f64) -> BaseStation {
        BaseStation {
            id: 1,
            position: Point3::new(x, y, 20.0),
        }
    }

    fn open_city() -> CityMap {
        CityMap::new(2000.0, 2000.0, vec![]).unwrap()
    }

    fn wall(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> Building {
        Building::new(Rect::new(x0, x1, y0, y1).unwrap(), h).unwrap()
    }

    #[test]
    fn snr_substitution() {
        let city = open_city();
        let bs = bs_at(500.0, 500.0);
        let p = Point3::new(600.0, 500.0, 80.0);
        let los = snr(p, &bs, &defaults(), &city);
        assert!((los - 2_838.619_623_850_81).abs() / 2838.62 < 1e-9, "{los}");
        let blocked =
            CityMap::new(2000.0, 2000.0, vec![wall(540.0, 560.0, 490.0, 510.0, 75.0)]).unwrap();
        let nlos = snr(p, &bs, &defaults(), &blocked);
        assert!(
            (nlos - 163.322_315_418_292_87).abs() / 163.32 < 1e-9,
            "{nlos}"
        );
        let mut doubled = defaults();
        doubled.p_over_sigma2_db += 10.0 * 2f64.log10();
        assert!((snr(p, &bs, &doubled, &city) / los - 2.0).abs() < 1e-12);
    }

    #[test]
    fn los_classification() {
        let bs = bs_at(500.0, 500.0);
        assert_eq!(
            classify_los(Point3::new(900.0, 100.0, 80.0), &bs, &open_city()),
            LinkState::Los
        );
        let city =
            CityMap::new(2000.0, 2000.0, vec![wall(510.0, 520.0, 510.0, 520.0, 60.0)]).unwrap();
        assert_eq!(
            classify_los(Point3::new(500.0, 500.0, 80.0), &bs, &city),
            LinkState::Los
        );
        // geometry-module blocked case, shifted onto this station
        let bs = BaseStation {
            id: 1,
            position: Point3::new(100.0, 10.0, 20.0),
        };
        let city = CityMap::new(200.0, 200.0, vec![wall(40.0, 60.0, 5.0, 15.0, 50.0)]).unwrap();
        assert_eq!(
            classify_los(Point3::new(0.0, 10.0, 80.0), &bs, &city),
            LinkState::Nlos
        );
    }

    #[test]
    fn disk_radii_substitution() {
        let p = defaults();
        // values from arbitrary-precision evaluation of the disk formula
        let los = coverage_disk_radius_sq(&p, LinkState::Los);
        let nlos = coverage_disk_radius_sq(&p, LinkState::Nlos);
        assert!((los - 281_203.586_843_580_2).abs() / los < 1e-9, "{los}");
        assert!((nlos - 15_706.977_288_832_5).abs() / nlos < 1e-9, "{nlos}");
        assert!((los.sqrt() - 530.286).abs() < 1e-3);
        assert!((nlos.sqrt() - 125.327).abs() < 1e-3);
    }

    #[test]
    fn disk_radius_zero_at_boundary() {
        let mut p = defaults();
        // (P β / (σ² ρ̄))^(2/α) = 60² exactly when ρ̄ = P β / σ² / 60^α
        let alpha = p.alpha_los;
        p.snr_threshold_db = 10.0 * (1e8 / 60f64.powf(alpha)).log10();
        assert!(coverage_disk_radius_sq(&p, LinkState::Los) < 1e-6);
        p.snr_threshold_db += 1.0;
        assert_eq!(coverage_disk_radius_sq(&p, LinkState::Los), 0.0);
    }

    #[test]
    fn march_in_open_field() {
        let city = open_city();
        let bs = bs_at(1000.0, 1000.0);
        let r_los = LinkModel::new(&defaults()).los_radius();
        for theta in [0.0, 1.0, 2.5, 4.0] {
            let r = azimuth_coverage_radius(&bs, theta, &city, &defaults(), 0.5);
            assert!(r <= r_los && r_los - r <= 0.5, "{r} vs {r_los}");
            let r2 = azimuth_coverage_radius(&bs, theta + TAU, &city, &defaults(), 0.5);
            assert_eq!(r, r2);
        }
    }

    #[test]
    fn march_with_blocking_building() {
        let model = LinkModel::new(&defaults());
        let bs = bs_at(1000.0, 1000.0);
        // 65 m tall block starting 50 m east: shadow begins at 50·60/45 ≈ 66.7 m,
        // still inside the NLoS disk, so coverage ends at the NLoS radius
        let city = CityMap::new(
            2000.0,
            2000.0,
            vec![wall(1050.0, 1100.0, 980.0, 1020.0, 65.0)],
        )
        .unwrap();
        let r = azimuth_coverage_radius(&bs, 0.0, &city, &defaults(), 0.5);
        assert!((r - model.nlos_radius()).abs() <= 0.5, "{r}");
        // a 40 m block 100 m out: shadow starts at 100·60/20 = 300 m, beyond the NLoS disk
        let city = CityMap::new(
            2000.0,
            2000.0,
            vec![wall(1100.0, 1150.0, 980.0, 1020.0, 40.0)],
        )
        .unwrap();
        let r = azimuth_coverage_radius(&bs, 0.0, &city, &defaults(), 0.5);
        let expect = 100.0 * 60.0 / (20.0 + EPS);
        assert!((r - expect).abs() <= 0.5, "{r} vs {expect}");
        let exact = ray_coverage_radius(&bs, 0.0, &city, &defaults());
        assert!((exact - expect).abs() < 1e-6);
    }

    #[test]
    fn exact_ray_radius_matches_march() {
        let cfg = crate::scenario::ScenarioConfig::default();
        let s = cfg.generate(3).unwrap();
        for bs in s.base_stations.iter().take(5) {
            for i in 0..36 {
                let theta = i as f64 * TAU / 36.0 + 0.013;
                let exact = ray_coverage_radius(bs, theta, &s.city, &s.radio);
                let marched = azimuth_coverage_radius(bs, theta, &s.city, &s.radio, 0.5);
                assert!(
                    marched <= exact + 1e-6 && exact - marched <= 0.5 + 1e-6,
                    "bs {} θ {theta}: {marched} vs {exact}",
                    bs.id
                );
            }
        }
    }

    #[test]
    fn open_field_map_is_two_half_disks() {
        let bs = bs_at(1000.0, 1000.0);
        let mut map =
            build_coverage_map(&bs, &open_city(), &defaults(), &CoverageConfig::default()).unwrap();
        assert_eq!(map.sectors.len(), 2);
        let r = LinkModel::new(&defaults()).los_radius() - RADIUS_GUARD;
        for s in &map.sectors {
            assert!((s.radius - r).abs() < 1e-9);
            assert!((s.span() - PI).abs() < 1e-12);
        }
        discretize_border(&mut map, 4).unwrap();
        let expect = [(r, 0.0), (0.0, r), (-r, 0.0), (0.0, -r)];
        for (p, (dx, dy)) in map.border_points.iter().zip(expect) {
            assert!(
                p.dist(Point2::new(1000.0 + dx, 1000.0 + dy)) < 1e-6,
                "{p:?}"
            );
        }
    }

    #[test]
    fn ringed_station_stays_within_nlos_disk() {
        // over-height ring 10 m from the station on all sides
        let c = 1000.0;
        let city = CityMap::new(
            2000.0,
            2000.0,
            vec![
                wall(c - 20.0, c + 20.0, c + 10.0, c + 20.0, 60.0),
                wall(c - 20.0, c + 20.0, c - 20.0, c - 10.0, 60.0),
                wall(c - 20.0, c - 10.0, c - 10.0, c + 10.0, 60.0),
                wall(c + 10.0, c + 20.0, c - 10.0, c + 10.0, 60.0),
            ],
        )
        .unwrap();
        let bs = bs_at(c, c);
        let params = defaults();
        let map = build_coverage_map(&bs, &city, &params, &CoverageConfig::default()).unwrap();
        let r_nlos = LinkModel::new(&params).nlos_radius();
        assert!(!map.sectors.is_empty());
        for s in &map.sectors {
            assert!(s.radius <= r_nlos);
        }
        for i in 0..72 {
            let theta = i as f64 * TAU / 72.0 + 0.001;
            let marched = azimuth_coverage_radius(&bs, theta, &city, &params, 0.5);
            assert!(marched <= r_nlos + 1e-9);
        }
    }

    #[test]
    fn border_spacing_is_uniform() {
        let s = crate::scenario::ScenarioConfig::default()
            .generate(5)
            .unwrap();
        let cfg = CoverageConfig::default();
        let model = LinkModel::new(&s.radio);
        for bs in s.base_stations.iter().take(6) {
            let mut map = build_coverage_map(bs, &s.city, &s.radio, &cfg).unwrap();
            discretize_border(&mut map, 64).unwrap();
            assert_eq!(map.q(), 64);
            let spacing = map.perimeter() / 64.0;
            // points walk the boundary in order: chord never exceeds the arc-length spacing
            for w in map.border_points.windows(2) {
                assert!(w[0].dist(w[1]) <= spacing + 1e-6);
            }
            for p in &map.border_points {
                assert!(map.distance_to_boundary(*p) < 1e-6);
                assert!(
                    snr(p.with_z(80.0), bs, &s.radio, &s.city) >= model.threshold * (1.0 - 1e-3)
                );
                assert!(model.covers(*p, bs, &s.city));
            }
        }
    }

    #[test]
    fn empty_coverage_has_empty_border() {
        let mut p = defaults();
        p.snr_threshold_db = 200.0;
        let mut map = build_coverage_map(
            &bs_at(10.0, 10.0),
            &open_city(),
            &p,
            &CoverageConfig::default(),
        )
        .unwrap();
        assert!(map.is_empty());
        discretize_border(&mut map, 64).unwrap();
        assert!(map.border_points.is_empty());
    }

    #[test]
    fn rejects_non_dividing_step() {
        let cfg = CoverageConfig {
            angular_step: 0.7,
            ..Default::default()
        };
        assert!(build_coverage_map(&bs_at(10.0, 10.0), &open_city(), &defaults(), &cfg).is_err());
    }

    fn two_disk_scenario(sep: f64) -> Scenario {
        let radio = defaults();
        Scenario {
            city: open_city(),
            base_stations: vec![
                BaseStation {
                    id: 1,
                    position: Point3::new(600.0, 1000.0, 20.0),
                },
                BaseStation {
                    id: 2,
                    position: Point3::new(600.0 + sep, 1000.0, 20.0),
                },
            ],
            radio,
            mission: Mission {
                start: Point3::new(300.0, 1000.0, 80.0),
                goal: Point3::new(1500.0, 1000.0, 80.0),
            },
        }
    }

    #[test]
    fn common_border_identical_and_disjoint() {
        let s = two_disk_scenario(0.0);
        let set = CoverageSet::build(&s, &CoverageConfig::default()).unwrap();
        assert_eq!(set.commons.len(), 1);
        assert_eq!(set.commons[0].points.len(), 128);
        let s = two_disk_scenario(1100.0);
        let set = CoverageSet::build(&s, &CoverageConfig::default()).unwrap();
        assert!(set.commons.is_empty());
    }

    #[test]
    fn common_border_lens_count() {
        let s = two_disk_scenario(800.0);
        let set = CoverageSet::build(&s, &CoverageConfig::default()).unwrap();
        let r = set.maps[0].sectors[0].radius;
        // each circle's arc inside the other spans 2·acos(d / 2r)
        let half_angle = (800.0f64 / (2.0 * r)).acos();
        let expected = 2.0 * 64.0 * (2.0 * half_angle) / TAU;
        let got = set.commons[0].points.len() as f64;
        assert!((got - expected).abs() <= 4.0, "{got} vs {expected}");
        for p in &set.commons[0].points {
            assert!(set.maps[0].contains(*p) && set.maps[1].contains(*p));
            assert!((p.x - 1000.0).abs() <= r - 400.0 + 1e-6);
        }
    }
}
