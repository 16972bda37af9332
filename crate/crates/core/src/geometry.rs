//! Planar and spatial primitives: points, axis-aligned building boxes,
//! circular sectors, and the predicates the planner is built on.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Global geometric tolerance in meters.
pub const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(center: Point2, radius: f64, theta: f64) -> Self {
        Self::new(
            center.x + radius * theta.cos(),
            center.y + radius * theta.sin(),
        )
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn dist_sq(self, o: Point2) -> f64 {
        (self - o).norm_sq()
    }

    /// Azimuth of the vector in `[0, 2π)`.
    pub fn azimuth(self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }

    pub fn with_z(self, z: f64) -> Point3 {
        Point3::new(self.x, self.y, z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn dist(self, o: Point3) -> f64 {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Normalizes an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, Error> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidConfig(format!(
                "degenerate rectangle x=[{x_min}, {x_max}] y=[{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// True when the interiors intersect; shared edges do not count.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x_min < o.x_max && o.x_min < self.x_max && self.y_min < o.y_max && o.y_min < self.y_max
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x_min, self.y_min),
            Point2::new(self.x_max, self.y_min),
            Point2::new(self.x_max, self.y_max),
            Point2::new(self.x_min, self.y_max),
        ]
    }

    /// Parameter interval `[t0, t1] ⊂ [0, 1]` over which `a + t (b - a)` lies
    /// inside the rectangle (slab clipping). `None` when the segment misses.
    pub fn clip_segment(&self, a: Point2, b: Point2) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let d = b - a;
        for (origin, dir, lo, hi) in [
            (a.x, d.x, self.x_min, self.x_max),
            (a.y, d.y, self.y_min, self.y_max),
        ] {
            if dir == 0.0 {
                if origin < lo || origin > hi {
                    return None;
                }
            } else {
                let (mut ta, mut tb) = ((lo - origin) / dir, (hi - origin) / dir);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some((t0, t1))
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        let dx = (self.x_min - p.x).max(0.0).max(p.x - self.x_max);
        let dy = (self.y_min - p.y).max(0.0).max(p.y - self.y_max);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub footprint: Rect,
    pub height: f64,
}

impl Building {
    pub fn new(footprint: Rect, height: f64) -> Result<Self, Error> {
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "building height must be positive, got {height}"
            )));
        }
        Ok(Self { footprint, height })
    }
}

/// Whether the straight segment `a`-`b` passes strictly above `building`.
///
/// Altitude along the segment is linear, so its minimum over the crossed
/// sub-interval is attained at one end of that interval. Grazing contact
/// (clearance within [`EPS`]) counts as blocked.
pub fn segment_clears_building(a: Point3, b: Point3, building: &Building) -> bool {
    let Some((t0, t1)) = building.footprint.clip_segment(a.xy(), b.xy()) else {
        return true;
    };
    let z0 = a.z + t0 * (b.z - a.z);
    let z1 = a.z + t1 * (b.z - a.z);
    z0.min(z1) > building.height + EPS
}

/// Brute-force occlusion test against every building.
pub fn segment_clears_buildings(a: Point3, b: Point3, buildings: &[Building]) -> bool {
    buildings
        .iter()
        .all(|bld| segment_clears_building(a, b, bld))
}

/// Convex circular sector: apex `center`, azimuths `[theta_start, theta_end]`
/// inside `[0, 2π]`, and central angle at most π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularSector {
    pub center: Point2,
    pub theta_start: f64,
    pub theta_end: f64,
    pub radius: f64,
}

const ANGLE_SLACK: f64 = 1e-12;

impl CircularSector {
    pub fn new(
        center: Point2,
        theta_start: f64,
        theta_end: f64,
        radius: f64,
    ) -> Result<Self, Error> {
        let span = theta_end - theta_start;
        if !(center.is_finite()
            && theta_start.is_finite()
            && theta_end.is_finite()
            && radius.is_finite())
        {
            return Err(Error::InvalidConfig("non-finite sector parameters".into()));
        }
        if theta_start < 0.0 || theta_end > TAU + ANGLE_SLACK {
            return Err(Error::InvalidConfig(format!(
                "sector azimuths [{theta_start}, {theta_end}] leave [0, 2π]"
            )));
        }
        if !(span > 0.0 && span <= PI + ANGLE_SLACK) {
            return Err(Error::InvalidConfig(format!(
                "sector central angle {span} not in (0, π]"
            )));
        }
        if radius < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "negative sector radius {radius}"
            )));
        }
        Ok(Self {
            center,
            theta_start,
            theta_end,
            radius,
        })
    }

    pub fn span(&self) -> f64 {
        self.theta_end - self.theta_start
    }

    fn start_dir(&self) -> Point2 {
        Point2::new(self.theta_start.cos(), self.theta_start.sin())
    }

    fn end_dir(&self) -> Point2 {
        Point2::new(self.theta_end.cos(), self.theta_end.sin())
    }

    /// Angular containment of the direction `v` (relative to the center),
    /// with `tol` meters of lateral slack scaled into the half-plane tests.
    fn within_span(&self, v: Point2, tol: f64) -> bool {
        // A convex wedge is the intersection of the two half-planes bounded by
        // its radial edges; for a half-disk both tests coincide.
        self.start_dir().cross(v) >= -tol && v.cross(self.end_dir()) >= -tol
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_sector(p, self)
    }

    pub fn arc_point(&self, theta: f64) -> Point2 {
        Point2::from_polar(self.center, self.radius, theta)
    }
}

pub fn point_in_sector(p: Point2, s: &CircularSector) -> bool {
    let v = p - s.center;
    let n = v.norm();
    if n <= EPS {
        return true;
    }
    if n > s.radius + EPS {
        return false;
    }
    s.within_span(v, EPS)
}

/// Sorted, de-duplicated parameters `λ ∈ [0, 1]` at which `a + λ (b - a)`
/// meets the boundary of `s` (both radial edges and the arc).
pub fn segment_sector_crossings(a: Point2, b: Point2, s: &CircularSector) -> Vec<f64> {
    let d = b - a;
    let len_sq = d.norm_sq();
    let mut out = Vec::new();
    if len_sq == 0.0 {
        return out;
    }
    let len = len_sq.sqrt();
    let lam_tol = EPS / len;
    let mut push = |lam: f64| {
        if lam >= -lam_tol && lam <= 1.0 + lam_tol {
            out.push(lam.clamp(0.0, 1.0));
        }
    };

    // Arc: |a + λd - c|² = r²
    if s.radius > 0.0 {
        let f = a - s.center;
        let qa = len_sq;
        let qb = 2.0 * f.dot(d);
        let qc = f.norm_sq() - s.radius * s.radius;
        let disc = qb * qb - 4.0 * qa * qc;
        // Discriminant expressed as squared distance from the center to the
        // supporting line, compared against the radius with EPS slack.
        let line_dist = f.cross(d).abs() / len;
        let roots: Vec<f64> = if line_dist > s.radius + EPS {
            Vec::new()
        } else if disc <= 0.0 || (s.radius - line_dist) <= EPS * 1e-3 {
            vec![-qb / (2.0 * qa)]
        } else {
            let sq = disc.sqrt();
            // Numerically stable pair of roots
            let q = -0.5 * (qb + qb.signum() * sq);
            let (r1, r2) = if q != 0.0 {
                (q / qa, qc / q)
            } else {
                (0.0, 0.0)
            };
            vec![r1, r2]
        };
        for lam in roots {
            let p = a + d * lam;
            if s.within_span(p - s.center, EPS) {
                push(lam);
            }
        }
    }

    // Radial edges
    for dir in [s.start_dir(), s.end_dir()] {
        let denom = d.cross(dir);
        let w = s.center - a;
        if denom.abs() <= 1e-15 * len {
            // Parallel: only a collinear overlap matters.
            if w.cross(dir).abs() <= EPS {
                for endpoint in [s.center, s.center + dir * s.radius] {
                    let lam = (endpoint - a).dot(d) / len_sq;
                    push(lam);
                }
            }
            continue;
        }
        let lam = w.cross(dir) / denom;
        let mu = w.cross(d) / denom;
        if mu >= -EPS && mu <= s.radius + EPS {
            push(lam);
        }
    }

    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    out
}

/// Sutherland-Hodgman clip of a convex polygon against the half-plane
/// `normal · (p - origin) >= 0`.
pub(crate) fn clip_half_plane(poly: &[Point2], origin: Point2, normal: Point2) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    if poly.is_empty() {
        return out;
    }
    let side = |p: Point2| normal.dot(p - origin);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (sc, sn) = (side(cur), side(next));
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc >= 0.0) != (sn >= 0.0) {
            let t = sc / (sc - sn);
            out.push(cur.lerp(next, t));
        }
    }
    out
}

pub(crate) fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len_sq).clamp(0.0, 1.0);
    p.dist(a + d * t)
}
