//! Simulation scenarios: the city, the base stations, radio constants and
//! the mission endpoints, plus the versioned JSON scenario file.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_clears_building, Building, Point2, Point3, Rect, EPS};

pub const SCENARIO_VERSION: u32 = 1;

const INDEX_CELL: f64 = 50.0;

/// Axis-aligned building boxes on `[0, width] × [0, depth]`, with a uniform
/// cell index for segment and point queries.
#[derive(Debug, Clone)]
pub struct CityMap {
    width: f64,
    depth: f64,
    buildings: Vec<Building>,
    index: CellIndex,
}

impl PartialEq for CityMap {
    fn eq(&self, o: &Self) -> bool {
        self.width == o.width && self.depth == o.depth && self.buildings == o.buildings
    }
}

#[derive(Debug, Clone)]
struct CellIndex {
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl CellIndex {
    fn build(width: f64, depth: f64, buildings: &[Building]) -> Self {
        let nx = ((width / INDEX_CELL).ceil() as usize).max(1);
        let ny = ((depth / INDEX_CELL).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, b) in buildings.iter().enumerate() {
            let f = &b.footprint;
            // pad so boundary-touching footprints land in every adjacent cell
            let (x0, x1) = (
                Self::coord(f.x_min - EPS, nx),
                Self::coord(f.x_max + EPS, nx),
            );
            let (y0, y1) = (
                Self::coord(f.y_min - EPS, ny),
                Self::coord(f.y_max + EPS, ny),
            );
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    cells[cy * nx + cx].push(i as u32);
                }
            }
        }
        Self { nx, ny, cells }
    }

    fn coord(v: f64, n: usize) -> usize {
        let c = (v / INDEX_CELL).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    fn cell_at(&self, p: Point2) -> &[u32] {
        &self.cells[Self::coord(p.y, self.ny) * self.nx + Self::coord(p.x, self.nx)]
    }

    /// Calls `visit` for every cell the segment passes through (grid DDA).
    fn walk(&self, a: Point2, b: Point2, mut visit: impl FnMut(&[u32]) -> bool) -> bool {
        let (gax, gay) = (a.x / INDEX_CELL, a.y / INDEX_CELL);
        let (gbx, gby) = (b.x / INDEX_CELL, b.y / INDEX_CELL);
        let (mut ix, mut iy) = (
            Self::coord(a.x, self.nx) as i64,
            Self::coord(a.y, self.ny) as i64,
        );
        let (jx, jy) = (
            Self::coord(b.x, self.nx) as i64,
            Self::coord(b.y, self.ny) as i64,
        );
        let (dx, dy) = (gbx - gax, gby - gay);
        let step_x = if dx > 0.0 { 1 } else { -1 };
        let step_y = if dy > 0.0 { 1 } else { -1 };
        let axis = |g: f64, i: i64, d: f64| -> (f64, f64) {
            if d > 0.0 {
                (((i + 1) as f64 - g) / d, 1.0 / d)
            } else if d < 0.0 {
                ((g - i as f64) / -d, -1.0 / d)
            } else {
                (f64::INFINITY, f64::INFINITY)
            }
        };
        let (mut t_max_x, t_delta_x) = axis(gax, ix, dx);
        let (mut t_max_y, t_delta_y) = axis(gay, iy, dy);
        let limit = self.nx + self.ny + 4;
        for _ in 0..limit {
            if !visit(&self.cells[iy as usize * self.nx + ix as usize]) {
                return false;
            }
            if ix == jx && iy == jy {
                break;
            }
            if t_max_x < t_max_y {
                ix += step_x;
                t_max_x += t_delta_x;
            } else {
                iy += step_y;
                t_max_y += t_delta_y;
            }
            if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
                break;
            }
        }
        true
    }
}

impl CityMap {
    pub fn new(width: f64, depth: f64, buildings: Vec<Building>) -> Result<Self> {
        if !(width.is_finite() && depth.is_finite() && width > 0.0 && depth > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "city size must be positive, got {width}×{depth}"
            )));
        }
        let bounds = Rect::new(0.0, width, 0.0, depth)?;
        for (i, b) in buildings.iter().enumerate() {
            let f = &b.footprint;
            if !(bounds.contains(Point2::new(f.x_min, f.y_min))
                && bounds.contains(Point2::new(f.x_max, f.y_max)))
            {
                return Err(Error::InvalidConfig(format!(
                    "building {i} footprint leaves the city bounds"
                )));
            }
        }
        let index = CellIndex::build(width, depth, &buildings);
        let city = Self {
            width,
            depth,
            buildings,
            index,
        };
        city.check_disjoint()?;
        Ok(city)
    }

    fn check_disjoint(&self) -> Result<()> {
        for (i, b) in self.buildings.iter().enumerate() {
            for cx in 0..self.index.cells.len() {
                let cell = &self.index.cells[cx];
                if !cell.contains(&(i as u32)) {
                    continue;
                }
                for &j in cell {
                    let j = j as usize;
                    if j > i && b.footprint.overlaps(&self.buildings[j].footprint) {
                        return Err(Error::InvalidConfig(format!(
                            "buildings {i} and {j} overlap"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn max_height(&self) -> f64 {
        self.buildings.iter().map(|b| b.height).fold(0.0, f64::max)
    }

    pub fn contains_xy(&self, p: Point2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.depth
    }

    /// True when `p` lies inside (or on the edge of) any building footprint.
    pub fn in_footprint(&self, p: Point2) -> bool {
        self.index
            .cell_at(p)
            .iter()
            .any(|&i| self.buildings[i as usize].footprint.contains(p))
    }

    pub fn street_fraction(&self) -> f64 {
        let built: f64 = self
            .buildings
            .iter()
            .map(|b| {
                (b.footprint.x_max - b.footprint.x_min) * (b.footprint.y_max - b.footprint.y_min)
            })
            .sum();
        1.0 - built / (self.width * self.depth)
    }

    /// Indexed equivalent of [`crate::geometry::segment_clears_buildings`].
    pub fn segment_clears(&self, a: Point3, b: Point3) -> bool {
        let floor = a.z.min(b.z);
        self.index.walk(a.xy(), b.xy(), |cell| {
            cell.iter().all(|&i| {
                let bld = &self.buildings[i as usize];
                bld.height + EPS < floor || segment_clears_building(a, b, bld)
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    /// 1-based index.
    pub id: usize,
    pub position: Point3,
}

impl BaseStation {
    pub fn xy(&self) -> Point2 {
        self.position.xy()
    }
}

/// Segmented pathloss constants and the altitude pair. Power ratios are kept
/// in dB so that scenario files round-trip exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub p_over_sigma2_db: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub beta_los: f64,
    pub beta_nlos: f64,
    pub snr_threshold_db: f64,
    /// UAV flight altitude.
    pub uav_altitude: f64,
    /// Base station antenna height.
    pub bs_height: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            p_over_sigma2_db: 120.0,
            alpha_los: 2.2,
            alpha_nlos: 2.8,
            beta_los: 1e-4,
            beta_nlos: 1e-4,
            snr_threshold_db: 20.0,
            uav_altitude: 80.0,
            bs_height: 20.0,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl RadioParams {
    /// P/σ² as a linear ratio.
    pub fn tx_power_over_noise(&self) -> f64 {
        db_to_linear(self.p_over_sigma2_db)
    }

    /// ρ̄ as a linear ratio.
    pub fn snr_threshold(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p_over_sigma2_db,
            self.alpha_los,
            self.alpha_nlos,
            self.beta_los,
            self.beta_nlos,
            self.snr_threshold_db,
            self.uav_altitude,
            self.bs_height,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(
                "radio parameters must be finite".into(),
            ));
        }
        let positive = [
            self.alpha_los,
            self.alpha_nlos,
            self.beta_los,
            self.beta_nlos,
            self.uav_altitude,
            self.bs_height,
        ];
        if positive.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidConfig(
                "pathloss exponents, gains and heights must be positive".into(),
            ));
        }
        if self.alpha_nlos < self.alpha_los {
            return Err(Error::InvalidConfig(format!(
                "alpha_nlos ({}) must not be below alpha_los ({})",
                self.alpha_nlos, self.alpha_los
            )));
        }
        if self.uav_altitude <= self.bs_height {
            return Err(Error::InvalidConfig(format!(
                "UAV altitude {} must exceed the base station height {}",
                self.uav_altitude, self.bs_height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mission {
    pub start: Point3,
    pub goal: Point3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub city: CityMap,
    pub base_stations: Vec<BaseStation>,
    pub radio: RadioParams,
    pub mission: Mission,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        let h = self.radio.uav_altitude;
        if h <= self.city.max_height() {
            return Err(Error::InvalidConfig(format!(
                "UAV altitude {h} must exceed the tallest building ({})",
                self.city.max_height()
            )));
        }
        for (i, bs) in self.base_stations.iter().enumerate() {
            if bs.id != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "base station ids must run 1..K in order, found {} at {}",
                    bs.id, i
                )));
            }
            if !self.city.contains_xy(bs.xy()) || self.city.in_footprint(bs.xy()) {
                return Err(Error::InvalidConfig(format!(
                    "base station {} is outside the streets",
                    bs.id
                )));
            }
            if bs.position.z != self.radio.bs_height {
                return Err(Error::InvalidConfig(format!(
                    "base station {} height differs from h_g",
                    bs.id
                )));
            }
        }
        for (name, p) in [("start", self.mission.start), ("goal", self.mission.goal)] {
            if !self.city.contains_xy(p.xy()) || p.z != h {
                return Err(Error::InvalidConfig(format!(
                    "mission {name} must be inside the city at altitude h"
                )));
            }
        }
        Ok(())
    }

    /// Same scenario with base stations re-drawn from `seed`.
    pub fn with_base_stations(&self, count: usize, seed: u64) -> Result<Scenario> {
        let base_stations = place_base_stations(&self.city, count, self.radio.bs_height, seed)?;
        Ok(Scenario {
            base_stations,
            ..self.clone()
        })
    }

    pub fn bs_projection(&self, k: usize) -> Point2 {
        self.base_stations[k].xy()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes");
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_owned(),
                message,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let parse_err = |message: String| Error::Parse {
            path: "<memory>".into(),
            message,
        };
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if file.version != SCENARIO_VERSION {
            return Err(parse_err(format!(
                "unsupported scenario version {} (expected {SCENARIO_VERSION})",
                file.version
            )));
        }
        file.into_scenario()
    }
}

/// Generation knobs for a Manhattan-style scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub width: f64,
    pub depth: f64,
    pub block_size: f64,
    pub street_width: f64,
    pub height_range: [f64; 2],
    pub rayleigh_scale: f64,
    pub num_base_stations: usize,
    pub radio: RadioParams,
    pub start: Point2,
    pub goal: Point2,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            width: 2000.0,
            depth: 2000.0,
            block_size: 80.0,
            street_width: 20.0,
            height_range: [5.0, 70.0],
            rayleigh_scale: 25.0,
            num_base_stations: 25,
            radio: RadioParams::default(),
            start: Point2::new(300.0, 300.0),
            goal: Point2::new(1500.0, 1500.0),
        }
    }
}

impl ScenarioConfig {
    pub fn generate(&self, seed: u64) -> Result<Scenario> {
        let city = generate_city(
            self.width,
            self.depth,
            self.block_size,
            self.street_width,
            self.height_range,
            self.rayleigh_scale,
            seed,
        )?;
        let base_stations =
            place_base_stations(&city, self.num_base_stations, self.radio.bs_height, seed)?;
        let h = self.radio.uav_altitude;
        let scenario = Scenario {
            city,
            base_stations,
            radio: self.radio,
            mission: Mission {
                start: self.start.with_z(h),
                goal: self.goal.with_z(h),
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Inverse-CDF Rayleigh draw.
fn rayleigh(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.gen();
    scale * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Regular street grid with one building per block and Rayleigh heights
/// clamped into `height_range`.
pub fn generate_city(
    width: f64,
    depth: f64,
    block_size: f64,
    street_width: f64,
    height_range: [f64; 2],
    rayleigh_scale: f64,
    seed: u64,
) -> Result<CityMap> {
    let dims_ok = [width, depth, block_size, rayleigh_scale]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
    if !dims_ok {
        return Err(Error::InvalidConfig(
            "city dimensions, block size and Rayleigh scale must be positive".into(),
        ));
    }
    if !(street_width >= 0.0 && street_width < block_size) {
        return Err(Error::InvalidConfig(format!(
            "street width {street_width} must be in [0, block size {block_size})"
        )));
    }
    let [lo, hi] = height_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "invalid height range [{lo}, {hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nbx = (width / block_size).floor() as usize;
    let nby = (depth / block_size).floor() as usize;
    let half = street_width / 2.0;
    let mut buildings = Vec::with_capacity(nbx * nby);
    for j in 0..nby {
        for i in 0..nbx {
            let x0 = i as f64 * block_size;
            let y0 = j as f64 * block_size;
            let footprint = Rect::new(
                x0 + half,
                x0 + block_size - half,
                y0 + half,
                y0 + block_size - half,
            )?;
            let height = rayleigh(&mut rng, rayleigh_scale).clamp(lo, hi);
            buildings.push(Building::new(footprint, height)?);
        }
    }
    CityMap::new(width, depth, buildings)
}

const MIN_STREET_FRACTION: f64 = 0.01;
const MAX_REJECTIONS_PER_BS: usize = 10_000;

/// Uniform placement over the street area by rejection sampling.
pub fn place_base_stations(
    city: &CityMap,
    count: usize,
    bs_height: f64,
    seed: u64,
) -> Result<Vec<BaseStation>> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "at least one base station is required".into(),
        ));
    }
    if city.street_fraction() < MIN_STREET_FRACTION {
        return Err(Error::Placement(format!(
            "street area fraction {:.4} is below {MIN_STREET_FRACTION}",
            city.street_fraction()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // separate stream from the city generator sharing this seed
    rng.set_stream(1);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > MAX_REJECTIONS_PER_BS * count {
            return Err(Error::Placement(format!(
                "gave up after {attempts} rejected draws"
            )));
        }
        let p = Point2::new(
            rng.gen::<f64>() * city.width(),
            rng.gen::<f64>() * city.depth(),
        );
        if city.in_footprint(p) {
            continue;
        }
        out.push(BaseStation {
            id: out.len() + 1,
            position: p.with_z(bs_height),
        });
    }
    Ok(out)
}

// ---- scenario file ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    city: CityFile,
    base_stations: Vec<BaseStationFile>,
    radio: RadioFile,
    mission: MissionFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CityFile {
    width: f64,
    depth: f64,
    buildings: Vec<BuildingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingFile {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    height: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseStationFile {
    id: usize,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioFile {
    p_over_sigma2_db: f64,
    alpha_los: f64,
    alpha_nlos: f64,
    beta_los: f64,
    beta_nlos: f64,
    snr_threshold_db: f64,
    h: f64,
    h_g: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionFile {
    start: [f64; 2],
    goal: [f64; 2],
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let r = &s.radio;
        ScenarioFile {
            version: SCENARIO_VERSION,
            city: CityFile {
                width: s.city.width(),
                depth: s.city.depth(),
                buildings: s
                    .city
                    .buildings()
                    .iter()
                    .map(|b| BuildingFile {
                        x_min: b.footprint.x_min,
                        x_max: b.footprint.x_max,
                        y_min: b.footprint.y_min,
                        y_max: b.footprint.y_max,
                        height: b.height,
                    })
                    .collect(),
            },
            base_stations: s
                .base_stations
                .iter()
                .map(|b| BaseStationFile {
                    id: b.id,
                    x: b.position.x,
                    y: b.position.y,
                })
                .collect(),
            radio: RadioFile {
                p_over_sigma2_db: r.p_over_sigma2_db,
                alpha_los: r.alpha_los,
                alpha_nlos: r.alpha_nlos,
                beta_los: r.beta_los,
                beta_nlos: r.beta_nlos,
                snr_threshold_db: r.snr_threshold_db,
                h: r.uav_altitude,
                h_g: r.bs_height,
            },
            mission: MissionFile {
                start: [s.mission.start.x, s.mission.start.y],
                goal: [s.mission.goal.x, s.mission.goal.y],
            },
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let buildings = self
            .city
            .buildings
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Rect::new(b.x_min, b.x_max, b.y_min, b.y_max)
                    .and_then(|f| Building::new(f, b.height))
                    .map_err(|e| Error::InvalidConfig(format!("city.buildings[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let city = CityMap::new(self.city.width, self.city.depth, buildings)?;
        let radio = RadioParams {
            p_over_sigma2_db: self.radio.p_over_sigma2_db,
            alpha_los: self.radio.alpha_los,
            alpha_nlos: self.radio.alpha_nlos,
            beta_los: self.radio.beta_los,
            beta_nlos: self.radio.beta_nlos,
            snr_threshold_db: self.radio.snr_threshold_db,
            uav_altitude: self.radio.h,
            bs_height: self.radio.h_g,
        };
        let base_stations = self
            .base_stations
            .iter()
            .map(|b| BaseStation {
                id: b.id,
                position: Point3::new(b.x, b.y, radio.bs_height),
            })
            .collect();
        let h = radio.uav_altitude;
        let [sx, sy] = self.mission.start;
        let [gx, gy] = self.mission.goal;
        let scenario = Scenario {
            city,
            base_stations,
            radio,
            mission: Mission {
                start: Point3::new(sx, sy, h),
                goal: Point3::new(gx, gy, h),
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
