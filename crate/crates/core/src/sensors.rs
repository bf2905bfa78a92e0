//! Simulated range sensing over a [`GridMap`].
//!
//! Rays walk the grid cell by cell, stepping across exact cell boundaries, and
//! stop at the first occupied or unknown cell. The map edge is transparent: a
//! ray that leaves the map reports no return.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot::Pose;
use crate::world::{Cell, CellState, GridMap};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sonar bearings relative to the heading, ascending: one transducer per side
/// and six forward-facing ones 20 degrees apart.
pub const SONAR_BEARINGS_DEG: [f64; 8] = [-90.0, -50.0, -30.0, -10.0, 10.0, 30.0, 50.0, 90.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("time of flight must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("range must be non-negative, got {0}")]
    NegativeRange(f64),
    #[error("sensor origin ({x:.3}, {y:.3}) is not inside a free cell")]
    OriginBlocked { x: f64, y: f64 },
    #[error("invalid lidar config: {0}")]
    InvalidConfig(String),
    #[error("malformed scan CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Range from a laser round-trip time: `c * t / 2`.
pub fn tof_to_range(t: f64) -> Result<f64, SensorError> {
    if !(t >= 0.0) {
        return Err(SensorError::NegativeTime(t));
    }
    Ok(SPEED_OF_LIGHT * t / 2.0)
}

/// Round-trip time for a range: `2 R / c`.
pub fn range_to_tof(range: f64) -> Result<f64, SensorError> {
    if !(range >= 0.0) {
        return Err(SensorError::NegativeRange(range));
    }
    Ok(2.0 * range / SPEED_OF_LIGHT)
}

/// One bearing/range pair. `range` is `None` when nothing was hit within range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub bearing: f64,
    pub range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub origin: Pose,
    /// Strictly increasing bearings relative to the origin heading.
    pub beams: Vec<Beam>,
    pub max_range: f64,
    pub timestamp: f64,
}

impl Scan {
    /// `bearing_rad,range_m` lines, `inf` for no return.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bearing_rad,range_m\n");
        for b in &self.beams {
            match b.range {
                Some(r) => writeln!(out, "{},{}", b.bearing, r),
                None => writeln!(out, "{},inf", b.bearing),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Parses [`Scan::to_csv`] output. Origin and timestamp are not part of the format.
    pub fn from_csv(text: &str, origin: Pose, max_range: f64) -> Result<Scan, SensorError> {
        let mut beams = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("bearing")) {
                continue;
            }
            let err = |message: &str| SensorError::Csv { line: i + 1, message: message.to_string() };
            let (b, r) = line.split_once(',').ok_or_else(|| err("expected two fields"))?;
            let bearing: f64 = b.trim().parse().map_err(|_| err("bad bearing"))?;
            let range = match r.trim() {
                "inf" => None,
                s => Some(s.parse::<f64>().map_err(|_| err("bad range"))?),
            };
            beams.push(Beam { bearing, range });
        }
        Ok(Scan { origin, beams, max_range, timestamp: 0.0 })
    }
}

/// One cell visited by a ray, with the ray parameters at which it enters and leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCell {
    pub cell: Cell,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Exact grid traversal along a ray, starting with the origin cell.
///
/// Stops after the first cell whose entry distance exceeds `max_dist`, or at the map edge.
#[derive(Debug, Clone)]
pub struct RayWalk {
    width: usize,
    height: usize,
    cx: isize,
    cy: isize,
    step_x: isize,
    step_y: isize,
    t_max_x: f64,
    t_max_y: f64,
    t_delta_x: f64,
    t_delta_y: f64,
    t: f64,
    max_dist: f64,
    done: bool,
}

impl RayWalk {
    pub fn new(map: &GridMap, x: f64, y: f64, angle: f64, max_dist: f64) -> Self {
        Self::over(map.width(), map.height(), map.resolution(), x, y, angle, max_dist)
    }

    pub fn over(width: usize, height: usize, res: f64, x: f64, y: f64, angle: f64, max_dist: f64) -> Self {
        let (dx, dy) = (angle.cos(), angle.sin());
        let cx = (x / res).floor() as isize;
        let cy = (y / res).floor() as isize;
        let axis = |d: f64, p: f64, c: isize| -> (isize, f64, f64) {
            if d > 0.0 {
                (1, ((c + 1) as f64 * res - p) / d, res / d)
            } else if d < 0.0 {
                (-1, (c as f64 * res - p) / d, -res / d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_x, t_max_x, t_delta_x) = axis(dx, x, cx);
        let (step_y, t_max_y, t_delta_y) = axis(dy, y, cy);
        let done = cx < 0 || cy < 0 || cx >= width as isize || cy >= height as isize;
        RayWalk {
            width,
            height,
            cx,
            cy,
            step_x,
            step_y,
            t_max_x,
            t_max_y,
            t_delta_x,
            t_delta_y,
            t: 0.0,
            max_dist,
            done,
        }
    }
}

impl Iterator for RayWalk {
    type Item = RayCell;

    fn next(&mut self) -> Option<RayCell> {
        if self.done {
            return None;
        }
        let t_exit = self.t_max_x.min(self.t_max_y);
        let item = RayCell {
            cell: Cell::new(self.cx as usize, self.cy as usize),
            t_enter: self.t,
            t_exit,
        };
        if self.t_max_x < self.t_max_y {
            self.cx += self.step_x;
            self.t = self.t_max_x;
            self.t_max_x += self.t_delta_x;
        } else {
            self.cy += self.step_y;
            self.t = self.t_max_y;
            self.t_max_y += self.t_delta_y;
        }
        if self.t > self.max_dist
            || !t_exit.is_finite()
            || self.cx < 0
            || self.cy < 0
            || self.cx >= self.width as isize
            || self.cy >= self.height as isize
        {
            self.done = true;
        }
        Some(item)
    }
}

fn check_origin(map: &GridMap, x: f64, y: f64) -> Result<(), SensorError> {
    if map.is_free_at(x, y) {
        Ok(())
    } else {
        Err(SensorError::OriginBlocked { x, y })
    }
}

/// Distance from `origin` to the first occupied or unknown cell boundary along
/// `bearing` (relative to the origin heading), or `None` within `max_range`.
pub fn raycast(map: &GridMap, origin: &Pose, bearing: f64, max_range: f64) -> Result<Option<f64>, SensorError> {
    check_origin(map, origin.x, origin.y)?;
    Ok(cast(map, origin, bearing, max_range))
}

fn cast(map: &GridMap, origin: &Pose, bearing: f64, max_range: f64) -> Option<f64> {
    let cells = map.cells();
    let w = map.width();
    RayWalk::new(map, origin.x, origin.y, origin.theta + bearing, max_range)
        .skip(1)
        .find(|rc| cells[rc.cell.y * w + rc.cell.x] != CellState::Free)
        .map(|rc| rc.t_enter)
        .filter(|&t| t <= max_range)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarConfig {
    pub fov: f64,
    pub beam_count: usize,
    pub max_range: f64,
    pub range_noise_sigma: f64,
}

impl Default for LidarConfig {
    /// 240 degree field of view, 683 beams, 5.6 m range.
    fn default() -> Self {
        LidarConfig {
            fov: 240f64.to_radians(),
            beam_count: 683,
            max_range: 5.6,
            range_noise_sigma: 0.01,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI) {
            return Err(SensorError::InvalidConfig(format!("fov {} outside (0, 2pi]", self.fov)));
        }
        if self.beam_count < 2 {
            return Err(SensorError::InvalidConfig("beam_count must be at least 2".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(SensorError::InvalidConfig("max_range must be positive".into()));
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err(SensorError::InvalidConfig("range_noise_sigma must be non-negative".into()));
        }
        Ok(())
    }

    /// Evenly spaced bearings centred on the heading. A full circle omits the
    /// duplicate endpoint.
    pub fn bearings(&self) -> Vec<f64> {
        let n = self.beam_count;
        if self.fov >= 2.0 * PI {
            let step = 2.0 * PI / n as f64;
            (0..n).map(|i| -PI + i as f64 * step).collect()
        } else {
            let step = self.fov / (n - 1) as f64;
            (0..n).map(|i| -self.fov / 2.0 + i as f64 * step).collect()
        }
    }
}

/// A lidar sweep with additive Gaussian range noise, clamped to `(0, max_range]`.
pub fn lidar_scan<R: Rng + ?Sized>(
    map: &GridMap,
    pose: &Pose,
    cfg: &LidarConfig,
    rng: &mut R,
) -> Result<Scan, SensorError> {
    cfg.validate()?;
    check_origin(map, pose.x, pose.y)?;
    let noise = Normal::new(0.0, cfg.range_noise_sigma).expect("sigma validated");
    let beams = cfg
        .bearings()
        .into_iter()
        .map(|bearing| {
            let range = cast(map, pose, bearing, cfg.max_range).map(|r| {
                if cfg.range_noise_sigma > 0.0 {
                    (r + noise.sample(rng)).clamp(f64::MIN_POSITIVE, cfg.max_range)
                } else {
                    r
                }
            });
            Beam { bearing, range }
        })
        .collect();
    Ok(Scan { origin: *pose, beams, max_range: cfg.max_range, timestamp: 0.0 })
}

/// The fixed eight-transducer sonar ring, noiseless.
pub fn sonar_scan(map: &GridMap, pose: &Pose, max_range: f64) -> Result<Scan, SensorError> {
    check_origin(map, pose.x, pose.y)?;
    let beams = SONAR_BEARINGS_DEG
        .iter()
        .map(|deg| {
            let bearing = deg.to_radians();
            Beam { bearing, range: cast(map, pose, bearing, max_range) }
        })
        .collect();
    Ok(Scan { origin: *pose, beams, max_range, timestamp: 0.0 })
}
