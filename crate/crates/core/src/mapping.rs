//! Known-pose occupancy grid mapping with clamped log-odds cells.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot::Pose;
use crate::sensors::{RayWalk, Scan};
use crate::world::{CellState, GridMap, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("pose ({x:.3}, {y:.3}) is outside the grid")]
    PoseOutOfBounds { x: f64, y: f64 },
    #[error("invalid log-odds parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Update increments, clamps and export thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogOddsParams {
    pub l_occ: f64,
    pub l_free: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub occ_threshold: f64,
    pub free_threshold: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        LogOddsParams {
            l_occ: 0.85,
            l_free: -0.4,
            l_min: -5.0,
            l_max: 5.0,
            occ_threshold: 0.5,
            free_threshold: -0.5,
        }
    }
}

impl LogOddsParams {
    pub fn validate(&self) -> Result<(), MappingError> {
        let ok = self.l_min < 0.0
            && self.l_max > 0.0
            && self.free_threshold < 0.0
            && self.occ_threshold > 0.0
            && self.l_occ > 0.0
            && self.l_free < 0.0
            && [self.l_min, self.l_max, self.l_occ, self.l_free].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(MappingError::InvalidParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogOddsGrid {
    width: usize,
    height: usize,
    resolution: f64,
    values: Vec<f64>,
    params: LogOddsParams,
}

impl LogOddsGrid {
    /// An all-zero (unknown) grid.
    pub fn new(width: usize, height: usize, resolution: f64, params: LogOddsParams) -> Result<Self, MappingError> {
        params.validate()?;
        // Reuse the map constructor's dimension checks.
        GridMap::new(width, height, resolution, CellState::Unknown)?;
        Ok(LogOddsGrid { width, height, resolution, values: vec![0.0; width * height], params })
    }

    /// A grid with the same shape as `map`.
    pub fn like(map: &GridMap, params: LogOddsParams) -> Result<Self, MappingError> {
        Self::new(map.width(), map.height(), map.resolution(), params)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn params(&self) -> &LogOddsParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> Option<f64> {
        (x < self.width && y < self.height).then(|| self.values[y * self.width + x])
    }

    fn add(&mut self, idx: usize, delta: f64) {
        let v = &mut self.values[idx];
        *v = (*v + delta).clamp(self.params.l_min, self.params.l_max);
    }

    /// Adds one scan taken at `pose`. Cells crossed before a hit get `l_free`,
    /// the hit cell gets `l_occ`; beams without a return clear up to `max_range`.
    pub fn integrate_scan(&mut self, pose: &Pose, scan: &Scan) -> Result<(), MappingError> {
        let inside = pose.x >= 0.0
            && pose.y >= 0.0
            && pose.x < self.width as f64 * self.resolution
            && pose.y < self.height as f64 * self.resolution;
        if !inside {
            return Err(MappingError::PoseOutOfBounds { x: pose.x, y: pose.y });
        }
        for beam in &scan.beams {
            let angle = pose.theta + beam.bearing;
            match beam.range {
                Some(r) => {
                    // The hit cell is the one just past the measured boundary.
                    let reach = r + self.resolution * 1e-6;
                    let (hx, hy) = (pose.x + reach * angle.cos(), pose.y + reach * angle.sin());
                    let hit = (hx >= 0.0 && hy >= 0.0)
                        .then(|| ((hx / self.resolution) as usize, (hy / self.resolution) as usize))
                        .filter(|&(x, y)| x < self.width && y < self.height);
                    let walk = RayWalk::over(self.width, self.height, self.resolution, pose.x, pose.y, angle, reach);
                    for rc in walk {
                        if Some((rc.cell.x, rc.cell.y)) == hit || rc.t_enter > r {
                            break;
                        }
                        self.add(rc.cell.y * self.width + rc.cell.x, self.params.l_free);
                    }
                    if let Some((x, y)) = hit {
                        self.add(y * self.width + x, self.params.l_occ);
                    }
                }
                None => {
                    let walk =
                        RayWalk::over(self.width, self.height, self.resolution, pose.x, pose.y, angle, scan.max_range);
                    for rc in walk {
                        if rc.t_enter > scan.max_range {
                            break;
                        }
                        self.add(rc.cell.y * self.width + rc.cell.x, self.params.l_free);
                    }
                }
            }
        }
        Ok(())
    }

    /// Thresholds the grid into an occupancy map.
    pub fn export_map(&self) -> GridMap {
        let mut map = GridMap::new(self.width, self.height, self.resolution, CellState::Unknown)
            .expect("dimensions validated at construction");
        for (i, &v) in self.values.iter().enumerate() {
            let state = if v > self.params.occ_threshold {
                CellState::Occupied
            } else if v < self.params.free_threshold {
                CellState::Free
            } else {
                continue;
            };
            map.set_state(map.cell_of(i), state).expect("index in bounds");
        }
        map
    }

    /// Binary PGM (P5). Bright is free, dark is occupied, linear over the clamp range.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        let span = self.params.l_max - self.params.l_min;
        out.extend(self.values.iter().map(|&v| (255.0 * (self.params.l_max - v) / span).round() as u8));
        out
    }
}
