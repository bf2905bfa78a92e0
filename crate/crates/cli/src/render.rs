//! Binary PPM (P6) rendering of a map with path and trajectory overlays.
//!
//! Palette, as RGB bytes:
//!
//! | layer              | bytes           |
//! |--------------------|-----------------|
//! | Free               | `FF FF FF`      |
//! | Occupied           | `00 00 00`      |
//! | Unknown            | `80 80 80`      |
//! | planned path       | `00 00 FF`      |
//! | odometry trajectory| `FF 00 00`      |
//! | true trajectory    | `00 B0 00`      |
//! | waypoints          | `FF 8C 00`      |
//!
//! Layers are painted in that order, so later ones cover earlier ones.

use hotelnav_core::world::{Cell, CellState, GridMap};
use thiserror::Error;

use crate::error::CliError;

pub const FREE: [u8; 3] = [0xFF, 0xFF, 0xFF];
pub const OCCUPIED: [u8; 3] = [0x00, 0x00, 0x00];
pub const UNKNOWN: [u8; 3] = [0x80, 0x80, 0x80];
pub const PATH: [u8; 3] = [0x00, 0x00, 0xFF];
pub const ODOMETRY: [u8; 3] = [0xFF, 0x00, 0x00];
pub const TRUE_TRAJECTORY: [u8; 3] = [0x00, 0xB0, 0x00];
pub const WAYPOINT: [u8; 3] = [0xFF, 0x8C, 0x00];

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("{what} at ({x}, {y}) lies outside the {width}x{height} map")]
    DimensionMismatch { what: &'static str, x: f64, y: f64, width: usize, height: usize },
    #[error("scale must be between 1 and 64, got {0}")]
    BadScale(usize),
    #[error("trajectory line {line}: {msg}")]
    BadTrajectory { line: usize, msg: String },
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        CliError::input(e.to_string())
    }
}

/// Ground-truth and odometry positions in metres.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub truth: Vec<(f64, f64)>,
    pub odometry: Vec<(f64, f64)>,
}

/// Reads the `t,x_true,y_true,theta_true,x_odom,y_odom,theta_odom` log
/// written by `simulate --trajectories`.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, RenderError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or_default();
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| RenderError::BadTrajectory { line: 1, msg: format!("missing column {name}") })
    };
    let idx = [find("x_true")?, find("y_true")?, find("x_odom")?, find("y_odom")?];
    let mut traj = Trajectory::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let mut v = [0.0; 4];
        for (slot, &col) in v.iter_mut().zip(&idx) {
            let field = fields.get(col).ok_or_else(|| RenderError::BadTrajectory {
                line: i + 1,
                msg: format!("expected {} fields", cols.len()),
            })?;
            *slot = field
                .trim()
                .parse()
                .map_err(|_| RenderError::BadTrajectory { line: i + 1, msg: format!("{field:?} is not a number") })?;
        }
        traj.truth.push((v[0], v[1]));
        traj.odometry.push((v[2], v[3]));
    }
    Ok(traj)
}

/// Everything drawn on top of the map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overlays {
    pub path: Vec<Cell>,
    pub trajectory: Trajectory,
    /// Waypoint positions in metres.
    pub waypoints: Vec<(f64, f64)>,
}

struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Canvas {
    fn fill(&mut self, px: usize, py: usize, w: usize, h: usize, rgb: [u8; 3]) {
        for y in py..(py + h).min(self.height) {
            for x in px..(px + w).min(self.width) {
                let i = 3 * (y * self.width + x);
                self.pixels[i..i + 3].copy_from_slice(&rgb);
            }
        }
    }
}

/// Renders `map` at `scale` pixels per cell. Row 0 of the map is the top
/// row of the image.
pub fn render_ppm(map: &GridMap, overlays: &Overlays, scale: usize) -> Result<Vec<u8>, RenderError> {
    if !(1..=64).contains(&scale) {
        return Err(RenderError::BadScale(scale));
    }
    let (w, h) = (map.width(), map.height());
    let mismatch = |what, x, y| RenderError::DimensionMismatch { what, x, y, width: w, height: h };
    for c in &overlays.path {
        if !map.in_bounds(*c) {
            return Err(mismatch("path cell", c.x as f64, c.y as f64));
        }
    }
    let metres = [
        ("odometry point", &overlays.trajectory.odometry),
        ("trajectory point", &overlays.trajectory.truth),
        ("waypoint", &overlays.waypoints),
    ];
    for (what, pts) in metres {
        if let Some(&(x, y)) = pts.iter().find(|&&(x, y)| map.cell_at(x, y).is_none()) {
            return Err(mismatch(what, x, y));
        }
    }

    let mut canvas = Canvas { width: w * scale, height: h * scale, pixels: vec![0; 3 * w * h * scale * scale] };
    for (i, state) in map.cells().iter().enumerate() {
        let c = map.cell_of(i);
        let rgb = match state {
            CellState::Free => FREE,
            CellState::Occupied => OCCUPIED,
            CellState::Unknown => UNKNOWN,
        };
        canvas.fill(c.x * scale, c.y * scale, scale, scale, rgb);
    }
    for c in &overlays.path {
        canvas.fill(c.x * scale, c.y * scale, scale, scale, PATH);
    }
    // Trajectories are drawn at pixel resolution.
    let (cw, ch) = (canvas.width, canvas.height);
    let to_px = |x: f64, y: f64| {
        let px = ((x / map.resolution()) * scale as f64).floor().max(0.0) as usize;
        let py = ((y / map.resolution()) * scale as f64).floor().max(0.0) as usize;
        (px.min(cw - 1), py.min(ch - 1))
    };
    for (pts, rgb) in [(&overlays.trajectory.odometry, ODOMETRY), (&overlays.trajectory.truth, TRUE_TRAJECTORY)] {
        for &(x, y) in pts {
            let (px, py) = to_px(x, y);
            canvas.fill(px, py, 1, 1, rgb);
        }
    }
    // Waypoints get a marker one cell wide, centred on the point.
    let half = scale / 2;
    for &(x, y) in &overlays.waypoints {
        let (px, py) = to_px(x, y);
        canvas.fill(px.saturating_sub(half), py.saturating_sub(half), scale.max(2), scale.max(2), WAYPOINT);
    }

    let mut out = format!("P6\n{} {}\n255\n", canvas.width, canvas.height).into_bytes();
    out.extend_from_slice(&canvas.pixels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels(ppm: &[u8]) -> Vec<[u8; 3]> {
        // Skip the three header lines.
        let mut newlines = 0;
        let start = ppm.iter().position(|&b| {
            newlines += (b == b'\n') as usize;
            newlines == 3
        });
        ppm[start.unwrap() + 1..].chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
    }

    #[test]
    fn all_free_two_by_two_is_four_white_pixels() {
        let map = GridMap::parse("..\n..\n").unwrap();
        let ppm = render_ppm(&map, &Overlays::default(), 1).unwrap();
        assert!(ppm.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(pixels(&ppm), vec![FREE; 4]);
    }

    #[test]
    fn one_occupied_cell_is_one_black_block() {
        let map = GridMap::parse("...\n.#.\n...\n?..\n").unwrap();
        let px = pixels(&render_ppm(&map, &Overlays::default(), 3).unwrap());
        assert_eq!(px.len(), 9 * 12);
        let black: Vec<usize> = (0..px.len()).filter(|&i| px[i] == OCCUPIED).collect();
        let expected: Vec<usize> = (3..6).flat_map(|y| (3..6).map(move |x| y * 9 + x)).collect();
        assert_eq!(black, expected);
        assert_eq!(px.iter().filter(|&&p| p == UNKNOWN).count(), 9);
    }

    #[test]
    fn overlays_use_their_colours() {
        let map = GridMap::parse("....\n....\n").unwrap();
        let overlays = Overlays {
            path: vec![Cell::new(0, 0)],
            trajectory: Trajectory { truth: vec![(0.15, 0.05)], odometry: vec![(0.25, 0.05)] },
            waypoints: vec![(0.35, 0.15)],
        };
        let px = pixels(&render_ppm(&map, &overlays, 1).unwrap());
        assert_eq!(px[0], PATH);
        assert_eq!(px[1], TRUE_TRAJECTORY);
        assert_eq!(px[2], ODOMETRY);
        assert_eq!(px[7], WAYPOINT);
    }

    #[test]
    fn out_of_map_overlays_are_rejected() {
        let map = GridMap::parse("..\n..\n").unwrap();
        let path = Overlays { path: vec![Cell::new(2, 0)], ..Overlays::default() };
        assert!(matches!(render_ppm(&map, &path, 1), Err(RenderError::DimensionMismatch { .. })));
        let traj = Overlays {
            trajectory: Trajectory { truth: vec![(5.0, 0.0)], odometry: vec![(0.0, 0.0)] },
            ..Overlays::default()
        };
        assert!(matches!(render_ppm(&map, &traj, 1), Err(RenderError::DimensionMismatch { .. })));
    }

    #[test]
    fn trajectory_log_parses() {
        let t = parse_trajectory_csv("t,x_true,y_true,theta_true,x_odom,y_odom,theta_odom\n0.0,1,2,0,1.5,2.5,0\n").unwrap();
        assert_eq!(t.truth, vec![(1.0, 2.0)]);
        assert_eq!(t.odometry, vec![(1.5, 2.5)]);
        assert!(parse_trajectory_csv("a,b\n").is_err());
    }
}
