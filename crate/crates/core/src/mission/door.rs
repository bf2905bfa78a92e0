use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot::normalize_angle;
use crate::sensors::Scan;
use crate::world::{Cell, CellState, GridMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoorError {
    #[error("no beam within {max_gap_deg} degrees of bearing {bearing:.4} rad")]
    NoBeamNearBearing { bearing: f64, max_gap_deg: f64 },
}

/// Beams further than this from the door bearing cannot judge the door.
const MAX_GAP_DEG: f64 = 10.0;

/// True when the beams closest to `door_bearing` all read deeper than
/// `open_range_threshold` (or see nothing at all).
pub fn elevator_door_open(scan: &Scan, door_bearing: f64, open_range_threshold: f64) -> Result<bool, DoorError> {
    let gap = |b: f64| normalize_angle(b - door_bearing).abs();
    let nearest = scan.beams.iter().map(|b| gap(b.bearing)).fold(f64::INFINITY, f64::min);
    if !(nearest <= MAX_GAP_DEG.to_radians()) {
        return Err(DoorError::NoBeamNearBearing { bearing: door_bearing, max_gap_deg: MAX_GAP_DEG });
    }
    Ok(scan
        .beams
        .iter()
        .filter(|b| gap(b.bearing) <= nearest + 1e-12)
        .all(|b| b.range.is_none_or(|r| r > open_range_threshold)))
}

/// The wall cells that open together with `door`: a run along the wall
/// through `door`, `width` metres wide. The wall runs along whichever axis
/// has more occupied cells next to the door.
pub fn door_span(map: &GridMap, door: Cell, width: f64) -> Vec<Cell> {
    let half = ((width / map.resolution() - 1.0) / 2.0).round().max(0.0) as isize;
    let blocked = |dx: isize, dy: isize| {
        door.offset(dx, dy).is_some_and(|c| map.state(c) == Ok(CellState::Occupied))
    };
    let horizontal = blocked(-1, 0) as u8 + blocked(1, 0) as u8 >= blocked(0, -1) as u8 + blocked(0, 1) as u8;
    let mut span = vec![door];
    for dir in [-1isize, 1] {
        for k in 1..=half {
            let (dx, dy) = if horizontal { (dir * k, 0) } else { (0, dir * k) };
            if !blocked(dx, dy) {
                break;
            }
            span.push(door.offset(dx, dy).expect("blocked cells are in bounds"));
        }
    }
    span.sort_by_key(|c| (c.y, c.x));
    span
}

/// Elevator arrival and polling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoorGateConfig {
    pub open_range_threshold: f64,
    /// The car arrives after a uniform wait in `[0, max_arrival_s)`.
    pub max_arrival_s: f64,
    pub poll_s: f64,
    /// Give up waiting after this long.
    pub max_wait_s: f64,
    /// Range of the forward-looking check.
    pub sensor_range: f64,
    /// Width of the opening; the wall cells it covers clear when the car arrives.
    pub door_width_m: f64,
}

impl Default for DoorGateConfig {
    fn default() -> Self {
        DoorGateConfig { open_range_threshold: 1.5, max_arrival_s: 20.0, poll_s: 1.0, max_wait_s: 60.0, sensor_range: 5.6, door_width_m: 0.9 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::Pose;
    use crate::sensors::{sonar_scan, Beam};

    fn one_beam(range: Option<f64>) -> Scan {
        Scan { origin: Pose::default(), beams: vec![Beam { bearing: 0.0, range }], max_range: 5.6, timestamp: 0.0 }
    }

    #[test]
    fn closed_and_open() {
        assert!(!elevator_door_open(&one_beam(Some(0.8)), 0.0, 1.5).unwrap());
        assert!(elevator_door_open(&one_beam(None), 0.0, 1.5).unwrap());
        assert!(elevator_door_open(&one_beam(Some(2.0)), 0.0, 1.5).unwrap());
        assert!(matches!(
            elevator_door_open(&one_beam(None), 1.0, 1.5),
            Err(DoorError::NoBeamNearBearing { .. })
        ));
    }

    #[test]
    fn tracks_door_cell_toggle() {
        // Robot faces a one-cell door in a wall with a shaft behind it.
        let text = "#######\n###.###\n###.###\n###.###\n###D###\n#.....#\n#.....#\n#######\n".replace('D', "#");
        let mut map = GridMap::parse_with_resolution(&text, 0.5).unwrap();
        let door = Cell::new(3, 4);
        let pose = Pose::new(1.75, 2.75, -std::f64::consts::FRAC_PI_2);
        // The -10/+10 sonar pair straddles the door bearing.
        let check = |m: &GridMap| elevator_door_open(&sonar_scan(m, &pose, 5.0).unwrap(), 0.0, 1.0).unwrap();
        assert!(!check(&map));
        map.set_state(door, CellState::Free).unwrap();
        assert!(check(&map));
        map.set_state(door, CellState::Occupied).unwrap();
        assert!(!check(&map));
    }

    #[test]
    fn span_follows_the_wall() {
        let map = GridMap::parse("..........\n##########\n..........\n").unwrap();
        let span = door_span(&map, Cell::new(5, 1), 0.5);
        assert_eq!(span, (3..=7).map(|x| Cell::new(x, 1)).collect::<Vec<_>>());
        // Stops at the end of the wall.
        let map = GridMap::parse("#.#\n#.#\n###\n").unwrap();
        assert_eq!(door_span(&map, Cell::new(1, 2), 0.9), vec![Cell::new(0, 2), Cell::new(1, 2), Cell::new(2, 2)]);
    }
}
