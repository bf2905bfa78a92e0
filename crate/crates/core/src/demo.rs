//! The bundled three-floor demo building.
//!
//! Every floor is 95 x 490 cells at 0.1 m. A robot-frame offset `(dx, dy)`
//! from the floor-2 home cell maps to world coordinates
//! `HOME_ORIGIN + (dx, dy)`.

use std::collections::BTreeMap;

use crate::world::{Building, BuildingConfig, Cell, FloorId, GridMap, WorldError};

pub const CONFIG_JSON: &str = include_str!("../data/demo/building.json");
const FLOOR1: &str = include_str!("../data/demo/floor1.txt");
const FLOOR2: &str = include_str!("../data/demo/floor2.txt");
const FLOOR3: &str = include_str!("../data/demo/floor3.txt");

/// Home (charging) cell on floor 2, inside room 240.
pub const HOME_FLOOR: FloorId = 2;
pub const HOME_CELL: Cell = Cell::new(25, 440);
/// World coordinates of the home cell centre.
pub const HOME_ORIGIN: (f64, f64) = (2.55, 44.05);

/// Floor-1 home cell, 40 m up the corridor from room 140.
pub const LONG_ROUTE_START: Cell = Cell::new(69, 440);
pub const LONG_ROUTE_ROOM: &str = "140";

/// Map text for a floor's file name, as listed in the config.
pub fn floor_text(name: &str) -> Option<&'static str> {
    match name {
        "floor1.txt" => Some(FLOOR1),
        "floor2.txt" => Some(FLOOR2),
        "floor3.txt" => Some(FLOOR3),
        _ => None,
    }
}

pub fn demo_building() -> Building {
    Building::from_config_str(CONFIG_JSON, |name| {
        floor_text(name)
            .map(str::to_string)
            .ok_or_else(|| WorldError::Config(format!("no bundled floor map {name}")))
    })
    .expect("bundled demo building is valid")
}

/// The parsed config, for callers that want to re-point map paths.
pub fn demo_config() -> BuildingConfig {
    serde_json::from_str(CONFIG_JSON).expect("bundled config parses")
}

/// Floor maps keyed by id.
pub fn demo_floors() -> BTreeMap<FloorId, GridMap> {
    demo_building().floors().map(|(id, m)| (id, m.clone())).collect()
}

/// World position of a robot-frame offset from home.
pub fn offset_to_world(dx: f64, dy: f64) -> (f64, f64) {
    (HOME_ORIGIN.0 + dx, HOME_ORIGIN.1 + dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{inflate, CellState};

    #[test]
    fn loads_with_rooms_and_elevators() {
        let b = demo_building();
        assert_eq!(b.floors().count(), 3);
        assert_eq!(b.elevator_edges().len(), 3);
        for (room, fc) in b.rooms() {
            let map = b.floor(fc.floor).unwrap();
            assert_eq!(map.state(fc.cell).unwrap(), CellState::Free, "room {room}");
            assert!(inflate(map, 0.25).is_traversable(fc.cell), "room {room}");
        }
        let f2 = b.floor(2).unwrap();
        assert_eq!(f2.home(), Some(HOME_CELL));
        let (hx, hy) = f2.cell_center(HOME_CELL);
        assert!((hx - HOME_ORIGIN.0).abs() < 1e-12 && (hy - HOME_ORIGIN.1).abs() < 1e-12);
        assert_eq!(b.floor(1).unwrap().home(), Some(LONG_ROUTE_START));
    }

    #[test]
    fn figure_coordinates_land_on_room_doors() {
        let b = demo_building();
        let f2 = b.floor(2).unwrap();
        for (room, (dx, dy)) in [("238", (3.27, -4.64)), ("236", (3.34, -10.7)), ("234", (3.54, -17.1)), ("230", (5.14, -23.4))] {
            let (x, y) = offset_to_world(dx, dy);
            assert_eq!(f2.cell_at(x, y), Some(b.room(room).unwrap().cell), "room {room}");
        }
    }

    #[test]
    fn elevator_doors_face_the_shaft() {
        let b = demo_building();
        for e in b.elevator_edges() {
            assert_eq!(e.door_a, Cell::new(69, 460));
            assert_eq!(e.door_b, Cell::new(69, 460));
        }
    }
}
