use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;
use crate::planner::{dijkstra_field, DStar, PlanError, PotentialField};
use crate::robot::Pose;
use crate::world::{inflate, Building, Cell, CellState, CostGrid, FloorCell, FloorId, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("unknown room {0}")]
    UnknownRoom(String),
    #[error("room {room} is unreachable from floor {floor} cell {cell}")]
    Unreachable { room: String, floor: FloorId, cell: Cell },
    #[error("start cell {0} is not free")]
    StartBlocked(Cell),
    #[error("path is empty")]
    EmptyPath,
    #[error("waypoint spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Door cell of a room.
pub fn room_to_goal(building: &Building, room: &str) -> Result<FloorCell, RouteError> {
    building.room(room).map_err(|e| match e {
        WorldError::UnknownRoom(r) => RouteError::UnknownRoom(r),
        other => RouteError::World(other),
    })
}

/// Length in metres of an 8-connected cell path.
pub fn path_length(path: &[Cell], resolution: f64) -> f64 {
    path.windows(2)
        .map(|w| if w[0].x != w[1].x && w[0].y != w[1].y { std::f64::consts::SQRT_2 } else { 1.0 })
        .sum::<f64>()
        * resolution
}

/// Samples a waypoint wherever the path's running length first reaches a
/// multiple of `spacing`, plus the final cell. Each waypoint faces the next;
/// the last one keeps the direction of travel.
pub fn make_waypoints(path: &[Cell], resolution: f64, spacing: f64) -> Result<Vec<Pose>, RouteError> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(RouteError::InvalidSpacing(spacing));
    }
    let last = path.len().checked_sub(1).ok_or(RouteError::EmptyPath)?;
    let mut picks = Vec::new();
    let mut run = 0.0;
    let mut mark = spacing;
    for i in 1..path.len() {
        run += path_length(&path[i - 1..=i], resolution);
        if run + 1e-9 >= mark {
            picks.push(i);
            mark = ((run + 1e-9) / spacing).floor() * spacing + spacing;
        }
    }
    if picks.last() != Some(&last) {
        picks.push(last);
    }
    let center = |c: Cell| ((c.x as f64 + 0.5) * resolution, (c.y as f64 + 0.5) * resolution);
    let mut poses: Vec<Pose> = picks
        .iter()
        .map(|&i| {
            let (x, y) = center(path[i]);
            Pose::new(x, y, 0.0)
        })
        .collect();
    for i in 0..poses.len() {
        let heading = if i + 1 < poses.len() {
            (poses[i + 1].y - poses[i].y).atan2(poses[i + 1].x - poses[i].x)
        } else if last > 0 {
            let (px, py) = center(path[last - 1]);
            (poses[i].y - py).atan2(poses[i].x - px)
        } else {
            0.0
        };
        poses[i] = Pose::new(poses[i].x, poses[i].y, heading);
    }
    Ok(poses)
}

/// How waypoints are placed along each leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointRule {
    /// Roughly every this many metres.
    Spacing(f64),
    /// This many waypoints, evenly spread by length.
    Count(usize),
}

impl WaypointRule {
    pub fn waypoints(&self, path: &[Cell], resolution: f64) -> Result<Vec<Pose>, RouteError> {
        match *self {
            WaypointRule::Spacing(s) => make_waypoints(path, resolution, s),
            WaypointRule::Count(0) => Err(RouteError::InvalidSpacing(0.0)),
            WaypointRule::Count(k) => {
                let len = path_length(path, resolution);
                let spacing = if len > 0.0 { len / k as f64 } else { 1.0 };
                make_waypoints(path, resolution, spacing)
            }
        }
    }
}

/// One single-floor stretch of a mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub floor: FloorId,
    pub path: Vec<Cell>,
    pub cost: f64,
    pub expansions: usize,
    pub waypoints: Vec<Pose>,
}

/// An elevator ride joining two legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transit {
    /// Index into the building's elevator edges.
    pub edge: usize,
    pub from: FloorCell,
    pub to: FloorCell,
    pub transit_s: f64,
    pub expected_wait_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub start: FloorCell,
    pub goal_room: String,
    pub goal: FloorCell,
    pub legs: Vec<Leg>,
    pub transits: Vec<Transit>,
    /// Sum of leg costs plus weighted transit times, in metres.
    pub total_cost: f64,
}

impl MissionPlan {
    pub fn waypoint_count(&self) -> usize {
        self.legs.iter().map(|l| l.waypoints.len()).sum()
    }
}

/// Routing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouteConfig {
    /// Obstacle inflation radius in metres.
    pub inflation_radius: f64,
    /// Metres of path cost charged per second of elevator transit.
    pub time_cost_weight: f64,
    pub waypoints: WaypointRule,
    /// Wait recorded on each transit of the plan.
    pub expected_wait_s: f64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        RouteConfig {
            inflation_radius: 0.25,
            time_cost_weight: 1.0,
            waypoints: WaypointRule::Spacing(10.0),
            expected_wait_s: 10.0,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Via {
    Walk,
    Ride(usize),
}

/// Plans from `start` to a room's door, riding elevators where that is cheaper.
///
/// The floor-level search runs over the start, the goal and every elevator
/// endpoint; walking costs come from exact per-floor distance fields and a
/// ride costs its transit time times `time_cost_weight`. Each chosen leg is
/// then planned on its floor.
pub fn plan_multifloor(
    building: &Building,
    start: FloorCell,
    room: &str,
    cfg: &RouteConfig,
) -> Result<MissionPlan, RouteError> {
    let goal = room_to_goal(building, room)?;
    let start_map = building.floor(start.floor)?;
    if start_map.state(start.cell)? != CellState::Free {
        return Err(RouteError::StartBlocked(start.cell));
    }
    let grids: BTreeMap<FloorId, CostGrid> =
        building.floors().map(|(id, m)| (id, inflate(m, cfg.inflation_radius))).collect();
    if !grids[&start.floor].is_traversable(start.cell) {
        return Err(PlanError::StartBlocked(start.cell).into());
    }
    if !grids[&goal.floor].is_traversable(goal.cell) {
        return Err(PlanError::GoalBlocked(goal.cell).into());
    }

    let mut nodes = vec![start, goal];
    for e in building.elevator_edges() {
        for end in [e.a, e.b] {
            if !nodes.contains(&end) {
                nodes.push(end);
            }
        }
    }
    // Distance fields toward every node whose cell is traversable.
    let mut fields: Vec<Option<PotentialField>> = Vec::with_capacity(nodes.len());
    for n in &nodes {
        let grid = &grids[&n.floor];
        fields.push(if grid.is_traversable(n.cell) { Some(dijkstra_field(grid, n.cell)?) } else { None });
    }
    let walk = |from: usize, to: usize| -> Cost {
        if from == to || nodes[from].floor != nodes[to].floor {
            return Cost::INFINITE;
        }
        match &fields[to] {
            Some(f) => f.exact(nodes[from].cell).unwrap_or(Cost::INFINITE),
            None => Cost::INFINITE,
        }
    };

    let mut dist = vec![Cost::INFINITE; nodes.len()];
    let mut parent: Vec<Option<(usize, Via)>> = vec![None; nodes.len()];
    let mut heap = BinaryHeap::new();
    dist[0] = Cost::ZERO;
    heap.push(Reverse((Cost::ZERO, 0usize)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d != dist[u] {
            continue;
        }
        let mut relax = |v: usize, c: Cost, via: Via, heap: &mut BinaryHeap<Reverse<(Cost, usize)>>| {
            let nd = d + c;
            if c.is_finite() && nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some((u, via));
                heap.push(Reverse((nd, v)));
            }
        };
        for v in 0..nodes.len() {
            relax(v, walk(u, v), Via::Walk, &mut heap);
        }
        for (i, e) in building.elevator_edges().iter().enumerate() {
            if let Some((other, _)) = e.other_end(nodes[u]) {
                let v = nodes.iter().position(|n| *n == other).expect("endpoint registered");
                relax(v, Cost::from_meters(e.transit_s * cfg.time_cost_weight), Via::Ride(i), &mut heap);
            }
        }
    }
    let goal_idx = 1;
    if !dist[goal_idx].is_finite() {
        return Err(RouteError::Unreachable { room: room.to_string(), floor: start.floor, cell: start.cell });
    }

    // Walk the parent chain back to the start and split it at each ride.
    let mut hops = Vec::new();
    let mut cur = goal_idx;
    while let Some((prev, via)) = parent[cur] {
        hops.push((prev, via, cur));
        cur = prev;
    }
    hops.reverse();
    let mut legs = Vec::new();
    let mut transits = Vec::new();
    let mut leg_start = 0usize;
    let mut leg_end = 0usize;
    for (from, via, to) in hops {
        match via {
            Via::Walk => leg_end = to,
            Via::Ride(edge) => {
                legs.push(plan_leg(&grids, nodes[leg_start], nodes[from], cfg)?);
                let e = &building.elevator_edges()[edge];
                transits.push(Transit {
                    edge,
                    from: nodes[from],
                    to: nodes[to],
                    transit_s: e.transit_s,
                    expected_wait_s: cfg.expected_wait_s,
                });
                leg_start = to;
                leg_end = to;
            }
        }
    }
    debug_assert_eq!(nodes[leg_end], goal);
    legs.push(plan_leg(&grids, nodes[leg_start], goal, cfg)?);
    Ok(MissionPlan {
        start,
        goal_room: room.to_string(),
        goal,
        legs,
        transits,
        total_cost: dist[goal_idx].to_meters(),
    })
}

fn plan_leg(
    grids: &BTreeMap<FloorId, CostGrid>,
    from: FloorCell,
    to: FloorCell,
    cfg: &RouteConfig,
) -> Result<Leg, RouteError> {
    let grid = &grids[&from.floor];
    let mut dstar = DStar::new(grid.clone(), from.cell, to.cell)?;
    let result = dstar.compute()?;
    if !result.is_found() {
        return Err(RouteError::Unreachable { room: String::new(), floor: from.floor, cell: from.cell });
    }
    let waypoints = cfg.waypoints.waypoints(&result.path, grid.resolution())?;
    Ok(Leg { floor: from.floor, path: result.path, cost: result.cost, expansions: result.expansions, waypoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{demo_building, HOME_CELL, HOME_FLOOR};
    use crate::planner::astar_plan;
    use crate::world::{BuildingConfig, GridMap};

    #[test]
    fn room_lookup() {
        let b = demo_building();
        let fc = room_to_goal(&b, "238").unwrap();
        assert_eq!(fc.floor, 2);
        assert!(matches!(room_to_goal(&b, "999"), Err(RouteError::UnknownRoom(_))));
        for (room, fc) in b.rooms() {
            let map = b.floor(fc.floor).unwrap();
            assert_eq!(map.room_door(room), Some(fc.cell));
        }
    }

    #[test]
    fn waypoint_sampling() {
        let two = [Cell::new(0, 0), Cell::new(1, 0)];
        assert_eq!(make_waypoints(&two, 0.1, 5.0).unwrap().len(), 1);
        let line: Vec<Cell> = (0..=400).map(|y| Cell::new(3, 400 - y)).collect();
        let w = make_waypoints(&line, 0.1, 10.0).unwrap();
        assert!(w.len() == 4 || w.len() == 5);
        let end = w.last().unwrap();
        assert!((end.x - 0.35).abs() < 1e-12 && (end.y - 0.05).abs() < 1e-12);
        // Heading points along -y.
        assert!(w.iter().all(|p| (p.theta + std::f64::consts::FRAC_PI_2).abs() < 1e-12));
        for k in [2, 4, 6] {
            assert_eq!(WaypointRule::Count(k).waypoints(&line, 0.1).unwrap().len(), k);
        }
        assert!(matches!(make_waypoints(&[], 0.1, 1.0), Err(RouteError::EmptyPath)));
        assert!(matches!(make_waypoints(&two, 0.1, 0.0), Err(RouteError::InvalidSpacing(_))));
    }

    #[test]
    fn same_floor_single_leg() {
        let b = demo_building();
        let plan = plan_multifloor(&b, FloorCell::new(HOME_FLOOR, HOME_CELL), "236", &RouteConfig::default()).unwrap();
        assert_eq!(plan.legs.len(), 1);
        assert!(plan.transits.is_empty());
        let leg = &plan.legs[0];
        assert_eq!(leg.path[0], HOME_CELL);
        assert_eq!(*leg.path.last().unwrap(), b.room("236").unwrap().cell);
        let grid = inflate(b.floor(2).unwrap(), 0.25);
        let oracle = astar_plan(&grid, HOME_CELL, leg.path[leg.path.len() - 1]).unwrap();
        assert_eq!(oracle.cost, leg.cost);
        assert_eq!(plan.total_cost, leg.cost);
    }

    #[test]
    fn upstairs_uses_one_ride() {
        let b = demo_building();
        let plan = plan_multifloor(&b, FloorCell::new(HOME_FLOOR, HOME_CELL), "320", &RouteConfig::default()).unwrap();
        assert_eq!(plan.transits.len(), 1);
        assert_eq!(plan.legs.len(), 2);
        let t = &plan.transits[0];
        assert_eq!((t.from.floor, t.to.floor), (2, 3));
        assert_eq!(*plan.legs[0].path.last().unwrap(), t.from.cell);
        assert_eq!(plan.legs[1].path[0], t.to.cell);
        let sum: f64 = plan.legs.iter().map(|l| l.cost).sum::<f64>() + t.transit_s;
        assert!((sum - plan.total_cost).abs() < 1e-9);
    }

    /// Two floors joined by two elevators; the cheaper stitching must win.
    #[test]
    fn cheaper_elevator_chosen() {
        let f1 = "##########\n#E......E#\n#........#\n##########\n";
        let f2 = "##########\n#E......E#\n#........#\n##########\n";
        let config: BuildingConfig = serde_json::from_str(
            r#"{"resolution": 1.0,
                "floors": [{"id": 1, "map": "a"}, {"id": 2, "map": "b"}],
                "rooms": [{"room": "201", "floor": 2, "cell": [7, 2]}],
                "elevator_edges": [
                    {"a": {"floor": 1, "cell": [1, 1]}, "b": {"floor": 2, "cell": [1, 1]}, "transit_s": 4.0},
                    {"a": {"floor": 1, "cell": [8, 1]}, "b": {"floor": 2, "cell": [8, 1]}, "transit_s": 3.0}
                ]}"#,
        )
        .unwrap();
        let mut floors = BTreeMap::new();
        floors.insert(1, GridMap::parse_with_resolution(f1, 1.0).unwrap());
        floors.insert(2, GridMap::parse_with_resolution(f2, 1.0).unwrap());
        let b = Building::from_parts(&config, floors).unwrap();
        let cfg = RouteConfig { inflation_radius: 0.0, ..RouteConfig::default() };
        let start = FloorCell::new(1, Cell::new(2, 2));
        let plan = plan_multifloor(&b, start, "201", &cfg).unwrap();

        // Enumerate both stitchings by hand.
        let g1 = inflate(b.floor(1).unwrap(), 0.0);
        let g2 = inflate(b.floor(2).unwrap(), 0.0);
        let total = |e: usize| {
            let edge = &b.elevator_edges()[e];
            astar_plan(&g1, start.cell, edge.a.cell).unwrap().cost
                + edge.transit_s
                + astar_plan(&g2, edge.b.cell, Cell::new(7, 2)).unwrap().cost
        };
        let (t0, t1) = (total(0), total(1));
        assert!(t0 != t1);
        let best = if t0 < t1 { 0 } else { 1 };
        assert_eq!(plan.transits[0].edge, best);
        assert!((plan.total_cost - t0.min(t1)).abs() < 1e-9);
    }

    #[test]
    fn no_connectivity() {
        let config: BuildingConfig = serde_json::from_str(
            r#"{"resolution": 1.0, "floors": [{"id": 1, "map": "a"}, {"id": 2, "map": "b"}],
                "rooms": [{"room": "201", "floor": 2, "cell": [1, 1]}]}"#,
        )
        .unwrap();
        let mut floors = BTreeMap::new();
        floors.insert(1, GridMap::parse_with_resolution("...\n...\n", 1.0).unwrap());
        floors.insert(2, GridMap::parse_with_resolution("...\n...\n", 1.0).unwrap());
        let b = Building::from_parts(&config, floors).unwrap();
        let cfg = RouteConfig { inflation_radius: 0.0, ..RouteConfig::default() };
        assert!(matches!(
            plan_multifloor(&b, FloorCell::new(1, Cell::new(0, 0)), "201", &cfg),
            Err(RouteError::Unreachable { .. })
        ));
    }
}
