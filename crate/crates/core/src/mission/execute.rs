use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::delivery::{delivery_step, qr_token_for, DeliveryError, DeliveryEvent, DeliveryPhase, DeliveryState};
use super::door::{door_span, elevator_door_open, DoorGateConfig};
use super::follow::{travel_estimate, ControllerConfig, FollowError, Follower, Outcome, TravelLog};
use super::route::{MissionPlan, RouteConfig, RouteError};
use crate::planner::{DStar, PlanError};
use crate::robot::{normalize_angle, pose_error, NoiseModel, Pose};
use crate::sensors::{lidar_scan, LidarConfig};
use crate::world::{inflate, Building, Cell, CellState, CostGrid, FloorId, GridMap, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Follow(#[from] FollowError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Delivery(#[from] DeliveryError),
    #[error("change at t={t} targets cell {cell} outside floor {floor}")]
    BadChange { t: f64, floor: FloorId, cell: Cell },
}

/// Everything that shapes a simulated mission besides the route itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    pub route: RouteConfig,
    pub controller: ControllerConfig,
    pub door: DoorGateConfig,
    pub noise: NoiseModel,
    /// Overrides the controller's budget factor when set.
    pub time_budget_s: Option<f64>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            route: RouteConfig::default(),
            controller: ControllerConfig::default(),
            door: DoorGateConfig::default(),
            noise: NoiseModel::DEFAULT,
            time_budget_s: None,
        }
    }
}

/// A cell changing state mid-run, e.g. a person stepping into the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeEvent {
    pub t: f64,
    pub floor: FloorId,
    pub cell: Cell,
    pub state: CellState,
}

/// What to drive.
#[derive(Debug, Clone, PartialEq)]
pub enum RouteSpec {
    /// A planned mission; legs are re-planned with D* when the map changes.
    Planned(MissionPlan),
    /// A fixed single-floor waypoint list, driven point to point.
    Explicit { floor: FloorId, room: String, waypoints: Vec<Pose>, returns_home: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitRecord {
    pub edge: usize,
    pub from_floor: FloorId,
    pub to_floor: FloorId,
    pub waited_s: f64,
    pub transit_s: f64,
    pub door_checks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElevatorEvent {
    DoorChecked { t: f64, open: bool },
    Boarded { t: f64, edge: usize },
    GaveUp { t: f64 },
}

/// Result of one simulated mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRun {
    pub outcome: Outcome,
    pub elapsed: f64,
    pub waypoint_count: usize,
    /// Gap between true and odometry position at the end.
    pub final_err_m: f64,
    /// True distance to the final target at the end.
    pub goal_err_m: f64,
    pub expansions: usize,
    pub replans: usize,
    pub transits: Vec<TransitRecord>,
    pub elevator_events: Vec<ElevatorEvent>,
    pub delivery: DeliveryState,
    pub delivery_trace: Vec<DeliveryPhase>,
    pub legs: Vec<TravelLog>,
}

struct LegDrive {
    floor: FloorId,
    guide: Vec<(f64, f64)>,
    waypoints: Vec<Pose>,
    planner: Option<(DStar, Vec<Cell>)>,
}

fn centers(map: &GridMap, path: &[Cell]) -> Vec<(f64, f64)> {
    path.iter().map(|&c| map.cell_center(c)).collect()
}

/// Drives a mission from `start`, applying `changes` as the clock passes
/// them, and records the delivery workflow alongside.
///
/// `seed` only names the order and its token; all randomness comes from `rng`.
pub fn run_mission<R: Rng + ?Sized>(
    building: &Building,
    start: Pose,
    spec: &RouteSpec,
    changes: &[ChangeEvent],
    cfg: &MissionConfig,
    seed: u64,
    rng: &mut R,
) -> Result<MissionRun, MissionError> {
    let mut world = building.clone();
    for c in changes {
        if !world.floor(c.floor)?.in_bounds(c.cell) {
            return Err(MissionError::BadChange { t: c.t, floor: c.floor, cell: c.cell });
        }
    }
    let mut pending: Vec<ChangeEvent> = changes.to_vec();
    pending.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut pending = pending.into_iter().peekable();

    let (room, returns_home) = match spec {
        RouteSpec::Planned(p) => (p.goal_room.clone(), false),
        RouteSpec::Explicit { room, returns_home, .. } => (room.clone(), *returns_home),
    };
    let mut delivery = DeliveryState::new();
    let mut trace = vec![delivery.phase];
    let advance = |d: &mut DeliveryState, trace: &mut Vec<DeliveryPhase>, e: DeliveryEvent| {
        let next = delivery_step(d, &e)?;
        *d = next;
        trace.push(d.phase);
        Ok::<(), MissionError>(())
    };
    let token = qr_token_for(seed, &room);
    advance(
        &mut delivery,
        &mut trace,
        DeliveryEvent::OrderPlaced { order_id: format!("order-{seed}"), token: token.clone(), room: room.clone() },
    )?;
    advance(&mut delivery, &mut trace, DeliveryEvent::ArrivedAtKitchen)?;
    advance(&mut delivery, &mut trace, DeliveryEvent::LoadConfirmed)?;

    let ctl = cfg.controller;
    let radius = cfg.route.inflation_radius;
    let (legs, transits, waypoint_count) = match spec {
        RouteSpec::Planned(p) => (p.legs.clone(), p.transits.clone(), p.waypoint_count()),
        RouteSpec::Explicit { waypoints, .. } => (Vec::new(), Vec::new(), waypoints.len()),
    };

    // Mission deadline from the noiseless estimate of every stage.
    let deadline = match cfg.time_budget_s {
        Some(b) => b,
        None => {
            let mut est = 0.0;
            let mut heading = start.theta;
            match spec {
                RouteSpec::Planned(_) => {
                    for leg in &legs {
                        let map = world.floor(leg.floor)?;
                        let pts = centers(map, &leg.path);
                        est += travel_estimate(heading, &pts, &ctl);
                        if pts.len() > 1 {
                            let (a, b) = (pts[pts.len() - 2], pts[pts.len() - 1]);
                            heading = (b.1 - a.1).atan2(b.0 - a.0);
                        }
                    }
                    for t in &transits {
                        est += t.transit_s + cfg.door.max_arrival_s + PI / ctl.w_max;
                    }
                }
                RouteSpec::Explicit { waypoints, .. } => {
                    let mut pts = vec![(start.x, start.y)];
                    pts.extend(waypoints.iter().map(|w| (w.x, w.y)));
                    est += travel_estimate(heading, &pts, &ctl);
                }
            }
            ctl.time_budget_factor * est
        }
    };

    let mut true_pose = start;
    let mut odom = start;
    let mut now = 0.0;
    let mut expansions = 0;
    let mut replans = 0;
    let mut logs = Vec::new();
    let mut records = Vec::new();
    let mut events = Vec::new();
    let leg_count = if legs.is_empty() { 1 } else { legs.len() };
    let mut outcome = Outcome::Reached;
    let mut goal_err = 0.0;

    for i in 0..leg_count {
        // Apply changes that happened before this leg starts.
        while let Some(c) = pending.next_if(|c| c.t <= now) {
            world.floor_mut(c.floor)?.set_state(c.cell, c.state)?;
        }
        let mut drive = match spec {
            RouteSpec::Explicit { floor, waypoints, .. } => LegDrive {
                floor: *floor,
                guide: waypoints.iter().map(|w| (w.x, w.y)).collect(),
                waypoints: waypoints.clone(),
                planner: None,
            },
            RouteSpec::Planned(_) => {
                let leg = &legs[i];
                let map = world.floor(leg.floor)?;
                let grid = inflate(map, radius);
                let from = if i == 0 { leg.path[0] } else { nearest_free(&grid, map, odom).unwrap_or(leg.path[0]) };
                let goal = *leg.path.last().expect("legs are non-empty");
                let mut dstar = DStar::new(grid, from, goal)?;
                let res = dstar.compute()?;
                expansions += res.expansions;
                if !res.is_found() {
                    return Err(RouteError::Unreachable { room, floor: leg.floor, cell: from }.into());
                }
                let (path, waypoints) = if res.path == leg.path {
                    (leg.path.clone(), leg.waypoints.clone())
                } else {
                    replans += 1;
                    let w = cfg.route.waypoints.waypoints(&res.path, map.resolution())?;
                    (res.path.clone(), w)
                };
                LegDrive { floor: leg.floor, guide: centers(map, &path), waypoints, planner: Some((dstar, path)) }
            }
        };

        let map = world.floor(drive.floor)?;
        let mut follower = Follower::new(
            map,
            true_pose,
            odom,
            drive.guide.clone(),
            drive.waypoints.clone(),
            cfg.noise,
            ctl,
            now,
        )?;
        follower.set_budget((deadline - now).max(ctl.dt));
        let leg_outcome = loop {
            let mut dirty = Vec::new();
            while let Some(c) = pending.next_if(|c| c.t <= follower.now()) {
                world.floor_mut(c.floor)?.set_state(c.cell, c.state)?;
                if c.floor == drive.floor {
                    dirty.push(c.cell);
                }
            }
            if !dirty.is_empty() {
                if let Some((dstar, path)) = drive.planner.as_mut() {
                    let map = world.floor(drive.floor)?;
                    let mut cell_changes = Vec::new();
                    for &c in &dirty {
                        cell_changes.extend(dstar.grid().reinflate_around(map, c, radius));
                    }
                    let here = nearest_free(dstar.grid(), map, follower.odom_pose()).unwrap_or(dstar.start());
                    dstar.move_start(here)?;
                    match dstar.update(&cell_changes) {
                        Ok(res) => {
                            expansions += res.expansions;
                            if res.is_found() {
                                let suffix = path.iter().position(|&c| c == here).map(|j| &path[j..]);
                                if suffix != Some(res.path.as_slice()) {
                                    replans += 1;
                                    let w = cfg.route.waypoints.waypoints(&res.path, map.resolution())?;
                                    follower.set_route(centers(map, &res.path), w);
                                    *path = res.path;
                                }
                            }
                        }
                        // The robot's own cell was filled in; keep driving the old route.
                        Err(PlanError::StartBlocked(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            let map = world.floor(drive.floor)?;
            if let Some(o) = follower.step(map, rng)? {
                break o;
            }
        };
        true_pose = follower.true_pose();
        odom = follower.odom_pose();
        now = follower.now();
        let log = follower.finish(leg_outcome);
        goal_err = log.goal_error;
        logs.push(log);
        if leg_outcome != Outcome::Reached {
            outcome = leg_outcome;
            break;
        }
        if let Some(t) = transits.get(i) {
            let edge = &world.elevator_edges()[t.edge];
            let door = edge.door_at(t.from).expect("transit starts at an edge endpoint");
            let here = world.floor(t.from.floor)?;
            let span = door_span(here, door, cfg.door.door_width_m);
            let (dx, dy) = here.cell_center(door);
            // Turn to face the door as odometry believes it to be.
            let face = (dy - odom.y).atan2(dx - odom.x);
            let turn = normalize_angle(face - odom.theta);
            now += turn.abs() / ctl.w_max;
            odom = Pose::new(odom.x, odom.y, face);
            true_pose = Pose::new(true_pose.x, true_pose.y, true_pose.theta + turn);

            let arrival = rng.random_range(0.0..cfg.door.max_arrival_s.max(f64::MIN_POSITIVE));
            let sensor = LidarConfig {
                fov: 60f64.to_radians(),
                beam_count: 31,
                max_range: cfg.door.sensor_range,
                range_noise_sigma: 0.0,
            };
            let mut waited = 0.0;
            let mut checks = 0;
            let opened = loop {
                if now >= deadline {
                    break false;
                }
                let open_now = waited >= arrival;
                let floor = world.floor_mut(t.from.floor)?;
                let before: Vec<CellState> = span.iter().map(|&c| floor.state(c)).collect::<Result<_, _>>()?;
                if open_now {
                    for &c in &span {
                        floor.set_state(c, CellState::Free)?;
                    }
                }
                let floor = world.floor(t.from.floor)?;
                let bearing = normalize_angle(face - odom.theta);
                let seen = lidar_scan(floor, &true_pose, &sensor, rng)
                    .ok()
                    .and_then(|scan| elevator_door_open(&scan, bearing, cfg.door.open_range_threshold).ok())
                    .unwrap_or(false);
                let floor = world.floor_mut(t.from.floor)?;
                for (&c, &state) in span.iter().zip(&before) {
                    floor.set_state(c, state)?;
                }
                checks += 1;
                events.push(ElevatorEvent::DoorChecked { t: now, open: seen });
                if seen {
                    break true;
                }
                if waited + cfg.door.poll_s > cfg.door.max_wait_s {
                    break false;
                }
                waited += cfg.door.poll_s;
                now += cfg.door.poll_s;
            };
            if !opened {
                events.push(ElevatorEvent::GaveUp { t: now });
                outcome = Outcome::Timeout;
                break;
            }
            events.push(ElevatorEvent::Boarded { t: now, edge: t.edge });
            now += t.transit_s;
            let arrive_map = world.floor(t.to.floor)?;
            let (ax, ay) = arrive_map.cell_center(t.to.cell);
            let (ox, oy) = (odom.x - true_pose.x, odom.y - true_pose.y);
            true_pose = Pose::new(ax, ay, true_pose.theta + PI);
            odom = Pose::new(ax + ox, ay + oy, odom.theta + PI);
            records.push(TransitRecord {
                edge: t.edge,
                from_floor: t.from.floor,
                to_floor: t.to.floor,
                waited_s: waited,
                transit_s: t.transit_s,
                door_checks: checks,
            });
        }
    }

    if outcome == Outcome::Reached {
        advance(&mut delivery, &mut trace, DeliveryEvent::ArrivedAtRoom)?;
        advance(&mut delivery, &mut trace, DeliveryEvent::QrPresented(token))?;
        advance(&mut delivery, &mut trace, DeliveryEvent::StorageClosed)?;
        if returns_home {
            advance(&mut delivery, &mut trace, DeliveryEvent::ArrivedHome)?;
        }
    } else {
        advance(&mut delivery, &mut trace, DeliveryEvent::Abort)?;
    }

    Ok(MissionRun {
        outcome,
        elapsed: now,
        waypoint_count,
        final_err_m: pose_error(&true_pose, &odom),
        goal_err_m: goal_err,
        expansions,
        replans,
        transits: records,
        elevator_events: events,
        delivery,
        delivery_trace: trace,
        legs: logs,
    })
}

/// The traversable cell nearest to where the robot believes it is.
fn nearest_free(grid: &CostGrid, map: &GridMap, pose: Pose) -> Option<Cell> {
    let cell = map.cell_at(pose.x, pose.y)?;
    grid.nearest_traversable(cell)
}
