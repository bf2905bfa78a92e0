//! Multi-floor missions: route assembly, waypoint following, local steering,
//! elevator door gating and the delivery workflow.

mod delivery;
mod door;
mod execute;
mod follow;
mod route;
mod vfh;

pub use delivery::{delivery_step, qr_token_for, DeliveryError, DeliveryEvent, DeliveryPhase, DeliveryState};
pub use door::{door_span, elevator_door_open, DoorError, DoorGateConfig};
pub use execute::{
    run_mission, ChangeEvent, ElevatorEvent, MissionConfig, MissionError, MissionRun, RouteSpec, TransitRecord,
};
pub use follow::{
    follow_path, follow_route, ControllerConfig, FollowError, Follower, Outcome, Tick, TravelLog,
};
pub use route::{
    make_waypoints, path_length, plan_multifloor, room_to_goal, Leg, MissionPlan, RouteConfig, RouteError, Transit,
    WaypointRule,
};
pub use vfh::{vfh_steer, VfhConfig, VfhError};
