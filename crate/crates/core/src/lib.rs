//! Deterministic 2-D indoor navigation stack.
//!
//! The crate is organised bottom-up:
//!
//! * [`world`] – floor maps, cost grids, buildings and grid geometry.
//! * [`planner`] – Dijkstra potential fields, A* and an incremental D* Lite replanner.
//! * [`sensors`] – time-of-flight ranging, lidar raycasting and the fixed sonar ring.
//! * [`robot`] – unicycle kinematics and an odometry model with slip drift.
//! * [`mapping`] – known-pose log-odds occupancy mapping.
//! * [`mission`] – multi-floor routing, waypoint following, local steering,
//!   elevator gating and the delivery automaton.
//!
//! Everything that consumes randomness takes an explicit seeded stream, so a
//! run is a pure function of its inputs and seed.

pub mod cost;
pub mod demo;
pub mod mapping;
pub mod mission;
pub mod planner;
pub mod robot;
pub mod sensors;
pub mod world;

pub use cost::Cost;
pub use robot::Pose;
pub use world::{Building, Cell, CellState, CostGrid, FloorId, GridMap};

/// Seeded random stream used throughout the simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the simulator's random stream from a scenario seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
