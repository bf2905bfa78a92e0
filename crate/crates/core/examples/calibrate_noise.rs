//! Sweeps the linear slip sigma and reports the two quantities the default
//! noise model is tuned against: the mean open-loop odometry gap after a
//! 40 m straight drive, and the delivery success rate on the 40 m demo
//! route for 2, 4, 5 and 6 waypoints.
//!
//! ```text
//! cargo run --release -p hotelnav-core --example calibrate_noise [sigma ...]
//! ```

use hotelnav_core::demo::{demo_building, LONG_ROUTE_ROOM, LONG_ROUTE_START};
use hotelnav_core::mission::{plan_multifloor, run_mission, MissionConfig, Outcome, RouteSpec, WaypointRule};
use hotelnav_core::robot::{open_loop_drift, NoiseModel};
use hotelnav_core::world::FloorCell;
use hotelnav_core::{seeded_rng, Pose};

const DRIFT_RUNS: u64 = 1000;
const ROUTE_SEEDS: u64 = 100;

fn main() {
    let sigmas: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("sigma must be a number")).collect();
    let sigmas = if sigmas.is_empty() { vec![0.10, 0.12, 0.138, 0.15, 0.17] } else { sigmas };
    let building = demo_building();
    let start_cell = FloorCell::new(1, LONG_ROUTE_START);
    let (x, y) = building.floor(1).unwrap().cell_center(LONG_ROUTE_START);

    println!("sigma_v  drift_mean_m  success_k2  success_k4  success_k5  success_k6");
    for sigma in sigmas {
        let noise = NoiseModel { v_sigma_per_m: sigma, ..NoiseModel::DEFAULT };
        let drift: f64 = (0..DRIFT_RUNS)
            .map(|s| open_loop_drift(40.0, 0.4, 0.1, &noise, &mut seeded_rng(s)).unwrap())
            .sum::<f64>()
            / DRIFT_RUNS as f64;
        let mut rates = Vec::new();
        for k in [2, 4, 5, 6] {
            let mut cfg = MissionConfig { noise, ..MissionConfig::default() };
            cfg.route.waypoints = WaypointRule::Count(k);
            let plan = plan_multifloor(&building, start_cell, LONG_ROUTE_ROOM, &cfg.route).unwrap();
            let start = Pose::new(x, y, -std::f64::consts::FRAC_PI_2);
            let spec = RouteSpec::Planned(plan);
            let ok = (0..ROUTE_SEEDS)
                .filter(|&s| {
                    let run = run_mission(&building, start, &spec, &[], &cfg, s, &mut seeded_rng(s)).unwrap();
                    run.outcome == Outcome::Reached
                })
                .count();
            rates.push(ok as f64 / ROUTE_SEEDS as f64);
        }
        println!("{sigma:<8.3} {drift:<13.3} {:<11.2} {:<11.2} {:<11.2} {:.2}", rates[0], rates[1], rates[2], rates[3]);
    }
}
