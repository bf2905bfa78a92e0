//! Scenario documents and per-seed mission runs.

use std::path::{Path, PathBuf};

use hotelnav_core::demo::demo_building;
use hotelnav_core::mission::{
    plan_multifloor, run_mission, ChangeEvent, MissionConfig, MissionError, MissionRun, RouteError, RouteSpec,
    WaypointRule,
};
use hotelnav_core::robot::NoiseModel;
use hotelnav_core::world::{Building, CellState, FloorCell, FloorId, WorldError};
use hotelnav_core::{seeded_rng, Cell, Pose};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A simulation experiment: where the robot starts, where it goes, how the
/// route is sampled, the noise it suffers and the seeds to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// `"demo"` for the bundled building, otherwise a building config path
    /// relative to the scenario file.
    pub building: String,
    pub start: StartSpec,
    pub goal_room: String,
    #[serde(default)]
    pub route: RouteChoice,
    /// Explicit routes that end back at home complete the delivery.
    #[serde(default)]
    pub returns_home: bool,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub time_budget_s: Option<f64>,
    #[serde(default)]
    pub changes: Vec<ChangeSpec>,
    /// Full mission settings; `noise` and `time_budget_s` above take precedence.
    #[serde(default)]
    pub mission: Option<MissionConfig>,
    /// Recorded travel times per route variant, as `mm:ss.s` strings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_times: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub floor: FloorId,
    /// Defaults to the floor's home cell.
    #[serde(default)]
    pub cell: Option<[usize; 2]>,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RouteChoice {
    /// Plan, then drop a waypoint every this many metres.
    Spacing(f64),
    /// Plan, then spread this many waypoints along the path.
    Count(usize),
    /// Fixed waypoint lists in the start pose's frame, one per variant.
    /// Seed `s` drives variant `s % len`.
    Offsets(Vec<Vec<[f64; 3]>>),
}

impl Default for RouteChoice {
    fn default() -> Self {
        RouteChoice::Spacing(10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { first: u64, count: u64 },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { first, count } => (*first..first + count).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeSpec {
    pub t: f64,
    pub floor: FloorId,
    pub cell: [usize; 2],
    pub state: CellState,
}

/// Parses `a..b` (half open) or a comma list such as `1,4,9`.
pub fn parse_seed_list(text: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::input(format!("seeds {text:?} are not a..b or a comma list"));
    let seeds: Vec<u64> = match text.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            (a..b).collect()
        }
        None => text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?,
    };
    if seeds.is_empty() {
        return Err(CliError::input(format!("seed list {text:?} is empty")));
    }
    Ok(seeds)
}

/// Parses `mm:ss.s` into seconds.
pub fn parse_clock(text: &str) -> CliResult<f64> {
    let bad = || CliError::input(format!("time {text:?} is not mm:ss.s"));
    let (m, s) = text.trim().split_once(':').ok_or_else(bad)?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    let s: f64 = s.parse().map_err(|_| bad())?;
    if !(0.0..60.0).contains(&s) {
        return Err(bad());
    }
    Ok(m as f64 * 60.0 + s)
}

/// Reads a scenario document; errors name the offending field.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::input(format!("scenario field `{path}`: {}", e.inner()))
    })
}

pub fn load_scenario(path: &Path) -> CliResult<(Scenario, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let scenario = parse_scenario(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((scenario, base))
}

pub fn load_building(reference: &str, base: &Path) -> CliResult<Building> {
    if reference == "demo" {
        return Ok(demo_building());
    }
    let path = base.join(reference);
    Building::load(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// A scenario resolved against its building, ready to run seeds.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub building: Building,
    pub start: Pose,
    pub routes: Vec<RouteSpec>,
    pub changes: Vec<ChangeEvent>,
    pub config: MissionConfig,
    pub seeds: Vec<u64>,
}

impl Prepared {
    /// Validates the scenario and plans its route(s). An unreachable goal is
    /// a [`CliError::Failed`].
    pub fn new(scenario: Scenario, building: Building) -> CliResult<Self> {
        let seeds = scenario.seeds.seeds();
        if seeds.is_empty() {
            return Err(CliError::input("scenario field `seeds`: no seeds"));
        }
        let mut config = scenario.mission.unwrap_or_default();
        if let Some(noise) = scenario.noise {
            config.noise = noise;
        }
        if scenario.time_budget_s.is_some() {
            config.time_budget_s = scenario.time_budget_s;
        }
        config.noise.validate().map_err(|e| CliError::input(format!("scenario field `noise`: {e}")))?;
        config.controller.validate().map_err(|e| CliError::input(format!("scenario field `mission`: {e}")))?;

        let goal = building
            .room(&scenario.goal_room)
            .map_err(|e| CliError::input(format!("scenario field `goal_room`: {e}")))?;
        let floor = building
            .floor(scenario.start.floor)
            .map_err(|e| CliError::input(format!("scenario field `start.floor`: {e}")))?;
        let start_cell = match scenario.start.cell {
            Some(c) => Cell::from(c),
            None => floor
                .home()
                .ok_or_else(|| CliError::input(format!("floor {} has no home cell", scenario.start.floor)))?,
        };
        if floor.state(start_cell).ok() != Some(CellState::Free) {
            return Err(CliError::input(format!("scenario field `start.cell`: {start_cell} is not a free cell")));
        }
        let (sx, sy) = floor.cell_center(start_cell);
        let start = Pose::new(sx, sy, scenario.start.theta);

        let mut changes = Vec::with_capacity(scenario.changes.len());
        for (i, c) in scenario.changes.iter().enumerate() {
            let cell = Cell::from(c.cell);
            let in_bounds = building.floor(c.floor).map(|m| m.in_bounds(cell)).unwrap_or(false);
            if !in_bounds || !(c.t >= 0.0) {
                return Err(CliError::input(format!(
                    "scenario field `changes[{i}]`: cell {cell} on floor {} at t={}",
                    c.floor, c.t
                )));
            }
            changes.push(ChangeEvent { t: c.t, floor: c.floor, cell, state: c.state });
        }

        let from = FloorCell::new(scenario.start.floor, start_cell);
        let plan = |rule: WaypointRule| -> CliResult<RouteSpec> {
            let mut route = config.route;
            route.waypoints = rule;
            match plan_multifloor(&building, from, &scenario.goal_room, &route) {
                Ok(p) => Ok(RouteSpec::Planned(p)),
                Err(e @ RouteError::Unreachable { .. }) => Err(CliError::Failed(e.to_string())),
                Err(e) => Err(CliError::input(e.to_string())),
            }
        };
        let routes = match &scenario.route {
            RouteChoice::Spacing(s) if *s > 0.0 => vec![plan(WaypointRule::Spacing(*s))?],
            RouteChoice::Count(k) if *k > 0 => vec![plan(WaypointRule::Count(*k))?],
            RouteChoice::Offsets(variants) if !variants.is_empty() && variants.iter().all(|v| !v.is_empty()) => {
                if goal.floor != scenario.start.floor {
                    return Err(CliError::input("scenario field `route`: offsets only drive single-floor routes"));
                }
                let (c, s) = (start.theta.cos(), start.theta.sin());
                variants
                    .iter()
                    .map(|pts| RouteSpec::Explicit {
                        floor: scenario.start.floor,
                        room: scenario.goal_room.clone(),
                        waypoints: pts
                            .iter()
                            .map(|&[dx, dy, th]| Pose::new(sx + c * dx - s * dy, sy + s * dx + c * dy, start.theta + th))
                            .collect(),
                        returns_home: scenario.returns_home,
                    })
                    .collect()
            }
            other => return Err(CliError::input(format!("scenario field `route`: invalid {other:?}"))),
        };
        // Replans mid-run place waypoints with the same rule.
        match scenario.route {
            RouteChoice::Spacing(s) => config.route.waypoints = WaypointRule::Spacing(s),
            RouteChoice::Count(k) => config.route.waypoints = WaypointRule::Count(k),
            RouteChoice::Offsets(_) => {}
        }
        Ok(Prepared { scenario, building, start, routes, changes, config, seeds })
    }

    pub fn route_for(&self, seed: u64) -> &RouteSpec {
        &self.routes[(seed % self.routes.len() as u64) as usize]
    }

    pub fn run(&self, seed: u64) -> CliResult<MissionRun> {
        let mut rng = seeded_rng(seed);
        run_mission(&self.building, self.start, self.route_for(seed), &self.changes, &self.config, seed, &mut rng)
            .map_err(|e| match e {
                MissionError::Route(e @ RouteError::Unreachable { .. }) => CliError::Failed(e.to_string()),
                MissionError::World(e @ WorldError::OutOfBounds(_)) => CliError::input(e.to_string()),
                e => CliError::Failed(format!("seed {seed}: {e}")),
            })
    }

    /// Mean of each variant's recorded times, in seconds.
    pub fn reference_means(&self) -> CliResult<Vec<f64>> {
        self.scenario
            .reference_times
            .iter()
            .map(|row| {
                let secs = row.iter().map(|t| parse_clock(t)).collect::<CliResult<Vec<f64>>>()?;
                Ok(secs.iter().sum::<f64>() / secs.len().max(1) as f64)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_strings() {
        assert_eq!(parse_clock("01:52.0").unwrap(), 112.0);
        assert!((parse_clock("04:46.5").unwrap() - 286.5).abs() < 1e-9);
        assert!(parse_clock("1:75").is_err());
        assert!(parse_clock("abc").is_err());
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = parse_scenario(r#"{"building": "demo", "start": {"floor": "two"}, "goal_room": "238", "seeds": [1]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("start.floor"), "{err}");
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seed_list("7, 1").unwrap(), vec![7, 1]);
        assert!(parse_seed_list("5..5").is_err());
        assert!(parse_seed_list("x").is_err());
    }

    #[test]
    fn seeds_forms() {
        let s: SeedSpec = serde_json::from_str(r#"{"first": 3, "count": 2}"#).unwrap();
        assert_eq!(s.seeds(), vec![3, 4]);
        let s: SeedSpec = serde_json::from_str("[9, 1]").unwrap();
        assert_eq!(s.seeds(), vec![9, 1]);
    }

    #[test]
    fn invalid_references_are_input_errors() {
        let base = r#"{"building": "demo", "start": {"floor": 2}, "goal_room": "ROOM", "seeds": SEEDS}"#;
        let make = |room: &str, seeds: &str| {
            let s = parse_scenario(&base.replace("ROOM", room).replace("SEEDS", seeds)).unwrap();
            Prepared::new(s, demo_building())
        };
        assert!(matches!(make("999", "[1]"), Err(CliError::Input(_))));
        assert!(matches!(make("238", "[]"), Err(CliError::Input(_))));
        assert!(make("238", "[1]").is_ok());
    }
}
