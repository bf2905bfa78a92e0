//! Python bindings: maps, planners, motion model, sensors and scenario runs.

use std::path::Path;

use hotelnav_cli::plan::{run_plan, Algorithm};
use hotelnav_cli::replay::experiment;
use hotelnav_cli::scenario::{load_building, parse_scenario, parse_seed_list, Prepared, Scenario, SeedSpec};
use hotelnav_cli::simulate::simulate;
use hotelnav_cli::CliError;
use hotelnav_core::demo::demo_building;
use hotelnav_core::planner::{DStar, PlanResult, PlanStatus};
use hotelnav_core::robot::{self, NoiseModel};
use hotelnav_core::sensors;
use hotelnav_core::world::{inflate, Cell, CellState};
use hotelnav_core::{seeded_rng, Pose};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Input(m) => PyValueError::new_err(m),
        CliError::Failed(m) => PyRuntimeError::new_err(m),
    }
}

fn parse_state(s: &str) -> PyResult<CellState> {
    match s {
        "free" => Ok(CellState::Free),
        "occupied" => Ok(CellState::Occupied),
        "unknown" => Ok(CellState::Unknown),
        _ => Err(PyValueError::new_err(format!("state must be free, occupied or unknown, not {s:?}"))),
    }
}

fn state_name(s: CellState) -> &'static str {
    match s {
        CellState::Free => "free",
        CellState::Occupied => "occupied",
        CellState::Unknown => "unknown",
    }
}

/// Occupancy grid of one floor.
#[pyclass(name = "GridMap", module = "hotelnav", skip_from_py_object)]
#[derive(Clone)]
struct PyGridMap {
    inner: hotelnav_core::GridMap,
}

#[pymethods]
impl PyGridMap {
    /// Parses the ASCII legend: `#` occupied, `.` free, `?` unknown,
    /// `E` elevator, `H` home, digits for room doors.
    #[staticmethod]
    #[pyo3(signature = (text, resolution=0.1))]
    fn parse(text: &str, resolution: f64) -> PyResult<Self> {
        let inner = hotelnav_core::GridMap::parse_with_resolution(text, resolution).map_err(value_err)?;
        Ok(PyGridMap { inner })
    }

    /// One floor of the bundled demo building.
    #[staticmethod]
    fn demo_floor(floor: i32) -> PyResult<Self> {
        let inner = demo_building().floor(floor).map_err(value_err)?.clone();
        Ok(PyGridMap { inner })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.inner.resolution()
    }

    fn state(&self, x: usize, y: usize) -> PyResult<&'static str> {
        self.inner.state(Cell::new(x, y)).map(state_name).map_err(value_err)
    }

    fn set_state(&mut self, x: usize, y: usize, state: &str) -> PyResult<()> {
        self.inner.set_state(Cell::new(x, y), parse_state(state)?).map_err(value_err)
    }

    fn room_door(&self, room: &str) -> Option<(usize, usize)> {
        self.inner.room_door(room).map(|c| (c.x, c.y))
    }

    fn to_ascii(&self) -> PyResult<String> {
        self.inner.to_ascii().map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("GridMap({}x{}, resolution={})", self.inner.width(), self.inner.height(), self.inner.resolution())
    }
}

/// Result of a planning call.
#[pyclass(name = "PlanResult", module = "hotelnav", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyPlanResult {
    path: Vec<(usize, usize)>,
    cost: f64,
    expansions: usize,
    found: bool,
}

impl From<PlanResult> for PyPlanResult {
    fn from(r: PlanResult) -> Self {
        PyPlanResult {
            path: r.path.iter().map(|c| (c.x, c.y)).collect(),
            cost: r.cost,
            expansions: r.expansions,
            found: r.status == PlanStatus::Found,
        }
    }
}

#[pymethods]
impl PyPlanResult {
    fn __repr__(&self) -> String {
        format!(
            "PlanResult(found={}, cost={:.4}, expansions={}, cells={})",
            self.found,
            self.cost,
            self.expansions,
            self.path.len()
        )
    }
}

/// Plans between two cells with `dijkstra`, `astar` or `dstar`.
#[pyfunction]
#[pyo3(signature = (map, start, goal, algorithm="astar", inflation=0.0))]
fn plan(
    map: &PyGridMap,
    start: (usize, usize),
    goal: (usize, usize),
    algorithm: &str,
    inflation: f64,
) -> PyResult<PyPlanResult> {
    let algo: Algorithm = algorithm.parse().map_err(cli_err)?;
    run_plan(&map.inner, Cell::new(start.0, start.1), Cell::new(goal.0, goal.1), algo, inflation)
        .map(PyPlanResult::from)
        .map_err(cli_err)
}

/// Incremental planner that repairs its solution after cost changes.
#[pyclass(name = "DStar", module = "hotelnav")]
struct PyDStar {
    inner: DStar,
}

#[pymethods]
impl PyDStar {
    #[new]
    #[pyo3(signature = (map, start, goal, inflation=0.0))]
    fn new(map: &PyGridMap, start: (usize, usize), goal: (usize, usize), inflation: f64) -> PyResult<Self> {
        let grid = inflate(&map.inner, inflation);
        let inner = DStar::new(grid, Cell::new(start.0, start.1), Cell::new(goal.0, goal.1)).map_err(value_err)?;
        Ok(PyDStar { inner })
    }

    fn compute(&mut self) -> PyResult<PyPlanResult> {
        self.inner.compute().map(Into::into).map_err(value_err)
    }

    fn move_start(&mut self, cell: (usize, usize)) -> PyResult<()> {
        self.inner.move_start(Cell::new(cell.0, cell.1)).map_err(value_err)
    }

    /// Applies `(x, y, cost)` changes; use `float("inf")` to block a cell.
    fn update(&mut self, changes: Vec<(usize, usize, f64)>) -> PyResult<PyPlanResult> {
        let changes: Vec<(Cell, f64)> = changes.into_iter().map(|(x, y, c)| (Cell::new(x, y), c)).collect();
        self.inner.update(&changes).map(Into::into).map_err(value_err)
    }

    #[getter]
    fn total_expansions(&self) -> usize {
        self.inner.total_expansions()
    }
}

/// Exact constant-twist motion over `dt` seconds.
#[pyfunction]
fn step_true(pose: (f64, f64, f64), v: f64, w: f64, dt: f64) -> PyResult<(f64, f64, f64)> {
    let p = robot::step_true(&Pose::new(pose.0, pose.1, pose.2), v, w, dt).map_err(value_err)?;
    Ok((p.x, p.y, p.theta))
}

/// Final pose error after driving `distance` metres straight on odometry alone.
#[pyfunction]
#[pyo3(signature = (distance, seed, speed=0.4, dt=0.1))]
fn open_loop_drift(distance: f64, seed: u64, speed: f64, dt: f64) -> PyResult<f64> {
    robot::open_loop_drift(distance, speed, dt, &NoiseModel::DEFAULT, &mut seeded_rng(seed)).map_err(value_err)
}

/// Range in metres for a round-trip time of flight in seconds.
#[pyfunction]
fn tof_to_range(seconds: f64) -> PyResult<f64> {
    sensors::tof_to_range(seconds).map_err(value_err)
}

/// Distance to the first non-free cell along a ray, or `None`.
#[pyfunction]
fn raycast(map: &PyGridMap, pose: (f64, f64, f64), bearing: f64, max_range: f64) -> PyResult<Option<f64>> {
    sensors::raycast(&map.inner, &Pose::new(pose.0, pose.1, pose.2), bearing, max_range).map_err(value_err)
}

fn run_report(mut scenario: Scenario, base: &Path, seeds: Option<&str>) -> PyResult<String> {
    if let Some(list) = seeds {
        scenario.seeds = SeedSpec::List(parse_seed_list(list).map_err(cli_err)?);
    }
    let building = load_building(&scenario.building, base).map_err(cli_err)?;
    let prepared = Prepared::new(scenario, building).map_err(cli_err)?;
    let (report, _) = simulate(&prepared).map_err(cli_err)?;
    Ok(report.to_json())
}

/// Runs a scenario given as JSON text and returns the summary as JSON text.
/// Building paths in the scenario resolve against `base_dir`.
#[pyfunction]
#[pyo3(signature = (scenario_json, base_dir=".", seeds=None))]
fn simulate_scenario(scenario_json: &str, base_dir: &str, seeds: Option<&str>) -> PyResult<String> {
    let scenario = parse_scenario(scenario_json).map_err(cli_err)?;
    run_report(scenario, Path::new(base_dir), seeds)
}

/// Runs a bundled recorded experiment and returns the summary as JSON text.
#[pyfunction]
#[pyo3(signature = (experiment_id, seeds=None))]
fn replay(experiment_id: &str, seeds: Option<&str>) -> PyResult<String> {
    let scenario = experiment(experiment_id).map_err(cli_err)?;
    run_report(scenario, Path::new("."), seeds)
}

#[pymodule]
fn hotelnav(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridMap>()?;
    m.add_class::<PyPlanResult>()?;
    m.add_class::<PyDStar>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(step_true, m)?)?;
    m.add_function(wrap_pyfunction!(open_loop_drift, m)?)?;
    m.add_function(wrap_pyfunction!(tof_to_range, m)?)?;
    m.add_function(wrap_pyfunction!(raycast, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_names_round_trip() {
        for s in [CellState::Free, CellState::Occupied, CellState::Unknown] {
            assert_eq!(parse_state(state_name(s)).unwrap(), s);
        }
    }

    #[test]
    fn plan_result_conversion() {
        let map = hotelnav_core::GridMap::parse("...\n").unwrap();
        let r = run_plan(&map, Cell::new(0, 0), Cell::new(2, 0), Algorithm::Astar, 0.0).unwrap();
        let p = PyPlanResult::from(r);
        assert!(p.found);
        assert_eq!(p.path, vec![(0, 0), (1, 0), (2, 0)]);
    }
}
