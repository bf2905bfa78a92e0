use std::fmt::Write;
use std::str::FromStr;

use hotelnav_core::planner::{astar_plan, dijkstra_plan, DStar, PlanError, PlanResult};
use hotelnav_core::world::{inflate, Cell, GridMap};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dijkstra,
    Astar,
    Dstar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dijkstra, Algorithm::Astar, Algorithm::Dstar];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dijkstra => "dijkstra",
            Algorithm::Astar => "astar",
            Algorithm::Dstar => "dstar",
        }
    }
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CliError::input(format!("unknown algorithm {s:?}; expected dijkstra, astar or dstar")))
    }
}

/// Parses `x,y` into a cell.
pub fn parse_cell(text: &str) -> CliResult<Cell> {
    let bad = || CliError::input(format!("cell {text:?} is not x,y"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    Ok(Cell::new(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

pub fn run_plan(map: &GridMap, start: Cell, goal: Cell, algo: Algorithm, inflation: f64) -> CliResult<PlanResult> {
    for (what, c) in [("start", start), ("goal", goal)] {
        if !map.in_bounds(c) {
            return Err(CliError::input(format!("{what} {c} is outside the {}x{} map", map.width(), map.height())));
        }
    }
    let grid = inflate(map, inflation);
    let result = match algo {
        Algorithm::Dijkstra => dijkstra_plan(&grid, start, goal),
        Algorithm::Astar => astar_plan(&grid, start, goal),
        Algorithm::Dstar => DStar::new(grid, start, goal).and_then(|mut d| d.compute()),
    };
    result.map_err(|e| match e {
        PlanError::StartBlocked(_) | PlanError::GoalBlocked(_) => CliError::Failed(e.to_string()),
        e => CliError::input(e.to_string()),
    })
}

/// `x,y` rows under a header.
pub fn path_csv(path: &[Cell]) -> String {
    let mut out = String::from("x,y\n");
    for c in path {
        writeln!(out, "{},{}", c.x, c.y).expect("writing to a String cannot fail");
    }
    out
}

pub fn parse_path_csv(text: &str) -> CliResult<Vec<Cell>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,y") {
        return Err(CliError::input("path file must start with the header x,y"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| parse_cell(l).map_err(|e| CliError::input(format!("path line {}: {e}", i + 2))))
        .collect()
}

pub fn stats_line(algo: Algorithm, r: &PlanResult) -> String {
    format!(
        "algo={} status={:?} cost={:.6} expansions={} cells={}",
        algo.name(),
        r.status,
        r.cost,
        r.expansions,
        r.path.len()
    )
}
