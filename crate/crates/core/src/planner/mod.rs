//! Global path planning over a [`CostGrid`].
//!
//! Three planners share one edge model and one fixed-point cost type, so their
//! optimal costs agree exactly:
//!
//! * [`dijkstra_field`] – a navfn-style potential field, cost-to-goal for every cell.
//! * [`astar_plan`] – forward A* with the octile heuristic.
//! * [`DStar`] – backward incremental search (D* Lite) with back pointers,
//!   repairing its solution when cell costs change.

mod astar;
mod dijkstra;
mod dstar;

pub use astar::astar_plan;
pub use dijkstra::{dijkstra_field, dijkstra_plan, PotentialField};
pub use dstar::DStar;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;
use crate::world::{Cell, CostGrid, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("goal cell {0} is blocked")]
    GoalBlocked(Cell),
    #[error("start cell {0} is blocked")]
    StartBlocked(Cell),
    #[error("path is not converged; run compute first or the start is unreachable")]
    NotConverged,
    #[error("back pointers form a cycle")]
    CycleDetected,
    #[error("path passes through blocked cell {0}")]
    BlockedCell(Cell),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    Found,
    Unreachable,
}

/// Outcome of a planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// Start to goal inclusive; empty when unreachable.
    pub path: Vec<Cell>,
    /// Optimal path cost in metres (`f64::INFINITY` when unreachable).
    pub cost: f64,
    /// Nodes expanded by this call.
    pub expansions: usize,
    pub status: PlanStatus,
}

impl PlanResult {
    pub(crate) fn found(path: Vec<Cell>, cost: Cost, expansions: usize) -> Self {
        PlanResult { path, cost: cost.to_meters(), expansions, status: PlanStatus::Found }
    }

    pub(crate) fn unreachable(expansions: usize) -> Self {
        PlanResult {
            path: Vec::new(),
            cost: f64::INFINITY,
            expansions,
            status: PlanStatus::Unreachable,
        }
    }

    pub fn is_found(&self) -> bool {
        self.status == PlanStatus::Found
    }
}

/// Sum of edge costs along a path, in metres. A single-cell path costs 0.
pub fn path_cost(path: &[Cell], grid: &CostGrid) -> Result<f64, PlanError> {
    for &c in path {
        if !grid.cost(c)?.is_finite() {
            return Err(PlanError::BlockedCell(c));
        }
    }
    let mut total = 0.0;
    for pair in path.windows(2) {
        let c = grid.edge_cost(pair[0], pair[1])?;
        if !c.is_finite() {
            // Corner cut between two blocked cells.
            return Err(PlanError::BlockedCell(pair[1]));
        }
        total += c;
    }
    Ok(total)
}

pub(crate) fn check_endpoints(grid: &CostGrid, start: Cell, goal: Cell) -> Result<(usize, usize), PlanError> {
    let s = grid.index(start)?;
    let g = grid.index(goal)?;
    if !grid.costs()[g].is_finite() {
        return Err(PlanError::GoalBlocked(goal));
    }
    if !grid.costs()[s].is_finite() {
        return Err(PlanError::StartBlocked(start));
    }
    Ok((s, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_cost_cases() {
        let g = CostGrid::uniform(3, 3, 0.1);
        assert_eq!(path_cost(&[Cell::new(1, 1)], &g).unwrap(), 0.0);
        assert_eq!(path_cost(&[Cell::new(0, 0), Cell::new(1, 0)], &g).unwrap(), 0.1);
        let g1 = CostGrid::uniform(3, 3, 1.0);
        let l = [Cell::new(0, 0), Cell::new(1, 0), Cell::new(1, 1)];
        assert_eq!(path_cost(&l, &g1).unwrap(), 2.0);
        assert!(matches!(
            path_cost(&[Cell::new(0, 0), Cell::new(2, 0)], &g1),
            Err(PlanError::World(WorldError::NotNeighbors(_, _)))
        ));
        let mut blocked = g1.clone();
        blocked.set_cost(Cell::new(1, 0), f64::INFINITY).unwrap();
        assert_eq!(path_cost(&l, &blocked), Err(PlanError::BlockedCell(Cell::new(1, 0))));
    }
}
