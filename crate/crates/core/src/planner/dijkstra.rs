use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{check_endpoints, PlanError, PlanResult};
use crate::cost::Cost;
use crate::world::{Cell, CostGrid, WorldError};

/// Cost-to-goal for every cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    width: usize,
    height: usize,
    goal: Cell,
    values: Vec<Cost>,
    settled: usize,
}

impl PotentialField {
    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Cost-to-goal in metres; `f64::INFINITY` when unreachable.
    pub fn value(&self, cell: Cell) -> Result<f64, WorldError> {
        Ok(self.exact(cell)?.to_meters())
    }

    pub fn exact(&self, cell: Cell) -> Result<Cost, WorldError> {
        if cell.x < self.width && cell.y < self.height {
            Ok(self.values[cell.y * self.width + cell.x])
        } else {
            Err(WorldError::OutOfBounds(cell))
        }
    }

    /// Number of cells settled while building the field.
    pub fn settled(&self) -> usize {
        self.settled
    }

    pub(crate) fn values(&self) -> &[Cost] {
        &self.values
    }
}

/// Exact single-source shortest-path costs from `goal` over the finite-cost
/// 8-connected graph.
pub fn dijkstra_field(grid: &CostGrid, goal: Cell) -> Result<PotentialField, PlanError> {
    let g = grid.index(goal)?;
    if !grid.costs()[g].is_finite() {
        return Err(PlanError::GoalBlocked(goal));
    }
    let mut values = vec![Cost::INFINITE; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    values[g] = Cost::ZERO;
    heap.push(Reverse((Cost::ZERO, g)));
    let mut settled = 0;
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        settled += 1;
        grid.for_each_neighbor(u, |v, c| {
            let nd = d + c;
            if nd < values[v] {
                values[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        });
    }
    Ok(PotentialField {
        width: grid.width(),
        height: grid.height(),
        goal,
        values,
        settled,
    })
}

/// Plans by descending the potential field from `start`.
/// `expansions` counts the cells settled while building the field.
pub fn dijkstra_plan(grid: &CostGrid, start: Cell, goal: Cell) -> Result<PlanResult, PlanError> {
    let (s, _) = check_endpoints(grid, start, goal)?;
    let field = dijkstra_field(grid, goal)?;
    let values = field.values();
    if !values[s].is_finite() {
        return Ok(PlanResult::unreachable(field.settled));
    }
    let mut path = vec![start];
    let mut u = s;
    while values[u] != Cost::ZERO {
        let mut next = None;
        grid.for_each_neighbor(u, |v, c| {
            if next.is_none() && c + values[v] == values[u] {
                next = Some(v);
            }
        });
        u = next.ok_or(PlanError::NotConverged)?;
        path.push(grid.cell_of(u));
    }
    Ok(PlanResult::found(path, values[s], field.settled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{inflate, GridMap};

    #[test]
    fn corridor_values() {
        let g = CostGrid::uniform(5, 1, 1.0);
        let f = dijkstra_field(&g, Cell::new(4, 0)).unwrap();
        let v: Vec<f64> = (0..5).map(|x| f.value(Cell::new(x, 0)).unwrap()).collect();
        assert_eq!(v, vec![4.0, 3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn blocked_goal() {
        let mut g = CostGrid::uniform(3, 1, 1.0);
        g.set_cost(Cell::new(2, 0), f64::INFINITY).unwrap();
        assert_eq!(dijkstra_field(&g, Cell::new(2, 0)), Err(PlanError::GoalBlocked(Cell::new(2, 0))));
    }

    #[test]
    fn wall_splits_map() {
        let m = GridMap::parse_with_resolution("..#..\n..#..\n..#..\n..#..\n..#..\n", 1.0).unwrap();
        let g = inflate(&m, 0.0);
        let f = dijkstra_field(&g, Cell::new(0, 0)).unwrap();
        // Flood-fill oracle: exactly the left two columns are reachable.
        let mut reach = vec![false; 25];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if reach[i] {
                continue;
            }
            reach[i] = true;
            for n in g.neighbors(g.cell_of(i)).unwrap() {
                stack.push(n.y * 5 + n.x);
            }
        }
        for i in 0..25 {
            assert_eq!(f.values()[i].is_finite(), reach[i], "cell {i}");
        }
        assert!(f.value(Cell::new(4, 4)).unwrap().is_infinite());
    }

    #[test]
    fn plan_descends_field() {
        let g = CostGrid::uniform(4, 4, 1.0);
        let r = dijkstra_plan(&g, Cell::new(0, 0), Cell::new(3, 3)).unwrap();
        assert_eq!(r.path.len(), 4);
        assert!((r.cost - 3.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
    }
}
