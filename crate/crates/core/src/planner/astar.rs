use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{check_endpoints, PlanError, PlanResult};
use crate::cost::Cost;
use crate::world::{Cell, CostGrid};

/// Forward A* with the octile heuristic. Open-list ties break on g, then on
/// row-major cell index.
pub fn astar_plan(grid: &CostGrid, start: Cell, goal: Cell) -> Result<PlanResult, PlanError> {
    let (s, g) = check_endpoints(grid, start, goal)?;
    let n = grid.len();
    let mut best = vec![Cost::INFINITE; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    best[s] = Cost::ZERO;
    open.push(Reverse((grid.octile_units(s, g), Cost::ZERO, s)));
    let mut expansions = 0;
    while let Some(Reverse((_, du, u))) = open.pop() {
        if closed[u] || du != best[u] {
            continue;
        }
        closed[u] = true;
        expansions += 1;
        if u == g {
            let mut path = vec![grid.cell_of(g)];
            let mut cur = g;
            while cur != s {
                cur = parent[cur];
                path.push(grid.cell_of(cur));
            }
            path.reverse();
            return Ok(PlanResult::found(path, best[g], expansions));
        }
        grid.for_each_neighbor(u, |v, c| {
            if closed[v] {
                return;
            }
            let nd = du + c;
            if nd < best[v] {
                best[v] = nd;
                parent[v] = u;
                open.push(Reverse((nd + grid.octile_units(v, g), nd, v)));
            }
        });
    }
    Ok(PlanResult::unreachable(expansions))
}
