//! Incremental backward search (D* Lite).
//!
//! The search runs from the goal toward the start. Each cell keeps a
//! cost-to-goal estimate `g`, a one-step lookahead `rhs` and a back pointer to
//! the neighbour that achieves `rhs`. Cells whose `g` and `rhs` disagree sit on
//! the open list; popping one and settling it is an expansion. When cell costs
//! change only the affected cells are re-queued, and the search resumes from
//! where it stopped.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{check_endpoints, PlanError, PlanResult};
use crate::cost::Cost;
use crate::world::{validate_cost, Cell, CostGrid, WorldError, NEIGHBOR_OFFSETS};

/// Two-component priority: `(min(g, rhs) + h(start, s) + km, min(g, rhs))`.
type Key = (Cost, Cost);

/// D* Lite planning session over its own copy of a cost grid.
#[derive(Debug, Clone)]
pub struct DStar {
    grid: CostGrid,
    start: usize,
    goal: usize,
    /// Start at the time `km` was last bumped.
    last: usize,
    km: Cost,
    g: Vec<Cost>,
    rhs: Vec<Cost>,
    back: Vec<Option<usize>>,
    open: BinaryHeap<Reverse<(Key, usize)>>,
    /// Current key of each queued cell; heap entries that disagree are stale.
    queued: Vec<Option<Key>>,
    computed: bool,
    total_expansions: usize,
}

impl DStar {
    /// Seeds a session: `rhs(goal) = 0` and the goal is the only open cell.
    pub fn new(grid: CostGrid, start: Cell, goal: Cell) -> Result<Self, PlanError> {
        let (s, g) = check_endpoints(&grid, start, goal)?;
        let n = grid.len();
        let mut state = DStar {
            grid,
            start: s,
            goal: g,
            last: s,
            km: Cost::ZERO,
            g: vec![Cost::INFINITE; n],
            rhs: vec![Cost::INFINITE; n],
            back: vec![None; n],
            open: BinaryHeap::new(),
            queued: vec![None; n],
            computed: false,
            total_expansions: 0,
        };
        state.rhs[g] = Cost::ZERO;
        let key = state.key(g);
        state.push(g, key);
        Ok(state)
    }

    pub fn grid(&self) -> &CostGrid {
        &self.grid
    }

    pub fn start(&self) -> Cell {
        self.grid.cell_of(self.start)
    }

    pub fn goal(&self) -> Cell {
        self.grid.cell_of(self.goal)
    }

    /// Cost-to-goal estimate `g(cell)` in metres.
    pub fn g_value(&self, cell: Cell) -> Result<f64, WorldError> {
        Ok(self.g[self.grid.index(cell)?].to_meters())
    }

    pub fn rhs_value(&self, cell: Cell) -> Result<f64, WorldError> {
        Ok(self.rhs[self.grid.index(cell)?].to_meters())
    }

    pub fn back_pointer(&self, cell: Cell) -> Result<Option<Cell>, WorldError> {
        Ok(self.back[self.grid.index(cell)?].map(|i| self.grid.cell_of(i)))
    }

    /// Cells currently on the open list, in pop order.
    pub fn open_cells(&self) -> Vec<Cell> {
        let mut live: Vec<(Key, usize)> = self
            .queued
            .iter()
            .enumerate()
            .filter_map(|(i, k)| k.map(|k| (k, i)))
            .collect();
        live.sort();
        live.into_iter().map(|(_, i)| self.grid.cell_of(i)).collect()
    }

    /// Expansions across every compute and update of this session.
    pub fn total_expansions(&self) -> usize {
        self.total_expansions
    }

    /// Runs the search until the start is settled with an optimal cost-to-goal,
    /// then extracts the path along back pointers.
    pub fn compute(&mut self) -> Result<PlanResult, PlanError> {
        let expansions = self.compute_shortest_path();
        self.computed = true;
        self.result(expansions)
    }

    /// Applies per-cell cost changes and re-converges. The returned
    /// `expansions` counts only the work done by this call.
    pub fn update(&mut self, changes: &[(Cell, f64)]) -> Result<PlanResult, PlanError> {
        for &(cell, cost) in changes {
            validate_cost(cost)?;
            self.grid.index(cell)?;
        }
        let mut touched = Vec::new();
        for &(cell, cost) in changes {
            let idx = self.grid.index(cell)?;
            if self.grid.costs()[idx] == cost {
                continue;
            }
            self.grid.set_cost(cell, cost)?;
            touched.push(idx);
        }
        if !self.grid.costs()[self.start].is_finite() {
            return Err(PlanError::StartBlocked(self.start()));
        }
        // Every edge whose cost moved has both endpoints in a changed cell's
        // closed neighbourhood (corner cutting depends on the shared cells).
        let mut affected = Vec::new();
        for &idx in &touched {
            affected.push(idx);
            self.each_cell_around(idx, |n| affected.push(n));
        }
        affected.sort_unstable();
        affected.dedup();
        for idx in affected {
            self.update_vertex(idx);
        }
        self.compute()
    }

    /// Moves the search start (the robot's cell) before the next update.
    pub fn move_start(&mut self, cell: Cell) -> Result<(), PlanError> {
        let idx = self.grid.index(cell)?;
        if !self.grid.costs()[idx].is_finite() {
            return Err(PlanError::StartBlocked(cell));
        }
        if idx != self.start {
            self.km = self.km + self.grid.octile_units(self.last, idx);
            self.last = idx;
            self.start = idx;
        }
        Ok(())
    }

    /// Follows back pointers from the start to the goal.
    pub fn extract_path(&self) -> Result<Vec<Cell>, PlanError> {
        if !self.computed || !self.g[self.start].is_finite() {
            return Err(PlanError::NotConverged);
        }
        let mut path = vec![self.grid.cell_of(self.start)];
        let mut u = self.start;
        while u != self.goal {
            if path.len() > self.grid.len() {
                return Err(PlanError::CycleDetected);
            }
            u = self.back[u].ok_or(PlanError::NotConverged)?;
            path.push(self.grid.cell_of(u));
        }
        Ok(path)
    }

    fn result(&self, expansions: usize) -> Result<PlanResult, PlanError> {
        if !self.g[self.start].is_finite() {
            return Ok(PlanResult::unreachable(expansions));
        }
        let path = self.extract_path()?;
        Ok(PlanResult::found(path, self.g[self.start], expansions))
    }

    fn key(&self, s: usize) -> Key {
        let k2 = self.g[s].min(self.rhs[s]);
        (k2 + self.grid.octile_units(self.start, s) + self.km, k2)
    }

    fn push(&mut self, s: usize, key: Key) {
        self.queued[s] = Some(key);
        self.open.push(Reverse((key, s)));
    }

    /// Smallest live entry, discarding stale ones.
    fn top(&mut self) -> Option<(Key, usize)> {
        while let Some(&Reverse((key, s))) = self.open.peek() {
            if self.queued[s] == Some(key) {
                return Some((key, s));
            }
            self.open.pop();
        }
        None
    }

    fn update_vertex(&mut self, u: usize) {
        if u != self.goal {
            let mut best = Cost::INFINITE;
            let mut arg = None;
            let g = &self.g;
            self.grid.for_each_neighbor(u, |v, c| {
                let cand = c + g[v];
                if cand < best {
                    best = cand;
                    arg = Some(v);
                }
            });
            self.rhs[u] = best;
            self.back[u] = arg;
        }
        if self.g[u] != self.rhs[u] {
            let key = self.key(u);
            self.push(u, key);
        } else {
            self.queued[u] = None;
        }
    }

    fn compute_shortest_path(&mut self) -> usize {
        let mut expansions = 0;
        loop {
            let Some((k_old, u)) = self.top() else { break };
            let start_key = self.key(self.start);
            if k_old >= start_key && self.rhs[self.start] == self.g[self.start] {
                break;
            }
            let k_new = self.key(u);
            if k_old < k_new {
                self.push(u, k_new);
                continue;
            }
            self.open.pop();
            self.queued[u] = None;
            expansions += 1;
            if self.g[u] > self.rhs[u] {
                self.g[u] = self.rhs[u];
                let mut preds = Vec::with_capacity(8);
                self.grid.for_each_neighbor(u, |p, _| preds.push(p));
                for p in preds {
                    self.update_vertex(p);
                }
            } else {
                self.g[u] = Cost::INFINITE;
                let mut preds = Vec::with_capacity(9);
                self.each_cell_around(u, |p| preds.push(p));
                preds.push(u);
                for p in preds {
                    self.update_vertex(p);
                }
            }
        }
        self.total_expansions += expansions;
        expansions
    }

    /// Every in-bounds 8-neighbour of `idx`, regardless of cost.
    fn each_cell_around(&self, idx: usize, mut f: impl FnMut(usize)) {
        let w = self.grid.width() as isize;
        let h = self.grid.height() as isize;
        let (x, y) = (idx as isize % w, idx as isize / w);
        for (dx, dy) in NEIGHBOR_OFFSETS {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                f((ny * w + nx) as usize);
            }
        }
    }
}
