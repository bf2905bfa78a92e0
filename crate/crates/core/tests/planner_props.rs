use hotelnav_core::cost::{Cost, UNITS_PER_METER};
use hotelnav_core::planner::{astar_plan, dijkstra_field, path_cost, DStar, PlanError};
use hotelnav_core::world::{inflate, Cell, CellState, CostGrid, GridMap};
use proptest::prelude::*;
use rand::Rng;

const RES: f64 = 0.1;

/// Random map with `density` obstacles; start and goal are forced free.
fn random_map(w: usize, h: usize, density: f64, seed: u64) -> (GridMap, Cell, Cell) {
    let mut rng = hotelnav_core::seeded_rng(seed);
    let mut map = GridMap::new(w, h, RES, CellState::Free).unwrap();
    for y in 0..h {
        for x in 0..w {
            if rng.random::<f64>() < density {
                map.set_state(Cell::new(x, y), CellState::Occupied).unwrap();
            }
        }
    }
    let start = Cell::new(rng.random_range(0..w), rng.random_range(0..h));
    let goal = Cell::new(rng.random_range(0..w), rng.random_range(0..h));
    map.set_state(start, CellState::Free).unwrap();
    map.set_state(goal, CellState::Free).unwrap();
    (map, start, goal)
}

/// Bellman-Ford over the 8-connected grid in fixed-point units. Only valid
/// for grids whose finite costs are all 1.
fn oracle_cost(grid: &CostGrid, start: Cell, goal: Cell) -> f64 {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let axis = (RES * UNITS_PER_METER).round() as u64;
    let diag = (RES * std::f64::consts::SQRT_2 * UNITS_PER_METER).round() as u64;
    let free = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && grid.is_traversable(Cell::new(x as usize, y as usize));
    let mut dist = vec![u64::MAX; (w * h) as usize];
    dist[goal.y * grid.width() + goal.x] = 0;
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if !free(x, y) {
                    continue;
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if (dx, dy) == (0, 0) || !free(nx, ny) {
                            continue;
                        }
                        let diagonal = dx != 0 && dy != 0;
                        if diagonal && !free(nx, y) && !free(x, ny) {
                            continue;
                        }
                        let d = dist[(ny * w + nx) as usize];
                        if d == u64::MAX {
                            continue;
                        }
                        let cand = d + if diagonal { diag } else { axis };
                        let i = (y * w + x) as usize;
                        if cand < dist[i] {
                            dist[i] = cand;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Cost::from_units(dist[start.y * grid.width() + start.x]).to_meters()
}

fn check_path(grid: &CostGrid, path: &[Cell], start: Cell, goal: Cell, cost: f64) {
    assert_eq!(path.first(), Some(&start));
    assert_eq!(path.last(), Some(&goal));
    let walked = path_cost(path, grid).unwrap();
    assert!((walked - cost).abs() <= 1e-9 * cost.max(1.0), "walked {walked} vs {cost}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn three_planners_agree_with_oracle(
        w in 4usize..=16, h in 4usize..=16, density in 0.0f64..0.4, seed in any::<u64>()
    ) {
        let (map, start, goal) = random_map(w, h, density, seed);
        let grid = inflate(&map, 0.0);
        let expected = oracle_cost(&grid, start, goal);

        let a = astar_plan(&grid, start, goal).unwrap();
        let mut d = DStar::new(grid.clone(), start, goal).unwrap();
        let ds = d.compute().unwrap();
        let field = dijkstra_field(&grid, goal).unwrap().value(start).unwrap();

        prop_assert_eq!(a.cost, expected);
        prop_assert_eq!(ds.cost, expected);
        prop_assert_eq!(field, expected);
        prop_assert_eq!(a.is_found(), expected.is_finite());
        prop_assert_eq!(ds.is_found(), expected.is_finite());
        if expected.is_finite() {
            check_path(&grid, &a.path, start, goal, expected);
            check_path(&grid, &ds.path, start, goal, expected);
        }
    }

    #[test]
    fn update_matches_fresh_search(
        w in 4usize..=16, h in 4usize..=16, density in 0.0f64..0.4, seed in any::<u64>(),
        batches in 1usize..4
    ) {
        let (map, start, goal) = random_map(w, h, density, seed);
        let mut grid = inflate(&map, 0.0);
        let mut d = DStar::new(grid.clone(), start, goal).unwrap();
        d.compute().unwrap();
        let mut rng = hotelnav_core::seeded_rng(seed ^ 0x5eed);
        for _ in 0..batches {
            let n = rng.random_range(1..=6);
            let mut changes = Vec::new();
            for _ in 0..n {
                let c = Cell::new(rng.random_range(0..w), rng.random_range(0..h));
                if c == goal {
                    continue;
                }
                let cost = match rng.random_range(0..3) {
                    0 => f64::INFINITY,
                    1 => 1.0,
                    _ => rng.random_range(1.0..4.0),
                };
                changes.push((c, cost));
            }
            for &(c, cost) in &changes {
                grid.set_cost(c, cost).unwrap();
            }
            match d.update(&changes) {
                Err(PlanError::StartBlocked(_)) => {
                    prop_assert!(!grid.is_traversable(start));
                    return Ok(());
                }
                res => {
                    let res = res.unwrap();
                    let fresh = astar_plan(&grid, start, goal).unwrap();
                    prop_assert_eq!(res.cost, fresh.cost);
                    prop_assert_eq!(res.is_found(), fresh.is_found());
                    if res.is_found() {
                        check_path(&grid, &res.path, start, goal, fresh.cost);
                    }
                }
            }
        }
    }

    #[test]
    fn octile_heuristic_is_admissible(
        w in 4usize..=16, h in 4usize..=16, density in 0.0f64..0.4, seed in any::<u64>()
    ) {
        let (map, _, goal) = random_map(w, h, density, seed);
        let grid = inflate(&map, 0.0);
        let field = dijkstra_field(&grid, goal).unwrap();
        for y in 0..h {
            for x in 0..w {
                let c = Cell::new(x, y);
                let (dx, dy) = (x.abs_diff(goal.x) as f64, y.abs_diff(goal.y) as f64);
                let octile = RES * (dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy));
                prop_assert!(field.value(c).unwrap() >= octile - 1e-9);
            }
        }
    }

    #[test]
    fn potential_field_is_consistent(
        w in 4usize..=16, h in 4usize..=16, density in 0.0f64..0.4, seed in any::<u64>()
    ) {
        // Triangle inequality along every edge: V(a) <= c(a, b) + V(b).
        let (map, _, goal) = random_map(w, h, density, seed);
        let grid = inflate(&map, 0.0);
        let field = dijkstra_field(&grid, goal).unwrap();
        for y in 0..h {
            for x in 0..w {
                let a = Cell::new(x, y);
                if !grid.is_traversable(a) {
                    prop_assert!(field.value(a).unwrap().is_infinite());
                    continue;
                }
                for b in grid.neighbors(a).unwrap() {
                    let va = field.exact(a).unwrap();
                    let vb = field.exact(b).unwrap();
                    let edge = Cost::from_meters(grid.edge_cost(a, b).unwrap());
                    prop_assert!(va <= vb + edge);
                }
            }
        }
    }
}

/// 100x100 map with a 10-cell-wide corridor ring around a central block, so a
/// blockage on one side leaves a detour around the other.
fn corridor_ring() -> GridMap {
    let mut map = GridMap::new(100, 100, RES, CellState::Free).unwrap();
    for y in 10..90 {
        for x in 10..90 {
            map.set_state(Cell::new(x, y), CellState::Occupied).unwrap();
        }
    }
    map
}

#[test]
fn localized_blockage_repair_is_cheaper_than_fresh_search() {
    let map = corridor_ring();
    let grid = inflate(&map, 0.0);
    let (start, goal) = (Cell::new(5, 50), Cell::new(95, 95));
    let mut d = DStar::new(grid.clone(), start, goal).unwrap();
    let first = d.compute().unwrap();
    assert!(first.is_found());

    // The robot has moved a few cells and then a cart parks across most of
    // the corridor ahead, leaving a gap along the outer wall.
    let here = first.path[8];
    d.move_start(here).unwrap();
    let cut = first.path[25].y;
    let mut mutated = grid.clone();
    let mut changes = Vec::new();
    for x in 3..10 {
        let c = Cell::new(x, cut);
        mutated.set_cost(c, f64::INFINITY).unwrap();
        changes.push((c, f64::INFINITY));
    }
    let repaired = d.update(&changes).unwrap();
    let fresh = astar_plan(&mutated, here, goal).unwrap();
    assert_eq!(repaired.cost, fresh.cost);
    assert!(
        (repaired.expansions as f64) < 0.5 * fresh.expansions as f64,
        "update {} vs fresh {}",
        repaired.expansions,
        fresh.expansions
    );
}
