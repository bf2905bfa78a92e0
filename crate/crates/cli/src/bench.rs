//! From-scratch A* against incremental D* repair on generated maps.

use std::fmt::Write;
use std::str::FromStr;
use std::time::Instant;

use hotelnav_core::planner::{astar_plan, DStar, PlanResult};
use hotelnav_core::world::{inflate, Cell, CellState, CostGrid, GridMap};
use hotelnav_core::seeded_rng;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corpus {
    /// Square maps with uniformly scattered obstacles.
    Random,
    /// A 10-cell-wide corridor ring around a central block.
    Corridor,
}

impl FromStr for Corpus {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "random" => Ok(Corpus::Random),
            "corridor" => Ok(Corpus::Corridor),
            _ => Err(CliError::input(format!("unknown corpus {s:?}; expected random or corridor"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangePattern {
    None,
    /// The robot advances a quarter of the way, then a cart blocks the
    /// corridor ahead of it, leaving a narrow gap.
    NearPath,
    /// Scattered cells fill in anywhere on the map.
    Random,
}

impl FromStr for ChangePattern {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "none" => Ok(ChangePattern::None),
            "near-path" => Ok(ChangePattern::NearPath),
            "random" => Ok(ChangePattern::Random),
            _ => Err(CliError::input(format!("unknown change pattern {s:?}; expected none, near-path or random"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub corpus: Corpus,
    pub sizes: Vec<usize>,
    pub densities: Vec<f64>,
    pub instances: usize,
    pub changes: usize,
    pub pattern: ChangePattern,
    pub seed: u64,
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            corpus: Corpus::Random,
            sizes: vec![32, 64, 100],
            densities: vec![0.1, 0.2],
            instances: 3,
            changes: 3,
            pattern: ChangePattern::NearPath,
            seed: 0,
            timing: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.corpus == Corpus::Random {
            if self.sizes.is_empty() || self.sizes.iter().any(|&s| s < 4) {
                return Err(CliError::input("--sizes needs values of at least 4"));
            }
            if self.densities.is_empty() || self.densities.iter().any(|d| !(0.0..0.9).contains(d)) {
                return Err(CliError::input("--densities must lie in [0, 0.9)"));
            }
        }
        if self.instances == 0 {
            return Err(CliError::input("--instances must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measure {
    pub cost: f64,
    pub expansions: usize,
    pub micros: u128,
}

/// One benchmark line. The initial plan fills `astar`/`dstar`; each injected
/// change fills `update`/`fresh`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub width: usize,
    pub height: usize,
    pub density: f64,
    pub change: usize,
    pub astar: Option<Measure>,
    pub dstar: Option<Measure>,
    pub update: Option<Measure>,
    pub fresh: Option<Measure>,
}

impl BenchRow {
    /// Update expansions over fresh-search expansions.
    pub fn update_ratio(&self) -> Option<f64> {
        let (u, f) = (self.update?, self.fresh?);
        Some(u.expansions as f64 / f.expansions.max(1) as f64)
    }
}

pub fn corridor_ring() -> GridMap {
    let mut map = GridMap::new(100, 100, 0.1, CellState::Free).expect("fixed size is valid");
    for y in 10..90 {
        for x in 10..90 {
            map.set_state(Cell::new(x, y), CellState::Occupied).expect("in bounds");
        }
    }
    map
}

fn random_map(size: usize, density: f64, seed: u64) -> GridMap {
    let mut rng = seeded_rng(seed);
    let mut map = GridMap::new(size, size, 0.1, CellState::Free).expect("size validated");
    for y in 0..size {
        for x in 0..size {
            if rng.random::<f64>() < density {
                map.set_state(Cell::new(x, y), CellState::Occupied).expect("in bounds");
            }
        }
    }
    map
}

fn measure(r: &PlanResult, started: Instant) -> Measure {
    Measure { cost: r.cost, expansions: r.expansions, micros: started.elapsed().as_micros() }
}

fn bench_instance(
    name: String,
    map: &GridMap,
    density: f64,
    start: Cell,
    goal: Cell,
    cfg: &BenchConfig,
    seed: u64,
) -> CliResult<Vec<BenchRow>> {
    let err = |e: hotelnav_core::planner::PlanError| CliError::Failed(format!("{name}: {e}"));
    let mut grid: CostGrid = inflate(map, 0.0);
    let t = Instant::now();
    let a = astar_plan(&grid, start, goal).map_err(err)?;
    let astar = measure(&a, t);
    let t = Instant::now();
    let mut d = DStar::new(grid.clone(), start, goal).map_err(err)?;
    let first = d.compute().map_err(err)?;
    let dstar = measure(&first, t);
    let row = |change, astar, dstar, update, fresh| BenchRow {
        instance: name.clone(),
        width: map.width(),
        height: map.height(),
        density,
        change,
        astar,
        dstar,
        update,
        fresh,
    };
    let mut rows = vec![row(0, Some(astar), Some(dstar), None, None)];
    let mut rng = seeded_rng(seed ^ 0xC4A1);
    let mut path = first.path;
    let mut here = start;
    for k in 1..=cfg.changes {
        let mut changes = Vec::new();
        match cfg.pattern {
            ChangePattern::None => break,
            ChangePattern::NearPath => {
                if path.len() < 8 {
                    break;
                }
                here = path[path.len() / 4];
                let ahead = path[path.len() / 2];
                // Block the cross-section through `ahead`, keeping a 3-cell gap on one side.
                let horizontal = path[path.len() / 2 + 1].y == ahead.y;
                for off in -5isize..=5 {
                    let c = if horizontal { ahead.offset(0, off) } else { ahead.offset(off, 0) };
                    if let Some(c) = c.filter(|&c| grid.in_bounds(c) && c != goal && c != here && off < 3) {
                        changes.push((c, f64::INFINITY));
                    }
                }
            }
            ChangePattern::Random => {
                for _ in 0..8 {
                    let c = Cell::new(rng.random_range(0..map.width()), rng.random_range(0..map.height()));
                    if c != goal && c != here {
                        changes.push((c, f64::INFINITY));
                    }
                }
            }
        }
        for &(c, cost) in &changes {
            grid.set_cost(c, cost).map_err(|e| CliError::Failed(e.to_string()))?;
        }
        let t = Instant::now();
        d.move_start(here).map_err(err)?;
        let u = d.update(&changes).map_err(err)?;
        let update = measure(&u, t);
        let t = Instant::now();
        let f = astar_plan(&grid, here, goal).map_err(err)?;
        let fresh = measure(&f, t);
        if u.cost != f.cost {
            return Err(CliError::Failed(format!("{name} change {k}: update cost {} != fresh cost {}", u.cost, f.cost)));
        }
        rows.push(row(k, None, None, Some(update), Some(fresh)));
        if !u.is_found() {
            break;
        }
        path = u.path;
    }
    Ok(rows)
}

pub fn run_bench(cfg: &BenchConfig) -> CliResult<Vec<BenchRow>> {
    cfg.validate()?;
    let mut jobs: Vec<(String, GridMap, f64, u64)> = Vec::new();
    match cfg.corpus {
        Corpus::Corridor => {
            for i in 0..cfg.instances {
                jobs.push((format!("corridor-{i}"), corridor_ring(), 0.0, cfg.seed + i as u64));
            }
        }
        Corpus::Random => {
            for &size in &cfg.sizes {
                for &density in &cfg.densities {
                    for i in 0..cfg.instances {
                        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((size * 1000 + i) as u64)
                            ^ density.to_bits();
                        jobs.push((format!("random-{size}-{density}-{i}"), random_map(size, density, seed), density, seed));
                    }
                }
            }
        }
    }
    let rows: Vec<CliResult<Vec<BenchRow>>> = jobs
        .par_iter()
        .map(|(name, map, density, seed)| {
            let mut map = map.clone();
            let (start, goal) = match cfg.corpus {
                Corpus::Corridor => (Cell::new(5, 50), Cell::new(95, 95)),
                Corpus::Random => (Cell::new(0, 0), Cell::new(map.width() - 1, map.height() - 1)),
            };
            map.set_state(start, CellState::Free).expect("in bounds");
            map.set_state(goal, CellState::Free).expect("in bounds");
            bench_instance(name.clone(), &map, *density, start, goal, cfg, *seed)
        })
        .collect();
    Ok(rows.into_iter().collect::<CliResult<Vec<_>>>()?.into_iter().flatten().collect())
}

fn cell(m: Option<Measure>, f: impl Fn(Measure) -> String) -> String {
    m.map(f).unwrap_or_default()
}

fn cost(c: f64) -> String {
    if c.is_finite() {
        format!("{c:.6}")
    } else {
        "inf".into()
    }
}

const COLUMNS: [&str; 14] = [
    "instance",
    "width",
    "height",
    "density",
    "change",
    "astar_cost",
    "astar_expansions",
    "dstar_cost",
    "dstar_expansions",
    "update_cost",
    "update_expansions",
    "fresh_cost",
    "fresh_expansions",
    "update_ratio",
];
const TIMING_COLUMNS: [&str; 4] = ["astar_us", "dstar_us", "update_us", "fresh_us"];

fn fields(r: &BenchRow, timing: bool) -> Vec<String> {
    let mut v = vec![
        r.instance.clone(),
        r.width.to_string(),
        r.height.to_string(),
        format!("{:.2}", r.density),
        r.change.to_string(),
        cell(r.astar, |m| cost(m.cost)),
        cell(r.astar, |m| m.expansions.to_string()),
        cell(r.dstar, |m| cost(m.cost)),
        cell(r.dstar, |m| m.expansions.to_string()),
        cell(r.update, |m| cost(m.cost)),
        cell(r.update, |m| m.expansions.to_string()),
        cell(r.fresh, |m| cost(m.cost)),
        cell(r.fresh, |m| m.expansions.to_string()),
        r.update_ratio().map(|x| format!("{x:.4}")).unwrap_or_default(),
    ];
    if timing {
        for m in [r.astar, r.dstar, r.update, r.fresh] {
            v.push(cell(m, |m| m.micros.to_string()));
        }
    }
    v
}

fn header(timing: bool) -> Vec<&'static str> {
    let mut h = COLUMNS.to_vec();
    if timing {
        h.extend(TIMING_COLUMNS);
    }
    h
}

pub fn bench_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut out = header(timing).join(",") + "\n";
    for r in rows {
        out += &(fields(r, timing).join(",") + "\n");
    }
    out
}

pub fn bench_markdown(rows: &[BenchRow], timing: bool) -> String {
    let h = header(timing);
    let mut out = format!("| {} |\n|{}|\n", h.join(" | "), vec!["---"; h.len()].join("|"));
    for r in rows {
        writeln!(out, "| {} |", fields(r, timing).join(" | ")).expect("writing to a String cannot fail");
    }
    let ratios: Vec<f64> = rows.iter().filter_map(BenchRow::update_ratio).collect();
    if !ratios.is_empty() {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        writeln!(out, "\nMean update/fresh expansion ratio over {} changes: {mean:.4}", ratios.len()).unwrap();
    }
    out
}
