//! Floor maps, traversal-cost grids, buildings and 8-connected grid geometry.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{Cost, UNITS_PER_METER};

/// Metres per cell when a map document does not say otherwise.
pub const DEFAULT_RESOLUTION: f64 = 0.1;

/// Finite cell costs above this are rejected so fixed-point sums cannot overflow.
pub const MAX_CELL_COST: f64 = 1e6;

pub type FloorId = i32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("map document is empty")]
    EmptyMap,
    #[error("ragged rows: row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("unknown glyph {glyph:?} at ({x}, {y})")]
    UnknownGlyph { glyph: char, x: usize, y: usize },
    #[error("room {0} declared more than once")]
    DuplicateRoom(String),
    #[error("unknown room {0}")]
    UnknownRoom(String),
    #[error("unknown floor {0}")]
    UnknownFloor(FloorId),
    #[error("cell {0} is out of bounds")]
    OutOfBounds(Cell),
    #[error("cells {0} and {1} are not 8-neighbours")]
    NotNeighbors(Cell, Cell),
    #[error("invalid map dimensions {width}x{height} at resolution {resolution}")]
    InvalidDimensions { width: usize, height: usize, resolution: f64 },
    #[error("cell {0} must be free to carry an annotation")]
    AnnotationOnBlockedCell(Cell),
    #[error("cell {0} already carries a different annotation")]
    AnnotationConflict(Cell),
    #[error("cell {cell} on floor {floor} is not an elevator cell")]
    NotElevator { floor: FloorId, cell: Cell },
    #[error("room {0} cannot be written as a digit tag at its door cell")]
    UnrepresentableRoom(String),
    #[error("invalid cell cost {0}; finite costs must lie in [1, {MAX_CELL_COST}]")]
    InvalidCost(f64),
    #[error("invalid building config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Column/row index into a grid. `y` grows with the row number of a map document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// True when the two cells differ by at most one step on each axis and are not equal.
    pub fn is_neighbor_of(&self, other: &Cell) -> bool {
        let dx = self.x.abs_diff(other.x);
        let dy = self.y.abs_diff(other.y);
        dx <= 1 && dy <= 1 && (dx + dy) > 0
    }

    pub fn offset(&self, dx: isize, dy: isize) -> Option<Cell> {
        Some(Cell {
            x: self.x.checked_add_signed(dx)?,
            y: self.y.checked_add_signed(dy)?,
        })
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[usize; 2]> for Cell {
    fn from(v: [usize; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Annotation {
    Elevator,
    Home,
    Room(String),
}

/// Row-major 8-neighbourhood offsets. Every neighbour iteration in the crate uses this order.
pub(crate) const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// A single floor's occupancy lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
    annotations: BTreeMap<usize, Annotation>,
}

impl GridMap {
    /// An all-`fill` map.
    pub fn new(width: usize, height: usize, resolution: f64, fill: CellState) -> Result<Self, WorldError> {
        if width == 0 || height == 0 || !(resolution > 0.0) || !resolution.is_finite() {
            return Err(WorldError::InvalidDimensions { width, height, resolution });
        }
        Ok(GridMap {
            width,
            height,
            resolution,
            cells: vec![fill; width * height],
            annotations: BTreeMap::new(),
        })
    }

    /// Parses an ASCII map at the default resolution.
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        Self::parse_with_resolution(text, DEFAULT_RESOLUTION)
    }

    /// Parses an ASCII map.
    ///
    /// Legend: `#` occupied, `.` free, `?` unknown, `E` elevator, `H` home.
    /// A horizontal run of digits is a room tag: every cell of the run is
    /// free and the first cell is that room's door.
    pub fn parse_with_resolution(text: &str, resolution: f64) -> Result<Self, WorldError> {
        let rows: Vec<Vec<char>> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').chars().collect::<Vec<_>>())
            .collect::<Vec<_>>();
        // Trailing blank lines are tolerated, interior ones are not.
        let used = rows.iter().rposition(|r| !r.is_empty()).map_or(0, |i| i + 1);
        let rows = &rows[..used];
        if rows.is_empty() {
            return Err(WorldError::EmptyMap);
        }
        let width = rows[0].len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(WorldError::RaggedRows { row, expected: width, found: r.len() });
            }
        }
        let mut map = GridMap::new(width, rows.len(), resolution, CellState::Free)?;
        for (y, r) in rows.iter().enumerate() {
            let mut x = 0;
            while x < width {
                let glyph = r[x];
                let idx = y * width + x;
                match glyph {
                    '.' => {}
                    '#' => map.cells[idx] = CellState::Occupied,
                    '?' => map.cells[idx] = CellState::Unknown,
                    'E' => {
                        map.annotations.insert(idx, Annotation::Elevator);
                    }
                    'H' => {
                        map.annotations.insert(idx, Annotation::Home);
                    }
                    d if d.is_ascii_digit() => {
                        let start = x;
                        while x < width && r[x].is_ascii_digit() {
                            x += 1;
                        }
                        let tag: String = r[start..x].iter().collect();
                        if map.room_door(&tag).is_some() {
                            return Err(WorldError::DuplicateRoom(tag));
                        }
                        map.annotations.insert(idx, Annotation::Room(tag));
                        continue;
                    }
                    other => return Err(WorldError::UnknownGlyph { glyph: other, x, y }),
                }
                x += 1;
            }
        }
        Ok(map)
    }

    /// Writes the map back in the ASCII legend accepted by [`GridMap::parse`].
    pub fn to_ascii(&self) -> Result<String, WorldError> {
        let mut glyphs: Vec<char> = self
            .cells
            .iter()
            .map(|c| match c {
                CellState::Free => '.',
                CellState::Occupied => '#',
                CellState::Unknown => '?',
            })
            .collect();
        let mut digit = vec![false; glyphs.len()];
        for (&idx, ann) in &self.annotations {
            match ann {
                Annotation::Elevator => glyphs[idx] = 'E',
                Annotation::Home => glyphs[idx] = 'H',
                Annotation::Room(_) => {}
            }
        }
        for (&idx, ann) in &self.annotations {
            let Annotation::Room(tag) = ann else { continue };
            let x0 = idx % self.width;
            let fits = tag.chars().all(|c| c.is_ascii_digit())
                && !tag.is_empty()
                && x0 + tag.len() <= self.width
                && (0..tag.len()).all(|k| {
                    let i = idx + k;
                    self.cells[i] == CellState::Free
                        && !digit[i]
                        && (k == 0 || !self.annotations.contains_key(&i))
                })
                && (x0 == 0 || !digit[idx - 1])
                && (x0 + tag.len() == self.width || !digit[idx + tag.len()]);
            if !fits {
                return Err(WorldError::UnrepresentableRoom(tag.clone()));
            }
            for (k, ch) in tag.chars().enumerate() {
                glyphs[idx + k] = ch;
                digit[idx + k] = true;
            }
        }
        // A run written later may now touch one written earlier.
        for y in 0..self.height {
            for x in 1..self.width {
                let i = y * self.width + x;
                if digit[i] && digit[i - 1] {
                    if let Some(Annotation::Room(tag)) = self.annotations.get(&i) {
                        return Err(WorldError::UnrepresentableRoom(tag.clone()));
                    }
                }
            }
        }
        let mut out = String::with_capacity(glyphs.len() + self.height);
        for row in glyphs.chunks(self.width) {
            out.extend(row.iter());
            out.push('\n');
        }
        Ok(out)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> Result<usize, WorldError> {
        if self.in_bounds(cell) {
            Ok(cell.y * self.width + cell.x)
        } else {
            Err(WorldError::OutOfBounds(cell))
        }
    }

    pub fn cell_of(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn state(&self, cell: Cell) -> Result<CellState, WorldError> {
        Ok(self.cells[self.index(cell)?])
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    /// Changes a cell's occupancy. Annotated cells must stay free.
    pub fn set_state(&mut self, cell: Cell, state: CellState) -> Result<(), WorldError> {
        let idx = self.index(cell)?;
        if state != CellState::Free && self.annotations.contains_key(&idx) {
            return Err(WorldError::AnnotationOnBlockedCell(cell));
        }
        self.cells[idx] = state;
        Ok(())
    }

    pub fn annotation(&self, cell: Cell) -> Option<&Annotation> {
        self.index(cell).ok().and_then(|i| self.annotations.get(&i))
    }

    pub fn annotations(&self) -> impl Iterator<Item = (Cell, &Annotation)> + '_ {
        self.annotations.iter().map(|(&i, a)| (self.cell_of(i), a))
    }

    pub fn annotate(&mut self, cell: Cell, annotation: Annotation) -> Result<(), WorldError> {
        let idx = self.index(cell)?;
        if self.cells[idx] != CellState::Free {
            return Err(WorldError::AnnotationOnBlockedCell(cell));
        }
        if let Annotation::Room(tag) = &annotation {
            if let Some(existing) = self.room_door(tag) {
                if existing != cell {
                    return Err(WorldError::DuplicateRoom(tag.clone()));
                }
            }
        }
        match self.annotations.get(&idx) {
            Some(existing) if *existing != annotation => Err(WorldError::AnnotationConflict(cell)),
            _ => {
                self.annotations.insert(idx, annotation);
                Ok(())
            }
        }
    }

    pub fn room_door(&self, room: &str) -> Option<Cell> {
        self.annotations.iter().find_map(|(&i, a)| match a {
            Annotation::Room(tag) if tag == room => Some(self.cell_of(i)),
            _ => None,
        })
    }

    pub fn home(&self) -> Option<Cell> {
        self.annotations
            .iter()
            .find(|(_, a)| **a == Annotation::Home)
            .map(|(&i, _)| self.cell_of(i))
    }

    /// Centre of a cell in metres.
    pub fn cell_center(&self, cell: Cell) -> (f64, f64) {
        (
            (cell.x as f64 + 0.5) * self.resolution,
            (cell.y as f64 + 0.5) * self.resolution,
        )
    }

    /// The cell containing a metric point, if it lies on the map.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        let cx = (x / self.resolution).floor();
        let cy = (y / self.resolution).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.width as f64 || cy >= self.height as f64 {
            return None;
        }
        Some(Cell::new(cx as usize, cy as usize))
    }

    /// True when the metric point lies in a free cell on the map.
    pub fn is_free_at(&self, x: f64, y: f64) -> bool {
        self.cell_at(x, y)
            .is_some_and(|c| self.cells[c.y * self.width + c.x] == CellState::Free)
    }
}

/// Per-cell traversal costs over a floor. Finite costs are at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    width: usize,
    height: usize,
    resolution: f64,
    costs: Vec<f64>,
    axis_units: Cost,
    diag_units: Cost,
}

/// Builds the cost grid for a map: occupied cells and every cell whose centre
/// lies within `radius` metres of an occupied cell's centre are infinite,
/// unknown cells are infinite, everything else costs 1.
pub fn inflate(map: &GridMap, radius: f64) -> CostGrid {
    let radius = radius.max(0.0);
    let mut grid = CostGrid::uniform(map.width, map.height, map.resolution);
    for (i, state) in map.cells.iter().enumerate() {
        if *state == CellState::Unknown {
            grid.costs[i] = f64::INFINITY;
        }
    }
    let offsets = disk_offsets(radius / map.resolution);
    for (i, state) in map.cells.iter().enumerate() {
        if *state != CellState::Occupied {
            continue;
        }
        let c = map.cell_of(i);
        for &(dx, dy) in &offsets {
            if let Some(n) = c.offset(dx, dy) {
                if n.x < map.width && n.y < map.height {
                    grid.costs[n.y * map.width + n.x] = f64::INFINITY;
                }
            }
        }
    }
    grid
}

/// Integer offsets whose Euclidean length is within `radius_cells`.
fn disk_offsets(radius_cells: f64) -> Vec<(isize, isize)> {
    let limit = radius_cells * radius_cells * (1.0 + 1e-9);
    let r = radius_cells.floor() as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx * dx + dy * dy) as f64 <= limit {
                out.push((dx, dy));
            }
        }
    }
    out
}

impl CostGrid {
    /// A grid where every cell costs 1.
    pub fn uniform(width: usize, height: usize, resolution: f64) -> Self {
        let axis_units = Cost::from_units((resolution * UNITS_PER_METER).round() as u64);
        let diag_units = Cost::from_units((resolution * SQRT_2 * UNITS_PER_METER).round() as u64);
        CostGrid {
            width,
            height,
            resolution,
            costs: vec![1.0; width * height],
            axis_units,
            diag_units,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> Result<usize, WorldError> {
        if self.in_bounds(cell) {
            Ok(cell.y * self.width + cell.x)
        } else {
            Err(WorldError::OutOfBounds(cell))
        }
    }

    pub fn cell_of(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn cost(&self, cell: Cell) -> Result<f64, WorldError> {
        Ok(self.costs[self.index(cell)?])
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn is_traversable(&self, cell: Cell) -> bool {
        self.index(cell).is_ok_and(|i| self.costs[i].is_finite())
    }

    /// Sets a cell's cost: `f64::INFINITY` or a finite value in `[1, MAX_CELL_COST]`.
    pub fn set_cost(&mut self, cell: Cell, cost: f64) -> Result<(), WorldError> {
        validate_cost(cost)?;
        let idx = self.index(cell)?;
        self.costs[idx] = cost;
        Ok(())
    }

    /// In-bounds, finite-cost 8-neighbours of `cell` in row-major order.
    /// Diagonal moves whose two shared axis neighbours are both blocked are excluded.
    pub fn neighbors(&self, cell: Cell) -> Result<Vec<Cell>, WorldError> {
        let idx = self.index(cell)?;
        let mut out = Vec::with_capacity(8);
        self.for_each_neighbor(idx, |n, _| out.push(self.cell_of(n)));
        Ok(out)
    }

    /// Traversal cost in metres between two 8-neighbours.
    pub fn edge_cost(&self, a: Cell, b: Cell) -> Result<f64, WorldError> {
        let ia = self.index(a)?;
        let ib = self.index(b)?;
        if !a.is_neighbor_of(&b) {
            return Err(WorldError::NotNeighbors(a, b));
        }
        if !self.costs[ia].is_finite() || !self.costs[ib].is_finite() || self.corner_cut(a, b) {
            return Ok(f64::INFINITY);
        }
        let step = if a.x != b.x && a.y != b.y { SQRT_2 } else { 1.0 };
        Ok(self.resolution * step * mean(self.costs[ia], self.costs[ib]))
    }

    fn corner_cut(&self, a: Cell, b: Cell) -> bool {
        a.x != b.x
            && a.y != b.y
            && !self.costs[a.y * self.width + b.x].is_finite()
            && !self.costs[b.y * self.width + a.x].is_finite()
    }

    /// Fixed-point cost of the edge between two neighbouring indices.
    pub(crate) fn edge_units(&self, a: usize, b: usize, diagonal: bool) -> Cost {
        let (ca, cb) = (self.costs[a], self.costs[b]);
        if !ca.is_finite() || !cb.is_finite() {
            return Cost::INFINITE;
        }
        let mean = mean(ca, cb);
        if mean == 1.0 {
            return if diagonal { self.diag_units } else { self.axis_units };
        }
        let step = if diagonal { SQRT_2 } else { 1.0 };
        Cost::from_units((self.resolution * step * mean * UNITS_PER_METER).round() as u64)
    }

    /// Calls `f(neighbor_index, edge_cost)` for each finite edge out of `idx`, row-major.
    pub(crate) fn for_each_neighbor(&self, idx: usize, mut f: impl FnMut(usize, Cost)) {
        let (x, y) = ((idx % self.width) as isize, (idx / self.width) as isize);
        let (w, h) = (self.width as isize, self.height as isize);
        if !self.costs[idx].is_finite() {
            return;
        }
        for (dx, dy) in NEIGHBOR_OFFSETS {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let n = (ny * w + nx) as usize;
            if !self.costs[n].is_finite() {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal
                && !self.costs[(y * w + nx) as usize].is_finite()
                && !self.costs[(ny * w + x) as usize].is_finite()
            {
                continue;
            }
            f(n, self.edge_units(idx, n, diagonal));
        }
    }

    /// Octile distance between two cells in fixed-point units. Consistent for
    /// every edge cost this grid can produce, because finite cell costs are at least 1.
    pub(crate) fn octile_units(&self, a: usize, b: usize) -> Cost {
        let (ax, ay) = (a % self.width, a / self.width);
        let (bx, by) = (b % self.width, b / self.width);
        let dx = ax.abs_diff(bx) as u64;
        let dy = ay.abs_diff(by) as u64;
        let diag = dx.min(dy);
        let straight = dx.max(dy) - diag;
        self.axis_units.scale(straight) + self.diag_units.scale(diag)
    }

    /// Recomputes inflated costs around `cell` after its occupancy changed in `map`.
    /// Returns the cells whose cost differs from this grid, with their new cost.
    pub fn reinflate_around(&self, map: &GridMap, cell: Cell, radius: f64) -> Vec<(Cell, f64)> {
        let reach = (radius.max(0.0) / self.resolution).floor() as isize + 1;
        let offsets = disk_offsets(radius.max(0.0) / self.resolution);
        let mut out = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let Some(c) = cell.offset(dx, dy) else { continue };
                if !self.in_bounds(c) {
                    continue;
                }
                let blocked = match map.cells[c.y * map.width + c.x] {
                    CellState::Unknown => true,
                    _ => offsets.iter().any(|&(ox, oy)| {
                        c.offset(ox, oy).is_some_and(|o| {
                            o.x < map.width
                                && o.y < map.height
                                && map.cells[o.y * map.width + o.x] == CellState::Occupied
                        })
                    }),
                };
                let new_cost = if blocked { f64::INFINITY } else { 1.0 };
                let old = self.costs[c.y * self.width + c.x];
                // Keep custom finite costs when the cell stays free.
                if blocked != !old.is_finite() {
                    out.push((c, new_cost));
                }
            }
        }
        out
    }

    /// Nearest finite-cost cell by breadth-first ring search, `cell` itself first.
    pub fn nearest_traversable(&self, cell: Cell) -> Option<Cell> {
        if self.is_traversable(cell) {
            return Some(cell);
        }
        let max_r = self.width.max(self.height) as isize;
        for r in 1..=max_r {
            let mut best: Option<(usize, Cell)> = None;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let Some(c) = cell.offset(dx, dy) else { continue };
                    if self.is_traversable(c) {
                        let d = (dx * dx + dy * dy) as usize;
                        if best.is_none_or(|(bd, bc)| (d, c.y, c.x) < (bd, bc.y, bc.x)) {
                            best = Some((d, c));
                        }
                    }
                }
            }
            if let Some((_, c)) = best {
                return Some(c);
            }
        }
        None
    }
}

fn mean(a: f64, b: f64) -> f64 {
    if a == b {
        a
    } else {
        0.5 * (a + b)
    }
}

pub(crate) fn validate_cost(cost: f64) -> Result<(), WorldError> {
    if cost == f64::INFINITY || ((1.0..=MAX_CELL_COST).contains(&cost)) {
        Ok(())
    } else {
        Err(WorldError::InvalidCost(cost))
    }
}

/// A cell on a specific floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FloorCell {
    pub floor: FloorId,
    pub cell: Cell,
}

impl FloorCell {
    pub const fn new(floor: FloorId, cell: Cell) -> Self {
        FloorCell { floor, cell }
    }
}

/// A bidirectional elevator connection between two floors.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevatorEdge {
    pub a: FloorCell,
    pub b: FloorCell,
    pub transit_s: f64,
    /// Door cell in front of `a`'s elevator cell.
    pub door_a: Cell,
    pub door_b: Cell,
}

impl ElevatorEdge {
    /// The endpoint paired with `from`, if `from` is one of this edge's endpoints.
    pub fn other_end(&self, from: FloorCell) -> Option<(FloorCell, Cell)> {
        if from == self.a {
            Some((self.b, self.door_b))
        } else if from == self.b {
            Some((self.a, self.door_a))
        } else {
            None
        }
    }

    pub fn door_at(&self, end: FloorCell) -> Option<Cell> {
        if end == self.a {
            Some(self.door_a)
        } else if end == self.b {
            Some(self.door_b)
        } else {
            None
        }
    }
}

/// Floors, rooms and elevator connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    floors: BTreeMap<FloorId, GridMap>,
    elevator_edges: Vec<ElevatorEdge>,
    rooms: BTreeMap<String, FloorCell>,
}

/// JSON building description. Map paths are relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingConfig {
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    pub floors: Vec<FloorEntry>,
    #[serde(default)]
    pub rooms: Vec<RoomEntry>,
    #[serde(default)]
    pub elevator_edges: Vec<ElevatorEntry>,
}

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorEntry {
    pub id: FloorId,
    pub map: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomEntry {
    pub room: String,
    pub floor: FloorId,
    pub cell: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointEntry {
    pub floor: FloorId,
    pub cell: [usize; 2],
    /// Elevator door cell; defaults to the nearest occupied cell straight out from the elevator cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElevatorEntry {
    pub a: EndpointEntry,
    pub b: EndpointEntry,
    pub transit_s: f64,
}

impl Building {
    /// Assembles a building from parsed floor maps and the JSON config.
    pub fn from_parts(config: &BuildingConfig, mut floors: BTreeMap<FloorId, GridMap>) -> Result<Self, WorldError> {
        let mut rooms: BTreeMap<String, FloorCell> = BTreeMap::new();
        for (&floor, map) in &floors {
            for (cell, ann) in map.annotations() {
                if let Annotation::Room(tag) = ann {
                    if rooms.insert(tag.clone(), FloorCell::new(floor, cell)).is_some() {
                        return Err(WorldError::DuplicateRoom(tag.clone()));
                    }
                }
            }
        }
        for entry in &config.rooms {
            let cell = Cell::from(entry.cell);
            let target = FloorCell::new(entry.floor, cell);
            match rooms.get(&entry.room) {
                Some(existing) if *existing == target => continue,
                Some(_) => return Err(WorldError::DuplicateRoom(entry.room.clone())),
                None => {}
            }
            let map = floors.get_mut(&entry.floor).ok_or(WorldError::UnknownFloor(entry.floor))?;
            map.annotate(cell, Annotation::Room(entry.room.clone()))?;
            rooms.insert(entry.room.clone(), target);
        }
        let mut elevator_edges = Vec::with_capacity(config.elevator_edges.len());
        for e in &config.elevator_edges {
            if !(e.transit_s >= 0.0) || !e.transit_s.is_finite() {
                return Err(WorldError::Config(format!("transit_s must be a non-negative number, got {}", e.transit_s)));
            }
            let (a, door_a) = resolve_endpoint(&floors, &e.a)?;
            let (b, door_b) = resolve_endpoint(&floors, &e.b)?;
            elevator_edges.push(ElevatorEdge { a, b, transit_s: e.transit_s, door_a, door_b });
        }
        Ok(Building { floors, elevator_edges, rooms })
    }

    /// Parses a building config, loading each floor map through `read_map`.
    pub fn from_config_str(
        json: &str,
        mut read_map: impl FnMut(&str) -> Result<String, WorldError>,
    ) -> Result<Self, WorldError> {
        let config: BuildingConfig = serde_json::from_str(json).map_err(|e| WorldError::Config(e.to_string()))?;
        let mut floors = BTreeMap::new();
        for f in &config.floors {
            let text = read_map(&f.map)?;
            if floors.insert(f.id, GridMap::parse_with_resolution(&text, config.resolution)?).is_some() {
                return Err(WorldError::Config(format!("floor {} listed twice", f.id)));
            }
        }
        Self::from_parts(&config, floors)
    }

    /// Loads a building config file; map paths resolve relative to its directory.
    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let io_err = |p: &Path, e: std::io::Error| WorldError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        let json = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config_str(&json, |rel| {
            let p = dir.join(rel);
            std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))
        })
    }

    pub fn floor(&self, id: FloorId) -> Result<&GridMap, WorldError> {
        self.floors.get(&id).ok_or(WorldError::UnknownFloor(id))
    }

    pub fn floor_mut(&mut self, id: FloorId) -> Result<&mut GridMap, WorldError> {
        self.floors.get_mut(&id).ok_or(WorldError::UnknownFloor(id))
    }

    pub fn floors(&self) -> impl Iterator<Item = (FloorId, &GridMap)> + '_ {
        self.floors.iter().map(|(&id, m)| (id, m))
    }

    pub fn elevator_edges(&self) -> &[ElevatorEdge] {
        &self.elevator_edges
    }

    pub fn rooms(&self) -> impl Iterator<Item = (&str, FloorCell)> + '_ {
        self.rooms.iter().map(|(r, &fc)| (r.as_str(), fc))
    }

    /// Door cell of a room.
    pub fn room(&self, room: &str) -> Result<FloorCell, WorldError> {
        self.rooms.get(room).copied().ok_or_else(|| WorldError::UnknownRoom(room.to_string()))
    }
}

fn resolve_endpoint(floors: &BTreeMap<FloorId, GridMap>, e: &EndpointEntry) -> Result<(FloorCell, Cell), WorldError> {
    let map = floors.get(&e.floor).ok_or(WorldError::UnknownFloor(e.floor))?;
    let cell = Cell::from(e.cell);
    if map.annotation(cell) != Some(&Annotation::Elevator) {
        return Err(WorldError::NotElevator { floor: e.floor, cell });
    }
    let door = match e.door {
        Some(d) => {
            let d = Cell::from(d);
            map.index(d)?;
            d
        }
        None => default_door(map, cell).ok_or_else(|| {
            WorldError::Config(format!("no door found near elevator cell {cell} on floor {}", e.floor))
        })?,
    };
    Ok((FloorCell::new(e.floor, cell), door))
}

/// Nearest occupied cell straight out from `cell` along the four axes, within 2 m.
/// Ties prefer +y, then -y, +x, -x.
fn default_door(map: &GridMap, cell: Cell) -> Option<Cell> {
    let max_steps = (2.0 / map.resolution).ceil() as isize;
    let mut best: Option<(isize, Cell)> = None;
    for (dx, dy) in [(0, 1), (0, -1), (1, 0), (-1, 0)] {
        for k in 1..=max_steps {
            let Some(c) = cell.offset(dx * k, dy * k) else { break };
            if !map.in_bounds(c) {
                break;
            }
            if map.cells[c.y * map.width + c.x] == CellState::Occupied {
                if best.is_none_or(|(bk, _)| k < bk) {
                    best = Some((k, c));
                }
                break;
            }
        }
    }
    best.map(|(_, c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(w: usize, h: usize, res: f64) -> GridMap {
        GridMap::new(w, h, res, CellState::Free).unwrap()
    }

    #[test]
    fn parses_all_free() {
        let m = GridMap::parse("...\n...\n...\n").unwrap();
        assert_eq!((m.width(), m.height()), (3, 3));
        assert!(m.cells().iter().all(|c| *c == CellState::Free));
        assert_eq!(m.annotations().count(), 0);
    }

    #[test]
    fn parses_legend() {
        let m = GridMap::parse(".#.\nE?H\n").unwrap();
        assert_eq!(m.state(Cell::new(1, 0)).unwrap(), CellState::Occupied);
        assert_eq!(m.state(Cell::new(0, 0)).unwrap(), CellState::Free);
        assert_eq!(m.state(Cell::new(2, 0)).unwrap(), CellState::Free);
        assert_eq!(m.state(Cell::new(1, 1)).unwrap(), CellState::Unknown);
        assert_eq!(m.annotation(Cell::new(0, 1)), Some(&Annotation::Elevator));
        assert_eq!(m.home(), Some(Cell::new(2, 1)));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            GridMap::parse("...\n....\n"),
            Err(WorldError::RaggedRows { row: 1, expected: 3, found: 4 })
        ));
    }

    #[test]
    fn unknown_glyph_and_empty() {
        assert!(matches!(
            GridMap::parse("..x\n"),
            Err(WorldError::UnknownGlyph { glyph: 'x', x: 2, y: 0 })
        ));
        assert_eq!(GridMap::parse(""), Err(WorldError::EmptyMap));
    }

    #[test]
    fn room_tags() {
        let m = GridMap::parse("#238.#\n......\n").unwrap();
        assert_eq!(m.room_door("238"), Some(Cell::new(1, 0)));
        assert_eq!(m.state(Cell::new(3, 0)).unwrap(), CellState::Free);
        assert_eq!(
            GridMap::parse("238.238\n").unwrap_err(),
            WorldError::DuplicateRoom("238".into())
        );
    }

    #[test]
    fn ascii_round_trip() {
        let text = "#####\n#E.H#\n#12.?\n#####\n";
        let m = GridMap::parse(text).unwrap();
        assert_eq!(m.to_ascii().unwrap(), text);
        assert_eq!(GridMap::parse(&m.to_ascii().unwrap()).unwrap(), m);
    }

    #[test]
    fn inflate_radius_zero_free_map() {
        let g = inflate(&free(4, 3, 0.1), 0.0);
        assert!(g.costs().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn inflate_unknown_is_blocked_but_does_not_spread() {
        let m = GridMap::parse("...\n.?.\n...\n").unwrap();
        let g = inflate(&m, 0.5);
        assert_eq!(g.costs().iter().filter(|c| c.is_infinite()).count(), 1);
    }

    #[test]
    fn neighbor_counts() {
        let g = inflate(&free(3, 3, 0.1), 0.0);
        assert_eq!(g.neighbors(Cell::new(1, 1)).unwrap().len(), 8);
        assert_eq!(g.neighbors(Cell::new(0, 0)).unwrap().len(), 3);
        let mut g2 = g.clone();
        g2.set_cost(Cell::new(1, 0), f64::INFINITY).unwrap();
        assert_eq!(g2.neighbors(Cell::new(1, 1)).unwrap().len(), 7);
        assert!(matches!(g.neighbors(Cell::new(3, 0)), Err(WorldError::OutOfBounds(_))));
    }

    #[test]
    fn neighbors_are_row_major() {
        let g = inflate(&free(3, 3, 0.1), 0.0);
        let n = g.neighbors(Cell::new(1, 1)).unwrap();
        let idx: Vec<_> = n.iter().map(|c| c.y * 3 + c.x).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 5, 6, 7, 8]);
    }

    #[test]
    fn corner_cutting_forbidden_only_when_both_sides_blocked() {
        let mut g = inflate(&free(2, 2, 1.0), 0.0);
        g.set_cost(Cell::new(1, 0), f64::INFINITY).unwrap();
        assert!(g.edge_cost(Cell::new(0, 0), Cell::new(1, 1)).unwrap().is_finite());
        g.set_cost(Cell::new(0, 1), f64::INFINITY).unwrap();
        assert!(g.edge_cost(Cell::new(0, 0), Cell::new(1, 1)).unwrap().is_infinite());
        assert!(g.neighbors(Cell::new(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn edge_costs() {
        let g = inflate(&free(3, 3, 0.1), 0.0);
        assert_eq!(g.edge_cost(Cell::new(0, 0), Cell::new(1, 0)).unwrap(), 0.1);
        let d = g.edge_cost(Cell::new(0, 0), Cell::new(1, 1)).unwrap();
        assert!((d - 0.1 * SQRT_2).abs() < 1e-15);
        assert!((d - 0.1414).abs() < 1e-4);
        let mut g2 = g.clone();
        g2.set_cost(Cell::new(1, 0), f64::INFINITY).unwrap();
        assert!(g2.edge_cost(Cell::new(0, 0), Cell::new(1, 0)).unwrap().is_infinite());
        assert!(matches!(
            g.edge_cost(Cell::new(0, 0), Cell::new(2, 0)),
            Err(WorldError::NotNeighbors(_, _))
        ));
    }

    #[test]
    fn set_cost_validation() {
        let mut g = CostGrid::uniform(2, 2, 0.1);
        assert!(g.set_cost(Cell::new(0, 0), 0.5).is_err());
        assert!(g.set_cost(Cell::new(0, 0), f64::NAN).is_err());
        assert!(g.set_cost(Cell::new(0, 0), 3.0).is_ok());
    }

    #[test]
    fn reinflate_matches_full_inflation() {
        let mut m = free(12, 9, 0.1);
        m.set_state(Cell::new(3, 3), CellState::Occupied).unwrap();
        let before = inflate(&m, 0.25);
        m.set_state(Cell::new(6, 4), CellState::Occupied).unwrap();
        m.set_state(Cell::new(3, 3), CellState::Free).unwrap();
        let mut patched = before.clone();
        for c in [Cell::new(6, 4), Cell::new(3, 3)] {
            for (cell, cost) in patched.reinflate_around(&m, c, 0.25) {
                patched.set_cost(cell, cost).unwrap();
            }
        }
        assert_eq!(patched, inflate(&m, 0.25));
    }

    #[test]
    fn building_config() {
        let json = r#"{
            "resolution": 1.0,
            "floors": [{"id": 1, "map": "f1"}, {"id": 2, "map": "f2"}],
            "rooms": [{"room": "238", "floor": 2, "cell": [3, 1]}],
            "elevator_edges": [{"a": {"floor": 1, "cell": [1, 1]}, "b": {"floor": 2, "cell": [1, 1]}, "transit_s": 8.0}]
        }"#;
        let read = |name: &str| {
            Ok(match name {
                "f1" => "#####\n#E..#\n#####\n".to_string(),
                _ => "#####\n#E..1\n#####\n".to_string(),
            })
        };
        let b = Building::from_config_str(json, read).unwrap();
        assert_eq!(b.room("238").unwrap(), FloorCell::new(2, Cell::new(3, 1)));
        assert_eq!(b.room("1").unwrap(), FloorCell::new(2, Cell::new(4, 1)));
        assert_eq!(b.elevator_edges()[0].door_a, Cell::new(1, 2));
        assert!(matches!(b.room("999"), Err(WorldError::UnknownRoom(_))));

        let clash = json.replace("[3, 1]", "[4, 1]");
        assert!(matches!(
            Building::from_config_str(&clash, read),
            Err(WorldError::AnnotationConflict(_))
        ));
        let not_elevator = json.replace(r#""floor": 2, "cell": [1, 1]"#, r#""floor": 2, "cell": [2, 1]"#);
        assert!(matches!(
            Building::from_config_str(&not_elevator, read),
            Err(WorldError::NotElevator { .. })
        ));
    }
}
