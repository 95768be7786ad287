//! Text maze maps and force-controlled point-mass navigation.
//!
//! Map text is one row per line using `S` (start), `G` (goal), `W` (wall) and
//! `.` (free; `·` is accepted too). Column index maps to world `x`, row index
//! to world `y`, and the grid is centred on the origin.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StepOutcome;
use crate::error::{Error, Result};
use crate::gmm::BoxRegion;
use crate::goal_space::{GoalSpec, Metric};

pub const BIDIRECTIONAL: &str = include_str!("../../maps/bidirectional.txt");
pub const SQUARE_21: &str = include_str!("../../maps/square21.txt");
pub const OPEN_3: &str = include_str!("../../maps/open3.txt");
pub const OPEN_5: &str = include_str!("../../maps/open5.txt");

/// Bundled map text by name.
pub fn builtin_map(name: &str) -> Option<&'static str> {
    match name {
        "bidirectional" => Some(BIDIRECTIONAL),
        "square21" => Some(SQUARE_21),
        "open3" => Some(OPEN_3),
        "open5" => Some(OPEN_5),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Start,
    Goal,
    Wall,
    Free,
}

impl Cell {
    fn symbol(self) -> char {
        match self {
            Cell::Start => 'S',
            Cell::Goal => 'G',
            Cell::Wall => 'W',
            Cell::Free => '.',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeMap {
    grid: Vec<Vec<Cell>>,
    pub cell_size: f64,
    /// World position of the grid's top-left corner.
    pub origin: [f64; 2],
}

impl MazeMap {
    pub fn parse(text: &str, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Config("cell size must be > 0".into()));
        }
        let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        if lines.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty map".into(),
            });
        }
        let mut grid = Vec::with_capacity(lines.len());
        let mut width = None;
        for (r, line) in lines.iter().enumerate() {
            let mut row = Vec::new();
            for (c, ch) in line.chars().enumerate() {
                let cell = match ch {
                    'S' => Cell::Start,
                    'G' => Cell::Goal,
                    'W' => Cell::Wall,
                    '.' | '·' => Cell::Free,
                    other => {
                        return Err(Error::Parse {
                            line: r + 1,
                            column: c + 1,
                            message: format!("unknown map character {other:?}"),
                        })
                    }
                };
                row.push(cell);
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse {
                        line: r + 1,
                        column: row.len().min(w) + 1,
                        message: format!("row has {} cells, expected {w}", row.len()),
                    })
                }
                _ => {}
            }
            grid.push(row);
        }
        let rows = grid.len();
        let cols = width.unwrap_or(0);
        for (r, row) in grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let border = r == 0 || c == 0 || r + 1 == rows || c + 1 == cols;
                if border && *cell != Cell::Wall {
                    return Err(Error::Parse {
                        line: r + 1,
                        column: c + 1,
                        message: "border cells must be walls".into(),
                    });
                }
            }
        }
        for (tag, name) in [(Cell::Start, "start"), (Cell::Goal, "goal")] {
            if !grid.iter().flatten().any(|c| *c == tag) {
                return Err(Error::Parse {
                    line: rows,
                    column: 1,
                    message: format!("map has no {name} cell"),
                });
            }
        }
        let origin = [
            -(cols as f64) * cell_size / 2.0,
            -(rows as f64) * cell_size / 2.0,
        ];
        Ok(Self {
            grid,
            cell_size,
            origin,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.grid {
            out.extend(row.iter().map(|c| c.symbol()));
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    pub fn cols(&self) -> usize {
        self.grid[0].len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.grid[row][col]
    }

    fn cells_tagged(&self, tag: Cell) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, row) in self.grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if *cell == tag {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn goal_cells(&self) -> Vec<(usize, usize)> {
        self.cells_tagged(Cell::Goal)
    }

    pub fn start_cells(&self) -> Vec<(usize, usize)> {
        self.cells_tagged(Cell::Start)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn cell_bounds(&self, row: usize, col: usize) -> BoxRegion {
        let lo = [
            self.origin[0] + col as f64 * self.cell_size,
            self.origin[1] + row as f64 * self.cell_size,
        ];
        BoxRegion::new(
            lo.to_vec(),
            vec![lo[0] + self.cell_size, lo[1] + self.cell_size],
        )
        .expect("positive cell size")
    }

    /// Grid cell containing a world position, if inside the grid.
    pub fn locate(&self, pos: [f64; 2]) -> Option<(usize, usize)> {
        let c = ((pos[0] - self.origin[0]) / self.cell_size).floor();
        let r = ((pos[1] - self.origin[1]) / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols() as f64 || r >= self.rows() as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Interior extent (inside the border walls).
    pub fn interior_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let s = self.cell_size;
        (
            [self.origin[0] + s, self.origin[1] + s],
            [
                self.origin[0] + (self.cols() - 1) as f64 * s,
                self.origin[1] + (self.rows() - 1) as f64 * s,
            ],
        )
    }

    fn is_wall(&self, axis: usize, along: usize, cross: usize) -> bool {
        let (r, c) = if axis == 0 {
            (cross, along)
        } else {
            (along, cross)
        };
        self.grid[r][c] == Cell::Wall
    }

    fn extent(&self, axis: usize) -> usize {
        if axis == 0 {
            self.cols()
        } else {
            self.rows()
        }
    }

    /// Index range of cells whose span strictly overlaps `[lo, hi]` on `axis`.
    fn overlapped(&self, axis: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let o = self.origin[axis];
        let s = self.cell_size;
        let n = self.extent(axis) as f64;
        let first = ((lo - o) / s).floor().clamp(0.0, n - 1.0) as usize;
        let last = ((hi - o) / s).ceil().clamp(1.0, n) as usize;
        first..last
    }

    /// True when a square of half-width `radius` at `pos` overlaps a wall.
    pub fn penetrates(&self, pos: [f64; 2], radius: f64) -> bool {
        for r in self.overlapped(1, pos[1] - radius, pos[1] + radius) {
            for c in self.overlapped(0, pos[0] - radius, pos[0] + radius) {
                if self.grid[r][c] == Cell::Wall {
                    let b = self.cell_bounds(r, c);
                    let overlap_x =
                        pos[0] + radius > b.lower()[0] && pos[0] - radius < b.upper()[0];
                    let overlap_y =
                        pos[1] + radius > b.lower()[1] && pos[1] - radius < b.upper()[1];
                    if overlap_x && overlap_y {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Moves a square agent along one axis by `delta`, stopping at the first
    /// wall face. Returns the new coordinate and whether a wall blocked it.
    fn sweep(&self, axis: usize, pos: [f64; 2], delta: f64, radius: f64) -> (f64, bool) {
        const MARGIN: f64 = 1e-9;
        let cross_axis = 1 - axis;
        let cross = self.overlapped(
            cross_axis,
            pos[cross_axis] - radius,
            pos[cross_axis] + radius,
        );
        let cross: Vec<usize> = cross
            .filter(|&i| {
                let o = self.origin[cross_axis] + i as f64 * self.cell_size;
                pos[cross_axis] + radius > o && pos[cross_axis] - radius < o + self.cell_size
            })
            .collect();
        let o = self.origin[axis];
        let s = self.cell_size;
        let n = self.extent(axis);
        let p = pos[axis];
        if delta > 0.0 {
            let lead = p + radius;
            let target = lead + delta;
            let from = (((lead - o) / s).floor().max(0.0) as usize).min(n - 1);
            let to = (((target - o) / s).floor().max(0.0) as usize).min(n - 1);
            for idx in from..=to {
                let edge = o + idx as f64 * s;
                if edge >= lead - MARGIN
                    && edge < target
                    && cross.iter().any(|&x| self.is_wall(axis, idx, x))
                {
                    return ((edge - radius - MARGIN).min(p), true);
                }
            }
        } else if delta < 0.0 {
            let lead = p - radius;
            let target = lead + delta;
            let from = (((lead - o) / s).floor().max(0.0) as usize).min(n - 1);
            let to = (((target - o) / s).floor().max(0.0) as usize).min(n - 1);
            for idx in (to..=from).rev() {
                let edge = o + (idx + 1) as f64 * s;
                if edge <= lead + MARGIN
                    && edge > target
                    && cross.iter().any(|&x| self.is_wall(axis, idx, x))
                {
                    return ((edge + radius + MARGIN).max(p), true);
                }
            }
        }
        (p + delta, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointMazeConfig {
    /// `builtin:<name>` for a bundled map, otherwise a file path.
    pub map: String,
    pub cell_size: f64,
    pub gain: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub radius: f64,
    pub reach_distance: f64,
    pub horizon: usize,
    /// Half-width of the uniform jitter around a start-cell centre on reset.
    pub start_noise: f64,
}

impl Default for PointMazeConfig {
    fn default() -> Self {
        Self {
            map: "builtin:square21".into(),
            cell_size: 1.0,
            gain: 10.0,
            max_speed: 5.0,
            dt: 0.05,
            radius: 0.2,
            reach_distance: 0.45,
            horizon: 300,
            start_noise: 0.25,
        }
    }
}

impl PointMazeConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cell_size", self.cell_size),
            ("gain", self.gain),
            ("max_speed", self.max_speed),
            ("dt", self.dt),
            ("radius", self.radius),
            ("reach_distance", self.reach_distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("point maze {name} must be > 0")));
            }
        }
        if self.radius >= self.cell_size / 2.0 {
            return Err(Error::Config(
                "agent radius must be below half a cell".into(),
            ));
        }
        if !(self.start_noise >= 0.0 && self.start_noise + self.radius < self.cell_size / 2.0) {
            return Err(Error::Config(
                "start_noise + radius must stay inside the start cell".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::Config("point maze horizon must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn load_map(&self) -> Result<MazeMap> {
        let text = match self.map.strip_prefix("builtin:") {
            Some(name) => builtin_map(name)
                .ok_or_else(|| Error::Config(format!("unknown builtin map {name:?}")))?
                .to_string(),
            None => std::fs::read_to_string(&self.map)?,
        };
        MazeMap::parse(&text, self.cell_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl PointState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![
            self.position[0],
            self.position[1],
            self.velocity[0],
            self.velocity[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMaze {
    pub config: PointMazeConfig,
    pub map: MazeMap,
    pub state: PointState,
    goal_spec: GoalSpec,
    steps: usize,
}

impl PointMaze {
    pub fn new(config: PointMazeConfig) -> Result<Self> {
        config.validate()?;
        let map = config.load_map()?;
        Self::with_map(config, map)
    }

    pub fn with_map(config: PointMazeConfig, map: MazeMap) -> Result<Self> {
        config.validate()?;
        let (lo, hi) = map.interior_bounds();
        let goal_spec = GoalSpec::new(
            4,
            vec![0, 1],
            Metric::Euclidean,
            config.reach_distance,
            lo.to_vec(),
            hi.to_vec(),
        )?;
        let (r, c) = map.start_cells()[0];
        let state = PointState {
            position: map.cell_center(r, c),
            velocity: [0.0; 2],
        };
        Ok(Self {
            config,
            map,
            state,
            goal_spec,
            steps: 0,
        })
    }

    pub fn goal_spec(&self) -> &GoalSpec {
        &self.goal_spec
    }

    pub fn set_state(&mut self, state: PointState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        state.to_vec()
    }

    /// Random start cell plus uniform jitter, at rest.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let starts = self.map.start_cells();
        let (r, c) = starts[rng.random_range(0..starts.len())];
        let centre = self.map.cell_center(r, c);
        let n = self.config.start_noise;
        let jitter = |rng: &mut R| {
            if n > 0.0 {
                rng.random_range(-n..=n)
            } else {
                0.0
            }
        };
        let position = [centre[0] + jitter(rng), centre[1] + jitter(rng)];
        self.set_state(PointState {
            position,
            velocity: [0.0; 2],
        })
    }

    /// Start-cell centres in map order, chosen round-robin by attempt.
    pub fn reset_eval(&mut self, attempt: usize) -> Vec<f64> {
        let starts = self.map.start_cells();
        let (r, c) = starts[attempt % starts.len()];
        self.set_state(PointState {
            position: self.map.cell_center(r, c),
            velocity: [0.0; 2],
        })
    }

    /// Pure transition function.
    pub fn dynamics(&self, state: PointState, force: [f64; 2]) -> PointState {
        let c = &self.config;
        let mut v = [0.0; 2];
        for i in 0..2 {
            let f = force[i].clamp(-1.0, 1.0);
            v[i] = (state.velocity[i] + f * c.dt * c.gain).clamp(-c.max_speed, c.max_speed);
        }
        let mut p = state.position;
        for axis in 0..2 {
            let (coord, blocked) = self.map.sweep(axis, p, v[axis] * c.dt, c.radius);
            p[axis] = coord;
            if blocked {
                v[axis] = 0.0;
            }
        }
        PointState {
            position: p,
            velocity: v,
        }
    }

    pub fn step(&mut self, action: &[f64], goal: &[f64]) -> Result<StepOutcome> {
        if action.len() != 2 || action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Input("maze action must be two finite values".into()));
        }
        self.state = self.dynamics(self.state, [action[0], action[1]]);
        let next = self.state.to_vec();
        let reward = self.goal_spec.reward(&next, goal)?;
        self.steps += 1;
        let reached = reward > 0.0;
        Ok(StepOutcome {
            state: next,
            reward,
            reached,
            done: reached || self.steps >= self.config.horizon,
        })
    }

    pub fn evaluation_goals(&self) -> Vec<Vec<f64>> {
        self.map
            .goal_cells()
            .into_iter()
            .map(|(r, c)| self.map.cell_center(r, c).to_vec())
            .collect()
    }

    pub fn goal_cell_bounds(&self) -> Vec<BoxRegion> {
        self.map
            .goal_cells()
            .into_iter()
            .map(|(r, c)| self.map.cell_bounds(r, c))
            .collect()
    }
}
