//! Two agents racing to a shared goal on a 3×3 grid.
//!
//! Cells are `(row, col)` with row 0 at the top. Joint states enumerate the
//! ordered pairs of distinct cells (72 of them), followed by one absorbing
//! terminal state.

use crate::error::{arg_err, Error, Result};
use crate::game::MarkovGame;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Action labels in index order.
pub const MOVES: [&str; 4] = ["left", "right", "up", "down"];

const DELTAS: [(i32, i32); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

#[derive(Debug, Clone)]
pub struct Gridworld {
    size: i32,
    goal: Cell,
    start: [Cell; 2],
    horizon: usize,
}

impl Gridworld {
    pub const MIN_HORIZON: usize = 5;

    /// The standard instance: goal in the top-right corner, player 1 starting
    /// at `(1, 0)` and player 2 at `(2, 1)`, three moves from the goal each.
    pub fn new(horizon: usize) -> Result<Self> {
        Self::with_layout(horizon, Cell::new(0, 2), [Cell::new(1, 0), Cell::new(2, 1)])
    }

    pub fn with_layout(horizon: usize, goal: Cell, start: [Cell; 2]) -> Result<Self> {
        if horizon < Self::MIN_HORIZON {
            return arg_err(format!(
                "gridworld horizon must be at least {}, got {horizon}",
                Self::MIN_HORIZON
            ));
        }
        let g = Self { size: 3, goal, start, horizon };
        for c in [goal, start[0], start[1]] {
            if !g.inside(c) {
                return arg_err(format!("cell {c} is off the grid"));
            }
        }
        if start[0] == start[1] || start.contains(&goal) {
            return arg_err("start cells must be distinct and off the goal");
        }
        Ok(g)
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn start(&self) -> [Cell; 2] {
        self.start
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_actions(&self) -> usize {
        4
    }

    pub fn n_cells(&self) -> usize {
        (self.size * self.size) as usize
    }

    /// Joint states plus the terminal.
    pub fn n_states(&self) -> usize {
        self.n_joint() + 1
    }

    fn n_joint(&self) -> usize {
        self.n_cells() * (self.n_cells() - 1)
    }

    pub fn terminal(&self) -> usize {
        self.n_joint()
    }

    fn inside(&self, c: Cell) -> bool {
        (0..self.size).contains(&c.row) && (0..self.size).contains(&c.col)
    }

    fn cell_index(&self, c: Cell) -> usize {
        (c.row * self.size + c.col) as usize
    }

    fn cell_at(&self, i: usize) -> Cell {
        Cell::new(i as i32 / self.size, i as i32 % self.size)
    }

    pub fn encode(&self, p1: Cell, p2: Cell) -> Option<usize> {
        if !self.inside(p1) || !self.inside(p2) || p1 == p2 {
            return None;
        }
        let (i, j) = (self.cell_index(p1), self.cell_index(p2));
        Some(i * (self.n_cells() - 1) + if j > i { j - 1 } else { j })
    }

    pub fn decode(&self, x: usize) -> Result<[Cell; 2]> {
        if x >= self.n_joint() {
            return Err(Error::Decode(x));
        }
        let m = self.n_cells() - 1;
        let i = x / m;
        let j = x % m;
        let j = if j >= i { j + 1 } else { j };
        Ok([self.cell_at(i), self.cell_at(j)])
    }

    pub fn start_state(&self) -> usize {
        self.encode(self.start[0], self.start[1]).expect("validated start")
    }

    fn target(&self, c: Cell, a: usize) -> Cell {
        let (dr, dc) = DELTAS[a];
        let t = Cell::new(c.row + dr, c.col + dc);
        if self.inside(t) {
            t
        } else {
            c
        }
    }

    /// Simultaneous move resolution. Walls, the opponent's current cell and
    /// a shared target all leave the mover in place.
    pub fn step(&self, p: [Cell; 2], a: [usize; 2]) -> [Cell; 2] {
        let t = [self.target(p[0], a[0]), self.target(p[1], a[1])];
        if t[0] == t[1] {
            return p;
        }
        [
            if t[0] == p[1] { p[0] } else { t[0] },
            if t[1] == p[0] { p[1] } else { t[1] },
        ]
    }

    /// Next state and player 1's reward for a joint action.
    pub fn transition(&self, x: usize, a1: usize, a2: usize) -> Result<(usize, f64)> {
        if x == self.terminal() {
            return Ok((x, 0.0));
        }
        let p = self.decode(x)?;
        // unreachable from the start, but closed off so every row is defined
        if let Some(r) = self.goal_reward(p) {
            return Ok((self.terminal(), r));
        }
        let q = self.step(p, [a1, a2]);
        match self.goal_reward(q) {
            Some(r) => Ok((self.terminal(), r)),
            None => Ok((self.encode(q[0], q[1]).expect("moves keep agents apart"), 0.0)),
        }
    }

    fn goal_reward(&self, p: [Cell; 2]) -> Option<f64> {
        if p[0] == self.goal {
            Some(1.0)
        } else if p[1] == self.goal {
            Some(-1.0)
        } else {
            None
        }
    }

    pub fn game<T: Scalar>(&self) -> MarkovGame<T> {
        let ns = self.n_states();
        let mut transitions = Vec::with_capacity(ns * 16);
        let mut rewards = Vec::with_capacity(ns * 16);
        for x in 0..ns {
            for a1 in 0..4 {
                for a2 in 0..4 {
                    let (y, r) = self.transition(x, a1, a2).expect("state in range");
                    transitions.push(vec![(y, T::one())]);
                    rewards.push(T::lit(r));
                }
            }
        }
        let mut initial = vec![T::zero(); ns];
        initial[self.start_state()] = T::one();
        MarkovGame::new(ns, [4, 4], self.horizon, transitions, rewards, initial)
            .expect("gridworld tables are valid")
    }

    /// Grid picture of a state: `1` and `2` for the agents, `G` for the goal.
    pub fn render(&self, x: usize) -> Result<String> {
        if x == self.terminal() {
            return Ok("<terminal>\n".into());
        }
        let p = self.decode(x)?;
        let mut out = String::new();
        for row in 0..self.size {
            for col in 0..self.size {
                let c = Cell::new(row, col);
                out.push(if c == p[0] {
                    '1'
                } else if c == p[1] {
                    '2'
                } else if c == self.goal {
                    'G'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_bijection() {
        let g = Gridworld::new(10).unwrap();
        assert_eq!(g.terminal(), 72);
        for x in 0..72 {
            let [a, b] = g.decode(x).unwrap();
            assert_eq!(g.encode(a, b), Some(x));
        }
        assert!(g.decode(72).is_err());
    }

    #[test]
    fn walls_and_blocking() {
        let g = Gridworld::new(10).unwrap();
        let p = [Cell::new(0, 0), Cell::new(2, 2)];
        assert_eq!(g.step(p, [0, 3]), p);
        // into the opponent's cell
        let p = [Cell::new(1, 1), Cell::new(1, 2)];
        assert_eq!(g.step(p, [1, 1])[0], Cell::new(1, 1));
        // swap attempt
        assert_eq!(g.step(p, [1, 0]), p);
        // shared target
        let p = [Cell::new(1, 0), Cell::new(1, 2)];
        assert_eq!(g.step(p, [1, 0]), p);
    }

    #[test]
    fn goal_pays_once_then_terminal() {
        let g = Gridworld::new(10).unwrap();
        let x = g.encode(Cell::new(0, 1), Cell::new(2, 0)).unwrap();
        assert_eq!(g.transition(x, 1, 2).unwrap(), (72, 1.0));
        assert_eq!(g.transition(72, 1, 2).unwrap(), (72, 0.0));
    }

    #[test]
    fn short_horizon_rejected() {
        assert!(Gridworld::new(4).is_err());
    }

    #[test]
    fn render_start() {
        let g = Gridworld::new(10).unwrap();
        assert_eq!(g.render(g.start_state()).unwrap(), "..G\n1..\n.2.\n");
    }
}
