//! Tic-Tac-Toe as a simultaneous-move Markov game.
//!
//! Player 1 plays X and moves first. Both players always pick one of nine
//! cells; only the mover's choice is used, and an occupied cell is
//! redirected to the lowest empty one. Stage `h` boards carry `h` marks
//! until the game ends; finished boards absorb with zero reward, and a win
//! pays ±1 on the move that completes it.

use std::collections::{HashMap, VecDeque};

use crate::error::{arg_err, Error, Result};
use crate::game::{MarkovGame, PlayerId, StagePolicy};
use crate::Scalar;

pub const EMPTY: u8 = 0;
pub const X: u8 = 1;
pub const O: u8 = 2;

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

/// The eight symmetries of the square as cell permutations: the image
/// board takes cell `i` from cell `SYMMETRIES[g][i]` of the source.
pub const SYMMETRIES: [[usize; 9]; 8] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8],
    [6, 3, 0, 7, 4, 1, 8, 5, 2],
    [8, 7, 6, 5, 4, 3, 2, 1, 0],
    [2, 5, 8, 1, 4, 7, 0, 3, 6],
    [2, 1, 0, 5, 4, 3, 8, 7, 6],
    [6, 7, 8, 3, 4, 5, 0, 1, 2],
    [0, 3, 6, 1, 4, 7, 2, 5, 8],
    [8, 5, 2, 7, 4, 1, 6, 3, 0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Board {
    pub cells: [u8; 9],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    XWins,
    OWins,
    Draw,
}

impl Board {
    pub const EMPTY: Board = Board { cells: [EMPTY; 9] };

    /// Checks mark counts and that at most one side has a line.
    pub fn new(cells: [u8; 9]) -> Result<Self> {
        if cells.iter().any(|&c| c > O) {
            return arg_err("cells must be 0 (empty), 1 (X) or 2 (O)");
        }
        let b = Board { cells };
        let (nx, no) = (b.count(X), b.count(O));
        if nx != no && nx != no + 1 {
            return arg_err(format!("illegal mark counts: {nx} X and {no} O"));
        }
        let (wx, wo) = (b.has_line(X), b.has_line(O));
        if (wx && wo) || (wx && nx == no) || (wo && nx != no) {
            return arg_err("illegal board: impossible winning line");
        }
        Ok(b)
    }

    pub fn count(&self, mark: u8) -> usize {
        self.cells.iter().filter(|&&c| c == mark).count()
    }

    pub fn marks(&self) -> usize {
        9 - self.count(EMPTY)
    }

    pub fn mover(&self) -> PlayerId {
        if self.count(X) == self.count(O) {
            PlayerId::One
        } else {
            PlayerId::Two
        }
    }

    fn has_line(&self, mark: u8) -> bool {
        LINES.iter().any(|l| l.iter().all(|&i| self.cells[i] == mark))
    }

    pub fn outcome(&self) -> Option<Outcome> {
        if self.has_line(X) {
            Some(Outcome::XWins)
        } else if self.has_line(O) {
            Some(Outcome::OWins)
        } else if self.marks() == 9 {
            Some(Outcome::Draw)
        } else {
            None
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome().is_some()
    }

    pub fn legal_moves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..9).filter(|&i| self.cells[i] == EMPTY)
    }

    /// Mover's mark at `cell`, redirected to the lowest empty cell when
    /// `cell` is taken.
    pub fn play(&self, cell: usize) -> Board {
        let cell = if self.cells[cell] == EMPTY {
            cell
        } else {
            self.legal_moves().next().expect("board not full")
        };
        let mut next = *self;
        next.cells[cell] = if self.mover() == PlayerId::One { X } else { O };
        next
    }

    pub fn code(&self) -> u32 {
        self.cells.iter().rev().fold(0, |acc, &c| acc * 3 + c as u32)
    }

    pub fn transform(&self, g: usize) -> Board {
        let mut cells = [EMPTY; 9];
        for (i, c) in cells.iter_mut().enumerate() {
            *c = self.cells[SYMMETRIES[g][i]];
        }
        Board { cells }
    }

    /// Canonical representative (smallest code over the eight symmetries)
    /// and the symmetry that produces it.
    pub fn canonical_with(&self) -> (Board, usize) {
        (0..8)
            .map(|g| (self.transform(g), g))
            .min_by_key(|(b, g)| (b.code(), *g))
            .expect("eight symmetries")
    }

    pub fn canonicalize(&self) -> Board {
        self.canonical_with().0
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in 0..3 {
            let row: Vec<String> = (0..3)
                .map(|c| match self.cells[3 * r + c] {
                    X => "X".into(),
                    O => "O".into(),
                    _ => (3 * r + c).to_string(),
                })
                .collect();
            out.push_str(&format!(" {} \n", row.join(" | ")));
            if r < 2 {
                out.push_str("---+---+---\n");
            }
        }
        out
    }
}

/// Reachable boards, their Markov-game indexing and the minimax expert.
#[derive(Debug, Clone)]
pub struct TicTacToe {
    boards: Vec<Board>,
    index: HashMap<u32, usize>,
    values: HashMap<u32, i32>,
    best: HashMap<u32, usize>,
}

impl TicTacToe {
    pub const HORIZON: usize = 9;

    pub fn new() -> Self {
        let mut boards = vec![Board::EMPTY];
        let mut index = HashMap::from([(Board::EMPTY.code(), 0)]);
        let mut queue = VecDeque::from([Board::EMPTY]);
        while let Some(b) = queue.pop_front() {
            if b.is_terminal() {
                continue;
            }
            for m in b.legal_moves() {
                let c = b.play(m);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(c.code()) {
                    e.insert(boards.len());
                    boards.push(c);
                    queue.push_back(c);
                }
            }
        }
        let mut t = Self { boards, index, values: HashMap::new(), best: HashMap::new() };
        t.minimax(&Board::EMPTY);
        t
    }

    /// Depth-weighted minimax value of a canonical board from X's side.
    fn minimax(&mut self, b: &Board) -> i32 {
        let key = b.code();
        if let Some(&v) = self.values.get(&key) {
            return v;
        }
        let weight = 10 - b.marks() as i32;
        let v = match b.outcome() {
            Some(Outcome::XWins) => weight,
            Some(Outcome::OWins) => -weight,
            Some(Outcome::Draw) => 0,
            None => {
                let maximize = b.mover() == PlayerId::One;
                let mut best: Option<(i32, usize)> = None;
                let moves: Vec<usize> = b.legal_moves().collect();
                for m in moves {
                    let child = b.play(m).canonicalize();
                    let v = self.minimax(&child);
                    let better = match best {
                        None => true,
                        Some((bv, _)) => (maximize && v > bv) || (!maximize && v < bv),
                    };
                    if better {
                        best = Some((v, m));
                    }
                }
                let (v, m) = best.expect("nonterminal board has a move");
                self.best.insert(key, m);
                v
            }
        };
        self.values.insert(key, v);
        v
    }

    pub fn n_states(&self) -> usize {
        self.boards.len()
    }

    pub fn board(&self, x: usize) -> Result<&Board> {
        self.boards.get(x).ok_or(Error::Decode(x))
    }

    pub fn state_of(&self, b: &Board) -> Option<usize> {
        self.index.get(&b.code()).copied()
    }

    /// Canonical boards in the minimax memo, terminal positions included.
    pub fn canonical_table_size(&self) -> usize {
        self.values.len()
    }

    /// Minimax value of any legal board from X's side (depth weighted).
    pub fn value(&self, b: &Board) -> Option<i32> {
        self.values.get(&b.canonicalize().code()).copied()
    }

    /// Expert move on a raw board: the canonical move mapped back through
    /// the canonicalizing symmetry.
    pub fn expert_move(&self, b: &Board) -> Option<usize> {
        let (canon, g) = b.canonical_with();
        self.best.get(&canon.code()).map(|&m| SYMMETRIES[g][m])
    }

    pub fn game<T: Scalar>(&self) -> MarkovGame<T> {
        let ns = self.n_states();
        let mut transitions = Vec::with_capacity(ns * 81);
        let mut rewards = Vec::with_capacity(ns * 81);
        for (x, b) in self.boards.iter().enumerate() {
            let terminal = b.is_terminal();
            let mover = b.mover();
            for a1 in 0..9 {
                for a2 in 0..9 {
                    if terminal {
                        transitions.push(vec![(x, T::one())]);
                        rewards.push(T::zero());
                        continue;
                    }
                    let a = if mover == PlayerId::One { a1 } else { a2 };
                    let c = b.play(a);
                    transitions.push(vec![(self.index[&c.code()], T::one())]);
                    rewards.push(match c.outcome() {
                        Some(Outcome::XWins) => T::one(),
                        Some(Outcome::OWins) => -T::one(),
                        _ => T::zero(),
                    });
                }
            }
        }
        let mut initial = vec![T::zero(); ns];
        initial[0] = T::one();
        MarkovGame::new(ns, [9, 9], Self::HORIZON, transitions, rewards, initial)
            .expect("tic-tac-toe tables are valid")
    }

    /// Deterministic expert profile. The non-mover and finished boards
    /// play cell 0, which the dynamics ignore.
    pub fn minimax_expert<T: Scalar>(&self) -> (StagePolicy<T>, StagePolicy<T>) {
        let pol = |player: PlayerId| {
            StagePolicy::deterministic(player, Self::HORIZON, self.n_states(), 9, |_, x| {
                let b = &self.boards[x];
                if b.mover() == player {
                    self.expert_move(b).unwrap_or(0)
                } else {
                    0
                }
            })
            .expect("cells in range")
        };
        (pol(PlayerId::One), pol(PlayerId::Two))
    }

    /// Plays one game from the empty board with a move rule per seat.
    pub fn play_out(
        &self,
        mut x_move: impl FnMut(&Board) -> usize,
        mut o_move: impl FnMut(&Board) -> usize,
    ) -> Outcome {
        let mut b = Board::EMPTY;
        loop {
            if let Some(o) = b.outcome() {
                return o;
            }
            let m = match b.mover() {
                PlayerId::One => x_move(&b),
                PlayerId::Two => o_move(&b),
            };
            b = b.play(m);
        }
    }
}

impl Default for TicTacToe {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reachable_and_canonical_counts() {
        let t = TicTacToe::new();
        assert_eq!(t.n_states(), 5478);
        assert_eq!(t.canonical_table_size(), 765);
    }

    #[test]
    fn symmetries_form_a_group_of_eight() {
        let b = Board::new([1, 2, 0, 0, 1, 0, 0, 0, 0]).unwrap();
        let images: std::collections::HashSet<_> = (0..8).map(|g| b.transform(g)).collect();
        assert_eq!(images.len(), 8);
        for g in 0..8 {
            assert_eq!(b.transform(g).canonicalize(), b.canonicalize());
        }
    }

    #[test]
    fn illegal_boards_rejected() {
        assert!(Board::new([1, 1, 0, 0, 0, 0, 0, 0, 0]).is_err());
        assert!(Board::new([1, 1, 1, 2, 2, 2, 0, 0, 0]).is_err());
        assert!(Board::new([3, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn redirect_to_lowest_empty() {
        let b = Board::new([1, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(b.play(0).cells[1], O);
    }

    #[test]
    fn empty_board_value_is_draw() {
        let t = TicTacToe::new();
        assert_eq!(t.value(&Board::EMPTY), Some(0));
        assert_eq!(t.play_out(|b| t.expert_move(b).unwrap(), |b| t.expert_move(b).unwrap()), Outcome::Draw);
    }
}
