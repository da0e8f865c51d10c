//! Two-player zero-sum finite-horizon Markov games and their exact
//! dynamic-programming analysis.
//!
//! Stages are indexed `0..horizon` in code; files and reports use `1..=H`.

mod analysis;
mod io;

pub use analysis::{
    best_response, evaluate, expected_tv, joint_occupancy, nash_gap, nash_gap_parts, occupancy,
    StageTv,
};
pub use io::{GameDocument, PolicyDocument, RewardEntry, TransitionEntry};

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlayerId {
    One,
    Two,
}

impl PlayerId {
    pub const BOTH: [PlayerId; 2] = [PlayerId::One, PlayerId::Two];

    /// 0 for player 1, 1 for player 2.
    pub fn index(self) -> usize {
        match self {
            PlayerId::One => 0,
            PlayerId::Two => 1,
        }
    }

    /// 1 or 2, for messages and files.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn other(self) -> PlayerId {
        match self {
            PlayerId::One => PlayerId::Two,
            PlayerId::Two => PlayerId::One,
        }
    }

    pub fn from_number(n: usize) -> Result<PlayerId> {
        match n {
            1 => Ok(PlayerId::One),
            2 => Ok(PlayerId::Two),
            _ => Err(Error::InvalidArgument(format!("player must be 1 or 2, got {n}"))),
        }
    }

    /// Sign applied to player 1's reward to obtain this player's reward.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            PlayerId::One => T::one(),
            PlayerId::Two => -T::one(),
        }
    }
}

impl std::fmt::Display for PlayerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Sparse distribution over next states.
pub type TransitionRow<T> = Vec<(usize, T)>;

/// Enumerable two-player zero-sum finite-horizon Markov game.
///
/// Transitions are stored as one sparse row per `(state, a¹, a²)` triple and
/// rewards are player 1's payoff; player 2 receives the negation.
#[derive(Debug, Clone)]
pub struct MarkovGame<T> {
    n_states: usize,
    n_actions: [usize; 2],
    horizon: usize,
    transitions: Vec<TransitionRow<T>>,
    rewards: Vec<T>,
    initial: Vec<T>,
    null_absorbing: Vec<bool>,
}

impl<T: Scalar> MarkovGame<T> {
    /// Builds and validates a game. `transitions` and `rewards` are indexed
    /// by [`MarkovGame::triple`].
    pub fn new(
        n_states: usize,
        n_actions: [usize; 2],
        horizon: usize,
        transitions: Vec<TransitionRow<T>>,
        rewards: Vec<T>,
        initial: Vec<T>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions[0] == 0 || n_actions[1] == 0 || horizon == 0 {
            return Err(Error::InvalidGame(
                "states, actions and horizon must all be positive".into(),
            ));
        }
        let triples = n_states * n_actions[0] * n_actions[1];
        if transitions.len() != triples || rewards.len() != triples {
            return dim_err(format!(
                "expected {triples} transition rows and rewards, got {} and {}",
                transitions.len(),
                rewards.len()
            ));
        }
        if initial.len() != n_states {
            return dim_err(format!(
                "initial distribution has {} entries for {n_states} states",
                initial.len()
            ));
        }
        let tol = T::tol(1e-12);
        for (t, row) in transitions.iter().enumerate() {
            let mut s = T::zero();
            for &(x, p) in row {
                if x >= n_states {
                    return Err(Error::InvalidGame(format!("row {t} targets state {x}")));
                }
                if !(p >= T::zero()) {
                    return Err(Error::InvalidGame(format!("row {t} has negative mass {p}")));
                }
                s += p;
            }
            if (s - T::one()).abs() > tol {
                return Err(Error::InvalidGame(format!("transition row {t} sums to {s}")));
            }
        }
        for (t, &r) in rewards.iter().enumerate() {
            if !(r.abs() <= T::one()) {
                return Err(Error::InvalidGame(format!("reward {r} at triple {t} outside [-1, 1]")));
            }
        }
        let s: T = initial.iter().copied().sum();
        if (s - T::one()).abs() > tol || initial.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::InvalidGame(format!("initial distribution sums to {s}")));
        }
        let mut game = Self {
            n_states,
            n_actions,
            horizon,
            transitions,
            rewards,
            initial,
            null_absorbing: Vec::new(),
        };
        game.null_absorbing = (0..n_states).map(|x| game.detect_null_absorbing(x)).collect();
        Ok(game)
    }

    fn detect_null_absorbing(&self, x: usize) -> bool {
        for a1 in 0..self.n_actions[0] {
            for a2 in 0..self.n_actions[1] {
                let t = self.triple(x, a1, a2);
                if self.rewards[t] != T::zero() {
                    return false;
                }
                let row = &self.transitions[t];
                let stay: T = row.iter().filter(|(y, _)| *y == x).map(|&(_, p)| p).sum();
                if stay != T::one() {
                    return false;
                }
            }
        }
        true
    }

    #[inline]
    pub fn triple(&self, x: usize, a1: usize, a2: usize) -> usize {
        (x * self.n_actions[0] + a1) * self.n_actions[1] + a2
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> [usize; 2] {
        self.n_actions
    }

    pub fn actions_of(&self, player: PlayerId) -> usize {
        self.n_actions[player.index()]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    #[inline]
    pub fn transition(&self, x: usize, a1: usize, a2: usize) -> &[(usize, T)] {
        &self.transitions[self.triple(x, a1, a2)]
    }

    /// Player 1's reward.
    #[inline]
    pub fn reward(&self, x: usize, a1: usize, a2: usize) -> T {
        self.rewards[self.triple(x, a1, a2)]
    }

    /// A state that loops onto itself with zero reward under every joint
    /// action. Play there has no consequence, so episodes are treated as
    /// finished once one is entered.
    pub fn is_null_absorbing(&self, x: usize) -> bool {
        self.null_absorbing[x]
    }

    /// Returns the same game with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidGame("horizon must be positive".into()));
        }
        let mut g = self.clone();
        g.horizon = horizon;
        Ok(g)
    }

    /// Converts the scalar type, e.g. to run the same game in `f32`.
    pub fn cast<U: Scalar>(&self) -> Result<MarkovGame<U>> {
        let conv = |v: T| U::lit(v.as_f64());
        MarkovGame::new(
            self.n_states,
            self.n_actions,
            self.horizon,
            self.transitions
                .iter()
                .map(|r| r.iter().map(|&(x, p)| (x, conv(p))).collect())
                .collect(),
            self.rewards.iter().map(|&r| conv(r)).collect(),
            self.initial.iter().map(|&p| conv(p)).collect(),
        )
    }
}

/// Non-stationary policy of one player: a distribution over that player's
/// actions for every stage and state.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePolicy<T> {
    player: PlayerId,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    probs: Vec<T>,
}

impl<T: Scalar> StagePolicy<T> {
    pub fn uniform(player: PlayerId, horizon: usize, n_states: usize, n_actions: usize) -> Self {
        let p = T::one() / T::of_usize(n_actions);
        Self { player, horizon, n_states, n_actions, probs: vec![p; horizon * n_states * n_actions] }
    }

    pub fn uniform_for(game: &MarkovGame<T>, player: PlayerId) -> Self {
        Self::uniform(player, game.horizon(), game.n_states(), game.actions_of(player))
    }

    /// Deterministic policy from a `(stage, state) → action` rule.
    pub fn deterministic(
        player: PlayerId,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        mut choose: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        let mut probs = vec![T::zero(); horizon * n_states * n_actions];
        for h in 0..horizon {
            for x in 0..n_states {
                let a = choose(h, x);
                if a >= n_actions {
                    return dim_err(format!("action {a} out of range {n_actions}"));
                }
                probs[(h * n_states + x) * n_actions + a] = T::one();
            }
        }
        Ok(Self { player, horizon, n_states, n_actions, probs })
    }

    /// Policy from a `(stage, state, out)` filler; validated afterwards.
    pub fn from_fn(
        player: PlayerId,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        mut fill: impl FnMut(usize, usize, &mut [T]),
    ) -> Result<Self> {
        let mut pol = Self {
            player,
            horizon,
            n_states,
            n_actions,
            probs: vec![T::zero(); horizon * n_states * n_actions],
        };
        for h in 0..horizon {
            for x in 0..n_states {
                fill(h, x, pol.dist_mut(h, x));
            }
        }
        pol.validate()?;
        Ok(pol)
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::tol(1e-10);
        for h in 0..self.horizon {
            for x in 0..self.n_states {
                let d = self.dist(h, x);
                let s: T = d.iter().copied().sum();
                if (s - T::one()).abs() > tol || d.iter().any(|&p| !(p >= T::zero())) {
                    return Err(Error::InvalidArgument(format!(
                        "player {} policy at stage {} state {x} is not a distribution (sum {s})",
                        self.player,
                        h + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn player(&self) -> PlayerId {
        self.player
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn dist(&self, h: usize, x: usize) -> &[T] {
        let o = (h * self.n_states + x) * self.n_actions;
        &self.probs[o..o + self.n_actions]
    }

    #[inline]
    pub fn dist_mut(&mut self, h: usize, x: usize) -> &mut [T] {
        let o = (h * self.n_states + x) * self.n_actions;
        &mut self.probs[o..o + self.n_actions]
    }

    #[inline]
    pub fn prob(&self, h: usize, x: usize, a: usize) -> T {
        self.probs[(h * self.n_states + x) * self.n_actions + a]
    }

    /// Checks that the policy belongs to `player` in `game`.
    pub fn check_shape(&self, game: &MarkovGame<T>, player: PlayerId) -> Result<()> {
        if self.player != player {
            return dim_err(format!("expected a player {player} policy, got player {}", self.player));
        }
        if self.horizon != game.horizon()
            || self.n_states != game.n_states()
            || self.n_actions != game.actions_of(player)
        {
            return dim_err(format!(
                "policy shape (H={}, X={}, A={}) does not match game (H={}, X={}, A={})",
                self.horizon,
                self.n_states,
                self.n_actions,
                game.horizon(),
                game.n_states(),
                game.actions_of(player)
            ));
        }
        Ok(())
    }

    /// `Σ wᵢ πᵢ` for policies of the same shape.
    pub fn mixture(parts: &[(&StagePolicy<T>, T)]) -> Result<Self> {
        let (first, _) = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut out = StagePolicy {
            probs: vec![T::zero(); first.probs.len()],
            ..(*first).clone()
        };
        for (p, w) in parts {
            if p.player != first.player || p.probs.len() != first.probs.len() {
                return dim_err("mixture components differ in shape");
            }
            for (o, &q) in out.probs.iter_mut().zip(&p.probs) {
                *o += *w * q;
            }
        }
        Ok(out)
    }

    /// Copy with the player tag replaced; used when a game is mirrored.
    pub fn relabel(&self, player: PlayerId) -> Self {
        Self { player, ..self.clone() }
    }

    pub fn cast<U: Scalar>(&self) -> StagePolicy<U> {
        StagePolicy {
            player: self.player,
            horizon: self.horizon,
            n_states: self.n_states,
            n_actions: self.n_actions,
            probs: self.probs.iter().map(|&p| U::lit(p.as_f64())).collect(),
        }
    }

    /// Largest entrywise difference to another policy of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// State (and optionally joint state-action) visitation per stage.
#[derive(Debug, Clone)]
pub struct OccupancyTable<T> {
    /// `state_occ[h][x] = ν_h(x)`.
    pub state_occ: Vec<Vec<T>>,
    /// `joint_occ[h][triple(x, a¹, a²)] = μ_h(x, a¹, a²)` when materialized.
    pub joint_occ: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> OccupancyTable<T> {
    pub fn stage(&self, h: usize) -> &[T] {
        &self.state_occ[h]
    }

    pub fn horizon(&self) -> usize {
        self.state_occ.len()
    }
}

/// Values of one player under a fixed profile (or a best response).
#[derive(Debug, Clone)]
pub struct ValueTable<T> {
    pub player: PlayerId,
    n_actions: usize,
    /// `v[h][x]` for `h` in `0..=H`; the last row is identically zero.
    pub v: Vec<Vec<T>>,
    /// `q[h][x · A + a]` for the player's own action `a`.
    pub q: Vec<Vec<T>>,
}

impl<T: Scalar> ValueTable<T> {
    pub fn q(&self, h: usize, x: usize, a: usize) -> T {
        self.q[h][x * self.n_actions + a]
    }

    pub fn q_row(&self, h: usize, x: usize) -> &[T] {
        &self.q[h][x * self.n_actions..(x + 1) * self.n_actions]
    }

    /// `⟨ν₁, V_1⟩`.
    pub fn initial_value(&self, initial: &[T]) -> T {
        initial.iter().zip(&self.v[0]).map(|(&p, &v)| p * v).sum()
    }
}
