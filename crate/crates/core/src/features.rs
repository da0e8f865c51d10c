//! Per-player feature maps, expert feature covariances and the
//! feature-level concentrability estimator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::gridworld::{Cell, Gridworld};
use crate::error::{arg_err, dim_err, Error, Result};
use crate::game::{best_response, occupancy, MarkovGame, PlayerId, StagePolicy};
use crate::linalg::{psd_solve, Cholesky, SquareMatrix};
use crate::Scalar;

/// Sparse vector as `(coordinate, value)` pairs in increasing coordinate order.
pub type SparseVec<T> = Vec<(usize, T)>;

/// Feature map `φ(x, a)` of one player, tabulated over every state and
/// action of a game.
#[derive(Debug, Clone)]
pub struct FeatureMap<T> {
    name: String,
    player: PlayerId,
    dim: usize,
    n_states: usize,
    n_actions: usize,
    table: Vec<SparseVec<T>>,
}

impl<T: Scalar> FeatureMap<T> {
    /// Builds a map from a table indexed by `x · n_actions + a`. Every
    /// vector must have Euclidean norm at most one.
    pub fn from_table(
        name: impl Into<String>,
        player: PlayerId,
        dim: usize,
        n_states: usize,
        n_actions: usize,
        mut table: Vec<SparseVec<T>>,
    ) -> Result<Self> {
        let name = name.into();
        if table.len() != n_states * n_actions {
            return dim_err(format!(
                "feature table has {} entries for {n_states} states x {n_actions} actions",
                table.len()
            ));
        }
        let bound = T::one() + T::tol(1e-12);
        for (k, v) in table.iter_mut().enumerate() {
            v.retain(|&(_, x)| x != T::zero());
            v.sort_by_key(|&(i, _)| i);
            if v.iter().any(|&(i, _)| i >= dim) {
                return dim_err(format!("feature {name} entry {k} exceeds dimension {dim}"));
            }
            if v.windows(2).any(|w| w[0].0 == w[1].0) {
                return arg_err(format!("feature {name} entry {k} repeats a coordinate"));
            }
            let n = sparse_norm(v);
            if !(n <= bound) {
                return arg_err(format!(
                    "feature {name} at state {}, action {} has norm {n} > 1",
                    k / n_actions,
                    k % n_actions
                ));
            }
        }
        Ok(Self { name, player, dim, n_states, n_actions, table })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn player(&self) -> PlayerId {
        self.player
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn eval(&self, x: usize, a: usize) -> &[(usize, T)] {
        &self.table[x * self.n_actions + a]
    }

    pub fn dense(&self, x: usize, a: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for &(i, val) in self.eval(x, a) {
            v[i] = val;
        }
        v
    }

    /// Largest `‖φ(x, a)‖₂` over the table.
    pub fn max_norm(&self) -> T {
        self.table.iter().map(|v| sparse_norm(v)).fold(T::zero(), T::max)
    }

    /// Whether `φ(x, ·)` is identical for every action, i.e. the state
    /// carries no information for a policy over this map.
    pub fn action_blind(&self, x: usize) -> bool {
        let first = self.eval(x, 0);
        (1..self.n_actions).all(|a| self.eval(x, a) == first)
    }

    pub fn check_game(&self, game: &MarkovGame<T>) -> Result<()> {
        if self.n_states != game.n_states() || self.n_actions != game.actions_of(self.player) {
            return dim_err(format!(
                "feature map {} built for {} states x {} actions, game has {} x {}",
                self.name,
                self.n_states,
                self.n_actions,
                game.n_states(),
                game.actions_of(self.player)
            ));
        }
        Ok(())
    }
}

fn sparse_norm<T: Scalar>(v: &[(usize, T)]) -> T {
    v.iter().map(|&(_, x)| x * x).sum::<T>().sqrt()
}

/// One-hot features `e_(x, a)` over the states where play matters.
///
/// States that absorb with zero reward under every joint action map to the
/// zero vector and take no coordinates, so the gridworld's appended
/// terminal state does not enlarge `d`.
pub fn tabular_features<T: Scalar>(game: &MarkovGame<T>, player: PlayerId) -> FeatureMap<T> {
    let na = game.actions_of(player);
    let mut next = 0;
    let mut table = Vec::with_capacity(game.n_states() * na);
    for x in 0..game.n_states() {
        let live = !game.is_null_absorbing(x);
        for _ in 0..na {
            if live {
                table.push(vec![(next, T::one())]);
                next += 1;
            } else {
                table.push(Vec::new());
            }
        }
    }
    FeatureMap::from_table("tabular", player, next, game.n_states(), na, table)
        .expect("one-hot table is valid")
}

/// Number of binary relational concepts per action slot.
pub const RELATIONAL_CONCEPTS: usize = 20;

/// The 20 relational concepts of a gridworld state from `player`'s point of
/// view: direction sector to the opponent (8), direction sector to the goal
/// (8), adjacency to opponent and goal (2), at goal and in a corner (2).
pub fn relational_concepts(grid: &Gridworld, me: Cell, them: Cell) -> [bool; RELATIONAL_CONCEPTS] {
    let mut bits = [false; RELATIONAL_CONCEPTS];
    if let Some(s) = sector(me, them) {
        bits[s] = true;
    }
    if let Some(s) = sector(me, grid.goal()) {
        bits[8 + s] = true;
    }
    bits[16] = chebyshev(me, them) == 1;
    bits[17] = chebyshev(me, grid.goal()) == 1;
    bits[18] = me == grid.goal();
    let last = grid.size() as i32 - 1;
    bits[19] = (me.row == 0 || me.row == last) && (me.col == 0 || me.col == last);
    bits
}

/// Compass sector N, NE, E, SE, S, SW, W, NW (indices 0..8) from `from`
/// to `to`, with row 0 at the top.
fn sector(from: Cell, to: Cell) -> Option<usize> {
    let dr = (to.row - from.row).signum();
    let dc = (to.col - from.col).signum();
    Some(match (dr, dc) {
        (-1, 0) => 0,
        (-1, 1) => 1,
        (0, 1) => 2,
        (1, 1) => 3,
        (1, 0) => 4,
        (1, -1) => 5,
        (0, -1) => 6,
        (-1, -1) => 7,
        _ => return None,
    })
}

fn chebyshev(a: Cell, b: Cell) -> i32 {
    (a.row - b.row).abs().max((a.col - b.col).abs())
}

/// Relational gridworld features: the 20 concept bits of the acting
/// player's view, ℓ₂-normalized and placed in the slot of the chosen
/// action, so `d = 20 · 4 = 80`. The terminal state maps to zero.
pub fn relational_features<T: Scalar>(grid: &Gridworld, player: PlayerId) -> Result<FeatureMap<T>> {
    let na = grid.n_actions();
    let mut table = Vec::with_capacity(grid.n_states() * na);
    for x in 0..grid.n_states() {
        let concepts = if x == grid.terminal() {
            None
        } else {
            let [p1, p2] = grid.decode(x)?;
            let (me, them) = match player {
                PlayerId::One => (p1, p2),
                PlayerId::Two => (p2, p1),
            };
            Some(relational_concepts(grid, me, them))
        };
        for a in 0..na {
            let mut v = Vec::new();
            if let Some(bits) = &concepts {
                let on = bits.iter().filter(|&&b| b).count();
                if on > 0 {
                    let w = T::one() / T::of_usize(on).sqrt();
                    for (c, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
                        v.push((a * RELATIONAL_CONCEPTS + c, w));
                    }
                }
            }
            table.push(v);
        }
    }
    FeatureMap::from_table(
        "relational",
        player,
        RELATIONAL_CONCEPTS * na,
        grid.n_states(),
        na,
        table,
    )
}

/// `φ(x, a) = c` for every input, in one dimension.
pub fn constant_features<T: Scalar>(
    c: T,
    game: &MarkovGame<T>,
    player: PlayerId,
) -> Result<FeatureMap<T>> {
    if !(c > T::zero() && c <= T::one()) {
        return arg_err(format!("constant feature must lie in (0, 1], got {c}"));
    }
    let na = game.actions_of(player);
    let table = vec![vec![(0, c)]; game.n_states() * na];
    FeatureMap::from_table("constant", player, 1, game.n_states(), na, table)
}

/// One dense vector of a custom feature table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFeatureEntry {
    pub player: usize,
    pub state: usize,
    pub action: usize,
    pub phi: Vec<f64>,
}

/// Custom feature table loaded from JSON. Pairs that are not listed map to
/// the zero vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFeatureDocument {
    pub name: String,
    pub dim: usize,
    pub entries: Vec<CustomFeatureEntry>,
}

impl CustomFeatureDocument {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_map<T: Scalar>(&self, game: &MarkovGame<T>, player: PlayerId) -> Result<FeatureMap<T>> {
        let na = game.actions_of(player);
        let mut table = vec![Vec::new(); game.n_states() * na];
        for e in self.entries.iter().filter(|e| e.player == player.number()) {
            if e.state >= game.n_states() || e.action >= na || e.phi.len() != self.dim {
                return dim_err(format!(
                    "custom feature entry (state {}, action {}) does not fit the game",
                    e.state, e.action
                ));
            }
            table[e.state * na + e.action] = e
                .phi
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, T::lit(v)))
                .collect();
        }
        FeatureMap::from_table(self.name.clone(), player, self.dim, game.n_states(), na, table)
    }
}

/// Per-stage ridge covariance matrices.
#[derive(Debug, Clone)]
pub struct CovarianceState<T> {
    pub lambda_ridge: T,
    pub matrices: Vec<SquareMatrix<T>>,
    /// Rank-one updates absorbed at each stage.
    pub count: Vec<usize>,
}

impl<T: Scalar> CovarianceState<T> {
    /// `λ I` at every stage.
    pub fn ridge(dim: usize, horizon: usize, lambda_ridge: T) -> Self {
        Self {
            lambda_ridge,
            matrices: vec![SquareMatrix::scaled_identity(dim, lambda_ridge); horizon],
            count: vec![0; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, SquareMatrix::dim)
    }

    pub fn update(&mut self, h: usize, phi: &[(usize, T)]) {
        self.matrices[h].add_sparse_outer(phi, T::one());
        self.count[h] += 1;
    }

    pub fn matrix(&self, h: usize) -> &SquareMatrix<T> {
        &self.matrices[h]
    }

    pub fn log_det(&self, h: usize) -> Result<T> {
        Ok(Cholesky::factor(&self.matrices[h])?.log_det())
    }

    /// `‖v‖_{Λ_h⁻¹}`; see [`weighted_norm`].
    pub fn weighted_norm(&self, h: usize, v: &[T]) -> Result<T> {
        weighted_norm(v, &self.matrices[h], self.lambda_ridge, h)
    }
}

/// Per-stage expected feature vector of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExpectation<T> {
    pub vectors: Vec<Vec<T>>,
}

/// `φ_h = Σ_{x,a} φ(x, a) π_h(a|x) ν_h(x)` where `ν` is the occupancy of
/// `deviation` (played by `fmap`'s player) against `opponent`.
pub fn feature_expectation<T: Scalar>(
    game: &MarkovGame<T>,
    deviation: &StagePolicy<T>,
    opponent: &StagePolicy<T>,
    fmap: &FeatureMap<T>,
) -> Result<FeatureExpectation<T>> {
    let player = fmap.player();
    fmap.check_game(game)?;
    let (p1, p2) = order(player, deviation, opponent);
    let occ = occupancy(game, p1, p2)?;
    let mut vectors = Vec::with_capacity(game.horizon());
    for h in 0..game.horizon() {
        let mut v = vec![T::zero(); fmap.dim()];
        for (x, &w) in occ.stage(h).iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for (a, &p) in deviation.dist(h, x).iter().enumerate() {
                for &(i, f) in fmap.eval(x, a) {
                    v[i] += w * p * f;
                }
            }
        }
        vectors.push(v);
    }
    Ok(FeatureExpectation { vectors })
}

fn order<'a, T>(
    player: PlayerId,
    mine: &'a StagePolicy<T>,
    theirs: &'a StagePolicy<T>,
) -> (&'a StagePolicy<T>, &'a StagePolicy<T>) {
    match player {
        PlayerId::One => (mine, theirs),
        PlayerId::Two => (theirs, mine),
    }
}

/// Exact expert covariance `Λ_h = E_{x∼ν_h, a∼π_E}[φφᵀ] + λ I` for the
/// player of `fmap`.
pub fn expert_covariance<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    fmap: &FeatureMap<T>,
    lambda_ridge: T,
) -> Result<CovarianceState<T>> {
    if !(lambda_ridge >= T::zero()) {
        return arg_err(format!("ridge must be nonnegative, got {lambda_ridge}"));
    }
    fmap.check_game(game)?;
    let occ = occupancy(game, expert.0, expert.1)?;
    let own = match fmap.player() {
        PlayerId::One => expert.0,
        PlayerId::Two => expert.1,
    };
    let mut cov = CovarianceState::ridge(fmap.dim(), game.horizon(), lambda_ridge);
    for h in 0..game.horizon() {
        for (x, &w) in occ.stage(h).iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for (a, &p) in own.dist(h, x).iter().enumerate() {
                if p > T::zero() {
                    cov.matrices[h].add_sparse_outer(fmap.eval(x, a), w * p);
                }
            }
        }
    }
    Ok(cov)
}

/// `√(vᵀ Λ⁻¹ v)` by a linear solve. With `λ > 0` the matrix is factored by
/// Cholesky; with `λ = 0` a pivoted factorization handles rank deficiency
/// and `v` must lie in the range of `Λ`.
pub fn weighted_norm<T: Scalar>(
    v: &[T],
    cov: &SquareMatrix<T>,
    lambda_ridge: T,
    stage: usize,
) -> Result<T> {
    if v.len() != cov.dim() {
        return dim_err(format!("vector of length {} against {}x{} matrix", v.len(), cov.dim(), cov.dim()));
    }
    if lambda_ridge > T::zero() {
        let ch = Cholesky::factor(cov)?;
        return Ok(ch.inv_quad(v).max(T::zero()).sqrt());
    }
    let (x, rel) = psd_solve(cov, v, T::tol(1e-12));
    if rel > T::tol(1e-8) {
        return Err(Error::Singular { stage, residual: rel.as_f64() });
    }
    Ok(v.iter().zip(&x).map(|(&a, &b)| a * b).sum::<T>().max(T::zero()).sqrt())
}

/// Lower bound on the feature concentrability coefficient: the largest
/// `‖φ_h^{π, π_E^{−n}}‖_{(Λ^n_{E,h})⁻¹}` over the supplied deviations `π`
/// (each for either player) and all stages.
///
/// `fmaps` holds one map per player, indexed by player.
pub fn concentrability_estimate<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    fmaps: [&FeatureMap<T>; 2],
    deviations: &[StagePolicy<T>],
    lambda_ridge: T,
) -> Result<T> {
    if deviations.is_empty() {
        return arg_err("concentrability estimate needs at least one deviation");
    }
    for (i, f) in fmaps.iter().enumerate() {
        if f.player().index() != i {
            return arg_err("feature maps must be ordered by player");
        }
    }
    let mut covs: [Option<CovarianceState<T>>; 2] = [None, None];
    let mut best = T::zero();
    for dev in deviations {
        let n = dev.player();
        let fmap = fmaps[n.index()];
        if covs[n.index()].is_none() {
            covs[n.index()] = Some(expert_covariance(game, expert, fmap, lambda_ridge)?);
        }
        let cov = covs[n.index()].as_ref().expect("just filled");
        let opponent = match n {
            PlayerId::One => expert.1,
            PlayerId::Two => expert.0,
        };
        let fe = feature_expectation(game, dev, opponent, fmap)?;
        for (h, v) in fe.vectors.iter().enumerate() {
            best = best.max(cov.weighted_norm(h, v)?);
        }
    }
    Ok(best)
}

/// Random deterministic policies for `player`, one action per stage and
/// state drawn uniformly.
pub fn random_deterministic_policies<T: Scalar>(
    game: &MarkovGame<T>,
    player: PlayerId,
    count: usize,
    seed: u64,
) -> Vec<StagePolicy<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let na = game.actions_of(player);
    (0..count)
        .map(|_| {
            StagePolicy::deterministic(player, game.horizon(), game.n_states(), na, |_, _| {
                rng.random_range(0..na)
            })
            .expect("actions in range")
        })
        .collect()
}

/// Deterministic best responses (game-core tie-break) of the other player
/// to each opponent policy.
pub fn best_response_deviations<T: Scalar>(
    game: &MarkovGame<T>,
    opponents: &[StagePolicy<T>],
) -> Result<Vec<StagePolicy<T>>> {
    opponents
        .iter()
        .map(|o| best_response(game, o, o.player().other()).map(|(p, _)| p))
        .collect()
}
