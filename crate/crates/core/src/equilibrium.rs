//! Exact Nash equilibria of zero-sum Markov games.
//!
//! Each stage game is a matrix game solved by a dense simplex with Bland's
//! rule; backward induction over stages gives a Markov perfect equilibrium.
//! Equilibria can be mixed per state and softened into quantal responses.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, dim_err, Error, Result};
use crate::fmt::mat_17;
use crate::game::{nash_gap, MarkovGame, PlayerId, PolicyDocument, StagePolicy};
use crate::{softmax_into, Scalar};

/// Dense payoff matrix for the row player (maximizer).
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> PayoffMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return dim_err(format!("{rows}x{cols} matrix with {} entries", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return arg_err("payoff matrix has non-finite entries");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return dim_err("ragged payoff matrix");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    /// The game seen by the column player as a maximizer: `−Aᵀ`.
    pub fn negated_transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(-self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in row_order {
            for &j in col_order {
                data.push(self.get(i, j));
            }
        }
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `min_j (xᵀA)_j` and `max_i (A y)_i`.
    pub fn security_levels(&self, x: &[T], y: &[T]) -> (T, T) {
        let row_floor = (0..self.cols)
            .map(|j| (0..self.rows).map(|i| x[i] * self.get(i, j)).sum::<T>())
            .fold(T::infinity(), T::min);
        let col_ceiling = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * y[j]).sum::<T>())
            .fold(T::neg_infinity(), T::max);
        (row_floor, col_ceiling)
    }
}

/// Optimal mixed strategies and value of a matrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution<T> {
    pub row_strategy: Vec<T>,
    pub col_strategy: Vec<T>,
    pub value: T,
}

impl<T: Scalar> MatrixGameSolution<T> {
    /// Largest violation of the saddle inequalities.
    pub fn saddle_residual(&self, a: &PayoffMatrix<T>) -> T {
        let (floor, ceiling) = a.security_levels(&self.row_strategy, &self.col_strategy);
        (self.value - floor).max(ceiling - self.value).max(T::zero())
    }
}

/// Solves `max_x min_y xᵀ A y`.
///
/// With `A' = A − min(A) + 1 > 0`, the LP `max 1ᵀw s.t. A'w ≤ 1, w ≥ 0`
/// yields the column strategy `w / 1ᵀw` and its dual prices the row
/// strategy; the value is `1 / 1ᵀw` shifted back.
pub fn matrix_maximin<T: Scalar>(a: &PayoffMatrix<T>) -> Result<MatrixGameSolution<T>> {
    let (m, n) = (a.rows, a.cols);
    let lo = a.data.iter().copied().fold(T::infinity(), T::min);
    let shift = lo - T::one();
    let width = n + m + 1;
    let mut tab = vec![T::zero(); (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            tab[i * width + j] = a.get(i, j) - shift;
        }
        tab[i * width + n + i] = T::one();
        tab[i * width + n + m] = T::one();
    }
    // Objective row holds reduced costs; its last entry is −(objective).
    let obj = m * width;
    for j in 0..n {
        tab[obj + j] = T::one();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = T::tol(1e-12);
    let max_pivots = 50 * (m + n) * (m + n) + 100;
    let mut pivots = 0;
    loop {
        // Bland: lowest-index improving column.
        let Some(enter) = (0..n + m).find(|&j| tab[obj + j] > eps) else { break };
        let mut leave: Option<usize> = None;
        let mut best = T::infinity();
        for i in 0..m {
            let coef = tab[i * width + enter];
            if coef > eps {
                let ratio = tab[i * width + n + m] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best - eps || (ratio <= best + eps && basis[i] < basis[l])
                    }
                };
                if better {
                    best = best.min(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::Internal("matrix game LP reported unbounded".into()));
        };
        let piv = tab[r * width + enter];
        for k in 0..width {
            tab[r * width + k] /= piv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = tab[i * width + enter];
            if f != T::zero() {
                for k in 0..width {
                    let v = tab[r * width + k];
                    tab[i * width + k] -= f * v;
                }
            }
        }
        basis[r] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Internal("simplex exceeded its pivot budget".into()));
        }
    }
    let mut w = vec![T::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            w[b] = tab[i * width + n + m].max(T::zero());
        }
    }
    let u: Vec<T> = (0..m).map(|i| (-tab[obj + n + i]).max(T::zero())).collect();
    let sw: T = w.iter().copied().sum();
    let su: T = u.iter().copied().sum();
    if !(sw > T::zero()) || !(su > T::zero()) {
        return Err(Error::Internal("degenerate simplex solution".into()));
    }
    let sol = MatrixGameSolution {
        row_strategy: u.iter().map(|&v| v / su).collect(),
        col_strategy: w.iter().map(|&v| v / sw).collect(),
        value: T::one() / sw + shift,
    };
    let resid = sol.saddle_residual(a);
    if resid > T::tol(1e-8) * (T::one() + a.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))) {
        return Err(Error::Internal(format!("saddle residual {resid} after simplex")));
    }
    Ok(sol)
}

/// First pure saddle point in scan order: an entry that is the minimum of
/// its row and the maximum of its column.
pub fn pure_saddle<T: Scalar>(a: &PayoffMatrix<T>) -> Option<(usize, usize)> {
    let tol = T::tol(1e-12);
    for i in 0..a.rows {
        let row_min = (0..a.cols).map(|j| a.get(i, j)).fold(T::infinity(), T::min);
        for j in 0..a.cols {
            let v = a.get(i, j);
            if v <= row_min + tol && (0..a.rows).all(|k| a.get(k, j) <= v + tol) {
                return Some((i, j));
            }
        }
    }
    None
}

/// How [`solve_nash`] picks among optimal stage strategies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Shuffle both players' action order (per stage game) before solving.
    /// Different seeds land on different LP vertices, hence different
    /// equilibria of the same game.
    pub permutation_seed: Option<u64>,
    /// Return a pure saddle point when one exists, which yields a
    /// deterministic equilibrium wherever possible.
    pub pure_first: bool,
}

/// Equilibrium profile together with the stage values and stage matrices
/// it was computed from.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile<T> {
    pub profile: (StagePolicy<T>, StagePolicy<T>),
    /// `stage_values[h][x]`: player 1's equilibrium value.
    pub stage_values: Vec<Vec<T>>,
    /// `stage_q[h][x]`: the stage matrix `r + E[V_{h+1}]`, row-major over
    /// `(a¹, a²)`.
    pub stage_q: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> EquilibriumProfile<T> {
    pub fn player1(&self) -> &StagePolicy<T> {
        &self.profile.0
    }

    pub fn player2(&self) -> &StagePolicy<T> {
        &self.profile.1
    }

    pub fn policy(&self, player: PlayerId) -> &StagePolicy<T> {
        match player {
            PlayerId::One => &self.profile.0,
            PlayerId::Two => &self.profile.1,
        }
    }

    /// `⟨ν₁, V_1⟩` under the equilibrium.
    pub fn value(&self, initial: &[T]) -> T {
        initial.iter().zip(&self.stage_values[0]).map(|(&p, &v)| p * v).sum()
    }
}

/// Zero-sum value iteration by backward induction.
pub fn solve_nash<T: Scalar>(game: &MarkovGame<T>) -> Result<EquilibriumProfile<T>> {
    solve_nash_with(game, &SolveOptions::default())
}

pub fn solve_nash_with<T: Scalar>(
    game: &MarkovGame<T>,
    opts: &SolveOptions,
) -> Result<EquilibriumProfile<T>> {
    let (nx, [n1, n2], horizon) = (game.n_states(), game.n_actions(), game.horizon());
    let mut rng = opts.permutation_seed.map(ChaCha8Rng::seed_from_u64);
    let mut v_next = vec![T::zero(); nx];
    let mut stage_values = vec![Vec::new(); horizon];
    let mut stage_q = vec![Vec::new(); horizon];
    let mut s1 = vec![T::zero(); horizon * nx * n1];
    let mut s2 = vec![T::zero(); horizon * nx * n2];
    for h in (0..horizon).rev() {
        let mut v = vec![T::zero(); nx];
        let mut qs = Vec::with_capacity(nx);
        for x in 0..nx {
            let mut q = vec![T::zero(); n1 * n2];
            for a1 in 0..n1 {
                for a2 in 0..n2 {
                    let cont: T =
                        game.transition(x, a1, a2).iter().map(|&(y, p)| p * v_next[y]).sum();
                    q[a1 * n2 + a2] = game.reward(x, a1, a2) + cont;
                }
            }
            let mut rows: Vec<usize> = (0..n1).collect();
            let mut cols: Vec<usize> = (0..n2).collect();
            if let Some(rng) = rng.as_mut() {
                rows.shuffle(rng);
                cols.shuffle(rng);
            }
            let a = PayoffMatrix::new(n1, n2, q.clone())?.permuted(&rows, &cols);
            let sol = match opts.pure_first.then(|| pure_saddle(&a)).flatten() {
                Some((i, j)) => {
                    let mut rs = vec![T::zero(); n1];
                    let mut cs = vec![T::zero(); n2];
                    rs[i] = T::one();
                    cs[j] = T::one();
                    MatrixGameSolution { row_strategy: rs, col_strategy: cs, value: a.get(i, j) }
                }
                None => matrix_maximin(&a)?,
            };
            for (k, &i) in rows.iter().enumerate() {
                s1[(h * nx + x) * n1 + i] = sol.row_strategy[k];
            }
            for (k, &j) in cols.iter().enumerate() {
                s2[(h * nx + x) * n2 + j] = sol.col_strategy[k];
            }
            v[x] = sol.value;
            qs.push(q);
        }
        stage_values[h] = v.clone();
        stage_q[h] = qs;
        v_next = v;
    }
    let p1 = StagePolicy::from_fn(PlayerId::One, horizon, nx, n1, |h, x, out| {
        out.copy_from_slice(&s1[(h * nx + x) * n1..(h * nx + x + 1) * n1]);
    })?;
    let p2 = StagePolicy::from_fn(PlayerId::Two, horizon, nx, n2, |h, x, out| {
        out.copy_from_slice(&s2[(h * nx + x) * n2..(h * nx + x + 1) * n2]);
    })?;
    Ok(EquilibriumProfile { profile: (p1, p2), stage_values, stage_q })
}

/// Per-state convex combination of several equilibria of the same game.
#[derive(Debug, Clone)]
pub struct MixedProfile<T> {
    pub profile: (StagePolicy<T>, StagePolicy<T>),
    /// Nash gap measured after mixing.
    pub gap: T,
}

/// Mixes equilibria state by state. The result is checked afterwards: a
/// gap above `1e-6` is logged as a warning and returned in `gap`.
pub fn mix_equilibria<T: Scalar>(
    game: &MarkovGame<T>,
    profiles: &[EquilibriumProfile<T>],
    weights: &[T],
) -> Result<MixedProfile<T>> {
    if profiles.is_empty() || profiles.len() != weights.len() {
        return arg_err(format!(
            "{} profiles with {} weights",
            profiles.len(),
            weights.len()
        ));
    }
    let total: T = weights.iter().copied().sum();
    if weights.iter().any(|&w| !(w >= T::zero())) || (total - T::one()).abs() > T::tol(1e-10) {
        return arg_err(format!("mixture weights must be a distribution (sum {total})"));
    }
    let mix = |player: PlayerId| {
        let parts: Vec<_> = profiles.iter().zip(weights).map(|(p, &w)| (p.policy(player), w)).collect();
        StagePolicy::mixture(&parts)
    };
    let profile = (mix(PlayerId::One)?, mix(PlayerId::Two)?);
    let gap = nash_gap(game, &profile.0, &profile.1)?;
    if gap > T::lit(1e-6) {
        log::warn!("mixture of {} equilibria has Nash gap {gap}", profiles.len());
    }
    Ok(MixedProfile { profile, gap })
}

/// Softmax of each player's equilibrium action values at temperature `eta`.
///
/// Player 1 uses `Σ_{a²} π²(a²|x) Q(x, a¹, a²)`; player 2 uses the negated
/// marginal against player 1's strategy.
pub fn qre_policy<T: Scalar>(
    eq: &EquilibriumProfile<T>,
    eta: T,
) -> Result<(StagePolicy<T>, StagePolicy<T>)> {
    if !(eta > T::zero()) || !eta.is_finite() {
        return arg_err(format!("QRE temperature must be positive, got {eta}"));
    }
    let (p1, p2) = &eq.profile;
    let (horizon, nx, n1, n2) = (p1.horizon(), p1.n_states(), p1.n_actions(), p2.n_actions());
    if eq.stage_q.len() != horizon {
        return dim_err("equilibrium carries no stage matrices");
    }
    let mut logits1 = vec![T::zero(); n1];
    let mut logits2 = vec![T::zero(); n2];
    let q1 = StagePolicy::from_fn(PlayerId::One, horizon, nx, n1, |h, x, out| {
        let q = &eq.stage_q[h][x];
        let opp = p2.dist(h, x);
        for a1 in 0..n1 {
            logits1[a1] = eta * (0..n2).map(|a2| opp[a2] * q[a1 * n2 + a2]).sum::<T>();
        }
        softmax_into(&logits1, out);
    })?;
    let q2 = StagePolicy::from_fn(PlayerId::Two, horizon, nx, n2, |h, x, out| {
        let q = &eq.stage_q[h][x];
        let opp = p1.dist(h, x);
        for a2 in 0..n2 {
            logits2[a2] = -eta * (0..n1).map(|a1| opp[a1] * q[a1 * n2 + a2]).sum::<T>();
        }
        softmax_into(&logits2, out);
    })?;
    Ok((q1, q2))
}

pub const EQUILIBRIUM_FORMAT: &str = "mail-lab/equilibrium";

/// JSON form of an [`EquilibriumProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumDocument {
    pub format: String,
    pub version: u32,
    pub player1: PolicyDocument,
    pub player2: PolicyDocument,
    #[serde(serialize_with = "mat_17")]
    pub stage_values: Vec<Vec<f64>>,
    /// One row per `(stage, state)`, stage-major, each a flattened matrix.
    #[serde(serialize_with = "mat_17")]
    pub stage_q: Vec<Vec<f64>>,
}

impl EquilibriumDocument {
    pub fn from_profile<T: Scalar>(eq: &EquilibriumProfile<T>) -> Self {
        let conv = |v: &Vec<T>| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        Self {
            format: EQUILIBRIUM_FORMAT.into(),
            version: 1,
            player1: PolicyDocument::from_policy(&eq.profile.0),
            player2: PolicyDocument::from_policy(&eq.profile.1),
            stage_values: eq.stage_values.iter().map(conv).collect(),
            stage_q: eq.stage_q.iter().flat_map(|s| s.iter().map(conv)).collect(),
        }
    }

    pub fn to_profile<T: Scalar>(&self) -> Result<EquilibriumProfile<T>> {
        if self.format != EQUILIBRIUM_FORMAT || self.version != 1 {
            return arg_err(format!("unsupported document {} v{}", self.format, self.version));
        }
        let p1 = self.player1.to_policy::<T>()?;
        let p2 = self.player2.to_policy::<T>()?;
        let (horizon, nx) = (p1.horizon(), p1.n_states());
        if self.stage_q.len() != horizon * nx || self.stage_values.len() != horizon {
            return dim_err("equilibrium document tables do not match its policies");
        }
        let conv = |v: &Vec<f64>| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        Ok(EquilibriumProfile {
            profile: (p1, p2),
            stage_values: self.stage_values.iter().map(conv).collect(),
            stage_q: self.stage_q.chunks(nx).map(|c| c.iter().map(conv).collect()).collect(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
