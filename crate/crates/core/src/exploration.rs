//! Reward-free exploration by LSVI-UCB with zero reward, the uniform
//! exploration baseline and the interactive imitation pipeline built on
//! them.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, dim_err, Error, Result};
use crate::features::{feature_expectation, CovarianceState, FeatureMap};
use crate::game::{nash_gap, MarkovGame, PlayerId, StagePolicy};
use crate::imitation::{bc_fit, BcConfig, BcReport, ExpertDataset, Provenance, Sample};
use crate::linalg::{Cholesky, SquareMatrix};
use crate::sampling::{sample_index, sample_next};
use crate::Scalar;

/// How `Λ_h⁻¹` is kept current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseMode {
    /// Sherman–Morrison rank-one updates with a Cholesky refresh every
    /// `refresh_every` updates.
    #[default]
    ShermanMorrison,
    /// Cholesky refactorization after every episode.
    Refactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationConfig {
    pub n_episodes: usize,
    /// Bonus coefficient; `None` derives it from `c_beta` and `delta`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "ExplorationConfig::default_c_beta")]
    pub c_beta: f64,
    #[serde(default = "ExplorationConfig::default_delta")]
    pub delta: f64,
    #[serde(default = "ExplorationConfig::default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub inverse: InverseMode,
    #[serde(default = "ExplorationConfig::default_refresh")]
    pub refresh_every: usize,
}

impl ExplorationConfig {
    fn default_c_beta() -> f64 {
        0.1
    }

    fn default_delta() -> f64 {
        0.05
    }

    fn default_ridge() -> f64 {
        1.0
    }

    fn default_refresh() -> usize {
        256
    }

    pub fn new(n_episodes: usize) -> Self {
        Self {
            n_episodes,
            beta: None,
            c_beta: Self::default_c_beta(),
            delta: Self::default_delta(),
            ridge: Self::default_ridge(),
            inverse: InverseMode::default(),
            refresh_every: Self::default_refresh(),
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_episodes == 0 {
            return arg_err("exploration needs at least one episode");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) || !(self.c_beta > 0.0) || !(self.ridge > 0.0) {
            return arg_err(format!("invalid exploration configuration {self:?}"));
        }
        if self.beta.is_some_and(|b| !(b > 0.0)) {
            return arg_err("beta must be positive");
        }
        if self.refresh_every == 0 {
            return arg_err("refresh_every must be positive");
        }
        Ok(())
    }

    /// `β`, defaulting to `c_β · d · H · ln(K d H / δ)`.
    pub fn beta_for(&self, dim: usize, horizon: usize) -> f64 {
        self.beta.unwrap_or_else(|| {
            let dh = (dim.max(1) * horizon) as f64;
            self.c_beta * dh * (self.n_episodes as f64 * dh / self.delta).ln()
        })
    }
}

/// Everything an exploration run produces.
#[derive(Debug, Clone)]
pub struct ExplorationTrace<T> {
    pub frozen: PlayerId,
    /// Interactive dataset; only the frozen player's actions are labels.
    pub dataset: ExpertDataset,
    /// `Λ_h` after all episodes.
    pub covariances: CovarianceState<T>,
    /// `(state, active action)` per episode and stage; `None` once the
    /// episode has ended in a null-absorbing state.
    pub visits: Vec<Vec<Option<(usize, usize)>>>,
    /// `Σ_k ‖φ_k‖²_{(Λ_h)⁻¹}` per stage, with `Λ_h` taken before each update.
    pub potential: Vec<T>,
    /// Smallest and largest `Q` value produced by the backward passes.
    pub q_range: (T, T),
    pub beta: T,
}

impl<T: Scalar> ExplorationTrace<T> {
    pub fn n_episodes(&self) -> usize {
        self.visits.len()
    }

    /// 1-based index of the first episode that visits `state`.
    pub fn first_passage(&self, state: usize) -> Option<usize> {
        self.visits
            .iter()
            .position(|ep| ep.iter().flatten().any(|&(x, _)| x == state))
            .map(|k| k + 1)
    }

    /// Distinct `(stage, state)` pairs visited.
    pub fn coverage(&self) -> usize {
        let mut seen = std::collections::BTreeSet::new();
        for ep in &self.visits {
            for (h, v) in ep.iter().enumerate() {
                if let Some((x, _)) = v {
                    seen.insert((h, *x));
                }
            }
        }
        seen.len()
    }

    /// The dataset restricted to the first `k` episodes.
    pub fn dataset_prefix(&self, k: usize) -> ExpertDataset {
        let mut ds = self.dataset.clone();
        ds.samples.retain(|s| s.traj < k);
        ds.n_trajectories = k.min(self.n_episodes());
        ds.queries = [0; 2];
        ds.queries[self.frozen.index()] = ds.samples.len();
        ds
    }
}

struct StageInverse<T> {
    inv: SquareMatrix<T>,
    pending: usize,
}

/// Per-stage `Λ_h` and `Λ_h⁻¹`.
struct Gram<T> {
    cov: CovarianceState<T>,
    inverses: Vec<StageInverse<T>>,
    mode: InverseMode,
    refresh_every: usize,
}

impl<T: Scalar> Gram<T> {
    fn new(dim: usize, horizon: usize, ridge: T, mode: InverseMode, refresh_every: usize) -> Self {
        let inv = SquareMatrix::scaled_identity(dim, T::one() / ridge);
        Self {
            cov: CovarianceState::ridge(dim, horizon, ridge),
            inverses: (0..horizon).map(|_| StageInverse { inv: inv.clone(), pending: 0 }).collect(),
            mode,
            refresh_every,
        }
    }

    fn bonus(&self, h: usize, phi: &[(usize, T)]) -> T {
        self.inverses[h].inv.sparse_quad(phi).max(T::zero()).sqrt()
    }

    fn update(&mut self, h: usize, phi: &[(usize, T)]) -> Result<()> {
        self.cov.update(h, phi);
        if phi.is_empty() {
            return Ok(());
        }
        let st = &mut self.inverses[h];
        st.pending += 1;
        match self.mode {
            InverseMode::ShermanMorrison => {
                if st.pending >= self.refresh_every {
                    self.refresh(h)?;
                } else {
                    let u = st.inv.mul_sparse(phi);
                    let denom = T::one() + phi.iter().map(|&(i, f)| f * u[i]).sum::<T>();
                    st.inv.add_outer(&u, &u, -T::one() / denom);
                }
            }
            InverseMode::Refactor => {}
        }
        Ok(())
    }

    fn refresh(&mut self, h: usize) -> Result<()> {
        self.inverses[h].inv = Cholesky::factor(self.cov.matrix(h))?.inverse();
        self.inverses[h].pending = 0;
        Ok(())
    }

    fn end_episode(&mut self) -> Result<()> {
        if self.mode == InverseMode::Refactor {
            for h in 0..self.inverses.len() {
                if self.inverses[h].pending > 0 {
                    self.refresh(h)?;
                }
            }
        }
        Ok(())
    }
}

fn check_setup<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    frozen: PlayerId,
    fmap: &FeatureMap<T>,
) -> Result<()> {
    expert.0.check_shape(game, PlayerId::One)?;
    expert.1.check_shape(game, PlayerId::Two)?;
    if fmap.player() != frozen.other() {
        return arg_err(format!(
            "exploration features must belong to the active player {}, got player {}",
            frozen.other(),
            fmap.player()
        ));
    }
    fmap.check_game(game)
}

fn expert_of<'a, T>(expert: (&'a StagePolicy<T>, &'a StagePolicy<T>), n: PlayerId) -> &'a StagePolicy<T> {
    match n {
        PlayerId::One => expert.0,
        PlayerId::Two => expert.1,
    }
}

fn rng_for(seed: u64, frozen: PlayerId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frozen.index() as u64);
    rng
}

enum Explorer<'a, T> {
    Greedy { q: &'a [Vec<T>] },
    Uniform,
}

/// One episode: the active player follows `explorer`, the frozen player
/// samples the expert, and the expert's action is recorded at every state.
fn rollout<T: Scalar>(
    game: &MarkovGame<T>,
    frozen_policy: &StagePolicy<T>,
    frozen: PlayerId,
    explorer: Explorer<'_, T>,
    rng: &mut ChaCha8Rng,
    episode: usize,
    ds: &mut ExpertDataset,
) -> Vec<Option<(usize, usize, usize)>> {
    let active = frozen.other();
    let na = game.actions_of(active);
    let tie = T::tol(1e-12);
    let mut path = Vec::with_capacity(game.horizon());
    let mut x = sample_index(game.initial(), rng);
    let mut ties = Vec::with_capacity(na);
    for h in 0..game.horizon() {
        if game.is_null_absorbing(x) {
            path.resize(game.horizon(), None);
            break;
        }
        let a_act = match &explorer {
            Explorer::Uniform => rng.random_range(0..na),
            Explorer::Greedy { q } => {
                let row = &q[h][x * na..(x + 1) * na];
                let best = row.iter().copied().fold(T::neg_infinity(), T::max);
                ties.clear();
                ties.extend((0..na).filter(|&a| row[a] >= best - tie));
                ties[rng.random_range(0..ties.len())]
            }
        };
        let a_frz = sample_index(frozen_policy.dist(h, x), rng);
        let mut actions = [0; 2];
        actions[active.index()] = a_act;
        actions[frozen.index()] = a_frz;
        ds.samples.push(Sample { traj: episode, stage: h, state: x, actions });
        ds.queries[frozen.index()] += 1;
        let y = sample_next(game.transition(x, actions[0], actions[1]), rng);
        path.push(Some((x, a_act, y)));
        x = y;
    }
    path
}

/// LSVI-UCB with zero reward and bonus `(β + 1) ‖φ‖_{Λ⁻¹}`.
///
/// The frozen player follows its expert policy and is queried at every
/// visited state; the other player explores greedily with respect to the
/// optimistic `Q`. Each stage regresses onto the next-stage value at the
/// observed next state. Greedy ties are broken uniformly at random.
pub fn lsvi_ucb_zero<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    frozen: PlayerId,
    fmap: &FeatureMap<T>,
    cfg: &ExplorationConfig,
    seed: u64,
) -> Result<ExplorationTrace<T>> {
    cfg.validate()?;
    check_setup(game, expert, frozen, fmap)?;
    let (horizon, nx, na, d) = (game.horizon(), game.n_states(), fmap.n_actions(), fmap.dim());
    let beta = T::lit(cfg.beta_for(d, horizon));
    let mut rng = rng_for(seed, frozen);
    let mut gram = Gram::new(d, horizon, T::lit(cfg.ridge), cfg.inverse, cfg.refresh_every);
    let mut ds = ExpertDataset::empty(Provenance::Interactive, horizon, labels(frozen));
    let mut potential = vec![T::zero(); horizon];
    let mut visits = Vec::with_capacity(cfg.n_episodes);
    // transitions[h][(x, a)][x'] = count
    let mut transitions: Vec<BTreeMap<(usize, usize), BTreeMap<usize, usize>>> = vec![BTreeMap::new(); horizon];
    let mut q = vec![vec![T::zero(); nx * na]; horizon];
    let mut v = vec![vec![T::zero(); nx]; horizon + 1];
    let mut q_range = (T::of_usize(horizon), T::zero());
    backward_pass(game, fmap, &gram, &transitions, beta, &mut q, &mut v, &mut q_range, 0)?;
    for k in 0..cfg.n_episodes {
        let path = rollout(game, expert_of(expert, frozen), frozen, Explorer::Greedy { q: &q }, &mut rng, k, &mut ds);
        for (h, step) in path.iter().enumerate() {
            let phi: &[(usize, T)] = match step {
                Some((x, a, y)) => {
                    *transitions[h].entry((*x, *a)).or_default().entry(*y).or_default() += 1;
                    fmap.eval(*x, *a)
                }
                None => &[],
            };
            potential[h] += gram.bonus(h, phi).powi(2);
            gram.update(h, phi)?;
        }
        gram.end_episode()?;
        visits.push(path.iter().map(|s| s.map(|(x, a, _)| (x, a))).collect());
        backward_pass(game, fmap, &gram, &transitions, beta, &mut q, &mut v, &mut q_range, k + 1)?;
    }
    ds.n_trajectories = cfg.n_episodes;
    Ok(ExplorationTrace { frozen, dataset: ds, covariances: gram.cov, visits, potential, q_range, beta })
}

fn labels(frozen: PlayerId) -> [bool; 2] {
    let mut l = [false; 2];
    l[frozen.index()] = true;
    l
}

#[allow(clippy::too_many_arguments)]
fn backward_pass<T: Scalar>(
    game: &MarkovGame<T>,
    fmap: &FeatureMap<T>,
    gram: &Gram<T>,
    transitions: &[BTreeMap<(usize, usize), BTreeMap<usize, usize>>],
    beta: T,
    q: &mut [Vec<T>],
    v: &mut [Vec<T>],
    q_range: &mut (T, T),
    k: usize,
) -> Result<()> {
    let (nx, na, d) = (game.n_states(), fmap.n_actions(), fmap.dim());
    let scale = beta + T::one();
    let cap = T::of_usize(game.horizon());
    for h in (0..game.horizon()).rev() {
        let mut b = vec![T::zero(); d];
        for (&(x, a), nexts) in &transitions[h] {
            let target: T = nexts.iter().map(|(&y, &c)| T::of_usize(c) * v[h + 1][y]).sum();
            if target != T::zero() {
                for &(i, f) in fmap.eval(x, a) {
                    b[i] += f * target;
                }
            }
        }
        let w = gram.inverses[h].inv.mul_vec(&b);
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite ridge weights at episode {k}, stage {}", h + 1)));
        }
        let vh = &mut v[h];
        for x in 0..nx {
            let row = &mut q[h][x * na..(x + 1) * na];
            if game.is_null_absorbing(x) {
                row.iter_mut().for_each(|r| *r = T::zero());
                vh[x] = T::zero();
                continue;
            }
            let mut best = T::zero();
            for (a, r) in row.iter_mut().enumerate() {
                let phi = fmap.eval(x, a);
                let fit: T = phi.iter().map(|&(i, f)| f * w[i]).sum();
                let val = (fit + scale * gram.bonus(h, phi)).min(cap).max(T::zero());
                *r = val;
                best = best.max(val);
                q_range.0 = q_range.0.min(val);
                q_range.1 = q_range.1.max(val);
            }
            vh[x] = best;
        }
    }
    Ok(())
}

/// Same data collection as [`lsvi_ucb_zero`] with the active player
/// choosing uniformly at random.
pub fn uniform_explore<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    frozen: PlayerId,
    fmap: &FeatureMap<T>,
    n_episodes: usize,
    seed: u64,
) -> Result<ExplorationTrace<T>> {
    if n_episodes == 0 {
        return arg_err("exploration needs at least one episode");
    }
    check_setup(game, expert, frozen, fmap)?;
    let horizon = game.horizon();
    let mut rng = rng_for(seed, frozen);
    let mut gram = Gram::new(fmap.dim(), horizon, T::one(), InverseMode::ShermanMorrison, 256);
    let mut ds = ExpertDataset::empty(Provenance::Interactive, horizon, labels(frozen));
    let mut potential = vec![T::zero(); horizon];
    let mut visits = Vec::with_capacity(n_episodes);
    for k in 0..n_episodes {
        let path = rollout(game, expert_of(expert, frozen), frozen, Explorer::Uniform, &mut rng, k, &mut ds);
        for (h, step) in path.iter().enumerate() {
            let phi: &[(usize, T)] = match step {
                Some((x, a, _)) => fmap.eval(*x, *a),
                None => &[],
            };
            potential[h] += gram.bonus(h, phi).powi(2);
            gram.update(h, phi)?;
        }
        visits.push(path.iter().map(|s| s.map(|(x, a, _)| (x, a))).collect());
    }
    ds.n_trajectories = n_episodes;
    Ok(ExplorationTrace {
        frozen,
        dataset: ds,
        covariances: gram.cov,
        visits,
        potential,
        q_range: (T::zero(), T::zero()),
        beta: T::zero(),
    })
}

/// Weighted feature norms of a probe set along an exploration trace.
#[derive(Debug, Clone)]
pub struct ProbeSeries<T> {
    pub checkpoints: Vec<usize>,
    /// `[checkpoint][h]`: max over probes of `‖φ_h^{probe}‖_{(Λ_h^k)⁻¹}`.
    pub per_stage: Vec<Vec<T>>,
    /// `[checkpoint][h]`: `ln det Λ_h^k`.
    pub log_det: Vec<Vec<T>>,
    /// `[probe][checkpoint]`: `Σ_h ‖φ_h^{probe}‖_{(Λ_h^k)⁻¹}`.
    pub per_probe: Vec<Vec<T>>,
    /// `[checkpoint]`: `Σ_h max_probe ‖φ_h^{probe}‖_{(Λ_h^k)⁻¹}`.
    pub series: Vec<T>,
}

impl<T: Scalar> ProbeSeries<T> {
    /// CSV with columns `k, h, logdet, probe_norm` (stages 1-based).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "h", "logdet", "probe_norm"])?;
        for (c, &k) in self.checkpoints.iter().enumerate() {
            for h in 0..self.per_stage[c].len() {
                wr.write_record([
                    k.to_string(),
                    (h + 1).to_string(),
                    crate::fmt::sig17(self.log_det[c][h].as_f64()),
                    crate::fmt::sig17(self.per_stage[c][h].as_f64()),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Roughly logarithmically spaced checkpoints `0, 1, 2, 5, 10, 20, 50, …`
/// up to and including `k_max`.
pub fn log_checkpoints(k_max: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut base = 1;
    'outer: loop {
        for m in [1, 2, 5] {
            let k = m * base;
            if k >= k_max {
                break 'outer;
            }
            out.push(k);
        }
        base *= 10;
    }
    out.push(k_max);
    out.dedup();
    out
}

/// Replays the trace's covariance updates and evaluates every probe (a
/// policy of the active player, played against the frozen expert) at each
/// checkpoint `k`, where `k` counts absorbed episodes.
pub fn probe_feature_norms<T: Scalar>(
    trace: &ExplorationTrace<T>,
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    probes: &[StagePolicy<T>],
    fmap: &FeatureMap<T>,
    checkpoints: &[usize],
) -> Result<ProbeSeries<T>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return arg_err("checkpoints must be strictly increasing");
    }
    if let Some(&last) = checkpoints.last() {
        if last > trace.n_episodes() {
            return arg_err(format!(
                "checkpoint {last} exceeds the {} episodes stored in the trace",
                trace.n_episodes()
            ));
        }
    }
    let active = trace.frozen.other();
    if probes.iter().any(|p| p.player() != active) {
        return arg_err(format!("probes must be policies of the active player {active}"));
    }
    if fmap.player() != active {
        return dim_err("probe features must belong to the active player");
    }
    let opponent = expert_of(expert, trace.frozen);
    let expectations = probes
        .iter()
        .map(|p| feature_expectation(game, p, opponent, fmap))
        .collect::<Result<Vec<_>>>()?;
    let horizon = game.horizon();
    let mut cov = CovarianceState::ridge(fmap.dim(), horizon, trace.covariances.lambda_ridge);
    let mut out = ProbeSeries {
        checkpoints: checkpoints.to_vec(),
        per_stage: Vec::new(),
        log_det: Vec::new(),
        per_probe: vec![Vec::new(); probes.len()],
        series: Vec::new(),
    };
    let mut done = 0;
    for &k in checkpoints {
        for ep in &trace.visits[done..k] {
            for (h, v) in ep.iter().enumerate() {
                match v {
                    Some((x, a)) => cov.update(h, fmap.eval(*x, *a)),
                    None => cov.update(h, &[]),
                }
            }
        }
        done = k;
        let mut stage_max = vec![T::zero(); horizon];
        let mut log_det = vec![T::zero(); horizon];
        let mut probe_sum = vec![T::zero(); probes.len()];
        for h in 0..horizon {
            let ch = Cholesky::factor(cov.matrix(h))?;
            log_det[h] = ch.log_det();
            for (p, fe) in expectations.iter().enumerate() {
                let n = ch.inv_quad(&fe.vectors[h]).max(T::zero()).sqrt();
                stage_max[h] = stage_max[h].max(n);
                probe_sum[p] += n;
            }
        }
        out.series.push(stage_max.iter().copied().sum());
        out.per_stage.push(stage_max);
        out.log_det.push(log_det);
        for (p, s) in probe_sum.into_iter().enumerate() {
            out.per_probe[p].push(s);
        }
    }
    Ok(out)
}

/// Result of the interactive pipeline.
#[derive(Debug, Clone)]
pub struct InteractiveOutcome<T> {
    pub policies: (StagePolicy<T>, StagePolicy<T>),
    pub reports: [BcReport; 2],
    /// Expert queries per player.
    pub queries: [usize; 2],
}

/// Outcomes per budget and the two exploration traces behind them,
/// indexed by frozen player.
#[derive(Debug, Clone)]
pub struct InteractiveSweep<T> {
    pub outcomes: Vec<InteractiveOutcome<T>>,
    pub traces: [ExplorationTrace<T>; 2],
}

/// Exploration traces for both players, then BC fits at each budget in
/// `budgets` using the first `K` episodes of each trace.
///
/// `fmaps` is indexed by player. With `bc = None` each fit uses
/// `η = ln K / H`.
pub fn interactive_mail_sweep<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    fmaps: [&FeatureMap<T>; 2],
    cfg: &ExplorationConfig,
    bc: Option<&BcConfig>,
    seed: u64,
    budgets: &[usize],
) -> Result<InteractiveSweep<T>> {
    if budgets.is_empty() || budgets.windows(2).any(|w| w[0] >= w[1]) || budgets[0] == 0 {
        return arg_err("budgets must be positive and strictly increasing");
    }
    let k_max = *budgets.last().expect("nonempty");
    let run_cfg = ExplorationConfig { n_episodes: k_max, ..cfg.clone() };
    let traces = [PlayerId::One, PlayerId::Two]
        .map(|n| lsvi_ucb_zero(game, expert, n, fmaps[n.other().index()], &run_cfg, seed));
    let [t1, t2] = traces;
    let traces = [t1?, t2?];
    let outcomes = budgets
        .iter()
        .map(|&k| {
            let bc_cfg = bc.cloned().unwrap_or_else(|| BcConfig::for_budget(k, game.horizon()));
            let mut fitted = Vec::with_capacity(2);
            let mut reports = Vec::with_capacity(2);
            let mut queries = [0; 2];
            for n in PlayerId::BOTH {
                let ds = traces[n.index()].dataset_prefix(k);
                queries[n.index()] = ds.queries[n.index()];
                let (pol, rep) = bc_fit(&ds, fmaps[n.index()], &bc_cfg)?;
                fitted.push(pol.to_stage_policy(fmaps[n.index()])?);
                reports.push(rep);
            }
            let p2 = fitted.pop().expect("two fits");
            let p1 = fitted.pop().expect("two fits");
            let r2 = reports.pop().expect("two fits");
            let r1 = reports.pop().expect("two fits");
            Ok(InteractiveOutcome { policies: (p1, p2), reports: [r1, r2], queries })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InteractiveSweep { outcomes, traces })
}

/// LSVI-UCB-ZERO data collection for each player in turn followed by BC
/// on the collected labels. The expert must be an equilibrium (gap at
/// most `1e-6`) unless `allow_non_equilibrium` is set.
pub fn interactive_mail<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    fmaps: [&FeatureMap<T>; 2],
    cfg: &ExplorationConfig,
    bc: Option<&BcConfig>,
    seed: u64,
    allow_non_equilibrium: bool,
) -> Result<InteractiveOutcome<T>> {
    cfg.validate()?;
    if !allow_non_equilibrium {
        let gap = nash_gap(game, expert.0, expert.1)?;
        if gap > T::tol(1e-6) {
            return arg_err(format!("expert is not an equilibrium (Nash gap {gap})"));
        }
    }
    let mut sweep = interactive_mail_sweep(game, expert, fmaps, cfg, bc, seed, &[cfg.n_episodes])?;
    Ok(sweep.outcomes.pop().expect("one budget"))
}

const MATRIX_MAGIC: &[u8; 8] = b"MAILMAT1";

/// Writes named square matrices as: magic `MAILMAT1`, `u32` count, then per
/// matrix a `u32` name length, UTF-8 name, `u64` rows, `u64` cols and the
/// row-major entries, all little-endian `f64`.
pub fn write_matrices<T: Scalar, W: Write>(mut w: W, mats: &[(String, &SquareMatrix<T>)]) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(mats.len() as u32).to_le_bytes())?;
    for (name, m) in mats {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(m.dim() as u64).to_le_bytes())?;
        w.write_all(&(m.dim() as u64).to_le_bytes())?;
        for &v in m.as_slice() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrices<R: Read>(mut r: R) -> Result<Vec<(String, SquareMatrix<f64>)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return arg_err("not a matrix container");
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let count = u32::from_le_bytes(b4) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b4)?;
        let mut name = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        r.read_exact(&mut b8)?;
        let rows = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let cols = u64::from_le_bytes(b8) as usize;
        if rows != cols {
            return dim_err("only square matrices are stored");
        }
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for _ in 0..cols {
                r.read_exact(&mut b8)?;
                row.push(f64::from_le_bytes(b8));
            }
            data.push(row);
        }
        out.push((name, SquareMatrix::from_rows(&data)?));
    }
    Ok(out)
}

/// Saves `Λ_h` for every stage of a trace.
pub fn save_covariances<T: Scalar>(trace: &ExplorationTrace<T>, path: impl AsRef<Path>) -> Result<()> {
    let mats: Vec<(String, &SquareMatrix<T>)> = trace
        .covariances
        .matrices
        .iter()
        .enumerate()
        .map(|(h, m)| (format!("lambda_h{}", h + 1), m))
        .collect();
    write_matrices(std::io::BufWriter::new(std::fs::File::create(path)?), &mats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Chain;
    use crate::features::tabular_features;

    fn chain_setup() -> (MarkovGame<f64>, StagePolicy<f64>, StagePolicy<f64>) {
        let g = Chain::new(4).unwrap().game::<f64>();
        let e1 = StagePolicy::deterministic(PlayerId::One, 4, 5, 2, |_, _| 0).unwrap();
        let e2 = StagePolicy::uniform_for(&g, PlayerId::Two);
        (g, e1, e2)
    }

    #[test]
    fn single_episode_covariance() {
        let (g, e1, e2) = chain_setup();
        let f = tabular_features(&g, PlayerId::Two);
        let cfg = ExplorationConfig::new(1).with_beta(1.0);
        let t = lsvi_ucb_zero(&g, (&e1, &e2), PlayerId::One, &f, &cfg, 7).unwrap();
        for h in 0..4 {
            let mut m = SquareMatrix::identity(f.dim());
            let (x, a) = t.visits[0][h].unwrap();
            m.add_sparse_outer(f.eval(x, a), 1.0);
            assert_eq!(t.covariances.matrix(h), &m);
            assert_eq!(t.covariances.count[h], 1);
        }
        assert_eq!(t.dataset.len(), 4);
        assert_eq!(t.dataset.queries, [4, 0]);
    }

    #[test]
    fn inverse_modes_agree() {
        let (g, e1, e2) = chain_setup();
        let f = tabular_features(&g, PlayerId::Two);
        let a = ExplorationConfig { refresh_every: 3, ..ExplorationConfig::new(40).with_beta(0.5) };
        let b = ExplorationConfig { inverse: InverseMode::Refactor, ..a.clone() };
        let ta = lsvi_ucb_zero(&g, (&e1, &e2), PlayerId::One, &f, &a, 3).unwrap();
        let tb = lsvi_ucb_zero(&g, (&e1, &e2), PlayerId::One, &f, &b, 3).unwrap();
        assert_eq!(ta.visits, tb.visits);
    }

    #[test]
    fn q_is_clipped() {
        let (g, e1, e2) = chain_setup();
        let f = tabular_features(&g, PlayerId::Two);
        let t = lsvi_ucb_zero(&g, (&e1, &e2), PlayerId::One, &f, &ExplorationConfig::new(30), 1).unwrap();
        assert!(t.q_range.0 >= 0.0 && t.q_range.1 <= 4.0);
    }

    #[test]
    fn zero_episodes_rejected() {
        let (g, e1, e2) = chain_setup();
        let f = tabular_features(&g, PlayerId::Two);
        assert!(lsvi_ucb_zero(&g, (&e1, &e2), PlayerId::One, &f, &ExplorationConfig::new(0), 1).is_err());
        assert!(uniform_explore(&g, (&e1, &e2), PlayerId::One, &f, 0, 1).is_err());
    }

    #[test]
    fn checkpoints_are_log_spaced() {
        assert_eq!(log_checkpoints(100), vec![0, 1, 2, 5, 10, 20, 50, 100]);
        assert_eq!(log_checkpoints(7), vec![0, 1, 2, 5, 7]);
    }

    #[test]
    fn matrix_container_round_trip() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 0.25], vec![0.25, 1.0 / 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrices(&mut buf, &[("a".to_string(), &m)]).unwrap();
        let back = read_matrices(&buf[..]).unwrap();
        assert_eq!(back[0].0, "a");
        assert_eq!(back[0].1, m);
    }
}
