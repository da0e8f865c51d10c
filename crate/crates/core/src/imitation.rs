//! Expert datasets and behavioral cloning over softmax-linear policies.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, dim_err, Error, Result};
use crate::features::FeatureMap;
use crate::fmt::{f64_17, mat_17};
use crate::game::{MarkovGame, PlayerId, StagePolicy};
use crate::linalg::norm2;
use crate::sampling::{sample_index, sample_next};
use crate::{log_sum_exp, softmax_into, Scalar};

/// `π_h(a|x) ∝ exp(η φ(x, a)ᵀ θ_h)` for one player.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLinPolicy<T> {
    pub player: PlayerId,
    pub eta: T,
    pub b_theta: T,
    /// One `d`-vector per stage.
    pub theta: Vec<Vec<T>>,
}

impl<T: Scalar> SoftLinPolicy<T> {
    /// `θ = 0`: uniform at every state.
    pub fn zeros(player: PlayerId, horizon: usize, dim: usize, eta: T, b_theta: T) -> Result<Self> {
        if !(eta > T::zero()) || !(b_theta > T::zero()) {
            return arg_err(format!("eta and b_theta must be positive, got {eta} and {b_theta}"));
        }
        Ok(Self { player, eta, b_theta, theta: vec![vec![T::zero(); dim]; horizon] })
    }

    pub fn horizon(&self) -> usize {
        self.theta.len()
    }

    pub fn dim(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    fn check_map(&self, fmap: &FeatureMap<T>) -> Result<()> {
        if fmap.player() != self.player || fmap.dim() != self.dim() {
            return dim_err(format!(
                "policy of player {} with d={} used with feature map of player {} with d={}",
                self.player,
                self.dim(),
                fmap.player(),
                fmap.dim()
            ));
        }
        Ok(())
    }

    /// Logits `η φ(x, a)ᵀ θ_h` into `out`.
    pub fn logits(&self, fmap: &FeatureMap<T>, h: usize, x: usize, out: &mut [T]) {
        let th = &self.theta[h];
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.eta * fmap.eval(x, a).iter().map(|&(i, f)| f * th[i]).sum::<T>();
        }
    }

    pub fn dist(&self, fmap: &FeatureMap<T>, h: usize, x: usize, out: &mut [T]) {
        let mut z = vec![T::zero(); out.len()];
        self.logits(fmap, h, x, &mut z);
        softmax_into(&z, out);
    }

    /// Tabulates the policy on every state of the feature map.
    pub fn to_stage_policy(&self, fmap: &FeatureMap<T>) -> Result<StagePolicy<T>> {
        self.check_map(fmap)?;
        StagePolicy::from_fn(self.player, self.horizon(), fmap.n_states(), fmap.n_actions(), |h, x, out| {
            self.dist(fmap, h, x, out)
        })
    }
}

/// JSON form of a [`SoftLinPolicy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftLinDocument {
    pub player: usize,
    #[serde(serialize_with = "f64_17")]
    pub eta: f64,
    #[serde(serialize_with = "f64_17")]
    pub b_theta: f64,
    #[serde(serialize_with = "mat_17")]
    pub theta: Vec<Vec<f64>>,
}

impl SoftLinDocument {
    pub fn from_policy<T: Scalar>(p: &SoftLinPolicy<T>) -> Self {
        Self {
            player: p.player.number(),
            eta: p.eta.as_f64(),
            b_theta: p.b_theta.as_f64(),
            theta: p.theta.iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
        }
    }

    pub fn to_policy<T: Scalar>(&self) -> Result<SoftLinPolicy<T>> {
        let mut p = SoftLinPolicy::zeros(
            PlayerId::from_number(self.player)?,
            self.theta.len(),
            self.theta.first().map_or(0, Vec::len),
            T::lit(self.eta),
            T::lit(self.b_theta),
        )?;
        for (dst, src) in p.theta.iter_mut().zip(&self.theta) {
            if src.len() != dst.len() {
                return dim_err("ragged theta rows");
            }
            *dst = src.iter().map(|&v| T::lit(v)).collect();
        }
        Ok(p)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    NonInteractive,
    Interactive,
}

/// One visited state with both players' actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub traj: usize,
    /// 0-based in memory, 1-based in CSV.
    pub stage: usize,
    pub state: usize,
    pub actions: [usize; 2],
}

/// Joint state-action samples. `labeled[n]` says whether player `n`'s
/// actions came from the expert; interactive datasets only label the
/// frozen player.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertDataset {
    pub samples: Vec<Sample>,
    pub provenance: Provenance,
    pub n_trajectories: usize,
    pub horizon: usize,
    pub labeled: [bool; 2],
    /// Instrumented expert queries per player.
    pub queries: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    traj_id: usize,
    h: usize,
    state: usize,
    a1: usize,
    a2: usize,
}

impl ExpertDataset {
    pub fn empty(provenance: Provenance, horizon: usize, labeled: [bool; 2]) -> Self {
        Self { samples: Vec::new(), provenance, n_trajectories: 0, horizon, labeled, queries: [0; 2] }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(stage, state, action)` triples of one player, or nothing if that
    /// player's actions are not expert labels.
    pub fn player_view(&self, player: PlayerId) -> Vec<(usize, usize, usize)> {
        if !self.labeled[player.index()] {
            return Vec::new();
        }
        self.samples.iter().map(|s| (s.stage, s.state, s.actions[player.index()])).collect()
    }

    /// Range check against a game.
    pub fn check_game<T: Scalar>(&self, game: &MarkovGame<T>) -> Result<()> {
        let [n1, n2] = game.n_actions();
        for s in &self.samples {
            if s.stage >= game.horizon() || s.state >= game.n_states() || s.actions[0] >= n1 || s.actions[1] >= n2 {
                return dim_err(format!(
                    "sample (traj {}, stage {}, state {}, actions {:?}) out of range",
                    s.traj,
                    s.stage + 1,
                    s.state,
                    s.actions
                ));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(CsvRow {
                traj_id: s.traj,
                h: s.stage + 1,
                state: s.state,
                a1: s.actions[0],
                a2: s.actions[1],
            })?;
        }
        if self.samples.is_empty() {
            wr.write_record(["traj_id", "h", "state", "a1", "a2"])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads the CSV columns back. Provenance, horizon and labels are not
    /// part of the file and must be supplied.
    pub fn read_csv<R: Read>(
        r: R,
        provenance: Provenance,
        horizon: usize,
        labeled: [bool; 2],
    ) -> Result<Self> {
        let mut ds = Self::empty(provenance, horizon, labeled);
        let mut trajs = std::collections::BTreeSet::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: CsvRow = row?;
            if row.h == 0 || row.h > horizon {
                return dim_err(format!("stage {} outside 1..={horizon}", row.h));
            }
            trajs.insert(row.traj_id);
            ds.samples.push(Sample {
                traj: row.traj_id,
                stage: row.h - 1,
                state: row.state,
                actions: [row.a1, row.a2],
            });
        }
        ds.n_trajectories = trajs.len();
        for (n, &l) in labeled.iter().enumerate() {
            if l {
                ds.queries[n] = ds.samples.len();
            }
        }
        Ok(ds)
    }
}

/// Rolls out `n_traj` episodes of the expert profile and records every
/// visited state with both actions. An episode stops early when it enters
/// a state where nothing can happen any more (see
/// [`MarkovGame::is_null_absorbing`]).
pub fn sample_expert_dataset<T: Scalar>(
    game: &MarkovGame<T>,
    expert: (&StagePolicy<T>, &StagePolicy<T>),
    n_traj: usize,
    seed: u64,
) -> Result<ExpertDataset> {
    expert.0.check_shape(game, PlayerId::One)?;
    expert.1.check_shape(game, PlayerId::Two)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = ExpertDataset::empty(Provenance::NonInteractive, game.horizon(), [true, true]);
    ds.n_trajectories = n_traj;
    for traj in 0..n_traj {
        let mut x = sample_index(game.initial(), &mut rng);
        for h in 0..game.horizon() {
            if game.is_null_absorbing(x) {
                break;
            }
            let a1 = sample_index(expert.0.dist(h, x), &mut rng);
            let a2 = sample_index(expert.1.dist(h, x), &mut rng);
            ds.samples.push(Sample { traj, stage: h, state: x, actions: [a1, a2] });
            ds.queries[0] += 1;
            ds.queries[1] += 1;
            x = sample_next(game.transition(x, a1, a2), &mut rng);
        }
    }
    Ok(ds)
}

/// Optimizer and policy-class settings for [`bc_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub eta: f64,
    /// Projection radius; `None` means `H √d`.
    #[serde(default)]
    pub b_theta: Option<f64>,
    /// Initial step, divided by `η²` before use.
    #[serde(default = "BcConfig::default_step")]
    pub step_size: f64,
    #[serde(default = "BcConfig::default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "BcConfig::default_grad_tol")]
    pub grad_tolerance: f64,
}

impl BcConfig {
    fn default_step() -> f64 {
        1.0
    }

    fn default_epochs() -> usize {
        2000
    }

    fn default_grad_tol() -> f64 {
        1e-7
    }

    /// `η = ln(n) / H` for a budget of `n` trajectories or episodes; `n`
    /// is floored at 2 so that `η` stays positive.
    pub fn for_budget(n: usize, horizon: usize) -> Self {
        Self {
            eta: (n.max(2) as f64).ln() / horizon as f64,
            b_theta: None,
            step_size: Self::default_step(),
            max_epochs: Self::default_epochs(),
            grad_tolerance: Self::default_grad_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b_ok = self.b_theta.is_none_or(|b| b > 0.0);
        if !(self.eta > 0.0) || !b_ok || !(self.step_size > 0.0) || !(self.grad_tolerance >= 0.0) {
            return arg_err(format!("invalid BC configuration {self:?}"));
        }
        Ok(())
    }

    pub fn radius(&self, horizon: usize, dim: usize) -> f64 {
        self.b_theta.unwrap_or(horizon as f64 * (dim as f64).sqrt())
    }
}

/// Per-stage action counts at each visited state.
#[derive(Debug, Clone)]
struct StageCounts {
    rows: Vec<(usize, Vec<f64>)>,
    total: f64,
}

fn aggregate(view: &[(usize, usize, usize)], horizon: usize, n_actions: usize) -> Vec<StageCounts> {
    let mut maps: Vec<BTreeMap<usize, Vec<f64>>> = vec![BTreeMap::new(); horizon];
    for &(h, x, a) in view {
        maps[h].entry(x).or_insert_with(|| vec![0.0; n_actions])[a] += 1.0;
    }
    maps.into_iter()
        .map(|m| {
            let total = m.values().flatten().sum();
            StageCounts { rows: m.into_iter().collect(), total }
        })
        .collect()
}

fn stage_loglik<T: Scalar>(
    theta: &[T],
    eta: T,
    fmap: &FeatureMap<T>,
    counts: &StageCounts,
    grad: Option<&mut [T]>,
) -> T {
    let na = fmap.n_actions();
    let mut z = vec![T::zero(); na];
    let mut p = vec![T::zero(); na];
    let mut ll = T::zero();
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = T::zero());
    }
    for (x, c) in &counts.rows {
        for (a, o) in z.iter_mut().enumerate() {
            *o = eta * fmap.eval(*x, a).iter().map(|&(i, f)| f * theta[i]).sum::<T>();
        }
        let lse = log_sum_exp(&z);
        let n: T = T::lit(c.iter().sum());
        for a in 0..na {
            if c[a] > 0.0 {
                ll += T::lit(c[a]) * (z[a] - lse);
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            softmax_into(&z, &mut p);
            for a in 0..na {
                let w = eta * (T::lit(c[a]) - n * p[a]);
                if w != T::zero() {
                    for &(i, f) in fmap.eval(*x, a) {
                        g[i] += w * f;
                    }
                }
            }
        }
    }
    ll
}

/// `Σ_i Σ_h log π_h(a_i | x_i)` over the policy's player's samples.
pub fn log_likelihood<T: Scalar>(
    policy: &SoftLinPolicy<T>,
    fmap: &FeatureMap<T>,
    dataset: &ExpertDataset,
) -> Result<T> {
    policy.check_map(fmap)?;
    let counts = aggregate(&dataset.player_view(policy.player), policy.horizon(), fmap.n_actions());
    Ok(counts
        .iter()
        .enumerate()
        .map(|(h, c)| stage_loglik(&policy.theta[h], policy.eta, fmap, c, None))
        .sum())
}

/// Per-stage gradient `η Σ_i [φ(x_i, a_i) − E_{a∼π_h(·|x_i)} φ(x_i, a)]`.
pub fn grad_log_likelihood<T: Scalar>(
    policy: &SoftLinPolicy<T>,
    fmap: &FeatureMap<T>,
    dataset: &ExpertDataset,
) -> Result<Vec<Vec<T>>> {
    policy.check_map(fmap)?;
    let counts = aggregate(&dataset.player_view(policy.player), policy.horizon(), fmap.n_actions());
    Ok(counts
        .iter()
        .enumerate()
        .map(|(h, c)| {
            let mut g = vec![T::zero(); fmap.dim()];
            stage_loglik(&policy.theta[h], policy.eta, fmap, c, Some(&mut g));
            g
        })
        .collect())
}

/// Diagnostics of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BcReport {
    /// Accepted steps per stage.
    pub epochs: Vec<usize>,
    /// Mean log-likelihood per sample at the fitted parameters.
    pub mean_loglik: f64,
    pub samples: usize,
    /// Log-likelihood after every accepted step, per stage.
    pub trajectory: Vec<Vec<f64>>,
}

fn project<T: Scalar>(v: &mut [T], radius: T) {
    let n = norm2(v);
    if n > radius {
        let s = radius / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// Maximum-likelihood fit of `fmap`'s player by projected gradient ascent
/// with Armijo backtracking, one independent problem per stage.
pub fn bc_fit<T: Scalar>(
    dataset: &ExpertDataset,
    fmap: &FeatureMap<T>,
    cfg: &BcConfig,
) -> Result<(SoftLinPolicy<T>, BcReport)> {
    cfg.validate()?;
    let player = fmap.player();
    let view = dataset.player_view(player);
    if view.is_empty() {
        return arg_err(format!("no expert samples for player {player}"));
    }
    if view.iter().any(|&(h, x, a)| h >= dataset.horizon || x >= fmap.n_states() || a >= fmap.n_actions()) {
        return dim_err("dataset sample outside the feature map's range");
    }
    let horizon = dataset.horizon;
    let radius = T::lit(cfg.radius(horizon, fmap.dim()));
    let eta = T::lit(cfg.eta);
    let mut policy = SoftLinPolicy::zeros(player, horizon, fmap.dim(), eta, radius)?;
    let counts = aggregate(&view, horizon, fmap.n_actions());
    let armijo = T::lit(1e-4);
    let tol = T::lit(cfg.grad_tolerance);
    let mut report = BcReport {
        epochs: vec![0; horizon],
        mean_loglik: 0.0,
        samples: view.len(),
        trajectory: vec![Vec::new(); horizon],
    };
    let mut total_ll = T::zero();
    for (h, c) in counts.iter().enumerate() {
        if c.total == 0.0 {
            continue;
        }
        // mean objective keeps the step scale independent of the sample count
        let scale = T::one() / T::lit(c.total);
        let theta = &mut policy.theta[h];
        let mut g = vec![T::zero(); fmap.dim()];
        let mut ll = stage_loglik(theta, eta, fmap, c, Some(&mut g)) * scale;
        g.iter_mut().for_each(|v| *v *= scale);
        report.trajectory[h].push(ll.as_f64());
        let mut step = T::lit(cfg.step_size) / (eta * eta);
        let mut trial = vec![T::zero(); theta.len()];
        let mut g_new = vec![T::zero(); theta.len()];
        for epoch in 0..cfg.max_epochs {
            // projected gradient at unit step
            for ((t, &th), &gi) in trial.iter_mut().zip(theta.iter()).zip(&g) {
                *t = th + gi;
            }
            project(&mut trial, radius);
            let pg = trial.iter().zip(theta.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
            if pg <= tol {
                break;
            }
            let mut accepted = false;
            for _ in 0..60 {
                for ((t, &th), &gi) in trial.iter_mut().zip(theta.iter()).zip(&g) {
                    *t = th + step * gi;
                }
                project(&mut trial, radius);
                let ll_new = stage_loglik(&trial, eta, fmap, c, Some(&mut g_new)) * scale;
                if !ll_new.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite BC objective at stage {} epoch {epoch}",
                        h + 1
                    )));
                }
                let lin: T = g.iter().zip(trial.iter().zip(theta.iter())).map(|(&gi, (&a, &b))| gi * (a - b)).sum();
                if ll_new >= ll + armijo * lin {
                    theta.copy_from_slice(&trial);
                    std::mem::swap(&mut g, &mut g_new);
                    g.iter_mut().for_each(|v| *v *= scale);
                    ll = ll_new;
                    accepted = true;
                    break;
                }
                step /= T::lit(2.0);
            }
            if !accepted {
                break;
            }
            report.epochs[h] = epoch + 1;
            report.trajectory[h].push(ll.as_f64());
            step *= T::lit(2.0);
        }
        total_ll += ll / scale;
    }
    report.mean_loglik = total_ll.as_f64() / view.len() as f64;
    Ok((policy, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tabular_features;

    fn one_state_game() -> MarkovGame<f64> {
        MarkovGame::new(1, [2, 1], 1, vec![vec![(0, 1.0)]; 2], vec![0.5, 0.0], vec![1.0]).unwrap()
    }

    fn counts_dataset(c0: usize, c1: usize) -> ExpertDataset {
        let mut ds = ExpertDataset::empty(Provenance::NonInteractive, 1, [true, true]);
        for i in 0..c0 + c1 {
            let a = usize::from(i >= c0);
            ds.samples.push(Sample { traj: i, stage: 0, state: 0, actions: [a, 0] });
        }
        ds.n_trajectories = c0 + c1;
        ds
    }

    #[test]
    fn multinomial_mle_closed_form() {
        let g = one_state_game();
        let f = tabular_features(&g, PlayerId::One);
        let cfg = BcConfig { eta: 1.0, b_theta: Some(100.0), ..BcConfig::for_budget(10, 1) };
        let (p, rep) = bc_fit(&counts_dataset(7, 3), &f, &cfg).unwrap();
        let mut d = [0.0; 2];
        p.dist(&f, 0, 0, &mut d);
        assert!((d[0] - 0.7).abs() < 1e-3 && (d[1] - 0.3).abs() < 1e-3, "{d:?}");
        let ll_star = 7.0 * 0.7f64.ln() + 3.0 * 0.3f64.ln();
        assert!((rep.mean_loglik * 10.0 - ll_star).abs() < 1e-6);
    }

    #[test]
    fn zero_theta_is_uniform_and_empty_data_is_zero() {
        let g = one_state_game();
        let f = tabular_features(&g, PlayerId::One);
        let p = SoftLinPolicy::zeros(PlayerId::One, 1, f.dim(), 3.0, 1.0).unwrap();
        let sp = p.to_stage_policy(&f).unwrap();
        assert_eq!(sp.dist(0, 0), &[0.5, 0.5]);
        let empty = ExpertDataset::empty(Provenance::NonInteractive, 1, [true, true]);
        assert_eq!(log_likelihood(&p, &f, &empty).unwrap(), 0.0);
        assert!(grad_log_likelihood(&p, &f, &empty).unwrap()[0].iter().all(|&v| v == 0.0));
        assert!(bc_fit(&empty, &f, &BcConfig::for_budget(1, 1)).is_err());
    }

    #[test]
    fn unlabeled_player_has_no_view() {
        let mut ds = counts_dataset(2, 1);
        ds.labeled = [false, true];
        assert!(ds.player_view(PlayerId::One).is_empty());
        assert_eq!(ds.player_view(PlayerId::Two).len(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let ds = counts_dataset(2, 2);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("traj_id,h,state,a1,a2\n0,1,0,0,0\n"), "{text}");
        let back = ExpertDataset::read_csv(&buf[..], Provenance::NonInteractive, 1, [true, true]).unwrap();
        assert_eq!(back.samples, ds.samples);
    }

    #[test]
    fn projection_respected() {
        let g = one_state_game();
        let f = tabular_features(&g, PlayerId::One);
        let cfg = BcConfig { eta: 1.0, b_theta: Some(0.5), ..BcConfig::for_budget(10, 1) };
        let (p, rep) = bc_fit(&counts_dataset(10, 0), &f, &cfg).unwrap();
        assert!(norm2(&p.theta[0]) <= 0.5 + 1e-9);
        assert!(rep.trajectory[0].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn softlin_json_round_trip() {
        let mut p = SoftLinPolicy::<f64>::zeros(PlayerId::Two, 2, 3, 0.7, 4.0).unwrap();
        p.theta[1] = vec![0.1, -0.2, 1.0 / 3.0];
        let doc = SoftLinDocument::from_policy(&p);
        let json = serde_json::to_string(&doc).unwrap();
        let back: SoftLinDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_policy::<f64>().unwrap(), p);
    }
}
