//! The acceptance battery: one pass/fail verdict per criterion.
//!
//! Shared by `mail-lab verify --suite acceptance` and the `acceptance`
//! test target. Thresholds live next to each check.

use std::time::{Duration, Instant};

use mail_core::envs::{Board, Chain, Gridworld, Outcome, TicTacToe};
use mail_core::equilibrium::{matrix_maximin, solve_nash, solve_nash_with, PayoffMatrix, SolveOptions};
use mail_core::exploration::{
    interactive_mail_sweep, log_checkpoints, lsvi_ucb_zero, probe_feature_norms, uniform_explore,
    ExplorationConfig,
};
use mail_core::features::{
    concentrability_estimate, constant_features, random_deterministic_policies, relational_features,
    tabular_features, best_response_deviations, FeatureMap,
};
use mail_core::game::{best_response, evaluate, nash_gap, occupancy, MarkovGame, StagePolicy};
use mail_core::imitation::{bc_fit, grad_log_likelihood, log_likelihood, sample_expert_dataset, BcConfig, SoftLinPolicy};
use mail_core::{Game, PlayerId, Policy, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::runner::{emit_csv, run};

/// The default sweep config shipped with the repository.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

pub const SEEDS: [u64; 4] = [42, 123, 456, 789];
const GRID_H: usize = 10;
/// Bonus scale for Gridworld exploration (`H − 1`).
pub const GRID_BETA: f64 = 9.0;
/// Bonus scale for chain(8) exploration (`H − 1`).
pub const CHAIN_BETA: f64 = 7.0;
pub const INTERACTIVE_BUDGETS: [usize; 12] = [100, 200, 300, 500, 700, 1000, 1500, 2000, 2500, 3000, 4000, 5000];

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {}: {} [{:.1} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed<F>(id: &'static str, title: &'static str, f: F) -> Verdict
where
    F: FnOnce() -> Result<(bool, String), LabError>,
{
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Verdict { id, title, passed, detail, elapsed: start.elapsed() }
}

/// Runs every criterion in order, calling `report` as each finishes.
pub fn battery(mut report: impl FnMut(&Verdict)) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut push = |v: Verdict| {
        report(&v);
        out.push(v);
    };
    push(ac1_equilibrium());
    push(ac2_bc_failure());
    let mut kept = None;
    push(ac3_interactive(&mut kept));
    push(ac4_feature_norm_decay(kept));
    push(ac5_chain());
    push(ac6_tictactoe());
    push(ac7_constant_features());
    push(ac8_oracles());
    push(ac9_determinism());
    out
}

fn gridworld() -> Result<(Gridworld, Game), LabError> {
    let g = Gridworld::new(GRID_H)?;
    let game = g.game();
    Ok((g, game))
}

fn pure_expert(game: &Game) -> Result<(Policy, Policy), LabError> {
    Ok(solve_nash_with(game, &SolveOptions { pure_first: true, permutation_seed: None })?.profile)
}

pub fn ac1_equilibrium() -> Verdict {
    timed("AC1", "equilibrium exactness", || {
        let start = Instant::now();
        let (g, game) = gridworld()?;
        let eq = solve_nash(&game)?;
        let secs = start.elapsed().as_secs_f64();
        let gap = nash_gap(&game, eq.player1(), eq.player2())?;
        let value = eq.stage_values[0][g.start_state()];
        let ok = gap <= 1e-6 && value.abs() <= 1e-8 && secs <= 10.0;
        Ok((ok, format!("nash_gap {gap:.3e} (<= 1e-6), start value {value:.3e} (|v| <= 1e-8), {secs:.3} s (<= 10 s)")))
    })
}

pub fn ac2_bc_failure() -> Verdict {
    timed("AC2", "BC with tabular features fails on Gridworld", || {
        let start = Instant::now();
        let (_, game) = gridworld()?;
        let expert = pure_expert(&game)?;
        let fmaps = [tabular_features(&game, PlayerId::One), tabular_features(&game, PlayerId::Two)];
        let tau = 500;
        let bc = BcConfig::for_budget(tau, GRID_H);
        let (mut loss, mut gap) = (0.0, 0.0);
        for &seed in &SEEDS {
            let ds = sample_expert_dataset(&game, (&expert.0, &expert.1), tau, seed)?;
            let (t1, r1) = bc_fit(&ds, &fmaps[0], &bc)?;
            let (t2, r2) = bc_fit(&ds, &fmaps[1], &bc)?;
            loss -= 0.5 * (r1.mean_loglik + r2.mean_loglik);
            gap += nash_gap(&game, &t1.to_stage_policy(&fmaps[0])?, &t2.to_stage_policy(&fmaps[1])?)?;
        }
        let n = SEEDS.len() as f64;
        let (loss, gap) = (loss / n, gap / n);
        let secs = start.elapsed().as_secs_f64();
        let threshold = 0.25 * GRID_H as f64;
        let ok = loss <= 0.01 && gap >= threshold && secs <= 120.0;
        Ok((
            ok,
            format!("mean log-loss {loss:.3e} nats (<= 0.01), mean nash_gap {gap:.4} (>= {threshold}), {secs:.1} s (<= 120 s)"),
        ))
    })
}

/// First budget whose gap is at or below `threshold`.
fn first_below(gaps: &[f64], threshold: f64) -> Option<usize> {
    gaps.iter().position(|&g| g <= threshold).map(|i| INTERACTIVE_BUDGETS[i])
}

/// Keeps the tabular seed-42 trace for the feature-norm criterion.
pub struct KeptTrace {
    game: Game,
    expert: (Policy, Policy),
    fmap: FeatureMap<f64>,
    trace: Trace,
}

pub fn ac3_interactive(kept: &mut Option<KeptTrace>) -> Verdict {
    timed("AC3", "interactive imitation closes the gap", || {
        let start = Instant::now();
        let (g, game) = gridworld()?;
        let expert = pure_expert(&game)?;
        let tab = [tabular_features(&game, PlayerId::One), tabular_features(&game, PlayerId::Two)];
        let rel = [relational_features(&g, PlayerId::One)?, relational_features(&g, PlayerId::Two)?];
        let cfg = ExplorationConfig::new(*INTERACTIVE_BUDGETS.last().expect("nonempty")).with_beta(GRID_BETA);
        let threshold = 0.05 * GRID_H as f64;
        let mut hits = [Vec::new(), Vec::new()];
        for &seed in &SEEDS {
            for (m, maps) in [&tab, &rel].into_iter().enumerate() {
                let sweep = interactive_mail_sweep(
                    &game,
                    (&expert.0, &expert.1),
                    [&maps[0], &maps[1]],
                    &cfg,
                    None,
                    seed,
                    &INTERACTIVE_BUDGETS,
                )?;
                let gaps = sweep
                    .outcomes
                    .iter()
                    .map(|o| nash_gap(&game, &o.policies.0, &o.policies.1))
                    .collect::<Result<Vec<_>, _>>()?;
                log::info!("seed {seed} map {m}: gaps {gaps:?}");
                hits[m].push(first_below(&gaps, threshold));
                if m == 0 && seed == SEEDS[0] {
                    let [t1, _] = sweep.traces;
                    *kept = Some(KeptTrace {
                        game: game.clone(),
                        expert: expert.clone(),
                        fmap: tab[1].clone(),
                        trace: t1,
                    });
                }
            }
        }
        let secs = start.elapsed().as_secs_f64();
        let reached = hits.iter().all(|h| h.iter().all(Option::is_some));
        let earlier = hits[0].iter().zip(&hits[1]).filter(|(t, r)| matches!((t, r), (Some(t), Some(r)) if r < t)).count();
        let ok = reached && earlier >= 3 && secs <= 600.0;
        let show = |h: &[Option<usize>]| {
            h.iter().map(|k| k.map_or("never".to_string(), |k| k.to_string())).collect::<Vec<_>>().join("/")
        };
        Ok((
            ok,
            format!(
                "first K with gap <= {threshold}: tabular {}, relational {}; relational earlier on {earlier}/4 (>= 3); {secs:.0} s (<= 600 s)",
                show(&hits[0]),
                show(&hits[1])
            ),
        ))
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn ac4_feature_norm_decay(kept: Option<KeptTrace>) -> Verdict {
    timed("AC4", "probe feature norms decay like K^-1/2", || {
        let Some(k) = kept else {
            return Ok((false, "no exploration trace (AC3 did not complete)".into()));
        };
        let active = k.trace.frozen.other();
        let mut probes = random_deterministic_policies(&k.game, active, 50, SEEDS[0]);
        probes.push(match active {
            PlayerId::One => k.expert.0.clone(),
            PlayerId::Two => k.expert.1.clone(),
        });
        let checkpoints: Vec<usize> = log_checkpoints(k.trace.n_episodes()).into_iter().filter(|&c| c >= 100).collect();
        let series = probe_feature_norms(&k.trace, &k.game, (&k.expert.0, &k.expert.1), &probes, &k.fmap, &checkpoints)?;
        let xs: Vec<f64> = checkpoints.iter().map(|&c| c as f64).collect();
        let slope = log_log_slope(&xs, &series.series);
        let ok = (-0.65..=-0.35).contains(&slope);
        let pts: Vec<String> = checkpoints.iter().zip(&series.series).map(|(c, v)| format!("{c}:{v:.3}")).collect();
        Ok((ok, format!("slope {slope:.3} (in [-0.65, -0.35]); series {}", pts.join(" "))))
    })
}

pub fn ac5_chain() -> Verdict {
    timed("AC5", "chain(8) first passage", || {
        let chain = Chain::new(8)?;
        let game: Game = chain.game();
        let expert = pure_expert(&game)?;
        let fmap = tabular_features(&game, PlayerId::Two);
        let end = chain.end_state();
        let trials = 200u64;
        let (uniform_cap, lsvi_cap) = (2000, 400);
        let mut uniform = Vec::new();
        let mut lsvi = Vec::new();
        let cfg = ExplorationConfig::new(lsvi_cap).with_beta(CHAIN_BETA);
        for seed in 0..trials {
            let t = uniform_explore(&game, (&expert.0, &expert.1), PlayerId::One, &fmap, uniform_cap, seed)?;
            uniform.push(t.first_passage(end).unwrap_or(uniform_cap + 1));
            let t = lsvi_ucb_zero(&game, (&expert.0, &expert.1), PlayerId::One, &fmap, &cfg, seed)?;
            lsvi.push(t.first_passage(end).unwrap_or(lsvi_cap + 1));
        }
        let mean = uniform.iter().sum::<usize>() as f64 / trials as f64;
        lsvi.sort_unstable();
        let median = 0.5 * (lsvi[99] + lsvi[100]) as f64;
        let ok = (mean - 128.0).abs() <= 0.2 * 128.0 && median <= 64.0;
        Ok((
            ok,
            format!("uniform mean first passage {mean:.1} (128 +/- 20%), LSVI-UCB-ZERO median {median} (<= 64)"),
        ))
    })
}

pub fn ac6_tictactoe() -> Verdict {
    timed("AC6", "Tic-Tac-Toe minimax expert", || {
        let start = Instant::now();
        let t = TicTacToe::new();
        let expert = |b: &Board| t.expert_move(b).expect("non-terminal board");
        let self_play = t.play_out(expert, expert);
        let mut losses = 0;
        let games = 10_000u64;
        for g in 0..games {
            let mut rng = ChaCha8Rng::seed_from_u64(g);
            let mut random = |b: &Board| {
                let moves: Vec<usize> = b.legal_moves().collect();
                moves[rng.random_range(0..moves.len())]
            };
            let expert_is_x = g % 2 == 0;
            let result =
                if expert_is_x { t.play_out(expert, &mut random) } else { t.play_out(&mut random, expert) };
            let lost = matches!(
                (expert_is_x, result),
                (true, Outcome::OWins) | (false, Outcome::XWins)
            );
            losses += lost as usize;
        }
        let secs = start.elapsed().as_secs_f64();
        let size = t.canonical_table_size();
        let ok = size == 765 && self_play == Outcome::Draw && losses == 0 && secs <= 30.0;
        Ok((
            ok,
            format!("canonical table {size} (= 765), self-play {self_play:?}, {losses} losses in {games} games, {secs:.1} s (<= 30 s)"),
        ))
    })
}

pub fn ac7_constant_features() -> Verdict {
    timed("AC7", "constant-feature concentrability is one", || {
        let (_, game) = gridworld()?;
        let expert = pure_expert(&game)?;
        let mut devs = Vec::new();
        for n in PlayerId::BOTH {
            devs.extend(random_deterministic_policies(&game, n, 10, 7 + n.index() as u64));
            devs.push(StagePolicy::uniform_for(&game, n));
        }
        let uniform = [StagePolicy::uniform_for(&game, PlayerId::One), StagePolicy::uniform_for(&game, PlayerId::Two)];
        devs.extend(best_response_deviations(&game, &uniform)?);
        let mut worst: f64 = 0.0;
        for c in [0.1, 0.5, 1.0] {
            let f = [constant_features(c, &game, PlayerId::One)?, constant_features(c, &game, PlayerId::Two)?];
            let est = concentrability_estimate(&game, (&expert.0, &expert.1), [&f[0], &f[1]], &devs, 0.0)?;
            worst = worst.max((est - 1.0).abs());
        }
        Ok((worst <= 1e-9, format!("max |C - 1| = {worst:.3e} over c in {{0.1, 0.5, 1.0}}, {} deviations (<= 1e-9)", devs.len())))
    })
}

/// Random game with up to 3 states and 2 actions per player.
pub fn random_small_game(rng: &mut ChaCha8Rng, horizon: usize) -> Game {
    let nx = rng.random_range(1..=3);
    let na = [rng.random_range(1..=2), rng.random_range(1..=2)];
    let triples = nx * na[0] * na[1];
    let mut transitions = Vec::with_capacity(triples);
    let mut rewards = Vec::with_capacity(triples);
    for _ in 0..triples {
        let w: Vec<f64> = (0..nx).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = w.iter().sum();
        transitions.push(w.iter().enumerate().map(|(y, p)| (y, p / s)).collect());
        rewards.push(rng.random_range(-1.0..1.0));
    }
    let w: Vec<f64> = (0..nx).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = w.iter().sum();
    MarkovGame::new(nx, na, horizon, transitions, rewards, w.iter().map(|p| p / s).collect())
        .expect("valid random game")
}

pub fn random_policy(rng: &mut ChaCha8Rng, game: &Game, player: PlayerId) -> Policy {
    StagePolicy::from_fn(player, game.horizon(), game.n_states(), game.actions_of(player), |_, _, out| {
        out.iter_mut().for_each(|p| *p = rng.random::<f64>() + 0.01);
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= s);
    })
    .expect("valid policy")
}

/// Best value over every deterministic non-stationary policy of `player`.
pub fn brute_force_best_value(game: &Game, opponent: &Policy, player: PlayerId) -> Result<f64, LabError> {
    let (h, nx, na) = (game.horizon(), game.n_states(), game.actions_of(player));
    let cells = h * nx;
    let total = na.pow(cells as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let pol = StagePolicy::deterministic(player, h, nx, na, |hh, x| (code / na.pow((hh * nx + x) as u32)) % na)?;
        let (p1, p2) = match player {
            PlayerId::One => (&pol, opponent),
            PlayerId::Two => (opponent, &pol),
        };
        best = best.max(evaluate(game, p1, p2, player)?.initial_value(game.initial()));
    }
    Ok(best)
}

fn oracle_best_response() -> Result<(bool, String), LabError> {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let horizon = rng.random_range(1..=3);
        let game = random_small_game(&mut rng, horizon);
        let player = if seed % 2 == 0 { PlayerId::One } else { PlayerId::Two };
        let opponent = random_policy(&mut rng, &game, player.other());
        let (_, values) = best_response(&game, &opponent, player)?;
        let dp = values.initial_value(game.initial());
        worst = worst.max((dp - brute_force_best_value(&game, &opponent, player)?).abs());
    }
    Ok((worst <= 1e-10, format!("(a) BR vs enumeration max err {worst:.2e} (<= 1e-10)")))
}

/// Random game with `nx` states, `na` actions each, and a random
/// normalized feature map for player one.
fn gradient_fixture(seed: u64) -> Result<(Game, FeatureMap<f64>, SoftLinPolicy<f64>, mail_core::Dataset), LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, na, horizon, dim) = (3, 3, 2, 4);
    let triples = nx * na * na;
    let transitions = (0..triples).map(|_| vec![(rng.random_range(0..nx), 1.0)]).collect();
    let rewards = (0..triples).map(|_| rng.random_range(-1.0..1.0)).collect();
    let game = MarkovGame::new(nx, [na, na], horizon, transitions, rewards, vec![1.0 / nx as f64; nx])?;
    let table = (0..nx * na)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
            v.into_iter().enumerate().map(|(i, a)| (i, a / n)).collect()
        })
        .collect();
    let fmap = FeatureMap::from_table("random", PlayerId::One, dim, nx, na, table)?;
    let p1 = random_policy(&mut rng, &game, PlayerId::One);
    let p2 = random_policy(&mut rng, &game, PlayerId::Two);
    let ds = sample_expert_dataset(&game, (&p1, &p2), 30, seed)?;
    let mut pol = SoftLinPolicy::zeros(PlayerId::One, horizon, dim, rng.random_range(0.5..2.0), 10.0)?;
    for th in pol.theta.iter_mut() {
        th.iter_mut().for_each(|t| *t = rng.random_range(-1.0..1.0));
    }
    Ok((game, fmap, pol, ds))
}

fn oracle_bc_gradient() -> Result<(bool, String), LabError> {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let (_, fmap, pol, ds) = gradient_fixture(seed)?;
        let grad = grad_log_likelihood(&pol, &fmap, &ds)?;
        let eps = 1e-6;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for h in 0..pol.horizon() {
            for i in 0..pol.dim() {
                let mut up = pol.clone();
                up.theta[h][i] += eps;
                let mut down = pol.clone();
                down.theta[h][i] -= eps;
                let fd = (log_likelihood(&up, &fmap, &ds)? - log_likelihood(&down, &fmap, &ds)?) / (2.0 * eps);
                num += (grad[h][i] - fd).powi(2);
                den += fd * fd;
            }
        }
        worst = worst.max(num.sqrt() / den.sqrt().max(1e-12));
    }
    Ok((worst <= 1e-5, format!("(b) BC gradient rel err {worst:.2e} (<= 1e-5)")))
}

fn oracle_matrix_games() -> Result<(bool, String), LabError> {
    let mut worst: f64 = 0.0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let data = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = PayoffMatrix::new(r, c, data)?;
        worst = worst.max(matrix_maximin(&a)?.saddle_residual(&a));
    }
    Ok((worst <= 1e-8, format!("(c) maximin saddle residual {worst:.2e} (<= 1e-8)")))
}

/// Two states, two actions each, `H = 2`, random stochastic transitions.
/// The expert is deterministic; the deviation copies it wherever the
/// expert visits and acts at random elsewhere.
fn oracle_tabular_concentrability() -> Result<(bool, String), LabError> {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nx, na, horizon) = (2, 2, 2);
        let triples = nx * na * na;
        let transitions = (0..triples)
            .map(|_| {
                let p = rng.random_range(0.1..0.9);
                vec![(0, p), (1, 1.0 - p)]
            })
            .collect();
        let rewards = (0..triples).map(|_| rng.random_range(-1.0..1.0)).collect();
        let game = MarkovGame::new(nx, [na, na], horizon, transitions, rewards, vec![1.0, 0.0])?;
        let e1 = StagePolicy::deterministic(PlayerId::One, horizon, nx, na, |_, _| rng.random_range(0..na))?;
        let e2 = StagePolicy::deterministic(PlayerId::Two, horizon, nx, na, |_, _| rng.random_range(0..na))?;
        let occ = occupancy(&game, &e1, &e2)?;
        let dev = StagePolicy::deterministic(PlayerId::One, horizon, nx, na, |h, x| {
            if occ.stage(h)[x] > 0.0 {
                e1.dist(h, x).iter().position(|&p| p == 1.0).expect("deterministic")
            } else {
                rng.random_range(0..na)
            }
        })?;
        let dev_occ = occupancy(&game, &dev, &e2)?;
        let mut c_max: f64 = 0.0;
        for h in 0..horizon {
            for x in 0..nx {
                let (d, e) = (dev_occ.stage(h)[x], occ.stage(h)[x]);
                if e > 0.0 {
                    c_max = c_max.max(d / e);
                } else if d > 0.0 {
                    c_max = f64::INFINITY;
                }
            }
        }
        let f = [tabular_features(&game, PlayerId::One), tabular_features(&game, PlayerId::Two)];
        let c_phi = concentrability_estimate(&game, (&e1, &e2), [&f[0], &f[1]], &[dev], 0.0)?;
        worst = worst.max((c_phi - c_max).abs());
    }
    Ok((worst <= 1e-9, format!("(d) tabular C_phi vs enumerated C_max err {worst:.2e} (<= 1e-9)")))
}

pub fn ac8_oracles() -> Verdict {
    timed("AC8", "oracle suites", || {
        let parts = [oracle_best_response()?, oracle_bc_gradient()?, oracle_matrix_games()?, oracle_tabular_concentrability()?];
        let ok = parts.iter().all(|(p, _)| *p);
        Ok((ok, parts.iter().map(|(_, d)| d.as_str()).collect::<Vec<_>>().join("; ")))
    })
}

/// Runs the shipped default config and renders its CSV.
pub fn default_config_csv() -> Result<Vec<u8>, LabError> {
    let cfg = ExperimentConfig::from_toml(DEFAULT_CONFIG)?;
    let records = run(&cfg)?;
    let mut out = Vec::new();
    emit_csv(&records, &mut out)?;
    Ok(out)
}

pub fn ac9_determinism() -> Verdict {
    timed("AC9", "default sweep is byte-identical across runs", || {
        let a = default_config_csv()?;
        let b = default_config_csv()?;
        let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
        Ok((a == b, format!("{rows} records, {} bytes, identical: {}", a.len(), a == b)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_matches_known_optimum() {
        // one state, horizon 1, reward = action index for player one
        let game =
            MarkovGame::new(1, [2, 1], 1, vec![vec![(0, 1.0)], vec![(0, 1.0)]], vec![0.0, 1.0], vec![1.0]).unwrap();
        let opp = StagePolicy::uniform_for(&game, PlayerId::Two);
        assert_eq!(brute_force_best_value(&game, &opp, PlayerId::One).unwrap(), 1.0);
    }

    #[test]
    fn first_below_uses_budget_grid() {
        let mut gaps = vec![1.0; INTERACTIVE_BUDGETS.len()];
        gaps[3] = 0.4;
        assert_eq!(first_below(&gaps, 0.5), Some(500));
        assert_eq!(first_below(&[1.0; 12], 0.5), None);
    }
}
