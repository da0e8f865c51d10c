//! Sweep execution and the run-record CSV.

use std::io::Write;
use std::time::Instant;

use mail_core::exploration::{interactive_mail, uniform_explore, ExplorationConfig};
use mail_core::game::{expected_tv, nash_gap, occupancy};
use mail_core::imitation::{bc_fit, sample_expert_dataset, BcConfig, BcReport};
use mail_core::{Dataset, Features, Game, PlayerId, Policy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::registry::{Algorithm, EnvSpec, ExpertSpec, FeatureSpec};
use crate::seed::run_seed;

/// One row of the results CSV. Metric fields are empty when the run
/// failed, in which case `error` carries the message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub env: String,
    pub feature_map: String,
    pub algorithm: String,
    pub budget: usize,
    pub expert_queries: Option<usize>,
    pub nash_gap: Option<f64>,
    pub train_loglik: Option<f64>,
    pub expected_tv_to_expert: Option<f64>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Everything shared by the runs of one config.
struct Setup {
    game: Game,
    fmaps: [Features; 2],
    expert: (Policy, Policy),
    algorithm: Algorithm,
    equilibrium_expert: bool,
}

struct Metrics {
    queries: usize,
    gap: f64,
    loglik: f64,
    tv: f64,
}

/// Worker count: `MAIL_LAB_THREADS` if set to a positive integer, else
/// the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("MAIL_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every `(seed, budget)` pair of the config, seeds outermost.
///
/// Failures inside a run become records with an error message; only
/// configuration problems (including building the environment, features
/// or expert) abort the whole sweep.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, LabError> {
    cfg.validate()?;
    let setup_err = |e: LabError| match e {
        LabError::Config(m) => LabError::Config(m),
        other => LabError::Config(format!("cannot set up experiment: {other}")),
    };
    let env = EnvSpec::parse(&cfg.env)?.build().map_err(setup_err)?;
    let fmaps = FeatureSpec::parse(&cfg.feature_map)?.build(&env).map_err(setup_err)?;
    let expert_spec = ExpertSpec::parse(&cfg.expert)?;
    let expert = expert_spec.build(&env).map_err(setup_err)?;
    let setup = Setup {
        game: env.game,
        fmaps,
        expert,
        algorithm: Algorithm::parse(&cfg.algorithm)?,
        equilibrium_expert: expert_spec.is_equilibrium(),
    };
    let jobs: Vec<(u64, usize)> =
        cfg.seeds.iter().flat_map(|&s| cfg.budgets.iter().map(move |&b| (s, b))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| LabError::Argument(format!("cannot start worker pool: {e}")))?;
    // par_iter + collect keeps job order, whatever order they finish in
    Ok(pool.install(|| jobs.par_iter().map(|&(s, b)| run_one(cfg, &setup, s, b)).collect()))
}

fn run_one(cfg: &ExperimentConfig, setup: &Setup, seed: u64, budget: usize) -> RunRecord {
    let start = Instant::now();
    let result = execute(cfg, setup, seed, budget);
    let wall_ms = cfg.output.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let mut rec = RunRecord {
        seed,
        env: cfg.env.clone(),
        feature_map: cfg.feature_map.clone(),
        algorithm: cfg.algorithm.clone(),
        budget,
        expert_queries: None,
        nash_gap: None,
        train_loglik: None,
        expected_tv_to_expert: None,
        wall_ms,
        error: None,
    };
    match result {
        Ok(m) => {
            rec.expert_queries = Some(m.queries);
            rec.nash_gap = Some(m.gap);
            rec.train_loglik = Some(m.loglik);
            rec.expected_tv_to_expert = Some(m.tv);
        }
        Err(e) => {
            log::warn!("run seed={seed} budget={budget} failed: {e}");
            rec.error = Some(e.to_string());
        }
    }
    rec
}

fn bc_config(cfg: &ExperimentConfig, budget: usize, horizon: usize) -> BcConfig {
    let mut bc = BcConfig::for_budget(budget, horizon);
    let o = &cfg.bc;
    if let Some(v) = o.eta {
        bc.eta = v;
    }
    bc.b_theta = o.b_theta.or(bc.b_theta);
    bc.step_size = o.step_size.unwrap_or(bc.step_size);
    bc.max_epochs = o.max_epochs.unwrap_or(bc.max_epochs);
    bc.grad_tolerance = o.grad_tolerance.unwrap_or(bc.grad_tolerance);
    bc
}

fn exploration_config(cfg: &ExperimentConfig, budget: usize) -> ExplorationConfig {
    let mut ex = ExplorationConfig::new(budget);
    let o = &cfg.exploration;
    ex.beta = o.beta;
    ex.c_beta = o.c_beta.unwrap_or(ex.c_beta);
    ex.delta = o.delta.unwrap_or(ex.delta);
    ex.ridge = o.ridge.unwrap_or(ex.ridge);
    ex.inverse = o.inverse.unwrap_or(ex.inverse);
    ex.refresh_every = o.refresh_every.unwrap_or(ex.refresh_every);
    ex
}

fn execute(cfg: &ExperimentConfig, setup: &Setup, seed: u64, budget: usize) -> Result<Metrics, LabError> {
    let game = &setup.game;
    let expert = (&setup.expert.0, &setup.expert.1);
    let fmaps = [&setup.fmaps[0], &setup.fmaps[1]];
    let rs = run_seed(cfg.master_seed, seed, budget, setup.algorithm.name());
    let bc = bc_config(cfg, budget, game.horizon());
    let (p1, p2, reports, queries) = match setup.algorithm {
        Algorithm::Bc => {
            let ds = sample_expert_dataset(game, expert, budget, rs)?;
            let (p1, p2, reports) = fit_both(&[&ds, &ds], fmaps, &bc)?;
            // one query of the joint expert profile per recorded step
            (p1, p2, reports, ds.queries[0])
        }
        Algorithm::LsviUcbZeroBc => {
            let ex = exploration_config(cfg, budget);
            let out = interactive_mail(game, expert, fmaps, &ex, Some(&bc), rs, !setup.equilibrium_expert)?;
            let [r1, r2] = out.reports;
            (out.policies.0, out.policies.1, [r1, r2], out.queries[0] + out.queries[1])
        }
        Algorithm::UniformExploreBc => {
            let mut sets = Vec::with_capacity(2);
            for frozen in PlayerId::BOTH {
                let active = frozen.other();
                let trace = uniform_explore(game, expert, frozen, fmaps[active.index()], budget, rs)?;
                sets.push(trace.dataset);
            }
            let (p1, p2, reports) = fit_both(&[&sets[0], &sets[1]], fmaps, &bc)?;
            (p1, p2, reports, sets[0].queries[0] + sets[1].queries[1])
        }
    };
    let gap = nash_gap(game, &p1, &p2)?;
    let samples = (reports[0].samples + reports[1].samples) as f64;
    let loglik = (reports[0].mean_loglik * reports[0].samples as f64
        + reports[1].mean_loglik * reports[1].samples as f64)
        / samples;
    let weights = occupancy(game, expert.0, expert.1)?;
    let tv1: f64 = expected_tv(&weights, &p1, expert.0)?.iter().map(|s| s.tv).sum();
    let tv2: f64 = expected_tv(&weights, &p2, expert.1)?.iter().map(|s| s.tv).sum();
    Ok(Metrics { queries, gap, loglik, tv: 0.5 * (tv1 + tv2) })
}

/// Fits player `n` on `sets[n]`.
fn fit_both(
    sets: &[&Dataset; 2],
    fmaps: [&Features; 2],
    bc: &BcConfig,
) -> Result<(Policy, Policy, [BcReport; 2]), LabError> {
    let (t1, r1) = bc_fit(sets[0], fmaps[0], bc)?;
    let (t2, r2) = bc_fit(sets[1], fmaps[1], bc)?;
    Ok((t1.to_stage_policy(fmaps[0])?, t2.to_stage_policy(fmaps[1])?, [r1, r2]))
}

/// Header plus one row per record, columns in [`RunRecord`] field order.
pub fn emit_csv<W: Write>(records: &[RunRecord], w: W) -> Result<(), LabError> {
    let mut wr = csv::Writer::from_writer(w);
    if records.is_empty() {
        wr.write_record([
            "seed",
            "env",
            "feature_map",
            "algorithm",
            "budget",
            "expert_queries",
            "nash_gap",
            "train_loglik",
            "expected_tv_to_expert",
            "wall_ms",
            "error",
        ])?;
    }
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<RunRecord>, LabError> {
    let mut rd = csv::Reader::from_path(path)?;
    Ok(rd.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RunRecord {
        RunRecord {
            seed: 42,
            env: "gridworld{h=10}".into(),
            feature_map: "tabular".into(),
            algorithm: "bc".into(),
            budget: 10,
            expert_queries: Some(100),
            nash_gap: Some(0.5),
            train_loglik: Some(-0.1),
            expected_tv_to_expert: Some(0.25),
            wall_ms: None,
            error: None,
        }
    }

    #[test]
    fn header_only_for_no_records() {
        let mut out = Vec::new();
        emit_csv(&[], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("seed,env,feature_map,algorithm,budget,expert_queries,nash_gap"));
    }

    #[test]
    fn csv_round_trip() {
        let mut bad = record();
        bad.nash_gap = None;
        bad.error = Some("boom, with comma".into());
        let recs = vec![record(), bad];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        emit_csv(&recs, std::fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(read_csv(&path).unwrap(), recs);
    }

    #[test]
    fn thread_count_from_env_is_positive() {
        assert!(worker_threads() >= 1);
    }
}
