#![allow(dead_code)]

use mail_core::game::{MarkovGame, StagePolicy};
use mail_core::{Game, PlayerId, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|p| p / s).collect()
}

/// Dense random game: every transition row has full support.
pub fn random_game(rng: &mut ChaCha8Rng, nx: usize, na: [usize; 2], horizon: usize) -> Game {
    let triples = nx * na[0] * na[1];
    let transitions = (0..triples).map(|_| simplex(rng, nx).into_iter().enumerate().collect()).collect();
    let rewards = (0..triples).map(|_| rng.random_range(-1.0..1.0)).collect();
    MarkovGame::new(nx, na, horizon, transitions, rewards, simplex(rng, nx)).unwrap()
}

pub fn random_policy(rng: &mut ChaCha8Rng, game: &Game, player: PlayerId) -> Policy {
    let na = game.actions_of(player);
    StagePolicy::from_fn(player, game.horizon(), game.n_states(), na, |_, _, out| {
        out.copy_from_slice(&simplex(rng, na));
    })
    .unwrap()
}

/// Every deterministic non-stationary policy of `player`.
pub fn all_deterministic(game: &Game, player: PlayerId) -> Vec<Policy> {
    let (h, nx, na) = (game.horizon(), game.n_states(), game.actions_of(player));
    let total = na.pow((h * nx) as u32);
    (0..total)
        .map(|code| {
            StagePolicy::deterministic(player, h, nx, na, |hh, x| (code / na.pow((hh * nx + x) as u32)) % na).unwrap()
        })
        .collect()
}
