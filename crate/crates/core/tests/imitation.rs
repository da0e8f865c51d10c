mod common;

use common::{random_game, random_policy, rng};
use mail_core::features::FeatureMap;
use mail_core::game::{expected_tv, occupancy};
use mail_core::imitation::{
    bc_fit, grad_log_likelihood, log_likelihood, sample_expert_dataset, BcConfig, SoftLinPolicy,
};
use mail_core::{Game, PlayerId};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_features(r: &mut ChaCha8Rng, game: &Game, player: PlayerId, dim: usize) -> FeatureMap<f64> {
    let na = game.actions_of(player);
    let table = (0..game.n_states() * na)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
            v.into_iter().enumerate().map(|(i, a)| (i, a / n)).collect()
        })
        .collect();
    FeatureMap::from_table("random", player, dim, game.n_states(), na, table).unwrap()
}

fn random_theta(r: &mut ChaCha8Rng, pol: &mut SoftLinPolicy<f64>, scale: f64) {
    for th in pol.theta.iter_mut() {
        th.iter_mut().for_each(|t| *t = r.random_range(-scale..scale));
    }
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let game = random_game(&mut r, 4, [3, 2], 3);
        let fmap = random_features(&mut r, &game, PlayerId::One, 5);
        let e = (random_policy(&mut r, &game, PlayerId::One), random_policy(&mut r, &game, PlayerId::Two));
        let ds = sample_expert_dataset(&game, (&e.0, &e.1), 40, seed).unwrap();
        let mut pol = SoftLinPolicy::zeros(PlayerId::One, 3, 5, r.random_range(0.3..3.0), 10.0).unwrap();
        random_theta(&mut r, &mut pol, 1.5);
        let g = grad_log_likelihood(&pol, &fmap, &ds).unwrap();
        let eps = 1e-6;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for h in 0..3 {
            for i in 0..5 {
                let mut up = pol.clone();
                up.theta[h][i] += eps;
                let mut dn = pol.clone();
                dn.theta[h][i] -= eps;
                let fd = (log_likelihood(&up, &fmap, &ds).unwrap() - log_likelihood(&dn, &fmap, &ds).unwrap()) / (2.0 * eps);
                num += (g[h][i] - fd).powi(2);
                den += fd * fd;
            }
        }
        let rel = num.sqrt() / den.sqrt().max(1e-12);
        assert!(rel <= 1e-5, "seed {seed}: relative error {rel}");
    }
}

#[test]
fn log_likelihood_is_concave_along_lines() {
    let mut r = rng(77);
    let game = random_game(&mut r, 3, [3, 3], 2);
    let fmap = random_features(&mut r, &game, PlayerId::Two, 4);
    let e = (random_policy(&mut r, &game, PlayerId::One), random_policy(&mut r, &game, PlayerId::Two));
    let ds = sample_expert_dataset(&game, (&e.0, &e.1), 50, 5).unwrap();
    for _ in 0..100 {
        let mut a = SoftLinPolicy::zeros(PlayerId::Two, 2, 4, 1.0, 100.0).unwrap();
        let mut b = a.clone();
        random_theta(&mut r, &mut a, 5.0);
        random_theta(&mut r, &mut b, 5.0);
        let t: f64 = r.random();
        let mut m = a.clone();
        for h in 0..2 {
            for i in 0..4 {
                m.theta[h][i] = t * a.theta[h][i] + (1.0 - t) * b.theta[h][i];
            }
        }
        let la = log_likelihood(&a, &fmap, &ds).unwrap();
        let lb = log_likelihood(&b, &fmap, &ds).unwrap();
        let lm = log_likelihood(&m, &fmap, &ds).unwrap();
        assert!(lm >= t * la + (1.0 - t) * lb - 1e-9);
    }
}

#[test]
fn fit_is_a_stationary_point_inside_the_ball() {
    let mut r = rng(8);
    let game = random_game(&mut r, 3, [3, 2], 2);
    let fmap = random_features(&mut r, &game, PlayerId::One, 3);
    let e = (random_policy(&mut r, &game, PlayerId::One), random_policy(&mut r, &game, PlayerId::Two));
    let ds = sample_expert_dataset(&game, (&e.0, &e.1), 300, 1).unwrap();
    let cfg = BcConfig { eta: 1.0, b_theta: Some(1e3), step_size: 1.0, max_epochs: 5000, grad_tolerance: 1e-9 };
    let (pol, rep) = bc_fit(&ds, &fmap, &cfg).unwrap();
    let n = ds.len() as f64;
    let g = grad_log_likelihood(&pol, &fmap, &ds).unwrap();
    let gn = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt() / n;
    assert!(gn < 1e-6, "gradient norm {gn}");
    let ll = log_likelihood(&pol, &fmap, &ds).unwrap();
    assert!((rep.mean_loglik - ll / n).abs() < 1e-9);
    // no random perturbation improves a concave maximum
    for _ in 0..20 {
        let mut q = pol.clone();
        random_theta(&mut r, &mut q, 0.01);
        for h in 0..2 {
            for i in 0..3 {
                q.theta[h][i] += pol.theta[h][i];
            }
        }
        assert!(log_likelihood(&q, &fmap, &ds).unwrap() <= ll + 1e-9);
    }
}

#[test]
fn bc_is_consistent_for_a_realizable_expert() {
    let mut r = rng(21);
    let game = random_game(&mut r, 3, [3, 3], 2);
    let f1 = random_features(&mut r, &game, PlayerId::One, 3);
    let f2 = random_features(&mut r, &game, PlayerId::Two, 3);
    let mut t1 = SoftLinPolicy::zeros(PlayerId::One, 2, 3, 1.0, 100.0).unwrap();
    let mut t2 = SoftLinPolicy::zeros(PlayerId::Two, 2, 3, 1.0, 100.0).unwrap();
    random_theta(&mut r, &mut t1, 2.0);
    random_theta(&mut r, &mut t2, 2.0);
    let e = (t1.to_stage_policy(&f1).unwrap(), t2.to_stage_policy(&f2).unwrap());
    let occ = occupancy(&game, &e.0, &e.1).unwrap();
    let cfg = BcConfig { eta: 1.0, b_theta: Some(100.0), step_size: 1.0, max_epochs: 5000, grad_tolerance: 1e-9 };
    let mut tvs = Vec::new();
    for n in [30, 300, 3000] {
        let ds = sample_expert_dataset(&game, (&e.0, &e.1), n, 4).unwrap();
        let (fit, _) = bc_fit(&ds, &f1, &cfg).unwrap();
        let tv: f64 = expected_tv(&occ, &fit.to_stage_policy(&f1).unwrap(), &e.0).unwrap().iter().map(|s| s.tv).sum();
        tvs.push(tv);
    }
    assert!(tvs[2] < tvs[0], "{tvs:?}");
    assert!(tvs[2] < 0.1, "{tvs:?}");
}

#[test]
fn dataset_state_frequencies_match_occupancy() {
    let mut r = rng(9);
    let game = random_game(&mut r, 3, [2, 2], 3);
    let e = (random_policy(&mut r, &game, PlayerId::One), random_policy(&mut r, &game, PlayerId::Two));
    let n = 20_000;
    let ds = sample_expert_dataset(&game, (&e.0, &e.1), n, 11).unwrap();
    assert_eq!(ds.len(), n * 3);
    assert_eq!(ds.queries, [n * 3, n * 3]);
    let occ = occupancy(&game, &e.0, &e.1).unwrap();
    for h in 0..3 {
        for x in 0..3 {
            let count = ds.samples.iter().filter(|s| s.stage == h && s.state == x).count() as f64;
            let p = occ.stage(h)[x];
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((count - n as f64 * p).abs() <= 3.0 * sd + 1.0, "h={h} x={x}: {count} vs {}", n as f64 * p);
        }
    }
}

#[test]
fn budget_rule() {
    let cfg = BcConfig::for_budget(500, 10);
    assert!((cfg.eta - 500f64.ln() / 10.0).abs() < 1e-15);
    assert!((cfg.radius(10, 288) - 10.0 * 288f64.sqrt()).abs() < 1e-12);
    assert!(BcConfig::for_budget(1, 10).eta > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softlin_policies_are_distributions(seed in any::<u64>(), scale in 0.0f64..50.0, eta in 0.01f64..20.0) {
        let mut r = rng(seed);
        let game = random_game(&mut r, 3, [4, 2], 2);
        let fmap = random_features(&mut r, &game, PlayerId::One, 3);
        let mut pol = SoftLinPolicy::zeros(PlayerId::One, 2, 3, eta, 1e6).unwrap();
        random_theta(&mut r, &mut pol, scale);
        let sp = pol.to_stage_policy(&fmap).unwrap();
        prop_assert!(sp.validate().is_ok());
        for h in 0..2 {
            for x in 0..3 {
                let d = sp.dist(h, x);
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(d.iter().all(|&p| (0.0..=1.0).contains(&p)));
            }
        }
    }
}
