//! The core runs unchanged in single precision.

use mail_core::envs::{Chain, Gridworld};
use mail_core::equilibrium::{matrix_maximin, solve_nash, PayoffMatrix};
use mail_core::exploration::{lsvi_ucb_zero, ExplorationConfig};
use mail_core::features::tabular_features;
use mail_core::game::nash_gap;
use mail_core::imitation::{bc_fit, sample_expert_dataset, BcConfig};
use mail_core::PlayerId;

#[test]
fn gridworld_equilibrium_in_f32() {
    let g = Gridworld::new(6).unwrap();
    let game = g.game::<f32>();
    let eq = solve_nash(&game).unwrap();
    assert!(nash_gap(&game, eq.player1(), eq.player2()).unwrap() <= 1e-5);
    assert!(eq.value(game.initial()).abs() <= 1e-6);
    let ours = g.game::<f64>();
    let wide = solve_nash(&ours).unwrap();
    assert_eq!(game.cast::<f64>().unwrap().n_states(), ours.n_states());
    assert!((eq.value(game.initial()) as f64 - wide.value(ours.initial())).abs() < 1e-6);
}

#[test]
fn matrix_game_in_f32() {
    let a = PayoffMatrix::<f32>::from_rows(&[vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]).unwrap();
    let sol = matrix_maximin(&a).unwrap();
    assert!(sol.value.abs() < 1e-6);
    assert!(sol.row_strategy.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-5));
}

#[test]
fn bc_and_exploration_in_f32() {
    let c = Chain::new(4).unwrap();
    let game = c.game::<f32>();
    let eq = solve_nash(&game).unwrap();
    let f2 = tabular_features(&game, PlayerId::Two);
    let ds = sample_expert_dataset(&game, (eq.player1(), eq.player2()), 50, 1).unwrap();
    let (pol, rep) = bc_fit(&ds, &f2, &BcConfig::for_budget(50, game.horizon())).unwrap();
    assert!(rep.mean_loglik <= 0.0);
    assert!(pol.to_stage_policy(&f2).unwrap().validate().is_ok());
    let cfg = ExplorationConfig::new(30).with_beta(3.0);
    let t = lsvi_ucb_zero(&game, (eq.player1(), eq.player2()), PlayerId::One, &f2, &cfg, 2).unwrap();
    assert_eq!(t.n_episodes(), 30);
    assert!(t.q_range.1 <= game.horizon() as f32);
}
