mod common;

use mail_core::envs::tictactoe::{EMPTY, O, SYMMETRIES, X};
use mail_core::envs::{Board, Cell, Chain, Gridworld, Outcome, TicTacToe};
use mail_core::equilibrium::solve_nash;
use mail_core::game::nash_gap;
use mail_core::PlayerId;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn ttt() -> &'static TicTacToe {
    static T: OnceLock<TicTacToe> = OnceLock::new();
    T.get_or_init(TicTacToe::new)
}

fn ttt_game() -> &'static mail_core::Game {
    static G: OnceLock<mail_core::Game> = OnceLock::new();
    G.get_or_init(|| ttt().game())
}

/// Reflection through the anti-diagonal: it fixes the goal and swaps the
/// two start cells.
fn reflect(c: Cell) -> Cell {
    Cell::new(2 - c.col, 2 - c.row)
}

#[test]
fn gridworld_is_fair_under_role_swap() {
    let g = Gridworld::new(10).unwrap();
    let [s1, s2] = g.start();
    assert_eq!((reflect(s1), reflect(s2)), (s2, s1));
    assert_eq!(reflect(g.goal()), g.goal());
    let game = g.game::<f64>();
    let eq = solve_nash(&game).unwrap();
    for h in 0..game.horizon() {
        for x in 0..g.terminal() {
            let [p1, p2] = g.decode(x).unwrap();
            let y = g.encode(reflect(p2), reflect(p1)).unwrap();
            let (a, b) = (eq.stage_values[h][x], eq.stage_values[h][y]);
            assert!((a + b).abs() < 1e-9, "h={h} x={x}: {a} vs {b}");
        }
    }
    assert!(eq.stage_values[0][g.start_state()].abs() < 1e-12);
}

#[test]
fn gridworld_rows_are_deterministic() {
    let g = Gridworld::new(6).unwrap();
    let game = g.game::<f64>();
    for x in 0..game.n_states() {
        for a1 in 0..4 {
            for a2 in 0..4 {
                let row = game.transition(x, a1, a2);
                assert_eq!(row.len(), 1);
                assert_eq!(row[0].1, 1.0);
                assert_eq!(g.transition(x, a1, a2).unwrap().0, row[0].0);
            }
        }
    }
    assert!(game.is_null_absorbing(g.terminal()));
}

#[test]
fn gridworld_decode_inverts_encode() {
    let g = Gridworld::new(5).unwrap();
    for x in 0..g.terminal() {
        let [a, b] = g.decode(x).unwrap();
        assert_ne!(a, b);
        assert_eq!(g.encode(a, b), Some(x));
    }
    assert!(g.decode(g.terminal()).is_err());
    assert!(Gridworld::new(4).is_err());
}

#[test]
fn tictactoe_expert_never_loses_to_random() {
    let t = ttt();
    let expert = |b: &Board| t.expert_move(b).unwrap();
    assert_eq!(t.play_out(expert, expert), Outcome::Draw);
    for g in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(g);
        let mut random = |b: &Board| *b.legal_moves().collect::<Vec<_>>().choose(&mut rng).unwrap();
        if g % 2 == 0 {
            assert_ne!(t.play_out(expert, &mut random), Outcome::OWins, "game {g}");
        } else {
            assert_ne!(t.play_out(&mut random, expert), Outcome::XWins, "game {g}");
        }
    }
}

#[test]
fn tictactoe_tables() {
    let t = ttt();
    assert_eq!(t.n_states(), 5478);
    assert_eq!(t.canonical_table_size(), 765);
    assert_eq!(t.value(&Board::EMPTY), Some(0));
    let game = t.game::<f64>();
    let (e1, e2) = t.minimax_expert::<f64>();
    assert!(nash_gap(&game, &e1, &e2).unwrap() <= 1e-9);
}

/// Random legal board reached by `moves` random plies.
fn random_board(seed: u64, moves: usize) -> Board {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Board::EMPTY;
    for _ in 0..moves {
        if b.is_terminal() {
            break;
        }
        let m = *b.legal_moves().collect::<Vec<_>>().choose(&mut rng).unwrap();
        b = b.play(m);
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonicalization_is_idempotent_and_invariant(seed in any::<u64>(), moves in 0usize..9, g in 0usize..8) {
        let b = random_board(seed, moves);
        let c = b.canonicalize();
        prop_assert_eq!(c.canonicalize(), c);
        prop_assert_eq!(b.transform(g).canonicalize(), c);
        prop_assert_eq!(ttt().value(&b.transform(g)), ttt().value(&b));
    }

    #[test]
    fn expert_move_is_legal_and_value_preserving(seed in any::<u64>(), moves in 0usize..8) {
        let b = random_board(seed, moves);
        prop_assume!(!b.is_terminal());
        let t = ttt();
        let m = t.expert_move(&b).unwrap();
        prop_assert_eq!(b.cells[m], EMPTY);
        prop_assert_eq!(t.value(&b.play(m)), t.value(&b));
    }

    #[test]
    fn turn_based_embedding_ignores_the_waiting_player(seed in any::<u64>(), moves in 0usize..9, a1 in 0usize..9, a2 in 0usize..9, other in 0usize..9) {
        let t = ttt();
        let game = ttt_game();
        let b = random_board(seed, moves);
        let x = t.state_of(&b).unwrap();
        let row = game.transition(x, a1, a2);
        prop_assert_eq!(row.len(), 1);
        if b.is_terminal() {
            prop_assert_eq!(row[0].0, x);
            prop_assert!(game.is_null_absorbing(x));
        } else {
            let (mine, swapped) = match b.mover() {
                PlayerId::One => (a1, game.transition(x, a1, other)),
                PlayerId::Two => (a2, game.transition(x, other, a2)),
            };
            prop_assert_eq!(row, swapped);
            prop_assert_eq!(t.board(row[0].0).unwrap(), &b.play(mine));
        }
    }
}

#[test]
fn symmetries_form_a_group_of_permutations() {
    for s in SYMMETRIES {
        let mut seen = [false; 9];
        s.iter().for_each(|&i| seen[i] = true);
        assert!(seen.iter().all(|&v| v));
    }
    let b = Board::new([X, EMPTY, EMPTY, EMPTY, O, EMPTY, EMPTY, EMPTY, EMPTY]).unwrap();
    let images: std::collections::BTreeSet<u32> = (0..8).map(|g| b.transform(g).code()).collect();
    assert_eq!(images.len(), 4);
}

#[test]
fn chain_needs_the_one_advancing_sequence() {
    for len in [2, 5, 8] {
        let c = Chain::new(len).unwrap();
        let mut x = c.start_state();
        for _ in 0..len - 1 {
            x = c.next(x, c.advancing_action(x));
        }
        assert_eq!(x, c.end_state());
        let mut y = c.start_state();
        y = c.next(y, 1 - c.advancing_action(y));
        assert_eq!(y, 0);
        assert_eq!(c.next(c.end_state(), 0), c.end_state());
    }
    assert!(Chain::new(1).is_err());
}
