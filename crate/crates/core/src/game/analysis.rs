use super::{MarkovGame, OccupancyTable, PlayerId, StagePolicy, ValueTable};
use crate::error::{dim_err, Error, Result};
use crate::Scalar;

fn check_profile<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
) -> Result<()> {
    p1.check_shape(game, PlayerId::One)?;
    p2.check_shape(game, PlayerId::Two)
}

/// Forward recursion for the state visitation distribution at every stage.
pub fn occupancy<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
) -> Result<OccupancyTable<T>> {
    check_profile(game, p1, p2)?;
    Ok(OccupancyTable { state_occ: forward(game, p1, p2, false).0, joint_occ: None })
}

/// Like [`occupancy`] but also materializes `μ_h(x, a¹, a²)`.
pub fn joint_occupancy<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
) -> Result<OccupancyTable<T>> {
    check_profile(game, p1, p2)?;
    let (state_occ, joint) = forward(game, p1, p2, true);
    Ok(OccupancyTable { state_occ, joint_occ: Some(joint) })
}

fn forward<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
    keep_joint: bool,
) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let (nx, [n1, n2], horizon) = (game.n_states(), game.n_actions(), game.horizon());
    let mut states = Vec::with_capacity(horizon);
    let mut joints = Vec::new();
    let mut cur = game.initial().to_vec();
    for h in 0..horizon {
        let mut next = vec![T::zero(); nx];
        let mut joint = if keep_joint { vec![T::zero(); nx * n1 * n2] } else { Vec::new() };
        for x in 0..nx {
            let mass = cur[x];
            if mass == T::zero() {
                continue;
            }
            let d1 = p1.dist(h, x);
            let d2 = p2.dist(h, x);
            for a1 in 0..n1 {
                if d1[a1] == T::zero() {
                    continue;
                }
                for a2 in 0..n2 {
                    let w = mass * d1[a1] * d2[a2];
                    if w == T::zero() {
                        continue;
                    }
                    if keep_joint {
                        joint[game.triple(x, a1, a2)] = w;
                    }
                    for &(y, p) in game.transition(x, a1, a2) {
                        next[y] += w * p;
                    }
                }
            }
        }
        states.push(std::mem::replace(&mut cur, next));
        if keep_joint {
            joints.push(joint);
        }
    }
    (states, joints)
}

/// `Q_{n,h}(x, a)` for every state and own action, marginalized over the
/// opponent's stage-`h` policy, given `V_{n,h+1}`.
pub(crate) fn marginal_q<T: Scalar>(
    game: &MarkovGame<T>,
    opponent: &StagePolicy<T>,
    player: PlayerId,
    h: usize,
    v_next: &[T],
) -> Vec<T> {
    let (nx, [n1, n2]) = (game.n_states(), game.n_actions());
    let own = game.actions_of(player);
    let sign = player.sign::<T>();
    let mut q = vec![T::zero(); nx * own];
    for x in 0..nx {
        let opp = opponent.dist(h, x);
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                let (mine, theirs) = match player {
                    PlayerId::One => (a1, a2),
                    PlayerId::Two => (a2, a1),
                };
                let w = opp[theirs];
                if w == T::zero() {
                    continue;
                }
                let cont: T =
                    game.transition(x, a1, a2).iter().map(|&(y, p)| p * v_next[y]).sum();
                q[x * own + mine] += w * (sign * game.reward(x, a1, a2) + cont);
            }
        }
    }
    q
}

/// Backward recursion for one player's state and action values under a
/// fixed profile.
pub fn evaluate<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
    player: PlayerId,
) -> Result<ValueTable<T>> {
    check_profile(game, p1, p2)?;
    let (own_policy, opponent) = match player {
        PlayerId::One => (p1, p2),
        PlayerId::Two => (p2, p1),
    };
    let (nx, horizon, own) = (game.n_states(), game.horizon(), game.actions_of(player));
    let mut v = vec![vec![T::zero(); nx]; horizon + 1];
    let mut q = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        let qh = marginal_q(game, opponent, player, h, &v[h + 1]);
        for x in 0..nx {
            let d = own_policy.dist(h, x);
            v[h][x] = (0..own).map(|a| d[a] * qh[x * own + a]).sum();
        }
        q[h] = qh;
    }
    Ok(ValueTable { player, n_actions: own, v, q })
}

/// Deterministic best response of `player` against a fixed `opponent`,
/// with ties broken toward the lowest action index.
pub fn best_response<T: Scalar>(
    game: &MarkovGame<T>,
    opponent: &StagePolicy<T>,
    player: PlayerId,
) -> Result<(StagePolicy<T>, ValueTable<T>)> {
    opponent.check_shape(game, player.other())?;
    let (nx, horizon, own) = (game.n_states(), game.horizon(), game.actions_of(player));
    let tie = T::tol(1e-12);
    let mut v = vec![vec![T::zero(); nx]; horizon + 1];
    let mut q = vec![Vec::new(); horizon];
    let mut choice = vec![0usize; horizon * nx];
    for h in (0..horizon).rev() {
        let qh = marginal_q(game, opponent, player, h, &v[h + 1]);
        for x in 0..nx {
            let row = &qh[x * own..(x + 1) * own];
            let mut best = 0;
            for a in 1..own {
                if row[a] > row[best] + tie {
                    best = a;
                }
            }
            choice[h * nx + x] = best;
            v[h][x] = row[best];
        }
        q[h] = qh;
    }
    let policy = StagePolicy::deterministic(player, horizon, nx, own, |h, x| choice[h * nx + x])?;
    Ok((policy, ValueTable { player, n_actions: own, v, q }))
}

/// Per-player exploitability `⟨ν₁, V_n^{br, π⁻ⁿ} − V_n^{π}⟩`, unclamped.
pub fn nash_gap_parts<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
) -> Result<[T; 2]> {
    check_profile(game, p1, p2)?;
    let init = game.initial();
    let v1 = evaluate(game, p1, p2, PlayerId::One)?.initial_value(init);
    let (_, br1) = best_response(game, p2, PlayerId::One)?;
    let (_, br2) = best_response(game, p1, PlayerId::Two)?;
    // zero-sum: V_2 = −V_1
    Ok([br1.initial_value(init) - v1, br2.initial_value(init) + v1])
}

/// Nash gap (exploitability) of a profile.
///
/// Values in `[−1e-9, 0)` are floating point noise and clamp to zero;
/// anything lower is reported as [`Error::NegativeGap`].
pub fn nash_gap<T: Scalar>(
    game: &MarkovGame<T>,
    p1: &StagePolicy<T>,
    p2: &StagePolicy<T>,
) -> Result<T> {
    let parts = nash_gap_parts(game, p1, p2)?;
    let floor = -T::tol(1e-9);
    for (i, &g) in parts.iter().enumerate() {
        if g < floor {
            return Err(Error::NegativeGap { player: i + 1, gap: g.as_f64() });
        }
    }
    Ok(parts[0].max(parts[1]).max(T::zero()))
}

/// Occupancy-weighted total variation between two policies of one player
/// at a single stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTv<T> {
    /// `Σ_x ν_h(x) · Σ_a |p − q|`
    pub tv: T,
    /// `Σ_x ν_h(x) · (Σ_a |p − q|)²`
    pub tv_sq: T,
}

/// Expected total variation per stage. TV is the plain sum of absolute
/// differences, so disjoint distributions are at distance 2.
pub fn expected_tv<T: Scalar>(
    weights: &OccupancyTable<T>,
    p: &StagePolicy<T>,
    q: &StagePolicy<T>,
) -> Result<Vec<StageTv<T>>> {
    if p.player() != q.player()
        || p.n_states() != q.n_states()
        || p.n_actions() != q.n_actions()
        || p.horizon() != q.horizon()
    {
        return dim_err("expected_tv needs two policies of the same player and shape");
    }
    if weights.horizon() != p.horizon() {
        return dim_err("occupancy horizon differs from policy horizon");
    }
    Ok((0..p.horizon())
        .map(|h| {
            let mut tv = T::zero();
            let mut tv_sq = T::zero();
            for (x, &w) in weights.stage(h).iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                let d: T = p
                    .dist(h, x)
                    .iter()
                    .zip(q.dist(h, x))
                    .map(|(&a, &b)| (a - b).abs())
                    .sum();
                tv += w * d;
                tv_sq += w * d * d;
            }
            StageTv { tv, tv_sq }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MarkovGame;

    fn one_state(reward: [[f64; 2]; 2], horizon: usize) -> MarkovGame<f64> {
        let mut tr = Vec::new();
        let mut rw = Vec::new();
        for a1 in 0..2 {
            for a2 in 0..2 {
                tr.push(vec![(0, 1.0)]);
                rw.push(reward[a1][a2]);
            }
        }
        MarkovGame::new(1, [2, 2], horizon, tr, rw, vec![1.0]).unwrap()
    }

    #[test]
    fn single_state_occupancy_is_degenerate() {
        let g = one_state([[1.0, 0.0], [0.0, -1.0]], 4);
        let p1 = StagePolicy::uniform_for(&g, PlayerId::One);
        let p2 = StagePolicy::uniform_for(&g, PlayerId::Two);
        let occ = occupancy(&g, &p1, &p2).unwrap();
        assert!(occ.state_occ.iter().all(|s| s[0] == 1.0));
    }

    #[test]
    fn null_game_has_zero_value() {
        let g = one_state([[0.0; 2]; 2], 3);
        let p1 = StagePolicy::uniform_for(&g, PlayerId::One);
        let p2 = StagePolicy::uniform_for(&g, PlayerId::Two);
        let v = evaluate(&g, &p1, &p2, PlayerId::One).unwrap();
        assert!(v.v.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn matching_pennies_repeated() {
        let g = one_state([[1.0, -1.0], [-1.0, 1.0]], 3);
        let p1 = StagePolicy::uniform_for(&g, PlayerId::One);
        let p2 = StagePolicy::uniform_for(&g, PlayerId::Two);
        assert!(nash_gap(&g, &p1, &p2).unwrap().abs() < 1e-12);
        let pure = StagePolicy::deterministic(PlayerId::One, 3, 1, 2, |_, _| 0).unwrap();
        // opponent best-responds every stage: gain 1 per stage
        assert!((nash_gap(&g, &pure, &p2).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = one_state([[0.0; 2]; 2], 3);
        let bad = StagePolicy::<f64>::uniform(PlayerId::One, 2, 1, 2);
        let p2 = StagePolicy::uniform_for(&g, PlayerId::Two);
        assert!(matches!(occupancy(&g, &bad, &p2), Err(Error::Dimension(_))));
        assert!(matches!(occupancy(&g, &p2, &p2), Err(Error::Dimension(_))));
    }

    #[test]
    fn tv_conventions() {
        let g = one_state([[0.0; 2]; 2], 1);
        let p = StagePolicy::deterministic(PlayerId::One, 1, 1, 2, |_, _| 0).unwrap();
        let q = StagePolicy::deterministic(PlayerId::One, 1, 1, 2, |_, _| 1).unwrap();
        let u = StagePolicy::uniform_for(&g, PlayerId::Two);
        let occ = occupancy(&g, &p, &u).unwrap();
        let tv = expected_tv(&occ, &p, &q).unwrap();
        assert_eq!(tv[0].tv, 2.0);
        assert_eq!(tv[0].tv_sq, 4.0);
        assert_eq!(expected_tv(&occ, &p, &p).unwrap()[0].tv, 0.0);
    }

    #[test]
    fn action_irrelevant_game_any_policy_is_best_response() {
        // player 1's action changes nothing
        let g = one_state([[0.5, -0.5], [0.5, -0.5]], 2);
        let p2 = StagePolicy::deterministic(PlayerId::Two, 2, 1, 2, |h, _| h % 2).unwrap();
        let (_, br) = best_response(&g, &p2, PlayerId::One).unwrap();
        let arbitrary = StagePolicy::deterministic(PlayerId::One, 2, 1, 2, |_, _| 1).unwrap();
        let v = evaluate(&g, &arbitrary, &p2, PlayerId::One).unwrap();
        assert!((br.initial_value(g.initial()) - v.initial_value(g.initial())).abs() < 1e-15);
    }
}
