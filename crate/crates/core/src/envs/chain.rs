//! Hard-exploration chain controlled by player 2.
//!
//! States `0..=L`; play starts in state 1 and lasts `L` stages. In state `i`
//! action `i mod 2` advances to `i + 1` and the other action falls back to
//! state 0, so only one action sequence reaches `L` in time. State `L`
//! absorbs, and there player 1 loses a point for playing action 1, which
//! makes it the only state where player 1's behavior matters.

use crate::error::{arg_err, Result};
use crate::game::MarkovGame;
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct Chain {
    length: usize,
}

impl Chain {
    pub fn new(length: usize) -> Result<Self> {
        if length < 2 {
            return arg_err(format!("chain length must be at least 2, got {length}"));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn n_states(&self) -> usize {
        self.length + 1
    }

    pub fn end_state(&self) -> usize {
        self.length
    }

    pub fn start_state(&self) -> usize {
        1
    }

    /// The action of the controlling player that advances from `x`.
    pub fn advancing_action(&self, x: usize) -> usize {
        x % 2
    }

    pub fn next(&self, x: usize, a2: usize) -> usize {
        if x == self.length {
            x
        } else if a2 == self.advancing_action(x) {
            x + 1
        } else {
            0
        }
    }

    pub fn game<T: Scalar>(&self) -> MarkovGame<T> {
        let ns = self.n_states();
        let mut transitions = Vec::with_capacity(ns * 4);
        let mut rewards = Vec::with_capacity(ns * 4);
        for x in 0..ns {
            for a1 in 0..2 {
                for a2 in 0..2 {
                    transitions.push(vec![(self.next(x, a2), T::one())]);
                    let r = if x == self.length && a1 == 1 { -T::one() } else { T::zero() };
                    rewards.push(r);
                }
            }
        }
        let mut initial = vec![T::zero(); ns];
        initial[self.start_state()] = T::one();
        MarkovGame::new(ns, [2, 2], self.length, transitions, rewards, initial)
            .expect("chain tables are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{occupancy, PlayerId, StagePolicy};

    fn completion_probability(len: usize) -> f64 {
        let c = Chain::new(len).unwrap();
        let g = c.game::<f64>();
        let u1 = StagePolicy::uniform_for(&g, PlayerId::One);
        let u2 = StagePolicy::uniform_for(&g, PlayerId::Two);
        let occ = occupancy(&g, &u1, &u2).unwrap();
        occ.stage(g.horizon() - 1)[c.end_state()]
    }

    #[test]
    fn uniform_completion_probability() {
        assert!((completion_probability(8) - 2f64.powi(-7)).abs() < 1e-15);
        assert!((completion_probability(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn advancing_policy_reaches_end_in_l_minus_one_steps() {
        let c = Chain::new(8).unwrap();
        let mut x = c.start_state();
        let mut steps = 0;
        while x != c.end_state() {
            x = c.next(x, c.advancing_action(x));
            steps += 1;
        }
        assert_eq!(steps, 7);
    }
}
