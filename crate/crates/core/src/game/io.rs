use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MarkovGame, PlayerId, StagePolicy};
use crate::error::{Error, Result};
use crate::fmt::{f64_17, mat_17, vec_17};
use crate::Scalar;

pub const GAME_FORMAT: &str = "mail-lab/markov-game";
pub const GAME_VERSION: u32 = 1;

/// One nonzero transition probability `P(next | state, a1, a2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub state: usize,
    pub a1: usize,
    pub a2: usize,
    pub next: usize,
    #[serde(serialize_with = "f64_17")]
    pub p: f64,
}

/// One nonzero reward `r¹(state, a1, a2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardEntry {
    pub state: usize,
    pub a1: usize,
    pub a2: usize,
    #[serde(serialize_with = "f64_17")]
    pub r: f64,
}

/// Versioned JSON form of a [`MarkovGame`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub format: String,
    pub version: u32,
    pub n_states: usize,
    pub actions: [usize; 2],
    pub horizon: usize,
    pub transition: Vec<TransitionEntry>,
    pub reward: Vec<RewardEntry>,
    #[serde(serialize_with = "vec_17")]
    pub initial: Vec<f64>,
}

impl GameDocument {
    pub fn from_game<T: Scalar>(game: &MarkovGame<T>) -> Self {
        let [n1, n2] = game.n_actions();
        let mut transition = Vec::new();
        let mut reward = Vec::new();
        for state in 0..game.n_states() {
            for a1 in 0..n1 {
                for a2 in 0..n2 {
                    for &(next, p) in game.transition(state, a1, a2) {
                        transition.push(TransitionEntry { state, a1, a2, next, p: p.as_f64() });
                    }
                    let r = game.reward(state, a1, a2);
                    if r != T::zero() {
                        reward.push(RewardEntry { state, a1, a2, r: r.as_f64() });
                    }
                }
            }
        }
        Self {
            format: GAME_FORMAT.into(),
            version: GAME_VERSION,
            n_states: game.n_states(),
            actions: game.n_actions(),
            horizon: game.horizon(),
            transition,
            reward,
            initial: game.initial().iter().map(|p| p.as_f64()).collect(),
        }
    }

    pub fn to_game<T: Scalar>(&self) -> Result<MarkovGame<T>> {
        if self.format != GAME_FORMAT || self.version != GAME_VERSION {
            return Err(Error::InvalidGame(format!(
                "unsupported document {} v{}",
                self.format, self.version
            )));
        }
        let [n1, n2] = self.actions;
        let triples = self.n_states * n1 * n2;
        let idx = |s: usize, a1: usize, a2: usize| -> Result<usize> {
            if s >= self.n_states || a1 >= n1 || a2 >= n2 {
                return Err(Error::InvalidGame(format!("entry ({s}, {a1}, {a2}) out of range")));
            }
            Ok((s * n1 + a1) * n2 + a2)
        };
        let mut transitions = vec![Vec::new(); triples];
        for e in &self.transition {
            transitions[idx(e.state, e.a1, e.a2)?].push((e.next, T::lit(e.p)));
        }
        let mut rewards = vec![T::zero(); triples];
        for e in &self.reward {
            rewards[idx(e.state, e.a1, e.a2)?] = T::lit(e.r);
        }
        MarkovGame::new(
            self.n_states,
            self.actions,
            self.horizon,
            transitions,
            rewards,
            self.initial.iter().map(|&p| T::lit(p)).collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// JSON form of a [`StagePolicy`]: one row of action probabilities per
/// `(stage, state)`, stage-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub player: usize,
    pub horizon: usize,
    pub n_states: usize,
    pub n_actions: usize,
    #[serde(serialize_with = "mat_17")]
    pub probs: Vec<Vec<f64>>,
}

impl PolicyDocument {
    pub fn from_policy<T: Scalar>(p: &StagePolicy<T>) -> Self {
        let mut probs = Vec::with_capacity(p.horizon() * p.n_states());
        for h in 0..p.horizon() {
            for x in 0..p.n_states() {
                probs.push(p.dist(h, x).iter().map(|v| v.as_f64()).collect());
            }
        }
        Self {
            player: p.player().number(),
            horizon: p.horizon(),
            n_states: p.n_states(),
            n_actions: p.n_actions(),
            probs,
        }
    }

    pub fn to_policy<T: Scalar>(&self) -> Result<StagePolicy<T>> {
        if self.probs.len() != self.horizon * self.n_states {
            return Err(Error::Dimension(format!(
                "policy document has {} rows, expected {}",
                self.probs.len(),
                self.horizon * self.n_states
            )));
        }
        let player = PlayerId::from_number(self.player)?;
        StagePolicy::from_fn(player, self.horizon, self.n_states, self.n_actions, |h, x, out| {
            let row = &self.probs[h * self.n_states + x];
            for (o, &v) in out.iter_mut().zip(row) {
                *o = T::lit(v);
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let third = 1.0 / 3.0;
        let g = MarkovGame::new(
            2,
            [1, 2],
            3,
            vec![
                vec![(0, third), (1, 1.0 - third)],
                vec![(1, 1.0)],
                vec![(1, 1.0)],
                vec![(0, 0.1), (1, 0.9)],
            ],
            vec![0.25, -1.0, 0.0, 0.7],
            vec![0.3, 0.7],
        )
        .unwrap();
        let doc = GameDocument::from_game(&g);
        let json = doc.to_json().unwrap();
        assert!(json.contains("3.3333333333333331e-1"), "{json}");
        let back = GameDocument::from_json(&json).unwrap();
        assert_eq!(back, doc);
        let g2: MarkovGame<f64> = back.to_game().unwrap();
        assert_eq!(GameDocument::from_game(&g2), doc);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_rows() {
        let json = r#"{"format":"mail-lab/markov-game","version":1,"n_states":1,"actions":[1,1],
            "horizon":1,"transition":[],"reward":[],"initial":[1.0],"extra":0}"#;
        assert!(GameDocument::from_json(json).is_err());
        let json = r#"{"format":"mail-lab/markov-game","version":1,"n_states":1,"actions":[1,1],
            "horizon":1,"transition":[{"state":0,"a1":0,"a2":0,"next":0,"p":0.5}],"reward":[],"initial":[1.0]}"#;
        let doc = GameDocument::from_json(json).unwrap();
        assert!(doc.to_game::<f64>().is_err());
    }
}
