//! Name resolution for environments, feature maps, experts and algorithms.

use mail_core::envs::{Chain, Gridworld, TicTacToe};
use mail_core::equilibrium::{mix_equilibria, qre_policy, solve_nash_with, SolveOptions};
use mail_core::features::{constant_features, relational_features, tabular_features, CustomFeatureDocument};
use mail_core::{Features, Game, PlayerId, Policy};

use crate::config::Call;
use crate::error::LabError;

pub const ENVS: &[&str] = &["gridworld{h}", "chain{len}", "tictactoe"];
pub const FEATURE_MAPS: &[&str] = &["tabular", "relational", "constant{c}", "custom{path}"];
pub const EXPERTS: &[&str] = &["nash{pure_first}", "nash-mixture{k,weights}", "qre{eta}"];
pub const ALGORITHMS: &[&str] = &["bc", "lsvi-ucb-zero-bc", "uniform-explore-bc"];

fn unknown(kind: &str, name: &str, registered: &[&str]) -> LabError {
    LabError::Config(format!("unknown {kind} {name:?}; registered: {}", registered.join(", ")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvSpec {
    Gridworld { horizon: usize },
    Chain { length: usize },
    TicTacToe,
}

impl EnvSpec {
    pub fn parse(s: &str) -> Result<Self, LabError> {
        let c = Call::parse(s)?;
        match c.name.as_str() {
            "gridworld" => {
                c.expect_keys(&["h"])?;
                Ok(Self::Gridworld { horizon: c.get("h")?.unwrap_or(10) })
            }
            "chain" => {
                c.expect_keys(&["len"])?;
                Ok(Self::Chain { length: c.get("len")?.unwrap_or(8) })
            }
            "tictactoe" => {
                c.expect_keys(&[])?;
                Ok(Self::TicTacToe)
            }
            other => Err(unknown("environment", other, ENVS)),
        }
    }

    pub fn build(self) -> Result<Env, LabError> {
        let env = match self {
            Self::Gridworld { horizon } => {
                let g = Gridworld::new(horizon)?;
                Env { game: g.game(), kind: EnvKind::Gridworld(g) }
            }
            Self::Chain { length } => {
                let c = Chain::new(length)?;
                Env { game: c.game(), kind: EnvKind::Chain(c) }
            }
            Self::TicTacToe => {
                let t = TicTacToe::new();
                Env { game: t.game(), kind: EnvKind::TicTacToe(Box::new(t)) }
            }
        };
        Ok(env)
    }
}

#[derive(Debug, Clone)]
pub enum EnvKind {
    Gridworld(Gridworld),
    Chain(Chain),
    TicTacToe(Box<TicTacToe>),
}

#[derive(Debug, Clone)]
pub struct Env {
    pub game: Game,
    pub kind: EnvKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSpec {
    Tabular,
    Relational,
    Constant { c: f64 },
    Custom { path: String },
}

impl FeatureSpec {
    pub fn parse(s: &str) -> Result<Self, LabError> {
        let c = Call::parse(s)?;
        match c.name.as_str() {
            "tabular" => c.expect_keys(&[]).map(|_| Self::Tabular),
            "relational" => c.expect_keys(&[]).map(|_| Self::Relational),
            "constant" => {
                c.expect_keys(&["c"])?;
                Ok(Self::Constant { c: c.get("c")?.unwrap_or(1.0) })
            }
            "custom" => {
                c.expect_keys(&["path"])?;
                Ok(Self::Custom { path: c.require("path")? })
            }
            other => Err(unknown("feature map", other, FEATURE_MAPS)),
        }
    }

    /// One map per player, indexed by player.
    pub fn build(&self, env: &Env) -> Result<[Features; 2], LabError> {
        let one = |player: PlayerId| -> Result<Features, LabError> {
            Ok(match self {
                Self::Tabular => tabular_features(&env.game, player),
                Self::Relational => match &env.kind {
                    EnvKind::Gridworld(g) => relational_features(g, player)?,
                    _ => return Err(LabError::Config("relational features exist only for gridworld".into())),
                },
                Self::Constant { c } => constant_features(*c, &env.game, player)?,
                Self::Custom { path } => CustomFeatureDocument::read(path)?.to_map(&env.game, player)?,
            })
        };
        Ok([one(PlayerId::One)?, one(PlayerId::Two)?])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpertSpec {
    /// `pure_first` (default true) takes a pure saddle point of each stage
    /// game whenever one exists.
    Nash { pure_first: bool },
    Mixture { k: usize, weights: Option<Vec<f64>> },
    Qre { eta: f64 },
}

impl ExpertSpec {
    pub fn parse(s: &str) -> Result<Self, LabError> {
        let c = Call::parse(s)?;
        match c.name.as_str() {
            "nash" => {
                c.expect_keys(&["pure_first"])?;
                Ok(Self::Nash { pure_first: c.get("pure_first")?.unwrap_or(true) })
            }
            "nash-mixture" => {
                c.expect_keys(&["k", "weights"])?;
                let k: usize = c.require("k")?;
                if k == 0 {
                    return Err(LabError::Config("nash-mixture needs k >= 1".into()));
                }
                let weights = match c.params.get("weights") {
                    None => None,
                    Some(w) => {
                        let ws = w
                            .split(':')
                            .map(|t| t.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| LabError::Config(format!("cannot parse mixture weights {w:?}")))?;
                        if ws.len() != k {
                            return Err(LabError::Config(format!("{} mixture weights for k={k}", ws.len())));
                        }
                        Some(ws)
                    }
                };
                Ok(Self::Mixture { k, weights })
            }
            "qre" => {
                c.expect_keys(&["eta"])?;
                Ok(Self::Qre { eta: c.require("eta")? })
            }
            other => Err(unknown("expert", other, EXPERTS)),
        }
    }

    pub fn is_equilibrium(&self) -> bool {
        matches!(self, Self::Nash { .. })
    }

    /// Builds the expert profile. By default `nash` prefers pure saddle
    /// points, so on Gridworld and the chain the expert is deterministic; on
    /// Tic-Tac-Toe it is the minimax table.
    pub fn build(&self, env: &Env) -> Result<(Policy, Policy), LabError> {
        let pure = SolveOptions { pure_first: true, permutation_seed: None };
        match self {
            Self::Nash { pure_first } => match &env.kind {
                EnvKind::TicTacToe(t) => Ok(t.minimax_expert()),
                _ => {
                    let opts = SolveOptions { pure_first: *pure_first, permutation_seed: None };
                    Ok(solve_nash_with(&env.game, &opts)?.profile)
                }
            },
            Self::Mixture { k, weights } => {
                let profiles = (0..*k as u64)
                    .map(|s| {
                        let opts = SolveOptions { pure_first: true, permutation_seed: Some(s) };
                        solve_nash_with(&env.game, &opts)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let w = weights.clone().unwrap_or_else(|| vec![1.0 / *k as f64; *k]);
                Ok(mix_equilibria(&env.game, &profiles, &w)?.profile)
            }
            Self::Qre { eta } => Ok(qre_policy(&solve_nash_with(&env.game, &pure)?, *eta)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bc,
    LsviUcbZeroBc,
    UniformExploreBc,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self, LabError> {
        match s.trim() {
            "bc" => Ok(Self::Bc),
            "lsvi-ucb-zero-bc" => Ok(Self::LsviUcbZeroBc),
            "uniform-explore-bc" => Ok(Self::UniformExploreBc),
            other => Err(unknown("algorithm", other, ALGORITHMS)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bc => "bc",
            Self::LsviUcbZeroBc => "lsvi-ucb-zero-bc",
            Self::UniformExploreBc => "uniform-explore-bc",
        }
    }

    pub fn is_interactive(self) -> bool {
        !matches!(self, Self::Bc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_registered_names() {
        assert_eq!(EnvSpec::parse("gridworld{h=12}").unwrap(), EnvSpec::Gridworld { horizon: 12 });
        assert_eq!(EnvSpec::parse("chain{len=8}").unwrap(), EnvSpec::Chain { length: 8 });
        assert_eq!(EnvSpec::parse("tictactoe{}").unwrap(), EnvSpec::TicTacToe);
        assert_eq!(FeatureSpec::parse("constant{c=0.5}").unwrap(), FeatureSpec::Constant { c: 0.5 });
        assert_eq!(
            ExpertSpec::parse("nash-mixture{k=2,weights=0.25:0.75}").unwrap(),
            ExpertSpec::Mixture { k: 2, weights: Some(vec![0.25, 0.75]) }
        );
        assert_eq!(Algorithm::parse("uniform-explore-bc").unwrap(), Algorithm::UniformExploreBc);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(EnvSpec::parse("gridworld{len=10}").is_err());
        assert!(EnvSpec::parse("chain{len=x}").is_err());
        assert!(ExpertSpec::parse("nash-mixture{k=2,weights=1}").is_err());
        assert!(ExpertSpec::parse("qre").is_err());
        assert!(FeatureSpec::parse("custom").is_err());
        assert!(Algorithm::parse("dagger").is_err());
    }

    #[test]
    fn relational_needs_gridworld() {
        let env = EnvSpec::Chain { length: 4 }.build().unwrap();
        assert!(FeatureSpec::Relational.build(&env).is_err());
        let env = EnvSpec::Gridworld { horizon: 10 }.build().unwrap();
        let [f1, f2] = FeatureSpec::Relational.build(&env).unwrap();
        assert_eq!((f1.dim(), f2.dim()), (80, 80));
    }

    #[test]
    fn experts_build() {
        let env = EnvSpec::Chain { length: 3 }.build().unwrap();
        for s in ["nash", "nash{pure_first=false}", "nash-mixture{k=2}", "qre{eta=2.0}"] {
            let (p1, p2) = ExpertSpec::parse(s).unwrap().build(&env).unwrap();
            assert_eq!((p1.player(), p2.player()), (PlayerId::One, PlayerId::Two));
        }
    }
}
