//! Desk-scale environments.

pub mod chain;
pub mod gridworld;
pub mod tictactoe;

pub use chain::Chain;
pub use gridworld::{Cell, Gridworld};
pub use tictactoe::{Board, Outcome, TicTacToe};
