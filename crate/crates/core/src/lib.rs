//! Type-based interaction in stochastic Bayesian games.
//!
//! The crate is organised around a small game model ([`sbg`]), a pure
//! [`Behaviour`] abstraction for hypothesised and true player types, and the
//! machinery built on top of it:
//!
//! - [`beliefs`]: product, sum and correlated posteriors plus overlap and
//!   stochasticity diagnostics.
//! - [`planner`]: the HBA expectimax planner and agent.
//! - [`priors`]: ten automatic prior-belief methods and a dense simplex solver.
//! - [`games78`]: the catalogue of strictly ordinal 2x2 games and slice metrics.
//! - [`hyptest`]: online behavioural hypothesis testing with skew-normal fits.
//! - [`bisim`]: labelled Markov chains, termination probabilities and
//!   probabilistic bisimulation.
//! - [`harness`]: seeded experiment drivers and dataset emission.

pub mod behaviours;
pub mod beliefs;
pub mod bisim;
pub mod error;
pub mod games78;
pub mod harness;
pub mod hyptest;
pub mod planner;
pub mod priors;
pub mod rng;
pub mod sbg;

pub use behaviours::{Behaviour, BehaviourRef, BehaviourSpec};
pub use beliefs::{BeliefState, Posterior, PosteriorMode};
pub use error::{Error, Result};
pub use planner::{HbaAgent, PlannerConfig};
pub use rng::Streams;
pub use sbg::{Action, Game, History, StateId, TypeDistribution, TypeKind};
