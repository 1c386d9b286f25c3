//! Payment-channel network creation game.
//!
//! Nodes open payment channels (each costing one on-chain fee), route
//! payments along the cheapest channel paths, and earn forwarding fees as
//! intermediaries. The crate evaluates node costs on arbitrary channel
//! graphs, checks Nash equilibria by unilateral deviation, and computes the
//! closed-form fee bands for the path, star, two-star, complete bipartite and
//! clique topologies.

pub mod analytic;
pub mod cli;
pub mod closed_form;
pub mod cost;
pub mod equilibrium;
pub mod feegame;
pub mod model;
pub mod rational;
pub mod routing;
pub mod topology;

mod menger;

pub use model::{FeePolicy, GameParams, NodeId, PaymentScenario, StrategyProfile};
pub use rational::Rational;
