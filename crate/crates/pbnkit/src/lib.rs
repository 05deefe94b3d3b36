//! Probabilistic Boolean Network (PBN) toolkit: model PBNs, translate them
//! to exact Markov chains and decision processes, verify bounded
//! reachability and cumulative-reward properties, and cross-check the exact
//! engines with a seeded Monte Carlo simulator.
//!
//! The crate ships a four-node Intelligent Power Router reliability model
//! (module [`ipr`]) together with a textual model language and a small
//! property language (module [`modelfmt`]).

pub mod expr;
pub mod pbn;

pub use expr::BoolExpr;
pub use pbn::{Pbn, Perturb, State};
