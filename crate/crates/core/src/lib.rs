//! Probabilistic signal temporal logic (PrSTL) over per-target grid beliefs,
//! with a beam-search receding-horizon planner for a fixed-wing UAV.
//!
//! - [`formula`]: abstract syntax, parser, printer and horizon.
//! - [`semantics`]: probabilities of event formulas and truth of instance
//!   formulas over runs.
//! - [`belief`]: grid Bayes filter for target positions.
//! - [`world`]: unicycle dynamics, camera model and simulated targets.
//! - [`planner`]: N-best beam search over control sequences.
//! - [`sim`]: scenarios, the closed loop, traces, monitoring and plots.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod cli;
pub mod formula;
pub mod planner;
pub mod semantics;
pub mod sim;
pub mod world;
