//! Learn the STRIPS action model of a black-box agent by asking it
//! plan-outcome queries.
//!
//! The agent answers a query (initial state, plan) with the length of the
//! longest executable plan prefix and the state it ends in. The
//! [`interrogation`] driver walks a lattice of partial models, uses the
//! [`query_gen`] compilation and the [`planner`] to find plans on which two
//! candidate models disagree, and keeps only candidates that agree with the
//! agent.

pub mod agent;
pub mod cli;
pub mod domains;
pub mod interrogation;
pub mod model_space;
pub mod pddl;
pub mod planner;
pub mod query_gen;
