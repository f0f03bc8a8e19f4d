//! Hetero-functional graph simulation of watershed water and nitrogen
//! balances.
//!
//! A scenario ([`ingest`]) instantiates an architecture ([`architecture`]),
//! from which the incidence tensors are built ([`hfit`]). Device models
//! ([`devices`]) turn a marking into firing rates, the engineering system
//! net ([`esn`]) advances the marking, and [`simulator`] runs the time loop.
//! [`reference`] is an independent RK4 oracle; [`cli`] is the command-line
//! front end.

pub mod architecture;
pub mod cli;
pub mod devices;
pub mod esn;
pub mod hfit;
pub mod ingest;
pub mod reference;
pub mod simulator;
