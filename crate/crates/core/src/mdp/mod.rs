//! MDP representation: states, successor oracles, finite materializations,
//! objectives, strategies and Monte Carlo simulation.

mod explore;
mod finite;
mod model;
mod objective;
mod simulate;
mod state;
mod strategy;

pub use explore::{bubble, bubble_depths, truncate, truncate_with, Frontier, Truncation};
pub use finite::{FiniteMdp, FiniteMdpBuilder, FiniteMdpJson, JsonState, JsonTransition};
pub use model::{check_well_formed, Fan, Finiteness, Mdp, Moves};
pub use objective::{Objective, StateSet};
pub use simulate::{
    drive, estimate_event, estimate_transience, mean_visits, rng_for, run_seed, simulate, simulate_with_cost,
    Estimate, Proxy, Run, RunStats, Visits,
};
pub use state::{Distribution, StateId, StateKind, PROB_TOLERANCE};
pub use strategy::{
    default_choice, Controller, GeneralStrategy, MdStrategy, OneBitRule, OneBitStrategy, OneBitTable, Strategy,
    UniformRandomStrategy,
};
