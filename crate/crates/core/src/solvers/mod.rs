//! Exact values on finite MDPs, interval bounds on truncations, return
//! probabilities, MD policy solvers and a brute-force oracle.

mod chain;
mod cost;
mod finite;
pub mod graph;
mod interval;
mod linear;
mod oracle;
mod reward;

pub use chain::md_transience_value;
pub use cost::{evaluate_cost, min_expected_cost_md, CostLabel};
pub use finite::{
    chain_terminal_value, chain_total_cost, evaluate_reach, evaluate_reach_any, evaluate_safety, fix_all,
    induced_chain, policy_vector, reach_solution, reach_value, safety_solution, safety_value, solve_terminal, Sense,
    Solution, ValueMap, DEFAULT_TOL,
};
pub use interval::{
    interval_value, interval_value_with, return_probability, truncation_bounds, BoundOptions, ReturnAnalysis, Settled,
    ValueInterval,
};
pub use linear::solve_sparse;
pub use oracle::{
    md_policy_oracle, oracle_evaluate, OracleCaps, OracleObjective, OracleResult, DEFAULT_BRANCHING_CAP,
    DEFAULT_CONTROLLED_CAP,
};
pub use reward::{bounded_total_reward_md, BoundedRewardSpec};
