//! Brute-force and exact-evaluation checks on small instances, random
//! instance generation and universal-transience certification.

mod conditioned;
mod random;
mod report;
mod suites;
mod tails;
mod transience;

pub use conditioned::{
    check_conditioned_item1, check_conditioned_item3, check_conditioning_preserves_transience, check_multiplicative,
    MAX_ENUM_LEN, MAX_ENUM_STATES,
};
pub use random::{random_finite_mdp, random_md, HashedStrategy, SinkSpec};
pub use report::{summary_table, CheckReport, Verdict};
pub use suites::{check_plastering, expect_verdict, over_seeds, reach_instance, run_suite, SUITES};
pub use tails::TailChains;
pub use transience::{check_universal_transience, TransienceCheck};
