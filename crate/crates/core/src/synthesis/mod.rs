//! Strategy construction: uniform MD strategies on finite MDPs by plastering,
//! the slack rule for safety, the bubble 1-bit strategy for Büchi with
//! Transience, and MD extraction for Transience by cost labels.

mod bubble;
mod params;
mod plastering;
mod safety;
mod transience;

pub use bubble::{buchi_transience_one_bit, BubbleLevel, BubbleParams, BubblePlan, PatternMatch};
pub use params::SynthesisParams;
pub use plastering::{
    optimal_md_where_exists, plastering_uniformize, ExactOracle, FinitePhi, LocalOracle, MdOracle, PlasteringRound,
    PlasteringState,
};
pub use safety::{safety_md_universally_transient, SafetyParams, SlackChoice};
pub use transience::{transience_md, GoodBadPartition, TransienceBudgets, TransienceReport};
