//! MDP-to-MDP constructions: the finite-branching reduction and the
//! conditioned MDP, with their run and strategy translations.

mod conditioned;
mod reduction;

pub use conditioned::{conditioned, plus_variant, BottomVariant, ConditionedMdp, Origin, PlusMdp, VALUE_EPS};
pub use reduction::{
    adjusted_probabilities, reduce_to_finitely_branching, LiftedStrategy, ReducedMdp, ReducedState, ReductionMaps,
};
