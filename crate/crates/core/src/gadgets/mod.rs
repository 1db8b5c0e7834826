//! Example MDPs with closed-form metadata.

mod families;
mod gamblers_ruin;
mod ladder;
mod meta;
mod registry;
mod self_loop;

pub use families::{acyclic_chain, fan_family, AcyclicChain, Bottom, FanFamily, FanNode, FanRoot};
pub use gamblers_ruin::{gamblers_ruin, GamblersRuin};
pub use ladder::{no_optimal_ladder, Exits, LadderGadget, LadderState, NoOptimalLadder, RecurrentLadder, Rung};
pub use meta::{cantor, one_minus_pow2, uncantor, GadgetMeta, KnownValue};
pub use registry::{build_gadget, list_gadgets, Gadget, GadgetInfo, ParamSpec};
pub use self_loop::{lazy_self_loop_example, round_strategy, LazySelfLoop};
