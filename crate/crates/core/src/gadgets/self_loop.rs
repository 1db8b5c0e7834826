use rand::RngCore;

use super::meta::GadgetMeta;
use crate::mdp::{Distribution, GeneralStrategy, Mdp, Moves, StateId, StateKind};

/// `s_0` may loop or move on to the chain `s_1 -> s_2 -> ...`. State `s_k`
/// has ordinal `k`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LazySelfLoop;

impl Mdp for LazySelfLoop {
    fn moves(&self, s: StateId) -> Moves {
        if s.0 == 0 {
            Moves::Choice(vec![StateId(0), StateId(1)])
        } else {
            Moves::Chance(Distribution::dirac(StateId(s.0 + 1)))
        }
    }

    fn label(&self, s: StateId) -> String {
        format!("s_{}", s.0)
    }

    fn kind(&self, s: StateId) -> StateKind {
        if s.0 == 0 {
            StateKind::Controlled
        } else {
            StateKind::Random
        }
    }

    fn sample(&self, s: StateId, _rng: &mut dyn RngCore) -> StateId {
        StateId(s.0 + 1)
    }
}

/// Round-based strategy at `s_0`: round `i` tosses a fair coin; heads leaves
/// to `s_1`, tails takes the self-loop `2^i` times before the next round.
/// Coins fall on visits `2^i - 1`.
pub fn round_strategy() -> GeneralStrategy {
    GeneralStrategy::new(|h| {
        // Before leaving, every visited state is s_0.
        let visits = h.len() as u64;
        if (visits + 1).is_power_of_two() {
            Distribution::uniform(&[StateId(0), StateId(1)]).expect("two states")
        } else {
            Distribution::dirac(StateId(0))
        }
    })
}

pub fn lazy_self_loop_example() -> (LazySelfLoop, GeneralStrategy, GadgetMeta) {
    let mut meta = GadgetMeta::new("lazy_self_loop");
    meta.known_float(StateId(0), "s_0".into(), "Transience", 1.0, "round strategy leaves almost surely");
    meta.universally_transient = Some(false);
    (LazySelfLoop, round_strategy(), meta)
}
