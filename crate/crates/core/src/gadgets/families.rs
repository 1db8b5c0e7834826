use rand::RngCore;

use super::meta::{cantor, one_minus_pow2, uncantor, GadgetMeta};
use crate::mdp::{Distribution, Fan, Mdp, Moves, StateId, StateKind};

/// The transient chain `x_0 -> x_1 -> ...`; state `x_i` has ordinal `i`.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcyclicChain;

impl Mdp for AcyclicChain {
    fn moves(&self, s: StateId) -> Moves {
        Moves::Chance(Distribution::dirac(StateId(s.0 + 1)))
    }

    fn label(&self, s: StateId) -> String {
        format!("x_{}", s.0)
    }

    fn kind(&self, _s: StateId) -> StateKind {
        StateKind::Random
    }

    fn sample(&self, s: StateId, _rng: &mut dyn RngCore) -> StateId {
        StateId(s.0 + 1)
    }

    fn return_bound(&self, _s: StateId) -> Option<f64> {
        Some(0.0)
    }
}

pub fn acyclic_chain() -> (AcyclicChain, GadgetMeta) {
    let mut meta = GadgetMeta::new("acyclic_chain");
    for i in 0..16 {
        meta.known_float(StateId(i), format!("x_{i}"), "Transience", 1.0, "no state repeats");
    }
    meta.universally_transient = Some(true);
    (AcyclicChain, meta)
}

/// Shape of the root of a [`FanFamily`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanRoot {
    /// Controlled, choosing any split `r_j`.
    Controlled,
    /// Random, reaching `r_j` with probability `2^-j`.
    Random,
    /// Random, reaching controlled `c_i` with probability `2^-i`; `c_i`
    /// chooses any split `r_{i+j-1}`.
    RandomThenControlled,
}

/// What the losing branch of a split leads to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bottom {
    /// A self-loop: the run is not transient.
    SelfLoop,
    /// A chain `bot_0 -> bot_1 -> ...`: transient, but a losing area for safety.
    Chain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanNode {
    Root,
    Mid(u64),
    Split(u64),
    Chain(u64, u64),
    Bot(u64),
}

/// Infinitely branching family: the root fans out to splits `r_j`, each of
/// which reaches its own transient chain `x_{j,1} -> x_{j,2} -> ...` with
/// probability `1 - 2^-j` and the bottom otherwise.
#[derive(Clone, Copy, Debug)]
pub struct FanFamily {
    pub root: FanRoot,
    pub bottom: Bottom,
}

impl FanFamily {
    pub fn new(root: FanRoot, bottom: Bottom) -> Self {
        Self { root, bottom }
    }

    pub fn id(n: FanNode) -> StateId {
        let (tag, a, b) = match n {
            FanNode::Root => (0, 0, 0),
            FanNode::Mid(i) => (1, i, 0),
            FanNode::Split(j) => (2, j, 0),
            FanNode::Chain(j, k) => (3, j, k),
            FanNode::Bot(k) => (4, k, 0),
        };
        StateId(5 * cantor(a, b) + tag)
    }

    pub fn decode(s: StateId) -> FanNode {
        let (a, b) = uncantor(s.0 / 5);
        match s.0 % 5 {
            0 => FanNode::Root,
            1 => FanNode::Mid(a),
            2 => FanNode::Split(a),
            3 => FanNode::Chain(a, b),
            _ => FanNode::Bot(a),
        }
    }

    pub fn root_id() -> StateId {
        Self::id(FanNode::Root)
    }

    pub fn is_bottom(s: StateId) -> bool {
        matches!(Self::decode(s), FanNode::Bot(_))
    }

    fn split(j: u64) -> Moves {
        let lose = 0.5f64.powi(j.min(1100) as i32);
        if lose == 0.0 {
            return Moves::Chance(Distribution::dirac(Self::id(FanNode::Chain(j, 1))));
        }
        Moves::Chance(
            Distribution::new(vec![(Self::id(FanNode::Chain(j, 1)), 1.0 - lose), (Self::id(FanNode::Bot(0)), lose)])
                .expect("split"),
        )
    }

    /// Value of `Reach` of a chain `x_{j,k}`: the probability of never
    /// entering the bottom. Equals the Transience value for the self-loop
    /// bottom.
    pub fn safe_value(&self, s: StateId) -> f64 {
        match Self::decode(s) {
            FanNode::Root => match self.root {
                FanRoot::Random => 2.0 / 3.0,
                _ => 1.0,
            },
            FanNode::Mid(_) | FanNode::Chain(..) => 1.0,
            FanNode::Split(j) => 1.0 - 0.5f64.powi(j.min(1100) as i32),
            FanNode::Bot(_) => 0.0,
        }
    }
}

impl Mdp for FanFamily {
    fn moves(&self, s: StateId) -> Moves {
        match Self::decode(s) {
            FanNode::Root => match self.root {
                FanRoot::Controlled => Moves::ChoiceFan(Fan::new(|j| Self::id(FanNode::Split(j as u64)))),
                FanRoot::Random => Moves::ChanceFan(Fan::new(|j| {
                    (Self::id(FanNode::Split(j as u64)), 0.5f64.powi(j.min(1100) as i32))
                })),
                FanRoot::RandomThenControlled => Moves::ChanceFan(Fan::new(|i| {
                    (Self::id(FanNode::Mid(i as u64)), 0.5f64.powi(i.min(1100) as i32))
                })),
            },
            FanNode::Mid(i) => Moves::ChoiceFan(Fan::new(move |j| Self::id(FanNode::Split(i + j as u64 - 1)))),
            FanNode::Split(j) => Self::split(j),
            FanNode::Chain(j, k) => Moves::Chance(Distribution::dirac(Self::id(FanNode::Chain(j, k + 1)))),
            FanNode::Bot(k) => match self.bottom {
                Bottom::SelfLoop => Moves::Chance(Distribution::dirac(s)),
                Bottom::Chain => Moves::Chance(Distribution::dirac(Self::id(FanNode::Bot(k + 1)))),
            },
        }
    }

    fn label(&self, s: StateId) -> String {
        match Self::decode(s) {
            FanNode::Root => "root".into(),
            FanNode::Mid(i) => format!("c_{i}"),
            FanNode::Split(j) => format!("r_{j}"),
            FanNode::Chain(j, k) => format!("x_{j},{k}"),
            FanNode::Bot(k) => format!("bot_{k}"),
        }
    }

    fn kind(&self, s: StateId) -> StateKind {
        match Self::decode(s) {
            FanNode::Root if self.root == FanRoot::Controlled => StateKind::Controlled,
            FanNode::Mid(_) => StateKind::Controlled,
            _ => StateKind::Random,
        }
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        match Self::decode(s) {
            FanNode::Chain(j, k) => Self::id(FanNode::Chain(j, k + 1)),
            FanNode::Bot(k) if self.bottom == Bottom::Chain => Self::id(FanNode::Bot(k + 1)),
            _ => self.moves(s).sample(rng).expect("random state"),
        }
    }

    fn return_bound(&self, s: StateId) -> Option<f64> {
        match (Self::decode(s), self.bottom) {
            (FanNode::Bot(_), Bottom::SelfLoop) => Some(1.0),
            _ => Some(0.0),
        }
    }
}

pub fn fan_family(root: FanRoot, bottom: Bottom) -> (FanFamily, GadgetMeta) {
    let g = FanFamily::new(root, bottom);
    let name = match root {
        FanRoot::Controlled => "controlled",
        FanRoot::Random => "random",
        FanRoot::RandomThenControlled => "random_then_controlled",
    };
    let mut meta = GadgetMeta::new("fan").param("root", name).param(
        "bottom",
        match bottom {
            Bottom::SelfLoop => "loop",
            Bottom::Chain => "chain",
        },
    );
    let objective = match bottom {
        Bottom::SelfLoop => "Transience",
        Bottom::Chain => "Safety(bot)",
    };
    meta.known_float(FanFamily::root_id(), "root".into(), objective, g.safe_value(FanFamily::root_id()), "fan of splits");
    for j in 1..=30 {
        let id = FanFamily::id(FanNode::Split(j));
        meta.known(id, g.label(id), objective, one_minus_pow2(j as u32), "split r_j");
    }
    meta.universally_transient = Some(bottom == Bottom::Chain);
    (g, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_ordinals_round_trip() {
        for n in [
            FanNode::Root,
            FanNode::Mid(3),
            FanNode::Split(1),
            FanNode::Split(40),
            FanNode::Chain(2, 9),
            FanNode::Bot(0),
            FanNode::Bot(17),
        ] {
            assert_eq!(FanFamily::decode(FanFamily::id(n)), n);
        }
    }
}
