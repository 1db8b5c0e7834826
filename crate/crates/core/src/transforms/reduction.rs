use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::gadgets::{cantor, uncantor, Exits, RecurrentLadder, Rung};
use crate::mdp::{Controller, Distribution, Fan, GeneralStrategy, Mdp, MdStrategy, Moves, StateId, StateKind, Strategy};

/// A state of the reduced MDP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReducedState {
    /// A state of the original MDP.
    Host(StateId),
    /// Rung `ell_{s,i}` of the ladder replacing controlled fan `s`.
    Ell(StateId, u64),
    /// Side state `ell'_{s,i}`, `i >= 1`.
    Side(StateId, u64),
    /// Chain state `z_{s,i}`, `i >= 1`, replacing random fan `s`.
    Z(StateId, u64),
}

impl ReducedState {
    /// Hosts keep even ordinals `2s`; gadget states take the odd ones.
    pub fn id(self) -> StateId {
        let gadget = |s: StateId, i: u64, tag: u64| StateId(2 * (3 * cantor(s.0, i) + tag) + 1);
        match self {
            ReducedState::Host(s) => StateId(2 * s.0),
            ReducedState::Ell(s, i) => gadget(s, i, 0),
            ReducedState::Side(s, i) => gadget(s, i, 1),
            ReducedState::Z(s, i) => gadget(s, i, 2),
        }
    }

    pub fn decode(x: StateId) -> Self {
        if x.0 % 2 == 0 {
            return ReducedState::Host(StateId(x.0 / 2));
        }
        let y = (x.0 - 1) / 2;
        let (s, i) = uncantor(y / 3);
        match y % 3 {
            0 => ReducedState::Ell(StateId(s), i),
            1 => ReducedState::Side(StateId(s), i),
            _ => ReducedState::Z(StateId(s), i),
        }
    }
}

/// Adjusted exit probabilities `p'_i = p_i / prod_{j<i} (1 - p'_j)` of a
/// random fan, for `i = 1..=n`.
pub fn adjusted_probabilities(fan: &Fan<(StateId, f64)>, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut stay = 1.0f64;
    for i in 1..=n {
        let p = fan.get(i).1;
        let q = if stay > 0.0 { (p / stay).min(1.0) } else { 1.0 };
        out.push(q);
        stay *= 1.0 - q;
    }
    out
}

/// Finitely branching MDP obtained by replacing every controlled fan with a
/// recurrent ladder and every random fan with a chain of coins.
#[derive(Clone)]
pub struct ReducedMdp {
    base: Arc<dyn Mdp>,
}

impl ReducedMdp {
    pub fn new(base: Arc<dyn Mdp>) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &Arc<dyn Mdp> {
        &self.base
    }

    pub fn host(s: StateId) -> StateId {
        ReducedState::Host(s).id()
    }

    fn ladder(&self, s: StateId) -> RecurrentLadder {
        match self.base.moves(s) {
            Moves::ChoiceFan(f) => RecurrentLadder::new(Exits::Fan(f)).expect("fan exits are never empty"),
            _ => panic!("{} is not a controlled fan", self.base.label(s)),
        }
    }

    fn embed(s: StateId) -> impl Fn(Rung) -> StateId {
        move |r| match r {
            Rung::Ell(i) => ReducedState::Ell(s, i).id(),
            Rung::Side(i) => ReducedState::Side(s, i).id(),
        }
    }

    fn host_moves(m: Moves) -> Moves {
        match m {
            Moves::Choice(v) => Moves::Choice(v.into_iter().map(Self::host).collect()),
            Moves::Chance(d) => Moves::Chance(
                Distribution::new(d.support().iter().map(|&(t, p)| (Self::host(t), p)).collect())
                    .expect("relabelled distribution"),
            ),
            Moves::ChoiceFan(_) | Moves::ChanceFan(_) => unreachable!("fans are replaced"),
        }
    }

    fn z_moves(&self, s: StateId, i: u64) -> Moves {
        let fan = match self.base.moves(s) {
            Moves::ChanceFan(f) => f,
            _ => panic!("{} is not a random fan", self.base.label(s)),
        };
        let q = adjusted_probabilities(&fan, i as usize)[i as usize - 1];
        let exit = Self::host(fan.get(i as usize).0);
        let next = ReducedState::Z(s, i + 1).id();
        if q >= 1.0 - 1e-15 {
            Moves::Chance(Distribution::dirac(exit))
        } else if q <= 0.0 {
            Moves::Chance(Distribution::dirac(next))
        } else {
            Moves::Chance(Distribution::new(vec![(exit, q), (next, 1.0 - q)]).expect("coin"))
        }
    }
}

impl Mdp for ReducedMdp {
    fn moves(&self, x: StateId) -> Moves {
        match ReducedState::decode(x) {
            ReducedState::Host(s) => match self.base.moves(s) {
                Moves::ChoiceFan(_) => Moves::Choice(vec![ReducedState::Ell(s, 0).id()]),
                Moves::ChanceFan(_) => Moves::Chance(Distribution::dirac(ReducedState::Z(s, 1).id())),
                m => Self::host_moves(m),
            },
            ReducedState::Ell(s, i) => self.ladder(s).moves(Rung::Ell(i), Self::embed(s)).map_exit(Self::host),
            ReducedState::Side(s, i) => self.ladder(s).moves(Rung::Side(i), Self::embed(s)),
            ReducedState::Z(s, i) => self.z_moves(s, i),
        }
    }

    fn label(&self, x: StateId) -> String {
        match ReducedState::decode(x) {
            ReducedState::Host(s) => self.base.label(s),
            ReducedState::Ell(s, i) => format!("ladder[{}]:ell_{i}", self.base.label(s)),
            ReducedState::Side(s, i) => format!("ladder[{}]:ell'_{i}", self.base.label(s)),
            ReducedState::Z(s, i) => format!("fan[{}]:z_{i}", self.base.label(s)),
        }
    }

    fn kind(&self, x: StateId) -> StateKind {
        match ReducedState::decode(x) {
            ReducedState::Host(s) => self.base.kind(s),
            ReducedState::Ell(..) => StateKind::Controlled,
            ReducedState::Side(..) | ReducedState::Z(..) => StateKind::Random,
        }
    }

    fn sample(&self, x: StateId, rng: &mut dyn RngCore) -> StateId {
        match ReducedState::decode(x) {
            ReducedState::Host(s) => match self.base.moves(s) {
                Moves::ChanceFan(_) => ReducedState::Z(s, 1).id(),
                _ => Self::host(self.base.sample(s, rng)),
            },
            ReducedState::Side(s, i) => {
                if rng.gen::<bool>() {
                    ReducedState::Ell(s, i + 1).id()
                } else {
                    ReducedState::Ell(s, i - 1).id()
                }
            }
            _ => self.moves(x).sample(rng).expect("random state"),
        }
    }
}

trait MapExit {
    fn map_exit(self, f: impl Fn(StateId) -> StateId) -> Moves;
}

impl MapExit for Moves {
    /// The ladder lists the exit of a rung after its side state.
    fn map_exit(self, f: impl Fn(StateId) -> StateId) -> Moves {
        match self {
            Moves::Choice(mut v) if v.len() == 2 => {
                v[1] = f(v[1]);
                Moves::Choice(v)
            }
            m => m,
        }
    }
}

/// The reduction together with its strategy translations.
#[derive(Clone)]
pub struct ReductionMaps {
    pub reduced: Arc<ReducedMdp>,
}

/// Scan depth when looking for the rung an MD strategy leaves a ladder from.
const LADDER_SCAN: u64 = 4096;

impl ReductionMaps {
    pub fn base(&self) -> &Arc<dyn Mdp> {
        self.reduced.base()
    }

    /// `p'_1..p'_n` of the random fan `s`, or `None` if `s` is not one.
    pub fn adjusted_probs(&self, s: StateId, n: usize) -> Option<Vec<f64>> {
        match self.base().moves(s) {
            Moves::ChanceFan(f) => Some(adjusted_probabilities(&f, n)),
            _ => None,
        }
    }

    /// Plays `alpha` in the reduced MDP. On entering a controlled fan `s`, the
    /// strategy samples the fan entry `j` from `alpha`, walks the ladder and
    /// leaves it at the first visit of rung `j`. The history shown to `alpha`
    /// consists of the original states only.
    pub fn lift_strategy(&self, alpha: GeneralStrategy) -> LiftedStrategy {
        LiftedStrategy { base: Arc::clone(self.base()), alpha }
    }

    /// The ladder-free MD strategy of the reduced MDP that plays `sigma`:
    /// each controlled fan exits at the rung of `sigma`'s choice.
    pub fn lift_md(&self, sigma: &MdStrategy, fan_scan: usize) -> MdStrategy {
        let mut out = MdStrategy::new();
        for (&s, &t) in sigma.choices() {
            match self.base().moves(s) {
                Moves::ChoiceFan(f) => {
                    let j = (1..=fan_scan).find(|&j| f.get(j) == t).expect("choice is a fan entry") as u64;
                    for i in 1..j {
                        out.set(ReducedState::Ell(s, i).id(), ReducedState::Side(s, i).id());
                    }
                    out.set(ReducedState::Ell(s, j).id(), ReducedMdp::host(t));
                }
                _ => out.set(ReducedMdp::host(s), ReducedMdp::host(t)),
            }
        }
        out
    }

    /// The MD strategy of the original MDP simulating `beta`. A controlled
    /// fan takes the entry of the first rung `beta` exits from; if `beta`
    /// stays on the ladder, the entry of rung 1.
    pub fn lower_md(&self, beta: &MdStrategy) -> MdStrategy {
        let mut explicit: HashMap<StateId, u64> = HashMap::new();
        let mut hosts = Vec::new();
        for &x in beta.choices().keys() {
            match ReducedState::decode(x) {
                ReducedState::Host(s) => hosts.push(s),
                ReducedState::Ell(s, i) => {
                    let e = explicit.entry(s).or_default();
                    *e = (*e).max(i);
                }
                _ => {}
            }
        }
        let mut out = MdStrategy::new();
        for s in hosts {
            if let Moves::ChoiceFan(_) = self.base().moves(s) {
                continue;
            }
            let x = ReducedMdp::host(s);
            let t = beta.decide(x, &self.reduced.moves(x));
            if let ReducedState::Host(t) = ReducedState::decode(t) {
                out.set(s, t);
            }
        }
        for (&s, &top) in &explicit {
            let f = match self.base().moves(s) {
                Moves::ChoiceFan(f) => f,
                _ => continue,
            };
            let limit = (top + 1).min(LADDER_SCAN);
            let exit = (1..=limit).find(|&i| {
                let x = ReducedState::Ell(s, i).id();
                beta.decide(x, &self.reduced.moves(x)) != ReducedState::Side(s, i).id()
            });
            out.set(s, f.get(exit.unwrap_or(1) as usize));
        }
        out
    }
}

/// Finitely branching version of `mdp`.
pub fn reduce_to_finitely_branching(mdp: Arc<dyn Mdp>) -> ReductionMaps {
    ReductionMaps { reduced: Arc::new(ReducedMdp::new(mdp)) }
}

/// Strategy of the reduced MDP simulating a strategy of the original one.
#[derive(Clone)]
pub struct LiftedStrategy {
    base: Arc<dyn Mdp>,
    alpha: GeneralStrategy,
}

struct LiftedController<'a> {
    lifted: &'a LiftedStrategy,
    history: Vec<StateId>,
    target: Option<(u64, StateId)>,
}

impl Controller for LiftedController<'_> {
    fn choose(&mut self, x: StateId, moves: &Moves, rng: &mut dyn RngCore) -> StateId {
        match ReducedState::decode(x) {
            ReducedState::Host(s) => match self.lifted.base.moves(s) {
                Moves::ChoiceFan(f) => {
                    let t = self.lifted.alpha.decide(&self.history).sample(rng);
                    let j = (1..).find(|&j| f.get(j) == t).expect("choice is a fan entry");
                    self.target = Some((j as u64, t));
                    ReducedState::Ell(s, 0).id()
                }
                _ => ReducedMdp::host(self.lifted.alpha.decide(&self.history).sample(rng)),
            },
            ReducedState::Ell(s, i) => match self.target {
                Some((j, t)) if i == j => ReducedMdp::host(t),
                _ if i == 0 => ReducedState::Ell(s, 1).id(),
                _ => ReducedState::Side(s, i).id(),
            },
            _ => crate::mdp::default_choice(moves),
        }
    }

    fn observe(&mut self, _from: StateId, _kind: StateKind, to: StateId) {
        if let ReducedState::Host(t) = ReducedState::decode(to) {
            self.history.push(t);
            self.target = None;
        }
    }
}

impl Strategy for LiftedStrategy {
    fn start(&self, x0: StateId) -> Box<dyn Controller + '_> {
        let history = match ReducedState::decode(x0) {
            ReducedState::Host(s) => vec![s],
            _ => panic!("runs of the reduced MDP start at an original state"),
        };
        Box::new(LiftedController { lifted: self, history, target: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{Bottom, FanFamily, FanNode, FanRoot};

    #[test]
    fn ordinals_round_trip() {
        for x in [
            ReducedState::Host(StateId(0)),
            ReducedState::Host(StateId(17)),
            ReducedState::Ell(StateId(3), 0),
            ReducedState::Side(StateId(3), 9),
            ReducedState::Z(StateId(0), 4),
        ] {
            assert_eq!(ReducedState::decode(x.id()), x);
        }
    }

    #[test]
    fn geometric_fan_is_a_fair_chain() {
        let fan = Fan::new(|i| (StateId(i as u64), 0.5f64.powi(i as i32)));
        assert!(adjusted_probabilities(&fan, 40).iter().all(|&q| q == 0.5));
    }

    #[test]
    fn md_exit_at_three_lowers_to_third_entry() {
        let g: Arc<dyn Mdp> = Arc::new(FanFamily::new(FanRoot::Controlled, Bottom::SelfLoop));
        let maps = reduce_to_finitely_branching(g);
        let root = FanFamily::root_id();
        let mut beta = MdStrategy::new();
        beta.set(ReducedState::Ell(root, 1).id(), ReducedState::Side(root, 1).id());
        beta.set(ReducedState::Ell(root, 2).id(), ReducedState::Side(root, 2).id());
        beta.set(ReducedState::Ell(root, 3).id(), ReducedMdp::host(FanFamily::id(FanNode::Split(3))));
        let alpha = maps.lower_md(&beta);
        assert_eq!(alpha.get(root), Some(FanFamily::id(FanNode::Split(3))));
    }
}
