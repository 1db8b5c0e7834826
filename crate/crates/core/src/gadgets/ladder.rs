use num_rational::Ratio;
use rand::{Rng, RngCore};

use super::meta::{one_minus_pow2, GadgetMeta};
use crate::error::{Error, Result};
use crate::mdp::{Distribution, Fan, Mdp, MdStrategy, Moves, StateId, StateKind};

/// A node of a recurrent ladder: rung `ell_i` (controlled) or side state
/// `ell'_i` (random, `i >= 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rung {
    Ell(u64),
    Side(u64),
}

/// Exits of a ladder; `exit(i)` leaves from rung `i >= 1`.
#[derive(Clone, Debug)]
pub enum Exits {
    List(Vec<StateId>),
    Fan(Fan<StateId>),
}

/// Interleaved controlled rungs and fair-coin side states. Staying on the
/// ladder forever is a fair random walk.
#[derive(Clone, Debug)]
pub struct RecurrentLadder {
    exits: Exits,
}

impl RecurrentLadder {
    pub fn new(exits: Exits) -> Result<Self> {
        if let Exits::List(v) = &exits {
            if v.is_empty() {
                return Err(Error::EmptyExits);
            }
        }
        Ok(Self { exits })
    }

    pub fn exit(&self, i: u64) -> Option<StateId> {
        if i == 0 {
            return None;
        }
        match &self.exits {
            Exits::List(v) => v.get(i as usize - 1).copied(),
            Exits::Fan(f) => Some(f.get(i as usize)),
        }
    }

    /// Moves of `rung`, with ladder nodes placed into the host by `embed`.
    pub fn moves(&self, rung: Rung, embed: impl Fn(Rung) -> StateId) -> Moves {
        match rung {
            Rung::Ell(0) => Moves::Choice(vec![embed(Rung::Ell(1))]),
            Rung::Ell(i) => {
                let mut v = vec![embed(Rung::Side(i))];
                v.extend(self.exit(i));
                Moves::Choice(v)
            }
            Rung::Side(i) => {
                assert!(i >= 1, "side states start at 1");
                Moves::Chance(
                    Distribution::new(vec![(embed(Rung::Ell(i - 1)), 0.5), (embed(Rung::Ell(i + 1)), 0.5)])
                        .expect("fair coin"),
                )
            }
        }
    }

    pub fn kind(rung: Rung) -> StateKind {
        match rung {
            Rung::Ell(_) => StateKind::Controlled,
            Rung::Side(_) => StateKind::Random,
        }
    }
}

/// A ladder on its own, with absorbing exit targets `t_1..t_m`.
///
/// Ordinals: `ell_0 = 0`, `ell_i = 3i-2`, `ell'_i = 3i-1`, `t_i = 3i`.
#[derive(Clone, Debug)]
pub struct LadderGadget {
    ladder: RecurrentLadder,
    exits: usize,
}

impl LadderGadget {
    pub fn new(exits: usize) -> Result<Self> {
        let targets: Vec<StateId> = (1..=exits as u64).map(|i| StateId(3 * i)).collect();
        Ok(Self { ladder: RecurrentLadder::new(Exits::List(targets))?, exits })
    }

    pub fn node(r: Rung) -> StateId {
        match r {
            Rung::Ell(0) => StateId(0),
            Rung::Ell(i) => StateId(3 * i - 2),
            Rung::Side(i) => StateId(3 * i - 1),
        }
    }

    pub fn target(i: u64) -> StateId {
        StateId(3 * i)
    }

    fn decode(s: StateId) -> Result<Rung> {
        match s.0 {
            0 => Ok(Rung::Ell(0)),
            n if n % 3 == 1 => Ok(Rung::Ell(n / 3 + 1)),
            n if n % 3 == 2 => Ok(Rung::Side(n / 3 + 1)),
            _ => Err(Error::Malformed("exit target".into())),
        }
    }

    /// Stays on the ladder at every rung.
    pub fn stay_forever() -> MdStrategy {
        let mut s = MdStrategy::new();
        for i in 1..4096 {
            s.set(Self::node(Rung::Ell(i)), Self::node(Rung::Side(i)));
        }
        s
    }
}

impl Mdp for LadderGadget {
    fn moves(&self, s: StateId) -> Moves {
        match Self::decode(s) {
            Ok(r) => self.ladder.moves(r, Self::node),
            Err(_) => Moves::Chance(Distribution::dirac(s)),
        }
    }

    fn label(&self, s: StateId) -> String {
        match Self::decode(s) {
            Ok(Rung::Ell(i)) => format!("ladder:ell_{i}"),
            Ok(Rung::Side(i)) => format!("ladder:ell'_{i}"),
            Err(_) => format!("t_{}", s.0 / 3),
        }
    }

    fn kind(&self, s: StateId) -> StateKind {
        match Self::decode(s) {
            Ok(r) => RecurrentLadder::kind(r),
            Err(_) => StateKind::Random,
        }
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        match Self::decode(s) {
            Ok(Rung::Side(i)) => {
                if rng.gen::<bool>() {
                    Self::node(Rung::Ell(i + 1))
                } else {
                    Self::node(Rung::Ell(i - 1))
                }
            }
            _ => self.moves(s).sample(rng).expect("random state"),
        }
    }
}

impl LadderGadget {
    pub fn exit_count(&self) -> usize {
        self.exits
    }
}

/// States of the ladder without an optimal strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LadderState {
    Bot,
    Ell(u64),
    Side(u64),
    R(u64),
    X(u64),
}

/// The ladder of decisions where every rung can gamble for `1 - 2^-i`:
/// `ell_0 -> ell_1`; `ell_i` chooses `ell'_i` or `r_i`; `ell'_i` is a fair
/// coin between `ell_{i-1}` and `ell_{i+1}`; `r_i` reaches the transient
/// chain `x_i -> x_{i+1} -> ...` with probability `1 - 2^-i` and the
/// self-loop `bot` otherwise.
///
/// Ordinals: `bot = 0`, `ell_0 = 1`, and for `i >= 1` the family
/// `(ell_i, ell'_i, r_i, x_i)` occupies `2 + 4(i-1) ..= 5 + 4(i-1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoOptimalLadder;

impl NoOptimalLadder {
    pub fn id(s: LadderState) -> StateId {
        let base = |i: u64, f: u64| {
            assert!(i >= 1);
            StateId(2 + 4 * (i - 1) + f)
        };
        match s {
            LadderState::Bot => StateId(0),
            LadderState::Ell(0) => StateId(1),
            LadderState::Ell(i) => base(i, 0),
            LadderState::Side(i) => base(i, 1),
            LadderState::R(i) => base(i, 2),
            LadderState::X(i) => base(i, 3),
        }
    }

    pub fn decode(s: StateId) -> LadderState {
        match s.0 {
            0 => LadderState::Bot,
            1 => LadderState::Ell(0),
            n => {
                let i = (n - 2) / 4 + 1;
                match (n - 2) % 4 {
                    0 => LadderState::Ell(i),
                    1 => LadderState::Side(i),
                    2 => LadderState::R(i),
                    _ => LadderState::X(i),
                }
            }
        }
    }

    /// Closed-form Transience value.
    pub fn transience_value(s: StateId) -> Ratio<i64> {
        match Self::decode(s) {
            LadderState::Bot => Ratio::from_integer(0),
            LadderState::R(i) if i <= 62 => one_minus_pow2(i as u32),
            _ => Ratio::from_integer(1),
        }
    }

    /// Values that are settled once reached: `x_i` (1) and `bot` (0).
    pub fn settled_value(s: StateId) -> Option<f64> {
        match Self::decode(s) {
            LadderState::Bot => Some(0.0),
            LadderState::X(_) => Some(1.0),
            _ => None,
        }
    }

    /// Stays on the ladder below rung `j` and gambles at rung `j`.
    pub fn exit_at(j: u64) -> MdStrategy {
        assert!(j >= 1);
        let mut s = MdStrategy::new();
        for i in 1..j {
            s.set(Self::id(LadderState::Ell(i)), Self::id(LadderState::Side(i)));
        }
        s.set(Self::id(LadderState::Ell(j)), Self::id(LadderState::R(j)));
        s
    }
}

impl Mdp for NoOptimalLadder {
    fn moves(&self, s: StateId) -> Moves {
        use LadderState::*;
        let id = Self::id;
        match Self::decode(s) {
            Bot => Moves::Chance(Distribution::dirac(s)),
            Ell(0) => Moves::Choice(vec![id(Ell(1))]),
            Ell(i) => Moves::Choice(vec![id(Side(i)), id(R(i))]),
            Side(i) => {
                Moves::Chance(Distribution::new(vec![(id(Ell(i - 1)), 0.5), (id(Ell(i + 1)), 0.5)]).expect("coin"))
            }
            R(i) => {
                let lose = 0.5f64.powi(i.min(1100) as i32);
                if lose == 0.0 {
                    Moves::Chance(Distribution::dirac(id(X(i))))
                } else {
                    Moves::Chance(Distribution::new(vec![(id(X(i)), 1.0 - lose), (id(Bot), lose)]).expect("split"))
                }
            }
            X(i) => Moves::Chance(Distribution::dirac(id(X(i + 1)))),
        }
    }

    fn label(&self, s: StateId) -> String {
        match Self::decode(s) {
            LadderState::Bot => "bot".into(),
            LadderState::Ell(i) => format!("ell_{i}"),
            LadderState::Side(i) => format!("ell'_{i}"),
            LadderState::R(i) => format!("r_{i}"),
            LadderState::X(i) => format!("x_{i}"),
        }
    }

    fn kind(&self, s: StateId) -> StateKind {
        match Self::decode(s) {
            LadderState::Ell(_) => StateKind::Controlled,
            _ => StateKind::Random,
        }
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        use LadderState::*;
        match Self::decode(s) {
            Bot => s,
            Side(i) => {
                if rng.gen::<bool>() {
                    Self::id(Ell(i + 1))
                } else {
                    Self::id(Ell(i - 1))
                }
            }
            X(i) => Self::id(X(i + 1)),
            _ => self.moves(s).sample(rng).expect("random state"),
        }
    }
}

pub fn no_optimal_ladder() -> (NoOptimalLadder, GadgetMeta) {
    let g = NoOptimalLadder;
    let mut meta = GadgetMeta::new("no_optimal_ladder");
    meta.known(
        NoOptimalLadder::id(LadderState::Ell(0)),
        "ell_0".into(),
        "Transience",
        Ratio::from_integer(1),
        "sup over exit levels of 1 - 2^-j",
    );
    for i in 1..=40 {
        for st in [LadderState::Ell(i), LadderState::R(i), LadderState::X(i)] {
            let id = NoOptimalLadder::id(st);
            meta.known(id, g.label(id), "Transience", NoOptimalLadder::transience_value(id), "gamble at r_i");
        }
    }
    meta.known(NoOptimalLadder::id(LadderState::Bot), "bot".into(), "Transience", Ratio::from_integer(0), "self-loop");
    meta.universally_transient = Some(false);
    (g, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_round_trip() {
        for n in 0..500 {
            assert_eq!(NoOptimalLadder::id(NoOptimalLadder::decode(StateId(n))), StateId(n));
        }
    }

    #[test]
    fn empty_exit_list_is_rejected() {
        assert_eq!(RecurrentLadder::new(Exits::List(vec![])).unwrap_err(), Error::EmptyExits);
    }

    #[test]
    fn ladder_gadget_ordinals() {
        for i in 0..50 {
            assert_eq!(LadderGadget::decode(LadderGadget::node(Rung::Ell(i))).unwrap(), Rung::Ell(i));
            if i > 0 {
                assert_eq!(LadderGadget::decode(LadderGadget::node(Rung::Side(i))).unwrap(), Rung::Side(i));
                assert!(LadderGadget::decode(LadderGadget::target(i)).is_err());
            }
        }
    }
}
