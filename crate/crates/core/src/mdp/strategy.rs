use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::model::{Mdp, Moves};
use super::state::{Distribution, StateId, StateKind};
use crate::error::{Error, Result};

/// Per-run decision state of a strategy.
pub trait Controller {
    /// Picks a successor of the controlled state `s`.
    fn choose(&mut self, s: StateId, moves: &Moves, rng: &mut dyn RngCore) -> StateId;

    /// Called after every transition. `kind` is the kind of `from`.
    fn observe(&mut self, _from: StateId, _kind: StateKind, _to: StateId) {}
}

/// A strategy: a factory of controllers, one per run.
pub trait Strategy: Send + Sync {
    fn start(&self, s0: StateId) -> Box<dyn Controller + '_>;
}

/// Successor picked for states without an explicit choice: the smallest
/// ordinal, or the first entry of a fan.
pub fn default_choice(moves: &Moves) -> StateId {
    match moves {
        Moves::Choice(v) => *v.iter().min().expect("non-empty successor list"),
        Moves::ChoiceFan(f) => f.get(1),
        Moves::Chance(d) => d.support().iter().map(|e| e.0).min().expect("non-empty"),
        Moves::ChanceFan(f) => f.get(1).0,
    }
}

/// Memoryless deterministic strategy.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MdStrategy {
    choice: BTreeMap<StateId, StateId>,
}

impl MdStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(choice: BTreeMap<StateId, StateId>) -> Self {
        Self { choice }
    }

    /// Builds a strategy over finite-MDP indices.
    pub fn from_indices(choice: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { choice: choice.into_iter().map(|(s, t)| (StateId::from(s), StateId::from(t))).collect() }
    }

    pub fn set(&mut self, s: StateId, t: StateId) {
        self.choice.insert(s, t);
    }

    pub fn get(&self, s: StateId) -> Option<StateId> {
        self.choice.get(&s).copied()
    }

    pub fn choices(&self) -> &BTreeMap<StateId, StateId> {
        &self.choice
    }

    pub fn decide(&self, s: StateId, moves: &Moves) -> StateId {
        self.get(s).unwrap_or_else(|| default_choice(moves))
    }

    /// Successor of finite-MDP state `i` under this strategy.
    pub fn decide_index(&self, i: usize, succ: &[usize]) -> usize {
        match self.get(StateId::from(i)) {
            Some(t) => t.index(),
            None => *succ.iter().min().expect("non-empty"),
        }
    }

    /// Checks that every explicit choice is a legal successor.
    pub fn validate(&self, mdp: &dyn Mdp, fan_limit: usize) -> Result<()> {
        for (&s, &t) in &self.choice {
            let moves = mdp.moves(s);
            if moves.kind() == StateKind::Controlled && !moves.allows(t, fan_limit) {
                return Err(Error::Malformed(format!("{t} is not a successor of {s}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

struct MdController<'a>(&'a MdStrategy);

impl Controller for MdController<'_> {
    fn choose(&mut self, s: StateId, moves: &Moves, _rng: &mut dyn RngCore) -> StateId {
        self.0.decide(s, moves)
    }
}

impl Strategy for MdStrategy {
    fn start(&self, _s0: StateId) -> Box<dyn Controller + '_> {
        Box::new(MdController(self))
    }
}

/// Update function of a deterministic 1-bit strategy given as code.
pub trait OneBitRule: Send + Sync {
    fn controlled(&self, mode: u8, s: StateId, moves: &Moves) -> (u8, StateId);
    fn random(&self, mode: u8, s: StateId, to: StateId) -> u8;
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OneBitTable {
    pub controlled: BTreeMap<(u8, StateId), (u8, StateId)>,
    pub random: BTreeMap<(u8, StateId, StateId), u8>,
}

#[derive(Clone)]
enum Update {
    Table(OneBitTable),
    Rule(Arc<dyn OneBitRule>),
}

/// Deterministic strategy with one bit of memory. Memory updates at random
/// states depend only on the realized successor.
#[derive(Clone)]
pub struct OneBitStrategy {
    initial_mode: u8,
    update: Update,
}

impl std::fmt::Debug for OneBitStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.update {
            Update::Table(t) => f
                .debug_struct("OneBitStrategy")
                .field("initial_mode", &self.initial_mode)
                .field("table", t)
                .finish(),
            Update::Rule(_) => f
                .debug_struct("OneBitStrategy")
                .field("initial_mode", &self.initial_mode)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct OneBitJson {
    initial_mode: u8,
    controlled: Vec<[u64; 4]>,
    random: Vec<[u64; 4]>,
}

impl OneBitStrategy {
    pub fn from_table(initial_mode: u8, table: OneBitTable) -> Self {
        Self { initial_mode: initial_mode & 1, update: Update::Table(table) }
    }

    pub fn from_rule(initial_mode: u8, rule: Arc<dyn OneBitRule>) -> Self {
        Self { initial_mode: initial_mode & 1, update: Update::Rule(rule) }
    }

    /// The MD strategy `sigma` seen as a 1-bit strategy that never flips.
    pub fn from_md(sigma: &MdStrategy) -> Self {
        let mut table = OneBitTable::default();
        for (&s, &t) in sigma.choices() {
            for m in 0..2 {
                table.controlled.insert((m, s), (m, t));
            }
        }
        Self::from_table(0, table)
    }

    pub fn initial_mode(&self) -> u8 {
        self.initial_mode
    }

    /// The same update function started in mode `m`.
    pub fn with_initial_mode(&self, m: u8) -> Self {
        Self { initial_mode: m & 1, update: self.update.clone() }
    }

    pub fn controlled_update(&self, mode: u8, s: StateId, moves: &Moves) -> (u8, StateId) {
        match &self.update {
            Update::Table(t) => t
                .controlled
                .get(&(mode, s))
                .copied()
                .unwrap_or_else(|| (mode, default_choice(moves))),
            Update::Rule(r) => r.controlled(mode, s, moves),
        }
    }

    pub fn random_update(&self, mode: u8, s: StateId, to: StateId) -> u8 {
        match &self.update {
            Update::Table(t) => t.random.get(&(mode, s, to)).copied().unwrap_or(mode),
            Update::Rule(r) => r.random(mode, s, to),
        }
    }

    /// Tabulates the update function on the given states.
    pub fn materialize(&self, mdp: &dyn Mdp, states: &[StateId]) -> Self {
        let mut table = OneBitTable::default();
        for &s in states {
            let moves = mdp.moves(s);
            for m in 0..2u8 {
                match moves.kind() {
                    StateKind::Controlled => {
                        table.controlled.insert((m, s), self.controlled_update(m, s, &moves));
                    }
                    StateKind::Random => {
                        if let Some(succ) = moves.finite_successors() {
                            for (t, _) in succ {
                                let next = self.random_update(m, s, t);
                                if next != m {
                                    table.random.insert((m, s, t), next);
                                }
                            }
                        }
                    }
                }
            }
        }
        Self::from_table(self.initial_mode, table)
    }

    /// JSON form: controlled entries `[mode, state, next_mode, successor]`,
    /// random entries `[mode, state, realized, next_mode]`. Only tabulated
    /// strategies serialize.
    pub fn to_json(&self) -> Result<String> {
        let Update::Table(t) = &self.update else {
            return Err(Error::BadParameter("materialize a rule-based strategy before serializing".into()));
        };
        let doc = OneBitJson {
            initial_mode: self.initial_mode,
            controlled: t.controlled.iter().map(|(&(m, s), &(n, u))| [m as u64, s.0, n as u64, u.0]).collect(),
            random: t.random.iter().map(|(&(m, s, u), &n)| [m as u64, s.0, u.0, n as u64]).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: OneBitJson = serde_json::from_str(s)?;
        let mut t = OneBitTable::default();
        for [m, s, n, u] in doc.controlled {
            t.controlled.insert((m as u8, StateId(s)), (n as u8, StateId(u)));
        }
        for [m, s, u, n] in doc.random {
            t.random.insert((m as u8, StateId(s), StateId(u)), n as u8);
        }
        Ok(Self::from_table(doc.initial_mode, t))
    }
}

struct OneBitController<'a> {
    strategy: &'a OneBitStrategy,
    mode: u8,
}

impl Controller for OneBitController<'_> {
    fn choose(&mut self, s: StateId, moves: &Moves, _rng: &mut dyn RngCore) -> StateId {
        let (m, t) = self.strategy.controlled_update(self.mode, s, moves);
        self.mode = m;
        t
    }

    fn observe(&mut self, from: StateId, kind: StateKind, to: StateId) {
        if kind == StateKind::Random {
            self.mode = self.strategy.random_update(self.mode, from, to);
        }
    }
}

impl Strategy for OneBitStrategy {
    fn start(&self, _s0: StateId) -> Box<dyn Controller + '_> {
        Box::new(OneBitController { strategy: self, mode: self.initial_mode })
    }
}

/// History-dependent randomized strategy. `decide` receives the run so far,
/// ending in the current controlled state.
#[derive(Clone)]
pub struct GeneralStrategy {
    decide: Arc<dyn Fn(&[StateId]) -> Distribution + Send + Sync>,
}

impl GeneralStrategy {
    pub fn new(decide: impl Fn(&[StateId]) -> Distribution + Send + Sync + 'static) -> Self {
        Self { decide: Arc::new(decide) }
    }

    pub fn decide(&self, history: &[StateId]) -> Distribution {
        (self.decide)(history)
    }

    /// Plays an MD strategy.
    pub fn from_md(sigma: MdStrategy, mdp: Arc<dyn Mdp>) -> Self {
        Self::new(move |h| {
            let s = *h.last().expect("non-empty history");
            Distribution::dirac(sigma.decide(s, &mdp.moves(s)))
        })
    }
}

struct GeneralController<'a> {
    strategy: &'a GeneralStrategy,
    history: Vec<StateId>,
}

impl Controller for GeneralController<'_> {
    fn choose(&mut self, _s: StateId, _moves: &Moves, rng: &mut dyn RngCore) -> StateId {
        self.strategy.decide(&self.history).sample(rng)
    }

    fn observe(&mut self, _from: StateId, _kind: StateKind, to: StateId) {
        self.history.push(to);
    }
}

impl Strategy for GeneralStrategy {
    fn start(&self, s0: StateId) -> Box<dyn Controller + '_> {
        Box::new(GeneralController { strategy: self, history: vec![s0] })
    }
}

/// Picks a successor uniformly at random at every step. Fans are sampled
/// geometrically: entry `i` with probability `2^-i`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformRandomStrategy;

struct UniformController;

impl Controller for UniformController {
    fn choose(&mut self, _s: StateId, moves: &Moves, rng: &mut dyn RngCore) -> StateId {
        match moves {
            Moves::Choice(v) => v[rng.gen_range(0..v.len())],
            Moves::ChoiceFan(f) => {
                let mut i = 1;
                while i < 64 && rng.gen::<bool>() {
                    i += 1;
                }
                f.get(i)
            }
            other => default_choice(other),
        }
    }
}

impl Strategy for UniformRandomStrategy {
    fn start(&self, _s0: StateId) -> Box<dyn Controller + '_> {
        Box::new(UniformController)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn md_json_round_trip() {
        let s = MdStrategy::from_indices([(0, 3), (5, 1)]);
        let text = s.to_json();
        assert!(text.contains("\"0\": 3"));
        assert_eq!(MdStrategy::from_json(&text).unwrap(), s);
    }

    #[test]
    fn default_rule_is_smallest_ordinal() {
        let s = MdStrategy::new();
        let moves = Moves::Choice(vec![StateId(7), StateId(2), StateId(4)]);
        assert_eq!(s.decide(StateId(0), &moves), StateId(2));
    }

    #[test]
    fn one_bit_json_round_trip() {
        let mut t = OneBitTable::default();
        t.controlled.insert((0, StateId(1)), (1, StateId(2)));
        t.random.insert((1, StateId(2), StateId(3)), 0);
        let s = OneBitStrategy::from_table(1, t);
        let back = OneBitStrategy::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.initial_mode(), 1);
        let moves = Moves::Choice(vec![StateId(2), StateId(5)]);
        assert_eq!(back.controlled_update(0, StateId(1), &moves), (1, StateId(2)));
        assert_eq!(back.controlled_update(1, StateId(1), &moves), (1, StateId(2)));
        assert_eq!(back.random_update(1, StateId(2), StateId(3)), 0);
        assert_eq!(back.random_update(0, StateId(2), StateId(3)), 0);
    }
}
