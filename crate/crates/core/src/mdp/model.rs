use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use super::state::{Distribution, StateId, StateKind};
use crate::error::{Error, Result};

/// An infinite, lazily generated successor list. Indices start at 1.
pub struct Fan<T> {
    f: Arc<dyn Fn(usize) -> T + Send + Sync>,
}

impl<T> Clone for Fan<T> {
    fn clone(&self) -> Self {
        Self { f: Arc::clone(&self.f) }
    }
}

impl<T> fmt::Debug for Fan<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Fan(..)")
    }
}

impl<T> Fan<T> {
    pub fn new(f: impl Fn(usize) -> T + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// The `i`-th entry, `i >= 1`.
    pub fn get(&self, i: usize) -> T {
        assert!(i >= 1, "fan indices start at 1");
        (self.f)(i)
    }
}

/// Outgoing transitions of a state.
#[derive(Clone, Debug)]
pub enum Moves {
    Choice(Vec<StateId>),
    Chance(Distribution),
    ChoiceFan(Fan<StateId>),
    ChanceFan(Fan<(StateId, f64)>),
}

impl Moves {
    pub fn kind(&self) -> StateKind {
        match self {
            Moves::Choice(_) | Moves::ChoiceFan(_) => StateKind::Controlled,
            Moves::Chance(_) | Moves::ChanceFan(_) => StateKind::Random,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Moves::Choice(_) | Moves::Chance(_))
    }

    /// Finite successor list; probabilities are `None` for controlled states.
    pub fn finite_successors(&self) -> Option<Vec<(StateId, Option<f64>)>> {
        match self {
            Moves::Choice(v) => Some(v.iter().map(|&t| (t, None)).collect()),
            Moves::Chance(d) => Some(d.support().iter().map(|&(t, p)| (t, Some(p))).collect()),
            _ => None,
        }
    }

    /// Whether `t` is a legal successor. Fans are searched up to `fan_limit` entries.
    pub fn allows(&self, t: StateId, fan_limit: usize) -> bool {
        match self {
            Moves::Choice(v) => v.contains(&t),
            Moves::Chance(d) => d.probability(t) > 0.0,
            Moves::ChoiceFan(f) => (1..=fan_limit).any(|i| f.get(i) == t),
            Moves::ChanceFan(f) => (1..=fan_limit).any(|i| f.get(i).0 == t),
        }
    }

    /// Draws a successor of a random state.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Option<StateId> {
        match self {
            Moves::Chance(d) => Some(d.sample(rng)),
            Moves::ChanceFan(f) => {
                let u = rand::Rng::gen::<f64>(rng);
                let mut acc = 0.0;
                let mut i = 1;
                loop {
                    let (t, p) = f.get(i);
                    acc += p;
                    if u < acc || i > 1 << 20 {
                        return Some(t);
                    }
                    i += 1;
                }
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Finiteness {
    Finite(usize),
    Countable,
}

/// A countable MDP given by successor oracles.
///
/// Oracles must be pure. Implementations typically override [`Mdp::kind`]
/// and [`Mdp::sample`] to avoid building successor lists on hot paths.
pub trait Mdp: Send + Sync {
    fn moves(&self, s: StateId) -> Moves;

    fn label(&self, s: StateId) -> String {
        format!("s{}", s.0)
    }

    fn finiteness(&self) -> Finiteness {
        Finiteness::Countable
    }

    fn kind(&self, s: StateId) -> StateKind {
        self.moves(s).kind()
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        self.moves(s).sample(rng).expect("sample called on a controlled state")
    }

    /// Known upper bound on the return probability `Re(s)`, if the
    /// generator can supply one in closed form.
    fn return_bound(&self, _s: StateId) -> Option<f64> {
        None
    }
}

impl<M: Mdp + ?Sized> Mdp for &M {
    fn moves(&self, s: StateId) -> Moves {
        (**self).moves(s)
    }
    fn label(&self, s: StateId) -> String {
        (**self).label(s)
    }
    fn finiteness(&self) -> Finiteness {
        (**self).finiteness()
    }
    fn kind(&self, s: StateId) -> StateKind {
        (**self).kind(s)
    }
    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        (**self).sample(s, rng)
    }
    fn return_bound(&self, s: StateId) -> Option<f64> {
        (**self).return_bound(s)
    }
}

impl<M: Mdp + ?Sized> Mdp for Arc<M> {
    fn moves(&self, s: StateId) -> Moves {
        (**self).moves(s)
    }
    fn label(&self, s: StateId) -> String {
        (**self).label(s)
    }
    fn finiteness(&self) -> Finiteness {
        (**self).finiteness()
    }
    fn kind(&self, s: StateId) -> StateKind {
        (**self).kind(s)
    }
    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        (**self).sample(s, rng)
    }
    fn return_bound(&self, s: StateId) -> Option<f64> {
        (**self).return_bound(s)
    }
}

/// Checks the structural invariants of every state within `radius` steps of
/// `roots`: non-empty successor lists and distributions summing to one.
/// Fans are checked on their first `fan_width` entries, with the partial sum
/// required to stay at most one.
pub fn check_well_formed(
    mdp: &dyn Mdp,
    roots: &[StateId],
    radius: usize,
    fan_width: usize,
) -> Result<usize> {
    use std::collections::{HashSet, VecDeque};
    let mut seen: HashSet<StateId> = roots.iter().copied().collect();
    let mut queue: VecDeque<(StateId, usize)> = roots.iter().map(|&s| (s, 0)).collect();
    while let Some((s, d)) = queue.pop_front() {
        let succ: Vec<StateId> = match mdp.moves(s) {
            Moves::Choice(v) => {
                if v.is_empty() {
                    return Err(Error::Malformed(format!("{} has no successor", mdp.label(s))));
                }
                v
            }
            Moves::Chance(dist) => {
                Distribution::new(dist.support().to_vec())?;
                dist.support().iter().map(|e| e.0).collect()
            }
            Moves::ChoiceFan(f) => (1..=fan_width).map(|i| f.get(i)).collect(),
            Moves::ChanceFan(f) => {
                let entries: Vec<(StateId, f64)> = (1..=fan_width).map(|i| f.get(i)).collect();
                let sum: f64 = entries.iter().map(|e| e.1).sum();
                if sum > 1.0 + super::state::PROB_TOLERANCE || entries.iter().any(|e| e.1 < 0.0) {
                    return Err(Error::Malformed(format!("fan at {} has mass {sum}", mdp.label(s))));
                }
                entries.into_iter().map(|e| e.0).collect()
            }
        };
        if d < radius {
            for t in succ {
                if seen.insert(t) {
                    queue.push_back((t, d + 1));
                }
            }
        }
    }
    Ok(seen.len())
}
