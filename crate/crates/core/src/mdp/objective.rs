use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::finite::FiniteMdp;
use super::state::StateId;
use crate::error::{Error, Result};

/// A set of states, explicit or given by a membership predicate.
#[derive(Clone)]
pub enum StateSet {
    Explicit(BTreeSet<StateId>),
    Predicate(Arc<dyn Fn(StateId) -> bool + Send + Sync>),
    All,
}

impl StateSet {
    pub fn of(states: impl IntoIterator<Item = StateId>) -> Self {
        StateSet::Explicit(states.into_iter().collect())
    }

    pub fn from_indices(states: impl IntoIterator<Item = usize>) -> Self {
        Self::of(states.into_iter().map(StateId::from))
    }

    pub fn predicate(f: impl Fn(StateId) -> bool + Send + Sync + 'static) -> Self {
        StateSet::Predicate(Arc::new(f))
    }

    pub fn contains(&self, s: StateId) -> bool {
        match self {
            StateSet::Explicit(set) => set.contains(&s),
            StateSet::Predicate(f) => f(s),
            StateSet::All => true,
        }
    }

    pub fn indicator(&self, n: usize) -> Vec<bool> {
        (0..n).map(|i| self.contains(StateId::from(i))).collect()
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSet::Explicit(s) => f.debug_set().entries(s.iter().map(|x| x.0)).finish(),
            StateSet::Predicate(_) => f.write_str("{predicate}"),
            StateSet::All => f.write_str("S"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Objective {
    Transience,
    Reach(StateSet),
    Safety(StateSet),
    Buechi(StateSet),
    BuechiAndTransience(StateSet),
}

impl Objective {
    /// Checks that the objective is tail on `fm`: reachability and safety
    /// targets must be sinks.
    pub fn check_tail(&self, fm: &FiniteMdp) -> Result<()> {
        match self {
            Objective::Reach(t) | Objective::Safety(t) => {
                if fm.is_closed(&t.indicator(fm.len())) {
                    Ok(())
                } else {
                    Err(Error::NotTail(format!("{t:?} is not a sink")))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Transience => "Transience",
            Objective::Reach(_) => "Reach",
            Objective::Safety(_) => "Safety",
            Objective::Buechi(_) => "Buechi",
            Objective::BuechiAndTransience(_) => "BuechiAndTransience",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reach_needs_sink_target() {
        let mut b = FiniteMdp::builder();
        let a = b.controlled("a");
        let t = b.controlled("t");
        b.choice(a, t).choice(t, a).choice(t, t);
        let fm = b.build().unwrap();
        assert!(Objective::Reach(StateSet::from_indices([t])).check_tail(&fm).is_err());
        assert!(Objective::Reach(StateSet::from_indices([a, t])).check_tail(&fm).is_ok());
        assert!(Objective::Transience.check_tail(&fm).is_ok());
    }
}
