use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability sums.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A state, identified by its position in the MDP's enumeration.
///
/// Ordinals are unique per MDP. Finite MDPs number their states `0..n`;
/// countable generators use an injective encoding. Labels live on the MDP
/// (see [`crate::mdp::Mdp::label`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u64);

impl StateId {
    pub fn ordinal(self) -> u64 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId(i as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateKind {
    Controlled,
    Random,
}

/// A finite-support probability distribution over states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    support: Vec<(StateId, f64)>,
}

impl Distribution {
    /// Builds a distribution, rejecting non-positive entries, duplicates and
    /// sums further than [`PROB_TOLERANCE`] from 1.
    pub fn new(support: Vec<(StateId, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Malformed("empty distribution".into()));
        }
        let mut sum = 0.0;
        for (i, &(s, p)) in support.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0 + PROB_TOLERANCE) {
                return Err(Error::Malformed(format!("probability {p} for {s} outside (0,1]")));
            }
            if support[..i].iter().any(|&(t, _)| t == s) {
                return Err(Error::Malformed(format!("duplicate support entry {s}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::Malformed(format!("probabilities sum to {sum}")));
        }
        Ok(Self { support })
    }

    /// Merges duplicate entries and drops zeros before validating.
    pub fn normalized(entries: impl IntoIterator<Item = (StateId, f64)>) -> Result<Self> {
        let mut support: Vec<(StateId, f64)> = Vec::new();
        for (s, p) in entries {
            if p <= 0.0 {
                continue;
            }
            match support.iter_mut().find(|(t, _)| *t == s) {
                Some(e) => e.1 += p,
                None => support.push((s, p)),
            }
        }
        Self::new(support)
    }

    pub fn dirac(s: StateId) -> Self {
        Self { support: vec![(s, 1.0)] }
    }

    pub fn uniform(states: &[StateId]) -> Result<Self> {
        let p = 1.0 / states.len() as f64;
        Self::normalized(states.iter().map(|&s| (s, p)))
    }

    pub fn support(&self) -> &[(StateId, f64)] {
        &self.support
    }

    pub fn probability(&self, s: StateId) -> f64 {
        self.support.iter().find(|(t, _)| *t == s).map_or(0.0, |e| e.1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(s, p) in &self.support {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.support[self.support.len() - 1].0
    }
}
