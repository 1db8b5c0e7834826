use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{default_choice, run_seed, Controller, FiniteMdp, MdStrategy, Moves, StateId, StateKind, Strategy};

/// Which absorbing sinks a random MDP gets, and whether the rest is acyclic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkSpec {
    pub win: bool,
    pub lose: bool,
    /// Edges between non-sink states only go to higher indices.
    pub acyclic: bool,
}

impl Default for SinkSpec {
    fn default() -> Self {
        Self { win: true, lose: true, acyclic: false }
    }
}

/// A random connected finite MDP, reproducible from `seed`.
///
/// Non-sink states are `s0, s1, ...`; every one of them is reachable from `s0`.
/// The sinks come last: `win`, then `lose`, each a self-loop. With `n = 1`
/// the MDP is a single sink.
pub fn random_finite_mdp(seed: u64, n: usize, max_branching: usize, p_controlled: f64, sinks: SinkSpec) -> Result<FiniteMdp> {
    if n == 0 || max_branching == 0 || !(0.0..=1.0).contains(&p_controlled) {
        return Err(Error::BadParameter(format!("n={n}, branching={max_branching}, p_controlled={p_controlled}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = FiniteMdp::builder();
    let mut names: Vec<&str> = Vec::new();
    if sinks.win {
        names.push("win");
    }
    if sinks.lose {
        names.push("lose");
    }
    if n == 1 {
        let s = b.random(names.first().copied().unwrap_or("sink"));
        b.self_loop(s).sink(vec![s]);
        return b.build();
    }
    names.truncate(n - 1);
    if sinks.acyclic && names.is_empty() {
        return Err(Error::BadParameter("an acyclic MDP needs a sink".into()));
    }
    let core = n - names.len();
    let kinds: Vec<StateKind> = (0..core)
        .map(|_| if rng.gen_bool(p_controlled) { StateKind::Controlled } else { StateKind::Random })
        .collect();
    for (i, &k) in kinds.iter().enumerate() {
        b.state(&format!("s{i}"), k);
    }
    let sink_ix: Vec<usize> = names.iter().map(|l| b.random(l)).collect();

    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); core];
    for i in 1..core {
        succ[rng.gen_range(0..i)].insert(i);
    }
    for &t in &sink_ix {
        succ[rng.gen_range(0..core)].insert(t);
    }
    for (i, out) in succ.iter_mut().enumerate() {
        let lo = if sinks.acyclic { i + 1 } else { 0 };
        let want = rng.gen_range(1..=max_branching).min(n - lo);
        while out.len() < want {
            out.insert(rng.gen_range(lo..n));
        }
    }
    for (i, out) in succ.into_iter().enumerate() {
        let out: Vec<usize> = out.into_iter().collect();
        match kinds[i] {
            StateKind::Controlled => {
                for t in out {
                    b.choice(i, t);
                }
            }
            StateKind::Random => {
                let w: Vec<f64> = out.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
                let total: f64 = w.iter().sum();
                for (t, w) in out.into_iter().zip(w) {
                    b.chance(i, t, w / total);
                }
            }
        }
    }
    for &t in &sink_ix {
        b.self_loop(t).sink(vec![t]);
    }
    b.build()
}

/// A uniformly random MD strategy on a finite MDP.
pub fn random_md(fm: &FiniteMdp, rng: &mut impl Rng) -> MdStrategy {
    MdStrategy::from_indices(fm.controlled_states().map(|s| (s, *fm.succ(s).choose(rng).expect("non-empty"))))
}

/// A pseudo-random MD strategy on any MDP: the choice at a state is a hash
/// of the seed and the state. Fan entries are picked geometrically.
#[derive(Clone, Copy, Debug)]
pub struct HashedStrategy {
    pub seed: u64,
}

impl HashedStrategy {
    pub fn choose(&self, s: StateId, moves: &Moves) -> StateId {
        let h = run_seed(self.seed, s.0);
        match moves {
            Moves::Choice(v) => v[(h % v.len() as u64) as usize],
            Moves::ChoiceFan(f) => f.get(1 + (h.trailing_ones() as usize).min(63)),
            other => default_choice(other),
        }
    }
}

impl Controller for HashedStrategy {
    fn choose(&mut self, s: StateId, moves: &Moves, _rng: &mut dyn RngCore) -> StateId {
        HashedStrategy::choose(self, s, moves)
    }
}

impl Strategy for HashedStrategy {
    fn start(&self, _s0: StateId) -> Box<dyn Controller + '_> {
        Box::new(*self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sink() {
        let fm = random_finite_mdp(3, 1, 2, 0.5, SinkSpec::default()).unwrap();
        assert_eq!(fm.len(), 1);
        assert_eq!(fm.succ(0), &[0]);
    }

    #[test]
    fn acyclic_core_goes_forward() {
        let spec = SinkSpec { acyclic: true, ..Default::default() };
        for seed in 0..20 {
            let fm = random_finite_mdp(seed, 9, 3, 0.5, spec).unwrap();
            for s in 0..7 {
                assert!(fm.succ(s).iter().all(|&t| t > s));
            }
        }
    }
}
