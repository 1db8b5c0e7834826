use std::collections::{BTreeMap, BTreeSet};

use super::finite::{solve_terminal, Sense, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, MdStrategy, StateId};

/// Maximize the reward collected on first entry to a frontier, inside a
/// finite subspace. Leaving the subspace earns 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundedRewardSpec {
    pub subspace: BTreeSet<StateId>,
    pub terminal_rewards: BTreeMap<StateId, f64>,
}

impl BoundedRewardSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some((s, r)) = self.terminal_rewards.iter().find(|(_, &r)| !(0.0..=1.0).contains(&r)) {
            return Err(Error::BadParameter(format!("reward {r} at {s} outside [0,1]")));
        }
        Ok(())
    }

    /// Terminal weights on the states of `fm`.
    pub fn terminal(&self, fm: &FiniteMdp) -> Vec<Option<f64>> {
        (0..fm.len())
            .map(|i| {
                let s = StateId::from(i);
                match self.terminal_rewards.get(&s) {
                    Some(&r) => Some(r),
                    None if !self.subspace.contains(&s) => Some(0.0),
                    None => None,
                }
            })
            .collect()
    }
}

/// An MD strategy optimal for the bounded reward objective at every state of
/// the subspace, with its values.
pub fn bounded_total_reward_md(spec: &BoundedRewardSpec, fm: &FiniteMdp) -> Result<(MdStrategy, Vec<f64>)> {
    spec.validate()?;
    let terminal = spec.terminal(fm);
    let sol = solve_terminal(fm, &terminal, Sense::Max, DEFAULT_TOL)?;
    let sigma = MdStrategy::from_indices(
        (0..fm.len())
            .filter(|&i| fm.is_controlled(i) && terminal[i].is_none())
            .map(|i| (i, sol.policy[i])),
    );
    Ok((sigma, sol.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_flip_beats_direct_half() {
        let mut b = FiniteMdp::builder();
        let s = b.controlled("s");
        let coin = b.random("coin");
        let lo = b.random("lo");
        let hi = b.random("hi");
        let mid = b.random("mid");
        b.choice(s, coin).choice(s, mid);
        b.chance(coin, lo, 0.5).chance(coin, hi, 0.5);
        for x in [lo, hi, mid] {
            b.self_loop(x);
        }
        let fm = b.build().unwrap();
        let spec = BoundedRewardSpec {
            subspace: [s, coin].into_iter().map(StateId::from).collect(),
            terminal_rewards: [(lo, 0.3), (hi, 0.8), (mid, 0.5)].into_iter().map(|(i, r)| (StateId::from(i), r)).collect(),
        };
        let (sigma, v) = bounded_total_reward_md(&spec, &fm).unwrap();
        assert_eq!(sigma.get(StateId(0)), Some(StateId(1)));
        assert!((v[0] - 0.55).abs() < 1e-12);
    }
}
