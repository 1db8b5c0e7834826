use std::collections::BTreeMap;

use serde::Serialize;

use super::finite::{chain_total_cost, induced_chain};
use super::graph;
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, MdStrategy, StateId};

/// Non-negative cost per transition; unlisted transitions cost 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CostLabel {
    pub cost: BTreeMap<(StateId, StateId), f64>,
}

impl CostLabel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, from: StateId, to: StateId, c: f64) {
        assert!(c >= 0.0 && c.is_finite(), "costs must be finite and non-negative");
        self.cost.insert((from, to), c);
    }

    pub fn get(&self, from: StateId, to: StateId) -> f64 {
        self.cost.get(&(from, to)).copied().unwrap_or(0.0)
    }

    pub fn by_index(&self) -> impl Fn(usize, usize) -> f64 + '_ {
        move |s, t| self.get(StateId::from(s), StateId::from(t))
    }
}

/// An MD policy minimizing expected total cost, with the optimal expected
/// costs (`+inf` where no policy has finite cost).
///
/// Finite cost is possible exactly where the controller can reach, almost
/// surely, a region it can then stay in at zero cost. From a proper
/// attractor policy, policy iteration with exact evaluation converges to
/// the optimum; improvements need a strict gain and ties go to the smallest
/// successor index. With `root`, a root of infinite optimal cost is an error.
pub fn min_expected_cost_md(
    fm: &FiniteMdp,
    cost: &CostLabel,
    root: Option<StateId>,
) -> Result<(MdStrategy, Vec<f64>)> {
    let n = fm.len();
    let c = cost.by_index();
    let zero = graph::controllable_trap_by(fm, &vec![true; n], |s, t| c(s, t) == 0.0);
    let finite = graph::almost_sure_reach(fm, &zero);
    if let Some(r) = root {
        if !finite[r.index()] {
            return Err(Error::NoFiniteCostPolicy(r));
        }
    }

    // Attractor ranks towards the zero-cost region, inside `finite`.
    let mut rank = vec![usize::MAX; n];
    for s in 0..n {
        if zero[s] {
            rank[s] = 0;
        }
    }
    let mut k = 0;
    loop {
        let mut grown = Vec::new();
        for s in 0..n {
            if rank[s] != usize::MAX || !finite[s] {
                continue;
            }
            let ok = if fm.is_controlled(s) {
                fm.succ(s).iter().any(|&t| finite[t] && rank[t] <= k)
            } else {
                fm.succ(s).iter().any(|&t| rank[t] <= k)
            };
            if ok {
                grown.push(s);
            }
        }
        if grown.is_empty() {
            break;
        }
        k += 1;
        for s in grown {
            rank[s] = k;
        }
    }

    let mut policy = vec![usize::MAX; n];
    for s in fm.controlled_states() {
        let succ = fm.succ(s);
        policy[s] = if zero[s] {
            *succ.iter().filter(|&&t| zero[t] && c(s, t) == 0.0).min().expect("trap")
        } else if finite[s] {
            *succ.iter().filter(|&&t| finite[t]).min_by_key(|&&t| (rank[t], t)).expect("attractor")
        } else {
            *succ.iter().min().expect("non-empty")
        };
    }

    let mut values;
    let mut rounds = 0;
    loop {
        values = chain_total_cost(&induced_chain(fm, &policy), &c)?;
        let mut changed = false;
        for s in fm.controlled_states() {
            if !finite[s] {
                continue;
            }
            let q = |t: usize| c(s, t) + values[t];
            let current = q(policy[s]);
            let best = fm.succ(s).iter().filter(|&&t| finite[t]).map(|&t| q(t)).fold(current, f64::min);
            if best < current - 1e-12 * (1.0 + current.abs()) {
                policy[s] = *fm
                    .succ(s)
                    .iter()
                    .find(|&&t| finite[t] && q(t) <= best + 1e-12 * (1.0 + best.abs()))
                    .expect("best is attained");
                changed = true;
            }
        }
        rounds += 1;
        if !changed || rounds > 10_000 {
            break;
        }
    }
    let sigma = MdStrategy::from_indices(fm.controlled_states().map(|s| (s, policy[s])));
    Ok((sigma, values))
}

/// Exact expected total cost of an MD strategy.
pub fn evaluate_cost(fm: &FiniteMdp, sigma: &MdStrategy, cost: &CostLabel) -> Result<Vec<f64>> {
    let p = super::finite::policy_vector(fm, sigma);
    chain_total_cost(&induced_chain(fm, &p), &cost.by_index())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_cheaper_edge() {
        let mut b = FiniteMdp::builder();
        let s = b.controlled("s");
        let a = b.random("a");
        let z = b.random("z");
        b.choice(s, a).choice(s, z).self_loop(a).self_loop(z);
        let fm = b.build().unwrap();
        let mut cost = CostLabel::new();
        cost.set(StateId(0), StateId(1), 3.0);
        cost.set(StateId(0), StateId(2), 1.0);
        let (sigma, v) = min_expected_cost_md(&fm, &cost, Some(StateId(0))).unwrap();
        assert_eq!(sigma.get(StateId(0)), Some(StateId(2)));
        assert_eq!(v[0], 1.0);
    }

    #[test]
    fn positive_cost_loop_has_no_finite_policy() {
        let mut b = FiniteMdp::builder();
        let s = b.controlled("s");
        b.self_loop(s);
        let fm = b.build().unwrap();
        let mut cost = CostLabel::new();
        cost.set(StateId(0), StateId(0), 1.0);
        assert_eq!(
            min_expected_cost_md(&fm, &cost, Some(StateId(0))).unwrap_err(),
            Error::NoFiniteCostPolicy(StateId(0))
        );
    }
}
