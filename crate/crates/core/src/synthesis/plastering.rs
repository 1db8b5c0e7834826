use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::params::SynthesisParams;
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, MdStrategy, Objective, StateId};
use crate::solvers::{
    evaluate_reach_any, policy_vector, reach_solution, safety_solution, ValueMap, DEFAULT_TOL,
};
use crate::transforms::plus_variant;

/// A tail objective on a finite MDP, as an indicator over states.
#[derive(Clone, Debug, PartialEq)]
pub enum FinitePhi {
    Reach(Vec<bool>),
    Safety(Vec<bool>),
}

impl FinitePhi {
    pub fn of(fm: &FiniteMdp, phi: &Objective) -> Result<Self> {
        phi.check_tail(fm)?;
        match phi {
            Objective::Reach(t) => Ok(Self::Reach(t.indicator(fm.len()))),
            Objective::Safety(a) => Ok(Self::Safety(a.indicator(fm.len()))),
            other => Err(Error::NotTail(format!("{} is not handled on finite MDPs", other.name()))),
        }
    }

    pub fn solve(&self, fm: &FiniteMdp) -> Result<(ValueMap, MdStrategy)> {
        match self {
            Self::Reach(t) => reach_solution(fm, t, DEFAULT_TOL),
            Self::Safety(a) => safety_solution(fm, a, DEFAULT_TOL),
        }
    }

    pub fn evaluate(&self, fm: &FiniteMdp, sigma: &MdStrategy) -> Result<Vec<f64>> {
        match self {
            Self::Reach(t) => evaluate_reach_any(fm, sigma, t),
            Self::Safety(a) => Ok(evaluate_reach_any(fm, sigma, a)?.into_iter().map(|v| 1.0 - v).collect()),
        }
    }
}

/// Supplies, for an MDP and a state, an MD strategy whose value from that
/// state is within `slack` of optimal.
pub trait MdOracle {
    fn supply(&self, fm: &FiniteMdp, phi: &FinitePhi, s: usize, slack: f64) -> Result<MdStrategy>;
}

/// Optimal MD strategies from the exact solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactOracle;

impl MdOracle for ExactOracle {
    fn supply(&self, fm: &FiniteMdp, phi: &FinitePhi, _s: usize, _slack: f64) -> Result<MdStrategy> {
        Ok(phi.solve(fm)?.1)
    }
}

/// Plays optimally on the states reachable from the requested state and
/// picks a worst successor everywhere else. Only good from that one state.
#[derive(Clone, Copy, Debug, Default)]
pub struct LocalOracle;

impl MdOracle for LocalOracle {
    fn supply(&self, fm: &FiniteMdp, phi: &FinitePhi, s: usize, _slack: f64) -> Result<MdStrategy> {
        let (values, best) = phi.solve(fm)?;
        let policy = policy_vector(fm, &best);
        let mut seen = vec![false; fm.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            let next: Vec<usize> = if fm.is_controlled(x) { vec![policy[x]] } else { fm.succ(x).to_vec() };
            for t in next {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        let mut out = MdStrategy::new();
        for x in fm.controlled_states() {
            let t = if seen[x] {
                policy[x]
            } else {
                *fm.succ(x).iter().min_by(|a, b| values.values[**a].total_cmp(&values.values[**b])).expect("nonempty")
            };
            out.set(StateId::from(x), StateId::from(t));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlasteringRound {
    pub round: usize,
    pub state: usize,
    pub slack: f64,
    /// States where the supplied strategy was within `slack` of the value.
    pub good: Vec<usize>,
    pub newly_fixed: usize,
    /// Probability, from `state`, of ever leaving the good set.
    pub escape: f64,
    /// Largest value loss over all states caused by this round's fixing.
    pub worst_drop: f64,
}

impl PlasteringRound {
    pub fn escape_ok(&self) -> bool {
        self.escape <= self.slack + 1e-9
    }

    pub fn drop_ok(&self) -> bool {
        self.worst_drop <= self.slack + 1e-9
    }
}

/// Audit trail of a plastering run.
#[derive(Clone, Debug, Serialize)]
pub struct PlasteringState {
    pub round: usize,
    #[serde(skip)]
    pub current: FiniteMdp,
    pub fixed: BTreeMap<usize, usize>,
    pub rounds: Vec<PlasteringRound>,
}

impl PlasteringState {
    pub fn audit_json(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            round: usize,
            state: usize,
            slack: f64,
            good: usize,
            newly_fixed: usize,
            escape: f64,
            worst_drop: f64,
        }
        let rows: Vec<Row> = self
            .rounds
            .iter()
            .map(|r| Row {
                round: r.round,
                state: r.state,
                slack: r.slack,
                good: r.good.len(),
                newly_fixed: r.newly_fixed,
                escape: r.escape,
                worst_drop: r.worst_drop,
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("serializable")
    }
}

/// A uniform `eps`-optimal MD strategy for a tail objective on a finite MDP.
///
/// Round `i` asks the oracle for a strategy that is `eps_i^2`-optimal from the
/// `i`-th state, collects the states where it is `eps_i`-optimal and fixes it
/// there for good.
pub fn plastering_uniformize(
    fm: &FiniteMdp,
    phi: &Objective,
    epsilon: f64,
    oracle: &dyn MdOracle,
) -> Result<(MdStrategy, PlasteringState)> {
    let params = SynthesisParams::new(epsilon)?;
    let phi = FinitePhi::of(fm, phi)?;
    let n = fm.len();
    let mut state = PlasteringState { round: 0, current: fm.clone(), fixed: BTreeMap::new(), rounds: Vec::new() };
    let mut values = phi.solve(fm)?.0.values;
    let free = |st: &PlasteringState| fm.controlled_states().any(|s| !st.fixed.contains_key(&s));
    for s_i in 0..n {
        if !free(&state) {
            break;
        }
        let round = s_i + 1;
        let slack = params.plastering_slack(round);
        let sigma = oracle.supply(&state.current, &phi, s_i, slack * slack)?;
        let attained = phi.evaluate(&state.current, &sigma)?;
        let good: Vec<bool> = (0..n).map(|s| attained[s] >= values[s] - slack).collect();
        let outside: Vec<bool> = good.iter().map(|g| !g).collect();
        let escape = evaluate_reach_any(&state.current, &sigma, &outside)?[s_i];

        let policy = policy_vector(&state.current, &sigma);
        let mut newly = 0;
        for s in fm.controlled_states().filter(|&s| good[s]) {
            if let std::collections::btree_map::Entry::Vacant(e) = state.fixed.entry(s) {
                e.insert(policy[s]);
                newly += 1;
            }
        }
        state.current = fm.with_fixed(&state.fixed)?;
        let next = phi.solve(&state.current)?.0.values;
        let worst_drop = (0..n).map(|s| values[s] - next[s]).fold(0.0, f64::max);
        values = next;
        state.round = round;
        state.rounds.push(PlasteringRound {
            round,
            state: s_i,
            slack,
            good: (0..n).filter(|&s| good[s]).collect(),
            newly_fixed: newly,
            escape,
            worst_drop,
        });
    }
    let sigma = MdStrategy::from_indices(state.fixed.iter().map(|(&s, &t)| (s, t)));
    Ok((sigma, state))
}

/// An MD strategy that is optimal from every state of a finite MDP.
///
/// For reachability this follows the restriction to positive values with
/// value-preserving edges, where every state wins almost surely, and
/// uniformizes there with slack 1/2. Zero-value states keep the default rule.
/// For safety the solver's optimal strategy is already uniform.
pub fn optimal_md_where_exists(fm: &FiniteMdp, phi: &Objective) -> Result<MdStrategy> {
    let finite = FinitePhi::of(fm, phi)?;
    let (values, best) = finite.solve(fm)?;
    if matches!(finite, FinitePhi::Safety(_)) {
        return Ok(best);
    }
    if values.values.iter().all(|&v| v <= crate::transforms::VALUE_EPS) {
        return Ok(MdStrategy::new());
    }
    let plus = plus_variant(fm, phi, &values)?;
    let target: BTreeSet<usize> = plus.target.iter().enumerate().filter(|e| *e.1).map(|e| e.0).collect();
    let plus_phi = Objective::Reach(crate::mdp::StateSet::from_indices(target));
    let (sigma, _) = plastering_uniformize(&plus.fm, &plus_phi, 0.5, &ExactOracle)?;
    Ok(plus.to_base_md(&sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::StateSet;

    /// Two controlled states, each best served by a different global choice
    /// only when the other is ignored.
    fn two_state() -> (FiniteMdp, Objective) {
        let mut b = FiniteMdp::builder();
        let a = b.controlled("a");
        let c = b.controlled("c");
        let coin = b.random("coin");
        let win = b.random("win");
        let lose = b.random("lose");
        b.choice(a, coin).choice(a, c);
        b.choice(c, win).choice(c, a);
        b.chance(coin, win, 0.9).chance(coin, lose, 0.1);
        b.self_loop(win).self_loop(lose);
        b.sink(vec![win]).sink(vec![lose]);
        (b.build().unwrap(), Objective::Reach(StateSet::from_indices([win])))
    }

    #[test]
    fn uniform_with_local_oracle() {
        let (fm, phi) = two_state();
        let (sigma, st) = plastering_uniformize(&fm, &phi, 0.05, &LocalOracle).unwrap();
        let fp = FinitePhi::of(&fm, &phi).unwrap();
        let val = fp.solve(&fm).unwrap().0.values;
        let got = fp.evaluate(&fm, &sigma).unwrap();
        for s in 0..fm.len() {
            assert!(got[s] >= val[s] - 0.05, "state {s}: {} vs {}", got[s], val[s]);
        }
        assert!(st.rounds.iter().all(|r| r.escape_ok() && r.drop_ok()));
    }

    #[test]
    fn optimal_everywhere() {
        let (fm, phi) = two_state();
        let sigma = optimal_md_where_exists(&fm, &phi).unwrap();
        let fp = FinitePhi::of(&fm, &phi).unwrap();
        let val = fp.solve(&fm).unwrap().0.values;
        let got = fp.evaluate(&fm, &sigma).unwrap();
        for s in 0..fm.len() {
            assert!((got[s] - val[s]).abs() < 1e-9);
        }
    }
}
