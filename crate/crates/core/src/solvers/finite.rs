use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::{self, chain::Chain};
use super::linear::solve_sparse;
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, MdStrategy, StateId};

pub const DEFAULT_TOL: f64 = 1e-9;
const VI_ITERATION_CAP: usize = 1_000_000;
const VI_WORK_BUDGET: usize = 50_000_000;
const IMPROVE_EPS: f64 = 1e-12;

/// Values of a finite MDP, indexed by state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueMap {
    #[serde(serialize_with = "serialize_by_ordinal")]
    pub values: Vec<f64>,
    pub objective: String,
    pub tolerance: f64,
}

fn serialize_by_ordinal<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(v.len()))?;
    for (i, x) in v.iter().enumerate() {
        m.serialize_entry(&i.to_string(), x)?;
    }
    m.end()
}

impl ValueMap {
    pub fn get(&self, s: StateId) -> f64 {
        self.values[s.index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

/// Result of the terminal-reward engine: values and an MD policy given as a
/// successor index per state (`usize::MAX` for random states).
#[derive(Clone, Debug)]
pub struct Solution {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
}

impl Solution {
    pub fn strategy(&self) -> MdStrategy {
        MdStrategy::from_indices(
            self.policy.iter().enumerate().filter(|(_, &t)| t != usize::MAX).map(|(s, &t)| (s, t)),
        )
    }
}

/// Markov chain induced by choosing `policy[s]` at every controlled state.
pub fn induced_chain(fm: &FiniteMdp, policy: &[usize]) -> Chain {
    (0..fm.len())
        .map(|s| {
            if fm.is_controlled(s) {
                vec![(policy[s], 1.0)]
            } else {
                fm.succ(s).iter().copied().zip(fm.probs(s).iter().copied()).collect()
            }
        })
        .collect()
}

/// Probability-weighted terminal reward in a chain: states with
/// `terminal[s] = Some(w)` are absorbing with reward `w`; runs that never
/// reach them earn 0. Solved exactly.
pub fn chain_terminal_value(chain: &Chain, terminal: &[Option<f64>]) -> Result<Vec<f64>> {
    let n = chain.len();
    let positive: Vec<bool> = terminal.iter().map(|w| matches!(w, Some(x) if *x > 0.0)).collect();
    let reach = graph::chain::can_reach(chain, &positive);
    let mut x = vec![0.0; n];
    let mut pos = vec![usize::MAX; n];
    let mut unknown = Vec::new();
    for s in 0..n {
        match terminal[s] {
            Some(w) => x[s] = w,
            None if reach[s] => {
                pos[s] = unknown.len();
                unknown.push(s);
            }
            None => {}
        }
    }
    if unknown.is_empty() {
        return Ok(x);
    }
    let mut rows = Vec::with_capacity(unknown.len());
    let mut rhs = vec![0.0; unknown.len()];
    for (k, &s) in unknown.iter().enumerate() {
        let mut row = vec![(k, 1.0)];
        for &(t, p) in &chain[s] {
            if let Some(w) = terminal[t] {
                rhs[k] += p * w;
            } else if pos[t] != usize::MAX {
                row.push((pos[t], -p));
            }
        }
        rows.push(row);
    }
    let sol = solve_sparse(rows, rhs)?;
    for (k, &s) in unknown.iter().enumerate() {
        x[s] = sol[k].max(0.0);
    }
    Ok(x)
}

/// Expected total cost in a chain, `+inf` where it diverges.
pub fn chain_total_cost(chain: &Chain, cost: &dyn Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let n = chain.len();
    let zero = graph::chain::closed_core(chain, &vec![true; n], |s, t| cost(s, t) == 0.0);
    let reach_zero = graph::chain::can_reach(chain, &zero);
    let bad: Vec<bool> = reach_zero.iter().map(|r| !r).collect();
    let infinite = graph::chain::can_reach(chain, &bad);
    let mut x = vec![0.0; n];
    let mut pos = vec![usize::MAX; n];
    let mut unknown = Vec::new();
    for s in 0..n {
        if infinite[s] {
            x[s] = f64::INFINITY;
        } else if !zero[s] {
            pos[s] = unknown.len();
            unknown.push(s);
        }
    }
    let mut rows = Vec::with_capacity(unknown.len());
    let mut rhs = vec![0.0; unknown.len()];
    for (k, &s) in unknown.iter().enumerate() {
        let mut row = vec![(k, 1.0)];
        for &(t, p) in &chain[s] {
            rhs[k] += p * cost(s, t);
            if pos[t] != usize::MAX {
                row.push((pos[t], -p));
            }
        }
        rows.push(row);
    }
    if !unknown.is_empty() {
        let sol = solve_sparse(rows, rhs)?;
        for (k, &s) in unknown.iter().enumerate() {
            x[s] = sol[k];
        }
    }
    Ok(x)
}

fn q_value(fm: &FiniteMdp, s: usize, v: &[f64]) -> f64 {
    fm.succ(s).iter().zip(fm.probs(s)).map(|(&t, &p)| p * v[t]).sum()
}

/// Optimal terminal-reward values and an optimal MD policy. States with
/// `terminal[s] = Some(w)` are treated as absorbing with reward `w`.
///
/// Gauss-Seidel value iteration in index order gives a warm start; the
/// greedy policy is then polished by policy iteration with exact chain
/// evaluation. Ties go to the smallest successor index.
pub fn solve_terminal(fm: &FiniteMdp, terminal: &[Option<f64>], sense: Sense, tol: f64) -> Result<Solution> {
    let n = fm.len();
    let positive: Vec<bool> = terminal.iter().map(|w| matches!(w, Some(x) if *x > 0.0)).collect();
    // States whose value is 0 for certain.
    let zero: Vec<bool> = match sense {
        Sense::Max => graph::can_reach(fm, &positive).iter().map(|r| !r).collect(),
        Sense::Min => {
            let allowed: Vec<bool> = (0..n).map(|s| !positive[s]).collect();
            graph::controllable_trap(fm, &allowed)
        }
    };
    let better = |a: f64, b: f64| match sense {
        Sense::Max => a > b,
        Sense::Min => a < b,
    };

    let mut v: Vec<f64> = (0..n).map(|s| terminal[s].unwrap_or(0.0)).collect();
    if sense == Sense::Min {
        for s in 0..n {
            if terminal[s].is_none() && !zero[s] {
                v[s] = 1.0;
            }
        }
    }
    let edges: usize = (0..n).map(|s| fm.succ(s).len()).sum::<usize>().max(1);
    let mut work = 0usize;
    for _ in 0..VI_ITERATION_CAP {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if terminal[s].is_some() || zero[s] {
                continue;
            }
            let nv = if fm.is_controlled(s) {
                let it = fm.succ(s).iter().map(|&t| v[t]);
                match sense {
                    Sense::Max => it.fold(f64::NEG_INFINITY, f64::max),
                    Sense::Min => it.fold(f64::INFINITY, f64::min),
                }
            } else {
                q_value(fm, s, &v)
            };
            delta = delta.max((nv - v[s]).abs());
            v[s] = nv;
        }
        work += edges;
        if delta < tol || work > VI_WORK_BUDGET {
            break;
        }
    }

    // Greedy policy; for Max, prefer optimal edges that make progress.
    let near = |s: usize, t: usize, v: &[f64]| {
        let best = fm.succ(s).iter().map(|&u| v[u]).fold(
            match sense {
                Sense::Max => f64::NEG_INFINITY,
                Sense::Min => f64::INFINITY,
            },
            |a, b| if better(b, a) { b } else { a },
        );
        (v[t] - best).abs() <= 1e-9
    };
    let dist = match sense {
        Sense::Max => graph::distance_to(fm, &positive, |s, t| near(s, t, &v)),
        Sense::Min => vec![0; n],
    };
    let mut policy = vec![usize::MAX; n];
    for s in 0..n {
        if !fm.is_controlled(s) {
            continue;
        }
        policy[s] = *fm
            .succ(s)
            .iter()
            .filter(|&&t| near(s, t, &v))
            .min_by_key(|&&t| (dist[t], t))
            .expect("non-empty");
        if zero[s] && sense == Sense::Min {
            policy[s] = *fm.succ(s).iter().filter(|&&t| zero[t]).min().expect("trap keeps a successor");
        }
    }

    let mut values;
    let mut rounds = 0;
    loop {
        values = chain_terminal_value(&induced_chain(fm, &policy), terminal)?;
        let mut changed = false;
        for s in 0..n {
            if !fm.is_controlled(s) || terminal[s].is_some() {
                continue;
            }
            let current = values[policy[s]];
            let best = fm
                .succ(s)
                .iter()
                .map(|&t| values[t])
                .fold(current, |a, b| if better(b, a) { b } else { a });
            if better(best, current) && (best - current).abs() > IMPROVE_EPS {
                policy[s] = *fm
                    .succ(s)
                    .iter()
                    .find(|&&t| (values[t] - best).abs() <= IMPROVE_EPS)
                    .expect("best is attained");
                changed = true;
            }
        }
        rounds += 1;
        if !changed || rounds > 10_000 {
            break;
        }
    }
    let lo = terminal.iter().flatten().fold(0.0f64, |a, &b| a.min(b));
    let hi = terminal.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    for v in &mut values {
        *v = v.clamp(lo, hi);
    }
    Ok(Solution { values, policy })
}

fn terminal_from(set: &[bool]) -> Vec<Option<f64>> {
    set.iter().map(|&b| if b { Some(1.0) } else { None }).collect()
}

/// Maximal probability of reaching the sink `target`, with an optimal MD strategy.
pub fn reach_solution(fm: &FiniteMdp, target: &[bool], tol: f64) -> Result<(ValueMap, MdStrategy)> {
    if !fm.is_closed(target) {
        return Err(Error::NotSink);
    }
    let sol = solve_terminal(fm, &terminal_from(target), Sense::Max, tol)?;
    Ok((ValueMap { values: sol.values.clone(), objective: "Reach".into(), tolerance: tol }, sol.strategy()))
}

/// Maximal probability of reaching the sink `target`.
pub fn reach_value(fm: &FiniteMdp, target: &[bool], tol: f64) -> Result<ValueMap> {
    Ok(reach_solution(fm, target, tol)?.0)
}

/// Maximal probability of never entering `avoid`, with an optimal MD strategy.
pub fn safety_solution(fm: &FiniteMdp, avoid: &[bool], tol: f64) -> Result<(ValueMap, MdStrategy)> {
    let sol = solve_terminal(fm, &terminal_from(avoid), Sense::Min, tol)?;
    let values = sol.values.iter().map(|v| 1.0 - v).collect();
    Ok((ValueMap { values, objective: "Safety".into(), tolerance: tol }, sol.strategy()))
}

/// Maximal probability of never entering `avoid`: the complement of the
/// minimal probability of reaching it.
pub fn safety_value(fm: &FiniteMdp, avoid: &[bool], tol: f64) -> Result<ValueMap> {
    Ok(safety_solution(fm, avoid, tol)?.0)
}

/// Successor index chosen by `sigma` at every controlled state.
pub fn policy_vector(fm: &FiniteMdp, sigma: &MdStrategy) -> Vec<usize> {
    (0..fm.len())
        .map(|s| if fm.is_controlled(s) { sigma.decide_index(s, fm.succ(s)) } else { usize::MAX })
        .collect()
}

/// Exact probability of reaching `target` under `sigma`.
pub fn evaluate_reach(fm: &FiniteMdp, sigma: &MdStrategy, target: &[bool]) -> Result<Vec<f64>> {
    chain_terminal_value(&induced_chain(fm, &policy_vector(fm, sigma)), &terminal_from(target))
}

/// Exact probability of avoiding `avoid` forever under `sigma`.
pub fn evaluate_safety(fm: &FiniteMdp, sigma: &MdStrategy, avoid: &[bool]) -> Result<Vec<f64>> {
    Ok(evaluate_reach_any(fm, sigma, avoid)?.into_iter().map(|v| 1.0 - v).collect())
}

/// Exact probability of reaching `set` (not necessarily a sink) under `sigma`.
pub fn evaluate_reach_any(fm: &FiniteMdp, sigma: &MdStrategy, set: &[bool]) -> Result<Vec<f64>> {
    chain_terminal_value(&induced_chain(fm, &policy_vector(fm, sigma)), &terminal_from(set))
}

/// Fixes every controlled state of `fm` to `sigma`'s choice.
pub fn fix_all(fm: &FiniteMdp, sigma: &MdStrategy) -> Result<FiniteMdp> {
    let p = policy_vector(fm, sigma);
    let map: BTreeMap<usize, usize> = fm.controlled_states().map(|s| (s, p[s])).collect();
    fm.with_fixed(&map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deterministic_choice() -> (FiniteMdp, Vec<bool>) {
        // s chooses between a trap loop and a coin with 0.3 to target.
        let mut b = FiniteMdp::builder();
        let s = b.controlled("s");
        let coin = b.random("coin");
        let t = b.random("t");
        let d = b.random("dead");
        b.choice(s, s).choice(s, coin);
        b.chance(coin, t, 0.3).chance(coin, d, 0.7).self_loop(t).self_loop(d);
        let fm = b.build().unwrap();
        let target = fm.indicator([t]);
        (fm, target)
    }

    #[test]
    fn reach_avoids_end_component_trap() {
        let (fm, target) = deterministic_choice();
        let (vm, sigma) = reach_solution(&fm, &target, DEFAULT_TOL).unwrap();
        assert!((vm.values[0] - 0.3).abs() < 1e-12);
        assert_eq!(sigma.get(StateId(0)), Some(StateId(1)));
    }

    #[test]
    fn safety_prefers_the_loop() {
        let (fm, target) = deterministic_choice();
        let dead = fm.indicator([3]);
        let (vm, sigma) = safety_solution(&fm, &dead, DEFAULT_TOL).unwrap();
        assert_eq!(vm.values[0], 1.0);
        assert_eq!(sigma.get(StateId(0)), Some(StateId(0)));
        assert!(reach_value(&fm, &fm.indicator([0]), DEFAULT_TOL).is_err());
        let _ = target;
    }

    #[test]
    fn chain_cost_detects_divergence() {
        let chain: Chain = vec![vec![(0, 0.5), (1, 0.5)], vec![(1, 1.0)], vec![(2, 1.0)]];
        let c = chain_total_cost(&chain, &|s, t| if s == 0 && t == 1 { 2.0 } else if s == 2 { 1.0 } else { 0.0 })
            .unwrap();
        assert!((c[0] - 1.0 / 0.5 * 0.5 * 2.0).abs() < 1e-12);
        assert_eq!(c[1], 0.0);
        assert_eq!(c[2], f64::INFINITY);
    }
}
