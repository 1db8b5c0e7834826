use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::cost::CostLabel;
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, MdStrategy, StateId};

pub const DEFAULT_CONTROLLED_CAP: usize = 10;
pub const DEFAULT_BRANCHING_CAP: usize = 4;

/// What the brute-force oracle optimizes.
#[derive(Clone, Debug)]
pub enum OracleObjective {
    /// Maximize the probability of reaching the set (made absorbing).
    Reach(Vec<bool>),
    /// Maximize the probability of never entering the set.
    Safety(Vec<bool>),
    /// Maximize the reward collected on first entry to a terminal state;
    /// `Some(w)` marks terminal states.
    TerminalReward(Vec<Option<f64>>),
    /// Minimize expected total cost.
    MinCost(CostLabel),
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Best value per state over all MD policies.
    pub best: Vec<f64>,
    /// A policy attaining `best` everywhere (within 1e-9), if one exists.
    pub witness: Option<MdStrategy>,
    pub policies: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleCaps {
    pub controlled: usize,
    pub branching: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self { controlled: DEFAULT_CONTROLLED_CAP, branching: DEFAULT_BRANCHING_CAP }
    }
}

type Row = Vec<(usize, f64)>;

fn chain_of(fm: &FiniteMdp, choice: &[usize]) -> Vec<Row> {
    (0..fm.len())
        .map(|s| {
            if fm.is_controlled(s) {
                vec![(choice[s], 1.0)]
            } else {
                fm.succ(s).iter().copied().zip(fm.probs(s).iter().copied()).collect()
            }
        })
        .collect()
}

fn reaches(chain: &[Row], set: &[bool]) -> Vec<bool> {
    let n = chain.len();
    let mut pre = vec![Vec::new(); n];
    for (s, row) in chain.iter().enumerate() {
        for &(t, _) in row {
            pre[t].push(s);
        }
    }
    let mut seen = set.to_vec();
    let mut q: VecDeque<usize> = (0..n).filter(|&s| set[s]).collect();
    while let Some(t) = q.pop_front() {
        for &s in &pre[t] {
            if !seen[s] {
                seen[s] = true;
                q.push_back(s);
            }
        }
    }
    seen
}

/// Solves `x_s = sum_t P(s,t) (c(s,t) + x_t)` on `unknown`, with fixed
/// values elsewhere, by dense LU.
fn dense_solve(chain: &[Row], unknown: &[usize], fixed: &[f64], gain: &dyn Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let n = chain.len();
    let mut pos = vec![usize::MAX; n];
    for (k, &s) in unknown.iter().enumerate() {
        pos[s] = k;
    }
    let m = unknown.len();
    if m == 0 {
        return Ok(fixed.to_vec());
    }
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (k, &s) in unknown.iter().enumerate() {
        for &(t, p) in &chain[s] {
            b[k] += p * gain(s, t);
            if pos[t] != usize::MAX {
                a[(k, pos[t])] -= p;
            } else {
                b[k] += p * fixed[t];
            }
        }
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::Malformed("oracle system is singular".into()))?;
    let mut out = fixed.to_vec();
    for (k, &s) in unknown.iter().enumerate() {
        out[s] = x[k];
    }
    Ok(out)
}

fn terminal_value(chain: &[Row], terminal: &[Option<f64>]) -> Result<Vec<f64>> {
    let positive: Vec<bool> = terminal.iter().map(|w| w.is_some_and(|x| x > 0.0)).collect();
    let r = reaches(chain, &positive);
    let fixed: Vec<f64> = terminal.iter().map(|w| w.unwrap_or(0.0)).collect();
    let unknown: Vec<usize> = (0..chain.len()).filter(|&s| terminal[s].is_none() && r[s]).collect();
    dense_solve(chain, &unknown, &fixed, &|_, _| 0.0)
}

fn total_cost(chain: &[Row], cost: &CostLabel) -> Result<Vec<f64>> {
    let n = chain.len();
    let c = |s: usize, t: usize| cost.get(StateId::from(s), StateId::from(t));
    // Zero-cost closed core of the chain.
    let mut zero = vec![true; n];
    loop {
        let mut changed = false;
        for s in 0..n {
            if zero[s] && !chain[s].iter().all(|&(t, _)| zero[t] && c(s, t) == 0.0) {
                zero[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let to_zero = reaches(chain, &zero);
    let stuck: Vec<bool> = to_zero.iter().map(|r| !r).collect();
    let infinite = reaches(chain, &stuck);
    let fixed: Vec<f64> = (0..n).map(|s| if infinite[s] { f64::INFINITY } else { 0.0 }).collect();
    let unknown: Vec<usize> = (0..n).filter(|&s| !infinite[s] && !zero[s]).collect();
    dense_solve(chain, &unknown, &fixed, &c)
}

/// Exact value of one MD policy, given as a successor index per state.
pub fn oracle_evaluate(fm: &FiniteMdp, choice: &[usize], objective: &OracleObjective) -> Result<Vec<f64>> {
    let chain = chain_of(fm, choice);
    match objective {
        OracleObjective::Reach(set) => {
            terminal_value(&chain, &set.iter().map(|&b| b.then_some(1.0)).collect::<Vec<_>>())
        }
        OracleObjective::Safety(set) => Ok(terminal_value(
            &chain,
            &set.iter().map(|&b| b.then_some(1.0)).collect::<Vec<_>>(),
        )?
        .into_iter()
        .map(|v| 1.0 - v)
        .collect()),
        OracleObjective::TerminalReward(w) => terminal_value(&chain, w),
        OracleObjective::MinCost(c) => total_cost(&chain, c),
    }
}

/// Enumerates every MD policy, evaluates each exactly, and returns the best
/// value per state with a policy attaining all of them.
pub fn md_policy_oracle(fm: &FiniteMdp, objective: &OracleObjective, caps: OracleCaps) -> Result<OracleResult> {
    let controlled: Vec<usize> = fm.controlled_states().filter(|&s| fm.succ(s).len() > 1).collect();
    if controlled.len() > caps.controlled {
        return Err(Error::TooLarge(format!("{} controlled states > cap {}", controlled.len(), caps.controlled)));
    }
    if let Some(&s) = controlled.iter().find(|&&s| fm.succ(s).len() > caps.branching) {
        return Err(Error::TooLarge(format!("state {s} has branching {} > cap {}", fm.succ(s).len(), caps.branching)));
    }
    let minimize = matches!(objective, OracleObjective::MinCost(_));
    let n = fm.len();
    let mut choice: Vec<usize> = (0..n).map(|s| fm.succ(s)[0]).collect();
    let mut digits = vec![0usize; controlled.len()];
    let mut all: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    loop {
        for (k, &s) in controlled.iter().enumerate() {
            choice[s] = fm.succ(s)[digits[k]];
        }
        all.push((choice.clone(), oracle_evaluate(fm, &choice, objective)?));
        let mut k = 0;
        loop {
            if k == digits.len() {
                break;
            }
            digits[k] += 1;
            if digits[k] < fm.succ(controlled[k]).len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
        if k == digits.len() {
            break;
        }
    }
    let mut best = all[0].1.clone();
    for (_, v) in &all[1..] {
        for s in 0..n {
            best[s] = if minimize { best[s].min(v[s]) } else { best[s].max(v[s]) };
        }
    }
    let close = |a: f64, b: f64| (a == b) || (a - b).abs() <= 1e-9;
    let witness = all.iter().find(|(_, v)| (0..n).all(|s| close(v[s], best[s]))).map(|(c, _)| {
        MdStrategy::from_indices(fm.controlled_states().map(|s| (s, c[s])))
    });
    Ok(OracleResult { best, witness, policies: all.len() })
}
