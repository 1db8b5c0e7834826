use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use super::params::SynthesisParams;
use crate::error::{Error, Result};
use crate::mdp::{
    estimate_transience, truncate, Estimate, FiniteMdp, Frontier, Mdp, MdStrategy, OneBitStrategy, Proxy, StateId,
    StateKind, Truncation,
};
use crate::solvers::{evaluate_reach_any, min_expected_cost_md, solve_sparse, CostLabel};

/// Smallest edge cost used for visits to well-visited states.
const MIN_COST: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TransienceBudgets {
    /// Radius of the truncation around `s0` on which the pipeline runs.
    pub radius: usize,
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
    pub proxy: Proxy,
}

impl Default for TransienceBudgets {
    fn default() -> Self {
        Self { radius: 40, runs: 2_000, horizon: 5_000, seed: 0, proxy: Proxy::RevisitCap(1_000) }
    }
}

/// States of the truncation split by what the 1-bit strategy achieves there.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GoodBadPartition {
    /// Both memory modes have escape probability 0.
    pub s_bad: BTreeSet<StateId>,
    pub s_good: BTreeSet<StateId>,
    /// Good states visited from `s0` under the repaired strategy.
    pub s_good_prime: BTreeSet<StateId>,
    /// Expected visits `R(s)` from `s0` under the repaired strategy.
    pub visit_estimates: BTreeMap<StateId, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransienceReport {
    pub partition: GoodBadPartition,
    pub v_hat: Estimate,
    /// States whose memory mode was switched by the repair.
    pub repaired: usize,
    /// Exact probability, on the truncation, of entering a bad state.
    pub bad_reach: f64,
    /// `(K+1)/K (1 - v_hat + eps')`.
    pub bad_bound: f64,
}

impl TransienceReport {
    pub fn bound_holds(&self) -> bool {
        self.bad_reach <= self.bad_bound + 1e-9
    }
}

/// The product of the truncation with the two memory modes; index
/// `2*i + m`. The frontier is absorbing and not part of the product.
struct Product {
    rows: Vec<Vec<(usize, f64)>>,
    frontier: usize,
}

fn product(mdp: &dyn Mdp, t: &Truncation, sigma: &OneBitStrategy) -> Product {
    let n = t.original.len();
    let frontier = 2 * n;
    let to = |s: StateId, m: u8| t.idx(s).map_or(frontier, |j| 2 * j + m as usize);
    let mut rows = vec![Vec::new(); frontier + 1];
    rows[frontier].push((frontier, 1.0));
    for (i, &s) in t.original.iter().enumerate() {
        let moves = mdp.moves(s);
        for m in 0..2u8 {
            let row = &mut rows[2 * i + m as usize];
            match moves.kind() {
                StateKind::Controlled => {
                    let (m2, u) = sigma.controlled_update(m, s, &moves);
                    row.push((to(u, m2), 1.0));
                }
                StateKind::Random => match moves.finite_successors() {
                    Some(succ) => {
                        for (u, p) in succ {
                            row.push((to(u, sigma.random_update(m, s, u)), p.unwrap_or(0.0)));
                        }
                    }
                    None => row.push((frontier, 1.0)),
                },
            }
        }
    }
    Product { rows, frontier }
}

/// States of a chain from which `target` is reachable.
fn reaches(rows: &[Vec<(usize, f64)>], target: usize) -> Vec<bool> {
    let mut pre = vec![Vec::new(); rows.len()];
    for (s, row) in rows.iter().enumerate() {
        for &(t, p) in row {
            if p > 0.0 {
                pre[t].push(s);
            }
        }
    }
    let mut seen = vec![false; rows.len()];
    seen[target] = true;
    let mut q = VecDeque::from([target]);
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

/// An MD strategy `eps`-optimal for Transience from `s0`, extracted from a
/// good 1-bit strategy.
///
/// On a truncation around `s0`: states where neither memory mode can escape
/// are bad and become losing sinks; the bit is switched wherever only the
/// other mode escapes; expected visits `R(s)` under the repaired strategy are
/// computed exactly; and an MD strategy minimizing the expected total of the
/// cost labels is returned. Entering a bad state costs `K/(1 - v_hat + eps')`,
/// entering a visited good state `2^-i(s)/R(s)` and any other good state 1.
pub fn transience_md(
    mdp: &dyn Mdp,
    s0: StateId,
    epsilon: f64,
    one_bit: &OneBitStrategy,
    budgets: &TransienceBudgets,
) -> Result<(MdStrategy, TransienceReport)> {
    let params = SynthesisParams::new(epsilon)?;
    let t = truncate(mdp, &[s0], budgets.radius, Frontier::Pessimistic)?;
    let n = t.original.len();
    let prod = product(mdp, &t, one_bit);
    let escape = reaches(&prod.rows, prod.frontier);
    let bad: Vec<bool> = (0..n).map(|i| !escape[2 * i] && !escape[2 * i + 1]).collect();

    // Repaired chain: entering (m, i) with m unable to escape switches to the other mode.
    let fix = |j: usize| if j == prod.frontier || escape[j] || bad[j / 2] { j } else { j ^ 1 };
    let mut repaired_states = BTreeSet::new();
    let start = fix(2 * t.idx(s0).expect("root") + one_bit.initial_mode() as usize);
    let mut order = vec![start];
    let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let j = order[k];
        k += 1;
        if j == prod.frontier || bad[j / 2] {
            rows.push(Vec::new());
            continue;
        }
        let mut row = Vec::new();
        for &(u, p) in &prod.rows[j] {
            let v = fix(u);
            if v != u {
                repaired_states.insert(u / 2);
            }
            let at = *pos.entry(v).or_insert_with(|| {
                order.push(v);
                order.len() - 1
            });
            row.push((at, p));
        }
        rows.push(row);
    }

    // Expected visits: (I - Q)^T x = e_start. Absorbing states have empty
    // rows, so their entry is the probability of reaching them.
    let m = order.len();
    let mut a: Vec<Vec<(usize, f64)>> = (0..m).map(|i| vec![(i, 1.0)]).collect();
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            a[j].push((i, -p));
        }
    }
    let mut b = vec![0.0; m];
    b[0] = 1.0;
    let visits = solve_sparse(a, b).map_err(|e| Error::BudgetExhausted(e.to_string()))?;
    if visits.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(Error::BudgetExhausted("expected visit counts are not finite".into()));
    }
    let mut r = vec![0.0; n];
    for (i, &j) in order.iter().enumerate() {
        if j != prod.frontier {
            r[j / 2] += visits[i].max(0.0);
        }
    }

    let mut partition = GoodBadPartition::default();
    for (i, &s) in t.original.iter().enumerate() {
        if bad[i] {
            partition.s_bad.insert(s);
        } else {
            partition.s_good.insert(s);
            if r[i] > 1e-12 {
                partition.s_good_prime.insert(s);
                partition.visit_estimates.insert(s, r[i]);
            }
        }
    }

    let v_hat = estimate_transience(mdp, s0, one_bit, budgets.horizon, budgets.runs, budgets.proxy, budgets.seed);
    let v_low = v_hat.lower();
    let bad_cost = params.k / (1.0 - v_low + params.epsilon_prime);

    // The truncation with bad states made losing sinks.
    let mut fm: FiniteMdp = t.fm.clone();
    for i in 0..n {
        if bad[i] {
            fm.set_moves(i, StateKind::Random, vec![i], vec![1.0]);
        }
    }
    let bad_ix: Vec<usize> = (0..n).filter(|&i| bad[i]).collect();
    if !bad_ix.is_empty() {
        fm.add_sink(bad_ix);
    }
    let iota = discovery_order(&fm, t.idx(s0).expect("root"));
    let mut cost = CostLabel::new();
    for from in 0..n {
        if bad[from] {
            continue;
        }
        for &to in fm.succ(from) {
            if to == t.frontier {
                continue;
            }
            let c = if bad[to] {
                bad_cost
            } else if r[to] > 1e-12 {
                (0.5f64.powi(iota[to].min(i32::MAX as usize) as i32) / r[to]).max(MIN_COST)
            } else {
                1.0
            };
            cost.set(StateId::from(from), StateId::from(to), c);
        }
    }
    let root = t.idx(s0).expect("root");
    let (local, _) = min_expected_cost_md(&fm, &cost, None)?;
    let bad_mask: Vec<bool> = (0..fm.len()).map(|i| i < n && bad[i]).collect();
    let bad_reach = evaluate_reach_any(&fm, &local, &bad_mask)?[root];

    let mut sigma = MdStrategy::new();
    for (&a, &b) in local.choices() {
        if let (Some(s), Some(u)) = (t.state(a.index()), t.state(b.index())) {
            if !bad[a.index()] {
                sigma.set(s, u);
            }
        }
    }
    let report = TransienceReport {
        partition,
        v_hat,
        repaired: repaired_states.len(),
        bad_reach,
        bad_bound: (params.k + 1.0) / params.k * (1.0 - v_low + params.epsilon_prime),
    };
    Ok((sigma, report))
}

/// Breadth-first discovery index of every state from `root`; unreachable
/// states come last.
fn discovery_order(fm: &FiniteMdp, root: usize) -> Vec<usize> {
    let mut idx = vec![usize::MAX; fm.len()];
    let mut next = 0;
    idx[root] = 0;
    let mut q = VecDeque::from([root]);
    while let Some(s) = q.pop_front() {
        for &t in fm.succ(s) {
            if idx[t] == usize::MAX {
                next += 1;
                idx[t] = next;
                q.push_back(t);
            }
        }
    }
    idx.iter().map(|&i| if i == usize::MAX { fm.len() } else { i }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{LadderState, NoOptimalLadder};
    use crate::solvers::md_transience_value;

    #[test]
    fn ladder_from_gamble_at_six() {
        let s0 = NoOptimalLadder::id(LadderState::Ell(0));
        let one_bit = OneBitStrategy::from_md(&NoOptimalLadder::exit_at(6));
        let budgets = TransienceBudgets { runs: 500, ..Default::default() };
        let (sigma, report) = transience_md(&NoOptimalLadder, s0, 0.1, &one_bit, &budgets).unwrap();
        let v = md_transience_value(&NoOptimalLadder, s0, &sigma, &NoOptimalLadder::settled_value, 100_000).unwrap();
        assert!(v.lower >= 0.9, "{v:?}");
        assert!(report.bound_holds());
        assert!(report.partition.s_bad.contains(&NoOptimalLadder::id(LadderState::Bot)));
    }
}
