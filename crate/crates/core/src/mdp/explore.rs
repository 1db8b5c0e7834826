use std::collections::{BTreeSet, HashMap, VecDeque};

use super::finite::FiniteMdp;
use super::model::{Mdp, Moves};
use super::state::{StateId, StateKind};
use crate::error::{Error, Result};

/// How the frontier sink of a truncation is scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frontier {
    /// Counts as winning for the objective being bounded.
    Optimistic,
    /// Counts as losing.
    Pessimistic,
}

/// Finite successor list of `s`, or `InfiniteBranching`.
fn finite_successors(mdp: &dyn Mdp, s: StateId) -> Result<Vec<(StateId, Option<f64>)>> {
    mdp.moves(s).finite_successors().ok_or(Error::InfiniteBranching(s))
}

/// Breadth-first layers from `roots`, up to depth `k`. Returns each state with
/// its distance.
fn layers(
    mdp: &dyn Mdp,
    roots: &[StateId],
    k: usize,
    fan_width: Option<usize>,
) -> Result<Vec<(StateId, usize)>> {
    if roots.is_empty() {
        return Err(Error::BadParameter("empty root set".into()));
    }
    let mut dist: HashMap<StateId, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for &r in roots {
        if dist.insert(r, 0).is_none() {
            queue.push_back(r);
            order.push((r, 0));
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let succ: Vec<StateId> = match (mdp.moves(s), fan_width) {
            (Moves::ChoiceFan(f), Some(w)) => (1..=w).map(|i| f.get(i)).collect(),
            (Moves::ChanceFan(f), Some(w)) => (1..=w).map(|i| f.get(i)).filter(|e| e.1 > 0.0).map(|e| e.0).collect(),
            (m, _) => m.finite_successors().ok_or(Error::InfiniteBranching(s))?.into_iter().map(|e| e.0).collect(),
        };
        if d == k {
            continue;
        }
        for t in succ {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(t) {
                e.insert(d + 1);
                order.push((t, d + 1));
                queue.push_back(t);
            }
        }
    }
    Ok(order)
}

/// The bubble: all states reachable from `x` within at most `k` steps.
pub fn bubble(mdp: &dyn Mdp, x: &[StateId], k: usize) -> Result<BTreeSet<StateId>> {
    Ok(layers(mdp, x, k, None)?.into_iter().map(|e| e.0).collect())
}

/// Distances from `x` to every state of the bubble of radius `k`.
pub fn bubble_depths(mdp: &dyn Mdp, x: &[StateId], k: usize) -> Result<HashMap<StateId, usize>> {
    Ok(layers(mdp, x, k, None)?.into_iter().collect())
}

/// A finite window onto a countable MDP.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub fm: FiniteMdp,
    /// Original state of every non-frontier index, sorted by ordinal.
    pub original: Vec<StateId>,
    pub index: HashMap<StateId, usize>,
    /// Distance from the roots.
    pub depth: Vec<usize>,
    pub frontier: usize,
    pub mode: Frontier,
    pub radius: usize,
}

impl Truncation {
    pub fn idx(&self, s: StateId) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn state(&self, i: usize) -> Option<StateId> {
        self.original.get(i).copied()
    }

    /// Indicator of a predicate over original states; the frontier is included
    /// iff `frontier_value` holds.
    pub fn indicator(&self, pred: impl Fn(StateId) -> bool, frontier_value: bool) -> Vec<bool> {
        let mut v: Vec<bool> = self.original.iter().map(|&s| pred(s)).collect();
        v.push(frontier_value);
        v
    }
}

/// Materializes the bubble of radius `radius` around `roots`. Edges leaving the
/// bubble go to a fresh absorbing frontier state (last index). With
/// `fan_width`, infinite fans keep their first entries and send the rest to
/// the frontier; otherwise they are an error.
pub fn truncate_with(
    mdp: &dyn Mdp,
    roots: &[StateId],
    radius: usize,
    mode: Frontier,
    fan_width: Option<usize>,
) -> Result<Truncation> {
    let mut lay = layers(mdp, roots, radius, fan_width)?;
    lay.sort_by_key(|e| e.0);
    let original: Vec<StateId> = lay.iter().map(|e| e.0).collect();
    let depth: Vec<usize> = lay.iter().map(|e| e.1).collect();
    let index: HashMap<StateId, usize> = original.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = original.len();
    let frontier = n;

    let mut b = FiniteMdp::builder();
    for &s in &original {
        b.state(&mdp.label(s), mdp.kind(s));
    }
    let f = b.random("frontier");
    b.self_loop(f);
    for (i, &s) in original.iter().enumerate() {
        let moves = mdp.moves(s);
        let entries: Vec<(StateId, Option<f64>, bool)> = match (&moves, fan_width) {
            (Moves::ChoiceFan(fan), Some(w)) => (1..=w).map(|j| (fan.get(j), None, false)).collect(),
            (Moves::ChanceFan(fan), Some(w)) => {
                let v: Vec<_> = (1..=w).map(|j| fan.get(j)).filter(|e| e.1 > 0.0).collect();
                let rest = 1.0 - v.iter().map(|e| e.1).sum::<f64>();
                let mut out: Vec<_> = v.into_iter().map(|(t, p)| (t, Some(p), false)).collect();
                if rest > 1e-15 {
                    out.push((s, Some(rest), true));
                }
                out
            }
            _ => finite_successors(mdp, s)?.into_iter().map(|(t, p)| (t, p, false)).collect(),
        };
        let infinite = !moves.is_finite();
        match moves.kind() {
            StateKind::Controlled => {
                let mut succ: Vec<usize> = Vec::new();
                for (t, _, _) in entries {
                    let j = index.get(&t).copied().unwrap_or(frontier);
                    if !succ.contains(&j) {
                        succ.push(j);
                    }
                }
                if infinite && !succ.contains(&frontier) {
                    succ.push(frontier);
                }
                for j in succ {
                    b.choice(i, j);
                }
            }
            StateKind::Random => {
                let mut acc: Vec<(usize, f64)> = Vec::new();
                for (t, p, to_frontier) in entries {
                    let j = if to_frontier { frontier } else { index.get(&t).copied().unwrap_or(frontier) };
                    let p = p.expect("random edge carries a probability");
                    match acc.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += p,
                        None => acc.push((j, p)),
                    }
                }
                let total: f64 = acc.iter().map(|e| e.1).sum();
                for (j, p) in acc {
                    b.chance(i, j, p / total);
                }
            }
        }
    }
    b.sink(vec![f]);
    let fm = b.build()?;
    Ok(Truncation { fm, original, index, depth, frontier, mode, radius })
}

pub fn truncate(mdp: &dyn Mdp, roots: &[StateId], radius: usize, mode: Frontier) -> Result<Truncation> {
    truncate_with(mdp, roots, radius, mode, None)
}
