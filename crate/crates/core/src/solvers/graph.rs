use std::collections::VecDeque;

use crate::mdp::FiniteMdp;

/// Predecessor lists.
pub fn predecessors(fm: &FiniteMdp) -> Vec<Vec<usize>> {
    let mut pre = vec![Vec::new(); fm.len()];
    for i in 0..fm.len() {
        for &t in fm.succ(i) {
            pre[t].push(i);
        }
    }
    pre
}

/// States with some path into `set`.
pub fn can_reach(fm: &FiniteMdp, set: &[bool]) -> Vec<bool> {
    let pre = predecessors(fm);
    backward(&pre, set)
}

fn backward(pre: &[Vec<usize>], set: &[bool]) -> Vec<bool> {
    let mut seen = set.to_vec();
    let mut queue: VecDeque<usize> = (0..set.len()).filter(|&i| set[i]).collect();
    while let Some(t) = queue.pop_front() {
        for &s in &pre[t] {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

/// States from which the controller can stay inside `allowed` forever:
/// greatest set where controlled states keep some successor and random
/// states keep all successors inside.
pub fn controllable_trap(fm: &FiniteMdp, allowed: &[bool]) -> Vec<bool> {
    controllable_trap_by(fm, allowed, |_, _| true)
}

/// As [`controllable_trap`], using only edges accepted by `edge_ok`; random
/// states need every edge accepted.
pub fn controllable_trap_by(fm: &FiniteMdp, allowed: &[bool], edge_ok: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut z = allowed.to_vec();
    loop {
        let mut changed = false;
        for s in 0..fm.len() {
            if !z[s] {
                continue;
            }
            let keep = if fm.is_controlled(s) {
                fm.succ(s).iter().any(|&t| z[t] && edge_ok(s, t))
            } else {
                fm.succ(s).iter().all(|&t| z[t] && edge_ok(s, t))
            };
            if !keep {
                z[s] = false;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

/// States from which the controller can reach `target` with probability one
/// (the Prob1E set).
pub fn almost_sure_reach(fm: &FiniteMdp, target: &[bool]) -> Vec<bool> {
    let n = fm.len();
    let mut u = vec![true; n];
    loop {
        // Attractor to `target` inside `u`, using only edges that stay in `u`
        // from random states.
        let mut r = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if r[s] || !u[s] {
                    continue;
                }
                let ok = if fm.is_controlled(s) {
                    fm.succ(s).iter().any(|&t| r[t] && u[t])
                } else {
                    fm.succ(s).iter().all(|&t| u[t]) && fm.succ(s).iter().any(|&t| r[t])
                };
                if ok {
                    r[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let next: Vec<bool> = (0..n).map(|s| u[s] && r[s]).collect();
        if next == u {
            return u;
        }
        u = next;
    }
}

/// Breadth-first distance to `target` along the given edges; random states
/// count any successor.
pub fn distance_to(fm: &FiniteMdp, target: &[bool], edge_ok: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let n = fm.len();
    let pre = predecessors(fm);
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if target[s] {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &s in &pre[t] {
            if dist[s] == usize::MAX && (!fm.is_controlled(s) || edge_ok(s, t)) {
                dist[s] = dist[t] + 1;
                queue.push_back(s);
            }
        }
    }
    dist
}

/// Chain-level helpers over explicit transition lists.
pub mod chain {
    use std::collections::VecDeque;

    pub type Chain = Vec<Vec<(usize, f64)>>;

    pub fn can_reach(chain: &Chain, set: &[bool]) -> Vec<bool> {
        let n = chain.len();
        let mut pre = vec![Vec::new(); n];
        for (i, row) in chain.iter().enumerate() {
            for &(j, _) in row {
                pre[j].push(i);
            }
        }
        let mut seen = set.to_vec();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| set[i]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &pre[t] {
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
        }
        seen
    }

    /// Greatest subset of `allowed` closed under edges accepted by `edge_ok`.
    pub fn closed_core(chain: &Chain, allowed: &[bool], edge_ok: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut z = allowed.to_vec();
        loop {
            let mut changed = false;
            for s in 0..chain.len() {
                if z[s] && !chain[s].iter().all(|&(t, _)| z[t] && edge_ok(s, t)) {
                    z[s] = false;
                    changed = true;
                }
            }
            if !changed {
                return z;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn almost_sure_reach_excludes_risky_states() {
        let mut b = FiniteMdp::builder();
        let s = b.random("s");
        let t = b.random("t");
        let d = b.random("dead");
        let c = b.controlled("c");
        b.chance(s, t, 0.5).chance(s, d, 0.5).self_loop(t).self_loop(d);
        b.choice(c, s).choice(c, t);
        let fm = b.build().unwrap();
        let target = fm.indicator([t]);
        let as1 = almost_sure_reach(&fm, &target);
        assert_eq!(as1, vec![false, true, false, true]);
    }
}
