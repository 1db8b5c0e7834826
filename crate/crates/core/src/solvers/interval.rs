use serde::Serialize;

use super::finite::{solve_terminal, Sense, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::mdp::{truncate, truncate_with, FiniteMdp, Frontier, Mdp, Objective, StateId, StateKind, Truncation};

/// Certified bounds on a value, from pessimistic and optimistic truncations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueInterval {
    pub lower: f64,
    pub upper: f64,
    pub radius: usize,
}

impl ValueInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        self.lower - slack <= v && v <= self.upper + slack
    }
}

/// Maximal probability of reaching `target` (made absorbing) on a finite MDP.
pub(crate) fn max_reach_absorbing(fm: &FiniteMdp, target: &[bool]) -> Result<Vec<f64>> {
    let terminal: Vec<Option<f64>> = target.iter().map(|&b| if b { Some(1.0) } else { None }).collect();
    Ok(solve_terminal(fm, &terminal, Sense::Max, DEFAULT_TOL)?.values)
}

/// Known values of states whose future is decided, e.g. closed-form gadget
/// values. Settled states are scored by their value instead of being explored.
pub type Settled<'a> = &'a (dyn Fn(StateId) -> Option<f64> + Sync);

/// Options for [`interval_value_with`].
#[derive(Clone, Copy, Default)]
pub struct BoundOptions<'a> {
    /// Explore only the first entries of infinite fans.
    pub fan_width: Option<usize>,
    pub settled: Option<Settled<'a>>,
}

fn bound_on(t: &Truncation, objective: &Objective, settled: Option<Settled<'_>>, optimistic: bool) -> Result<Vec<f64>> {
    let known = |i: usize| -> Option<f64> { settled.and_then(|f| f(t.original[i])) };
    let n = t.fm.len();
    match objective {
        Objective::Reach(set) => {
            let terminal: Vec<Option<f64>> = (0..n)
                .map(|i| {
                    if i == t.frontier {
                        Some(if optimistic { 1.0 } else { 0.0 })
                    } else if set.contains(t.original[i]) {
                        Some(1.0)
                    } else {
                        known(i)
                    }
                })
                .collect();
            Ok(solve_terminal(&t.fm, &terminal, Sense::Max, DEFAULT_TOL)?.values)
        }
        Objective::Safety(avoid) => {
            // Minimal loss, where a run that stays inside forever loses nothing.
            let loss: Vec<Option<f64>> = (0..n)
                .map(|i| {
                    if i == t.frontier {
                        Some(if optimistic { 0.0 } else { 1.0 })
                    } else if avoid.contains(t.original[i]) {
                        Some(1.0)
                    } else {
                        known(i).map(|v| 1.0 - v)
                    }
                })
                .collect();
            Ok(solve_terminal(&t.fm, &loss, Sense::Min, DEFAULT_TOL)?.values.iter().map(|l| 1.0 - l).collect())
        }
        other => Err(Error::BadParameter(format!("interval bounds need Reach or Safety, got {}", other.name()))),
    }
}

/// Value bounds of `Reach` or `Safety` on one truncation, as (pessimistic, optimistic).
pub fn truncation_bounds(t: &Truncation, objective: &Objective) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((bound_on(t, objective, None, false)?, bound_on(t, objective, None, true)?))
}

/// Bounds on the value of `Reach` or `Safety` at `s`. Each radius of the
/// schedule is solved with a losing and with a winning frontier; the
/// reported bounds are the tightest seen.
pub fn interval_value(mdp: &dyn Mdp, s: StateId, objective: &Objective, radii: &[usize]) -> Result<ValueInterval> {
    interval_value_with(mdp, s, objective, radii, BoundOptions::default())
}

pub fn interval_value_with(
    mdp: &dyn Mdp,
    s: StateId,
    objective: &Objective,
    radii: &[usize],
    opts: BoundOptions<'_>,
) -> Result<ValueInterval> {
    let mut out = ValueInterval { lower: 0.0, upper: 1.0, radius: 0 };
    for &r in radii {
        let t = truncate_with(mdp, &[s], r, Frontier::Pessimistic, opts.fan_width)?;
        let i = t.idx(s).expect("root is in its bubble");
        let lo = bound_on(&t, objective, opts.settled, false)?;
        let hi = bound_on(&t, objective, opts.settled, true)?;
        out.lower = out.lower.max(lo[i]);
        out.upper = out.upper.min(hi[i]);
        out.radius = out.radius.max(r);
    }
    out.upper = out.upper.max(out.lower);
    Ok(out)
}

/// Return probability `Re(s)` with derived visit bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnAnalysis {
    pub re: ValueInterval,
    /// `sum (n+1) Re^n = 1/(1-Re)^2` at the upper end of `re`.
    pub b_bound: f64,
    /// `sum Re^i = 1/(1-Re)` at the upper end of `re`.
    pub r_bound: f64,
}

impl ReturnAnalysis {
    pub fn from_interval(re: ValueInterval) -> Self {
        let u = re.upper;
        let (b_bound, r_bound) = if u < 1.0 {
            (1.0 / ((1.0 - u) * (1.0 - u)), 1.0 / (1.0 - u))
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Self { re, b_bound, r_bound }
    }
}

/// Splits `s` in the truncation: a fresh entry copy takes over the moves of
/// `s`, and `s` itself becomes absorbing. Returns the modified MDP and the
/// entry index.
fn split_entry(t: &Truncation, s: usize) -> (FiniteMdp, usize) {
    let mut fm = t.fm.clone();
    let kind = fm.state_kind(s);
    let succ = fm.succ(s).to_vec();
    let probs = fm.probs(s).to_vec();
    let entry = fm.push_state(format!("{}#entry", fm.state_label(s)), kind, succ, probs);
    fm.set_moves(s, StateKind::Random, vec![s], vec![1.0]);
    (fm, entry)
}

/// Bounds on `Re(s) = sup_sigma P_s(X F s)` by state splitting on truncations
/// of increasing radius. The model's `return_bound` hint caps the upper bound;
/// it is the only source of information past infinite fans.
pub fn return_probability(mdp: &dyn Mdp, s: StateId, radii: &[usize]) -> Result<ReturnAnalysis> {
    let hint = mdp.return_bound(s);
    let mut re = ValueInterval { lower: 0.0, upper: hint.unwrap_or(1.0), radius: 0 };
    for &r in radii {
        let t = match truncate(mdp, &[s], r, Frontier::Pessimistic) {
            Ok(t) => t,
            Err(Error::InfiniteBranching(_)) if hint.is_some() => continue,
            Err(e) => return Err(e),
        };
        let i = t.idx(s).expect("root is in its bubble");
        let (fm, entry) = split_entry(&t, i);
        let mut target = vec![false; fm.len()];
        target[i] = true;
        let lo = max_reach_absorbing(&fm, &target)?;
        target[t.frontier] = true;
        let hi = max_reach_absorbing(&fm, &target)?;
        re.lower = re.lower.max(lo[entry]);
        re.upper = re.upper.min(hi[entry]);
        re.radius = re.radius.max(r);
    }
    re.lower = re.lower.min(re.upper);
    Ok(ReturnAnalysis::from_interval(re))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visit_bounds_from_half() {
        let a = ReturnAnalysis::from_interval(ValueInterval { lower: 0.5, upper: 0.5, radius: 0 });
        assert_eq!(a.b_bound, 4.0);
        assert_eq!(a.r_bound, 2.0);
    }

    #[test]
    fn self_loop_returns_surely() {
        let mut b = FiniteMdp::builder();
        let s = b.random("s");
        b.self_loop(s);
        let fm = b.build().unwrap();
        let a = return_probability(&fm, StateId(0), &[1, 2]).unwrap();
        assert_eq!(a.re.lower, 1.0);
        assert_eq!(a.b_bound, f64::INFINITY);
    }
}
