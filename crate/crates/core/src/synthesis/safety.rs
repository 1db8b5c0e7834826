use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{Mdp, MdStrategy, Moves, Objective, StateId, StateSet};
use crate::solvers::{interval_value_with, return_probability, BoundOptions, Settled, ValueInterval};

/// Slack below which two bounds count as equal.
const BOUND_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct SafetyParams<'a> {
    pub roots: Vec<StateId>,
    /// Radius schedule for value bounds; attempt `a` uses the first `a+1` radii.
    pub radii: Vec<usize>,
    pub return_radii: Vec<usize>,
    /// Fan entries examined on the first attempt; doubled on each widening.
    pub fan_width: usize,
    /// Controlled and random states explored along the chosen strategy.
    pub max_states: usize,
    pub settled: Option<Settled<'a>>,
}

impl Default for SafetyParams<'_> {
    fn default() -> Self {
        Self {
            roots: Vec::new(),
            radii: vec![4, 8, 16, 32],
            return_radii: vec![4, 8, 16],
            fan_width: 8,
            max_states: 2_000,
            settled: None,
        }
    }
}

/// One decision of the slack rule.
#[derive(Clone, Debug, Serialize)]
pub struct SlackChoice {
    pub state: StateId,
    pub iota: usize,
    pub r_bound: f64,
    pub slack: f64,
    pub upper: f64,
    pub chosen: StateId,
    pub chosen_lower: f64,
}

struct Bounds<'m, 'a> {
    mdp: &'m dyn Mdp,
    objective: Objective,
    params: &'m SafetyParams<'a>,
    cache: HashMap<(StateId, usize), ValueInterval>,
}

impl Bounds<'_, '_> {
    fn get(&mut self, s: StateId, attempt: usize) -> Result<ValueInterval> {
        if let Some(v) = self.cache.get(&(s, attempt)) {
            return Ok(*v);
        }
        let opts = BoundOptions { fan_width: Some(self.params.fan_width << attempt), settled: self.params.settled };
        let v = interval_value_with(self.mdp, s, &self.objective, &self.params.radii[..=attempt], opts)?;
        self.cache.insert((s, attempt), v);
        Ok(v)
    }
}

fn candidates(moves: &Moves, width: usize) -> Vec<StateId> {
    let mut out: Vec<StateId> = match moves {
        Moves::Choice(v) => v.clone(),
        Moves::ChoiceFan(f) => (1..=width).map(|j| f.get(j)).collect(),
        _ => Vec::new(),
    };
    out.sort();
    out.dedup();
    out
}

/// An MD strategy for `Safety(avoid)` on a universally transient MDP.
///
/// States are explored from the roots along the strategy being built, in
/// discovery order `iota`. At a controlled state `s` the rule picks the
/// smallest-ordinal successor `t` with
/// `lb(t) >= ub(s) - eps / (2^(iota+1) R(s))`, where `R(s) = 1/(1 - Re(s))`.
/// Value bounds come from truncations; the radius schedule and fan width
/// widen until some successor qualifies. Unexplored states use the default rule.
pub fn safety_md_universally_transient(
    mdp: &dyn Mdp,
    avoid: &StateSet,
    epsilon: f64,
    params: &SafetyParams<'_>,
) -> Result<(MdStrategy, Vec<SlackChoice>)> {
    if !(epsilon > 0.0) {
        return Err(Error::BadParameter(format!("epsilon {epsilon} must be positive")));
    }
    if params.radii.is_empty() || params.roots.is_empty() {
        return Err(Error::BadParameter("need roots and a radius schedule".into()));
    }
    let mut bounds = Bounds { mdp, objective: Objective::Safety(avoid.clone()), params, cache: HashMap::new() };
    let mut sigma = MdStrategy::new();
    let mut log = Vec::new();
    let mut iota: HashMap<StateId, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &r in &params.roots {
        if !iota.contains_key(&r) {
            iota.insert(r, iota.len());
            queue.push_back(r);
        }
    }
    while let Some(s) = queue.pop_front() {
        let moves = mdp.moves(s);
        let next: Vec<StateId> = match &moves {
            Moves::Choice(_) | Moves::ChoiceFan(_) if avoid.contains(s) => vec![],
            Moves::Choice(_) | Moves::ChoiceFan(_) => {
                let choice = choose(&mut bounds, s, iota[&s], &moves, epsilon)?;
                sigma.set(s, choice.chosen);
                let t = choice.chosen;
                log.push(choice);
                vec![t]
            }
            Moves::Chance(d) => d.support().iter().map(|e| e.0).collect(),
            Moves::ChanceFan(f) => (1..=params.fan_width).map(|j| f.get(j).0).collect(),
        };
        for t in next {
            if iota.len() >= params.max_states {
                break;
            }
            if !iota.contains_key(&t) {
                iota.insert(t, iota.len());
                queue.push_back(t);
            }
        }
    }
    Ok((sigma, log))
}

fn choose(bounds: &mut Bounds<'_, '_>, s: StateId, iota: usize, moves: &Moves, epsilon: f64) -> Result<SlackChoice> {
    let re = return_probability(bounds.mdp, s, &bounds.params.return_radii)?;
    if re.re.lower >= 1.0 {
        return Err(Error::NotUniversallyTransient(s));
    }
    let slack = if re.r_bound.is_finite() { epsilon * 0.5f64.powi(iota as i32 + 1) / re.r_bound } else { 0.0 };
    for attempt in 0..bounds.params.radii.len() {
        let upper = bounds.get(s, attempt)?.upper;
        for t in candidates(moves, bounds.params.fan_width << attempt) {
            let lower = bounds.get(t, attempt)?.lower;
            if lower >= upper - slack - BOUND_TOL {
                return Ok(SlackChoice { state: s, iota, r_bound: re.r_bound, slack, upper, chosen: t, chosen_lower: lower });
            }
        }
    }
    Err(Error::RadiusExhausted(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{Bottom, FanFamily, FanNode, FanRoot};

    #[test]
    fn fan_without_maximum() {
        let g = FanFamily::new(FanRoot::Controlled, Bottom::Chain);
        let settled = |s: StateId| match FanFamily::decode(s) {
            FanNode::Root | FanNode::Mid(_) => None,
            _ => Some(g.safe_value(s)),
        };
        let params = SafetyParams { roots: vec![FanFamily::root_id()], settled: Some(&settled), max_states: 50, ..Default::default() };
        let avoid = StateSet::predicate(FanFamily::is_bottom);
        let (sigma, log) = safety_md_universally_transient(&g, &avoid, 0.1, &params).unwrap();
        let t = sigma.get(FanFamily::root_id()).unwrap();
        assert_eq!(FanFamily::decode(t), FanNode::Split(5));
        assert!(g.safe_value(t) >= 0.9);
        assert_eq!(log.len(), 1);
    }
}
