use rand::RngCore;

use crate::error::{Error, Result};
use crate::mdp::{Distribution, FiniteMdp, Mdp, MdStrategy, Moves, Objective, StateId, StateKind};
use crate::solvers::ValueMap;

/// Values at or below this count as zero.
pub const VALUE_EPS: f64 = 1e-12;

/// How the bottom state of a conditioned MDP is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BottomVariant {
    /// A single absorbing `s_bot`.
    SelfLoop,
    /// A chain `s_bot_1 -> s_bot_2 -> ...`, generated on demand.
    InfiniteChain,
}

/// Where a state of the conditioned MDP comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    State(usize),
    Pair(usize, usize),
    Bottom,
}

/// The conditioned version of a finite MDP w.r.t. a reachability objective.
///
/// `fm` holds the original states of positive value, one pair state per
/// controlled edge, and `s_bot` as its last state. With the infinite chain
/// bottom, `s_bot_k` has ordinal `fm.len() - 2 + k`.
#[derive(Clone, Debug)]
pub struct ConditionedMdp {
    pub fm: FiniteMdp,
    pub origin: Vec<Origin>,
    pub base_values: Vec<f64>,
    /// Index in `fm` of every original state with positive value.
    pub index_of: Vec<Option<usize>>,
    pub bottom: usize,
    pub variant: BottomVariant,
    /// The reachability target, restricted to the conditioned states.
    pub target: Vec<bool>,
}

fn reach_target(fm: &FiniteMdp, phi: &Objective) -> Result<Vec<bool>> {
    phi.check_tail(fm)?;
    match phi {
        Objective::Reach(t) => Ok(t.indicator(fm.len())),
        other => Err(Error::NotTail(format!("conditioning supports Reach to a sink, got {}", other.name()))),
    }
}

fn push_random(fm: &mut FiniteMdp, i: usize, row: Vec<(usize, f64)>) -> Result<()> {
    let sum: f64 = row.iter().map(|e| e.1).sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Malformed(format!("conditioned row of {} sums to {sum}", fm.state_label(i))));
    }
    let (succ, prob) = row.into_iter().map(|(t, p)| (t, p / sum)).unzip();
    fm.set_moves(i, StateKind::Random, succ, prob);
    Ok(())
}

/// Builds the conditioned MDP. `values` must hold the exact values of `phi`.
pub fn conditioned(fm: &FiniteMdp, phi: &Objective, values: &ValueMap, bottom: BottomVariant) -> Result<ConditionedMdp> {
    let target = reach_target(fm, phi)?;
    let val = &values.values;
    let n = fm.len();
    let positive: Vec<bool> = val.iter().map(|&v| v > VALUE_EPS).collect();

    let mut out = FiniteMdp::builder().build()?;
    let mut origin = Vec::new();
    let mut index_of = vec![None; n];
    for s in (0..n).filter(|&s| positive[s]) {
        index_of[s] = Some(out.push_state(fm.state_label(s).to_string(), fm.state_kind(s), vec![], vec![]));
        origin.push(Origin::State(s));
    }
    let mut pairs = Vec::new();
    for s in (0..n).filter(|&s| positive[s] && fm.is_controlled(s)) {
        for &t in fm.succ(s) {
            let label = format!("pair({},{})", fm.state_label(s), fm.state_label(t));
            let p = out.push_state(label, StateKind::Random, vec![], vec![]);
            origin.push(Origin::Pair(s, t));
            pairs.push((s, t, p));
        }
    }
    let label = match bottom {
        BottomVariant::SelfLoop => "s_bot",
        BottomVariant::InfiniteChain => "s_bot_1",
    };
    let bot = out.push_state(label.into(), StateKind::Random, vec![], vec![]);
    origin.push(Origin::Bottom);
    out.set_moves(bot, StateKind::Random, vec![bot], vec![1.0]);

    let mut pair_iter = pairs.iter().peekable();
    for s in (0..n).filter(|&s| positive[s]) {
        let i = index_of[s].expect("positive");
        if fm.is_controlled(s) {
            let mut succ = Vec::new();
            while let Some(&&(ps, _, p)) = pair_iter.peek() {
                if ps != s {
                    break;
                }
                succ.push(p);
                pair_iter.next();
            }
            out.set_moves(i, StateKind::Controlled, succ, vec![]);
        } else {
            let row = fm
                .succ(s)
                .iter()
                .zip(fm.probs(s))
                .filter(|(&t, _)| positive[t])
                .map(|(&t, &p)| (index_of[t].expect("positive"), p * val[t] / val[s]))
                .collect();
            push_random(&mut out, i, row)?;
        }
    }
    for &(s, t, p) in &pairs {
        let ratio = if positive[t] { (val[t] / val[s]).min(1.0) } else { 0.0 };
        let mut row = Vec::new();
        if ratio > 0.0 {
            row.push((index_of[t].expect("positive"), ratio));
        }
        if ratio < 1.0 {
            row.push((bot, 1.0 - ratio));
        }
        push_random(&mut out, p, row)?;
    }
    out.add_sink(vec![bot]);
    // Pairs leaving a target state stay in the target.
    let star_target: Vec<bool> =
        origin.iter().map(|o| matches!(o, Origin::State(s) | Origin::Pair(s, _) if target[*s])).collect();
    if star_target.iter().any(|&b| b) {
        out.add_sink(star_target.iter().enumerate().filter(|e| *e.1).map(|e| e.0).collect());
    }
    out.validate()?;
    Ok(ConditionedMdp {
        fm: out,
        origin,
        base_values: val.clone(),
        index_of,
        bottom: bot,
        variant: bottom,
        target: star_target,
    })
}

impl ConditionedMdp {
    /// Index of the original state `s`, or `ZeroValueRoot` if it has value 0.
    pub fn star_state(&self, s: StateId) -> Result<usize> {
        self.index_of.get(s.index()).copied().flatten().ok_or(Error::ZeroValueRoot(s))
    }

    pub fn is_bottom(&self, x: StateId) -> bool {
        x.index() >= self.bottom
    }

    /// Deletes pair states from a run of the conditioned MDP, giving a run of
    /// the original MDP.
    pub fn contract_run(&self, run: &[StateId]) -> Result<Vec<StateId>> {
        let mut out = Vec::with_capacity(run.len());
        for &x in run {
            if self.is_bottom(x) {
                return Err(Error::HitBottom(x));
            }
            match self.origin[x.index()] {
                Origin::State(s) => out.push(StateId::from(s)),
                Origin::Pair(..) => {}
                Origin::Bottom => unreachable!("checked above"),
            }
        }
        Ok(out)
    }

    /// The strategy of the original MDP given by `sigma`: choosing the pair
    /// `(s,t)` means moving to `t`.
    pub fn to_base_md(&self, sigma: &MdStrategy) -> MdStrategy {
        let mut out = MdStrategy::new();
        for (s, i) in self.index_of.iter().enumerate() {
            if let Some(i) = *i {
                if self.fm.is_controlled(i) {
                    let p = sigma.decide_index(i, self.fm.succ(i));
                    if let Origin::Pair(_, t) = self.origin[p] {
                        out.set(StateId::from(s), StateId::from(t));
                    }
                }
            }
        }
        out
    }

    /// The strategy of the conditioned MDP that moves like `sigma`.
    pub fn from_base_md(&self, base: &FiniteMdp, sigma: &MdStrategy) -> MdStrategy {
        let mut out = MdStrategy::new();
        for (s, i) in self.index_of.iter().enumerate() {
            if let Some(i) = *i {
                if self.fm.is_controlled(i) {
                    let t = sigma.decide_index(s, base.succ(s));
                    let p = self.fm.succ(i).iter().copied().find(|&p| self.origin[p] == Origin::Pair(s, t));
                    out.set(StateId::from(i), StateId::from(p.expect("every edge has a pair state")));
                }
            }
        }
        out
    }
}

impl Mdp for ConditionedMdp {
    fn moves(&self, x: StateId) -> Moves {
        let i = x.index();
        if i < self.bottom {
            return self.fm.moves(x);
        }
        match self.variant {
            BottomVariant::SelfLoop => Moves::Chance(Distribution::dirac(x)),
            BottomVariant::InfiniteChain => Moves::Chance(Distribution::dirac(StateId(x.0 + 1))),
        }
    }

    fn label(&self, x: StateId) -> String {
        let i = x.index();
        if i < self.bottom {
            return self.fm.state_label(i).to_string();
        }
        match self.variant {
            BottomVariant::SelfLoop => "s_bot".into(),
            BottomVariant::InfiniteChain => format!("s_bot_{}", i - self.bottom + 1),
        }
    }

    fn kind(&self, x: StateId) -> StateKind {
        if x.index() < self.bottom {
            self.fm.state_kind(x.index())
        } else {
            StateKind::Random
        }
    }

    fn sample(&self, x: StateId, rng: &mut dyn RngCore) -> StateId {
        if x.index() < self.bottom {
            self.fm.sample(x, rng)
        } else {
            self.moves(x).sample(rng).expect("random")
        }
    }
}

/// The restriction of an MDP to states of positive value, keeping only
/// value-preserving controlled edges and conditioning random ones.
#[derive(Clone, Debug)]
pub struct PlusMdp {
    pub fm: FiniteMdp,
    pub base_of: Vec<usize>,
    pub index_of: Vec<Option<usize>>,
    pub target: Vec<bool>,
}

/// Relative tolerance for calling a controlled edge value-preserving.
const PRESERVE_TOL: f64 = 1e-9;

pub fn plus_variant(fm: &FiniteMdp, phi: &Objective, values: &ValueMap) -> Result<PlusMdp> {
    let target = reach_target(fm, phi)?;
    let val = &values.values;
    let n = fm.len();
    let keep: Vec<usize> = (0..n).filter(|&s| val[s] > VALUE_EPS).collect();
    let mut index_of = vec![None; n];
    let mut out = FiniteMdp::builder().build()?;
    for &s in &keep {
        index_of[s] = Some(out.push_state(fm.state_label(s).to_string(), fm.state_kind(s), vec![], vec![]));
    }
    for &s in &keep {
        let i = index_of[s].expect("kept");
        if fm.is_controlled(s) {
            let succ: Vec<usize> = fm
                .succ(s)
                .iter()
                .filter(|&&t| index_of[t].is_some() && val[t] >= val[s] - PRESERVE_TOL * val[s].max(1e-300))
                .map(|&t| index_of[t].expect("kept"))
                .collect();
            if succ.is_empty() {
                return Err(Error::Malformed(format!("{} has no value-preserving edge", fm.state_label(s))));
            }
            out.set_moves(i, StateKind::Controlled, succ, vec![]);
        } else {
            let row = fm
                .succ(s)
                .iter()
                .zip(fm.probs(s))
                .filter(|(&t, _)| index_of[t].is_some())
                .map(|(&t, &p)| (index_of[t].expect("kept"), p * val[t] / val[s]))
                .collect();
            push_random(&mut out, i, row)?;
        }
    }
    let plus_target: Vec<bool> = keep.iter().map(|&s| target[s]).collect();
    if plus_target.iter().any(|&b| b) {
        out.add_sink(plus_target.iter().enumerate().filter(|e| *e.1).map(|e| e.0).collect());
    }
    out.validate()?;
    Ok(PlusMdp { fm: out, base_of: keep, index_of, target: plus_target })
}

impl PlusMdp {
    pub fn root(&self, s: StateId) -> Result<usize> {
        self.index_of.get(s.index()).copied().flatten().ok_or(Error::ZeroValueRoot(s))
    }

    /// Strategy of the original MDP playing `sigma` on the kept states.
    pub fn to_base_md(&self, sigma: &MdStrategy) -> MdStrategy {
        let mut out = MdStrategy::new();
        for (i, &s) in self.base_of.iter().enumerate() {
            if self.fm.is_controlled(i) {
                let t = sigma.decide_index(i, self.fm.succ(i));
                out.set(StateId::from(s), StateId::from(self.base_of[t]));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::StateSet;
    use crate::solvers::{reach_value, DEFAULT_TOL};

    fn coin() -> (FiniteMdp, Objective) {
        let mut b = FiniteMdp::builder();
        let s0 = b.random("s0");
        let win = b.random("win");
        let lose = b.random("lose");
        b.chance(s0, win, 0.5).chance(s0, lose, 0.5).self_loop(win).self_loop(lose);
        b.sink(vec![win]).sink(vec![lose]);
        (b.build().unwrap(), Objective::Reach(StateSet::from_indices([win])))
    }

    #[test]
    fn coin_keeps_only_the_winning_branch() {
        let (fm, phi) = coin();
        let v = reach_value(&fm, &phi_target(&phi, &fm), DEFAULT_TOL).unwrap();
        assert_eq!(v.values[0], 0.5);
        let c = conditioned(&fm, &phi, &v, BottomVariant::SelfLoop).unwrap();
        let s0 = c.star_state(StateId(0)).unwrap();
        assert_eq!(c.fm.succ(s0), &[c.star_state(StateId(1)).unwrap()]);
        assert_eq!(c.fm.probs(s0), &[1.0]);
        assert_eq!(c.star_state(StateId(2)), Err(Error::ZeroValueRoot(StateId(2))));
    }

    #[test]
    fn pair_state_splits_by_value_ratio() {
        let mut b = FiniteMdp::builder();
        let s = b.controlled("s");
        let t = b.random("t");
        let win = b.random("win");
        let lose = b.random("lose");
        b.choice(s, t).chance(t, win, 0.25).chance(t, lose, 0.75);
        b.self_loop(win).self_loop(lose).sink(vec![win]).sink(vec![lose]);
        let fm = b.build().unwrap();
        let phi = Objective::Reach(StateSet::from_indices([win]));
        let mut v = reach_value(&fm, &phi_target(&phi, &fm), DEFAULT_TOL).unwrap();
        // Pretend s had a better option elsewhere.
        v.values[s] = 0.5;
        let c = conditioned(&fm, &phi, &v, BottomVariant::SelfLoop).unwrap();
        let pair = c.fm.succ(c.star_state(StateId(0)).unwrap())[0];
        assert_eq!(c.fm.probs(pair), &[0.5, 0.5]);
        assert_eq!(c.fm.succ(pair)[1], c.bottom);
    }

    #[test]
    fn contraction_drops_pairs() {
        let mut b = FiniteMdp::builder();
        let s = b.controlled("s");
        let t = b.random("t");
        b.choice(s, t).self_loop(t).sink(vec![t]);
        let fm = b.build().unwrap();
        let phi = Objective::Reach(StateSet::from_indices([t]));
        let v = reach_value(&fm, &phi_target(&phi, &fm), DEFAULT_TOL).unwrap();
        let c = conditioned(&fm, &phi, &v, BottomVariant::SelfLoop).unwrap();
        let run: Vec<StateId> = [0, 2, 1].into_iter().map(StateId).collect();
        assert_eq!(c.contract_run(&run).unwrap(), vec![StateId(0), StateId(1)]);
        assert_eq!(c.contract_run(&[StateId(c.bottom as u64)]), Err(Error::HitBottom(StateId(c.bottom as u64))));
    }

    fn phi_target(phi: &Objective, fm: &FiniteMdp) -> Vec<bool> {
        match phi {
            Objective::Reach(t) => t.indicator(fm.len()),
            _ => unreachable!(),
        }
    }
}
