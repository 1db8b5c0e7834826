use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::random_md;
use super::report::{CheckReport, Verdict};
use super::tails::TailChains;
use super::transience::{check_universal_transience, TransienceCheck};
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, MdStrategy, Objective, StateId, StateSet};
use crate::solvers::{evaluate_reach, policy_vector, reach_value, ValueMap, DEFAULT_TOL};
use crate::synthesis::{plastering_uniformize, LocalOracle};
use crate::transforms::{conditioned, plus_variant, BottomVariant, ConditionedMdp, Origin, VALUE_EPS};

/// Largest MDP accepted by the cylinder enumeration.
pub const MAX_ENUM_STATES: usize = 10;
pub const MAX_ENUM_LEN: usize = 8;

fn target_of(fm: &FiniteMdp, phi: &Objective) -> Result<Vec<bool>> {
    match phi {
        Objective::Reach(t) => Ok(t.indicator(fm.len())),
        other => Err(Error::NotTail(format!("conditioned checks use Reach to a sink, got {}", other.name()))),
    }
}

fn star_objective(c: &ConditionedMdp) -> Objective {
    Objective::Reach(StateSet::from_indices(c.target.iter().enumerate().filter(|e| *e.1).map(|e| e.0)))
}

/// The cylinder identity `val(s_0) P*(rho*) = P(rho) val(s_n)`.
///
/// Enumerates every run of the conditioned MDP of at most `max_len` steps
/// from every positive-value state that ends in an original state, under
/// `sigma` read in both MDPs, and compares both sides.
pub fn check_conditioned_item1(
    fm: &FiniteMdp,
    phi: &Objective,
    values: &ValueMap,
    sigma: &MdStrategy,
    max_len: usize,
) -> Result<CheckReport> {
    if fm.len() > MAX_ENUM_STATES || max_len > MAX_ENUM_LEN {
        return Err(Error::TooLarge(format!("{} states, length {max_len}", fm.len())));
    }
    let c = conditioned(fm, phi, values, BottomVariant::SelfLoop)?;
    let star = c.from_base_md(fm, sigma);
    let base_policy = policy_vector(fm, sigma);
    let star_policy = policy_vector(&c.fm, &star);
    let val = &values.values;

    let step_prob = |g: &FiniteMdp, policy: &[usize], x: usize, y: usize| -> f64 {
        if g.is_controlled(x) {
            (policy[x] == y) as u8 as f64
        } else {
            g.succ(x).iter().zip(g.probs(x)).filter(|e| *e.0 == y).map(|e| *e.1).sum()
        }
    };

    let mut worst: f64 = 0.0;
    let mut cylinders = 0usize;
    for s0 in (0..fm.len()).filter(|&s| val[s] > VALUE_EPS) {
        let root = c.star_state(StateId::from(s0))?;
        let mut stack = vec![(vec![root], 1.0f64)];
        while let Some((run, p_star)) = stack.pop() {
            let last = *run.last().expect("non-empty");
            if let Origin::State(sn) = c.origin[last] {
                let ids: Vec<StateId> = run.iter().map(|&x| StateId::from(x)).collect();
                let base = c.contract_run(&ids)?;
                let p: f64 = base.windows(2).map(|w| step_prob(fm, &base_policy, w[0].index(), w[1].index())).product();
                worst = worst.max((val[s0] * p_star - p * val[sn]).abs());
                cylinders += 1;
            }
            if run.len() > max_len {
                continue;
            }
            for &y in c.fm.succ(last) {
                if y == c.bottom {
                    continue;
                }
                let q = step_prob(&c.fm, &star_policy, last, y);
                if q > 0.0 {
                    let mut next = run.clone();
                    next.push(y);
                    stack.push((next, p_star * q));
                }
            }
        }
    }
    let mut report = CheckReport::new("conditioned_item1");
    report.record(0, worst, 1e-9);
    report.notes.push(format!("{cylinders} cylinders"));
    Ok(report)
}

/// Value correspondence between an MDP and its conditioned version.
///
/// Checks `val*(s) = 1` at every positive-value state; for `samples` random
/// MD strategies, `val(s) P*(phi) = P(phi)`; and for every `eps` in the grid,
/// that a strategy is `eps`-optimal in the conditioned MDP exactly when it is
/// `eps val(s)`-optimal in the original.
pub fn check_conditioned_item3(
    fm: &FiniteMdp,
    phi: &Objective,
    eps_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let target = target_of(fm, phi)?;
    let values = reach_value(fm, &target, DEFAULT_TOL)?;
    let val = &values.values;
    let c = conditioned(fm, phi, &values, BottomVariant::SelfLoop)?;
    let star_val = reach_value(&c.fm, &c.target, DEFAULT_TOL)?.values;
    let positive: Vec<usize> = (0..fm.len()).filter(|&s| val[s] > VALUE_EPS).collect();

    let mut worst: f64 = 0.0;
    let mut mismatches = 0usize;
    for &s in &positive {
        worst = worst.max((star_val[c.star_state(StateId::from(s))?] - 1.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let sigma = random_md(fm, &mut rng);
        let p = evaluate_reach(fm, &sigma, &target)?;
        let p_star = evaluate_reach(&c.fm, &c.from_base_md(fm, &sigma), &c.target)?;
        for &s in &positive {
            let ps = p_star[c.star_state(StateId::from(s))?];
            worst = worst.max((val[s] * ps - p[s]).abs());
            for &eps in eps_grid {
                let gap_star = 1.0 - ps - eps;
                let gap = (val[s] - p[s]) - eps * val[s];
                // Only decisive comparisons count; ties are up to rounding.
                if gap_star.abs() > 1e-9 && gap.abs() > 1e-9 * val[s].max(1e-3) && (gap_star <= 0.0) != (gap <= 0.0) {
                    mismatches += 1;
                }
            }
        }
    }
    let mut report = CheckReport::new("conditioned_item3");
    report.record(0, worst, 1e-6);
    if mismatches > 0 {
        report.passed = false;
        report.notes.push(format!("{mismatches} eps-optimality mismatches"));
    }
    Ok(report)
}

/// Multiplicative `eps`-optimality: a uniformly `eps`-optimal MD strategy of
/// the conditioned MDP, obtained by plastering, attains `(1 - eps) val(s)`
/// from every state of the original.
pub fn check_multiplicative(fm: &FiniteMdp, phi: &Objective, epsilon: f64) -> Result<CheckReport> {
    let target = target_of(fm, phi)?;
    let values = reach_value(fm, &target, DEFAULT_TOL)?;
    let mut report = CheckReport::new("multiplicative");
    let val = &values.values;
    if val.iter().all(|&v| v <= VALUE_EPS) {
        report.record(0, 0.0, 1e-6);
        return Ok(report);
    }
    let c = conditioned(fm, phi, &values, BottomVariant::SelfLoop)?;
    let (star, _) = plastering_uniformize(&c.fm, &star_objective(&c), epsilon, &LocalOracle)?;
    let sigma = c.to_base_md(&star);
    let p = evaluate_reach(fm, &sigma, &target)?;
    let worst = (0..fm.len()).map(|s| (1.0 - epsilon) * val[s] - p[s]).fold(0.0, f64::max);
    report.record(0, worst, 1e-6);
    Ok(report)
}

/// Universal transience carries over to the conditioned MDP and its
/// restriction to value-preserving edges.
///
/// Finite MDPs are read with their absorbing states turned into infinite
/// chains. If the input is not certified universally transient the check
/// is reported as not applicable.
pub fn check_conditioning_preserves_transience(
    fm: &FiniteMdp,
    phi: &Objective,
    params: &TransienceCheck,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("conditioning_preserves_transience");
    let base = TailChains::new(fm.clone());
    let pre = check_universal_transience(&base, &base.skeleton(), params)?;
    if pre.verdict != Some(Verdict::Yes) {
        report.instances = 1;
        report.verdict = Some(Verdict::NotApplicable);
        return Ok(report);
    }
    let target = target_of(fm, phi)?;
    let values = reach_value(fm, &target, DEFAULT_TOL)?;
    if values.values.iter().all(|&v| v <= VALUE_EPS) {
        report.instances = 1;
        report.verdict = Some(Verdict::NotApplicable);
        report.notes.push("no positive-value state".into());
        return Ok(report);
    }
    let c = conditioned(fm, phi, &values, BottomVariant::SelfLoop)?;
    let plus = plus_variant(fm, phi, &values)?;
    let mut verdict = Verdict::Yes;
    let mut worst: f64 = 0.0;
    for (name, g) in [("conditioned", c.fm), ("plus", plus.fm)] {
        let t = TailChains::new(g);
        let r = check_universal_transience(&t, &t.skeleton(), params)?;
        worst = worst.max(r.max_violation);
        if r.verdict != Some(Verdict::Yes) || !r.passed {
            verdict = r.verdict.unwrap_or(Verdict::Unknown);
            report.notes.push(format!("{name}: {:?}", r.verdict));
        }
    }
    report.record(0, worst, 0.0);
    if verdict != Verdict::Yes {
        report.passed = false;
    }
    report.verdict = Some(verdict);
    Ok(report)
}
