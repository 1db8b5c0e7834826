use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::conditioned::{check_conditioned_item1, check_conditioned_item3, check_conditioning_preserves_transience, check_multiplicative};
use super::random::{random_finite_mdp, random_md, SinkSpec};
use super::report::{CheckReport, Verdict};
use super::transience::{check_universal_transience, TransienceCheck};
use crate::error::{Error, Result};
use crate::gadgets::{AcyclicChain, GamblersRuin};
use crate::mdp::{run_seed, FiniteMdp, Mdp, Objective, StateId, StateSet};
use crate::solvers::{evaluate_reach, reach_value, DEFAULT_TOL};
use crate::synthesis::{optimal_md_where_exists, plastering_uniformize, LocalOracle};

pub const SUITES: [&str; 4] = ["conditioned", "multiplicative", "plastering", "transience"];

/// A random instance with a Reach-to-`win` objective.
pub fn reach_instance(seed: u64, max_states: usize, spec: SinkSpec) -> Result<(FiniteMdp, Objective)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_states.max(3));
    let fm = random_finite_mdp(seed, n, 3, 0.5, spec)?;
    let win = fm.find_label("win").ok_or_else(|| Error::BadParameter("instance has no win sink".into()))?;
    Ok((fm, Objective::Reach(StateSet::from_indices([win]))))
}

/// Runs `check` on `count` seeds in parallel and merges the reports in seed order.
pub fn over_seeds(
    name: &str,
    seed: u64,
    count: usize,
    check: impl Fn(u64) -> Result<CheckReport> + Sync,
) -> CheckReport {
    let reports: Vec<(u64, Result<CheckReport>)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let s = run_seed(seed, i);
            (s, check(s))
        })
        .collect();
    let mut out = CheckReport::new(name);
    for (s, r) in reports {
        match r {
            Ok(r) => out.merge(r.tagged(s)),
            Err(e) => out.fail(s, format!("seed {s}: {e}")),
        }
    }
    out
}

fn conditioned_suite(seed: u64) -> Vec<CheckReport> {
    let item1 = over_seeds("conditioned_item1", seed, 50, |s| {
        let (fm, phi) = reach_instance(s, 8, SinkSpec::default())?;
        let Objective::Reach(t) = &phi else { unreachable!() };
        let values = reach_value(&fm, &t.indicator(fm.len()), DEFAULT_TOL)?;
        let sigma = random_md(&fm, &mut ChaCha8Rng::seed_from_u64(s));
        check_conditioned_item1(&fm, &phi, &values, &sigma, 6)
    });
    let item3 = over_seeds("conditioned_item3", seed ^ 1, 200, |s| {
        let (fm, phi) = reach_instance(s, 10, SinkSpec::default())?;
        check_conditioned_item3(&fm, &phi, &[0.05, 0.1, 0.2, 0.5], 5, s)
    });
    let params = TransienceCheck { runs: 20, strategies: 2, horizon: 200, ..Default::default() };
    let preserve = over_seeds("conditioning_preserves_transience", seed ^ 2, 20, |s| {
        let (fm, phi) = reach_instance(s, 10, SinkSpec { acyclic: true, ..Default::default() })?;
        check_conditioning_preserves_transience(&fm, &phi, &params)
    });
    vec![item1, item3, preserve]
}

/// Uniform `eps`-optimality of plastering with the per-round bounds, and
/// exact optimality of `optimal_md_where_exists`, on random instances.
pub fn check_plastering(fm: &FiniteMdp, phi: &Objective, epsilon: f64) -> Result<(CheckReport, CheckReport)> {
    let Objective::Reach(t) = phi else {
        return Err(Error::BadParameter("plastering suite uses Reach".into()));
    };
    let target = t.indicator(fm.len());
    let val = reach_value(fm, &target, DEFAULT_TOL)?.values;
    let (sigma, st) = plastering_uniformize(fm, phi, epsilon, &LocalOracle)?;
    let got = evaluate_reach(fm, &sigma, &target)?;
    let mut worst = (0..fm.len()).map(|s| val[s] - epsilon - got[s]).fold(0.0, f64::max);
    for r in &st.rounds {
        worst = worst.max(r.escape - r.slack).max(r.worst_drop - r.slack);
    }
    let mut uniform = CheckReport::new("plastering_uniform");
    uniform.record(0, worst, 1e-9);

    let best = optimal_md_where_exists(fm, phi)?;
    let got = evaluate_reach(fm, &best, &target)?;
    let gap = (0..fm.len()).filter(|&s| val[s] > 0.0).map(|s| (val[s] - got[s]).abs()).fold(0.0, f64::max);
    let mut optimal = CheckReport::new("optimal_where_exists");
    optimal.record(0, gap, 1e-6);
    Ok((uniform, optimal))
}

fn plastering_suite(seed: u64) -> Vec<CheckReport> {
    let pairs: Vec<(u64, Result<(CheckReport, CheckReport)>)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let s = run_seed(seed, i);
            (s, reach_instance(s, 20, SinkSpec::default()).and_then(|(fm, phi)| check_plastering(&fm, &phi, 0.05)))
        })
        .collect();
    let mut uniform = CheckReport::new("plastering_uniform");
    let mut optimal = CheckReport::new("optimal_where_exists");
    for (s, r) in pairs {
        match r {
            Ok((u, o)) => {
                uniform.merge(u.tagged(s));
                optimal.merge(o.tagged(s));
            }
            Err(e) => {
                uniform.fail(s, e.to_string());
                optimal.fail(s, e.to_string());
            }
        }
    }
    vec![uniform, optimal]
}

/// Runs universal-transience certification and compares the verdict.
pub fn expect_verdict(name: &str, mdp: &dyn Mdp, sample: &[StateId], expected: Verdict, params: &TransienceCheck) -> CheckReport {
    let mut out = CheckReport::new(name);
    match check_universal_transience(mdp, sample, params) {
        Ok(r) => {
            let verdict = r.verdict;
            out.merge(r);
            if verdict != Some(expected) {
                out.passed = false;
                out.failure_seeds.push(params.seed);
                out.notes.push(format!("expected {expected:?}, got {verdict:?}"));
            }
        }
        Err(e) => out.fail(params.seed, e.to_string()),
    }
    out.verdict = Some(expected);
    out
}

fn transience_suite(seed: u64) -> Result<Vec<CheckReport>> {
    let params = TransienceCheck { seed, runs: 100, strategies: 1, ..Default::default() };
    let sample: Vec<StateId> = (0..5).map(StateId).collect();
    let mut out = Vec::new();
    for (p, expected) in [(0.3, Verdict::No), (0.5, Verdict::No), (0.7, Verdict::Yes), (0.9, Verdict::Yes)] {
        let g = GamblersRuin::new(p)?;
        out.push(expect_verdict(&format!("universal_transience_gr_{p}"), &g, &sample, expected, &params));
    }
    out.push(expect_verdict("universal_transience_acyclic_chain", &AcyclicChain, &sample, Verdict::Yes, &params));
    Ok(out)
}

/// Runs a named suite. Reports are sorted by check name.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = match name {
        "conditioned" => conditioned_suite(seed),
        "multiplicative" => vec![over_seeds("multiplicative", seed, 100, |s| {
            let (fm, phi) = reach_instance(s, 12, SinkSpec::default())?;
            check_multiplicative(&fm, &phi, 0.05)
        })],
        "plastering" => plastering_suite(seed),
        "transience" => transience_suite(seed)?,
        other => return Err(Error::BadParameter(format!("unknown suite '{other}'; known: {}", SUITES.join(", ")))),
    };
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(reports)
}
