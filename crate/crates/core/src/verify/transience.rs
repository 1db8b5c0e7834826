use serde::Serialize;

use super::random::HashedStrategy;
use super::report::{CheckReport, Verdict};
use crate::error::Result;
use crate::mdp::{estimate_transience, mean_visits, run_seed, Mdp, Proxy, StateId, Strategy, UniformRandomStrategy};
use crate::solvers::return_probability;

#[derive(Clone, Debug, Serialize)]
pub struct TransienceCheck {
    pub radii: Vec<usize>,
    pub horizon: usize,
    pub runs: usize,
    /// Random strategies for the Monte Carlo transience cross-check; the
    /// first is uniform, the rest hashed MD strategies.
    pub strategies: usize,
    pub proxy: Proxy,
    /// `Re(s).lower >= 1 - no_tol` certifies a recurrent state.
    pub no_tol: f64,
    /// Required transience estimate under each random strategy.
    pub min_transience: f64,
    pub seed: u64,
}

impl Default for TransienceCheck {
    fn default() -> Self {
        Self {
            radii: vec![50, 200],
            horizon: 10_000,
            runs: 200,
            strategies: 20,
            proxy: Proxy::RevisitCap(100),
            no_tol: 1e-2,
            min_transience: 0.99,
            seed: 0,
        }
    }
}

/// Semi-decides universal transience on a sample of states.
///
/// YES when every sampled return probability is certified below 1, NO when
/// one is certified within `no_tol` of 1, and Unknown otherwise. On YES two
/// consequences are checked by simulation: mean visits to `s` from `s` stay
/// below `1/(1 - Re(s))` (plus three standard errors), and random strategies
/// are transient with estimate at least `min_transience` (95% upper bound).
/// The reported violation is the largest excess over these bounds.
pub fn check_universal_transience(mdp: &dyn Mdp, sample: &[StateId], params: &TransienceCheck) -> Result<CheckReport> {
    let mut report = CheckReport::new("universal_transience");
    let mut analyses = Vec::with_capacity(sample.len());
    for &s in sample {
        analyses.push((s, return_probability(mdp, s, &params.radii)?));
    }
    let recurrent = analyses.iter().find(|(_, a)| a.re.lower >= 1.0 - params.no_tol);
    let verdict = if let Some((s, a)) = recurrent {
        report.notes.push(format!("{} returns with probability >= {:.6}", mdp.label(*s), a.re.lower));
        Verdict::No
    } else if analyses.iter().all(|(_, a)| a.re.upper < 1.0) {
        Verdict::Yes
    } else {
        Verdict::Unknown
    };
    report.verdict = Some(verdict);
    if verdict != Verdict::Yes {
        report.instances = 1;
        return Ok(report);
    }

    let mut worst: f64 = 0.0;
    for (k, (s, a)) in analyses.iter().enumerate() {
        let seed = run_seed(params.seed, k as u64);
        let (mean, se) = mean_visits(mdp, *s, &UniformRandomStrategy, *s, params.horizon, params.runs, seed);
        let excess = mean - a.r_bound - 3.0 * se;
        if excess > 0.0 {
            report.notes.push(format!("{}: mean visits {mean:.3} above bound {:.3}", mdp.label(*s), a.r_bound));
        }
        worst = worst.max(excess);
    }
    for j in 0..params.strategies {
        let seed = run_seed(params.seed ^ 0x5eed, j as u64);
        let hashed = HashedStrategy { seed };
        let strategy: &dyn Strategy = if j == 0 { &UniformRandomStrategy } else { &hashed };
        for &(s, _) in &analyses {
            let est = estimate_transience(mdp, s, strategy, params.horizon, params.runs, params.proxy, seed);
            let excess = params.min_transience - est.upper();
            if excess > 0.0 {
                report.notes.push(format!("{} strategy {j}: transience {:.4}", mdp.label(s), est.estimate));
            }
            worst = worst.max(excess);
        }
    }
    report.record(params.seed, worst, 0.0);
    Ok(report)
}
