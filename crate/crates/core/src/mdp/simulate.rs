use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use super::model::Mdp;
use super::state::{StateId, StateKind};
use super::strategy::Strategy;

/// Seed of run `index` in a batch seeded with `seed` (splitmix64 mixing).
pub fn run_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(run_seed(seed, index))
}

/// Walks `horizon` steps from `s0`, calling `visit(step, state)` on every
/// state including `s0`. Stops early when `visit` returns false.
pub fn drive(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(usize, StateId) -> bool,
) {
    let mut ctrl = strategy.start(s0);
    let mut s = s0;
    if !visit(0, s) {
        return;
    }
    for step in 1..=horizon {
        let kind = mdp.kind(s);
        let t = match kind {
            StateKind::Controlled => {
                let moves = mdp.moves(s);
                ctrl.choose(s, &moves, rng)
            }
            StateKind::Random => mdp.sample(s, rng),
        };
        ctrl.observe(s, kind, t);
        s = t;
        if !visit(step, s) {
            return;
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Visits {
    pub count: u64,
    pub first: usize,
    pub last: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub states: Vec<StateId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub horizon: usize,
    pub visits: FxHashMap<StateId, Visits>,
    pub max_revisits: u64,
    pub total_cost: Option<f64>,
}

impl RunStats {
    pub fn visit_count(&self, s: StateId) -> u64 {
        self.visits.get(&s).map_or(0, |v| v.count)
    }

    /// Every state occupied during the last `window` steps is first visited
    /// inside the window.
    pub fn fresh_tail(&self, window: usize) -> bool {
        let start = (self.horizon + 1).saturating_sub(window);
        self.visits.values().all(|v| v.last < start || v.first >= start)
    }

    fn record(&mut self, step: usize, s: StateId) {
        let v = self.visits.entry(s).or_insert(Visits { count: 0, first: step, last: step });
        v.count += 1;
        v.last = step;
        self.max_revisits = self.max_revisits.max(v.count - 1);
    }
}

/// Samples one run of length `horizon`. The output is a pure function of the
/// inputs and `seed`.
pub fn simulate(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    seed: u64,
) -> (Run, RunStats) {
    simulate_inner(mdp, s0, strategy, horizon, seed, None)
}

/// As [`simulate`], accumulating `cost(from, to)` along the run.
pub fn simulate_with_cost(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    seed: u64,
    cost: &dyn Fn(StateId, StateId) -> f64,
) -> (Run, RunStats) {
    simulate_inner(mdp, s0, strategy, horizon, seed, Some(cost))
}

fn simulate_inner(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    seed: u64,
    cost: Option<&dyn Fn(StateId, StateId) -> f64>,
) -> (Run, RunStats) {
    let mut rng = rng_for(seed, 0);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut stats = RunStats {
        horizon,
        visits: FxHashMap::default(),
        max_revisits: 0,
        total_cost: cost.map(|_| 0.0),
    };
    drive(mdp, s0, strategy, horizon, &mut rng, |step, s| {
        if let (Some(c), Some(&prev)) = (cost, states.last()) {
            *stats.total_cost.as_mut().expect("initialized") += c(prev, s);
        }
        states.push(s);
        stats.record(step, s);
        true
    });
    (Run { states }, stats)
}

/// Finite-horizon stand-ins for the Transience event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Proxy {
    /// Transient iff every state seen in the last `W` steps is new in that window.
    FreshTail(usize),
    /// Transient iff no state is visited more than `m` times.
    RevisitCap(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub half_width_95: f64,
    pub runs: usize,
}

impl Estimate {
    pub fn from_hits(hits: usize, runs: usize) -> Self {
        let p = hits as f64 / runs as f64;
        Self { estimate: p, half_width_95: 1.96 * (p * (1.0 - p) / runs as f64).sqrt(), runs }
    }

    pub fn lower(&self) -> f64 {
        (self.estimate - self.half_width_95).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.estimate + self.half_width_95).min(1.0)
    }
}

fn classify(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    proxy: Proxy,
    rng: &mut ChaCha8Rng,
    visits: &mut FxHashMap<StateId, Visits>,
) -> bool {
    visits.clear();
    match proxy {
        Proxy::RevisitCap(m) => {
            let mut ok = true;
            drive(mdp, s0, strategy, horizon, rng, |_, s| {
                let v = visits.entry(s).or_default();
                v.count += 1;
                ok = v.count <= m;
                ok
            });
            ok
        }
        Proxy::FreshTail(w) => {
            drive(mdp, s0, strategy, horizon, rng, |step, s| {
                let v = visits.entry(s).or_insert(Visits { count: 0, first: step, last: step });
                v.count += 1;
                v.last = step;
                true
            });
            let start = (horizon + 1).saturating_sub(w);
            visits.values().all(|v| v.last < start || v.first >= start)
        }
    }
}

/// Fraction of `runs` sampled runs that the proxy classifies as transient,
/// with a normal-approximation 95% half-width.
pub fn estimate_transience(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    runs: usize,
    proxy: Proxy,
    seed: u64,
) -> Estimate {
    assert!(runs >= 1, "at least one run");
    let hits: usize = (0..runs as u64)
        .into_par_iter()
        .map_init(FxHashMap::default, |visits, i| {
            let mut rng = rng_for(seed, i);
            classify(mdp, s0, strategy, horizon, proxy, &mut rng, visits) as usize
        })
        .sum();
    Estimate::from_hits(hits, runs)
}

/// Runs satisfying `pred`, which sees the full state sequence of each run.
pub fn estimate_event(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    horizon: usize,
    runs: usize,
    seed: u64,
    pred: &(dyn Fn(&[StateId]) -> bool + Sync),
) -> Estimate {
    let hits: usize = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let mut states = Vec::with_capacity(horizon + 1);
            drive(mdp, s0, strategy, horizon, &mut rng, |_, s| {
                states.push(s);
                true
            });
            pred(&states) as usize
        })
        .sum();
    Estimate::from_hits(hits, runs)
}

/// Mean and standard error of the number of visits to `target` within the horizon.
pub fn mean_visits(
    mdp: &dyn Mdp,
    s0: StateId,
    strategy: &dyn Strategy,
    target: StateId,
    horizon: usize,
    runs: usize,
    seed: u64,
) -> (f64, f64) {
    let counts: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let mut c = 0u64;
            drive(mdp, s0, strategy, horizon, &mut rng, |_, s| {
                c += (s == target) as u64;
                true
            });
            c as f64
        })
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
