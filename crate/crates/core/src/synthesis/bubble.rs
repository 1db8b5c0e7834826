use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::params::SynthesisParams;
use crate::error::{Error, Result};
use crate::mdp::{
    bubble_depths, default_choice, drive, rng_for, truncate, Frontier, Mdp, MdStrategy, Moves, OneBitRule,
    OneBitStrategy, Proxy, StateId, StateSet, Strategy, UniformRandomStrategy,
};
use crate::solvers::{bounded_total_reward_md, BoundedRewardSpec};

#[derive(Clone)]
pub struct BubbleParams<'a> {
    /// Levels whose strategies are assembled; deeper states use the default rule.
    pub levels: usize,
    /// Pattern levels looked ahead when scoring a frontier state.
    pub lookahead: usize,
    pub max_radius: usize,
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Classifies a sampled run as transient.
    pub proxy: Proxy,
    /// Strategy whose runs calibrate the radii.
    pub reference: Option<&'a dyn Strategy>,
}

impl Default for BubbleParams<'_> {
    fn default() -> Self {
        Self {
            levels: 6,
            lookahead: 3,
            max_radius: 400,
            runs: 1_000,
            horizon: 2_000,
            seed: 0,
            proxy: Proxy::RevisitCap(30),
            reference: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BubbleLevel {
    pub level: usize,
    pub k: usize,
    pub l: usize,
    pub budget: f64,
    /// Sampled frequency of runs leaving `K_i` before their first `F_i` visit.
    pub residual_k: f64,
    /// Sampled frequency of runs coming back to `K_i` from beyond `L_i`.
    pub residual_l: f64,
    /// Whether both residuals are below the budget with 95% confidence.
    pub certified: bool,
    pub k_size: usize,
    pub f_size: usize,
}

#[derive(Debug)]
struct Layout {
    depth: HashMap<StateId, usize>,
    /// Index 0 is a placeholder: `K_0` and `L_0` are empty.
    k: Vec<usize>,
    l: Vec<usize>,
    f: StateSet,
}

impl Layout {
    fn in_k(&self, i: usize, s: StateId) -> bool {
        i >= 1 && self.depth.get(&s).is_some_and(|&d| d <= self.k[i])
    }

    fn in_f(&self, i: usize, s: StateId) -> bool {
        self.in_k(i, s) && !(i >= 2 && self.depth[&s] <= self.l[i - 1]) && self.f.contains(s)
    }

    /// Smallest `i >= 1` with `s` in `K_i`, up to `max`.
    fn level(&self, s: StateId, max: usize) -> Option<usize> {
        let d = *self.depth.get(&s)?;
        (1..=max).find(|&i| d <= self.k[i])
    }
}

/// Radii, sets and patterns of the bubble construction.
#[derive(Clone, Debug, Serialize)]
pub struct BubblePlan {
    pub levels: Vec<BubbleLevel>,
    pub lookahead: usize,
    /// Frontier rewards come from a finite lookahead with optimistic
    /// continuation, so the per-level strategies are heuristic.
    pub heuristic: bool,
    #[serde(skip)]
    layout: Arc<Layout>,
}

/// How far a run follows the level patterns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternMatch {
    /// Number of patterns `R_1 ... R_j` matched in sequence.
    pub matched: usize,
    /// Index of the `F_i` visit closing pattern `i`.
    pub hits: Vec<usize>,
}

impl BubblePlan {
    pub fn k(&self, i: usize) -> usize {
        self.layout.k[i]
    }

    pub fn l(&self, i: usize) -> usize {
        self.layout.l[i]
    }

    pub fn in_k(&self, i: usize, s: StateId) -> bool {
        self.layout.in_k(i, s)
    }

    pub fn in_f(&self, i: usize, s: StateId) -> bool {
        self.layout.in_f(i, s)
    }

    /// Every state of the explored layout, in ordinal order.
    pub fn states(&self) -> Vec<StateId> {
        let mut v: Vec<StateId> = self.layout.depth.keys().copied().collect();
        v.sort();
        v
    }

    fn built(&self) -> usize {
        self.layout.k.len() - 1
    }

    /// Matches `R_i = (K_i - (F_i + K_{i-2}))* F_i` for `i = 1, 2, ...` along
    /// the run, with `K_0` and `K_{-1}` empty.
    pub fn pattern_prefix(&self, run: &[StateId]) -> PatternMatch {
        let mut pos = 0;
        let mut hits = Vec::new();
        for i in 1..=self.built() {
            let inside =
                |s: StateId| self.in_k(i, s) && !self.in_f(i, s) && !(i >= 3 && self.in_k(i - 2, s));
            while pos < run.len() && inside(run[pos]) {
                pos += 1;
            }
            if pos < run.len() && self.in_f(i, run[pos]) {
                hits.push(pos);
                pos += 1;
            } else {
                break;
            }
        }
        PatternMatch { matched: hits.len(), hits }
    }

    /// Within the matched prefix, no state of `K_{i-1}` follows the `F_{i+1}` visit.
    pub fn pattern_sound(&self, run: &[StateId]) -> bool {
        let m = self.pattern_prefix(run);
        let Some(&end) = m.hits.last() else { return true };
        (3..=m.matched).all(|level| run[m.hits[level - 1] + 1..=end].iter().all(|&s| !self.in_k(level - 2, s)))
    }

    pub fn audit_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Upper end of the 95% Wilson interval.
fn wilson_upper(hits: usize, runs: usize) -> f64 {
    let n = runs as f64;
    let p = hits as f64 / n;
    let z = 1.96f64;
    let denom = 1.0 + z * z / n;
    let centre = p + z * z / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((centre + spread) / denom).min(1.0)
}

struct Sample {
    depths: Vec<usize>,
    states: Vec<StateId>,
    transient: bool,
}

fn sample_runs(mdp: &dyn Mdp, init: &[StateId], depth: &HashMap<StateId, usize>, p: &BubbleParams<'_>) -> Vec<Sample> {
    let uniform = UniformRandomStrategy;
    let reference: &dyn Strategy = p.reference.unwrap_or(&uniform);
    (0..p.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(p.seed, r);
            let s0 = init[r as usize % init.len()];
            let mut states = Vec::with_capacity(p.horizon + 1);
            drive(mdp, s0, reference, p.horizon, &mut rng, |_, s| {
                states.push(s);
                true
            });
            let depths = states.iter().map(|s| depth.get(s).copied().unwrap_or(usize::MAX)).collect();
            let transient = match p.proxy {
                Proxy::RevisitCap(m) => {
                    let mut c: HashMap<StateId, u64> = HashMap::new();
                    states.iter().all(|&s| {
                        let e = c.entry(s).or_default();
                        *e += 1;
                        *e <= m
                    })
                }
                Proxy::FreshTail(w) => {
                    let start = states.len().saturating_sub(w);
                    let tail: BTreeSet<StateId> = states[start..].iter().copied().collect();
                    states[..start].iter().all(|s| !tail.contains(s))
                }
            };
            Sample { depths, states, transient }
        })
        .collect()
}

/// Smallest `r` in `from..=cap` whose residual count is acceptable, preferring
/// certified radii. Counts are given as sorted per-run thresholds: a run
/// counts against `r` iff its threshold exceeds `r`.
fn pick_radius(thresholds: &[usize], from: usize, cap: usize, runs: usize, budget: f64, ok: impl Fn(usize) -> bool) -> Option<(usize, usize, bool)> {
    let count = |r: usize| thresholds.len() - thresholds.partition_point(|&t| t <= r);
    let certified = (from..=cap).find(|&r| ok(r) && wilson_upper(count(r), runs) <= budget);
    if let Some(r) = certified {
        return Some((r, count(r), true));
    }
    (from..=cap).find(|&r| ok(r) && count(r) == 0).map(|r| (r, 0, false))
}

/// A deterministic 1-bit strategy for `Buechi(F) and Transience` from the
/// finite set `init`, with the plan it was assembled from.
///
/// Levels nest as `K_1 < L_1 < K_2 < ...` around `init`, with frontier sets
/// `F_i = F & K_i - L_{i-1}`. The strategy plays the level-`i` strategy in
/// `K_i - K_{i-1}` until it sees `F_i`, then flips its bit and plays the
/// level-`i+1` strategy.
pub fn buchi_transience_one_bit(
    mdp: &dyn Mdp,
    init: &[StateId],
    f: &StateSet,
    epsilon: f64,
    params: &BubbleParams<'_>,
) -> Result<(OneBitStrategy, BubblePlan)> {
    let sp = SynthesisParams::new(epsilon)?;
    if init.is_empty() || params.levels == 0 || params.runs == 0 {
        return Err(Error::BadParameter("need initial states, levels and runs".into()));
    }
    let depth = bubble_depths(mdp, init, params.max_radius)?;
    let samples = sample_runs(mdp, init, &depth, params);
    let total = params.levels + 1 + params.lookahead;

    let mut rings: BTreeMap<usize, usize> = BTreeMap::new();
    let mut f_rings: BTreeMap<usize, usize> = BTreeMap::new();
    for (&s, &d) in &depth {
        *rings.entry(d).or_default() += 1;
        if f.contains(s) {
            *f_rings.entry(d).or_default() += 1;
        }
    }
    let k_size = |k: usize| rings.range(..=k).map(|e| *e.1).sum::<usize>();

    let mut k = vec![0usize];
    let mut l = vec![0usize];
    let mut levels = Vec::new();
    for i in 1..=total {
        let budget = sp.bubble_budget(i);
        let l_prev = if i == 1 { None } else { Some(l[i - 1]) };
        let beyond = |d: usize| d != usize::MAX && l_prev.is_none_or(|lp| d > lp);
        // Largest depth before the first visit to F beyond L_{i-1}.
        let mut th_k: Vec<usize> = samples
            .iter()
            .filter(|r| r.transient)
            .filter_map(|r| {
                let hit = (0..r.states.len())
                    .find(|&t| beyond(r.depths[t]) && f.contains(r.states[t]))?;
                Some(r.depths[..=hit].iter().copied().max().unwrap_or(0))
            })
            .collect();
        th_k.sort_unstable();
        let from = l_prev.map_or(0, |lp| lp + 1);
        let f_ring = |r: usize| f_rings.range(from..=r).map(|e| *e.1).sum::<usize>();
        let (ki, hits_k, cert_k) = pick_radius(&th_k, from, params.max_radius, params.runs, budget, |r| f_ring(r) > 0)
            .ok_or(Error::EmptyFrontier { level: i })?;
        // Largest depth seen before the last visit to K_i.
        let mut th_l: Vec<usize> = samples
            .iter()
            .filter_map(|r| {
                let last = r.depths.iter().rposition(|&d| d <= ki)?;
                Some(r.depths[..=last].iter().copied().max().unwrap_or(0))
            })
            .collect();
        th_l.sort_unstable();
        let (li, hits_l, cert_l) = pick_radius(&th_l, ki + 1, params.max_radius.max(ki + 1), params.runs, budget, |_| true)
            .unwrap_or((params.max_radius.max(ki + 1), 0, false));
        k.push(ki);
        l.push(li);
        levels.push(BubbleLevel {
            level: i,
            k: ki,
            l: li,
            budget,
            residual_k: hits_k as f64 / params.runs as f64,
            residual_l: hits_l as f64 / params.runs as f64,
            certified: cert_k && cert_l,
            k_size: k_size(ki),
            f_size: f_ring(ki),
        });
    }
    let layout = Arc::new(Layout { depth, k, l, f: f.clone() });

    let mut solver = LevelSolver { mdp, init, layout: &layout, cache: HashMap::new() };
    let mut sigma = vec![MdStrategy::new()];
    for i in 1..=params.levels + 1 {
        let w = solver.frontier_rewards(i, params.lookahead)?;
        sigma.push(solver.solve(i, &w)?.0);
    }
    let rule = BubbleRule { layout: layout.clone(), sigma, levels: params.levels };
    let plan = BubblePlan { levels, lookahead: params.lookahead, heuristic: true, layout };
    Ok((OneBitStrategy::from_rule(1, Arc::new(rule)), plan))
}

struct LevelSolver<'m> {
    mdp: &'m dyn Mdp,
    init: &'m [StateId],
    layout: &'m Layout,
    cache: HashMap<usize, crate::mdp::Truncation>,
}

impl LevelSolver<'_> {
    /// Best reward for reaching `F_j` inside `K_j - K_{j-2}`, where entering
    /// `s` in `F_j` pays `reward[s]`.
    fn solve(&mut self, j: usize, reward: &HashMap<StateId, f64>) -> Result<(MdStrategy, HashMap<StateId, f64>)> {
        if !self.cache.contains_key(&j) {
            let t = truncate(self.mdp, self.init, self.layout.k[j], Frontier::Pessimistic)?;
            self.cache.insert(j, t);
        }
        let t = &self.cache[&j];
        let lay = self.layout;
        let mut spec = BoundedRewardSpec::default();
        for (i, &s) in t.original.iter().enumerate() {
            if lay.in_f(j, s) {
                spec.terminal_rewards.insert(StateId::from(i), reward.get(&s).copied().unwrap_or(0.0));
            } else if !(j >= 3 && lay.in_k(j - 2, s)) {
                spec.subspace.insert(StateId::from(i));
            }
        }
        let (local, values) = bounded_total_reward_md(&spec, &t.fm)?;
        let mut sigma = MdStrategy::new();
        for (&a, &b) in local.choices() {
            if let (Some(s), Some(u)) = (t.state(a.index()), t.state(b.index())) {
                sigma.set(s, u);
            }
        }
        let vals = t.original.iter().enumerate().map(|(i, &s)| (s, values[i])).collect();
        Ok((sigma, vals))
    }

    /// Rewards at `F_i`: the value of matching the next `depth` patterns, with
    /// value 1 after the last one.
    fn frontier_rewards(&mut self, i: usize, depth: usize) -> Result<HashMap<StateId, f64>> {
        if depth == 0 {
            return Ok(self.ones(i));
        }
        let next = self.frontier_rewards(i + 1, depth - 1)?;
        let (_, values) = self.solve(i + 1, &next)?;
        Ok(values.into_iter().filter(|(s, _)| self.layout.in_f(i, *s)).collect())
    }

    fn ones(&self, i: usize) -> HashMap<StateId, f64> {
        self.layout.depth.keys().filter(|&&s| self.layout.in_f(i, s)).map(|&s| (s, 1.0)).collect()
    }
}

struct BubbleRule {
    layout: Arc<Layout>,
    sigma: Vec<MdStrategy>,
    levels: usize,
}

impl OneBitRule for BubbleRule {
    fn controlled(&self, mode: u8, s: StateId, moves: &Moves) -> (u8, StateId) {
        let Some(i) = self.layout.level(s, self.levels) else {
            return (mode, default_choice(moves));
        };
        let normal = (i % 2) as u8;
        if mode != normal {
            (mode, self.sigma[i + 1].decide(s, moves))
        } else if self.layout.in_f(i, s) {
            (1 - normal, self.sigma[i + 1].decide(s, moves))
        } else {
            (mode, self.sigma[i].decide(s, moves))
        }
    }

    fn random(&self, mode: u8, s: StateId, _to: StateId) -> u8 {
        match self.layout.level(s, self.levels) {
            Some(i) if mode == (i % 2) as u8 && self.layout.in_f(i, s) => 1 - mode,
            _ => mode,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::GamblersRuin;
    use crate::mdp::estimate_transience;

    #[test]
    fn wilson_zero_hits() {
        assert!(wilson_upper(0, 1000) < 0.004);
        assert!(wilson_upper(0, 1000) > 0.003);
    }

    #[test]
    fn walk_with_drift() {
        let g = GamblersRuin::new(0.7).unwrap();
        let params = BubbleParams { runs: 400, horizon: 1_000, ..Default::default() };
        let (sigma, plan) =
            buchi_transience_one_bit(&g, &[GamblersRuin::w(0)], &StateSet::predicate(|_| true), 0.1, &params).unwrap();
        for w in plan.levels.windows(2) {
            assert!(w[0].k < w[0].l && w[0].l < w[1].k);
        }
        let est = estimate_transience(&g, GamblersRuin::w(0), &sigma, 2_000, 400, Proxy::RevisitCap(30), 1);
        assert!(est.estimate >= 0.8);
    }
}
