use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use transience::gadgets::{build_gadget, NoOptimalLadder};
use transience::mdp::{
    estimate_transience, run_seed, FiniteMdp, FiniteMdpJson, Mdp, MdStrategy, Objective, Proxy, StateId, StateSet,
    Strategy, UniformRandomStrategy,
};
use transience::solvers::{
    evaluate_reach, evaluate_safety, interval_value, md_transience_value, reach_value, return_probability,
    safety_value, DEFAULT_TOL,
};
use transience::synthesis::{
    buchi_transience_one_bit, optimal_md_where_exists, plastering_uniformize, safety_md_universally_transient,
    transience_md, BubbleParams, LocalOracle, SafetyParams, TransienceBudgets,
};
use transience::verify::{run_suite, summary_table, CheckReport, HashedStrategy};

use crate::scenario::{Budgets, ObjectiveSpec, ProxySpec, Quantity, Scenario, StrategySpec, SynthKind, Task};

/// What a run produced.
pub struct Outcome {
    /// False when a verification check failed.
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

pub struct RunContext {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Directory of the scenario file, for relative MDP paths.
    pub base_dir: PathBuf,
}

enum Model {
    Finite(Arc<FiniteMdp>),
    Countable { mdp: Arc<dyn Mdp>, name: String },
}

impl Model {
    fn mdp(&self) -> Arc<dyn Mdp> {
        match self {
            Model::Finite(fm) => fm.clone(),
            Model::Countable { mdp, .. } => mdp.clone(),
        }
    }
}

fn load_model(spec: &Value, base: &Path) -> Result<(Model, StateId)> {
    if let Some(file) = spec.get("file").and_then(Value::as_str) {
        let path = base.join(file);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let doc: FiniteMdpJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let fm = FiniteMdp::from_json(&doc)?;
        return Ok((Model::Finite(Arc::new(fm)), StateId(0)));
    }
    let g = build_gadget(spec)?;
    Ok((Model::Countable { mdp: g.mdp, name: g.meta.name }, g.initial))
}

fn objective(spec: &ObjectiveSpec) -> Objective {
    let set = |v: &[u64]| StateSet::of(v.iter().map(|&i| StateId(i)));
    match spec {
        ObjectiveSpec::Transience => Objective::Transience,
        ObjectiveSpec::Reach { states } => Objective::Reach(set(states)),
        ObjectiveSpec::Safety { avoid } => Objective::Safety(set(avoid)),
        ObjectiveSpec::BuechiAndTransience { states } => {
            Objective::BuechiAndTransience(states.as_deref().map_or(StateSet::All, set))
        }
    }
}

fn proxy(p: ProxySpec) -> Proxy {
    match p {
        ProxySpec::RevisitCap(m) => Proxy::RevisitCap(m),
        ProxySpec::FreshTail(w) => Proxy::FreshTail(w),
    }
}

fn strategy(spec: &StrategySpec) -> Result<Box<dyn Strategy>> {
    Ok(match spec {
        StrategySpec::Uniform => Box::new(UniformRandomStrategy),
        StrategySpec::Default => Box::new(MdStrategy::new()),
        StrategySpec::Md(v) => Box::new(serde_json::from_value::<MdStrategy>(v.clone()).context("strategy.md")?),
        StrategySpec::Hashed(seed) => Box::new(HashedStrategy { seed: *seed }),
    })
}

/// Closed-form Transience probabilities used to stop exploration, where the gadget has them.
fn settled_for(name: &str) -> fn(StateId) -> Option<f64> {
    match name {
        "no_optimal_ladder" => NoOptimalLadder::settled_value,
        _ => |_| None,
    }
}

fn write(ctx: &RunContext, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(&ctx.out_dir).with_context(|| format!("creating {}", ctx.out_dir.display()))?;
    let path = ctx.out_dir.join(name);
    let mut text = contents.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

pub fn run(scenario: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let json_name = scenario.outputs.json.clone().unwrap_or_else(|| format!("{}.json", scenario.name));
    let mut files = Vec::new();
    if let Some(sweep) = &scenario.sweep {
        let csv_name = scenario.outputs.csv.clone().unwrap_or_else(|| format!("{}.csv", scenario.name));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut summary = String::new();
        for (k, v) in sweep.values.iter().enumerate() {
            let mut spec = scenario.mdp.clone();
            spec.as_object_mut().ok_or_else(|| anyhow!("mdp must be an object"))?.insert(sweep.param.clone(), v.clone());
            let (model, init) = load_model(&spec, &ctx.base_dir)?;
            let s0 = scenario.initial.map_or(init, StateId);
            let seed = run_seed(ctx.seed, k as u64);
            let row = point(scenario, &model, s0, seed)?;
            if k == 0 {
                let mut header = vec![sweep.param.clone()];
                header.extend(row.iter().map(|(h, _)| h.to_string()));
                w.write_record(&header)?;
            }
            let mut record = vec![value_text(v)];
            record.extend(row.iter().map(|(_, x)| format!("{x}")));
            w.write_record(&record)?;
            summary.push_str(&format!("{}={} {}\n", sweep.param, value_text(v), fmt_row(&row)));
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
        write(ctx, &csv_name, &String::from_utf8(bytes)?, &mut files)?;
        return Ok(Outcome { passed: true, summary, files });
    }

    let (model, init) = load_model(&scenario.mdp, &ctx.base_dir)?;
    let s0 = scenario.initial.map_or(init, StateId);
    match &scenario.task {
        Task::Simulate { .. } | Task::Solve { .. } => {
            let row = point(scenario, &model, s0, run_seed(ctx.seed, 0))?;
            let doc: serde_json::Map<String, Value> = row.iter().map(|(h, x)| (h.to_string(), json!(x))).collect();
            write(ctx, &json_name, &to_json(&doc), &mut files)?;
            Ok(Outcome { passed: true, summary: fmt_row(&row), files })
        }
        Task::Synthesize { kind, epsilon, budgets } => {
            let strategy_name = scenario.outputs.strategy.clone().unwrap_or_else(|| format!("{}.strategy.json", scenario.name));
            let (strategy_json, report) = synthesize(scenario, &model, s0, *kind, *epsilon, budgets, ctx.seed)?;
            write(ctx, &strategy_name, &strategy_json, &mut files)?;
            write(ctx, &json_name, &to_json(&report), &mut files)?;
            Ok(Outcome { passed: true, summary: to_json(&report), files })
        }
        Task::Verify { checks } => {
            let mut reports: Vec<CheckReport> = Vec::new();
            for suite in checks {
                reports.extend(run_suite(suite, ctx.seed)?);
            }
            reports.sort_by(|a, b| a.check.cmp(&b.check));
            write(ctx, &json_name, &to_json(&reports), &mut files)?;
            let passed = reports.iter().all(|r| r.passed);
            Ok(Outcome { passed, summary: summary_table(&reports), files })
        }
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn fmt_row(row: &[(&str, f64)]) -> String {
    row.iter().map(|(h, x)| format!("{h}={x}")).collect::<Vec<_>>().join(" ")
}

/// One simulate or solve evaluation, as named columns.
fn point(scenario: &Scenario, model: &Model, s0: StateId, seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let mdp = model.mdp();
    match &scenario.task {
        Task::Simulate { horizon, runs, proxy: p, strategy: st } => {
            if !matches!(scenario.objective, ObjectiveSpec::Transience) {
                bail!("simulate estimates Transience; set objective kind to \"transience\"");
            }
            let st = strategy(st)?;
            let e = estimate_transience(&*mdp, s0, &*st, *horizon, *runs, proxy(*p), seed);
            Ok(vec![
                ("estimate", e.estimate),
                ("half_width_95", e.half_width_95),
                ("lower", e.lower()),
                ("upper", e.upper()),
                ("runs", *runs as f64),
                ("horizon", *horizon as f64),
            ])
        }
        Task::Solve { quantity: Quantity::ReturnProbability, radii } => {
            let a = return_probability(&*mdp, s0, radii)?;
            Ok(vec![("lower", a.re.lower), ("upper", a.re.upper), ("radius", a.re.radius as f64), ("r_bound", a.r_bound)])
        }
        Task::Solve { quantity: Quantity::Value, radii } => {
            let phi = objective(&scenario.objective);
            if let Model::Finite(fm) = model {
                let v = exact_value(fm, &phi)?[s0.index()];
                return Ok(vec![("lower", v), ("upper", v), ("radius", 0.0)]);
            }
            let v = interval_value(&*mdp, s0, &phi, radii)?;
            Ok(vec![("lower", v.lower), ("upper", v.upper), ("radius", v.radius as f64)])
        }
        _ => unreachable!("validated"),
    }
}

fn exact_value(fm: &FiniteMdp, phi: &Objective) -> Result<Vec<f64>> {
    Ok(match phi {
        Objective::Reach(t) => reach_value(fm, &t.indicator(fm.len()), DEFAULT_TOL)?.values,
        Objective::Safety(a) => safety_value(fm, &a.indicator(fm.len()), DEFAULT_TOL)?.values,
        other => bail!("no exact solver for {} on finite MDPs", other.name()),
    })
}

fn exact_attained(fm: &FiniteMdp, phi: &Objective, sigma: &MdStrategy) -> Result<Vec<f64>> {
    Ok(match phi {
        Objective::Reach(t) => evaluate_reach(fm, sigma, &t.indicator(fm.len()))?,
        Objective::Safety(a) => evaluate_safety(fm, sigma, &a.indicator(fm.len()))?,
        other => bail!("no exact evaluation for {} on finite MDPs", other.name()),
    })
}

#[derive(Serialize)]
struct SynthesisReport {
    kind: SynthKind,
    epsilon: f64,
    initial: StateId,
    /// Certified or exact bounds on the value attained from the initial state.
    attained_lower: Option<f64>,
    attained_upper: Option<f64>,
    value: Option<f64>,
    details: Value,
}

fn bubble_params<'a>(budgets: &Budgets, seed: u64) -> BubbleParams<'a> {
    BubbleParams {
        max_radius: budgets.max_radius,
        runs: budgets.runs,
        horizon: budgets.horizon,
        seed,
        ..Default::default()
    }
}

fn synthesize(
    scenario: &Scenario,
    model: &Model,
    s0: StateId,
    kind: SynthKind,
    epsilon: f64,
    budgets: &Budgets,
    seed: u64,
) -> Result<(String, SynthesisReport)> {
    let mdp = model.mdp();
    let phi = objective(&scenario.objective);
    let mut report =
        SynthesisReport { kind, epsilon, initial: s0, attained_lower: None, attained_upper: None, value: None, details: Value::Null };
    let strategy_json = match kind {
        SynthKind::OneBit => {
            let f = match &phi {
                Objective::BuechiAndTransience(f) => f.clone(),
                _ => StateSet::All,
            };
            let (sigma, plan) = buchi_transience_one_bit(&*mdp, &[s0], &f, epsilon, &bubble_params(budgets, seed))?;
            let e = estimate_transience(&*mdp, s0, &sigma, budgets.horizon, budgets.runs, Proxy::RevisitCap(30), seed ^ 1);
            report.attained_lower = Some(e.lower());
            report.attained_upper = Some(e.upper());
            report.details = serde_json::from_str(&plan.audit_json())?;
            sigma.materialize(&*mdp, &plan.states()).to_json()?
        }
        SynthKind::TransienceMd => {
            let (one_bit, _) = buchi_transience_one_bit(&*mdp, &[s0], &StateSet::All, epsilon, &bubble_params(budgets, seed))?;
            let tb = TransienceBudgets { radius: budgets.radius, runs: budgets.runs, horizon: budgets.horizon, seed, ..Default::default() };
            let (sigma, tr) = transience_md(&*mdp, s0, epsilon, &one_bit, &tb)?;
            let name = match model {
                Model::Countable { name, .. } => name.as_str(),
                Model::Finite(_) => "",
            };
            let v = md_transience_value(&*mdp, s0, &sigma, &settled_for(name), budgets.eval_states)?;
            report.attained_lower = Some(v.lower);
            report.attained_upper = Some(v.upper);
            report.details = json!({
                "v_hat": tr.v_hat,
                "bad_states": tr.partition.s_bad.len(),
                "repaired": tr.repaired,
                "bad_reach": tr.bad_reach,
                "bad_bound": tr.bad_bound,
            });
            sigma.to_json()
        }
        SynthKind::SafetyMd => {
            let Objective::Safety(avoid) = &phi else { unreachable!("validated") };
            let params = SafetyParams { roots: vec![s0], ..Default::default() };
            let (sigma, log) = safety_md_universally_transient(&*mdp, avoid, epsilon, &params)?;
            if let Model::Finite(fm) = model {
                report.value = Some(exact_value(fm, &phi)?[s0.index()]);
                let got = exact_attained(fm, &phi, &sigma)?[s0.index()];
                report.attained_lower = Some(got);
                report.attained_upper = Some(got);
            }
            report.details = json!({ "choices": log.len() });
            sigma.to_json()
        }
        SynthKind::Plastering | SynthKind::OptimalMd => {
            let Model::Finite(fm) = model else { unreachable!("validated") };
            let sigma = if kind == SynthKind::Plastering {
                let (sigma, st) = plastering_uniformize(fm, &phi, epsilon, &LocalOracle)?;
                report.details = serde_json::from_str(&st.audit_json())?;
                sigma
            } else {
                optimal_md_where_exists(fm, &phi)?
            };
            let val = exact_value(fm, &phi)?;
            let got = exact_attained(fm, &phi, &sigma)?;
            let worst = (0..fm.len()).map(|s| val[s] - got[s]).fold(0.0, f64::max);
            report.value = Some(val[s0.index()]);
            report.attained_lower = Some(got[s0.index()]);
            report.attained_upper = Some(got[s0.index()]);
            report.details = json!({ "worst_gap": worst, "audit": report.details });
            sigma.to_json()
        }
    };
    Ok((strategy_json, report))
}
