use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A batch job: an MDP, an objective, one task and where to write results.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Master seed; `--seed` overrides it. Every other seed is derived from it.
    #[serde(default)]
    pub seed: Option<u64>,
    /// `{"gadget": name, ...params}` or `{"file": path}` to a finite MDP in JSON.
    pub mdp: Value,
    /// Initial state ordinal; defaults to the gadget's initial state or 0.
    #[serde(default)]
    pub initial: Option<u64>,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    pub task: Task,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    #[default]
    Transience,
    Reach { states: Vec<u64> },
    Safety { avoid: Vec<u64> },
    /// Buechi on `states` (all states if omitted) together with Transience.
    BuechiAndTransience { states: Option<Vec<u64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Simulate {
        horizon: usize,
        runs: usize,
        #[serde(default)]
        proxy: ProxySpec,
        #[serde(default)]
        strategy: StrategySpec,
    },
    Solve {
        #[serde(default)]
        quantity: Quantity,
        #[serde(default = "default_radii")]
        radii: Vec<usize>,
    },
    Synthesize {
        kind: SynthKind,
        epsilon: f64,
        #[serde(default)]
        budgets: Budgets,
    },
    Verify { checks: Vec<String> },
}

fn default_radii() -> Vec<usize> {
    vec![50, 200]
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxySpec {
    RevisitCap(u64),
    FreshTail(usize),
}

impl Default for ProxySpec {
    fn default() -> Self {
        Self::RevisitCap(1_000)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySpec {
    #[default]
    Uniform,
    /// The default rule everywhere: smallest ordinal, first fan entry.
    Default,
    /// Explicit MD choices `{ordinal: successor}`; other states use the default rule.
    Md(Value),
    /// A pseudo-random MD strategy drawn from this seed.
    Hashed(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    #[default]
    Value,
    ReturnProbability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// 1-bit strategy for Buechi and Transience.
    OneBit,
    /// MD strategy for Transience, derived from a 1-bit strategy.
    TransienceMd,
    /// MD strategy for Safety on a universally transient MDP.
    SafetyMd,
    /// Uniformly eps-optimal MD strategy on a finite MDP.
    Plastering,
    /// MD strategy optimal wherever an optimal strategy exists, on a finite MDP.
    OptimalMd,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub radius: usize,
    pub max_radius: usize,
    pub runs: usize,
    pub horizon: usize,
    /// States explored when evaluating a synthesized MD strategy.
    pub eval_states: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { radius: 40, max_radius: 200, runs: 1_000, horizon: 2_000, eval_states: 100_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Gadget parameter to vary.
    pub param: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub strategy: Option<String>,
}

#[derive(Debug)]
pub enum ScenarioError {
    Parse { path: String, line: usize, column: usize, field: String, message: String },
    Validation { field: String, message: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { path, line, column, field, message } => {
                write!(f, "{path}:{line}:{column}: parse error at '{field}': {message}")
            }
            Self::Validation { field, message } => write!(f, "invalid scenario: {field}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field: field.into(), message: message.into() }
}

impl Scenario {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse {
                path: path.display().to_string(),
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn is_finite_file(&self) -> bool {
        self.mdp.get("file").is_some()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("name", "use letters, digits, '_' and '-'"));
        }
        match (&self.mdp.get("gadget"), &self.mdp.get("file")) {
            (Some(_), Some(_)) => return Err(invalid("mdp", "give either \"gadget\" or \"file\", not both")),
            (None, None) => return Err(invalid("mdp", "needs \"gadget\" or \"file\"")),
            _ => {}
        }
        match &self.task {
            Task::Simulate { horizon, runs, .. } => {
                if *horizon == 0 || *runs == 0 {
                    return Err(invalid("task.simulate", "horizon and runs must be positive"));
                }
            }
            Task::Solve { radii, quantity } => {
                if radii.is_empty() {
                    return Err(invalid("task.solve.radii", "must not be empty"));
                }
                let objective_ok = matches!(self.objective, ObjectiveSpec::Reach { .. } | ObjectiveSpec::Safety { .. });
                if *quantity == Quantity::Value && !objective_ok {
                    return Err(invalid("objective", "solving a value needs a reach or safety objective"));
                }
            }
            Task::Synthesize { kind, epsilon, .. } => {
                if !(*epsilon > 0.0 && *epsilon < 1.0) {
                    return Err(invalid("task.synthesize.epsilon", format!("{epsilon} is not in (0,1)")));
                }
                let finite_only = matches!(kind, SynthKind::Plastering | SynthKind::OptimalMd);
                if finite_only && !self.is_finite_file() {
                    return Err(invalid("task.synthesize.kind", "needs a finite MDP given by \"file\""));
                }
                let needs = match kind {
                    SynthKind::SafetyMd => matches!(self.objective, ObjectiveSpec::Safety { .. }),
                    SynthKind::Plastering => matches!(self.objective, ObjectiveSpec::Reach { .. }),
                    SynthKind::OptimalMd => {
                        matches!(self.objective, ObjectiveSpec::Reach { .. } | ObjectiveSpec::Safety { .. })
                    }
                    SynthKind::TransienceMd => matches!(self.objective, ObjectiveSpec::Transience),
                    SynthKind::OneBit => {
                        matches!(self.objective, ObjectiveSpec::BuechiAndTransience { .. } | ObjectiveSpec::Transience)
                    }
                };
                if !needs {
                    return Err(invalid("objective", format!("does not fit synthesis kind {kind:?}")));
                }
            }
            Task::Verify { checks } => {
                if checks.is_empty() {
                    return Err(invalid("task.verify.checks", "must not be empty"));
                }
                if let Some(bad) = checks.iter().find(|c| !transience::verify::SUITES.contains(&c.as_str())) {
                    return Err(invalid("task.verify.checks", format!("unknown suite '{bad}'")));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if self.is_finite_file() {
                return Err(invalid("sweep", "sweeps vary gadget parameters"));
            }
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "must not be empty"));
            }
            if !matches!(self.task, Task::Simulate { .. } | Task::Solve { .. }) {
                return Err(invalid("sweep", "only simulate and solve tasks can be swept"));
            }
        }
        Ok(())
    }
}
