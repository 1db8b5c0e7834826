use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::model::{Finiteness, Mdp, Moves};
use super::state::{Distribution, StateId, StateKind, PROB_TOLERANCE};
use crate::error::{Error, Result};

/// An explicitly materialized MDP over states `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp {
    labels: Vec<String>,
    kinds: Vec<StateKind>,
    succ: Vec<Vec<usize>>,
    prob: Vec<Vec<f64>>,
    sinks: Vec<Vec<usize>>,
}

impl FiniteMdp {
    pub fn builder() -> FiniteMdpBuilder {
        FiniteMdpBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn state_label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn state_kind(&self, i: usize) -> StateKind {
        self.kinds[i]
    }

    pub fn is_controlled(&self, i: usize) -> bool {
        self.kinds[i] == StateKind::Controlled
    }

    pub fn succ(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    /// Transition probabilities of a random state, aligned with [`Self::succ`].
    /// Empty for controlled states.
    pub fn probs(&self, i: usize) -> &[f64] {
        &self.prob[i]
    }

    pub fn sinks(&self) -> &[Vec<usize>] {
        &self.sinks
    }

    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn controlled_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_controlled(i))
    }

    /// Whether `set` is closed under the transition relation.
    pub fn is_closed(&self, set: &[bool]) -> bool {
        (0..self.len()).filter(|&i| set[i]).all(|i| self.succ[i].iter().all(|&t| set[t]))
    }

    pub fn indicator(&self, states: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut v = vec![false; self.len()];
        for s in states {
            v[s] = true;
        }
        v
    }

    /// Copy in which every controlled state in `choices` keeps only the chosen edge.
    pub fn with_fixed(&self, choices: &BTreeMap<usize, usize>) -> Result<FiniteMdp> {
        let mut out = self.clone();
        for (&s, &t) in choices {
            if !self.is_controlled(s) {
                continue;
            }
            if !self.succ[s].contains(&t) {
                return Err(Error::Malformed(format!("{t} is not a successor of {s}")));
            }
            out.succ[s] = vec![t];
        }
        Ok(out)
    }

    /// Replaces the outgoing edges of state `i`. `prob` must be empty for
    /// controlled states.
    pub fn set_moves(&mut self, i: usize, kind: StateKind, succ: Vec<usize>, prob: Vec<f64>) {
        self.kinds[i] = kind;
        self.succ[i] = succ;
        self.prob[i] = prob;
    }

    pub fn push_state(&mut self, label: String, kind: StateKind, succ: Vec<usize>, prob: Vec<f64>) -> usize {
        self.labels.push(label);
        self.kinds.push(kind);
        self.succ.push(succ);
        self.prob.push(prob);
        self.labels.len() - 1
    }

    pub fn add_sink(&mut self, sink: Vec<usize>) {
        self.sinks.push(sink);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.succ[i].is_empty() {
                return Err(Error::Malformed(format!("state {} has no successor", self.labels[i])));
            }
            if let Some(&t) = self.succ[i].iter().find(|&&t| t >= n) {
                return Err(Error::Malformed(format!("state {} points to unknown state {t}", self.labels[i])));
            }
            let mut sorted = self.succ[i].clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.succ[i].len() {
                return Err(Error::Malformed(format!("duplicate edge at {}", self.labels[i])));
            }
            match self.kinds[i] {
                StateKind::Controlled => {
                    if !self.prob[i].is_empty() {
                        return Err(Error::Malformed(format!(
                            "controlled state {} carries probabilities",
                            self.labels[i]
                        )));
                    }
                }
                StateKind::Random => {
                    if self.prob[i].len() != self.succ[i].len() {
                        return Err(Error::Malformed(format!("missing probability at {}", self.labels[i])));
                    }
                    let sum: f64 = self.prob[i].iter().sum();
                    if self.prob[i].iter().any(|&p| p <= 0.0) || (sum - 1.0).abs() > PROB_TOLERANCE {
                        return Err(Error::Malformed(format!(
                            "distribution at {} sums to {sum}",
                            self.labels[i]
                        )));
                    }
                }
            }
        }
        for sink in &self.sinks {
            if sink.iter().any(|&s| s >= n) {
                return Err(Error::Malformed("sink refers to unknown state".into()));
            }
            if !self.is_closed(&self.indicator(sink.iter().copied())) {
                return Err(Error::NotSink);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> FiniteMdpJson {
        let states = (0..self.len())
            .map(|i| JsonState {
                id: i,
                label: self.labels[i].clone(),
                kind: match self.kinds[i] {
                    StateKind::Controlled => "C".into(),
                    StateKind::Random => "R".into(),
                },
            })
            .collect();
        let mut transitions = Vec::new();
        for i in 0..self.len() {
            for (k, &t) in self.succ[i].iter().enumerate() {
                transitions.push(JsonTransition { from: i, to: t, p: self.prob[i].get(k).copied() });
            }
        }
        FiniteMdpJson { states, transitions, sinks: self.sinks.clone() }
    }

    pub fn from_json(doc: &FiniteMdpJson) -> Result<Self> {
        let mut ids: Vec<usize> = doc.states.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if ids.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(Error::Malformed("state ids must be 0..n without gaps".into()));
        }
        let mut b = FiniteMdp::builder();
        let mut states: Vec<&JsonState> = doc.states.iter().collect();
        states.sort_by_key(|s| s.id);
        for s in states {
            let kind = match s.kind.as_str() {
                "C" => StateKind::Controlled,
                "R" => StateKind::Random,
                other => return Err(Error::Malformed(format!("unknown kind '{other}'"))),
            };
            b.state(&s.label, kind);
        }
        for t in &doc.transitions {
            if t.from >= doc.states.len() {
                return Err(Error::Malformed(format!("transition from unknown state {}", t.from)));
            }
            match (b.kinds[t.from], t.p) {
                (StateKind::Controlled, None) => b.choice(t.from, t.to),
                (StateKind::Random, Some(p)) => b.chance(t.from, t.to, p),
                _ => {
                    return Err(Error::Malformed(format!(
                        "transition {}->{}: p must be null exactly on controlled states",
                        t.from, t.to
                    )))
                }
            };
        }
        for sink in &doc.sinks {
            b.sink(sink.clone());
        }
        b.build()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: FiniteMdpJson = serde_json::from_str(s)?;
        Self::from_json(&doc)
    }
}

impl Mdp for FiniteMdp {
    fn moves(&self, s: StateId) -> Moves {
        let i = s.index();
        match self.kinds[i] {
            StateKind::Controlled => Moves::Choice(self.succ[i].iter().map(|&t| StateId::from(t)).collect()),
            StateKind::Random => Moves::Chance(
                Distribution::new(
                    self.succ[i].iter().zip(&self.prob[i]).map(|(&t, &p)| (StateId::from(t), p)).collect(),
                )
                .expect("validated"),
            ),
        }
    }

    fn label(&self, s: StateId) -> String {
        self.labels[s.index()].clone()
    }

    fn finiteness(&self) -> Finiteness {
        Finiteness::Finite(self.len())
    }

    fn kind(&self, s: StateId) -> StateKind {
        self.kinds[s.index()]
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        let i = s.index();
        let u: f64 = rand::Rng::gen(rng);
        let mut acc = 0.0;
        for (k, &p) in self.prob[i].iter().enumerate() {
            acc += p;
            if u < acc {
                return StateId::from(self.succ[i][k]);
            }
        }
        StateId::from(*self.succ[i].last().expect("non-empty"))
    }
}

#[derive(Default, Debug, Clone)]
pub struct FiniteMdpBuilder {
    labels: Vec<String>,
    kinds: Vec<StateKind>,
    succ: Vec<Vec<usize>>,
    prob: Vec<Vec<f64>>,
    sinks: Vec<Vec<usize>>,
}

impl FiniteMdpBuilder {
    pub fn state(&mut self, label: &str, kind: StateKind) -> usize {
        self.labels.push(label.to_string());
        self.kinds.push(kind);
        self.succ.push(Vec::new());
        self.prob.push(Vec::new());
        self.labels.len() - 1
    }

    pub fn controlled(&mut self, label: &str) -> usize {
        self.state(label, StateKind::Controlled)
    }

    pub fn random(&mut self, label: &str) -> usize {
        self.state(label, StateKind::Random)
    }

    pub fn choice(&mut self, from: usize, to: usize) -> &mut Self {
        self.succ[from].push(to);
        self
    }

    pub fn chance(&mut self, from: usize, to: usize, p: f64) -> &mut Self {
        self.succ[from].push(to);
        self.prob[from].push(p);
        self
    }

    /// Adds a self-loop: a choice for controlled states, probability one otherwise.
    pub fn self_loop(&mut self, s: usize) -> &mut Self {
        match self.kinds[s] {
            StateKind::Controlled => self.choice(s, s),
            StateKind::Random => self.chance(s, s, 1.0),
        }
    }

    pub fn sink(&mut self, states: Vec<usize>) -> &mut Self {
        self.sinks.push(states);
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn build(&self) -> Result<FiniteMdp> {
        let fm = FiniteMdp {
            labels: self.labels.clone(),
            kinds: self.kinds.clone(),
            succ: self.succ.clone(),
            prob: self.prob.clone(),
            sinks: self.sinks.clone(),
        };
        fm.validate()?;
        Ok(fm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMdpJson {
    pub states: Vec<JsonState>,
    pub transitions: Vec<JsonTransition>,
    #[serde(default)]
    pub sinks: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonState {
    pub id: usize,
    pub label: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonTransition {
    pub from: usize,
    pub to: usize,
    pub p: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> FiniteMdp {
        let mut b = FiniteMdp::builder();
        let s = b.random("s0");
        let w = b.random("win");
        let l = b.random("lose");
        b.chance(s, w, 0.5).chance(s, l, 0.5).self_loop(w).self_loop(l);
        b.sink(vec![w]).sink(vec![l]);
        b.build().unwrap()
    }

    #[test]
    fn json_round_trip() {
        let fm = coin();
        let back = FiniteMdp::from_json_str(&fm.to_json_string()).unwrap();
        assert_eq!(fm, back);
    }

    #[test]
    fn rejects_bad_sums_and_open_sinks() {
        let mut b = FiniteMdp::builder();
        let s = b.random("s");
        b.chance(s, s, 0.7);
        assert!(b.build().is_err());

        let mut b = FiniteMdp::builder();
        let a = b.controlled("a");
        let c = b.controlled("c");
        b.choice(a, c).choice(c, a).sink(vec![a]);
        assert_eq!(b.build().unwrap_err(), Error::NotSink);
    }

    #[test]
    fn fixing_keeps_single_edge() {
        let mut b = FiniteMdp::builder();
        let a = b.controlled("a");
        let x = b.controlled("x");
        let y = b.controlled("y");
        b.choice(a, x).choice(a, y).self_loop(x).self_loop(y);
        let fm = b.build().unwrap();
        let fixed = fm.with_fixed(&BTreeMap::from([(a, y)])).unwrap();
        assert_eq!(fixed.succ(a), &[y]);
        assert!(fm.with_fixed(&BTreeMap::from([(x, y)])).is_err());
    }
}
