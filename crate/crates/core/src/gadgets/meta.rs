use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::mdp::StateId;

/// A value known in closed form, with where it comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnownValue {
    pub state: StateId,
    pub label: String,
    pub objective: String,
    pub value: f64,
    #[serde(skip)]
    pub exact: Option<Ratio<i64>>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GadgetMeta {
    pub name: String,
    pub params: BTreeMap<String, serde_json::Value>,
    /// A finite sample of closed-form values.
    pub known_values: Vec<KnownValue>,
    pub universally_transient: Option<bool>,
    pub transience_condition: Option<String>,
}

impl GadgetMeta {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            known_values: Vec::new(),
            universally_transient: None,
            transience_condition: None,
        }
    }

    pub fn param(mut self, key: &str, v: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.into(), v.into());
        self
    }

    pub fn known(&mut self, state: StateId, label: String, objective: &str, exact: Ratio<i64>, note: &str) {
        self.known_values.push(KnownValue {
            state,
            label,
            objective: objective.into(),
            value: *exact.numer() as f64 / *exact.denom() as f64,
            exact: Some(exact),
            note: note.into(),
        });
    }

    pub fn known_float(&mut self, state: StateId, label: String, objective: &str, value: f64, note: &str) {
        self.known_values.push(KnownValue {
            state,
            label,
            objective: objective.into(),
            value,
            exact: None,
            note: note.into(),
        });
    }

    pub fn value_of(&self, state: StateId, objective: &str) -> Option<f64> {
        self.known_values
            .iter()
            .find(|k| k.state == state && k.objective == objective)
            .map(|k| k.value)
    }
}

/// `1 - 2^-i` as an exact rational, for `i <= 62`.
pub fn one_minus_pow2(i: u32) -> Ratio<i64> {
    assert!(i <= 62);
    let d = 1i64 << i;
    Ratio::new(d - 1, d)
}

/// Cantor pairing, used to enumerate two-index state families.
pub fn cantor(a: u64, b: u64) -> u64 {
    (a + b) * (a + b + 1) / 2 + b
}

pub fn uncantor(z: u64) -> (u64, u64) {
    let w = ((((8 * z as u128 + 1) as f64).sqrt() as u64).saturating_sub(1)) / 2;
    let mut w = w;
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    let t = w * (w + 1) / 2;
    let b = z - t;
    (w - b, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_round_trip() {
        for a in 0..60 {
            for b in 0..60 {
                assert_eq!(uncantor(cantor(a, b)), (a, b));
            }
        }
        assert_eq!(uncantor(cantor(1 << 20, 77)), (1 << 20, 77));
    }

    #[test]
    fn exact_one_minus_pow2() {
        assert_eq!(one_minus_pow2(3), Ratio::new(7, 8));
    }
}
