use serde::Serialize;

use crate::error::{Error, Result};

/// The constants derived from the target slack `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SynthesisParams {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl SynthesisParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::BadParameter(format!("epsilon {epsilon} outside (0,1)")));
        }
        let epsilon_prime = epsilon / 2.0;
        Ok(Self { epsilon, epsilon_prime, k: (1.0 + epsilon_prime) / epsilon_prime })
    }

    /// Slack of plastering round `i` (from 1): `(eps/2) 2^-i`, summing to `eps/2`.
    pub fn plastering_slack(&self, i: usize) -> f64 {
        self.epsilon / 2.0 * 0.5f64.powi(i as i32)
    }

    /// Budget of bubble level `i` (from 1): `eps 2^-(i+1)`.
    pub fn bubble_budget(&self, i: usize) -> f64 {
        self.epsilon * 0.5f64.powi(i as i32 + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let p = SynthesisParams::new(0.1).unwrap();
        assert_eq!(p.epsilon_prime, 0.05);
        assert!((p.k - 21.0).abs() < 1e-12);
        let total: f64 = (1..60).map(|i| p.plastering_slack(i)).sum();
        assert!((total - 0.05).abs() < 1e-15);
        assert!(SynthesisParams::new(0.0).is_err());
    }
}
