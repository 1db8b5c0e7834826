use num_rational::Ratio;
use rand::{Rng, RngCore};

use super::meta::GadgetMeta;
use crate::error::{Error, Result};
use crate::mdp::{Distribution, Mdp, Moves, StateId, StateKind};

/// Random walk on `w_0, w_1, ...` with restart: `w_0 -> w_1`, and from
/// `w_i` up with probability `p`, down otherwise. State `w_i` has ordinal `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GamblersRuin {
    p: f64,
}

impl GamblersRuin {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::BadParameter(format!("p = {p} must lie in (0,1)")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn w(i: u64) -> StateId {
        StateId(i)
    }

    /// Return probability of `w_i` in closed form.
    pub fn return_probability(&self, i: u64) -> f64 {
        let q = 1.0 - self.p;
        let up = (q / self.p).min(1.0);
        if i == 0 {
            up
        } else {
            // Down-steps always come back (drift right, or the restart).
            self.p * up + q
        }
    }
}

impl Mdp for GamblersRuin {
    fn moves(&self, s: StateId) -> Moves {
        if s.0 == 0 {
            return Moves::Chance(Distribution::dirac(StateId(1)));
        }
        Moves::Chance(
            Distribution::new(vec![(StateId(s.0 + 1), self.p), (StateId(s.0 - 1), 1.0 - self.p)])
                .expect("p in (0,1)"),
        )
    }

    fn label(&self, s: StateId) -> String {
        format!("w_{}", s.0)
    }

    fn kind(&self, _s: StateId) -> StateKind {
        StateKind::Random
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        if s.0 == 0 || rng.gen::<f64>() < self.p {
            StateId(s.0 + 1)
        } else {
            StateId(s.0 - 1)
        }
    }

    fn return_bound(&self, s: StateId) -> Option<f64> {
        Some(self.return_probability(s.0))
    }
}

/// The walk and its metadata. Transience has value 1 everywhere when
/// `p > 1/2` and 0 otherwise.
pub fn gamblers_ruin(p: f64) -> Result<(GamblersRuin, GadgetMeta)> {
    let g = GamblersRuin::new(p)?;
    let mut meta = GadgetMeta::new("gamblers_ruin").param("p", p);
    let transient = p > 0.5;
    let v = Ratio::from_integer(transient as i64);
    for i in 0..32 {
        meta.known(GamblersRuin::w(i), g.label(StateId(i)), "Transience", v, "drift right iff p > 1/2");
    }
    meta.known_float(StateId(0), "w_0".into(), "Return", g.return_probability(0), "(1-p)/p capped at 1");
    meta.universally_transient = Some(transient);
    meta.transience_condition = Some("p > 1/2".into());
    Ok((g, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_p() {
        assert!(GamblersRuin::new(0.0).is_err());
        assert!(GamblersRuin::new(1.0).is_err());
        assert!(GamblersRuin::new(f64::NAN).is_err());
    }

    #[test]
    fn closed_form_return() {
        let g = GamblersRuin::new(0.6).unwrap();
        assert!((g.return_probability(0) - 2.0 / 3.0).abs() < 1e-15);
        let g = GamblersRuin::new(0.4).unwrap();
        assert_eq!(g.return_probability(0), 1.0);
        assert_eq!(g.return_probability(5), 1.0);
    }
}
