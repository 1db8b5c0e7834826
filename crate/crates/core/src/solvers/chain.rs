use std::collections::HashMap;

use super::finite::chain_terminal_value;
use super::interval::ValueInterval;
use crate::error::{Error, Result};
use crate::mdp::{Mdp, MdStrategy, Moves, StateId};

/// Transience probability of an MD strategy from `s0`, by exploring the
/// induced Markov chain.
///
/// `settled(s)` gives the known Transience probability of states whose future
/// is decided (e.g. an acyclic tail has value 1). Unsettled states of a
/// finite closed part of the chain are recurrent or lead to recurrence, so
/// runs trapped there score 0. If exploration hits `max_states`, the unexplored
/// states are scored 0 for the lower bound and 1 for the upper one.
pub fn md_transience_value(
    mdp: &dyn Mdp,
    s0: StateId,
    sigma: &MdStrategy,
    settled: &dyn Fn(StateId) -> Option<f64>,
    max_states: usize,
) -> Result<ValueInterval> {
    let mut index: HashMap<StateId, usize> = HashMap::new();
    let mut states = vec![s0];
    index.insert(s0, 0);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut terminal: Vec<Option<f64>> = Vec::new();
    let mut open = false;
    let mut k = 0;
    while k < states.len() {
        let s = states[k];
        k += 1;
        if let Some(v) = settled(s) {
            rows.push(vec![]);
            terminal.push(Some(v));
            continue;
        }
        if k > max_states {
            open = true;
            rows.push(vec![]);
            terminal.push(Some(f64::NAN));
            continue;
        }
        let succ: Vec<(StateId, f64)> = match mdp.moves(s) {
            m @ (Moves::Choice(_) | Moves::ChoiceFan(_)) => vec![(sigma.decide(s, &m), 1.0)],
            Moves::Chance(d) => d.support().to_vec(),
            Moves::ChanceFan(_) => return Err(Error::InfiniteBranching(s)),
        };
        let mut row = Vec::with_capacity(succ.len());
        for (t, p) in succ {
            let j = *index.entry(t).or_insert_with(|| {
                states.push(t);
                states.len() - 1
            });
            row.push((j, p));
        }
        rows.push(row);
        terminal.push(None);
    }
    let eval = |frontier: f64| -> Result<f64> {
        let t: Vec<Option<f64>> = terminal.iter().map(|w| w.map(|x| if x.is_nan() { frontier } else { x })).collect();
        Ok(chain_terminal_value(&rows, &t)?[0])
    };
    let lower = eval(0.0)?;
    let upper = if open { eval(1.0)? } else { lower };
    Ok(ValueInterval { lower, upper, radius: states.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::NoOptimalLadder;

    #[test]
    fn exit_at_three_on_ladder() {
        let v = md_transience_value(
            &NoOptimalLadder,
            NoOptimalLadder::id(crate::gadgets::LadderState::Ell(0)),
            &NoOptimalLadder::exit_at(3),
            &NoOptimalLadder::settled_value,
            10_000,
        )
        .unwrap();
        assert!((v.lower - 0.875).abs() < 1e-9);
        assert_eq!(v.lower, v.upper);
    }
}
