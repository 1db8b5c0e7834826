use rand::RngCore;

use crate::mdp::{Distribution, FiniteMdp, Mdp, Moves, StateId, StateKind};
use crate::solvers::{solve_terminal, Sense, DEFAULT_TOL};

/// A finite MDP whose absorbing states are replaced by infinite chains.
///
/// A finite MDP is never universally transient; with every self-loop
/// `a_j` (the `j`-th absorbing state) turned into `a_j -> a_j#1 -> a_j#2 -> ...`
/// it is, exactly when the rest has no cycle. Copy `k >= 1` of `a_j` has
/// ordinal `n + (k-1) m + j`, where `m` is the number of absorbing states.
#[derive(Clone, Debug)]
pub struct TailChains {
    pub fm: FiniteMdp,
    /// The absorbing states, in ordinal order.
    pub absorbing: Vec<usize>,
    chain_of: Vec<Option<usize>>,
    returns: Vec<f64>,
}

impl TailChains {
    pub fn new(fm: FiniteMdp) -> Self {
        let n = fm.len();
        let absorbing: Vec<usize> = (0..n).filter(|&i| fm.succ(i) == [i]).collect();
        let mut chain_of = vec![None; n];
        for (j, &a) in absorbing.iter().enumerate() {
            chain_of[a] = Some(j);
        }
        let returns = (0..n).map(|s| skeleton_return(&fm, &chain_of, s)).collect();
        Self { fm, absorbing, chain_of, returns }
    }

    /// Ordinal of copy `k >= 1` of the `j`-th absorbing state.
    pub fn copy(&self, j: usize, k: u64) -> StateId {
        let (n, m) = (self.fm.len() as u64, self.absorbing.len() as u64);
        StateId(n + (k - 1) * m + j as u64)
    }

    /// `(j, k)` of a chain state.
    pub fn decode_copy(&self, s: StateId) -> Option<(usize, u64)> {
        let (n, m) = (self.fm.len() as u64, self.absorbing.len() as u64);
        (s.0 >= n && m > 0).then(|| (((s.0 - n) % m) as usize, (s.0 - n) / m + 1))
    }

    pub fn is_skeleton(&self, s: StateId) -> bool {
        s.index() < self.fm.len()
    }

    pub fn skeleton(&self) -> Vec<StateId> {
        (0..self.fm.len()).map(StateId::from).collect()
    }

    /// Exact return probability of a skeleton state.
    pub fn skeleton_return(&self, s: usize) -> f64 {
        self.returns[s]
    }
}

/// `Re(s)` on the skeleton, where entering an absorbing state escapes for good.
fn skeleton_return(fm: &FiniteMdp, chain_of: &[Option<usize>], s: usize) -> f64 {
    if chain_of[s].is_some() {
        return 0.0;
    }
    let mut g = fm.clone();
    let entry = g.push_state(String::new(), fm.state_kind(s), fm.succ(s).to_vec(), fm.probs(s).to_vec());
    let terminal: Vec<Option<f64>> = (0..g.len())
        .map(|i| {
            if i == s {
                Some(1.0)
            } else if i < fm.len() && chain_of[i].is_some() {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    solve_terminal(&g, &terminal, Sense::Max, DEFAULT_TOL).map_or(1.0, |sol| sol.values[entry])
}

impl Mdp for TailChains {
    fn moves(&self, s: StateId) -> Moves {
        if let Some((j, k)) = self.decode_copy(s) {
            return Moves::Chance(Distribution::dirac(self.copy(j, k + 1)));
        }
        match self.chain_of[s.index()] {
            Some(j) => Moves::Chance(Distribution::dirac(self.copy(j, 1))),
            None => self.fm.moves(s),
        }
    }

    fn label(&self, s: StateId) -> String {
        match self.decode_copy(s) {
            Some((j, k)) => format!("{}#{k}", self.fm.state_label(self.absorbing[j])),
            None => self.fm.state_label(s.index()).to_string(),
        }
    }

    fn kind(&self, s: StateId) -> StateKind {
        if self.is_skeleton(s) && self.chain_of[s.index()].is_none() {
            self.fm.state_kind(s.index())
        } else {
            StateKind::Random
        }
    }

    fn sample(&self, s: StateId, rng: &mut dyn RngCore) -> StateId {
        if self.is_skeleton(s) && self.chain_of[s.index()].is_none() {
            self.fm.sample(s, rng)
        } else {
            self.moves(s).sample(rng).expect("random")
        }
    }

    fn return_bound(&self, s: StateId) -> Option<f64> {
        Some(if self.is_skeleton(s) { self.returns[s.index()] } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chains_replace_loops() {
        let mut b = FiniteMdp::builder();
        let s = b.random("s");
        let win = b.random("win");
        let lose = b.random("lose");
        b.chance(s, win, 0.5).chance(s, lose, 0.5).self_loop(win).self_loop(lose);
        let t = TailChains::new(b.build().unwrap());
        assert_eq!(t.absorbing, vec![1, 2]);
        assert_eq!(t.copy(1, 2), StateId(6));
        assert_eq!(t.label(StateId(6)), "lose#2");
        assert_eq!(t.moves(StateId(1)).finite_successors().unwrap(), vec![(StateId(3), Some(1.0))]);
        assert_eq!(t.return_bound(StateId(0)), Some(0.0));
    }

    #[test]
    fn cycle_returns_surely() {
        let mut b = FiniteMdp::builder();
        let a = b.controlled("a");
        let c = b.random("c");
        let win = b.random("win");
        b.choice(a, c).choice(a, win).chance(c, a, 1.0).self_loop(win);
        let t = TailChains::new(b.build().unwrap());
        assert!((t.skeleton_return(a) - 1.0).abs() < 1e-12);
    }
}
