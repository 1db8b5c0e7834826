use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Solves `A x = b` for a sparse square `A` given as rows of `(column, value)`
/// by Gaussian elimination in natural order, without pivoting.
///
/// Intended for nonsingular M-matrices of the form `I - P` with `P`
/// substochastic and leaking, whose leading principal minors are positive.
pub fn solve_sparse(rows: Vec<Vec<(usize, f64)>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = rows.len();
    assert_eq!(b.len(), n);
    let mut a: Vec<BTreeMap<usize, f64>> = Vec::with_capacity(n);
    let mut below: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, row) in rows.into_iter().enumerate() {
        let mut m = BTreeMap::new();
        for (j, v) in row {
            *m.entry(j).or_insert(0.0) += v;
            if j < i {
                below[j].insert(i);
            }
        }
        a.push(m);
    }
    for k in 0..n {
        let pivot = a[k].get(&k).copied().unwrap_or(0.0);
        if pivot.abs() < 1e-300 {
            return Err(Error::Malformed(format!("singular system at row {k}")));
        }
        let upper: Vec<(usize, f64)> = a[k].range(k + 1..).map(|(&j, &v)| (j, v)).collect();
        let rows_below = std::mem::take(&mut below[k]);
        for i in rows_below {
            let Some(aik) = a[i].remove(&k) else { continue };
            let f = aik / pivot;
            for &(j, v) in &upper {
                let e = a[i].entry(j).or_insert_with(|| {
                    if j < i {
                        below[j].insert(i);
                    }
                    0.0
                });
                *e -= f * v;
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for (&j, &v) in a[k].range(k + 1..) {
            s -= v * x[j];
        }
        x[k] = s / a[k][&k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // 2x + y = 5, x + 3y = 10 -> x = 1, y = 3
        let rows = vec![vec![(0, 2.0), (1, 1.0)], vec![(0, 1.0), (1, 3.0)]];
        let x = solve_sparse(rows, vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fair_walk_absorption() {
        // Hitting 0 before n from i in a fair walk: 1 - i/n.
        let n = 1000;
        let m = n - 1;
        let mut rows = Vec::new();
        let mut b = vec![0.0; m];
        for i in 1..n {
            let mut r = vec![(i - 1, 1.0)];
            if i > 1 {
                r.push((i - 2, -0.5));
            } else {
                b[0] += 0.5;
            }
            if i < n - 1 {
                r.push((i, -0.5));
            }
            rows.push(r);
        }
        let x = solve_sparse(rows, b).unwrap();
        for i in [1usize, 10, 500, 999] {
            assert!((x[i - 1] - (1.0 - i as f64 / n as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_is_reported() {
        assert!(solve_sparse(vec![vec![(0, 0.0)]], vec![1.0]).is_err());
    }
}
