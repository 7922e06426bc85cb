//! Exact Gaussian elimination over the rationals.

use num_traits::Zero;

use crate::rational::Rational;

/// Solves the square system `a x = b`; `None` when `a` is singular.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    assert!(a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &a[col][col];
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

/// Rank of `a` (any shape).
pub fn rank(mut a: Vec<Vec<Rational>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        for r in rank + 1..rows {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &a[rank][col];
            for c in col..cols {
                let delta = &factor * &a[rank][c];
                a[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

/// Kernel vector of an `r x (r+1)` matrix with the last entry fixed to 1.
pub fn kernel_last_one(m: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    let r = m.len();
    let a: Vec<Vec<Rational>> = m.iter().map(|row| row[..r].to_vec()).collect();
    let b: Vec<Rational> = m.iter().map(|row| -row[r].clone()).collect();
    let mut x = solve(a, b)?;
    x.push(Rational::from_integer(1.into()));
    Some(x)
}
