//! Exact rational Gaussian elimination.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

/// Solves `a x = b` for square `a`; `None` if `a` is singular.
///
/// Rows are pivoted on the largest magnitude in each column. With exact
/// arithmetic this only affects the size of intermediate fractions.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n), "system must be square");
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&x, &y| a[x][col].abs().cmp(&a[y][col].abs()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in (col + 1)..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            let (upper, lower) = a.split_at_mut(r);
            for (target, pivot) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *target -= &factor * pivot;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in (r + 1)..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}
