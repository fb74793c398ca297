//! Dense Gaussian elimination for the small systems of the brute-force oracle.

use crate::numerics::Scalar;

/// Solves `a x = b` for square `a`.
///
/// Pivots on the largest magnitude in floating point and on the first nonzero
/// entry in exact arithmetic. A column without a usable pivot makes the system
/// singular: the result is `None` unless `allow_singular` is set, in which
/// case the free unknowns are set to zero and `None` is returned only if the
/// system is inconsistent.
pub fn solve_dense<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>, allow_singular: bool) -> Option<Vec<S>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(S::zero(), |acc, v| acc.max_of(v.abs()));
    let threshold = if S::EXACT {
        S::zero()
    } else {
        scale * &S::from_f64(1e-11).expect("finite")
    };
    let mut pivot_cols = Vec::with_capacity(n);
    let mut row = 0;
    for col in 0..n {
        if row == n {
            break;
        }
        let candidates = (row..n).filter(|&r| a[r][col].abs() > threshold);
        let pivot = if S::EXACT {
            candidates.into_iter().next()
        } else {
            candidates.max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        };
        let Some(p) = pivot else {
            if !allow_singular {
                return None;
            }
            continue;
        };
        a.swap(row, p);
        b.swap(row, p);
        let pivot_row = a[row].clone();
        for r in 0..n {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / &pivot_row[col];
            for (dst, src) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                let delta = factor.clone() * src;
                *dst = dst.clone() - &delta;
            }
            let delta = factor * &b[row];
            b[r] = b[r].clone() - &delta;
        }
        pivot_cols.push(col);
        row += 1;
    }
    let rhs_scale = b.iter().fold(S::one(), |acc, v| acc.max_of(v.abs()));
    let rhs_threshold = if S::EXACT {
        S::zero()
    } else {
        rhs_scale * &S::from_f64(1e-9).expect("finite")
    };
    if b[row..].iter().any(|v| v.abs() > rhs_threshold) {
        return None;
    }
    let mut x = vec![S::zero(); n];
    for (r, &col) in pivot_cols.iter().enumerate() {
        x[col] = b[r].clone() / &a[r][col];
    }
    Some(x)
}
