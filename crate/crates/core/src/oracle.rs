//! Brute-force active-set optimizer for tiny instances.
//!
//! Every subset of the inequality constraints is treated as a set of
//! equalities, the stationarity system of the quadratic objective is solved
//! on that face, and the best feasible candidate wins. Only meant for
//! validating the dynamic program on desk-sized inputs.

use crate::error::{Error, Result};
use crate::instance::{
    constraints, is_feasible_with, Instance, PairWeights, PointSet, WeightVector,
};
use crate::linalg::solve_dense;
use crate::numerics::{Scalar, ToleranceConfig};
use crate::parallel::{map_indexed, Execution};

pub const MAX_CONSECUTIVE_POINTS: usize = 10;
pub const MAX_ALLPAIRS_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<S, W> {
    pub weights: W,
    pub q_value: S,
    /// Indices of the constraints held with equality.
    pub active_set: Vec<usize>,
}

fn oracle_tolerance<S: Scalar>() -> ToleranceConfig<S> {
    if S::EXACT {
        ToleranceConfig::exact()
    } else {
        let eps = S::from_f64(1e-9).expect("finite");
        ToleranceConfig::new(eps.clone(), eps)
    }
}

fn subset(mask: usize, count: usize) -> Vec<usize> {
    (0..count).filter(|k| mask >> k & 1 == 1).collect()
}

fn pick_best<S: Scalar, W>(candidates: Vec<Option<OracleResult<S, W>>>) -> Result<OracleResult<S, W>> {
    candidates
        .into_iter()
        .flatten()
        .reduce(|best, c| if c.q_value < best.q_value { c } else { best })
        .ok_or(Error::OracleNoCandidate)
}

/// Minimum of `Q` over consecutive-edge weights by active-set enumeration.
pub fn oracle_consecutive<S: Scalar>(
    inst: &Instance<S>,
) -> Result<OracleResult<S, WeightVector<S>>> {
    oracle_consecutive_with(inst, Execution::default())
}

pub fn oracle_consecutive_with<S: Scalar>(
    inst: &Instance<S>,
    exec: Execution,
) -> Result<OracleResult<S, WeightVector<S>>> {
    let n = inst.n();
    if n > MAX_CONSECUTIVE_POINTS {
        return Err(Error::OracleScaleExceeded {
            n,
            limit: MAX_CONSECUTIVE_POINTS,
        });
    }
    let m = n - 1;
    let cons = constraints(m);
    let tol = oracle_tolerance::<S>();
    let four = S::from_i64(4);

    let candidates = map_indexed(exec, 1 << cons.len(), |mask| {
        let active = subset(mask, cons.len());
        let size = m + active.len();
        let mut a = vec![vec![S::zero(); size]; size];
        let mut b = vec![S::zero(); size];
        // G w - A^T lambda = 0 with G the Hessian of Q
        for i in 0..m {
            let d = inst.gaps()[i].clone();
            a[i][i] = four.clone() * &d * &d;
            if i + 1 < m {
                a[i][i + 1] = -inst.couplings()[i].clone();
                a[i + 1][i] = -inst.couplings()[i].clone();
            }
        }
        for (r, &k) in active.iter().enumerate() {
            for v in cons[k].vars(m) {
                a[v][m + r] = -S::one();
                a[m + r][v] = S::one();
            }
            b[m + r] = S::one();
        }
        let x = solve_dense(a, b, false)?;
        let w = WeightVector(x[..m].to_vec());
        let floor = -tol.abs_eps.clone();
        if x[m..].iter().any(|l| *l < floor) {
            return None;
        }
        if !is_feasible_with(inst, &w, &tol).ok()? {
            return None;
        }
        let q_value = crate::instance::compute_q(inst, &w).ok()?;
        Some(OracleResult {
            weights: w,
            q_value,
            active_set: active,
        })
    });
    pick_best(candidates)
}

/// Variables of the all-pairs program: pairs `(i, j)` with `i < j`.
fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Optimal value of the all-pairs program (weights on every pair, every row
/// sum at least one, weights nonnegative), with one optimal witness.
///
/// The objective is only positive semidefinite here, so stationarity systems
/// may be singular; any solution of a consistent system is a minimizer of `Q`
/// on its face, hence every feasible one bounds the optimum from above and the
/// face of an optimal solution attains it.
pub fn oracle_allpairs<S: Scalar>(points: &PointSet<S>) -> Result<OracleResult<S, PairWeights<S>>> {
    oracle_allpairs_with(points, Execution::default())
}

pub fn oracle_allpairs_with<S: Scalar>(
    points: &PointSet<S>,
    exec: Execution,
) -> Result<OracleResult<S, PairWeights<S>>> {
    let n = points.len();
    if n > MAX_ALLPAIRS_POINTS {
        return Err(Error::OracleScaleExceeded {
            n,
            limit: MAX_ALLPAIRS_POINTS,
        });
    }
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let vars = pairs(n);
    let m = vars.len();
    let p = points.coords();
    // v = B w with B[i][pair (i, j)] = p_j - p_i and B[j][pair (i, j)] = p_i - p_j
    let mut bmat = vec![vec![S::zero(); m]; n];
    for (k, &(i, j)) in vars.iter().enumerate() {
        bmat[i][k] = p[j].clone() - &p[i];
        bmat[j][k] = p[i].clone() - &p[j];
    }
    let two = S::from_i64(2);
    let hessian: Vec<Vec<S>> = (0..m)
        .map(|r| {
            (0..m)
                .map(|c| {
                    (0..n).fold(S::zero(), |acc, i| acc + &(bmat[i][r].clone() * &bmat[i][c]))
                        * &two
                })
                .collect()
        })
        .collect();
    // constraints 0..n: row sums >= 1; n..n+m: w_k >= 0
    let num_cons = n + m;
    let constraint_row = |c: usize| -> (Vec<S>, S) {
        if c < n {
            let row = vars
                .iter()
                .map(|&(i, j)| if i == c || j == c { S::one() } else { S::zero() })
                .collect();
            (row, S::one())
        } else {
            let mut row = vec![S::zero(); m];
            row[c - n] = S::one();
            (row, S::zero())
        }
    };
    let tol = oracle_tolerance::<S>();

    let candidates = map_indexed(exec, 1 << num_cons, |mask| {
        let active = subset(mask, num_cons);
        let size = m + active.len();
        let mut a = vec![vec![S::zero(); size]; size];
        let mut b = vec![S::zero(); size];
        for r in 0..m {
            a[r][..m].clone_from_slice(&hessian[r]);
        }
        for (r, &c) in active.iter().enumerate() {
            let (row, rhs) = constraint_row(c);
            for (v, coef) in row.into_iter().enumerate() {
                if !coef.is_zero() {
                    a[v][m + r] = -coef.clone();
                    a[m + r][v] = coef;
                }
            }
            b[m + r] = rhs;
        }
        let x = solve_dense(a, b, true)?;
        let w = &x[..m];
        let floor = -tol.abs_eps.clone();
        if w.iter().any(|v| *v < floor) {
            return None;
        }
        let mut pw = PairWeights::zeros(n);
        for (k, &(i, j)) in vars.iter().enumerate() {
            pw.set(i, j, w[k].clone());
        }
        let min_row = S::one() - &tol.abs_eps;
        if (0..n).any(|i| pw.row_sum(i) < min_row) {
            return None;
        }
        let q_value = crate::instance::allpairs_q(points, &pw).ok()?;
        Some(OracleResult {
            weights: pw,
            q_value,
            active_set: active,
        })
    });
    pick_best(candidates)
}
