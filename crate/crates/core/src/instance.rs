//! Problem data, the quality measure and optimality certificates.
//!
//! Points on a line are reduced to consecutive gaps `d_i = p_{i+1} - p_i`
//! and couplings `xi_i = 2 d_i d_{i+1}`. With only consecutive edges the
//! quality measure is
//!
//! ```text
//! Q(w) = (w_1 d_1)^2 + sum_{i=2}^{n-1} (w_i d_i - w_{i-1} d_{i-1})^2 + (w_{n-1} d_{n-1})^2
//! ```
//!
//! minimized subject to `w_1 >= 1`, `w_j + w_{j+1} >= 1` for `2 <= j <= n-2`
//! and `w_{n-1} >= 1`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::{Scalar, ToleranceConfig};

/// Sorted, pairwise distinct coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<S> {
    coords: Vec<S>,
}

impl<S: Scalar> PointSet<S> {
    /// Sorts the coordinates; coincident points are rejected.
    pub fn new(mut coords: Vec<S>) -> Result<Self> {
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        if let Some(w) = coords.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DegenerateGap(w[0].to_string()));
        }
        Ok(Self { coords })
    }

    /// Points `0, d_1, d_1 + d_2, ...`.
    pub fn from_gaps(gaps: &[S]) -> Result<Self> {
        let mut coords = Vec::with_capacity(gaps.len() + 1);
        let mut acc = S::zero();
        coords.push(acc.clone());
        for (i, d) in gaps.iter().enumerate() {
            if !d.is_positive() {
                return Err(Error::NonPositiveGap(i));
            }
            acc = acc + d;
            coords.push(acc.clone());
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Gaps and couplings of a sorted point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    gaps: Vec<S>,
    couplings: Vec<S>,
}

impl<S: Scalar> Instance<S> {
    pub fn from_gaps(gaps: Vec<S>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::TooFewPoints { needed: 2, got: 1 });
        }
        if let Some(i) = gaps.iter().position(|d| !d.is_positive()) {
            return Err(Error::NonPositiveGap(i));
        }
        let two = S::from_i64(2);
        let couplings = gaps
            .windows(2)
            .map(|w| two.clone() * &w[0] * &w[1])
            .collect();
        Ok(Self { gaps, couplings })
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.gaps.len() + 1
    }

    /// Gap `d_i` for 1-based `i`.
    pub fn gap(&self, i: usize) -> &S {
        &self.gaps[i - 1]
    }

    /// Coupling `xi_i = 2 d_i d_{i+1}` for 1-based `i`.
    pub fn coupling(&self, i: usize) -> &S {
        &self.couplings[i - 1]
    }

    pub fn gaps(&self) -> &[S] {
        &self.gaps
    }

    pub fn couplings(&self) -> &[S] {
        &self.couplings
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<Instance<T>> {
        Instance::from_gaps(self.gaps.iter().map(f).collect())
    }
}

pub fn build_instance<S: Scalar>(points: &PointSet<S>) -> Result<Instance<S>> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let gaps = points
        .coords
        .windows(2)
        .map(|w| w[1].clone() - &w[0])
        .collect();
    Instance::from_gaps(gaps)
}

/// Weights `w_1 .. w_{n-1}` on the consecutive edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<S>(pub Vec<S>);

impl<S: Scalar> WeightVector<S> {
    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Scalar::to_f64).collect()
    }
}

impl<S> From<Vec<S>> for WeightVector<S> {
    fn from(v: Vec<S>) -> Self {
        Self(v)
    }
}

fn check_len<S: Scalar>(inst: &Instance<S>, w: &WeightVector<S>) -> Result<()> {
    if w.len() != inst.gaps.len() {
        return Err(Error::LengthMismatch {
            expected: inst.gaps.len(),
            got: w.len(),
        });
    }
    Ok(())
}

/// The quantities `v_1 .. v_n` (signed; `Q` is the sum of their squares).
fn edge_imbalances<S: Scalar>(inst: &Instance<S>, w: &[S]) -> Vec<S> {
    let flows: Vec<S> = w
        .iter()
        .zip(&inst.gaps)
        .map(|(w, d)| w.clone() * d)
        .collect();
    let mut v = Vec::with_capacity(flows.len() + 1);
    v.push(flows[0].clone());
    v.extend(flows.windows(2).map(|f| f[1].clone() - &f[0]));
    v.push(flows[flows.len() - 1].clone());
    v
}

pub fn compute_q<S: Scalar>(inst: &Instance<S>, w: &WeightVector<S>) -> Result<S> {
    check_len(inst, w)?;
    Ok(edge_imbalances(inst, &w.0)
        .into_iter()
        .fold(S::zero(), |acc, v| acc + &(v.clone() * &v)))
}

/// Analytic gradient of `Q`:
/// `dQ/dw_i = 4 d_i^2 w_i - xi_{i-1} w_{i-1} - xi_i w_{i+1}`.
pub fn gradient_q<S: Scalar>(inst: &Instance<S>, w: &WeightVector<S>) -> Result<Vec<S>> {
    check_len(inst, w)?;
    let m = w.len();
    let four = S::from_i64(4);
    let grad = (0..m)
        .map(|i| {
            let d = &inst.gaps[i];
            let mut g = four.clone() * d * d * &w.0[i];
            if i > 0 {
                g = g - &(inst.couplings[i - 1].clone() * &w.0[i - 1]);
            }
            if i + 1 < m {
                g = g - &(inst.couplings[i].clone() * &w.0[i + 1]);
            }
            g
        })
        .collect();
    Ok(grad)
}

/// One linear constraint `sum_{k in vars} w_k >= 1` (0-based variable indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `w_1 >= 1`
    First,
    /// `w_j + w_{j+1} >= 1`, 1-based `j` in `2..=n-2`
    Pair(usize),
    /// `w_{n-1} >= 1`
    Last,
}

impl Constraint {
    pub fn vars(self, num_weights: usize) -> Vec<usize> {
        match self {
            Constraint::First => vec![0],
            Constraint::Pair(j) => vec![j - 1, j],
            Constraint::Last => vec![num_weights - 1],
        }
    }

    pub fn slack<S: Scalar>(self, w: &[S]) -> S {
        self.vars(w.len())
            .into_iter()
            .fold(S::zero(), |acc, k| acc + &w[k])
            - S::one()
    }
}

/// Constraint list in order `w_1 >= 1`, pairs `j = 2..=n-2`, `w_{n-1} >= 1`.
/// With a single weight both end constraints coincide and only one is kept.
pub fn constraints(num_weights: usize) -> Vec<Constraint> {
    if num_weights <= 1 {
        return vec![Constraint::First];
    }
    let mut cs = vec![Constraint::First];
    cs.extend((2..num_weights).map(Constraint::Pair));
    cs.push(Constraint::Last);
    cs
}

pub fn is_feasible<S: Scalar>(inst: &Instance<S>, w: &WeightVector<S>) -> Result<bool> {
    is_feasible_with(inst, w, &S::default_tolerance())
}

pub fn is_feasible_with<S: Scalar>(
    inst: &Instance<S>,
    w: &WeightVector<S>,
    cfg: &ToleranceConfig<S>,
) -> Result<bool> {
    check_len(inst, w)?;
    let floor = -cfg.abs_eps.clone();
    let nonneg = w.0.iter().all(|x| *x >= floor);
    let satisfied = constraints(w.len())
        .into_iter()
        .all(|c| c.slack(&w.0) >= floor);
    Ok(nonneg && satisfied)
}

/// Lagrange multipliers and residuals for a candidate weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KKTCertificate<S> {
    pub constraints: Vec<Constraint>,
    /// One multiplier per entry of `constraints`; zero on inactive ones.
    pub multipliers: Vec<S>,
    /// `||grad Q - sum lambda_c a_c||_inf`.
    pub stationarity_residual: S,
    /// `max_c |lambda_c * slack_c|`.
    pub max_complementarity_violation: S,
    /// Smallest multiplier (zero when no constraint is active).
    pub min_multiplier: S,
    /// `||grad Q||_inf`
    pub gradient_norm: S,
    /// Threshold the residuals were judged against.
    pub tolerance: S,
    pub valid: bool,
}

impl<S: Scalar> KKTCertificate<S> {
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    pub fn summary(&self) -> String {
        format!(
            "certificate: {} (stationarity residual {}, complementarity {}, min multiplier {}, active {})",
            if self.valid { "VALID" } else { "INVALID" },
            self.stationarity_residual,
            self.max_complementarity_violation,
            self.min_multiplier,
            self.multipliers.iter().filter(|l| !l.is_zero()).count(),
        )
    }
}

/// Verifies optimality of a feasible `w` by fitting multipliers on the active
/// constraints in the least-squares sense and reporting the residuals.
///
/// In exact arithmetic a constraint is active only at zero slack and every
/// residual must vanish. In floating point a constraint is active when its
/// slack is at most `max(abs_eps, rel_eps)`, and residuals are judged against
/// `max(abs_eps, rel_eps * m * (1 + ||grad Q||_inf))` for `m` weights.
pub fn check_kkt<S: Scalar>(
    inst: &Instance<S>,
    w: &WeightVector<S>,
    cfg: &ToleranceConfig<S>,
) -> Result<KKTCertificate<S>> {
    if !is_feasible_with(inst, w, cfg)? {
        return Err(Error::Infeasible);
    }
    let m = w.len();
    let grad = gradient_q(inst, w)?;
    let cons = constraints(m);
    let slacks: Vec<S> = cons.iter().map(|c| c.slack(&w.0)).collect();
    let active_threshold = cfg.abs_eps.clone().max_of(cfg.rel_eps.clone());
    let active: Vec<usize> = (0..cons.len())
        .filter(|&k| slacks[k] <= active_threshold)
        .collect();

    let lambda_active = fit_multipliers(&cons, &active, &grad, m);
    let mut multipliers = vec![S::zero(); cons.len()];
    for (&k, l) in active.iter().zip(lambda_active) {
        multipliers[k] = l;
    }

    let mut residual = grad.clone();
    for (c, l) in cons.iter().zip(&multipliers) {
        for v in c.vars(m) {
            residual[v] = residual[v].clone() - l;
        }
    }
    let inf_norm = |xs: &[S]| xs.iter().fold(S::zero(), |acc, x| acc.max_of(x.abs()));
    let stationarity_residual = inf_norm(&residual);
    let gradient_norm = inf_norm(&grad);
    let max_complementarity_violation = multipliers
        .iter()
        .zip(&slacks)
        .fold(S::zero(), |acc, (l, s)| acc.max_of((l.clone() * s).abs()));
    let min_multiplier = active
        .iter()
        .fold(S::zero(), |acc, &k| acc.min_of(multipliers[k].clone()));

    let tolerance = cfg.abs_eps.clone().max_of(
        cfg.rel_eps.clone() * &S::from_i64(m as i64) * &(S::one() + &gradient_norm),
    );
    let valid = stationarity_residual <= tolerance
        && max_complementarity_violation <= tolerance
        && min_multiplier >= -tolerance.clone();

    Ok(KKTCertificate {
        constraints: cons,
        multipliers,
        stationarity_residual,
        max_complementarity_violation,
        min_multiplier,
        gradient_norm,
        tolerance,
        valid,
    })
}

/// Least-squares multipliers for `grad = A_act^T lambda`. The normal matrix
/// `A_act A_act^T` is tridiagonal because only neighbouring constraints share a
/// variable, so it is solved by forward elimination and back substitution.
fn fit_multipliers<S: Scalar>(cons: &[Constraint], active: &[usize], grad: &[S], m: usize) -> Vec<S> {
    let k = active.len();
    if k == 0 {
        return Vec::new();
    }
    let vars: Vec<Vec<usize>> = active.iter().map(|&a| cons[a].vars(m)).collect();
    let overlap = |a: &[usize], b: &[usize]| a.iter().filter(|v| b.contains(v)).count() as i64;
    let diag: Vec<S> = vars.iter().map(|v| S::from_i64(v.len() as i64)).collect();
    let off: Vec<S> = vars
        .windows(2)
        .map(|p| S::from_i64(overlap(&p[0], &p[1])))
        .collect();
    let rhs: Vec<S> = vars
        .iter()
        .map(|v| v.iter().fold(S::zero(), |acc, &i| acc + &grad[i]))
        .collect();

    // Thomas algorithm on the symmetric positive definite system.
    let mut c_prime = Vec::with_capacity(k);
    let mut d_prime = Vec::with_capacity(k);
    for i in 0..k {
        let (denom, d_val) = if i == 0 {
            (diag[0].clone(), rhs[0].clone())
        } else {
            let denom = diag[i].clone() - &(off[i - 1].clone() * &c_prime[i - 1]);
            let d_val = rhs[i].clone() - &(off[i - 1].clone() * &d_prime[i - 1]);
            (denom, d_val)
        };
        c_prime.push(if i + 1 < k {
            off[i].clone() / &denom
        } else {
            S::zero()
        });
        d_prime.push(d_val / &denom);
    }
    let mut lambda = vec![S::zero(); k];
    lambda[k - 1] = d_prime[k - 1].clone();
    for i in (0..k - 1).rev() {
        lambda[i] = d_prime[i].clone() - &(c_prime[i].clone() * &lambda[i + 1]);
    }
    lambda
}

/// Symmetric all-pairs weight matrix `w_ij` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWeights<S> {
    n: usize,
    w: Vec<S>,
}

impl<S: Scalar> PairWeights<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            w: vec![S::zero(); n * n],
        }
    }

    /// All-pairs matrix carrying `w` on consecutive edges.
    pub fn from_consecutive(w: &WeightVector<S>) -> Self {
        let mut pw = Self::zeros(w.len() + 1);
        for (i, x) in w.0.iter().enumerate() {
            pw.set(i, i + 1, x.clone());
        }
        pw
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.w[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        assert_ne!(i, j, "diagonal weights are fixed at zero");
        self.w[i * self.n + j] = v.clone();
        self.w[j * self.n + i] = v;
    }

    pub fn row_sum(&self, i: usize) -> S {
        (0..self.n).fold(S::zero(), |acc, j| acc + self.get(i, j))
    }
}

/// The quality measure over all pairs: `sum_i (sum_j w_ij (p_j - p_i))^2`.
pub fn allpairs_q<S: Scalar>(points: &PointSet<S>, w: &PairWeights<S>) -> Result<S> {
    if w.n() != points.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            got: w.n(),
        });
    }
    let p = points.coords();
    let mut q = S::zero();
    for i in 0..p.len() {
        let v = (0..p.len()).fold(S::zero(), |acc, j| {
            acc + &(w.get(i, j).clone() * &(p[j].clone() - &p[i]))
        });
        q = q + &(v.clone() * &v);
    }
    Ok(q)
}

/// Moves the weight of the long edge `(i, k)` onto the two shorter edges
/// `(i, j)` and `(j, k)` so that every `v` is unchanged and every row sum grows.
/// Indices are 0-based.
pub fn redistribute_weight<S: Scalar>(
    points: &PointSet<S>,
    allpairs_w: &PairWeights<S>,
    i: usize,
    j: usize,
    k: usize,
) -> Result<PairWeights<S>> {
    if !(i < j && j < k && k < points.len()) || allpairs_w.n() != points.len() {
        return Err(Error::InvalidArgument(format!(
            "indices must satisfy i < j < k < n, got ({i}, {j}, {k})"
        )));
    }
    let w = allpairs_w.get(i, k).clone();
    if !w.is_positive() {
        return Err(Error::InvalidArgument(format!("w[{i}][{k}] is not positive")));
    }
    let p = points.coords();
    let a = p[j].clone() - &p[i];
    let b = p[k].clone() - &p[j];
    let ab = a.clone() + &b;
    let mut out = allpairs_w.clone();
    out.set(i, k, S::zero());
    out.set(i, j, allpairs_w.get(i, j).clone() + &(ab.clone() / &a * &w));
    out.set(j, k, allpairs_w.get(j, k).clone() + &(ab / &b * &w));
    Ok(out)
}
