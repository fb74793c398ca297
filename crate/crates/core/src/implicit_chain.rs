//! Implicit representation of `R_3 .. R_{n-1}` with quadratic total cost.
//!
//! Graph points of consecutive derivative functions are related by affine
//! maps acting on homogeneous vectors `(x, y, 1)`:
//!
//! ```text
//!         | 0    1/xi     0 |             | -1          0   1           |
//!     M = | -xi  c/xi     0 |         L = | -2xi - c   -1   xi + c      |
//!         | 0    0        1 |             | 0           0   1           |
//! ```
//!
//! with `xi = 2 d_i d_{i+1}` and `c = 4 d_{i+1}^2`. `M` carries the upper branch
//! and `L` the reflected lower branch that exists only left of a stored
//! breakpoint. `R_2` is kept explicitly; every other level stores `M`, and in
//! the constrained case also `L` and the breakpoint. A query on `R_i` walks
//! the levels downward, composing the matrix of the branch that contains the
//! answer, and finally solves on the right piece of `R_2`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::chain::DerivativeChain;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::numerics::{Scalar, ToleranceConfig};
use crate::explicit_chain::{lower_piece, upper_piece};
use crate::plf::{make_r2, Plf};

/// Homogeneous 2-D affine transform. Only the top two rows are stored; the
/// bottom row is always `(0, 0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix<S> {
    rows: [[S; 3]; 2],
}

impl<S: Scalar> TransformMatrix<S> {
    pub fn new(row0: [S; 3], row1: [S; 3]) -> Self {
        Self { rows: [row0, row1] }
    }

    pub fn identity() -> Self {
        let (z, o) = (S::zero(), S::one());
        Self::new([o.clone(), z.clone(), z.clone()], [z.clone(), o, z])
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        match r {
            0 | 1 => self.rows[r][c].clone(),
            _ if c == 2 => S::one(),
            _ => S::zero(),
        }
    }

    /// Full 3x3 array including the implicit bottom row.
    pub fn to_rows(&self) -> [[S; 3]; 3] {
        let (z, o) = (S::zero(), S::one());
        [self.rows[0].clone(), self.rows[1].clone(), [z.clone(), z, o]]
    }

    pub fn apply(&self, x: &S, y: &S) -> (S, S) {
        let r = &self.rows;
        (
            r[0][0].clone() * x + &(r[0][1].clone() * y) + &r[0][2],
            r[1][0].clone() * x + &(r[1][1].clone() * y) + &r[1][2],
        )
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let a = &self.rows;
        let b = &rhs.rows;
        let row = |r: usize| {
            [
                a[r][0].clone() * &b[0][0] + &(a[r][1].clone() * &b[1][0]),
                a[r][0].clone() * &b[0][1] + &(a[r][1].clone() * &b[1][1]),
                a[r][0].clone() * &b[0][2] + &(a[r][1].clone() * &b[1][2]) + &a[r][2],
            ]
        };
        Self::new(row(0), row(1))
    }

    /// The row `line * self`: if `line . (x, y, 1)` describes a line at the
    /// target of the map, the result describes its preimage. Floating-point
    /// rows are rescaled to unit max-norm, which keeps the sign of every
    /// evaluation.
    pub fn pull_back(&self, line: &[S; 3]) -> [S; 3] {
        let r = &self.rows;
        let mut out = [
            line[0].clone() * &r[0][0] + &(line[1].clone() * &r[1][0]),
            line[0].clone() * &r[0][1] + &(line[1].clone() * &r[1][1]),
            line[0].clone() * &r[0][2] + &(line[1].clone() * &r[1][2]) + &line[2],
        ];
        if !S::EXACT {
            let scale = out.iter().fold(S::zero(), |m, v| m.max_of(v.abs()));
            if scale.is_positive() {
                for v in &mut out {
                    *v = v.clone() / &scale;
                }
            }
        }
        out
    }

    /// Determinant of the linear part.
    pub fn det(&self) -> S {
        let r = &self.rows;
        r[0][0].clone() * &r[1][1] - &(r[0][1].clone() * &r[1][0])
    }
}

fn positive_gaps<S: Scalar>(d_i: &S, d_next: &S) -> Result<(S, S)> {
    if !d_i.is_positive() || !d_next.is_positive() {
        return Err(Error::InvalidArgument("gaps must be positive".into()));
    }
    Ok((S::from_i64(2) * d_i * d_next, S::from_i64(4) * d_next * d_next))
}

/// Upper-branch map from the graph of `R_i` to the graph of `R_{i+1}`.
pub fn m_matrix<S: Scalar>(d_i: &S, d_next: &S) -> Result<TransformMatrix<S>> {
    let (xi, c) = positive_gaps(d_i, d_next)?;
    let z = S::zero();
    Ok(TransformMatrix::new(
        [z.clone(), S::one() / &xi, z.clone()],
        [-xi.clone(), c / &xi, z],
    ))
}

/// Lower-branch map (`x_{i+1} = 1 - x_i`).
pub fn l_matrix<S: Scalar>(d_i: &S, d_next: &S) -> Result<TransformMatrix<S>> {
    let (xi, c) = positive_gaps(d_i, d_next)?;
    let two_xi = S::from_i64(2) * &xi;
    Ok(TransformMatrix::new(
        [-S::one(), S::zero(), S::one()],
        [-(two_xi + &c), -S::one(), xi + &c],
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord<S> {
    pub level: usize,
    /// `2 d_i d_{i+1}` for the step into this level.
    pub xi: S,
    /// `4 d_{i+1}^2` for the step into this level.
    pub c: S,
    pub m_matrix: TransformMatrix<S>,
    pub l_matrix: Option<TransformMatrix<S>>,
    /// `(1 - w*, R_level(1 - w*))`
    pub breakpoint: Option<(S, S)>,
}

/// Operation counters of an implicit chain.
#[derive(Debug, Default)]
pub struct OpCounters {
    matrix_products: AtomicU64,
    queries: AtomicU64,
}

impl OpCounters {
    pub fn matrix_products(&self) -> u64 {
        self.matrix_products.load(Ordering::Relaxed)
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

#[derive(Debug)]
pub struct ImplicitChain<S> {
    base: Plf<S>,
    levels: Vec<LevelRecord<S>>,
    cfg: ToleranceConfig<S>,
    counters: OpCounters,
}

#[derive(Debug, Clone, Copy)]
enum Query<'a, S> {
    Eval(&'a S),
    Inverse(&'a S),
    Op3(&'a S),
}

impl<S: Scalar> Query<'_, S> {
    /// Coefficients of `key(x, y) - target` as a row acting on `(x, y, 1)`.
    fn line(&self) -> [S; 3] {
        let (z, o) = (S::zero(), S::one());
        match self {
            Query::Eval(x) => [o, z, -(*x).clone()],
            Query::Inverse(y) => [z, o, -(*y).clone()],
            Query::Op3(xi) => [o.clone(), o / *xi, -S::one()],
        }
    }
}

impl<S: Scalar> ImplicitChain<S> {
    pub fn base(&self) -> &Plf<S> {
        &self.base
    }

    /// Records for levels `3 ..= n - 1` in order.
    pub fn levels(&self) -> &[LevelRecord<S>] {
        &self.levels
    }

    pub fn record(&self, level: usize) -> &LevelRecord<S> {
        &self.levels[level - 3]
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    pub fn query_eval(&self, level: usize, x: &S) -> Result<S> {
        self.check_level(level)?;
        if x.is_negative() {
            return Err(Error::NegativeArgument(x.to_string()));
        }
        self.query(level, Query::Eval(x))
    }

    pub fn query_inverse(&self, level: usize, y: &S) -> Result<S> {
        self.check_level(level)?;
        let x = self.query(level, Query::Inverse(y))?;
        if x.is_negative() {
            if self.cfg.approx_eq_scaled(&x, &S::zero(), &S::one()) {
                return Ok(S::zero());
            }
            return Err(Error::BelowRange(y.to_string()));
        }
        Ok(x)
    }

    pub fn query_op3(&self, level: usize, xi: &S) -> Result<S> {
        self.check_level(level)?;
        if !xi.is_positive() {
            return Err(Error::InvalidArgument(format!("coupling {xi} must be positive")));
        }
        let x = self.query(level, Query::Op3(xi))?;
        if x.is_negative() && !self.cfg.approx_eq_scaled(&x, &S::zero(), &S::one()) {
            return Err(Error::Invariant(format!(
                "x + R_{level}(x)/xi exceeds 1 at x = 0"
            )));
        }
        Ok(x.max_of(S::zero()))
    }

    /// Walks the levels downward carrying the query as a line `l . (x, y, 1) = 0`
    /// pulled back through the chosen branch maps, so that `l . p` has the sign
    /// of `key(image of p) - target`. The pulled-back line is rescaled at every
    /// step in floating point; forming the composed transform itself would
    /// lose all precision once its entries grow. The answer is then read off
    /// the linear piece of `R_level` obtained by pushing the selected `R_2`
    /// piece back up through the same branches.
    fn query(&self, level: usize, q: Query<'_, S>) -> Result<S> {
        self.counters.queries.fetch_add(1, Ordering::Relaxed);
        let mut line = q.line();
        // true when the composed map reverses the order along the graph
        let mut reversed = false;
        let mut lower = Vec::with_capacity(level.saturating_sub(2));
        for j in (3..=level).rev() {
            let rec = self.record(j);
            let take_lower = match (&rec.breakpoint, &rec.l_matrix) {
                (Some((bx, by)), Some(_)) => {
                    let side = eval_line(&line, bx, by);
                    !side.is_zero() && side.is_negative() == reversed
                }
                _ => false,
            };
            let step = if take_lower {
                reversed = !reversed;
                rec.l_matrix.as_ref().expect("lower branch stored")
            } else {
                &rec.m_matrix
            };
            line = step.pull_back(&line);
            lower.push(take_lower);
            self.counters.matrix_products.fetch_add(1, Ordering::Relaxed);
        }

        // pick the piece of R_2 whose image contains the answer
        let base = &self.base;
        let mut k = 0;
        while k + 1 < base.num_pieces() {
            let side = eval_line(&line, &base.starts()[k + 1], &base.start_value(k + 1));
            let beyond = if reversed { side.is_negative() } else { side.is_positive() };
            if beyond {
                break;
            }
            k += 1;
        }
        let mut piece = base.pieces()[k].clone();
        for (j, &take_lower) in (3..=level).zip(lower.iter().rev()) {
            let rec = self.record(j);
            piece = if take_lower {
                lower_piece(&piece, &rec.xi, &rec.c)
            } else {
                upper_piece(&piece, &rec.xi, &rec.c)
            };
        }
        Ok(match q {
            Query::Eval(x) => piece.at(x),
            Query::Inverse(y) => piece.solve(y),
            Query::Op3(xi) => (xi.clone() - &piece.intercept) / &(xi.clone() + &piece.slope),
        })
    }
}

fn eval_line<S: Scalar>(line: &[S; 3], x: &S, y: &S) -> S {
    line[0].clone() * x + &(line[1].clone() * y) + &line[2]
}

impl<S: Scalar> DerivativeChain<S> for ImplicitChain<S> {
    fn top_level(&self) -> usize {
        self.levels.len() + 2
    }

    fn eval(&self, level: usize, x: &S) -> Result<S> {
        self.query_eval(level, x)
    }

    fn inverse(&self, level: usize, y: &S) -> Result<S> {
        self.query_inverse(level, y)
    }

    fn op3(&self, level: usize, xi: &S) -> Result<S> {
        self.query_op3(level, xi)
    }
}

pub fn build_implicit<S: Scalar>(inst: &Instance<S>) -> Result<ImplicitChain<S>> {
    build_implicit_with(inst, &S::default_tolerance())
}

pub fn build_implicit_with<S: Scalar>(
    inst: &Instance<S>,
    cfg: &ToleranceConfig<S>,
) -> Result<ImplicitChain<S>> {
    let n = inst.n();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let mut chain = ImplicitChain {
        base: make_r2(inst.gap(1), inst.gap(2))?,
        levels: Vec::with_capacity(n.saturating_sub(3)),
        cfg: cfg.clone(),
        counters: OpCounters::default(),
    };
    let one = S::one();
    for i in 2..n - 1 {
        let (d_i, d_next) = (inst.gap(i), inst.gap(i + 1));
        let xi = inst.coupling(i);
        let m = m_matrix(d_i, d_next)?;
        let c = S::from_i64(4) * d_next * d_next;
        let root = chain.query_inverse(i, &S::zero())?;
        let record = if root >= one || cfg.approx_eq(&root, &one) {
            LevelRecord {
                level: i + 1,
                xi: xi.clone(),
                c: c.clone(),
                m_matrix: m,
                l_matrix: None,
                breakpoint: None,
            }
        } else {
            let w_star = chain.query_op3(i, xi)?;
            let bx = one.clone() - &w_star;
            if !bx.is_positive() || bx >= one {
                return Err(Error::Invariant(format!(
                    "breakpoint {bx} of R_{} outside (0, 1)",
                    i + 1
                )));
            }
            // R_i^{-1}(xi (1 - w*)) = w* by the definition of w*
            let by = c.clone() * &bx - &(xi.clone() * &w_star);
            LevelRecord {
                level: i + 1,
                xi: xi.clone(),
                c: c.clone(),
                m_matrix: m,
                l_matrix: Some(l_matrix(d_i, d_next)?),
                breakpoint: Some((bx, by)),
            }
        };
        chain.levels.push(record);
    }
    Ok(chain)
}
