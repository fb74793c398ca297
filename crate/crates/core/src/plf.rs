//! Strictly increasing continuous piecewise-linear functions on `[0, inf)`.
//!
//! A [`Plf`] stores one `(slope, intercept)` pair per piece together with the
//! x-coordinate where each piece starts (the first piece starts at 0). A
//! breakpoint belongs to the piece on its right, which makes
//! [`Plf::right_slope`] the right derivative.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{Scalar, ToleranceConfig};

/// The line `x -> slope * x + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPiece<S> {
    pub slope: S,
    pub intercept: S,
}

impl<S: Scalar> LinearPiece<S> {
    pub fn new(slope: S, intercept: S) -> Self {
        Self { slope, intercept }
    }

    pub fn at(&self, x: &S) -> S {
        self.slope.clone() * x + &self.intercept
    }

    /// `x` with `at(x) == y`.
    pub fn solve(&self, y: &S) -> S {
        (y.clone() - &self.intercept) / &self.slope
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plf<S> {
    level: usize,
    starts: Vec<S>,
    pieces: Vec<LinearPiece<S>>,
}

impl<S: Scalar> Plf<S> {
    /// A single piece covering `[0, inf)`.
    pub fn new(level: usize, first: LinearPiece<S>) -> Result<Self> {
        if !first.slope.is_positive() {
            return Err(Error::NonPositiveSlope(first.slope.to_string()));
        }
        Ok(Self {
            level,
            starts: vec![S::zero()],
            pieces: vec![first],
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[LinearPiece<S>] {
        &self.pieces
    }

    /// Start of every piece; `starts()[0] == 0`.
    pub fn starts(&self) -> &[S] {
        &self.starts
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> &[S] {
        &self.starts[1..]
    }

    /// Value at the start of piece `k`, taken from piece `k` itself.
    pub fn start_value(&self, k: usize) -> S {
        self.pieces[k].at(&self.starts[k])
    }

    /// Index of the piece governing `x` (the right piece at a breakpoint).
    pub fn piece_index(&self, x: &S) -> usize {
        self.starts.partition_point(|s| s <= x).saturating_sub(1)
    }

    /// Index of the piece governing points just left of `x` (for `x > 0`).
    pub fn piece_index_left(&self, x: &S) -> usize {
        self.starts.partition_point(|s| s < x).saturating_sub(1)
    }

    pub fn eval(&self, x: &S) -> Result<S> {
        if x.is_negative() {
            return Err(Error::NegativeArgument(x.to_string()));
        }
        Ok(self.pieces[self.piece_index(x)].at(x))
    }

    pub fn right_slope(&self, x: &S) -> Result<S> {
        if x.is_negative() {
            return Err(Error::NegativeArgument(x.to_string()));
        }
        Ok(self.pieces[self.piece_index(x)].slope.clone())
    }

    pub fn value_at_zero(&self) -> S {
        self.pieces[0].intercept.clone()
    }

    /// Unique `x >= 0` with `f(x) = y`.
    pub fn inverse(&self, y: &S) -> Result<S> {
        if *y < self.value_at_zero() {
            return Err(Error::BelowRange(y.to_string()));
        }
        let k = self.last_piece_where(|k| self.start_value(k) <= *y);
        let x = self.pieces[k].solve(y);
        Ok(x.max_of(self.starts[k].clone()))
    }

    /// Unique `x` with `x + f(x) / xi = 1`.
    pub fn solve_op3(&self, xi: &S) -> Result<S> {
        if !xi.is_positive() {
            return Err(Error::InvalidArgument(format!("coupling {xi} must be positive")));
        }
        let one = S::one();
        let g = |k: usize| self.starts[k].clone() + &(self.start_value(k) / xi);
        if g(0) > one {
            return Err(Error::Invariant(format!(
                "x + f(x)/xi exceeds 1 at x = 0 (f(0) = {})",
                self.value_at_zero()
            )));
        }
        let k = self.last_piece_where(|k| g(k) <= one);
        let p = &self.pieces[k];
        // x + (m x + b) / xi = 1  =>  x = (xi - b) / (xi + m)
        let x = (xi.clone() - &p.intercept) / &(xi.clone() + &p.slope);
        Ok(x.max_of(self.starts[k].clone()))
    }

    /// Largest piece index satisfying a predicate that holds for a prefix.
    fn last_piece_where(&self, pred: impl Fn(usize) -> bool) -> usize {
        let (mut lo, mut hi) = (0usize, self.pieces.len());
        // pred(lo) holds; find the first index in (lo, hi) where it fails.
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pred(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn append_piece(&mut self, piece: LinearPiece<S>, from_x: S) -> Result<()> {
        self.append_piece_with(piece, from_x, &S::default_tolerance())
    }

    /// Extends the function with `piece` from `from_x` on. A piece collinear
    /// with the current last one is merged into it.
    pub fn append_piece_with(
        &mut self,
        piece: LinearPiece<S>,
        from_x: S,
        cfg: &ToleranceConfig<S>,
    ) -> Result<()> {
        if !piece.slope.is_positive() {
            return Err(Error::NonPositiveSlope(piece.slope.to_string()));
        }
        let last_start = self.starts.last().expect("non-empty").clone();
        if from_x <= last_start {
            if self.pieces.len() > 1 && cfg.approx_eq(&from_x, &last_start) {
                // zero-length piece produced by rounding
                self.pieces.pop();
                self.starts.pop();
                return self.append_piece_with(piece, from_x, cfg);
            }
            return Err(Error::InvalidArgument(format!(
                "piece start {from_x} does not follow {last_start}"
            )));
        }
        let last = self.pieces.last().expect("non-empty");
        let left = last.at(&from_x);
        let right = piece.at(&from_x);
        let scale = (last.slope.clone() * &from_x)
            .abs()
            .max_of(last.intercept.abs())
            .max_of((piece.slope.clone() * &from_x).abs())
            .max_of(piece.intercept.abs());
        if !cfg.approx_eq_scaled(&left, &right, &scale) {
            return Err(Error::Discontinuity(from_x.to_string()));
        }
        if cfg.approx_eq(&last.slope, &piece.slope)
            && cfg.approx_eq_scaled(&last.intercept, &piece.intercept, &scale)
        {
            return Ok(());
        }
        self.starts.push(from_x);
        self.pieces.push(piece);
        Ok(())
    }

    /// One line per piece: `from_x slope intercept`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (s, p) in self.starts.iter().zip(&self.pieces) {
            let _ = writeln!(out, "{} {} {}", s, p.slope, p.intercept);
        }
        out
    }

    /// Checks the structural properties every `R_i` has: negative value at
    /// zero, slopes bounded below by `(2 + 2/i) d_i^2`, continuity, and a final
    /// piece through the origin with exactly the bound as slope.
    pub fn check_level_invariants(&self, d_level: &S, cfg: &ToleranceConfig<S>) -> Result<()> {
        let i = self.level as i64;
        let bound = (S::from_i64(2) + &S::from_ratio(2, i)?) * d_level * d_level;
        if !self.value_at_zero().is_negative() {
            return Err(Error::Invariant(format!(
                "R_{i}(0) = {} is not negative",
                self.value_at_zero()
            )));
        }
        for p in &self.pieces {
            if !cfg.ge(&p.slope, &bound) {
                return Err(Error::Invariant(format!(
                    "R_{i} slope {} below bound {bound}",
                    p.slope
                )));
            }
        }
        for k in 1..self.pieces.len() {
            let x = &self.starts[k];
            let (a, b) = (self.pieces[k - 1].at(x), self.pieces[k].at(x));
            let scale = a.abs().max_of(b.abs()).max_of(self.pieces[k].intercept.abs());
            if !cfg.approx_eq_scaled(&a, &b, &scale) {
                return Err(Error::Invariant(format!("R_{i} discontinuous at {x}")));
            }
            if self.starts[k] <= self.starts[k - 1] {
                return Err(Error::Invariant(format!("R_{i} breakpoints not ascending")));
            }
        }
        let last = self.pieces.last().expect("non-empty");
        let scale = bound.abs();
        if !cfg.approx_eq(&last.slope, &bound)
            || !cfg.approx_eq_scaled(&last.intercept, &S::zero(), &scale)
        {
            return Err(Error::Invariant(format!(
                "R_{i} final piece {}x + {} differs from {bound}x",
                last.slope, last.intercept
            )));
        }
        Ok(())
    }
}

/// `R_2` from the first two gaps: `4 d2^2 x - xi_1` below `2 d1 / d2`, then
/// `3 d2^2 x`.
pub fn make_r2<S: Scalar>(d1: &S, d2: &S) -> Result<Plf<S>> {
    if !d1.is_positive() {
        return Err(Error::NonPositiveGap(0));
    }
    if !d2.is_positive() {
        return Err(Error::NonPositiveGap(1));
    }
    let d2sq = d2.clone() * d2;
    let xi = S::from_i64(2) * d1 * d2;
    Ok(Plf {
        level: 2,
        starts: vec![S::zero(), S::from_i64(2) * d1 / d2],
        pieces: vec![
            LinearPiece::new(S::from_i64(4) * &d2sq, -xi),
            LinearPiece::new(S::from_i64(3) * &d2sq, S::zero()),
        ],
    })
}
