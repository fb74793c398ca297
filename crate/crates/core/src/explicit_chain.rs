//! Explicit construction of `R_2 .. R_{n-1}` as piecewise-linear functions.
//!
//! With `xi = 2 d_i d_{i+1}` and `c = 4 d_{i+1}^2`, a piece `m x + b` of `R_i`
//! yields the piece `(c - xi^2 / m) x + xi b / m` of `R_{i+1}` on the upper
//! branch (`R_{i+1}(x) = c x - xi R_i^{-1}(xi x)`), and the piece
//! `(m + 2 xi + c) x - (m + b + xi)` on the reflected lower branch
//! (`R_{i+1}(x) = -R_i(1 - x) + (2 xi + c) x - xi`).

use crate::chain::DerivativeChain;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::numerics::{Scalar, ToleranceConfig};
use crate::plf::{make_r2, LinearPiece, Plf};

/// Image of a piece of `R_i` under the upper branch.
pub(crate) fn upper_piece<S: Scalar>(p: &LinearPiece<S>, xi: &S, c: &S) -> LinearPiece<S> {
    LinearPiece::new(
        c.clone() - &(xi.clone() * xi / &p.slope),
        xi.clone() * &p.intercept / &p.slope,
    )
}

/// Image of a piece of `R_i` under the lower branch.
pub(crate) fn lower_piece<S: Scalar>(p: &LinearPiece<S>, xi: &S, c: &S) -> LinearPiece<S> {
    LinearPiece::new(
        p.slope.clone() + &(S::from_i64(2) * xi) + c,
        -(p.slope.clone() + &p.intercept + xi),
    )
}

/// Result of one recursion step.
#[derive(Debug, Clone)]
pub struct Extension<S> {
    pub function: Plf<S>,
    /// `1 - w*` when the pair constraint binds for small `w_{i+1}`.
    pub split: Option<S>,
}

/// Builds `R_{i+1}` from `R_i`.
pub fn extend<S: Scalar>(r_i: &Plf<S>, d_i: &S, d_next: &S) -> Result<Plf<S>> {
    extend_with(r_i, d_i, d_next, &S::default_tolerance()).map(|e| e.function)
}

pub fn extend_with<S: Scalar>(
    r_i: &Plf<S>,
    d_i: &S,
    d_next: &S,
    cfg: &ToleranceConfig<S>,
) -> Result<Extension<S>> {
    if !d_i.is_positive() || !d_next.is_positive() {
        return Err(Error::InvalidArgument("gaps must be positive".into()));
    }
    let xi = S::from_i64(2) * d_i * d_next;
    let c = S::from_i64(4) * d_next * d_next;
    let one = S::one();
    let level = r_i.level() + 1;
    let starts = r_i.starts();
    let pieces = r_i.pieces();

    let root = r_i.inverse(&S::zero())?;
    let (mut out, first_upper, split) = if root >= one || cfg.approx_eq(&root, &one) {
        let k0 = r_i.piece_index(&root);
        let f = Plf::new(level, upper_piece(&pieces[k0], &xi, &c))?;
        (f, k0, None)
    } else {
        let w_star = r_i.solve_op3(&xi)?;
        let split = one.clone() - &w_star;
        let k_top = r_i.piece_index_left(&one);
        let k_star = r_i.piece_index(&w_star);

        // walking x upward from 0 walks R_i downward from 1 to w*
        let mut f = Plf::new(level, lower_piece(&pieces[k_top], &xi, &c))?;
        for k in (k_star..k_top).rev() {
            let from = one.clone() - &starts[k + 1];
            f.append_piece_with(lower_piece(&pieces[k], &xi, &c), from, cfg)?;
        }

        let lower_val = -r_i.eval(&w_star)? + &((S::from_i64(2) * &xi + &c) * &split) - &xi;
        let upper_val = c.clone() * &split - &(xi.clone() * &r_i.inverse(&(xi.clone() * &split))?);
        let scale = (c.clone() * &split).abs().max_of(xi.abs());
        if !cfg.approx_eq_scaled(&lower_val, &upper_val, &scale) {
            return Err(Error::Invariant(format!(
                "branches of R_{level} disagree at {split}: {lower_val} vs {upper_val}"
            )));
        }
        f.append_piece_with(upper_piece(&pieces[k_star], &xi, &c), split.clone(), cfg)?;
        (f, k_star, Some(split))
    };
    for (k, piece) in pieces.iter().enumerate().skip(first_upper + 1) {
        let from = r_i.start_value(k) / &xi;
        out.append_piece_with(upper_piece(piece, &xi, &c), from, cfg)?;
    }

    if out.num_pieces() > 2 * r_i.num_pieces() {
        return Err(Error::Invariant(format!(
            "R_{level} has {} pieces, more than twice the {} of R_{}",
            out.num_pieces(),
            r_i.num_pieces(),
            r_i.level()
        )));
    }
    Ok(Extension {
        function: out,
        split,
    })
}

/// All derivative functions of one instance in explicit form.
#[derive(Debug, Clone)]
pub struct ExplicitChain<S> {
    functions: Vec<Plf<S>>,
    splits: Vec<Option<S>>,
    max_pieces: usize,
}

impl<S: Scalar> ExplicitChain<S> {
    /// `R_level` for `2 <= level <= n - 1`.
    pub fn function(&self, level: usize) -> &Plf<S> {
        &self.functions[level - 2]
    }

    pub fn functions(&self) -> &[Plf<S>] {
        &self.functions
    }

    /// Case-2 breakpoint of `R_level` (levels >= 3), if any.
    pub fn split(&self, level: usize) -> Option<&S> {
        self.splits[level - 2].as_ref()
    }

    pub fn max_pieces(&self) -> usize {
        self.max_pieces
    }

    pub fn dump(&self) -> String {
        self.functions
            .iter()
            .map(|f| format!("# R_{}\n{}", f.level(), f.dump()))
            .collect()
    }
}

pub fn build_chain<S: Scalar>(inst: &Instance<S>) -> Result<ExplicitChain<S>> {
    build_chain_with(inst, &S::default_tolerance())
}

pub fn build_chain_with<S: Scalar>(
    inst: &Instance<S>,
    cfg: &ToleranceConfig<S>,
) -> Result<ExplicitChain<S>> {
    let n = inst.n();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let mut functions = Vec::with_capacity(n - 2);
    let mut splits = Vec::with_capacity(n - 2);
    functions.push(make_r2(inst.gap(1), inst.gap(2))?);
    splits.push(None);
    for i in 2..n - 1 {
        let ext = extend_with(&functions[i - 2], inst.gap(i), inst.gap(i + 1), cfg)?;
        functions.push(ext.function);
        splits.push(ext.split);
    }
    let max_pieces = functions.iter().map(Plf::num_pieces).max().unwrap_or(0);
    Ok(ExplicitChain {
        functions,
        splits,
        max_pieces,
    })
}

impl<S: Scalar> DerivativeChain<S> for ExplicitChain<S> {
    fn top_level(&self) -> usize {
        self.functions.len() + 1
    }

    fn eval(&self, level: usize, x: &S) -> Result<S> {
        self.check_level(level)?;
        self.function(level).eval(x)
    }

    fn inverse(&self, level: usize, y: &S) -> Result<S> {
        self.check_level(level)?;
        self.function(level).inverse(y)
    }

    fn op3(&self, level: usize, xi: &S) -> Result<S> {
        self.check_level(level)?;
        self.function(level).solve_op3(xi)
    }
}
