//! Optimal weights by back-substitution through the derivative chain.

use std::fmt;
use std::str::FromStr;

use crate::chain::DerivativeChain;
use crate::error::{Error, Result};
use crate::explicit_chain::build_chain_with;
use crate::implicit_chain::build_implicit_with;
use crate::instance::{check_kkt, compute_q, Instance, KKTCertificate, WeightVector};
use crate::numerics::{Scalar, ToleranceConfig};

pub use crate::instance::gradient_q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Explicit,
    Implicit,
}

impl Backend {
    pub const ALL: [Backend; 2] = [Backend::Explicit, Backend::Implicit];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Explicit => "explicit",
            Backend::Implicit => "implicit",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Backend::Explicit),
            "implicit" => Ok(Backend::Implicit),
            other => Err(Error::InvalidArgument(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Inverse queries issued during back-substitution.
    pub inverse_queries: usize,
    /// 3x3 products performed by the implicit backend (build and queries).
    pub matrix_products: u64,
}

#[derive(Debug, Clone)]
pub struct SolveResult<S> {
    pub weights: WeightVector<S>,
    pub q_value: S,
    pub certificate: KKTCertificate<S>,
    pub backend: Backend,
    /// Largest piece count over `R_2 .. R_{n-1}` (explicit backend only).
    pub max_pieces: Option<usize>,
    pub stats: SolveStats,
}

/// Recovers the weights from the chain with one inverse query per level:
///
/// ```text
/// w_{n-1} = max(R_{n-1}^{-1}(0), 1)
/// w_i     = max(R_i^{-1}(xi_i w_{i+1}), 1 - w_{i+1})    for i = n-2 .. 2
/// w_1     = max(d_2 / (2 d_1) w_2, 1)
/// ```
pub fn back_substitute<S: Scalar, C: DerivativeChain<S>>(
    inst: &Instance<S>,
    chain: &C,
) -> Result<(WeightVector<S>, usize)> {
    let n = inst.n();
    let top = n - 1;
    if chain.top_level() != top {
        return Err(Error::InvalidArgument(format!(
            "chain ends at level {}, instance needs {top}",
            chain.top_level()
        )));
    }
    let one = S::one();
    let mut w = vec![S::zero(); n - 1];
    w[top - 1] = chain.inverse(top, &S::zero())?.max_of(one.clone());
    let mut queries = 1;
    for i in (2..top).rev() {
        let next = w[i].clone();
        let unconstrained = chain.inverse(i, &(inst.coupling(i).clone() * &next))?;
        queries += 1;
        w[i - 1] = unconstrained.max_of(one.clone() - &next);
    }
    let ratio = inst.gap(2).clone() / &(S::from_i64(2) * inst.gap(1));
    w[0] = (ratio * &w[1]).max_of(one);
    Ok((WeightVector(w), queries))
}

pub fn solve<S: Scalar>(inst: &Instance<S>, backend: Backend) -> Result<SolveResult<S>> {
    solve_with(inst, backend, &S::default_tolerance())
}

/// Solves one instance. The certificate is computed in the same arithmetic;
/// callers decide what to do with an invalid one.
pub fn solve_with<S: Scalar>(
    inst: &Instance<S>,
    backend: Backend,
    cfg: &ToleranceConfig<S>,
) -> Result<SolveResult<S>> {
    let (weights, max_pieces, stats) = if inst.n() == 2 {
        (WeightVector(vec![S::one()]), None, SolveStats::default())
    } else {
        match backend {
            Backend::Explicit => {
                let chain = build_chain_with(inst, cfg)?;
                let (w, queries) = back_substitute(inst, &chain)?;
                let stats = SolveStats {
                    inverse_queries: queries,
                    matrix_products: 0,
                };
                (w, Some(chain.max_pieces()), stats)
            }
            Backend::Implicit => {
                let chain = build_implicit_with(inst, cfg)?;
                let (w, queries) = back_substitute(inst, &chain)?;
                let stats = SolveStats {
                    inverse_queries: queries,
                    matrix_products: chain.counters().matrix_products(),
                };
                (w, None, stats)
            }
        }
    };
    let q_value = compute_q(inst, &weights)?;
    let certificate = check_kkt(inst, &weights, cfg)?;
    Ok(SolveResult {
        weights,
        q_value,
        certificate,
        backend,
        max_pieces,
        stats,
    })
}
