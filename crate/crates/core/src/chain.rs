use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Query access to the derivative functions `R_2 .. R_{n-1}` of one instance,
/// independent of how they are represented.
pub trait DerivativeChain<S: Scalar> {
    /// Highest stored level (`n - 1`).
    fn top_level(&self) -> usize;

    /// `R_level(x)`.
    fn eval(&self, level: usize, x: &S) -> Result<S>;

    /// `R_level^{-1}(y)`.
    fn inverse(&self, level: usize, y: &S) -> Result<S>;

    /// The `x` with `x + R_level(x) / xi = 1`.
    fn op3(&self, level: usize, xi: &S) -> Result<S>;

    fn check_level(&self, level: usize) -> Result<()> {
        if level < 2 || level > self.top_level() {
            return Err(Error::LevelOutOfRange {
                level,
                min: 2,
                max: self.top_level(),
            });
        }
        Ok(())
    }
}
