//! Extended-precision real and complex arithmetic.
//!
//! Precision is a decimal digit count carried by every value; binary
//! operations produce the smaller of their operands' precisions. Values are
//! immutable and `Send + Sync`; there is no ambient precision state.

mod complex;
pub mod decimal;
mod real;
mod transcendental;

pub use complex::Complex;
pub use real::{Precision, Real};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("precision of {digits} digits is below the minimum of 10")]
    PrecisionTooLow { digits: u32 },
    #[error("invalid decimal literal `{text}`")]
    InvalidDecimal { text: String },
}

/// Run `computation` at `digits` decimal digits.
pub fn with_precision<T>(
    digits: u32,
    computation: impl FnOnce(Precision) -> T,
) -> Result<T, NumericsError> {
    Ok(computation(Precision::new(digits)?))
}
