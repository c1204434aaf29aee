//! Scalar abstraction for the numeric core.
//!
//! Kernel computation, vector similarity, clustering and burst detection are
//! written against [`Real`] so they can run at `f32` or `f64`. The pipeline
//! itself instantiates everything at [`crate::Scalar`].

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the numeric core.
pub trait Real:
    Float + FromPrimitive + Sum<Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from a count. Panics only if the count
    /// cannot be represented at all, which no realistic corpus reaches.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }

    /// Conversion from an `f64` constant (config values, test expectations).
    fn from_f64c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable as scalar")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + Sum<T> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_generic<F: Real>(xs: &[F]) -> F {
        xs.iter().copied().sum()
    }

    #[test]
    fn works_for_both_widths() {
        assert_eq!(sum_generic(&[1.0f32, 2.0, 3.0]), 6.0);
        assert_eq!(sum_generic(&[1.0f64, 2.0, 3.0]), 6.0);
        assert_eq!(f32::from_count(7), 7.0);
        assert_eq!(f64::from_f64c(0.5), 0.5);
    }
}
