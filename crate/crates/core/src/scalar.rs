//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for probabilities, rewards, and values.
///
/// Implemented for `f32` and `f64`. Validation tolerances scale with the
/// precision of the type; `f64` uses the `1e-9` row-sum tolerance.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Tolerance used when checking that probability vectors sum to one.
    const STOCHASTIC_TOL: f64;

    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    fn tol() -> Self {
        Self::of(Self::STOCHASTIC_TOL)
    }
}

impl Scalar for f64 {
    const STOCHASTIC_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const STOCHASTIC_TOL: f64 = 1e-5;
}

/// Index of the largest entry, ties broken towards the lowest index.
pub fn argmax<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// `Σ p(y) v(y)`.
pub fn dot<T: Scalar>(p: &[T], v: &[T]) -> T {
    debug_assert_eq!(p.len(), v.len());
    p.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}
