//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point types the game, equilibrium and learning code can run on.
///
/// Implemented for `f32` and `f64`. All file formats are written in `f64`,
/// so values are converted at the I/O boundary.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// A tolerance that is at least `x` and never below the type's resolution.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        let t = Self::lit(x);
        if t > floor {
            t
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable `log Σ exp(xᵢ)`.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

/// Writes `softmax(xs)` into `out`.
pub fn softmax_into<T: Scalar>(xs: &[T], out: &mut [T]) {
    debug_assert_eq!(xs.len(), out.len());
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    let mut z = T::zero();
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = (x - m).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}
