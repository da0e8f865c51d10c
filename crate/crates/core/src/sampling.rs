//! Inverse-CDF draws shared by the simulators.

use rand::Rng;

use crate::Scalar;

/// Index drawn with probability proportional to `weights` (which should
/// sum to one). Rounding slack falls on the last positive entry.
pub(crate) fn sample_index<T: Scalar, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        let w = w.as_f64();
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Next state drawn from a sparse transition row.
pub(crate) fn sample_next<T: Scalar, R: Rng + ?Sized>(row: &[(usize, T)], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(y, p) in row {
        acc += p.as_f64();
        if u < acc {
            return y;
        }
    }
    row.last().map(|&(y, _)| y).expect("transition rows are nonempty")
}
