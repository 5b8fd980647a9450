//! Matrix exponential by scaling-and-squaring with a Taylor series.
//! Used on small skew-symmetric matrices, where the result is orthogonal.

use ndarray::{Array2, ArrayView2};

use crate::Scalar;

pub fn expm<S: Scalar>(a: &ArrayView2<S>) -> Array2<S> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = a
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|&x| x.abs()).sum::<S>())
        .fold(S::zero(), S::max);
    let mut squarings = 0u32;
    let half = S::of(0.5);
    let mut scale = S::one();
    while norm * scale > half {
        scale = scale * half;
        squarings += 1;
    }
    let scaled = a.mapv(|x| x * scale);

    let mut result = Array2::<S>::eye(n) + &scaled;
    let mut term = scaled.clone();
    for k in 2..64 {
        term = term.dot(&scaled).mapv(|x| x / S::of(k as f64));
        let tnorm = term.iter().map(|&x| x.abs()).fold(S::zero(), S::max);
        result = result + &term;
        if tnorm < S::epsilon() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}
