//! Cholesky factorization with a ridge fallback for near-singular SPD
//! systems.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::{CoreError, Result, Scalar};

/// Lower-triangular Cholesky factor, or `None` when the matrix is not
/// positive definite to working precision.
pub fn cholesky<S: Scalar>(a: &ArrayView2<S>) -> Option<Array2<S>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky requires a square matrix");
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(S::zero(), S::max).max(S::one());
    let floor = S::epsilon() * scale * S::of(n as f64);
    let mut l = Array2::<S>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= floor || !sum.is_finite() {
                    return None;
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Factorization of an SPD matrix, possibly regularized by a diagonal
/// ridge when the plain factorization fails.
pub struct SpdFactor<S> {
    l: Array2<S>,
    /// Ridge that was added to the diagonal; zero when none was needed.
    pub ridge: S,
}

/// Factors `a`, escalating a ridge `eps * trace/dim` by factors of 100
/// until the Cholesky succeeds.
pub fn factor_spd_ridge<S: Scalar>(a: &ArrayView2<S>, base_eps: S) -> Result<SpdFactor<S>> {
    if let Some(l) = cholesky(a) {
        return Ok(SpdFactor { l, ridge: S::zero() });
    }
    let n = a.nrows();
    let trace = (0..n).map(|i| a[(i, i)]).sum::<S>();
    let unit = (trace.abs() / S::of(n as f64)).max(S::of(1e-300));
    let mut ridge = base_eps * unit;
    for _ in 0..6 {
        let mut shifted = a.to_owned();
        for i in 0..n {
            shifted[(i, i)] += ridge;
        }
        if let Some(l) = cholesky(&shifted.view()) {
            return Ok(SpdFactor { l, ridge });
        }
        ridge = ridge * S::of(100.0);
    }
    Err(CoreError::SingularSystem)
}

impl<S: Scalar> SpdFactor<S> {
    pub fn solve_vec(&self, b: &ArrayView1<S>) -> Array1<S> {
        let n = self.l.nrows();
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.l[(i, k)] * y[k];
            }
            y[i] = sum / self.l[(i, i)];
        }
        let mut x = Array1::zeros(n);
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= self.l[(k, i)] * x[k];
            }
            x[i] = sum / self.l[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &ArrayView2<S>) -> Array2<S> {
        let mut out = Array2::zeros(b.dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.solve_vec(&col));
        }
        out
    }
}

/// One-shot ridge-guarded SPD solve; returns the solution and the ridge
/// that was applied (zero if none).
pub fn solve_spd_ridge<S: Scalar>(
    a: &ArrayView2<S>,
    b: &ArrayView1<S>,
    base_eps: S,
) -> Result<(Array1<S>, S)> {
    let factor = factor_spd_ridge(a, base_eps)?;
    Ok((factor.solve_vec(b), factor.ridge))
}
