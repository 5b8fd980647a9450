//! Small dense linear algebra kept in-crate: the shapes involved are either
//! tiny (coefficient lifts, orthogonal alignment) or structured (adjacency
//! matvecs), so nothing here needs an external backend.

pub mod cholesky;
pub mod eigen;
pub mod expm;
pub mod svd;

pub use cholesky::{cholesky, factor_spd_ridge, solve_spd_ridge, SpdFactor};
pub use eigen::{bottom_eigenpairs, eigh_dense, top_eigenpairs, SymOp};
pub use expm::expm;
pub use svd::{svd_small, SmallSvd};

use ndarray::{Array1, Array2, ArrayView2};

use crate::Scalar;

/// Row-major vectorization: rows of `m` concatenated into one vector.
///
/// This is the flattening under which `vec(X B) = (X ⊗ I) vec(B)` holds,
/// with the Kronecker product as built by [`kron`].
pub fn vec_rows<S: Scalar>(m: &ArrayView2<S>) -> Array1<S> {
    Array1::from_iter(m.iter().cloned())
}

/// Dense Kronecker product `a ⊗ b`. Intended for small matrices.
pub fn kron<S: Scalar>(a: &ArrayView2<S>, b: &ArrayView2<S>) -> Array2<S> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let scale = a[(i, j)];
            if scale == S::zero() {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = scale * b[(k, l)];
                }
            }
        }
    }
    out
}

/// The 2→∞ norm: the largest Euclidean row norm.
pub fn two_to_inf<S: Scalar>(m: &ArrayView2<S>) -> S {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|&x| x * x).sum::<S>().sqrt())
        .fold(S::zero(), S::max)
}

/// Largest absolute entry.
pub fn max_abs<S: Scalar>(m: &ArrayView2<S>) -> S {
    m.iter().map(|&x| x.abs()).fold(S::zero(), S::max)
}

/// Largest absolute deviation of `w^T w` from the identity.
pub fn orthogonality_defect<S: Scalar>(w: &ArrayView2<S>) -> S {
    let p = w.ncols();
    let gram = w.t().dot(w);
    let mut worst = S::zero();
    for i in 0..p {
        for j in 0..p {
            let target = if i == j { S::one() } else { S::zero() };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}
