//! One-sided Jacobi SVD for small square matrices.

use ndarray::{Array1, Array2, ArrayView2};

use crate::Scalar;

pub struct SmallSvd<S> {
    pub u: Array2<S>,
    pub sigma: Array1<S>,
    pub v: Array2<S>,
    /// True when some singular value is numerically zero relative to the
    /// largest; the corresponding left vectors were completed arbitrarily.
    pub rank_deficient: bool,
}

/// Computes `a = u diag(sigma) v^T` for a square matrix by one-sided
/// Jacobi rotations. Singular values come out in descending order.
pub fn svd_small<S: Scalar>(a: &ArrayView2<S>) -> SmallSvd<S> {
    let p = a.nrows();
    assert_eq!(p, a.ncols(), "svd_small expects a square matrix");
    let mut b = a.to_owned();
    let mut v = Array2::<S>::eye(p);
    let eps = S::epsilon() * S::of(8.0);

    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let mut aii = S::zero();
                let mut ajj = S::zero();
                let mut aij = S::zero();
                for k in 0..p {
                    aii += b[(k, i)] * b[(k, i)];
                    ajj += b[(k, j)] * b[(k, j)];
                    aij += b[(k, i)] * b[(k, j)];
                }
                if aij.abs() <= eps * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (S::of(2.0) * aij);
                let t = if zeta == S::zero() {
                    S::one()
                } else {
                    let sign = if zeta > S::zero() { S::one() } else { -S::one() };
                    sign / (zeta.abs() + (S::one() + zeta * zeta).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..p {
                    let bi = b[(k, i)];
                    let bj = b[(k, j)];
                    b[(k, i)] = c * bi - s * bj;
                    b[(k, j)] = s * bi + c * bj;
                    let vi = v[(k, i)];
                    let vj = v[(k, j)];
                    v[(k, i)] = c * vi - s * vj;
                    v[(k, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<S> = (0..p)
        .map(|j| (0..p).map(|k| b[(k, j)] * b[(k, j)]).sum::<S>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let sigma_sorted: Vec<S> = order.iter().map(|&i| sigma[i]).collect();
    sigma = sigma_sorted;

    let sig_max = sigma.first().cloned().unwrap_or(S::zero());
    let rank_tol = sig_max * S::epsilon() * S::of(100.0);
    let mut u = Array2::<S>::zeros((p, p));
    let mut v_sorted = Array2::<S>::zeros((p, p));
    let mut rank_deficient = sig_max == S::zero();
    for (col, &src) in order.iter().enumerate() {
        v_sorted.column_mut(col).assign(&v.column(src));
        if sigma[col] > rank_tol {
            let inv = S::one() / sigma[col];
            for k in 0..p {
                u[(k, col)] = b[(k, src)] * inv;
            }
        } else {
            rank_deficient = true;
        }
    }
    // Complete null columns of U to an orthonormal basis.
    for col in 0..p {
        if sigma[col] > rank_tol {
            continue;
        }
        let mut best: Option<Array1<S>> = None;
        let mut best_norm = S::zero();
        for seed in 0..p {
            let mut cand = Array1::<S>::zeros(p);
            cand[seed] = S::one();
            for other in 0..p {
                if other == col {
                    continue;
                }
                if sigma.get(other).map_or(false, |&s| s > rank_tol) || other < col {
                    let proj = (0..p).map(|k| cand[k] * u[(k, other)]).sum::<S>();
                    for k in 0..p {
                        let adj = proj * u[(k, other)];
                        cand[k] -= adj;
                    }
                }
            }
            let norm = cand.iter().map(|&x| x * x).sum::<S>().sqrt();
            if norm > best_norm {
                best_norm = norm;
                best = Some(cand.mapv(|x| x / norm));
            }
        }
        if let Some(vec) = best {
            u.column_mut(col).assign(&vec);
        }
    }

    SmallSvd {
        u,
        sigma: Array1::from_vec(sigma),
        v: v_sorted,
        rank_deficient,
    }
}
