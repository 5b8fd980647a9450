//! Latent-position recovery from adjacency matrices.
//!
//! The spectral route takes the top eigenpairs of the adjacency matrix
//! ([`ase`]), which identifies the latent positions only up to an
//! orthogonal transformation. Two refinements fight that indeterminacy
//! using the out-of-simplex penalty [`penalty`]:
//!
//! - [`gaep`] minimizes the masked reconstruction error plus the penalty by
//!   gradient descent over the positions themselves;
//! - [`sae`] keeps the spectral solution and rotates it, minimizing the
//!   penalty over the orthogonal group by Riemannian gradient descent
//!   ([`rgd_orthogonal`]).
//!
//! [`procrustes_align`] solves the oracle alignment problem, and
//! [`project_to_dp`] pushes rows into the shrunken simplex interior so
//! that downstream logarithms stay finite.

use ndarray::{Array1, Array2, ArrayView2};

use crate::linalg::{
    bottom_eigenpairs, eigh_dense, expm, orthogonality_defect, svd_small, top_eigenpairs,
};
use crate::model::Graph;
use crate::{CoreError, Result, Scalar};

/// Options for the penalised gradient embedding.
#[derive(Debug, Clone)]
pub struct EmbedOptions<S> {
    /// Target dimension.
    pub p: usize,
    /// Penalty weight.
    pub lambda: S,
    /// Softplus sharpness.
    pub mu: S,
    /// Initial line-search step.
    pub step: S,
    pub max_iters: usize,
    /// Relative objective tolerance.
    pub tol: S,
    /// Warm start; the spectral embedding is used when absent.
    pub init: Option<Array2<S>>,
}

impl<S: Scalar> EmbedOptions<S> {
    /// Defaults for an `n`-node graph: mu = 50, lambda = n/10, tol = 1e-8,
    /// at most 2000 iterations.
    pub fn for_graph(p: usize, n: usize) -> Self {
        Self {
            p,
            lambda: S::of(n as f64 / 10.0),
            mu: S::of(50.0),
            step: S::of(1e-2),
            max_iters: 2000,
            tol: S::of(1e-8),
            init: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(CoreError::InvalidConfig("embedding dimension must be >= 1".into()));
        }
        if self.lambda < S::zero() || self.mu <= S::zero() || self.tol <= S::zero() {
            return Err(CoreError::InvalidConfig(
                "need lambda >= 0, mu > 0, tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of an orthogonal-group descent.
#[derive(Debug, Clone)]
pub struct AlignmentResult<S> {
    pub w: Array2<S>,
    pub objective: S,
    pub iterations: usize,
    /// Worst `||W^T W - I||_inf` over all iterates.
    pub max_defect: S,
}

/// Convergence report for [`gaep`].
#[derive(Debug, Clone, Copy)]
pub struct GaepReport<S> {
    pub objective: S,
    pub iterations: usize,
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// Spectral embedding
// ---------------------------------------------------------------------------

/// Adjacency spectral embedding: scaled eigenvectors of the `p` largest
/// eigenvalues, which must all be positive. Column signs are fixed by
/// making the largest-magnitude entry of each eigenvector positive.
pub fn ase<S: Scalar>(y: &Graph, p: usize) -> Result<Array2<S>> {
    let n = y.n();
    if p > n {
        return Err(CoreError::ShapeMismatch {
            context: "ase",
            detail: format!("p = {p} exceeds node count {n}"),
        });
    }
    let (vals, mut vecs) = top_eigenpairs::<S, _>(y, p, S::of(1e-10))?;
    let positive = vals.iter().filter(|&&v| v > S::zero()).count();
    if positive < p {
        return Err(CoreError::TooFewPositiveEigenvalues { found: positive, wanted: p });
    }
    for j in 0..p {
        let col = vecs.column(j);
        let mut best = 0usize;
        let mut best_abs = S::neg_infinity();
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < S::zero() {
            vecs.column_mut(j).mapv_inplace(|v| -v);
        }
        let scale = vals[j].sqrt();
        vecs.column_mut(j).mapv_inplace(|v| v * scale);
    }
    Ok(vecs)
}

/// The `k` largest-magnitude eigenvalues of the adjacency, signs kept,
/// sorted by decreasing magnitude. This is the data behind a scree plot.
pub fn scree<S: Scalar>(y: &Graph, k: usize) -> Result<Array1<S>> {
    let n = y.n();
    if k > n {
        return Err(CoreError::ShapeMismatch {
            context: "scree",
            detail: format!("k = {k} exceeds node count {n}"),
        });
    }
    if 2 * k > n {
        let dense = y.to_dense::<S>();
        let (vals, _) = eigh_dense(&dense.view());
        let mut all: Vec<S> = vals.to_vec();
        all.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
        return Ok(Array1::from_iter(all.into_iter().take(k)));
    }
    let (top, _) = top_eigenpairs::<S, _>(y, k, S::of(1e-10))?;
    let (bottom, _) = bottom_eigenpairs::<S, _>(y, k, S::of(1e-10))?;
    let mut out = Vec::with_capacity(k);
    let (mut i, mut j) = (0usize, 0usize);
    while out.len() < k {
        let from_top = match (top.get(i), bottom.get(j)) {
            (Some(&t), Some(&b)) => t.abs() >= b.abs(),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if from_top {
            out.push(top[i]);
            i += 1;
        } else {
            out.push(bottom[j]);
            j += 1;
        }
    }
    Ok(Array1::from_vec(out))
}

// ---------------------------------------------------------------------------
// Out-of-simplex penalty
// ---------------------------------------------------------------------------

fn softplus<S: Scalar>(x: S, mu: S) -> S {
    let t = mu * x;
    let cut = S::of(35.0);
    if t > cut {
        // softplus(x) ~ x for large arguments.
        x + (-t).exp().ln_1p() / mu
    } else if t < -cut {
        t.exp() / mu
    } else {
        t.exp().ln_1p() / mu
    }
}

fn logistic<S: Scalar>(t: S) -> S {
    if t >= S::zero() {
        S::one() / (S::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (S::one() + e)
    }
}

/// Out-of-simplex penalty: a softplus charge for every negative entry and
/// for every row sum exceeding one. Sharpness `mu` trades smoothness for
/// fidelity to the ReLU limit.
pub fn penalty<S: Scalar>(z: &ArrayView2<S>, mu: S) -> S {
    let mut total = S::zero();
    for row in z.rows() {
        let mut sum = S::zero();
        for &v in row.iter() {
            total += softplus(-v, mu);
            sum += v;
        }
        total += softplus(sum - S::one(), mu);
    }
    total
}

/// Gradient of [`penalty`]: `-sigma(-mu z_ij) + sigma(mu (rowsum_i - 1))`.
pub fn penalty_gradient<S: Scalar>(z: &ArrayView2<S>, mu: S) -> Array2<S> {
    let (n, p) = z.dim();
    let mut g = Array2::zeros((n, p));
    for i in 0..n {
        let row = z.row(i);
        let sum = row.iter().cloned().sum::<S>();
        let row_term = logistic(mu * (sum - S::one()));
        for j in 0..p {
            g[(i, j)] = -logistic(-mu * z[(i, j)]) + row_term;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Penalised gradient embedding
// ---------------------------------------------------------------------------

/// Gradient embedding with the out-of-simplex penalty: minimizes
/// `|| M o (Y - Z Z^T) ||_F^2 + lambda L_mu(Z)` over Z with backtracking
/// gradient descent, `M` masking the diagonal. Starts from [`ase`] unless
/// a warm start is supplied. The objective never increases across accepted
/// steps; if `max_iters` is hit first, the best iterate is returned with
/// `converged = false`.
pub fn gaep<S: Scalar>(y: &Graph, opts: &EmbedOptions<S>) -> Result<(Array2<S>, GaepReport<S>)> {
    opts.validate()?;
    let n = y.n();
    let yd = y.to_dense::<S>();
    let mut z = match &opts.init {
        Some(init) => {
            if init.dim() != (n, opts.p) {
                return Err(CoreError::ShapeMismatch {
                    context: "gaep warm start",
                    detail: format!("expected {:?}, got {:?}", (n, opts.p), init.dim()),
                });
            }
            init.clone()
        }
        None => ase(y, opts.p)?,
    };

    let objective = |z: &Array2<S>| -> S {
        let mut resid = &yd - &z.dot(&z.t());
        for i in 0..n {
            resid[(i, i)] = S::zero();
        }
        let recon = resid.iter().map(|&e| e * e).sum::<S>();
        recon + opts.lambda * penalty(&z.view(), opts.mu)
    };
    let gradient = |z: &Array2<S>| -> Array2<S> {
        let mut resid = &yd - &z.dot(&z.t());
        for i in 0..n {
            resid[(i, i)] = S::zero();
        }
        let mut g = resid.dot(z).mapv(|v| v * S::of(-4.0));
        let pg = penalty_gradient(&z.view(), opts.mu);
        g.zip_mut_with(&pg, |a, &b| *a += opts.lambda * b);
        g
    };

    let armijo = S::of(1e-4);
    let mut f = objective(&z);
    if !f.is_finite() {
        return Err(CoreError::NonFiniteObjective { iteration: 0 });
    }
    let mut step = opts.step;
    let mut converged = false;
    let mut iterations = 0usize;
    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let g = gradient(&z);
        let gnorm_sq = g.iter().map(|&v| v * v).sum::<S>();
        if gnorm_sq == S::zero() {
            converged = true;
            break;
        }
        // Backtracking from twice the last accepted step; once a step
        // passes the sufficient-decrease test, keep halving while that
        // still improves (avoids overshoot ping-pong near a minimizer).
        let mut alpha = (step * S::of(2.0)).min(S::of(1e6));
        let mut best: Option<(S, Array2<S>, S)> = None;
        for _ in 0..60 {
            let trial = &z - &g.mapv(|v| v * alpha);
            let ft = objective(&trial);
            if ft.is_finite() && ft <= f - armijo * alpha * gnorm_sq {
                let improves = best.as_ref().map(|(_, _, bf)| ft < *bf).unwrap_or(true);
                if improves {
                    best = Some((alpha, trial, ft));
                    alpha = alpha * S::of(0.5);
                    continue;
                }
                break;
            }
            if best.is_some() {
                break;
            }
            alpha = alpha * S::of(0.5);
        }
        match best {
            Some((accepted_step, znew, fnew)) => {
                let rel_drop = (f - fnew) / f.abs().max(S::one());
                z = znew;
                f = fnew;
                step = accepted_step;
                if rel_drop < opts.tol {
                    converged = true;
                    break;
                }
            }
            None => {
                // No sufficient-decrease step at representable sizes.
                converged = true;
                break;
            }
        }
    }
    Ok((
        z,
        GaepReport {
            objective: f,
            iterations,
            converged,
        },
    ))
}

// ---------------------------------------------------------------------------
// Riemannian descent on the orthogonal group
// ---------------------------------------------------------------------------

/// Options for [`rgd_orthogonal`].
#[derive(Debug, Clone, Copy)]
pub struct RgdOptions<S> {
    pub step: S,
    pub max_iters: usize,
    /// Stop when the Riemannian gradient norm falls below this.
    pub tol: S,
}

impl<S: Scalar> Default for RgdOptions<S> {
    fn default() -> Self {
        Self {
            step: S::one(),
            max_iters: 2000,
            tol: S::of(1e-8),
        }
    }
}

/// Minimizes a smooth function over the orthogonal group.
///
/// The Euclidean gradient `G` is projected to the tangent space as
/// `W (W^T G - G^T W) / 2`; steps follow the geodesic retraction
/// `W <- W expm(-alpha Omega)` with skew `Omega = (W^T G - G^T W)/2` and a
/// backtracked step size, so every iterate is orthogonal by construction.
pub fn rgd_orthogonal<S, FG, FO>(
    grad_fn: FG,
    objective_fn: FO,
    w0: Array2<S>,
    opts: &RgdOptions<S>,
) -> Result<AlignmentResult<S>>
where
    S: Scalar,
    FG: Fn(&ArrayView2<S>) -> Array2<S>,
    FO: Fn(&ArrayView2<S>) -> S,
{
    let p = w0.nrows();
    assert_eq!(p, w0.ncols(), "W must be square");
    let mut w = w0;
    let mut max_defect = orthogonality_defect(&w.view());
    if max_defect > S::of(1e-8) {
        return Err(CoreError::InvalidConfig(
            "rgd_orthogonal requires an orthogonal starting point".into(),
        ));
    }
    let mut f = objective_fn(&w.view());
    if !f.is_finite() {
        return Err(CoreError::NonFiniteObjective { iteration: 0 });
    }
    let armijo = S::of(1e-4);
    let mut step = opts.step;
    let mut iterations = 0usize;
    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let g = grad_fn(&w.view());
        let wg = w.t().dot(&g);
        let mut omega = Array2::zeros((p, p));
        for i in 0..p {
            for j in 0..p {
                omega[(i, j)] = (wg[(i, j)] - wg[(j, i)]) * S::of(0.5);
            }
        }
        let omega_norm_sq = omega.iter().map(|&v| v * v).sum::<S>();
        if omega_norm_sq.sqrt() <= opts.tol {
            break;
        }
        // Backtrack to a sufficient-decrease step, then keep halving while
        // that still improves (guards against overshoot ping-pong).
        let mut alpha = (step * S::of(2.0)).min(S::of(1e4));
        let mut best: Option<(S, Array2<S>, S)> = None;
        for _ in 0..60 {
            let rot = expm(&omega.mapv(|v| v * -alpha).view());
            let trial = w.dot(&rot);
            let ft = objective_fn(&trial.view());
            if ft.is_finite() && ft <= f - armijo * alpha * omega_norm_sq {
                let improves = best.as_ref().map(|(_, _, bf)| ft < *bf).unwrap_or(true);
                if improves {
                    best = Some((alpha, trial, ft));
                    alpha = alpha * S::of(0.5);
                    continue;
                }
                break;
            }
            if best.is_some() {
                break;
            }
            alpha = alpha * S::of(0.5);
        }
        let accepted = match best {
            Some((accepted_step, wnew, fnew)) => {
                w = wnew;
                f = fnew;
                step = accepted_step;
                true
            }
            None => false,
        };
        let defect = orthogonality_defect(&w.view());
        max_defect = max_defect.max(defect);
        if defect > S::of(1e-10) {
            // Re-polish via the polar factor; keeps the invariant with
            // plenty of margin.
            let svd = svd_small(&w.view());
            w = svd.u.dot(&svd.v.t());
            f = objective_fn(&w.view());
        }
        if !accepted {
            break; // no descent step at representable sizes
        }
    }
    if !f.is_finite() {
        return Err(CoreError::NonFiniteObjective { iteration: iterations });
    }
    Ok(AlignmentResult {
        objective: f,
        iterations: iterations.max(1),
        max_defect,
        w,
    })
}

// ---------------------------------------------------------------------------
// Penalty-minimising alignment
// ---------------------------------------------------------------------------

/// Options for [`sae`].
#[derive(Debug, Clone)]
pub struct SaeOptions<S> {
    pub rgd: RgdOptions<S>,
    /// Extra starting rotation, e.g. carried over from the previous period.
    pub warm_start: Option<Array2<S>>,
    /// When false only the warm start (or identity) is used; keeps a
    /// second period in the permutation class of the first.
    pub multi_start: bool,
    /// Cap on the number of signed-permutation starts.
    pub max_starts: usize,
    pub seed: u64,
}

impl<S: Scalar> Default for SaeOptions<S> {
    fn default() -> Self {
        Self {
            rgd: RgdOptions::default(),
            warm_start: None,
            multi_start: true,
            max_starts: 48,
            seed: 0,
        }
    }
}

/// Simplicial alignment: finds the orthogonal `W` minimizing the
/// out-of-simplex penalty of `Zhat W` and returns the rotated embedding.
/// The search multi-starts over signed permutations (the penalty's own
/// symmetry group) plus any warm start, keeping the best objective.
pub fn sae<S: Scalar>(
    zhat: &ArrayView2<S>,
    mu: S,
    opts: &SaeOptions<S>,
) -> Result<(Array2<S>, AlignmentResult<S>)> {
    let p = zhat.ncols();
    if zhat.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteObjective { iteration: 0 });
    }
    let mut starts: Vec<Array2<S>> = Vec::new();
    if let Some(ws) = &opts.warm_start {
        starts.push(ws.clone());
    }
    if opts.multi_start {
        starts.extend(signed_permutations::<S>(p, opts.max_starts, opts.seed));
    }
    if starts.is_empty() {
        starts.push(Array2::eye(p));
    }

    let grad = |w: &ArrayView2<S>| -> Array2<S> {
        let rotated = zhat.dot(w);
        zhat.t().dot(&penalty_gradient(&rotated.view(), mu))
    };
    let obj = |w: &ArrayView2<S>| -> S { penalty(&zhat.dot(w).view(), mu) };

    let mut best: Option<AlignmentResult<S>> = None;
    for w0 in starts {
        let result = rgd_orthogonal(grad, obj, w0, &opts.rgd)?;
        let better = best
            .as_ref()
            .map(|b| result.objective < b.objective)
            .unwrap_or(true);
        if better {
            best = Some(result);
        }
    }
    let best = best.expect("at least one start");
    Ok((zhat.dot(&best.w), best))
}

/// All signed permutation matrices of size p (or a seeded sample of
/// `cap` of them when the full group is larger).
fn signed_permutations<S: Scalar>(p: usize, cap: usize, seed: u64) -> Vec<Array2<S>> {
    let total_perms: usize = (1..=p).product();
    let total = total_perms.saturating_mul(1usize << p);
    let mut out = Vec::new();
    if total <= cap {
        let mut perm: Vec<usize> = (0..p).collect();
        permute_all(&mut perm, 0, &mut |perm| {
            for signs in 0..(1usize << p) {
                let mut w = Array2::zeros((p, p));
                for (row, &col) in perm.iter().enumerate() {
                    let s = if signs >> row & 1 == 1 { -S::one() } else { S::one() };
                    w[(row, col)] = s;
                }
                out.push(w);
            }
        });
    } else {
        // Deterministic sample: identity first, then seeded random draws.
        out.push(Array2::eye(p));
        let mut state = seed ^ 0xd1b5_4a32_d192_ed03;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 11
        };
        while out.len() < cap {
            let mut perm: Vec<usize> = (0..p).collect();
            for i in (1..p).rev() {
                let j = (next() % (i as u64 + 1)) as usize;
                perm.swap(i, j);
            }
            let signs = next();
            let mut w = Array2::zeros((p, p));
            for (row, &col) in perm.iter().enumerate() {
                let s = if signs >> row & 1 == 1 { -S::one() } else { S::one() };
                w[(row, col)] = s;
            }
            out.push(w);
        }
    }
    out
}

fn permute_all<F: FnMut(&[usize])>(perm: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute_all(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// Procrustes alignment
// ---------------------------------------------------------------------------

/// Result of the orthogonal Procrustes problem.
#[derive(Debug, Clone)]
pub struct ProcrustesResult<S> {
    pub w: Array2<S>,
    pub aligned: Array2<S>,
    /// Set when the cross-product matrix was rank deficient; the SVD
    /// convention then picks one of the optimal rotations.
    pub degenerate: bool,
}

/// Minimizes `|| Zref - Zhat W ||_F` over orthogonal `W` via the SVD of
/// `Zhat^T Zref`.
pub fn procrustes_align<S: Scalar>(
    zhat: &ArrayView2<S>,
    zref: &ArrayView2<S>,
) -> Result<ProcrustesResult<S>> {
    if zhat.dim() != zref.dim() {
        return Err(CoreError::ShapeMismatch {
            context: "procrustes_align",
            detail: format!("{:?} vs {:?}", zhat.dim(), zref.dim()),
        });
    }
    let m = zhat.t().dot(zref);
    let svd = svd_small(&m.view());
    let w = svd.u.dot(&svd.v.t());
    Ok(ProcrustesResult {
        aligned: zhat.dot(&w),
        degenerate: svd.rank_deficient,
        w,
    })
}

// ---------------------------------------------------------------------------
// Interior projection
// ---------------------------------------------------------------------------

/// Euclidean projection of every row onto the shrunken simplex
/// `{ z : z_j >= delta, sum(z) <= 1 - delta }`. Idempotent and
/// nonexpansive.
pub fn project_to_dp<S: Scalar>(z: &ArrayView2<S>, delta: S) -> Result<Array2<S>> {
    let (n, p) = z.dim();
    let budget = S::one() - S::of((p + 1) as f64) * delta;
    if delta <= S::zero() || budget <= S::zero() {
        return Err(CoreError::InfeasibleDelta {
            delta: delta.as_f64(),
            p,
        });
    }
    let mut out = Array2::zeros((n, p));
    let mut shifted = vec![S::zero(); p];
    for i in 0..n {
        for j in 0..p {
            shifted[j] = z[(i, j)] - delta;
        }
        let clipped_sum = shifted.iter().map(|&w| w.max(S::zero())).sum::<S>();
        if clipped_sum <= budget {
            for j in 0..p {
                out[(i, j)] = shifted[j].max(S::zero()) + delta;
            }
        } else {
            // Project onto { w >= 0, sum w = budget } by the sort-threshold
            // rule.
            let mut sorted = shifted.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut cumsum = S::zero();
            let mut theta = S::zero();
            for (idx, &u) in sorted.iter().enumerate() {
                cumsum += u;
                let t = (cumsum - budget) / S::of((idx + 1) as f64);
                if u - t > S::zero() {
                    theta = t;
                } else {
                    break;
                }
            }
            for j in 0..p {
                out[(i, j)] = (shifted[j] - theta).max(S::zero()) + delta;
            }
        }
    }
    Ok(out)
}
