//! Dirichlet generalized linear model with a log link.
//!
//! Observation `i` has design row `x_i` (position, attractors, intercept)
//! and a response row on the open simplex. Its concentration is
//! `alpha_i = exp(B^T x_i)`, and with `t_i = log` response,
//!
//! ```text
//! l(B)   = sum_i  alpha_i . t_i - (1 . lnGamma(alpha_i) - lnGamma(1 . alpha_i)) - 1 . t_i
//! s_n(B) = sum_i  x_i (x) diag(alpha_i) (t_i - mu_i)
//! F_n(B) = sum_i  (x_i x_i^T) (x) diag(alpha_i) Sigma_i diag(alpha_i)
//! ```
//!
//! with `mu_i = psi(alpha_i) - psi(1 . alpha_i)` and
//! `Sigma_i = diag(psi'(alpha_i)) - psi'(1 . alpha_i)`, everything indexed
//! against the row-major vectorization of `B`. The negative Hessian splits
//! as `F_n + R_n` where the remainder [`remainder`] collects the mean-zero
//! curvature term; Fisher scoring with step halving climbs the likelihood,
//! and the four structural coefficients are recovered by projecting the
//! fitted vector onto the column space of the constraint matrix `C`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::linalg::{factor_spd_ridge, SpdFactor};
use crate::model::{alpha_update, build_c, BetaParams, DesignMatrix};
use crate::special::{digamma, ln_gamma, trigamma};
use crate::{CoreError, Result, Scalar};

/// Design/response pair for one transition.
#[derive(Debug, Clone)]
pub struct GlmData<S> {
    x: DesignMatrix<S>,
    /// Response rows with entries strictly inside (0, 1); in the pipeline
    /// these are star-lifted, interior-projected latent positions.
    response: Array2<S>,
    log_response: Array2<S>,
}

impl<S: Scalar> GlmData<S> {
    pub fn new(x: DesignMatrix<S>, response: Array2<S>) -> Result<Self> {
        if response.nrows() != x.n() || response.ncols() != x.p() + 1 {
            return Err(CoreError::ShapeMismatch {
                context: "glm data",
                detail: format!(
                    "design is {} x (3*{}+1), response is {:?}",
                    x.n(),
                    x.p(),
                    response.dim()
                ),
            });
        }
        for (i, row) in response.rows().into_iter().enumerate() {
            if row.iter().any(|&v| v <= S::zero() || v >= S::one() || !v.is_finite()) {
                return Err(CoreError::ResponseNotInterior { row: i });
            }
        }
        let log_response = response.mapv(|v| v.ln());
        Ok(Self { x, response, log_response })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn p(&self) -> usize {
        self.x.p()
    }

    pub fn design(&self) -> &DesignMatrix<S> {
        &self.x
    }

    pub fn response(&self) -> ArrayView2<'_, S> {
        self.response.view()
    }

    /// Length of the vectorized coefficient matrix.
    pub fn dim(&self) -> usize {
        (3 * self.p() + 1) * (self.p() + 1)
    }

    fn bv_to_b(&self, bv: &ArrayView1<S>) -> Array2<S> {
        let q = 3 * self.p() + 1;
        let m = self.p() + 1;
        Array2::from_shape_vec((q, m), bv.to_vec()).expect("bv length matches (3p+1)(p+1)")
    }
}

/// Fisher scoring controls.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions<S> {
    /// Convergence threshold on the max-norm of the scoring step.
    pub tol: S,
    pub max_iters: usize,
    /// Minimum observation count accepted by [`fit`].
    pub min_obs: usize,
    /// Base ridge (relative to trace/dim) for near-singular information.
    pub ridge_eps: S,
}

impl<S: Scalar> Default for FitOptions<S> {
    fn default() -> Self {
        Self {
            tol: S::of(1e-8),
            max_iters: 100,
            min_obs: 50,
            ridge_eps: S::of(1e-8),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport<S> {
    /// Fitted vectorized coefficient matrix.
    pub bv_hat: Array1<S>,
    /// Projection of `bv_hat` onto the structural coefficients.
    pub beta_hat: BetaParams<S>,
    /// Asymptotic covariance of `beta_hat`.
    pub cov_beta: Array2<S>,
    pub loglik: S,
    pub iterations: usize,
    pub converged: bool,
    /// Condition estimate (largest / smallest eigenvalue) of the Fisher
    /// information at the solution.
    pub condition: S,
    /// Smallest Fisher eigenvalue at the solution.
    pub min_eigenvalue: S,
    /// Ridge added to the information in the final solve; zero when clean.
    pub ridge: S,
    /// Log-concentration clamp events at the solution.
    pub clamped: usize,
    /// Likelihood after each accepted step (ascent check).
    pub loglik_trace: Vec<S>,
}

// ---------------------------------------------------------------------------
// Likelihood, score, information
// ---------------------------------------------------------------------------

fn concentrations<S: Scalar>(data: &GlmData<S>, b: &ArrayView2<S>) -> (Array2<S>, usize) {
    alpha_update(data.design(), b)
}

/// Log-likelihood of the coefficient matrix given the data.
pub fn log_likelihood<S: Scalar>(b: &ArrayView2<S>, data: &GlmData<S>) -> S {
    let (alpha, _) = concentrations(data, b);
    let m = data.p() + 1;
    let mut total = S::zero();
    for i in 0..data.n() {
        let mut dot = S::zero();
        let mut lg = S::zero();
        let mut asum = S::zero();
        let mut tsum = S::zero();
        for a in 0..m {
            let al = alpha[(i, a)];
            let t = data.log_response[(i, a)];
            dot += al * t;
            lg += ln_gamma(al);
            asum += al;
            tsum += t;
        }
        total += dot - (lg - ln_gamma(asum)) - tsum;
    }
    total
}

fn mean_log<S: Scalar>(alpha_row: &[S]) -> Vec<S> {
    let asum = alpha_row.iter().cloned().sum::<S>();
    let psi0 = digamma(asum);
    alpha_row.iter().map(|&a| digamma(a) - psi0).collect()
}

/// Score: gradient of the log-likelihood in the vectorized coefficients.
pub fn score<S: Scalar>(b: &ArrayView2<S>, data: &GlmData<S>) -> Array1<S> {
    let (alpha, _) = concentrations(data, b);
    let q = 3 * data.p() + 1;
    let m = data.p() + 1;
    let x = data.design().matrix();
    let mut s = Array1::zeros(q * m);
    let mut weights = vec![S::zero(); m];
    for i in 0..data.n() {
        let arow: Vec<S> = (0..m).map(|a| alpha[(i, a)]).collect();
        let mu = mean_log(&arow);
        for a in 0..m {
            weights[a] = arow[a] * (data.log_response[(i, a)] - mu[a]);
        }
        for k in 0..q {
            let xk = x[(i, k)];
            if xk == S::zero() {
                continue;
            }
            for a in 0..m {
                s[k * m + a] += xk * weights[a];
            }
        }
    }
    s
}

/// Fisher information: expected negative Hessian, block `(k,l)` equal to
/// `sum_i x_ik x_il diag(alpha_i) Sigma_i diag(alpha_i)`.
pub fn fisher_info<S: Scalar>(b: &ArrayView2<S>, data: &GlmData<S>) -> Array2<S> {
    let (alpha, _) = concentrations(data, b);
    let q = 3 * data.p() + 1;
    let m = data.p() + 1;
    let x = data.design().matrix();
    let mut f = Array2::zeros((q * m, q * m));
    let mut inner = Array2::<S>::zeros((m, m));
    for i in 0..data.n() {
        let arow: Vec<S> = (0..m).map(|a| alpha[(i, a)]).collect();
        let asum = arow.iter().cloned().sum::<S>();
        let tri0 = trigamma(asum);
        for a in 0..m {
            for c in 0..m {
                let sig = if a == c { trigamma(arow[a]) - tri0 } else { -tri0 };
                inner[(a, c)] = arow[a] * arow[c] * sig;
            }
        }
        for k in 0..q {
            let xk = x[(i, k)];
            if xk == S::zero() {
                continue;
            }
            for l in 0..q {
                let w = xk * x[(i, l)];
                if w == S::zero() {
                    continue;
                }
                for a in 0..m {
                    for c in 0..m {
                        f[(k * m + a, l * m + c)] += w * inner[(a, c)];
                    }
                }
            }
        }
    }
    f
}

/// Curvature remainder: together with the information it reconstructs the
/// negative Hessian, `-d2 l = F_n + R_n`. Each observation contributes
/// `(x_i x_i^T) (x) diag((mu_i - t_i) o alpha_i)`, which has mean zero at
/// the true coefficients.
pub fn remainder<S: Scalar>(b: &ArrayView2<S>, data: &GlmData<S>) -> Array2<S> {
    let (alpha, _) = concentrations(data, b);
    let q = 3 * data.p() + 1;
    let m = data.p() + 1;
    let x = data.design().matrix();
    let mut r = Array2::zeros((q * m, q * m));
    let mut diag = vec![S::zero(); m];
    for i in 0..data.n() {
        let arow: Vec<S> = (0..m).map(|a| alpha[(i, a)]).collect();
        let mu = mean_log(&arow);
        for a in 0..m {
            diag[a] = (mu[a] - data.log_response[(i, a)]) * arow[a];
        }
        for k in 0..q {
            let xk = x[(i, k)];
            if xk == S::zero() {
                continue;
            }
            for l in 0..q {
                let w = xk * x[(i, l)];
                if w == S::zero() {
                    continue;
                }
                for a in 0..m {
                    r[(k * m + a, l * m + a)] += w * diag[a];
                }
            }
        }
    }
    r
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

fn extreme_fisher_eigs<S: Scalar>(f: &ArrayView2<S>, factor: &SpdFactor<S>) -> (S, S) {
    let dim = f.nrows();
    let mut v = Array1::from_elem(dim, S::one() / S::of((dim as f64).sqrt()));
    let mut lambda_max = S::zero();
    for _ in 0..80 {
        let w = f.dot(&v);
        let norm = w.iter().map(|&x| x * x).sum::<S>().sqrt();
        if norm == S::zero() {
            break;
        }
        lambda_max = norm;
        v = w.mapv(|x| x / norm);
    }
    let mut u = Array1::from_elem(dim, S::one() / S::of((dim as f64).sqrt()));
    let mut inv_norm = S::zero();
    for _ in 0..80 {
        let w = factor.solve_vec(&u.view());
        let norm = w.iter().map(|&x| x * x).sum::<S>().sqrt();
        if norm == S::zero() {
            break;
        }
        inv_norm = norm;
        u = w.mapv(|x| x / norm);
    }
    let lambda_min = if inv_norm > S::zero() { S::one() / inv_norm } else { S::zero() };
    (lambda_max, lambda_min)
}

fn finish_report<S: Scalar>(
    data: &GlmData<S>,
    bv: Array1<S>,
    loglik: S,
    iterations: usize,
    converged: bool,
    trace: Vec<S>,
    opts: &FitOptions<S>,
) -> Result<FitReport<S>> {
    let p = data.p();
    let b = data.bv_to_b(&bv.view());
    let (_, clamped) = concentrations(data, &b.view());
    let f = fisher_info(&b.view(), data);
    let factor = factor_spd_ridge(&f.view(), opts.ridge_eps)?;
    let (lambda_max, lambda_min) = extreme_fisher_eigs(&f.view(), &factor);

    let c = build_c::<S>(p);
    // beta_hat = (C^T C)^{-1} C^T bv.
    let ctc = c.t().dot(&c);
    let ctc_factor = factor_spd_ridge(&ctc.view(), S::of(1e-14))?;
    let beta_vec = ctc_factor.solve_vec(&c.t().dot(&bv).view());
    let beta_hat = BetaParams::new(beta_vec[0], beta_vec[1], beta_vec[2], beta_vec[3]);

    // cov_beta = (C^T C)^{-1} C^T F^{-1} C (C^T C)^{-1}.
    let finv_c = factor.solve_mat(&c.view());
    let middle = c.t().dot(&finv_c); // 4 x 4
    let tmp = ctc_factor.solve_mat(&middle.view());
    let cov_beta = ctc_factor.solve_mat(&tmp.t().to_owned().view());

    Ok(FitReport {
        bv_hat: bv,
        beta_hat,
        cov_beta,
        loglik,
        iterations,
        converged,
        condition: if lambda_min > S::zero() { lambda_max / lambda_min } else { S::infinity() },
        min_eigenvalue: lambda_min,
        ridge: factor.ridge,
        clamped,
        loglik_trace: trace,
    })
}

/// Maximizes the likelihood in the unconstrained vectorized coefficients
/// by Fisher scoring with step halving, then projects onto the structural
/// coefficients (the two-step estimate).
pub fn fit<S: Scalar>(data: &GlmData<S>, opts: &FitOptions<S>) -> Result<FitReport<S>> {
    if data.n() < opts.min_obs {
        return Err(CoreError::TooFewObservations {
            got: data.n(),
            min: opts.min_obs,
        });
    }
    let dim = data.dim();
    let mut bv = Array1::<S>::zeros(dim);
    let mut loglik = log_likelihood(&data.bv_to_b(&bv.view()).view(), data);
    if !loglik.is_finite() {
        return Err(CoreError::FitDiverged("non-finite likelihood at start".into()));
    }
    let mut trace = vec![loglik];
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let b = data.bv_to_b(&bv.view());
        let s = score(&b.view(), data);
        let f = fisher_info(&b.view(), data);
        let factor = factor_spd_ridge(&f.view(), opts.ridge_eps)?;
        let delta = factor.solve_vec(&s.view());
        let delta_max = delta.iter().map(|&v| v.abs()).fold(S::zero(), S::max);
        if delta_max <= opts.tol {
            converged = true;
            break;
        }
        let mut damp = S::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &bv + &delta.mapv(|v| v * damp);
            let lt = log_likelihood(&data.bv_to_b(&trial.view()).view(), data);
            if lt.is_finite() && lt > loglik {
                bv = trial;
                loglik = lt;
                trace.push(lt);
                accepted = true;
                break;
            }
            damp = damp * S::of(0.5);
        }
        if !accepted {
            // No damping improves the likelihood: at numerical optimum.
            converged = delta_max <= opts.tol * S::of(1e6);
            break;
        }
    }
    finish_report(data, bv, loglik, iterations, converged, trace, opts)
}

/// Constrained variant that iterates directly in the four structural
/// coefficients (score `C^T s_n`, information `C^T F_n C`). Serves as a
/// cross-check for the two-step estimate.
pub fn fit_beta_constrained<S: Scalar>(data: &GlmData<S>, opts: &FitOptions<S>) -> Result<FitReport<S>> {
    if data.n() < opts.min_obs {
        return Err(CoreError::TooFewObservations {
            got: data.n(),
            min: opts.min_obs,
        });
    }
    let p = data.p();
    let c = build_c::<S>(p);
    let mut beta = Array1::<S>::zeros(4);
    let bv_of = |beta: &Array1<S>| c.dot(beta);
    let mut loglik = log_likelihood(&data.bv_to_b(&bv_of(&beta).view()).view(), data);
    let mut trace = vec![loglik];
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let bv = bv_of(&beta);
        let b = data.bv_to_b(&bv.view());
        let s_full = score(&b.view(), data);
        let f_full = fisher_info(&b.view(), data);
        let s = c.t().dot(&s_full);
        let f = c.t().dot(&f_full).dot(&c);
        let factor = factor_spd_ridge(&f.view(), opts.ridge_eps)?;
        let delta = factor.solve_vec(&s.view());
        let delta_max = delta.iter().map(|&v| v.abs()).fold(S::zero(), S::max);
        if delta_max <= opts.tol {
            converged = true;
            break;
        }
        let mut damp = S::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &beta + &delta.mapv(|v| v * damp);
            let lt = log_likelihood(&data.bv_to_b(&bv_of(&trial).view()).view(), data);
            if lt.is_finite() && lt > loglik {
                beta = trial;
                loglik = lt;
                trace.push(lt);
                accepted = true;
                break;
            }
            damp = damp * S::of(0.5);
        }
        if !accepted {
            converged = delta_max <= opts.tol * S::of(1e6);
            break;
        }
    }

    let bv = bv_of(&beta);
    let b = data.bv_to_b(&bv.view());
    let (_, clamped) = concentrations(data, &b.view());
    let f_full = fisher_info(&b.view(), data);
    let f_beta = c.t().dot(&f_full).dot(&c);
    let factor = factor_spd_ridge(&f_beta.view(), opts.ridge_eps)?;
    let eye = Array2::<S>::eye(4);
    let cov_beta = factor.solve_mat(&eye.view());
    let full_factor = factor_spd_ridge(&f_full.view(), opts.ridge_eps)?;
    let (lambda_max, lambda_min) = extreme_fisher_eigs(&f_full.view(), &full_factor);
    Ok(FitReport {
        beta_hat: BetaParams::new(beta[0], beta[1], beta[2], beta[3]),
        bv_hat: bv,
        cov_beta,
        loglik,
        iterations,
        converged,
        condition: if lambda_min > S::zero() { lambda_max / lambda_min } else { S::infinity() },
        min_eigenvalue: lambda_min,
        ridge: factor.ridge,
        clamped,
        loglik_trace: trace,
    })
}

/// Square roots of the diagonal of the coefficient covariance. Errors when
/// the covariance is not positive semidefinite, which signals a
/// ridge-dominated fit.
pub fn theoretical_sd<S: Scalar>(report: &FitReport<S>) -> Result<Array1<S>> {
    let cov = &report.cov_beta;
    let mut sym = cov.clone();
    for i in 0..4 {
        for j in 0..4 {
            sym[(i, j)] = (cov[(i, j)] + cov[(j, i)]) * S::of(0.5);
        }
    }
    if (0..4).any(|i| sym[(i, i)] < S::zero()) {
        return Err(CoreError::CovarianceNotPsd);
    }
    // Allow a whisker of negative spectrum from rounding.
    let trace = (0..4).map(|i| sym[(i, i)]).sum::<S>();
    let mut shifted = sym.clone();
    let slack = trace.max(S::of(1e-300)) * S::of(1e-10);
    for i in 0..4 {
        shifted[(i, i)] += slack;
    }
    if crate::linalg::cholesky(&shifted.view()).is_none() {
        return Err(CoreError::CovarianceNotPsd);
    }
    Ok(Array1::from_iter((0..4).map(|i| sym[(i, i)].max(S::zero()).sqrt())))
}
