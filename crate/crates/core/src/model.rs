//! Domain types and the deterministic model algebra.
//!
//! Latent positions live in the scaled simplex: every row has nonnegative
//! entries summing to at most one. The *star lift* appends the complement
//! coordinate so a row becomes a full Dirichlet-support vector with unit
//! sum. Each node carries a group label; its *within* attractor is the mean
//! latent position of its same-group neighbours, the *between* attractor
//! the mean over neighbours from other groups. Stacking positions,
//! attractors and an intercept column gives the design matrix `X`, and the
//! four coefficients lift to a matrix `B` such that `exp(X B)` is the
//! Dirichlet concentration of the next step.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::linalg::{eigen::SymOp, vec_rows};
use crate::{CoreError, Result, Scalar};

/// Clamp for log-concentrations before exponentiation, chosen to stay
/// inside double range while making saturation observable.
pub const LOG_ALPHA_CLAMP: f64 = 700.0;

/// Tolerance for simplex membership checks on model inputs.
pub const SIMPLEX_TOL: f64 = 1e-9;

fn star_tol<S: Scalar>(p: usize) -> S {
    S::of(1e-12).max(S::epsilon() * S::of(32.0 * (p as f64 + 1.0)))
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// An `n x p` matrix of latent coordinates. Model-generated states satisfy
/// the simplex constraints row-wise; estimated states may not, which is why
/// this type validates shape only and exposes [`LatentState::rows_in_simplex`].
#[derive(Debug, Clone)]
pub struct LatentState<S> {
    z: Array2<S>,
}

impl<S: Scalar> LatentState<S> {
    pub fn new(z: Array2<S>) -> Self {
        Self { z }
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn matrix(&self) -> ArrayView2<'_, S> {
        self.z.view()
    }

    pub fn into_matrix(self) -> Array2<S> {
        self.z
    }

    /// True when every row lies in the scaled simplex within `tol`.
    pub fn rows_in_simplex(&self, tol: S) -> bool {
        self.z.rows().into_iter().all(|row| {
            let min = row.iter().cloned().fold(S::infinity(), S::min);
            let sum = row.iter().cloned().sum::<S>();
            min >= -tol && sum <= S::one() + tol
        })
    }
}

/// An `n x (p+1)` matrix whose rows are star-lifted latent positions:
/// entries in [0, 1], unit row sums.
#[derive(Debug, Clone)]
pub struct StarLatentState<S> {
    z: Array2<S>,
}

impl<S: Scalar> StarLatentState<S> {
    pub fn try_new(z: Array2<S>) -> Result<Self> {
        let p = z.ncols().saturating_sub(1);
        let tol = star_tol::<S>(p);
        for (i, row) in z.rows().into_iter().enumerate() {
            let sum = row.iter().cloned().sum::<S>();
            let min = row.iter().cloned().fold(S::infinity(), S::min);
            let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
            if (sum - S::one()).abs() > tol || min < -tol || max > S::one() + tol {
                return Err(CoreError::OutOfSimplex {
                    row: i,
                    sum: sum.as_f64(),
                    min: min.as_f64(),
                });
            }
        }
        Ok(Self { z })
    }

    /// Star-lifts every row of a latent state.
    pub fn from_latent(state: &LatentState<S>) -> Result<Self> {
        let lifted = star_lift_rows(&state.matrix())?;
        Ok(Self { z: lifted })
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// Dimension of the underlying latent space (columns minus one).
    pub fn p(&self) -> usize {
        self.z.ncols() - 1
    }

    pub fn matrix(&self) -> ArrayView2<'_, S> {
        self.z.view()
    }

    /// The first `p` coordinates of every row.
    pub fn latent_part(&self) -> LatentState<S> {
        let p = self.p();
        LatentState::new(self.z.slice(ndarray::s![.., ..p]).to_owned())
    }
}

/// Symmetric hollow binary adjacency matrix.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Array2<u8>,
}

impl Graph {
    pub fn try_from_dense(adj: Array2<u8>) -> Result<Self> {
        let n = adj.nrows();
        if adj.ncols() != n {
            return Err(CoreError::InvalidGraph(format!(
                "adjacency must be square, got {} x {}",
                n,
                adj.ncols()
            )));
        }
        for i in 0..n {
            if adj[(i, i)] != 0 {
                return Err(CoreError::InvalidGraph(format!("diagonal entry {i} is not zero")));
            }
            for j in (i + 1)..n {
                let a = adj[(i, j)];
                if a > 1 || adj[(j, i)] > 1 {
                    return Err(CoreError::InvalidGraph("entries must be 0 or 1".into()));
                }
                if a != adj[(j, i)] {
                    return Err(CoreError::InvalidGraph(format!(
                        "asymmetry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { adj })
    }

    /// Builds a simple graph from an undirected edge list; duplicate edges
    /// collapse, self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = Array2::<u8>::zeros((n, n));
        for &(a, b) in edges {
            if a == b {
                return Err(CoreError::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(CoreError::InvalidGraph(format!(
                    "edge ({a}, {b}) outside node range 0..{n}"
                )));
            }
            adj[(a, b)] = 1;
            adj[(b, a)] = 1;
        }
        Ok(Self { adj })
    }

    pub fn empty(n: usize) -> Self {
        Self { adj: Array2::zeros((n, n)) }
    }

    /// For construction sites that guarantee symmetry and hollowness.
    pub(crate) fn from_dense_unchecked(adj: Array2<u8>) -> Self {
        debug_assert!(Self::try_from_dense(adj.clone()).is_ok());
        Self { adj }
    }

    pub fn n(&self) -> usize {
        self.adj.nrows()
    }

    pub fn adj(&self) -> ArrayView2<'_, u8> {
        self.adj.view()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[(i, j)] != 0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj.row(i).iter().filter(|&&a| a != 0).count()
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                count += usize::from(self.adj[(i, j)] != 0);
            }
        }
        count
    }

    /// Edges as (i, j) with i < j, row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adj[(i, j)] != 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Subgraph on `nodes`, re-indexed in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let m = nodes.len();
        let mut adj = Array2::<u8>::zeros((m, m));
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                if a != b {
                    adj[(a, b)] = self.adj[(i, j)];
                }
            }
        }
        Graph { adj }
    }

    pub fn to_dense<S: Scalar>(&self) -> Array2<S> {
        self.adj.mapv(|a| if a != 0 { S::one() } else { S::zero() })
    }
}

impl<S: Scalar> SymOp<S> for Graph {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &ArrayView1<S>, y: &mut Array1<S>) {
        let xs = x.as_slice().expect("contiguous vector");
        for (i, row) in self.adj.rows().into_iter().enumerate() {
            let mut acc = S::zero();
            let rs = row.to_slice().expect("contiguous adjacency row");
            for (a, &xv) in rs.iter().zip(xs.iter()) {
                if *a != 0 {
                    acc += xv;
                }
            }
            y[i] = acc;
        }
    }

    fn norm_bound(&self) -> S {
        let max_deg = (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0);
        S::of(max_deg as f64)
    }
}

/// Node-to-group map. Labels are dense indices `0..k`.
#[derive(Debug, Clone)]
pub struct GroupAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl GroupAssignment {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(CoreError::InvalidGroups("no nodes".into()));
        }
        let k = labels.iter().max().unwrap() + 1;
        Ok(Self { labels, k })
    }

    pub fn with_k(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(CoreError::InvalidGroups("no nodes".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(CoreError::InvalidGroups(format!("label {bad} >= k = {k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn same_group(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Number of distinct labels actually present.
    pub fn occupied_groups(&self) -> usize {
        let mut seen = vec![false; self.k];
        for &l in &self.labels {
            seen[l] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// The four regression coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams<S> {
    /// Weight on the node's own position.
    pub own: S,
    /// Weight on the within-group attractor.
    pub within: S,
    /// Weight on the between-group attractor; its sign separates flocking
    /// (positive) from polarizing (negative) dynamics.
    pub between: S,
    /// Intercept; acts as a variance nuisance parameter.
    pub intercept: S,
}

impl<S: Scalar> BetaParams<S> {
    pub fn new(own: S, within: S, between: S, intercept: S) -> Self {
        Self { own, within, between, intercept }
    }

    pub fn from_array(a: [S; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [S; 4] {
        [self.own, self.within, self.between, self.intercept]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Design matrix `X = [Z | A_w | A_b | 1]`, one row per node.
#[derive(Debug, Clone)]
pub struct DesignMatrix<S> {
    x: Array2<S>,
    p: usize,
}

impl<S: Scalar> DesignMatrix<S> {
    pub fn try_new(x: Array2<S>, p: usize) -> Result<Self> {
        if x.ncols() != 3 * p + 1 {
            return Err(CoreError::ShapeMismatch {
                context: "design matrix",
                detail: format!("expected {} columns for p = {p}, got {}", 3 * p + 1, x.ncols()),
            });
        }
        let last = x.column(3 * p);
        if last.iter().any(|&v| v != S::one()) {
            return Err(CoreError::ShapeMismatch {
                context: "design matrix",
                detail: "last column must be identically one".into(),
            });
        }
        Ok(Self { x, p })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn matrix(&self) -> ArrayView2<'_, S> {
        self.x.view()
    }
}

/// The coefficient matrix `B`, its row-major vectorization and the
/// constraint matrix `C` with `vec(B) = C beta`.
#[derive(Debug, Clone)]
pub struct LiftedParams<S> {
    pub b: Array2<S>,
    pub bv: Array1<S>,
    pub c: Array2<S>,
}

impl<S: Scalar> LiftedParams<S> {
    pub fn new(beta: BetaParams<S>, p: usize) -> Self {
        let b = build_b(beta, p);
        let bv = vec_rows(&b.view());
        let c = build_c(p);
        Self { b, bv, c }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Appends the complement coordinate `1 - sum(z)` so the row gains unit
/// sum. Rows outside the scaled simplex beyond tolerance are rejected:
/// they must be projected first.
pub fn lift_to_star<S: Scalar>(z: &ArrayView1<S>) -> Result<Array1<S>> {
    let tol = S::of(SIMPLEX_TOL);
    let sum = z.iter().cloned().sum::<S>();
    let min = z.iter().cloned().fold(S::infinity(), S::min);
    if min < -tol || sum > S::one() + tol || !sum.is_finite() {
        return Err(CoreError::OutOfSimplex {
            row: 0,
            sum: sum.as_f64(),
            min: min.as_f64(),
        });
    }
    let p = z.len();
    let mut out = Array1::zeros(p + 1);
    for j in 0..p {
        out[j] = z[j].max(S::zero());
    }
    out[p] = (S::one() - sum).max(S::zero());
    // Exact unit sum up to rounding of the division.
    let total = out.iter().cloned().sum::<S>();
    if total > S::zero() {
        out.mapv_inplace(|v| v / total);
    } else {
        out[p] = S::one();
    }
    Ok(out)
}

/// Star-lifts every row of an `n x p` matrix into an `n x (p+1)` matrix.
pub fn star_lift_rows<S: Scalar>(z: &ArrayView2<S>) -> Result<Array2<S>> {
    let (n, p) = z.dim();
    let mut out = Array2::zeros((n, p + 1));
    for (i, row) in z.rows().into_iter().enumerate() {
        let lifted = lift_to_star(&row).map_err(|e| match e {
            CoreError::OutOfSimplex { sum, min, .. } => CoreError::OutOfSimplex { row: i, sum, min },
            other => other,
        })?;
        out.row_mut(i).assign(&lifted);
    }
    Ok(out)
}

/// Within- and between-group attractors.
///
/// Row `i` of the first output is the average latent position of `i`'s
/// neighbours sharing its group; the second averages over neighbours from
/// all other groups. A node with no qualifying neighbours gets the zero
/// row, which star-lifts to the last vertex of the simplex.
pub fn compute_attractors<S: Scalar>(
    z: &ArrayView2<S>,
    y: &Graph,
    groups: &GroupAssignment,
) -> Result<(Array2<S>, Array2<S>)> {
    let (n, p) = z.dim();
    if y.n() != n || groups.n() != n {
        return Err(CoreError::ShapeMismatch {
            context: "compute_attractors",
            detail: format!(
                "latent rows {n}, graph nodes {}, labels {}",
                y.n(),
                groups.n()
            ),
        });
    }
    let mut aw = Array2::zeros((n, p));
    let mut ab = Array2::zeros((n, p));
    let adj = y.adj();
    for i in 0..n {
        let gi = groups.label(i);
        let mut within_count = S::zero();
        let mut between_count = S::zero();
        let mut within_sum = vec![S::zero(); p];
        let mut between_sum = vec![S::zero(); p];
        let row = adj.row(i);
        for j in 0..n {
            if row[j] == 0 {
                continue;
            }
            let zj = z.row(j);
            if groups.label(j) == gi {
                within_count += S::one();
                for (acc, &v) in within_sum.iter_mut().zip(zj.iter()) {
                    *acc += v;
                }
            } else {
                between_count += S::one();
                for (acc, &v) in between_sum.iter_mut().zip(zj.iter()) {
                    *acc += v;
                }
            }
        }
        if within_count > S::zero() {
            for (col, val) in within_sum.into_iter().enumerate() {
                aw[(i, col)] = val / within_count;
            }
        }
        if between_count > S::zero() {
            for (col, val) in between_sum.into_iter().enumerate() {
                ab[(i, col)] = val / between_count;
            }
        }
    }
    Ok((aw, ab))
}

/// Assembles `X = [Z | A_w | A_b | 1]`.
pub fn build_design_matrix<S: Scalar>(
    z: &ArrayView2<S>,
    aw: &ArrayView2<S>,
    ab: &ArrayView2<S>,
) -> Result<DesignMatrix<S>> {
    let (n, p) = z.dim();
    if aw.dim() != (n, p) || ab.dim() != (n, p) {
        return Err(CoreError::ShapeMismatch {
            context: "build_design_matrix",
            detail: format!("Z is {n} x {p}, attractors are {:?} and {:?}", aw.dim(), ab.dim()),
        });
    }
    let mut x = Array2::zeros((n, 3 * p + 1));
    x.slice_mut(ndarray::s![.., 0..p]).assign(z);
    x.slice_mut(ndarray::s![.., p..2 * p]).assign(aw);
    x.slice_mut(ndarray::s![.., 2 * p..3 * p]).assign(ab);
    x.column_mut(3 * p).fill(S::one());
    DesignMatrix::try_new(x, p)
}

/// The coefficient lift: a `(3p+1) x (p+1)` matrix such that for a design
/// row with star-lifted blocks, `x^T B` reproduces the log-concentration
/// `beta_1 z* + beta_2 a_w* + beta_3 a_b* + beta_4` coordinate-wise.
///
/// Column `j <= p` carries (own, within, between) on the j-th coordinate of
/// each block plus the intercept; the last column carries their negatives
/// plus the total `own + within + between + intercept`, which is what the
/// complement coordinate of each star lift contributes.
pub fn build_b<S: Scalar>(beta: BetaParams<S>, p: usize) -> Array2<S> {
    assert!(p >= 1, "latent dimension must be at least 1");
    let mut b = Array2::zeros((3 * p + 1, p + 1));
    let weights = [beta.own, beta.within, beta.between];
    for j in 0..p {
        for (block, &w) in weights.iter().enumerate() {
            b[(block * p + j, j)] = w;
        }
        b[(3 * p, j)] = beta.intercept;
    }
    for (block, &w) in weights.iter().enumerate() {
        for j in 0..p {
            b[(block * p + j, p)] = -w;
        }
    }
    b[(3 * p, p)] = beta.own + beta.within + beta.between + beta.intercept;
    b
}

/// Constraint matrix `C` with `vec(B) = C beta` exactly (row-major vec).
/// Built operationally from [`build_b`] on the four unit coefficients, so
/// the identity holds by construction.
pub fn build_c<S: Scalar>(p: usize) -> Array2<S> {
    let rows = (3 * p + 1) * (p + 1);
    let mut c = Array2::zeros((rows, 4));
    for k in 0..4 {
        let mut unit = [S::zero(); 4];
        unit[k] = S::one();
        let b = build_b(BetaParams::from_array(unit), p);
        c.column_mut(k).assign(&vec_rows(&b.view()));
    }
    c
}

/// Element-wise `exp(X B)` with the log-concentrations clamped to
/// `[-700, 700]`; returns the concentration matrix and how many entries
/// were clamped.
pub fn alpha_update<S: Scalar>(x: &DesignMatrix<S>, b: &ArrayView2<S>) -> (Array2<S>, usize) {
    let clamp = S::of(LOG_ALPHA_CLAMP);
    let mut log_alpha = x.matrix().dot(b);
    let mut clamped = 0usize;
    log_alpha.mapv_inplace(|v| {
        if v > clamp {
            clamped += 1;
            clamp
        } else if v < -clamp {
            clamped += 1;
            -clamp
        } else {
            v
        }
    });
    (log_alpha.mapv(|v| v.exp()), clamped)
}
