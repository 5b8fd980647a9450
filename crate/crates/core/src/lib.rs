//! Simulation and inference for attractor-driven coevolving random dot
//! product graphs.
//!
//! A trajectory consists of latent positions in the scaled simplex together
//! with graphs whose edges are Bernoulli in the pairwise dot products of the
//! latent rows. Between steps, every node's position is resampled from a
//! Dirichlet distribution whose log-concentration is a linear function of
//! the node's current position and of two *attractors*: the mean positions
//! of its within-group and between-group neighbours. The sign of the
//! between-group coefficient decides whether the groups flock together or
//! polarize apart.
//!
//! The crate is organised around that generative story:
//!
//! - [`model`] holds the deterministic algebra: attractor computation, the
//!   star lift onto the unit-sum simplex, design-matrix assembly and the
//!   lifts between the four regression coefficients and their matrix form;
//! - [`sim`] generates trajectories;
//! - [`embed`] recovers latent positions from adjacency matrices (spectral
//!   embedding, penalised gradient embedding, penalty-minimising orthogonal
//!   alignment, Procrustes, simplex-interior projection);
//! - [`glm`] fits the Dirichlet generalized linear model with a log link by
//!   Fisher scoring and reports asymptotic covariances;
//! - [`linalg`] and [`special`] carry the supporting numerics.
//!
//! Everything numeric is generic over the floating scalar through
//! [`Scalar`]; double-precision aliases for the main types live at the
//! crate root.

pub mod embed;
pub mod error;
pub mod glm;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod special;
pub mod stats;

pub use error::CoreError;

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating scalar used throughout the crate.
///
/// Implemented by `f32` and `f64`; the trait only collects the standard
/// numeric bounds plus a shorthand for lossy constants.
pub trait Scalar:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Lossy view of the scalar as `f64` (used for diagnostics).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssignOps
        + FromPrimitive
        + ToPrimitive
        + Sum<T>
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Result alias for fallible core operations.
pub type Result<T> = std::result::Result<T, CoreError>;

// Double-precision aliases. The generic types live in their modules; these
// are what the pipeline and most tests use.
pub type LatentState = model::LatentState<f64>;
pub type StarLatentState = model::StarLatentState<f64>;
pub type Graph = model::Graph;
pub type GroupAssignment = model::GroupAssignment;
pub type BetaParams = model::BetaParams<f64>;
pub type DesignMatrix = model::DesignMatrix<f64>;
pub type LiftedParams = model::LiftedParams<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type InitSpec = sim::InitSpec<f64>;
pub type Trajectory = sim::Trajectory<f64>;
pub type EmbedOptions = embed::EmbedOptions<f64>;
pub type AlignmentResult = embed::AlignmentResult<f64>;
pub type GlmData = glm::GlmData<f64>;
pub type FitReport = glm::FitReport<f64>;
pub type FitOptions = glm::FitOptions<f64>;
