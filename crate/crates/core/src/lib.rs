//! Classical and quantum Cramér-Rao and Bhattacharyya bounds for finite-outcome
//! parametric models.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: probability families over a finite support and the derivative
//!   tables ([`DerivativeStack`]) every classical computation consumes.
//! - [`classical`]: Fisher information, Cramér-Rao and order-n Bhattacharyya
//!   bounds, saturating estimators and the estimator-existence system.
//! - [`quantum`]: symmetric logarithmic derivatives, quantum Fisher information,
//!   the Q matrix, quantum Bhattacharyya bounds and Hermitian estimators.
//! - [`scenarios`]: the Mach-Zehnder twin-Fock model, the qubit θ²-rotation
//!   family and a small synthetic corpus.
//! - [`evaluation`]: bias/variance/MSE of estimators across parameter grids.
//! - [`formats`]: the plain-text model and density-stack file formats.
//!
//! Divergent bounds are a status ([`BoundStatus::Divergent`]), not an error.

pub mod classical;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod linalg;
pub mod model;
pub mod quantum;
pub mod scenarios;

pub use classical::{BhattMatrix, BoundReport, BoundStatus, EstimatorTable};
pub use error::{Error, Result};
pub use model::{DerivativeOptions, DerivativeStack, DiscreteModel, Domain};
pub use quantum::{DensityStack, HermitianEstimator, QMatrix};

/// Default threshold below which singular values count as zero, relative to
/// the largest singular value. Shared by every rank decision in the crate.
pub const DEFAULT_TOL_RANK: f64 = 1e-10;

/// Default probability cutoff defining the kept support.
pub const DEFAULT_P_MIN: f64 = 1e-14;

/// Default eigenvalue-sum cutoff for SLD construction.
pub const DEFAULT_TOL_EIG: f64 = 1e-12;
