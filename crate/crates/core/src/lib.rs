//! Kernel discriminant analysis for two classes.
//!
//! Population discriminants for polynomial kernels are computed exactly from
//! class moments; the Gaussian kernel is handled through its truncated Hermite
//! expansion or through random Fourier features. Sample kernel discriminant
//! analysis works on kernel matrices, and [`dataprep`] holds the preprocessing
//! pipeline for the spambase e-mail data.

pub mod dataprep;
pub mod eigen;
pub mod error;
pub mod kernels;
pub mod moments;
pub mod multiindex;
pub mod par;
pub mod population;
pub mod rff;
pub mod sample;
pub mod scoring;

pub use error::{KdaError, Result};
pub use kernels::KernelSpec;
pub use moments::{ClassSpec, Distribution, TwoClassProblem};
pub use multiindex::{DegreeSpec, IndexSet, MultiIndex};
pub use par::Execution;
pub use population::{DiscriminantModel, Provenance};
pub use scoring::{Discriminant, GridSpec, ScoreGrid};
