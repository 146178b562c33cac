//! Maximum entropy snapshot sampling (MESS).
//!
//! Given a stream of snapshots of a dynamical system, MESS keeps only those
//! that raise the Frobenius entropy of the sample, i.e. those that are at
//! least `eps` away from everything kept so far. Orthonormalizing the kept
//! snapshots yields a reduced basis whose back-projection error is below
//! `eps` for *every* snapshot of the stream.
//!
//! ```
//! use mess::{mess_sample, orthonormalize, reconstruction_errors, EpsilonRule, StopConfig};
//! use mess::datagen::gen_random_walk;
//!
//! let x = gen_random_walk(40, 120, 1.0, 7)?;
//! let sample = mess_sample(&x, EpsilonRule::RelativeToDiameter(0.1), StopConfig::default())?;
//! let basis = orthonormalize(&x.select_columns(&sample.selected)?, 1e-12)?;
//! let errors = reconstruction_errors(&x, &basis, sample.epsilon_abs)?;
//! assert!(errors.max_abs < sample.epsilon_abs);
//! # Ok::<(), mess::MessError>(())
//! ```
//!
//! The crate also provides a truncated SVD baseline ([`pod`]), snapshot
//! generators ([`datagen`]) and file formats ([`matio`], [`report`]).

pub mod basis;
pub mod datagen;
pub mod error;
pub mod matio;
pub mod matrix;
pub mod metrics;
pub mod pod;
pub mod report;
pub mod sampler;

pub use basis::{
    orthonormalize, project, reconstruct, reconstruction_errors, reconstruction_errors_scaled,
    ErrorReport, ErrorScale, Provenance, ReducedBasis, DEFAULT_RANK_TOL,
};
pub use error::{MessError, Result};
pub use matrix::{euclidean_distance, SnapshotMatrix};
pub use metrics::{
    diameter, entropy_trace, pairwise_distances, recurrence_matrix, DistanceMatrix, EntropyTrace,
    RecurrenceMatrix,
};
pub use pod::{pod_basis, svd, truncate_energy, PodTarget, SvdFactors};
pub use sampler::{
    detect_plateau, horizon_bound, mess_sample, mess_sample_streaming, verify_max_entropy,
    EpsilonRule, Horizon, HorizonEstimate, PlateauCriterion, SampleResult, StopConfig,
    StreamingSampler,
};

// Runs the code listings of the guide as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/bases.md")]
    mod bases {}
    #[doc = include_str!("../../../book/src/pod.md")]
    mod pod {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/files.md")]
    mod files {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
