//! Point-process diffraction workbench core.
//!
//! Everything in this crate is pure computation over `alloc` collections:
//! random point sets and random measures are sampled from caller-supplied
//! RNG streams, their closed-form autocorrelation and diffraction measures
//! are built as [`SpectralModel`]s, and estimators turn finite realisations
//! back into empirical spectra that can be compared against the models.
//!
//! File formats, configuration, parallel execution and the command line
//! live in the companion `diffract-cli` crate.

#![cfg_attr(not(test), no_std)]
// `num_traits::Float` supplies the float methods under `no_std`; it is
// shadowed by the inherent ones whenever `std` is in the crate graph, so
// each of its imports carries `allow(unused_imports)`.
// `!(x > 0.0)` is the NaN-rejecting form used for parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod branching;
pub mod charfun;
pub mod clusters;
mod error;
pub mod measures;
pub mod processes;
pub mod renewal;
pub mod rng;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use measures::{
    AveragingWindow, FiniteCluster, PurePoint, SingularSet, SpectralModel, SpectralValue,
    WeightedPointSet, WindowKind,
};
pub use num_complex::Complex64;
