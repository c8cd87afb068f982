//! Higher-order approximations to the distribution of p-values and corrected
//! p-values for asymptotically normal test statistics.
//!
//! The library covers four connected pieces:
//!
//! * theoretical CDF/PDF curves for one- and two-sided p-values of a
//!   standardized sample mean, including skewness/kurtosis correction terms
//!   and the jump corrections needed for lattice-valued statistics
//!   ([`edgeworth`]);
//! * saddlepoint tail probabilities and corrected p-values for sample means
//!   under exactly known families ([`saddlepoint`]);
//! * likelihood fitting (gamma with known shape, logistic, Weibull
//!   regression), score and Wald tests, and the modified likelihood root r*
//!   for models with nuisance parameters ([`models`], [`rstar`]);
//! * a seeded, worker-count-independent Monte Carlo harness that simulates
//!   each scenario, applies every requested method and summarizes the
//!   empirical p-value distribution ([`harness`]).
//!
//! The `pcalib` binary exposes the `predict`, `simulate`, `correct` and
//! `compare` subcommands on top of these modules; see the crate examples for
//! library-level entry points.

// `!(x > 0.0)`-style guards reject NaN, which `x <= 0.0` would let through;
// rational-approximation tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod cumulants;
pub mod edgeworth;
pub mod error;
pub mod exact;
pub mod harness;
pub mod models;
pub mod rstar;
pub mod saddlepoint;
pub mod specialfn;

pub use error::{Error, Result};
