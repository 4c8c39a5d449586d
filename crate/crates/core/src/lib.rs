//! Exact, Monte Carlo and closed-form analysis of the l-th DFT coefficient
//! of a Bernoulli(m/N) sampling mask,
//!
//! ```text
//! X = Σ_{n ∈ Σ} exp(−2πj·n·l/N),   P(n ∈ Σ) = m/N independently,
//! ```
//!
//! with real part `U` and imaginary part `V`.
//!
//! * [`model`]: parameters, atoms, mask evaluation and sampling.
//! * [`oracle`]: exact law by enumerating all 2^N masks.
//! * [`montecarlo`]: seeded parallel estimation with confidence intervals.
//! * [`bounds`]: variance identities, tail bounds, ψ₂ bounds, Q-function.
//! * [`verify`], [`config`], [`report`]: the verification suites and the
//!   artifacts written by the `spectral-mask` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN lands on the error path
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod report;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ComplexValue, ModelParams, Part, SupportMask};
pub use montecarlo::{Accumulator, EstimateWithCI, McConfig, McQueries};
pub use oracle::{ExactDistribution, Oracle, Psi2Estimate};
