//! Higher Criticism threshold feature selection for two-class linear
//! classification under the rare/weak feature model.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: Gaussian primitives, folded mixtures, threshold
//!   nonlinearities and their Gaussian moments.
//! - [`hc`]: the Higher Criticism objective, the empirical HC threshold and
//!   the ideal HC threshold functional.
//! - [`ideal`]: proxy separation / error / FDR / local FDR, the ideal,
//!   FDR and Bonferroni thresholds and the tangent-secant identity.
//! - [`phase`]: the asymptotic phase-diagram calculus in the `(beta, r)` plane.
//! - [`rwsim`]: a seeded Monte Carlo simulator of the rare/weak model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod hc;
pub mod ideal;
mod optimize;
pub mod phase;
pub mod rwsim;

pub use distributions::{ArwParams, FoldedMixture, RwParams, ThresholdKind};
pub use error::{Error, Result};
pub use hc::HcScanResult;
pub use ideal::IdealSummary;
pub use phase::{PhasePoint, Region};
pub use rwsim::{SimConfig, SimOutcome};
