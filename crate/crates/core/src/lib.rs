//! Two-user optical fiber interference channel with Kerr cross-phase
//! modulation and group-velocity-mismatch memory.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`]: physical fiber parameters and the derived channel coefficients.
//! - [`focusing`]: interference-focusing ring constellations and filter-bank
//!   frequency sets.
//! - [`dt_model`]: the closed-form discrete-time channel.
//! - [`ct_oracle`]: a continuous-time waveform simulation used to validate the
//!   discrete model.
//! - [`capacity`]: Monte-Carlo mutual information, SNR sweeps and pre-log fits.
//!
//! Units are abstract throughout: only the products that form the channel
//! coefficients matter.

// NaN-rejecting guards such as `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod ct_oracle;
pub mod dt_model;
mod error;
pub mod focusing;
pub mod params;
pub(crate) mod rng;

pub use error::{Error, Result};
pub use params::User;
