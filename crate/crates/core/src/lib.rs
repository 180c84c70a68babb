//! Numerical engine for the canonical Kähler metric of Hartogs domains
//! `{ |z0|^2 < phi(z) }`: curvature identities, Einstein and extremal
//! verdicts, and immersibility into complex space forms via the diastasis.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curvature;
pub mod diastasis;
pub mod error;
pub mod fixtures;
pub mod immersion;
pub mod linalg;
pub mod multi_index;
pub mod potentials;
pub mod special;
pub mod wirtinger;

pub use error::{Error, Result};
