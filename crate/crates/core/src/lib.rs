//! Authenticated secret-shared arithmetic over Z_{2^k} with compact MAC tags
//! for matrix multiplication.
//!
//! The crate simulates n parties in one process: a trusted dealer produces
//! preprocessing material, a [`protocol::Session`] runs the online phase
//! over a logged broadcast [`transport::Network`], and [`metrics`] counts
//! local multiplications and broadcast traffic per step.

pub mod attack;
pub mod cli;
pub mod dealer;
pub mod error;
pub mod metrics;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod protocol;
pub mod ring;
pub mod shapes;
pub mod sharing;
pub mod transport;

pub use error::{AbortKind, Error, Result};
pub use ring::{RElem, RMatrix, RingParams};
