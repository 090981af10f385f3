//! Q-operators, transfer operators and functional relations for the quantum
//! loop algebra of `sl_{l+1}`, realized numerically on small spin chains.

pub mod bethe;
pub mod borelhoms;
pub mod error;
pub mod funcrel;
pub mod fundrep;
pub mod linalg;
pub mod lop;
pub mod lweight;
pub mod oscalg;
pub mod qnum;
pub mod qop;
pub mod rootdata;

pub use error::{Error, Result};

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
