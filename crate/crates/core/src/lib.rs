//! Engineered Carmichael numbers that resist Miller-Rabin, and measurement
//! of how far the strong Lucas test's `U_d` residue falls below `n`.
//!
//! Modules, bottom up:
//! - [`ntkernel`]: modular arithmetic, Jacobi symbols, Miller-Rabin, Lucas
//!   sequences and Selfridge parameter selection.
//! - [`forge`]: the `p1 (k (p1 - 1) + 1) (M (p1 - 1) + 1)` construction and
//!   the parameter sweep.
//! - [`lucasprobe`]: the strong Lucas test and the collapse measurement.
//! - [`analyzer`]: statistics and the report writer.
//! - [`dataset`]: JSON persistence.
//! - [`oracle`] and [`verify`]: slow reference code and the suites that
//!   compare against it.

pub mod analyzer;
pub mod dataset;
pub mod error;
pub mod forge;
pub mod lucasprobe;
pub mod ntkernel;
pub mod oracle;
pub mod parallel;
pub mod verify;

pub use error::{Error, Result};
pub use forge::{CompositeRecord, ForgeMode, SweepConfig};
pub use lucasprobe::CollapseMeasurement;
pub use parallel::Strategy;
