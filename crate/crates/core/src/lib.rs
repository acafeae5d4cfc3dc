//! Systematic network coding over multi-hop erasure line networks.
//!
//! - [`gf`], [`codec`]: GF(2^q) arithmetic and the systematic encoder,
//!   Gaussian-elimination decoder and relay re-encoder.
//! - [`analytics`]: residual erasure, multi-hop reliability, achievable
//!   rates and rate-region grids.
//! - [`complexity`]: gate-count cost model per node role.
//! - [`optimizer`]: utility maximization over the block length, operative
//!   ranges, connectivity and reliability-gain sweeps.
//! - [`linkdb`]: geo-tagged link statistics and path extraction.
//! - [`lifecycle`]: the coding-function lifecycle state machine.
//! - [`oracle`]: packet-level Monte-Carlo validation of the analytics.
//! - [`cli`]: the `snc` command-line front end.

pub mod analytics;
pub mod cli;
pub mod codec;
pub mod complexity;
pub mod error;
pub mod gf;
pub mod lifecycle;
pub mod linkdb;
pub mod optimizer;
pub mod oracle;

pub use analytics::{PathProfile, RateRegionGrid, Scheme};
pub use codec::{CodeParams, Codec, DecodeResult, Generation, Packet};
pub use complexity::{ComplexityBudget, ComplexityReport, GateCosts, Role};
pub use error::{Error, Result};
