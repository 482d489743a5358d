//! Deterministic simulator for personalized federated cross-modal hashing.
//!
//! Clients hold paired image/text features; each trains per-modality
//! hashing networks against binary codes, class codes, and (optionally)
//! global class prototypes, while per-client hypernetworks learn layer-wise
//! blending weights for the dispatched global parameters. Everything is
//! seeded and single-machine; "communication" is plain function calls that
//! only ever move parameters and prototypes, never samples.

pub mod config;
pub mod datamodel;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod fedprotocol;
pub mod hashopt;
pub mod modalitynets;
pub mod numkernel;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use fedprotocol::{derive_seed, Federation, Method};
pub use numkernel::DenseMatrix;
