//! Secure rate-splitting ISAC beamforming: channel and sensing models,
//! convex surrogates, a conic modelling layer and the three design loops.

pub mod conic;
pub mod error;
pub mod experiment;
pub mod fim;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod sca;
pub mod scenario;
pub mod schemes;

extern crate openblas_src;

pub use error::{IsacError, Result};
pub use scenario::Scenario;
pub use schemes::{run_algorithm, Algorithm, AlgorithmConfig, RunResult, RunStatus, Scheme};
