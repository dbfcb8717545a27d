//! Distributed gradient descent with compressed communication.
//!
//! This crate simulates synchronous distributed proximal gradient methods in
//! which every worker sends a compressed version of its local gradient
//! information to a server each round. Compressors are characterized by a
//! relative bias `eta`, a relative variance `omega`, and an average relative
//! variance `omega_av` describing how the variance behaves after the server
//! averages the messages of `n` workers. From those three numbers the
//! [`tuning`] module derives the scalings, step sizes, and guaranteed linear
//! rates of the EF-BV method and of its EF21 (`nu = lambda`) and DIANA
//! (`nu = 1`) specializations.
//!
//! The crate is organized as:
//!
//! * [`compressors`] - the compression operators and their closed-form class
//!   parameters,
//! * [`tuning`] - scalings, residual factors, step-size bounds and rates,
//! * [`problems`] - regularized logistic regression objectives, LibSVM
//!   parsing, data partitioning and synthetic data,
//! * [`engine`] - the synchronous round loop with per-round metrics,
//! * [`certifier`] - Monte Carlo and exhaustive-enumeration oracles used to
//!   certify the closed-form parameters and reference solutions,
//! * [`rng`] - counter-based deterministic random streams keyed by
//!   `(master seed, worker, round)` so that runs are exactly reproducible.

pub mod certifier;
pub mod compressors;
pub mod engine;
pub mod error;
pub mod problems;
pub mod rng;
pub mod tuning;
pub mod vector;

pub use certifier::{EstimateReport, ExactMoments, OmegaAvEstimate, Reference};
pub use compressors::{ClassParams, CompressorSpec, Dependence, Family, NiceSubset, SparseMessage};
pub use engine::{AlgoChoice, EngineState, HInit, RoundRecord, RunConfig, RunOutput};
pub use error::{Error, Result};
pub use problems::{Dataset, LtildeConvention, ProblemSpec, Prox, Shard};
pub use rng::DetRng;
pub use tuning::{Algorithm, Mode, SmoothnessProfile, TuneResult};
pub use vector::DenseVector;
