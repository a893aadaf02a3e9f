//! Deterministic desk-scale simulator of federated training for a binary
//! intrusion-detection classifier, with differentially private local updates,
//! contract-style update validation, reputation-weighted aggregation, majority
//! consensus, and a hash-chained permissioned ledger.
//!
//! The numeric core (`numerics`, `model`, `aggregation`, `transport`, `data`)
//! is generic over the scalar type via [`Scalar`]; the orchestration layers
//! (`contract`, `ledger`, `consensus`, `driver`) run on the concrete `f64`
//! aliases exported at the crate root. All randomness flows through seeded
//! per-purpose streams, so every simulation is bit-reproducible for a given
//! configuration and seed.

pub mod aggregation;
pub mod codec;
pub mod config;
pub mod consensus;
pub mod contract;
pub mod data;
pub mod driver;
pub mod error;
pub mod ledger;
pub mod model;
pub mod numerics;
pub mod report;
pub mod transport;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the numeric core is generic over.
///
/// `Float` brings the usual arithmetic, comparisons, and `NumCast`;
/// `FromPrimitive` covers lossless-enough conversions from counts and
/// configuration values. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
    /// Widens to `f64` for accounting, thresholds, and canonical encoding.
    fn as_f64(self) -> f64;
    /// Narrows from `f64`; exact for `f64`, round-to-nearest for `f32`.
    fn from_f64_lossy(value: f64) -> Self;
}

impl Scalar for f32 {
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn from_f64_lossy(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    fn as_f64(self) -> f64 {
        self
    }
    fn from_f64_lossy(value: f64) -> Self {
        value
    }
}

/// Scalar the shipped simulator runs on. Model math, divergence thresholds,
/// and ledger encodings all use 64-bit reals; 32-bit floats appear only in
/// the transport wire format.
pub type Real = f64;

/// Concrete vector type used by the orchestration layers.
pub type RealVec = numerics::RealVector<Real>;

/// Concrete model weights used by the orchestration layers.
pub type Weights = model::ModelWeights<Real>;

/// Concrete dataset type used by the orchestration layers.
pub type Dataset = data::LabeledDataset<Real>;

/// Concrete local update exchanged between nodes and the aggregator.
pub type Update = model::LocalUpdate<Real>;

pub use error::{Error, Result};
