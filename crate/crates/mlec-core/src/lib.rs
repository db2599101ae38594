//! Multi-level coding toolkit.
//!
//! The crate models communication pipelines as chains of agents that encode
//! and decode symbol streams through one-hot transformation matrices. On top
//! of that discrete layer it provides:
//!
//! * [`codec`]: alphabets, word vectors, transformation matrices, exact and
//!   linear-programming decoding, exact rank analysis.
//! * [`geometry`]: finite Hamming-space geometry: code distance, valid-point
//!   density, and the exhaustive valid/correctable/ambiguous census.
//! * [`channel`]: seeded symbol-substitution noise and the oracle-backed
//!   detect/repair stages, parameterised by a detection-efficacy curve.
//! * [`energy`]: the two-level and multi-level error-correction energy
//!   models, their stationarity conditions, and a global 1-D allocator.
//! * [`pipeline`]: deterministic Monte-Carlo simulation of agent chains with
//!   per-level energy accounting, plus the codebook-mismatch experiment.
//! * [`continuous`]: path-integral relative entropy, mutual information, and
//!   the additivity identities for product densities.
//!
//! Analytic modules are generic over the scalar type through [`Real`]
//! (`f32` or `f64`); concrete `f64`/`f32` aliases live at the crate root.
//! The codec's rank and LP decoding use exact integer and rational
//! arithmetic instead of floats.

pub mod channel;
pub mod codec;
pub mod continuous;
pub mod energy;
pub mod geometry;
pub mod pipeline;
mod scalar;

pub use scalar::Real;

/// Detection-efficacy curve over `f64`.
pub type Efficacy64 = channel::EfficacyFamily<f64>;
/// Detection-efficacy curve over `f32`.
pub type Efficacy32 = channel::EfficacyFamily<f32>;
/// Two-level energy-model parameters over `f64`.
pub type EnergyParams64 = energy::EnergyParams<f64>;
/// Two-level energy-model parameters over `f32`.
pub type EnergyParams32 = energy::EnergyParams<f32>;
/// Downstream detection-cost coupling over `f64`.
pub type Coupling64 = energy::Coupling<f64>;
/// Energy-allocation result over `f64`.
pub type AllocationResult64 = energy::AllocationResult<f64>;
/// Phase-space trajectory over `f64`.
pub type Trajectory64 = continuous::Trajectory<f64>;
/// Probability-density field over `f64`.
pub type DensityField64 = continuous::DensityField<f64>;
