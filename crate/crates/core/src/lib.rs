//! On-line identification of the wind-turbine power-coefficient curve
//! `Cp(z) = c1 (z − c2) e^{−c3 z}` from rotor-speed measurements.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: the curve, the rotor torque, the z-dynamics and the
//!   parameter maps `c ↔ θ ↔ η`.
//! * [`plant`]: fixed-step simulation of the one-mass rotor model.
//! * [`regressor`]: filters and integrators producing the measurable pair
//!   `(y, φ)` with `y = φ G(θ)`.
//! * [`estimator`]: the interlaced least-squares + DREM estimator.
//! * [`pipeline`]: a complete run wiring the above on one shared step.
//! * [`oracles`]: independent reference computations used by the test suite
//!   and the `verify` command.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod oracles;
pub mod pipeline;
pub mod plant;
pub mod regressor;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CpParams64 = model::CpParams<f64>;
pub type ThetaParams64 = model::ThetaParams<f64>;
pub type EtaParams64 = model::EtaParams<f64>;
pub type PhysicalParams64 = model::PhysicalParams<f64>;
pub type HeierCoefficients64 = model::HeierCoefficients<f64>;
pub type PlantConfig64 = plant::PlantConfig<f64>;
pub type NoiseSpec64 = plant::NoiseSpec<f64>;
pub type WindProfile64 = plant::WindProfile<f64>;
pub type EstimatorGains64 = estimator::EstimatorGains<f64>;
pub type PipelineConfig64 = pipeline::PipelineConfig<f64>;
pub type RunOutput64 = pipeline::RunOutput<f64>;
