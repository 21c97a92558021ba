//! Continuum two-type growth driven by a marked Poisson environment.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the experiments use.

pub mod compete;
pub mod crosscheck;
pub mod engine;
pub mod env;
pub mod error;
pub mod geom;
pub mod history;
pub mod oracle;
pub mod passage;
pub mod scalar;
pub mod stats;

pub use error::{GrowthError, Result};
pub use scalar::Real;

pub type Point64 = geom::Point<f64>;
pub type Ball64 = geom::Ball<f64>;
pub type AxisBox64 = geom::AxisBox<f64>;
pub type History64 = history::History<f64>;
pub type GrowthBall64 = history::GrowthBall<f64>;
pub type MarkedPoint64 = env::MarkedPoint<f64>;
pub type Budget64 = engine::Budget<f64>;
pub type RunOutput64 = engine::RunOutput<f64>;
pub type PassageResult64 = passage::PassageResult<f64>;
pub type Triple64 = passage::Triple<f64>;
pub type CompeteConfig64 = compete::CompeteConfig<f64>;
pub type CompeteOutcome64 = compete::CompeteOutcome<f64>;
pub type OracleConfig64 = oracle::OracleConfig<f64>;
