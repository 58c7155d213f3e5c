//! Two-stage keyjoint diffusion for controllable motion synthesis.
//!
//! Stage 1 denoises low-dimensional keyjoint trajectories under sparse
//! explicit control (imputation) or implicit differentiable objectives
//! (latent-noise optimization). Stage 2 completes natural full-body motion
//! from the dense keyjoint trajectories. Everything runs on procedurally
//! generated motion data and plain CPU math.
//!
//! The numeric core is generic over the scalar type ([`num::Real`], `f32` or
//! `f64`); the aliases below fix the default precision used by the pipeline:
//! `f64` for geometry, data, and metrics, `f32` for denoiser training and
//! sampling.

pub mod codec;
pub mod data;
pub mod diffusion;
pub mod error;
pub mod implicit;
pub mod metrics;
pub mod motion;
pub mod nn;
pub mod num;
pub mod stages;
pub mod vec3;

pub use error::{Error, Result};

/// Default scalar for geometry, datasets, and metrics.
pub type Geom = f64;
/// Default scalar for denoiser training and sampling.
pub type Net = f32;

pub type Skeleton = motion::Skeleton<Geom>;
pub type PoseFrame = motion::PoseFrame<Geom>;
pub type MotionSequence = motion::MotionSequence<Geom>;
pub type KeyjointTrajectory = motion::KeyjointTrajectory<Geom>;
pub type FullBodyRepr = motion::FullBodyRepr<Geom>;
pub type DenoiserModel = nn::DenoiserModel<Net>;
pub type NoiseSchedule = diffusion::NoiseSchedule<Net>;
