//! Noise schedule, forward noising, imputation, classifier-free guidance,
//! and the DDPM/DDIM samplers shared by both stages.

pub mod chain;
pub mod ops;
pub mod sampler;
pub mod schedule;

pub use ops::{cfg_combine, forward_noise, impute, impute_in_place};
pub use sampler::{
    ddim_timesteps, sample, sample_with_trace, Conditioning, Denoise, SampleRequest, SamplerKind,
};
pub use schedule::{build_schedule, default_schedule, NoiseSchedule};
