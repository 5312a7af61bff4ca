//! First-frame-anchored video diffusion at desk scale.
//!
//! Step indices `t` run `1..=T`; frame numbers are 1-based and frame 1 is
//! the anchor that is never noised.

mod control;
mod generate;
mod model;
mod process;
mod schedule;
mod volume;

use thiserror::Error;

pub use control::{inject_residual, inject_residual_in_place, scale_residual, ControlSchedule, GateConvention};
pub use generate::{generate, generate_with_observer};
pub use model::{
    default_adapter_features, latent_from_sketch, no_injection, pool_sketch, Adapter, AffineDenoiser, AffineGradient,
    Denoiser, InjectionHook, SketchPoolAdapter,
};
pub use process::{
    draw_noise, forward_sample, forward_sample_with_noise, posterior_mean, posterior_step, reverse_step,
    training_loss, training_loss_with_noise, StepVariance,
};
pub use schedule::{NoiseSchedule, DEFAULT_BETA_END, DEFAULT_BETA_START};
pub use volume::{FrameLatentVolume, VolumeShape};

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("step {t} outside 1..={steps}")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("latent volume contains a non-finite value")]
    NonFinite,
    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid control schedule: {0}")]
    InvalidControl(String),
    #[error("no trainable frames: the loss needs at least two frames")]
    NoTrainableFrames,
}
