//! First-frame-anchored forward noising, masked training loss and the
//! anchored reverse step.
//!
//! Frame 1 never receives noise: the forward process returns it unchanged
//! and every reverse step copies it through. Frames `f > 1` follow the usual
//! noise-prediction parameterization.

use rand::Rng;
use rand_distr::StandardNormal;

use super::model::{no_injection, Denoiser};
use super::{DiffusionError, FrameLatentVolume, NoiseSchedule};

/// Standard-normal noise for frames `2..=F`; frame 1 stays zero.
pub fn draw_noise<R: Rng + ?Sized>(shape: super::VolumeShape, rng: &mut R) -> FrameLatentVolume {
    let mut noise = FrameLatentVolume::zeros(shape);
    for f in 2..=shape.frames {
        for v in noise.frame_mut(f) {
            *v = rng.sample(StandardNormal);
        }
    }
    noise
}

/// `x_t` for a given noise draw: frame 1 copied, frames `f > 1` set to
/// `sqrt(abar_t) x0 + sqrt(1 - abar_t) eps`.
pub fn forward_sample_with_noise(
    x0: &FrameLatentVolume,
    t: usize,
    schedule: &NoiseSchedule,
    noise: &FrameLatentVolume,
) -> Result<FrameLatentVolume, DiffusionError> {
    schedule.check_step(t)?;
    x0.check_same_shape(noise, "noise does not match latent")?;
    let abar = schedule.alpha_bar(t);
    let (signal, sigma) = (abar.sqrt(), (1.0 - abar).sqrt());
    let mut x_t = x0.clone();
    for f in 2..=x0.shape().frames {
        for ((v, &x), &e) in x_t.frame_mut(f).iter_mut().zip(x0.frame(f)).zip(noise.frame(f)) {
            *v = signal * x + sigma * e;
        }
    }
    Ok(x_t)
}

pub fn forward_sample<R: Rng + ?Sized>(
    x0: &FrameLatentVolume,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<FrameLatentVolume, DiffusionError> {
    schedule.check_step(t)?;
    let noise = draw_noise(x0.shape(), rng);
    forward_sample_with_noise(x0, t, schedule, &noise)
}

/// Mean squared noise-prediction error over frames `2..=F` for a given
/// noise draw. Frame 1 of both `noise` and the prediction is ignored.
pub fn training_loss_with_noise<D: Denoiser>(
    denoiser: &D,
    cond: &D::Condition,
    x0: &FrameLatentVolume,
    t: usize,
    schedule: &NoiseSchedule,
    noise: &FrameLatentVolume,
) -> Result<f64, DiffusionError> {
    let shape = x0.shape();
    if shape.frames < 2 {
        return Err(DiffusionError::NoTrainableFrames);
    }
    let x_t = forward_sample_with_noise(x0, t, schedule, noise)?;
    let predicted = denoiser.predict_noise(&x_t, t, cond, &mut no_injection);
    x_t.check_same_shape(&predicted, "denoiser changed the volume shape")?;
    let mut total = 0.0;
    for f in 2..=shape.frames {
        for (e, p) in noise.frame(f).iter().zip(predicted.frame(f)) {
            total += (e - p) * (e - p);
        }
    }
    Ok(total / ((shape.frames - 1) * shape.frame_len()) as f64)
}

pub fn training_loss<D: Denoiser, R: Rng + ?Sized>(
    denoiser: &D,
    cond: &D::Condition,
    x0: &FrameLatentVolume,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<f64, DiffusionError> {
    if x0.shape().frames < 2 {
        return Err(DiffusionError::NoTrainableFrames);
    }
    schedule.check_step(t)?;
    let noise = draw_noise(x0.shape(), rng);
    training_loss_with_noise(denoiser, cond, x0, t, schedule, &noise)
}

/// Posterior mean `(x_t - beta_t / sqrt(1 - abar_t) * eps) / sqrt(alpha_t)`
/// for one element.
pub fn posterior_mean(x_t: f64, eps: f64, t: usize, schedule: &NoiseSchedule) -> f64 {
    let beta = schedule.beta(t);
    let coef = if beta == 0.0 {
        0.0
    } else {
        beta / (1.0 - schedule.alpha_bar(t)).sqrt()
    };
    (x_t - coef * eps) / schedule.alpha(t).sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StepVariance {
    /// `beta_t (1 - abar_{t-1}) / (1 - abar_t)`, zero at `t = 1`.
    #[default]
    Posterior,
    /// Deterministic step (mean only).
    Zero,
}

/// `x_{t-1}` from `x_t` and a noise prediction. Frame 1 is copied from
/// `x_t`, which carries the anchor.
pub fn posterior_step<R: Rng + ?Sized>(
    x_t: &FrameLatentVolume,
    eps: &FrameLatentVolume,
    t: usize,
    schedule: &NoiseSchedule,
    variance: StepVariance,
    rng: &mut R,
) -> Result<FrameLatentVolume, DiffusionError> {
    schedule.check_step(t)?;
    x_t.check_same_shape(eps, "noise prediction does not match latent")?;
    let sigma = match variance {
        StepVariance::Posterior => schedule.posterior_variance(t).sqrt(),
        StepVariance::Zero => 0.0,
    };
    let mut out = x_t.clone();
    for f in 2..=x_t.shape().frames {
        for ((v, &x), &e) in out.frame_mut(f).iter_mut().zip(x_t.frame(f)).zip(eps.frame(f)) {
            let mean = posterior_mean(x, e, t, schedule);
            *v = if sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma * z
            } else {
                mean
            };
        }
    }
    Ok(out)
}

/// One anchored reverse step with the denoiser's own prediction.
pub fn reverse_step<D: Denoiser, R: Rng + ?Sized>(
    x_t: &FrameLatentVolume,
    t: usize,
    denoiser: &D,
    cond: &D::Condition,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<FrameLatentVolume, DiffusionError> {
    schedule.check_step(t)?;
    let eps = denoiser.predict_noise(x_t, t, cond, &mut no_injection);
    posterior_step(x_t, &eps, t, schedule, StepVariance::Posterior, rng)
}
