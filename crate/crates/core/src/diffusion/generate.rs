use rand::Rng;

use super::control::{inject_residual_in_place, scale_residual, ControlSchedule};
use super::model::{Adapter, Denoiser};
use super::process::{draw_noise, posterior_step, StepVariance};
use super::{DiffusionError, FrameLatentVolume, NoiseSchedule, VolumeShape};
use crate::sequence::FinalSequence;

/// Runs anchored reverse diffusion from `t = T` down to `1`.
///
/// The latent has one frame per sketch. Frame 1 is `first_frame` and stays
/// fixed; the other frames start from standard normal noise. Adapter
/// features are scaled once by `ctl.scale()` and, on every step where the
/// gate is open, added to the hidden state at each denoiser injection site.
#[allow(clippy::too_many_arguments)]
pub fn generate<D, A, R>(
    first_frame: &FrameLatentVolume,
    sketches: &FinalSequence,
    denoiser: &D,
    cond: &D::Condition,
    adapter: &A,
    ctl: &ControlSchedule,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<FrameLatentVolume, DiffusionError>
where
    D: Denoiser,
    A: Adapter,
    R: Rng + ?Sized,
{
    generate_with_observer(first_frame, sketches, denoiser, cond, adapter, ctl, schedule, rng, |_, _| {})
}

/// [`generate`], calling `observe(t - 1, &x_{t-1})` after every step.
#[allow(clippy::too_many_arguments)]
pub fn generate_with_observer<D, A, R, O>(
    first_frame: &FrameLatentVolume,
    sketches: &FinalSequence,
    denoiser: &D,
    cond: &D::Condition,
    adapter: &A,
    ctl: &ControlSchedule,
    schedule: &NoiseSchedule,
    rng: &mut R,
    mut observe: O,
) -> Result<FrameLatentVolume, DiffusionError>
where
    D: Denoiser,
    A: Adapter,
    R: Rng + ?Sized,
    O: FnMut(usize, &FrameLatentVolume),
{
    let anchor_shape = first_frame.shape();
    if anchor_shape.frames != 1 {
        return Err(DiffusionError::Shape(format!(
            "first frame must be a single-frame volume, got {} frames",
            anchor_shape.frames
        )));
    }
    if sketches.is_empty() {
        return Err(DiffusionError::Shape("empty sketch sequence".into()));
    }
    if ctl.total_steps() != schedule.steps() {
        return Err(DiffusionError::InvalidControl(format!(
            "control schedule covers {} steps, noise schedule has {}",
            ctl.total_steps(),
            schedule.steps()
        )));
    }
    let shape = VolumeShape {
        frames: sketches.len(),
        ..anchor_shape
    };

    let sites = denoiser.injection_sites(shape);
    let features = adapter.features(sketches, &sites)?;
    if features.len() != sites.len() || features.iter().zip(&sites).any(|(f, s)| f.shape() != *s) {
        return Err(DiffusionError::Shape("adapter features do not match injection sites".into()));
    }
    let residuals = features
        .iter()
        .map(|f| scale_residual(f, ctl.scale()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut x = draw_noise(shape, rng);
    x.frame_mut(1).copy_from_slice(first_frame.frame(1));

    for t in (1..=schedule.steps()).rev() {
        let mut hook_error = None;
        let eps = denoiser.predict_noise(&x, t, cond, &mut |site, hidden| {
            let result = residuals
                .get(site)
                .ok_or_else(|| DiffusionError::Shape(format!("no residual for injection site {site}")))
                .and_then(|r| inject_residual_in_place(hidden, r, t, ctl));
            if let Err(e) = result {
                hook_error.get_or_insert(e);
            }
        });
        if let Some(e) = hook_error {
            return Err(e);
        }
        x = posterior_step(&x, &eps, t, schedule, StepVariance::Posterior, rng)?;
        observe(t - 1, &x);
    }
    Ok(x)
}
