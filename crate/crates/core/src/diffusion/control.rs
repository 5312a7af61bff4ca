//! Residual scaling and step gating for adapter guidance.

use serde::{Deserialize, Serialize};

use super::{DiffusionError, FrameLatentVolume};
use crate::scoring::ControlPair;

/// How the sampling loop's time variable relates to the gate threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateConvention {
    /// The gate compares the step index `t`, which runs `T, T-1, ..., 1`.
    /// Injection covers the early, high-noise steps.
    #[default]
    CountDown,
    /// The gate compares the elapsed step count `T - t`, which runs
    /// `0, 1, ..., T-1`. Injection covers the late steps.
    CountUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    scale: f64,
    tau: f64,
    total_steps: usize,
    convention: GateConvention,
}

impl ControlSchedule {
    pub fn new(scale: f64, tau: f64, total_steps: usize, convention: GateConvention) -> Result<Self, DiffusionError> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(DiffusionError::InvalidControl(format!("scale {scale} must be >= 0")));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(DiffusionError::InvalidControl(format!("tau {tau} outside [0, 1]")));
        }
        if total_steps == 0 {
            return Err(DiffusionError::InvalidControl("total steps must be >= 1".into()));
        }
        Ok(Self {
            scale,
            tau,
            total_steps,
            convention,
        })
    }

    pub fn from_pair(pair: ControlPair, total_steps: usize, convention: GateConvention) -> Result<Self, DiffusionError> {
        Self::new(pair.scale, pair.tau, total_steps, convention)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn convention(&self) -> GateConvention {
        self.convention
    }

    /// `(1 - tau) * T`, snapped to the nearest integer when it is within
    /// rounding error of one so that e.g. `tau = 0.07, T = 100` gives 93.
    pub fn tau_threshold(&self) -> f64 {
        let raw = (1.0 - self.tau) * self.total_steps as f64;
        let nearest = raw.round();
        if (raw - nearest).abs() <= 1e-9 * self.total_steps as f64 {
            nearest
        } else {
            raw
        }
    }

    /// Whether the residual is injected at step `t` (counting down from `T`).
    pub fn injects(&self, t: usize) -> bool {
        let clock = match self.convention {
            GateConvention::CountDown => t,
            GateConvention::CountUp => self.total_steps - t,
        };
        clock as f64 >= self.tau_threshold()
    }

    /// Number of steps `t = T..=1` that inject.
    pub fn injected_steps(&self) -> usize {
        (1..=self.total_steps).filter(|&t| self.injects(t)).count()
    }
}

/// `R = s * features`.
pub fn scale_residual(features: &FrameLatentVolume, scale: f64) -> Result<FrameLatentVolume, DiffusionError> {
    if !scale.is_finite() || scale < 0.0 {
        return Err(DiffusionError::InvalidControl(format!("scale {scale} must be >= 0")));
    }
    Ok(features.scaled(scale))
}

/// `H + R` when the gate is open at step `t`, otherwise `H`.
pub fn inject_residual(
    hidden: &FrameLatentVolume,
    residual: &FrameLatentVolume,
    t: usize,
    ctl: &ControlSchedule,
) -> Result<FrameLatentVolume, DiffusionError> {
    hidden.check_same_shape(residual, "residual does not match hidden state")?;
    if ctl.injects(t) {
        hidden.add(residual)
    } else {
        Ok(hidden.clone())
    }
}

/// In-place variant of [`inject_residual`].
pub fn inject_residual_in_place(
    hidden: &mut FrameLatentVolume,
    residual: &FrameLatentVolume,
    t: usize,
    ctl: &ControlSchedule,
) -> Result<(), DiffusionError> {
    hidden.check_same_shape(residual, "residual does not match hidden state")?;
    if ctl.injects(t) {
        for (h, r) in hidden.data_mut().iter_mut().zip(residual.data()) {
            *h += r;
        }
    }
    Ok(())
}
