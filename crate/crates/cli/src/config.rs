//! Run configuration: built-in defaults, optionally overridden by a JSON
//! file, optionally overridden again by command-line flags.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sketchctl_core::connectivity::DEFAULT_MAX_COMPONENTS;
use sketchctl_core::diffusion::{GateConvention, NoiseSchedule, VolumeShape, DEFAULT_BETA_END, DEFAULT_BETA_START};
use sketchctl_core::raster::DEFAULT_INK_THRESHOLD;
use sketchctl_core::scoring::{AnalysisConfig, ScoreWeights};
use sketchctl_core::texture::{DEFAULT_DISTANCE, DEFAULT_LEVELS};

use crate::UsageError;

pub const DEFAULT_FRAMES: usize = 16;
pub const DEFAULT_STEPS: usize = 50;

/// Spatial size of the toy latent frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentDims {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Default for LatentDims {
    fn default() -> Self {
        Self {
            channels: 4,
            height: 8,
            width: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Continuity, connectivity and texture weights.
    pub weights: [f64; 3],
    /// Component count at which connectivity reaches zero.
    pub max_components: u32,
    pub glcm_levels: usize,
    pub glcm_distance: usize,
    /// Pixels darker than this are ink.
    pub threshold: u8,
    /// Length of the interpolated sketch sequence.
    pub frames: usize,
    /// Diffusion steps.
    pub steps: usize,
    pub seed: u64,
    pub gate_convention: GateConvention,
    pub latent: LatentDims,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Gain of the toy affine noise predictor.
    pub denoiser_gain: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let w = ScoreWeights::equal();
        Self {
            weights: [w.continuity, w.connectivity, w.texture],
            max_components: DEFAULT_MAX_COMPONENTS,
            glcm_levels: DEFAULT_LEVELS,
            glcm_distance: DEFAULT_DISTANCE,
            threshold: DEFAULT_INK_THRESHOLD,
            frames: DEFAULT_FRAMES,
            steps: DEFAULT_STEPS,
            seed: 0,
            gate_convention: GateConvention::default(),
            latent: LatentDims::default(),
            beta_start: DEFAULT_BETA_START,
            beta_end: DEFAULT_BETA_END,
            denoiser_gain: 0.1,
        }
    }
}

impl RunConfig {
    /// Defaults, or the contents of `path` layered over them.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
    }

    /// Checks every parameter against its module's preconditions.
    pub fn validate(&self) -> Result<(), UsageError> {
        let bad = |msg: String| Err(UsageError(msg));
        let [c, l, t] = self.weights;
        if let Err(e) = ScoreWeights::new(c, l, t) {
            return bad(e.to_string());
        }
        if self.max_components == 0 {
            return bad("max_components must be at least 1".into());
        }
        if !(2..=256).contains(&self.glcm_levels) {
            return bad(format!("glcm_levels must be in 2..=256 (got {})", self.glcm_levels));
        }
        if self.glcm_distance == 0 {
            return bad("glcm_distance must be at least 1".into());
        }
        if self.frames == 0 || self.steps == 0 {
            return bad("frames and steps must be at least 1".into());
        }
        let LatentDims { channels, height, width } = self.latent;
        if channels == 0 || height == 0 || width == 0 {
            return bad("latent dimensions must be at least 1".into());
        }
        if !(self.beta_start > 0.0 && self.beta_start <= self.beta_end && self.beta_end < 1.0) {
            return bad(format!(
                "need 0 < beta_start <= beta_end < 1 (got {}, {})",
                self.beta_start, self.beta_end
            ));
        }
        if !self.denoiser_gain.is_finite() {
            return bad("denoiser_gain must be finite".into());
        }
        Ok(())
    }

    pub fn analysis(&self) -> AnalysisConfig {
        let [continuity, connectivity, texture] = self.weights;
        AnalysisConfig {
            weights: ScoreWeights {
                continuity,
                connectivity,
                texture,
            },
            max_components: self.max_components,
            glcm_levels: self.glcm_levels,
            glcm_distance: self.glcm_distance,
            ink_threshold: self.threshold,
        }
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        Ok(NoiseSchedule::linear(self.steps, self.beta_start, self.beta_end)?)
    }

    /// Shape of one latent frame.
    pub fn anchor_shape(&self) -> VolumeShape {
        VolumeShape::new(1, self.latent.channels, self.latent.height, self.latent.width)
    }
}

/// Parses `a,b,c` into three weights.
pub fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("expected three comma-separated weights, got {:?}", s));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([num(a)?, num(b)?, num(c)?])
}
