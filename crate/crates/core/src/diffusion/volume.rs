use serde::{Deserialize, Serialize};

use super::DiffusionError;

/// Dimensions of a frames x channels x height x width volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VolumeShape {
    pub frames: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl VolumeShape {
    pub fn new(frames: usize, channels: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            channels,
            height,
            width,
        }
    }

    /// Values per frame.
    pub fn frame_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.frames * self.frame_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real-valued latents for every frame; frame 1 is the anchor.
///
/// Frame accessors take 1-based frame numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLatentVolume {
    shape: VolumeShape,
    data: Vec<f64>,
}

impl FrameLatentVolume {
    pub fn new(shape: VolumeShape, data: Vec<f64>) -> Result<Self, DiffusionError> {
        if shape.frames == 0 || shape.frame_len() == 0 {
            return Err(DiffusionError::Shape(format!("empty volume {shape:?}")));
        }
        if data.len() != shape.len() {
            return Err(DiffusionError::Shape(format!(
                "volume {shape:?} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::NonFinite);
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: VolumeShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn filled(shape: VolumeShape, value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn shape(&self) -> VolumeShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        let n = self.shape.frame_len();
        &self.data[(f - 1) * n..f * n]
    }

    pub fn frame_mut(&mut self, f: usize) -> &mut [f64] {
        let n = self.shape.frame_len();
        &mut self.data[(f - 1) * n..f * n]
    }

    pub(crate) fn check_same_shape(&self, other: &FrameLatentVolume, what: &str) -> Result<(), DiffusionError> {
        if self.shape != other.shape {
            return Err(DiffusionError::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Element-wise `self + other`.
    pub fn add(&self, other: &FrameLatentVolume) -> Result<FrameLatentVolume, DiffusionError> {
        self.check_same_shape(other, "cannot add volumes")?;
        Ok(Self {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> FrameLatentVolume {
        Self {
            shape: self.shape,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}
