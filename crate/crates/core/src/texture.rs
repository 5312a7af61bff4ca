//! Gray-level co-occurrence matrices and the texture score.
//!
//! Matrices are accumulated symmetrically: every in-bounds pixel pair
//! `(p, p + offset)` contributes to both `(i, j)` and `(j, i)`. Features are
//! computed per direction, scaled by their analytic maxima for `G` levels,
//! and the per-direction scores are averaged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::SketchRaster;

pub const DEFAULT_LEVELS: usize = 16;
pub const DEFAULT_DISTANCE: usize = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextureError {
    #[error("gray level count must be in 2..=256 (got {0})")]
    InvalidLevels(usize),
    #[error("co-occurrence distance must be at least 1")]
    ZeroDistance,
    #[error("level image holds {actual} samples, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("level {level} out of range for {levels} gray levels")]
    LevelOutOfRange { level: u8, levels: usize },
    #[error("no pixel pairs at offset {distance} in direction {direction:?}")]
    EmptyMatrix { direction: Direction, distance: usize },
    #[error("image too small for texture analysis")]
    ImageTooSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "45")]
    Deg45,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "135")]
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    /// `(dx, dy)` step for a unit distance; `y` grows downward, so 45° points
    /// up and to the right.
    pub fn unit_offset(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (1, 0),
            Direction::Deg45 => (1, -1),
            Direction::Deg90 => (0, -1),
            Direction::Deg135 => (-1, -1),
        }
    }

    pub fn degrees(self) -> u32 {
        match self {
            Direction::Deg0 => 0,
            Direction::Deg45 => 45,
            Direction::Deg90 => 90,
            Direction::Deg135 => 135,
        }
    }
}

/// A quantized image: one gray level in `0..levels` per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelImage {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub data: Vec<u8>,
}

impl LevelImage {
    pub fn new(width: usize, height: usize, levels: usize, data: Vec<u8>) -> Result<Self, TextureError> {
        check_levels(levels)?;
        if data.len() != width * height {
            return Err(TextureError::LengthMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if let Some(&level) = data.iter().find(|&&v| usize::from(v) >= levels) {
            return Err(TextureError::LevelOutOfRange { level, levels });
        }
        Ok(Self {
            width,
            height,
            levels,
            data,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

fn check_levels(levels: usize) -> Result<(), TextureError> {
    if (2..=256).contains(&levels) {
        Ok(())
    } else {
        Err(TextureError::InvalidLevels(levels))
    }
}

/// `level = floor(intensity * G / 256)`.
pub fn quantize(raster: &SketchRaster, levels: usize) -> Result<LevelImage, TextureError> {
    check_levels(levels)?;
    let data = raster
        .pixels()
        .iter()
        .map(|&p| (usize::from(p) * levels / 256) as u8)
        .collect();
    Ok(LevelImage {
        width: raster.width(),
        height: raster.height(),
        levels,
        data,
    })
}

/// Normalized symmetric co-occurrence matrix for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    pub levels: usize,
    pub direction: Direction,
    pub distance: usize,
    /// Symmetric pair counts, row-major `levels x levels`.
    pub counts: Vec<u64>,
    /// `counts / sum(counts)`; all zero when the matrix is empty.
    pub entries: Vec<f64>,
    pub total: u64,
}

impl GlcmMatrix {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.levels + j]
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.levels + j]
    }
}

pub fn glcm(image: &LevelImage, direction: Direction, distance: usize) -> Result<GlcmMatrix, TextureError> {
    if distance == 0 {
        return Err(TextureError::ZeroDistance);
    }
    let g = image.levels;
    let (ux, uy) = direction.unit_offset();
    let (dx, dy) = (ux * distance as isize, uy * distance as isize);
    let (w, h) = (image.width as isize, image.height as isize);
    let mut counts = vec![0u64; g * g];

    // restrict the scan to sources whose partner is in bounds
    let x_range = dx.min(0).abs()..(w - dx.max(0)).max(0);
    let y_range = dy.min(0).abs()..(h - dy.max(0)).max(0);
    for y in y_range {
        for x in x_range.clone() {
            let a = usize::from(image.data[(y * w + x) as usize]);
            let b = usize::from(image.data[((y + dy) * w + x + dx) as usize]);
            counts[a * g + b] += 1;
            counts[b * g + a] += 1;
        }
    }

    let total: u64 = counts.iter().sum();
    let entries = if total == 0 {
        vec![0.0; g * g]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    Ok(GlcmMatrix {
        levels: g,
        direction,
        distance,
        counts,
        entries,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureFeatures {
    pub contrast: f64,
    pub dissimilarity: f64,
    pub homogeneity: f64,
    pub contrast_scaled: f64,
    pub dissimilarity_scaled: f64,
    pub homogeneity_scaled: f64,
}

impl TextureFeatures {
    /// Per-direction texture score: mean of `1 - C`, `1 - D` and `H`, all scaled.
    pub fn direction_score(&self) -> f64 {
        ((1.0 - self.contrast_scaled) + (1.0 - self.dissimilarity_scaled) + self.homogeneity_scaled) / 3.0
    }
}

pub fn texture_features(m: &GlcmMatrix) -> Result<TextureFeatures, TextureError> {
    if m.is_empty() {
        return Err(TextureError::EmptyMatrix {
            direction: m.direction,
            distance: m.distance,
        });
    }
    let g = m.levels;
    let (mut contrast, mut dissimilarity, mut homogeneity) = (0.0, 0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            let p = m.entries[i * g + j];
            if p == 0.0 {
                continue;
            }
            let diff = i.abs_diff(j) as f64;
            contrast += diff * diff * p;
            dissimilarity += diff * p;
            homogeneity += p / (1.0 + diff);
        }
    }
    let max_diff = (g - 1) as f64;
    Ok(TextureFeatures {
        contrast,
        dissimilarity,
        homogeneity,
        contrast_scaled: contrast / (max_diff * max_diff),
        dissimilarity_scaled: dissimilarity / max_diff,
        homogeneity_scaled: homogeneity,
    })
}

/// Mean per-direction score over the non-empty directions.
pub fn texture_score(per_direction: &[Option<TextureFeatures>]) -> Result<f64, TextureError> {
    let scores: Vec<f64> = per_direction
        .iter()
        .flatten()
        .map(TextureFeatures::direction_score)
        .collect();
    if scores.is_empty() {
        return Err(TextureError::ImageTooSmall);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Full texture analysis of a frame: quantize, build the four matrices and score.
pub fn analyze_texture(raster: &SketchRaster, levels: usize, distance: usize) -> Result<TextureAnalysis, TextureError> {
    let image = quantize(raster, levels)?;
    let mut per_direction = Vec::with_capacity(4);
    for dir in Direction::ALL {
        let m = glcm(&image, dir, distance)?;
        let features = if m.is_empty() { None } else { Some(texture_features(&m)?) };
        per_direction.push((dir, features));
    }
    let features: Vec<_> = per_direction.iter().map(|(_, f)| *f).collect();
    let score = texture_score(&features)?;
    Ok(TextureAnalysis { per_direction, score })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureAnalysis {
    pub per_direction: Vec<(Direction, Option<TextureFeatures>)>,
    pub score: f64,
}
