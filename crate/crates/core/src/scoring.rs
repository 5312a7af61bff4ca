//! Abstraction score and its mapping to adapter control parameters.
//!
//! A frame's abstraction score is a weighted sum of its continuity,
//! connectivity and texture scores. A sequence score is the mean of its
//! frame scores, and the sequence score selects one of three fixed
//! `(scale, threshold)` control pairs.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connectivity::{self, ConnectivityError, DEFAULT_MAX_COMPONENTS};
use crate::contour;
use crate::raster::{self, SketchRaster, DEFAULT_INK_THRESHOLD};
use crate::texture::{self, TextureError, DEFAULT_DISTANCE, DEFAULT_LEVELS};

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("weights must be finite and non-negative, and not all zero (got {0:?})")]
    InvalidWeights([f64; 3]),
    #[error("component scores must be finite and non-negative (got {0:?})")]
    InvalidComponents([f64; 3]),
    #[error("abstraction score must be finite and non-negative (got {0})")]
    InvalidScore(f64),
    #[error("cannot score an empty sequence")]
    EmptySequence,
    #[error(transparent)]
    Connectivity(#[from] ConnectivityError),
    #[error(transparent)]
    Texture(#[from] TextureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub continuity: f64,
    pub connectivity: f64,
    pub texture: f64,
}

impl ScoreWeights {
    pub fn new(continuity: f64, connectivity: f64, texture: f64) -> Result<Self, ScoringError> {
        let w = [continuity, connectivity, texture];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) || w.iter().all(|&v| v == 0.0) {
            return Err(ScoringError::InvalidWeights(w));
        }
        Ok(Self {
            continuity,
            connectivity,
            texture,
        })
    }

    pub fn equal() -> Self {
        Self {
            continuity: 1.0 / 3.0,
            connectivity: 1.0 / 3.0,
            texture: 1.0 / 3.0,
        }
    }
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self::equal()
    }
}

/// Continuity, connectivity and texture scores of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub continuity: f64,
    pub connectivity: f64,
    pub texture: f64,
}

pub fn abstraction_score(c: ComponentScores, w: &ScoreWeights) -> Result<f64, ScoringError> {
    let parts = [c.continuity, c.connectivity, c.texture];
    if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(ScoringError::InvalidComponents(parts));
    }
    Ok(w.continuity * c.continuity + w.connectivity * c.connectivity + w.texture * c.texture)
}

pub fn sequence_score(frame_scores: &[f64]) -> Result<f64, ScoringError> {
    if frame_scores.is_empty() {
        return Err(ScoringError::EmptySequence);
    }
    Ok(frame_scores.iter().sum::<f64>() / frame_scores.len() as f64)
}

/// Adapter guidance: residual scale `s` and gating fraction `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    pub scale: f64,
    pub tau: f64,
}

/// Three-branch lookup; both boundaries are inclusive on the lower branch.
pub fn map_to_control(score: f64) -> Result<ControlPair, ScoringError> {
    if !score.is_finite() || score < 0.0 {
        return Err(ScoringError::InvalidScore(score));
    }
    let (scale, tau) = if score <= 0.5 {
        (0.55, 0.4)
    } else if score <= 1.0 {
        (0.65, 0.5)
    } else {
        (0.85, 0.6)
    };
    Ok(ControlPair { scale, tau })
}

/// Parameters of the per-frame analysis. Echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub weights: ScoreWeights,
    pub max_components: u32,
    pub glcm_levels: usize,
    pub glcm_distance: usize,
    pub ink_threshold: u8,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            weights: ScoreWeights::equal(),
            max_components: DEFAULT_MAX_COMPONENTS,
            glcm_levels: DEFAULT_LEVELS,
            glcm_distance: DEFAULT_DISTANCE,
            ink_threshold: DEFAULT_INK_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    /// Source label, usually the file name.
    pub name: String,
    pub continuity: f64,
    pub connectivity: f64,
    pub texture: f64,
    pub score: f64,
    pub contours: usize,
    pub components: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionReport {
    pub config: AnalysisConfig,
    pub frames: Vec<FrameReport>,
    pub sequence_score: f64,
    pub control: ControlPair,
}

/// Scores a single frame.
pub fn analyze_frame(name: &str, frame: &SketchRaster, cfg: &AnalysisConfig) -> Result<FrameReport, ScoringError> {
    let mask = raster::binarize(frame, cfg.ink_threshold);
    let contours = contour::trace_contours(&mask);
    let continuity = contour::continuity_score(&contours, frame.width(), frame.height());
    let labeling = connectivity::label_components(&mask);
    let connectivity = connectivity::connectivity_score(labeling.count, cfg.max_components)?;
    let texture = texture::analyze_texture(frame, cfg.glcm_levels, cfg.glcm_distance)?.score;
    let components = ComponentScores {
        continuity,
        connectivity,
        texture,
    };
    let score = abstraction_score(components, &cfg.weights)?;
    Ok(FrameReport {
        name: name.to_owned(),
        continuity,
        connectivity,
        texture,
        score,
        contours: contours.contours.len(),
        components: labeling.count,
    })
}

/// Scores every frame (in parallel), then aggregates and maps to control.
pub fn analyze_sequence(frames: &[(String, SketchRaster)], cfg: &AnalysisConfig) -> Result<AbstractionReport, ScoringError> {
    ScoreWeights::new(cfg.weights.continuity, cfg.weights.connectivity, cfg.weights.texture)?;
    let reports = frames
        .par_iter()
        .map(|(name, frame)| analyze_frame(name, frame, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let scores: Vec<f64> = reports.iter().map(|r| r.score).collect();
    let sequence_score = sequence_score(&scores)?;
    Ok(AbstractionReport {
        config: *cfg,
        frames: reports,
        sequence_score,
        control: map_to_control(sequence_score)?,
    })
}

/// File-name label used in reports.
pub fn frame_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn comps(c: f64, l: f64, t: f64) -> ComponentScores {
        ComponentScores {
            continuity: c,
            connectivity: l,
            texture: t,
        }
    }

    #[test]
    fn score_examples() {
        let eq = ScoreWeights::equal();
        assert_eq!(abstraction_score(comps(0.0, 0.0, 0.0), &eq), Ok(0.0));
        let s = abstraction_score(comps(0.3, 0.6, 0.9), &eq).unwrap();
        assert!((s - 0.6).abs() < 1e-15);
        let proj = ScoreWeights::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(abstraction_score(comps(0.37, 0.6, 0.9), &proj), Ok(0.37));
        assert!(abstraction_score(comps(-0.1, 0.0, 0.0), &eq).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(ScoreWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(ScoreWeights::new(-1.0, 1.0, 1.0).is_err());
        assert!(ScoreWeights::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(ScoreWeights::new(0.0, 0.0, 2.0).is_ok());
    }

    #[test]
    fn sequence_examples() {
        assert_eq!(sequence_score(&[0.4]), Ok(0.4));
        assert_eq!(sequence_score(&[0.2, 0.8]), Ok(0.5));
        assert_eq!(sequence_score(&[]), Err(ScoringError::EmptySequence));
    }

    #[test]
    fn mapping_table() {
        let pair = |s| {
            let c = map_to_control(s).unwrap();
            (c.scale, c.tau)
        };
        assert_eq!(pair(0.3), (0.55, 0.4));
        assert_eq!(pair(0.5), (0.55, 0.4));
        assert_eq!(pair(0.75), (0.65, 0.5));
        assert_eq!(pair(1.0), (0.65, 0.5));
        assert_eq!(pair(1.2), (0.85, 0.6));
        assert!(map_to_control(f64::NAN).is_err());
        assert!(map_to_control(-0.1).is_err());
    }

    #[test]
    fn blank_frame_scores_above_scattered_dots() {
        let cfg = AnalysisConfig::default();
        let blank = SketchRaster::filled(64, 64, 255).unwrap();
        let mut dots = blank.clone();
        for k in 0..50 {
            dots.set((k % 10) * 6 + 2, (k / 10) * 12 + 3, 0);
        }
        let b = analyze_frame("blank", &blank, &cfg).unwrap();
        let d = analyze_frame("dots", &dots, &cfg).unwrap();
        assert_eq!((b.continuity, b.connectivity, b.texture), (0.0, 1.0, 1.0));
        assert!((b.score - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.continuity, 0.0);
        assert_eq!(d.components, 50);
        assert_eq!(d.connectivity, 0.5);
        assert!(d.texture > 0.95);
        assert!(b.score > d.score);
    }

    #[test]
    fn blank_sequence_maps_to_middle_branch() {
        let frames = vec![("a.pgm".to_owned(), SketchRaster::filled(16, 16, 255).unwrap())];
        let report = analyze_sequence(&frames, &AnalysisConfig::default()).unwrap();
        assert_eq!(report.control, ControlPair { scale: 0.65, tau: 0.5 });
        assert!(analyze_sequence(&[], &AnalysisConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn mapping_is_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let (lo, hi) = (a.min(b), a.max(b));
            let (x, y) = (map_to_control(lo).unwrap(), map_to_control(hi).unwrap());
            prop_assert!(x.scale <= y.scale && x.tau <= y.tau);
        }

        #[test]
        fn score_is_linear(
            a in prop::array::uniform3(0.0f64..2.0),
            b in prop::array::uniform3(0.0f64..2.0),
            alpha in 0.0f64..3.0,
            beta in 0.0f64..3.0,
            w in prop::array::uniform3(0.01f64..1.0),
        ) {
            let w = ScoreWeights::new(w[0], w[1], w[2]).unwrap();
            let ca = comps(a[0], a[1], a[2]);
            let cb = comps(b[0], b[1], b[2]);
            let mix = comps(
                alpha * a[0] + beta * b[0],
                alpha * a[1] + beta * b[1],
                alpha * a[2] + beta * b[2],
            );
            let lhs = abstraction_score(mix, &w).unwrap();
            let rhs = alpha * abstraction_score(ca, &w).unwrap() + beta * abstraction_score(cb, &w).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn sequence_mean_is_bounded_and_order_free(mut xs in prop::collection::vec(0.0f64..2.0, 1..20)) {
            let m = sequence_score(&xs).unwrap();
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
            xs.reverse();
            let r = sequence_score(&xs).unwrap();
            prop_assert!((r - m).abs() <= 1e-12);
        }
    }
}
