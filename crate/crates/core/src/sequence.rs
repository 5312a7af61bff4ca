//! Expanding user anchor sketches into an N-frame sketch sequence.
//!
//! Frame positions are 1-based. Between two anchors each pixel is blended
//! linearly and rounded to the nearest intensity (ties away from zero);
//! frames outside the anchor span copy the nearest anchor.

use thiserror::Error;

use crate::raster::SketchRaster;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("at least one anchor is required")]
    NoAnchors,
    #[error("{anchors} anchors do not fit in {frames} frames")]
    TooManyAnchors { anchors: usize, frames: usize },
    #[error("anchor positions must be strictly increasing within 1..={frames} (got {positions:?})")]
    BadPositions { positions: Vec<usize>, frames: usize },
    #[error("anchor {index} is {got:?}, expected {expected:?} (width, height)")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
}

/// Evenly spread 1-based positions for `anchors` sketches in `frames` frames.
///
/// The first and last anchors land on frames 1 and `frames`; intermediate
/// positions are rounded to nearest with halves rounded down.
pub fn default_positions(anchors: usize, frames: usize) -> Result<Vec<usize>, SequenceError> {
    if anchors == 0 {
        return Err(SequenceError::NoAnchors);
    }
    if anchors > frames {
        return Err(SequenceError::TooManyAnchors { anchors, frames });
    }
    if anchors == 1 {
        return Ok(vec![1]);
    }
    let den = anchors - 1;
    Ok((0..anchors)
        .map(|i| {
            let num = i * (frames - 1);
            let (q, r) = (num / den, num % den);
            1 + if 2 * r > den { q + 1 } else { q }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSequence {
    anchors: Vec<(usize, SketchRaster)>,
    frames: usize,
}

impl AnchorSequence {
    pub fn new(anchors: Vec<(usize, SketchRaster)>, frames: usize) -> Result<Self, SequenceError> {
        let first = anchors.first().ok_or(SequenceError::NoAnchors)?;
        let expected = (first.1.width(), first.1.height());
        for (index, (_, r)) in anchors.iter().enumerate() {
            if (r.width(), r.height()) != expected {
                return Err(SequenceError::DimensionMismatch {
                    index,
                    expected,
                    got: (r.width(), r.height()),
                });
            }
        }
        let positions: Vec<usize> = anchors.iter().map(|(p, _)| *p).collect();
        let increasing = positions.windows(2).all(|w| w[0] < w[1]);
        let in_range = positions.iter().all(|&p| (1..=frames).contains(&p));
        if !increasing || !in_range {
            return Err(SequenceError::BadPositions { positions, frames });
        }
        Ok(Self { anchors, frames })
    }

    /// Places the sketches at [`default_positions`].
    pub fn evenly_spaced(sketches: Vec<SketchRaster>, frames: usize) -> Result<Self, SequenceError> {
        let positions = default_positions(sketches.len(), frames)?;
        Self::new(positions.into_iter().zip(sketches).collect(), frames)
    }

    pub fn anchors(&self) -> &[(usize, SketchRaster)] {
        &self.anchors
    }

    pub fn frames(&self) -> usize {
        self.frames
    }
}

/// The assembled sequence `F_1..F_N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalSequence {
    pub frames: Vec<SketchRaster>,
}

impl FinalSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.frames
            .first()
            .map(|f| (f.width(), f.height()))
            .unwrap_or((0, 0))
    }
}

/// `a + (b - a) * num / den` per pixel, in exact integer arithmetic with
/// halves rounded away from zero.
fn blend(a: &SketchRaster, b: &SketchRaster, num: usize, den: usize) -> SketchRaster {
    let (num, den) = (num as i64, den as i64);
    let pixels = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&pa, &pb)| {
            // the blend lies between two intensities, so it is never negative
            let scaled = i64::from(pa) * den + (i64::from(pb) - i64::from(pa)) * num;
            ((2 * scaled + den) / (2 * den)) as u8
        })
        .collect();
    SketchRaster::new(a.width(), a.height(), pixels).expect("dimensions checked by AnchorSequence")
}

pub fn interpolate_frames(seq: &AnchorSequence) -> FinalSequence {
    let anchors = &seq.anchors;
    let (first_pos, first) = &anchors[0];
    let (last_pos, last) = &anchors[anchors.len() - 1];
    let frames = (1..=seq.frames)
        .map(|t| {
            if t <= *first_pos {
                return first.clone();
            }
            if t >= *last_pos {
                return last.clone();
            }
            // anchors[k].0 <= t < anchors[k + 1].0
            let k = anchors.partition_point(|(p, _)| *p <= t) - 1;
            let (lo_pos, lo) = &anchors[k];
            let (hi_pos, hi) = &anchors[k + 1];
            if t == *lo_pos {
                return lo.clone();
            }
            blend(lo, hi, t - lo_pos, hi_pos - lo_pos)
        })
        .collect();
    FinalSequence { frames }
}
