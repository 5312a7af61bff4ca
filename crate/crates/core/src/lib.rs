//! Sketch abstraction scoring and sketch-controlled video diffusion.
//!
//! The scoring half reads grayscale sketch frames, measures continuity
//! (contour area against perimeter), connectivity (8-connected component
//! count) and texture (gray-level co-occurrence features), and maps the
//! combined score to an adapter `(scale, tau)` pair. The generation half
//! provides sketch-sequence interpolation, TempSpatial attention, and a
//! first-frame-anchored diffusion sampler with gated residual injection over
//! pluggable denoiser and adapter traits.

pub mod attention;
pub mod connectivity;
pub mod contour;
pub mod diffusion;
pub mod raster;
pub mod scoring;
pub mod sequence;
pub mod texture;

pub use raster::{BinaryMask, SketchRaster};
pub use scoring::{AbstractionReport, AnalysisConfig, ControlPair, ScoreWeights};
