//! The four subcommands, as library functions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sketchctl_core::attention::{tempspatial_attention, Matrix, TokenVolume};
use sketchctl_core::diffusion::{
    generate as run_diffusion, latent_from_sketch, AffineDenoiser, ControlSchedule, FrameLatentVolume, GateConvention,
    SketchPoolAdapter,
};
use sketchctl_core::raster::{read_frame_dir, read_pgm_file, write_pgm, SketchRaster};
use sketchctl_core::scoring::{analyze_sequence, frame_label, AbstractionReport};
use sketchctl_core::sequence::{interpolate_frames, AnchorSequence, FinalSequence};

use crate::config::RunConfig;
use crate::UsageError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VOLUME_FILE: &str = "volume.f32";
pub const VOLUME_SIDECAR: &str = "volume.json";

fn read_frames(dir: &Path) -> Result<Vec<(String, SketchRaster)>> {
    let frames = read_frame_dir(dir)?;
    Ok(frames.into_iter().map(|(p, r)| (frame_label(&p), r)).collect())
}

/// Scores every frame of `dir` and derives the control pair.
pub fn analyze(dir: &Path, cfg: &RunConfig) -> Result<AbstractionReport> {
    let frames = read_frames(dir)?;
    analyze_sequence(&frames, &cfg.analysis()).with_context(|| format!("cannot score frames in {}", dir.display()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn build_sequence(frames: Vec<(String, SketchRaster)>, n: usize) -> Result<FinalSequence> {
    let sketches = frames.into_iter().map(|(_, r)| r).collect();
    let anchors = AnchorSequence::evenly_spaced(sketches, n).context("cannot place anchor sketches")?;
    Ok(interpolate_frames(&anchors))
}

/// Expands the anchors in `dir` to `n` frames written as
/// `frame_0001.pgm`, `frame_0002.pgm`, ... in `out`.
pub fn interp(dir: &Path, n: usize, out: &Path) -> Result<Vec<PathBuf>> {
    let seq = build_sequence(read_frames(dir)?, n)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    seq.frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let path = out.join(format!("frame_{:04}.pgm", i + 1));
            fs::write(&path, write_pgm(frame)).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub kind: String,
    pub beta_start: f64,
    pub beta_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub frame_means: Vec<f64>,
}

impl VolumeSummary {
    fn of(v: &FrameLatentVolume) -> Self {
        let data = v.data();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let std = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let frames = v.shape().frames;
        Self {
            mean,
            std,
            min: data.iter().copied().fold(f64::INFINITY, f64::min),
            max: data.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            frame_means: (1..=frames)
                .map(|f| v.frame(f).iter().sum::<f64>() / v.frame(f).len() as f64)
                .collect(),
        }
    }
}

/// Shape sidecar of the raw volume dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub file: String,
    pub dtype: String,
    /// `[frames, channels, height, width]`, row-major.
    pub shape: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub steps: usize,
    pub scale: f64,
    pub tau: f64,
    pub tau_threshold: f64,
    pub injected_steps: usize,
    pub gate_convention: GateConvention,
    pub schedule: ScheduleParams,
    pub sequence_score: f64,
    pub anchors: usize,
    pub volume: VolumeHeader,
    pub summary: VolumeSummary,
    pub config: RunConfig,
}

/// Analyze, interpolate and run seeded toy generation; writes the manifest,
/// the raw volume and its sidecar into `out`.
pub fn generate(cfg: &RunConfig, sketch_dir: &Path, first_frame: &Path, out: &Path) -> Result<RunManifest> {
    let frames = read_frames(sketch_dir)?;
    let anchors = frames.len();
    let report = analyze_sequence(&frames, &cfg.analysis())
        .with_context(|| format!("cannot score frames in {}", sketch_dir.display()))?;
    let seq = build_sequence(frames, cfg.frames)?;

    let first = read_pgm_file(first_frame)?;
    let dims = cfg.latent;
    let anchor = latent_from_sketch(&first, dims.channels, dims.height, dims.width);
    let schedule = cfg.schedule()?;
    let ctl = ControlSchedule::from_pair(report.control, cfg.steps, cfg.gate_convention)?;
    let denoiser = AffineDenoiser::uniform(cfg.anchor_shape().frame_len(), cfg.denoiser_gain);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let volume = run_diffusion(&anchor, &seq, &denoiser, &(), &SketchPoolAdapter, &ctl, &schedule, &mut rng)
        .context("generation failed")?;

    let shape = volume.shape();
    let header = VolumeHeader {
        file: VOLUME_FILE.into(),
        dtype: "f32le".into(),
        shape: [shape.frames, shape.channels, shape.height, shape.width],
    };
    let manifest = RunManifest {
        seed: cfg.seed,
        steps: cfg.steps,
        scale: ctl.scale(),
        tau: ctl.tau(),
        tau_threshold: ctl.tau_threshold(),
        injected_steps: ctl.injected_steps(),
        gate_convention: cfg.gate_convention,
        schedule: ScheduleParams {
            kind: "linear".into(),
            beta_start: cfg.beta_start,
            beta_end: cfg.beta_end,
        },
        sequence_score: report.sequence_score,
        anchors,
        volume: header.clone(),
        summary: VolumeSummary::of(&volume),
        config: cfg.clone(),
    };

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let bytes: Vec<u8> = volume.data().iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    let writes = [
        (VOLUME_FILE, bytes),
        (VOLUME_SIDECAR, to_json(&header)?.into_bytes()),
        (MANIFEST_FILE, to_json(&manifest)?.into_bytes()),
    ];
    for (name, contents) in writes {
        let path = out.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(manifest)
}

/// Random Q, K, V volumes run through TempSpatial attention, as long-format
/// CSV: one line per (frame, query, source token).
pub fn attention_demo(frames: usize, tokens: usize, dk: usize, seed: u64) -> Result<String> {
    if frames == 0 || tokens == 0 || dk == 0 {
        return Err(UsageError("frames, tokens and dk must be at least 1".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let data = (0..tokens * dk).map(|_| rng.sample(StandardNormal)).collect();
        Matrix::new(tokens, dk, data).expect("sized by construction")
    };
    let (mut q, mut k, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..frames {
        q.push(draw());
        k.push(draw());
        v.push(draw());
    }
    let out = tempspatial_attention(&TokenVolume::new(q, k, v)?)?;

    let mut csv = String::from("frame,query,source_frame,source_token,weight\n");
    for fa in &out.frames {
        for r in 0..fa.weights.rows() {
            for (j, w) in fa.weights.row(r).iter().enumerate() {
                let source = fa.sources[j / tokens];
                writeln!(csv, "{},{},{},{},{}", fa.frame, r, source, j % tokens, w).expect("writing to a String");
            }
        }
    }
    Ok(csv)
}
