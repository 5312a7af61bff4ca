//! `sketchctl`: score sketch sequences, derive adapter control parameters,
//! interpolate sketch frames, demonstrate TempSpatial attention, and run
//! seeded toy generation.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or
//! configuration), 2 for data errors (unreadable or unsuitable inputs).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub use config::RunConfig;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// An error caused by how the tool was invoked rather than by its inputs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

#[derive(Debug, Parser)]
#[command(name = "sketchctl", version, about = "Sketch abstraction scoring and sketch-guided toy video diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a directory of PGM sketch frames and print the report as JSON.
    Analyze {
        /// Directory of anchor frames (`.pgm`, processed in file-name order).
        dir: PathBuf,
        /// Continuity, connectivity and texture weights, e.g. `0.4,0.3,0.3`.
        #[arg(long, value_parser = config::parse_weights)]
        weights: Option<[f64; 3]>,
        /// Component count at which the connectivity score reaches zero.
        #[arg(long)]
        lmax: Option<u32>,
        /// Grey levels used for the co-occurrence matrix.
        #[arg(long)]
        glcm_levels: Option<usize>,
        /// Pixel offset used for the co-occurrence matrix.
        #[arg(long)]
        glcm_distance: Option<usize>,
        /// Ink threshold: pixels darker than this are ink.
        #[arg(long)]
        threshold: Option<u8>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON run configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Expand anchor sketches to an N-frame sequence of PGM files.
    Interp {
        /// Directory of anchor frames (`.pgm`, processed in file-name order).
        dir: PathBuf,
        /// Length of the output sequence.
        #[arg(long)]
        frames: Option<usize>,
        /// Directory receiving `frame_0001.pgm`, `frame_0002.pgm`, ...
        #[arg(long)]
        out: PathBuf,
        /// JSON run configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Analyze, interpolate and run seeded toy generation.
    Generate {
        /// JSON run configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory of anchor sketches (`.pgm`).
        #[arg(long)]
        sketches: PathBuf,
        /// First-frame image (`.pgm`) that seeds the latent anchor.
        #[arg(long)]
        first_frame: PathBuf,
        /// Random seed for the sampler.
        #[arg(long, env = "SKETCHCTL_SEED")]
        seed: Option<u64>,
        /// Output directory for the manifest and latent volume.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print TempSpatial attention weights for random tokens as CSV.
    AttentionDemo {
        /// Number of frames.
        #[arg(long)]
        frames: usize,
        /// Tokens per frame.
        #[arg(long)]
        tokens: usize,
        /// Key and value dimension.
        #[arg(long)]
        dk: usize,
        /// Random seed for the token draws.
        #[arg(long, env = "SKETCHCTL_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn effective_config(path: Option<&Path>, apply: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command, writing normal output to `stdout`.
pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Analyze {
            dir,
            weights,
            lmax,
            glcm_levels,
            glcm_distance,
            threshold,
            out,
            config,
        } => {
            let cfg = effective_config(config.as_deref(), |c| {
                c.weights = weights.unwrap_or(c.weights);
                c.max_components = lmax.unwrap_or(c.max_components);
                c.glcm_levels = glcm_levels.unwrap_or(c.glcm_levels);
                c.glcm_distance = glcm_distance.unwrap_or(c.glcm_distance);
                c.threshold = threshold.unwrap_or(c.threshold);
            })?;
            let json = commands::to_json(&commands::analyze(&dir, &cfg)?)?;
            match out {
                Some(path) => fs::write(&path, json).with_context(|| format!("cannot write {}", path.display()))?,
                None => stdout.write_all(json.as_bytes())?,
            }
        }
        Command::Interp {
            dir,
            frames,
            out,
            config,
        } => {
            let cfg = effective_config(config.as_deref(), |c| c.frames = frames.unwrap_or(c.frames))?;
            for path in commands::interp(&dir, cfg.frames, &out)? {
                writeln!(stdout, "{}", path.display())?;
            }
        }
        Command::Generate {
            config,
            sketches,
            first_frame,
            seed,
            out,
        } => {
            let cfg = effective_config(config.as_deref(), |c| c.seed = seed.unwrap_or(c.seed))?;
            let manifest = commands::generate(&cfg, &sketches, &first_frame, &out)?;
            stdout.write_all(commands::to_json(&manifest)?.as_bytes())?;
        }
        Command::AttentionDemo {
            frames,
            tokens,
            dk,
            seed,
        } => stdout.write_all(commands::attention_demo(frames, tokens, dk, seed)?.as_bytes())?,
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
