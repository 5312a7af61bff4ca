#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sketchctl_core::raster::{write_pgm, SketchRaster};

pub fn sketchctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchctl"))
        .args(args)
        .env_remove("SKETCHCTL_SEED")
        .output()
        .expect("spawn sketchctl")
}

pub fn frame_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> SketchRaster {
    let pixels = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
    SketchRaster::new(w, h, pixels).unwrap()
}

pub fn blank(size: usize) -> SketchRaster {
    SketchRaster::filled(size, size, 255).unwrap()
}

/// Three 2x2 dots on a white 64x64 frame.
pub fn three_dots() -> SketchRaster {
    frame_from_fn(64, 64, |x, y| {
        let hit = [(10, 10), (40, 20), (25, 50)]
            .iter()
            .any(|&(dx, dy)| (dx..dx + 2).contains(&x) && (dy..dy + 2).contains(&y));
        if hit {
            0
        } else {
            255
        }
    })
}

/// Solid disk of radius 12 inside a stippled disk of radius 27.
pub fn dense_disk() -> SketchRaster {
    frame_from_fn(64, 64, |x, y| {
        let d2 = (x as i64 - 32).pow(2) + (y as i64 - 32).pow(2);
        if d2 <= 144 || (d2 <= 729 && x % 2 == 0 && y % 2 == 0) {
            0
        } else {
            255
        }
    })
}

/// Diagonal gradient whose phase depends on `k`, so anchors differ.
pub fn gradient(size: usize, k: usize) -> SketchRaster {
    frame_from_fn(size, size, |x, y| ((x * 17 + y * 9 + k * 61) % 256) as u8)
}

pub fn write_frames(dir: &Path, frames: &[SketchRaster]) {
    fs::create_dir_all(dir).unwrap();
    for (i, f) in frames.iter().enumerate() {
        fs::write(dir.join(format!("anchor_{i:02}.pgm")), write_pgm(f)).unwrap();
    }
}
