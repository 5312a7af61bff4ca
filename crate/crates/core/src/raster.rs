//! Grayscale sketch frames, ink masks and PGM (P2/P5) I/O.
//!
//! Pixel convention: row-major, `(x, y) = (column, row)`, intensities are
//! `u8`. Ink is dark: a pixel is foreground when its intensity is strictly
//! below the binarization threshold.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Default ink threshold.
pub const DEFAULT_INK_THRESHOLD: u8 = 128;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("raster dimensions must be at least 1x1 (got {width}x{height})")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("bad magic at byte {offset}: expected P2 or P5")]
    BadMagic { offset: usize },
    #[error("malformed header at byte {offset}: {reason}")]
    Header { offset: usize, reason: &'static str },
    #[error("maxval {maxval} at byte {offset} exceeds 255")]
    MaxvalTooLarge { offset: usize, maxval: u32 },
    #[error("sample {value} at byte {offset} exceeds maxval {maxval}")]
    SampleOutOfRange { offset: usize, value: u32, maxval: u32 },
    #[error("truncated payload: sample {index} of {expected} missing at byte {offset}")]
    Truncated {
        offset: usize,
        index: usize,
        expected: usize,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Error)]
pub enum FrameDirError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}")]
    Decode {
        path: PathBuf,
        #[source]
        source: PgmError,
    },
    #[error("no .pgm files in {0}")]
    Empty(PathBuf),
}

/// A single grayscale sketch frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SketchRaster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl SketchRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        let expected = width
            .checked_mul(height)
            .ok_or(RasterError::EmptyDimensions { width, height })?;
        if pixels.len() != expected {
            return Err(RasterError::LengthMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A raster with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Intensity at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn same_dimensions(&self, other: &SketchRaster) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Foreground (ink) mask; `true` marks ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions { width, height });
        }
        if bits.len() != width * height {
            return Err(RasterError::LengthMismatch {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.bits[y * self.width + x] = ink;
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Marks every pixel darker than `threshold` as ink.
pub fn binarize(raster: &SketchRaster, threshold: u8) -> BinaryMask {
    BinaryMask {
        width: raster.width,
        height: raster.height,
        bits: raster.pixels.iter().map(|&p| p < threshold).collect(),
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Reads an unsigned decimal token. Returns the value and its starting offset.
    fn read_uint(&mut self, what: &'static str) -> Result<(u32, usize), PgmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u32 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(self.bytes[self.pos] - b'0')))
                .ok_or(PgmError::Header {
                    offset: start,
                    reason: "numeric field overflows",
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PgmError::Header {
                offset: start,
                reason: what,
            });
        }
        Ok((value, start))
    }
}

/// Decodes a P2 (ASCII) or P5 (binary) PGM with maxval <= 255.
///
/// Samples are kept as stored; they are not rescaled to 255 when the
/// maxval is smaller.
pub fn load_pgm(bytes: &[u8]) -> Result<SketchRaster, PgmError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'5') {
        return Err(PgmError::BadMagic { offset: 0 });
    }
    let binary = bytes[1] == b'5';
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(PgmError::BadMagic { offset: 2 });
    }
    let (width, _) = cur.read_uint("expected width")?;
    let (height, h_off) = cur.read_uint("expected height")?;
    let (maxval, m_off) = cur.read_uint("expected maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::Header {
            offset: h_off,
            reason: "zero dimension",
        });
    }
    if maxval == 0 {
        return Err(PgmError::Header {
            offset: m_off,
            reason: "maxval must be positive",
        });
    }
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge {
            offset: m_off,
            maxval,
        });
    }
    let (width, height) = (width as usize, height as usize);
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);

    if binary {
        // exactly one whitespace byte separates maxval from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(PgmError::Header {
                offset: cur.pos,
                reason: "expected whitespace after maxval",
            });
        }
        let start = cur.pos + 1;
        let available = bytes.len().saturating_sub(start);
        if available < count {
            return Err(PgmError::Truncated {
                offset: start + available,
                index: available,
                expected: count,
            });
        }
        for (i, &v) in bytes[start..start + count].iter().enumerate() {
            if u32::from(v) > maxval {
                return Err(PgmError::SampleOutOfRange {
                    offset: start + i,
                    value: u32::from(v),
                    maxval,
                });
            }
            pixels.push(v);
        }
    } else {
        for index in 0..count {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(PgmError::Truncated {
                    offset: cur.pos,
                    index,
                    expected: count,
                });
            }
            let (v, off) = cur.read_uint("expected sample")?;
            if v > maxval {
                return Err(PgmError::SampleOutOfRange {
                    offset: off,
                    value: v,
                    maxval,
                });
            }
            pixels.push(v as u8);
        }
    }
    Ok(SketchRaster::new(width, height, pixels)?)
}

/// Encodes a raster as binary P5 with maxval 255.
pub fn write_pgm(raster: &SketchRaster) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", raster.width, raster.height);
    let mut out = Vec::with_capacity(header.len() + raster.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&raster.pixels);
    out
}

/// Lists the `.pgm` files of a directory in lexicographic order.
pub fn list_pgm_files(dir: &Path) -> Result<Vec<PathBuf>, FrameDirError> {
    let io_err = |source| FrameDirError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_pgm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn read_pgm_file(path: &Path) -> Result<SketchRaster, FrameDirError> {
    let bytes = fs::read(path).map_err(|source| FrameDirError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_pgm(&bytes).map_err(|source| FrameDirError::Decode {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads every PGM frame of a directory, ordered by file name.
pub fn read_frame_dir(dir: &Path) -> Result<Vec<(PathBuf, SketchRaster)>, FrameDirError> {
    let files = list_pgm_files(dir)?;
    if files.is_empty() {
        return Err(FrameDirError::Empty(dir.to_path_buf()));
    }
    files
        .into_iter()
        .map(|p| read_pgm_file(&p).map(|r| (p, r)))
        .collect()
}
