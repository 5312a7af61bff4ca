//! TempSpatial attention.
//!
//! Each frame's queries attend over keys and values stacked from frame 1,
//! frame 2 and the preceding frame. Q, K and V arrive already projected;
//! the kernel is single-head scaled dot-product attention with a
//! max-subtracted softmax.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttentionError {
    #[error("matrix data holds {actual} values, expected {rows}x{cols}")]
    BadMatrix { rows: usize, cols: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("frame index {index} outside 1..={frames}")]
    FrameOutOfRange { index: usize, frames: usize },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AttentionError> {
        if data.len() != rows * cols {
            return Err(AttentionError::BadMatrix {
                rows,
                cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Stacks matrices along the row (token) axis.
    pub fn vstack(parts: &[&Matrix]) -> Result<Self, AttentionError> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if parts.iter().any(|m| m.cols != cols) {
            return Err(AttentionError::Shape("stacked matrices differ in width".into()));
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        let data = parts.iter().flat_map(|m| m.data.iter().copied()).collect();
        Ok(Self { rows, cols, data })
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Source frames (1-based) whose keys and values frame `index` attends to.
///
/// Frame 1 attends to itself, frame 2 to frames 1 and 2, and frame `i >= 3`
/// to frames 1, 2 and `i - 1`, with repeated sources dropped.
pub fn kv_policy(index: usize, frames: usize) -> Result<Vec<usize>, AttentionError> {
    if index == 0 || index > frames {
        return Err(AttentionError::FrameOutOfRange { index, frames });
    }
    let mut sources = match index {
        1 => vec![1],
        2 => vec![1, 2],
        i => vec![1, 2, i - 1],
    };
    sources.dedup();
    Ok(sources)
}

/// Output rows and the softmax weights that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionResult {
    pub output: Matrix,
    pub weights: Matrix,
}

/// `softmax(Q K^T / sqrt(d_k)) V`.
pub fn scaled_dot_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<AttentionResult, AttentionError> {
    if q.cols != k.cols {
        return Err(AttentionError::Shape(format!(
            "query width {} != key width {}",
            q.cols, k.cols
        )));
    }
    if k.rows != v.rows {
        return Err(AttentionError::Shape(format!(
            "{} keys but {} values",
            k.rows, v.rows
        )));
    }
    if k.rows == 0 || q.cols == 0 {
        return Err(AttentionError::Shape("empty key set or zero key width".into()));
    }
    for (m, name) in [(q, "queries"), (k, "keys"), (v, "values")] {
        if !m.is_finite() {
            return Err(AttentionError::NonFinite(name));
        }
    }

    let scale = 1.0 / (q.cols as f64).sqrt();
    let mut weights = Matrix::zeros(q.rows, k.rows);
    let mut output = Matrix::zeros(q.rows, v.cols);
    for r in 0..q.rows {
        let qr = q.row(r);
        let logits = &mut weights.data[r * k.rows..(r + 1) * k.rows];
        for (j, logit) in logits.iter_mut().enumerate() {
            *logit = qr.iter().zip(k.row(j)).map(|(a, b)| a * b).sum::<f64>() * scale;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for w in logits.iter_mut() {
            *w = (*w - max).exp();
            sum += *w;
        }
        for w in logits.iter_mut() {
            *w /= sum;
        }
        let out = &mut output.data[r * v.cols..(r + 1) * v.cols];
        for (j, &w) in logits.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(v.row(j)) {
                *o += w * x;
            }
        }
    }
    Ok(AttentionResult { output, weights })
}

/// Per-frame projected queries, keys and values.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenVolume {
    queries: Vec<Matrix>,
    keys: Vec<Matrix>,
    values: Vec<Matrix>,
}

impl TokenVolume {
    /// Every frame must share `n x d_k` queries and keys and `n x d_v` values.
    pub fn new(queries: Vec<Matrix>, keys: Vec<Matrix>, values: Vec<Matrix>) -> Result<Self, AttentionError> {
        let frames = queries.len();
        if frames == 0 || keys.len() != frames || values.len() != frames {
            return Err(AttentionError::Shape(format!(
                "frame counts q={} k={} v={}",
                frames,
                keys.len(),
                values.len()
            )));
        }
        let (n, dk, dv) = (queries[0].rows, queries[0].cols, values[0].cols);
        if n == 0 || dk == 0 || dv == 0 {
            return Err(AttentionError::Shape("dimensions must be at least 1".into()));
        }
        for f in 0..frames {
            let ok = (queries[f].rows, queries[f].cols) == (n, dk)
                && (keys[f].rows, keys[f].cols) == (n, dk)
                && (values[f].rows, values[f].cols) == (n, dv);
            if !ok {
                return Err(AttentionError::Shape(format!("frame {} has inconsistent shapes", f + 1)));
            }
            for (m, name) in [(&queries[f], "queries"), (&keys[f], "keys"), (&values[f], "values")] {
                if !m.is_finite() {
                    return Err(AttentionError::NonFinite(name));
                }
            }
        }
        Ok(Self {
            queries,
            keys,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.queries.len()
    }

    pub fn tokens(&self) -> usize {
        self.queries[0].rows
    }

    pub fn queries(&self, frame: usize) -> &Matrix {
        &self.queries[frame - 1]
    }

    pub fn keys(&self, frame: usize) -> &Matrix {
        &self.keys[frame - 1]
    }

    pub fn values(&self, frame: usize) -> &Matrix {
        &self.values[frame - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAttention {
    /// 1-based frame index.
    pub frame: usize,
    pub sources: Vec<usize>,
    pub output: Matrix,
    pub weights: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub frames: Vec<FrameAttention>,
}

/// Attention for a single (1-based) frame of the volume.
pub fn attend_frame(vol: &TokenVolume, frame: usize) -> Result<FrameAttention, AttentionError> {
    let sources = kv_policy(frame, vol.frames())?;
    let keys: Vec<&Matrix> = sources.iter().map(|&s| vol.keys(s)).collect();
    let values: Vec<&Matrix> = sources.iter().map(|&s| vol.values(s)).collect();
    let k = Matrix::vstack(&keys)?;
    let v = Matrix::vstack(&values)?;
    let AttentionResult { output, weights } = scaled_dot_attention(vol.queries(frame), &k, &v)?;
    Ok(FrameAttention {
        frame,
        sources,
        output,
        weights,
    })
}

pub fn tempspatial_attention(vol: &TokenVolume) -> Result<AttentionOutput, AttentionError> {
    let frames = (1..=vol.frames())
        .map(|f| attend_frame(vol, f))
        .collect::<Result<_, _>>()?;
    Ok(AttentionOutput { frames })
}
