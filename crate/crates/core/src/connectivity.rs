//! 8-connected component labelling and the connectivity score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::BinaryMask;

/// Default assumed maximum number of components.
pub const DEFAULT_MAX_COMPONENTS: u32 = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConnectivityError {
    #[error("maximum component count must be at least 1")]
    ZeroMaxComponents,
}

/// Per-pixel component ids: 0 is ground, `1..=count` are components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLabeling {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: u32,
}

impl ComponentLabeling {
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count of each component, indexed by `label - 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count as usize];
        for &l in &self.labels {
            if l > 0 {
                sizes[(l - 1) as usize] += 1;
            }
        }
        sizes
    }
}

/// Labels ink components under 8-adjacency by depth-first search.
///
/// Pixels are visited in raster order; each unvisited ink pixel starts a new
/// traversal and a new label. The traversal uses an explicit stack, so blob
/// size is not limited by call depth.
pub fn label_components(mask: &BinaryMask) -> ComponentLabeling {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut count = 0u32;
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if mask.bits()[q] && labels[q] == 0 {
                        labels[q] = count;
                        stack.push(q);
                    }
                }
            }
        }
    }

    ComponentLabeling {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// `1 - L / L_max`, clamped to `[0, 1]`.
pub fn connectivity_score(components: u32, max_components: u32) -> Result<f64, ConnectivityError> {
    if max_components == 0 {
        return Err(ConnectivityError::ZeroMaxComponents);
    }
    let score = 1.0 - f64::from(components) / f64::from(max_components);
    Ok(score.clamp(0.0, 1.0))
}
