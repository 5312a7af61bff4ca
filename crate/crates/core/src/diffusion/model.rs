//! Denoiser and adapter interfaces, plus the toy implementations used by
//! the generation harness.

use super::{DiffusionError, FrameLatentVolume, VolumeShape};
use crate::raster::SketchRaster;
use crate::sequence::FinalSequence;

/// Callback through which a denoiser exposes hidden states for residual
/// injection. Called once per injection site with the site index.
pub type InjectionHook<'a> = dyn FnMut(usize, &mut FrameLatentVolume) + 'a;

/// Noise predictor `eps_theta(x_t, f, t, z)`.
///
/// `predict_noise` returns a volume shaped like `x_t` whose frame `f` is the
/// prediction for frame `f`. Before consuming the hidden state at each of its
/// injection sites the denoiser must pass it through `inject`.
pub trait Denoiser {
    /// Opaque conditioning (prompt and sketch information).
    type Condition: ?Sized;

    /// Hidden-state shapes of the injection sites for latents of `latent` shape.
    fn injection_sites(&self, latent: VolumeShape) -> Vec<VolumeShape> {
        vec![latent]
    }

    fn predict_noise(
        &self,
        x_t: &FrameLatentVolume,
        t: usize,
        cond: &Self::Condition,
        inject: &mut InjectionHook<'_>,
    ) -> FrameLatentVolume;
}

/// A hook that leaves every hidden state untouched.
pub fn no_injection(_site: usize, _hidden: &mut FrameLatentVolume) {}

/// Produces per-site residual features from the sketch sequence.
pub trait Adapter {
    fn features(&self, sketches: &FinalSequence, sites: &[VolumeShape]) -> Result<Vec<FrameLatentVolume>, DiffusionError>;
}

/// Element-wise affine noise predictor shared across frames:
/// `eps[f, e] = weight[e] * h[f, e] + bias[e]`, where `h` is the input
/// latent after residual injection (its single injection site).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDenoiser {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient of the masked loss with respect to [`AffineDenoiser`] parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGradient {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl AffineDenoiser {
    pub fn new(weight: Vec<f64>, bias: Vec<f64>) -> Result<Self, DiffusionError> {
        if weight.is_empty() || weight.len() != bias.len() {
            return Err(DiffusionError::Shape(format!(
                "affine denoiser needs equal non-empty weight/bias, got {}/{}",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self { weight, bias })
    }

    /// `eps = scale * h` on every element.
    pub fn uniform(frame_len: usize, scale: f64) -> Self {
        Self {
            weight: vec![scale; frame_len],
            bias: vec![0.0; frame_len],
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_frame_len(&self, shape: VolumeShape) -> Result<(), DiffusionError> {
        if shape.frame_len() != self.weight.len() {
            return Err(DiffusionError::Shape(format!(
                "affine denoiser has {} parameters per element set, frame holds {}",
                self.weight.len(),
                shape.frame_len()
            )));
        }
        Ok(())
    }

    fn apply(&self, hidden: &FrameLatentVolume) -> FrameLatentVolume {
        let n = self.weight.len();
        let data = hidden
            .data()
            .iter()
            .enumerate()
            .map(|(i, &h)| self.weight[i % n] * h + self.bias[i % n])
            .collect();
        FrameLatentVolume::new(hidden.shape(), data).expect("shape preserved")
    }

    /// Masked loss (frames `2..=F`) and its exact gradient for a noised
    /// input `x_t` whose true noise is `noise`.
    pub fn loss_and_gradient(
        &self,
        x_t: &FrameLatentVolume,
        noise: &FrameLatentVolume,
    ) -> Result<(f64, AffineGradient), DiffusionError> {
        x_t.check_same_shape(noise, "noise does not match latent")?;
        let shape = x_t.shape();
        self.check_frame_len(shape)?;
        if shape.frames < 2 {
            return Err(DiffusionError::NoTrainableFrames);
        }
        let n = shape.frame_len();
        let count = ((shape.frames - 1) * n) as f64;
        let mut loss = 0.0;
        let mut gw = vec![0.0; n];
        let mut gb = vec![0.0; n];
        for f in 2..=shape.frames {
            for (e, (&h, &eps)) in x_t.frame(f).iter().zip(noise.frame(f)).enumerate() {
                let r = self.weight[e] * h + self.bias[e] - eps;
                loss += r * r;
                gw[e] += 2.0 * r * h / count;
                gb[e] += 2.0 * r / count;
            }
        }
        Ok((
            loss / count,
            AffineGradient {
                weight: gw,
                bias: gb,
            },
        ))
    }

    /// One plain gradient-descent update; returns the loss before the update.
    pub fn descend(
        &mut self,
        x_t: &FrameLatentVolume,
        noise: &FrameLatentVolume,
        learning_rate: f64,
    ) -> Result<f64, DiffusionError> {
        let (loss, grad) = self.loss_and_gradient(x_t, noise)?;
        for (w, g) in self.weight.iter_mut().zip(&grad.weight) {
            *w -= learning_rate * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= learning_rate * g;
        }
        Ok(loss)
    }
}

impl Denoiser for AffineDenoiser {
    type Condition = ();

    fn predict_noise(
        &self,
        x_t: &FrameLatentVolume,
        _t: usize,
        _cond: &(),
        inject: &mut InjectionHook<'_>,
    ) -> FrameLatentVolume {
        assert_eq!(
            x_t.shape().frame_len(),
            self.weight.len(),
            "affine denoiser parameter count does not match latent frame size"
        );
        let mut hidden = x_t.clone();
        inject(0, &mut hidden);
        self.apply(&hidden)
    }
}

/// Area-weighted resampling matrix from `src` cells to `dst` cells: row `o`
/// holds the overlap fraction of each source cell with output cell `o`.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * ratio, (o + 1) as f64 * ratio);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|i| {
                    let overlap = hi.min(i as f64 + 1.0) - lo.max(i as f64);
                    (overlap > 0.0).then_some((i, overlap / ratio))
                })
                .collect()
        })
        .collect()
}

/// Rescales intensities to `[-1, 1]` and area-averages them to
/// `height x width`.
pub fn pool_sketch(raster: &SketchRaster, height: usize, width: usize) -> Vec<f64> {
    let rows = area_weights(raster.height(), height);
    let cols = area_weights(raster.width(), width);
    let mut out = Vec::with_capacity(height * width);
    for row in &rows {
        for col in &cols {
            let mut acc = 0.0;
            for &(y, wy) in row {
                for &(x, wx) in col {
                    acc += wy * wx * (f64::from(raster.get(x, y)) / 127.5 - 1.0);
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Encodes a single sketch as a one-frame latent, broadcast over channels.
pub fn latent_from_sketch(raster: &SketchRaster, channels: usize, height: usize, width: usize) -> FrameLatentVolume {
    let pooled = pool_sketch(raster, height, width);
    let data = (0..channels).flat_map(|_| pooled.iter().copied()).collect();
    FrameLatentVolume::new(VolumeShape::new(1, channels, height, width), data).expect("finite pooled values")
}

/// Stand-in adapter features: every frame's sketch pooled to each site's
/// spatial size and broadcast across the site's channels.
pub fn default_adapter_features(
    sketches: &FinalSequence,
    sites: &[VolumeShape],
) -> Result<Vec<FrameLatentVolume>, DiffusionError> {
    sites
        .iter()
        .map(|site| {
            if site.frames != sketches.len() {
                return Err(DiffusionError::Shape(format!(
                    "site expects {} frames, sketch sequence has {}",
                    site.frames,
                    sketches.len()
                )));
            }
            let mut data = Vec::with_capacity(site.len());
            for frame in &sketches.frames {
                let pooled = pool_sketch(frame, site.height, site.width);
                for _ in 0..site.channels {
                    data.extend_from_slice(&pooled);
                }
            }
            FrameLatentVolume::new(*site, data)
        })
        .collect()
}

/// [`Adapter`] backed by [`default_adapter_features`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SketchPoolAdapter;

impl Adapter for SketchPoolAdapter {
    fn features(&self, sketches: &FinalSequence, sites: &[VolumeShape]) -> Result<Vec<FrameLatentVolume>, DiffusionError> {
        default_adapter_features(sketches, sites)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(frames: Vec<SketchRaster>) -> FinalSequence {
        FinalSequence { frames }
    }

    #[test]
    fn white_and_black_sketches() {
        let site = VolumeShape::new(1, 3, 2, 2);
        let white = default_adapter_features(&seq(vec![SketchRaster::filled(8, 8, 255).unwrap()]), &[site]).unwrap();
        assert!(white[0].data().iter().all(|&v| v == 1.0));
        let black = default_adapter_features(&seq(vec![SketchRaster::filled(8, 8, 0).unwrap()]), &[site]).unwrap();
        assert!(black[0].data().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn checkerboard_pools_to_zero() {
        let px = (0..16).map(|p| if (p % 4 + p / 4) % 2 == 0 { 0 } else { 255 }).collect();
        let board = SketchRaster::new(4, 4, px).unwrap();
        let f = default_adapter_features(&seq(vec![board]), &[VolumeShape::new(1, 2, 1, 1)]).unwrap();
        assert_eq!(f[0].data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_integer_pooling_ratio() {
        // 3 columns into 2 cells: cell 0 = col0 + half col1, cell 1 = half col1 + col2
        let r = SketchRaster::new(3, 1, vec![0, 255, 255]).unwrap();
        let pooled = pool_sketch(&r, 1, 2);
        assert!((pooled[0] - (-1.0 * 2.0 / 3.0 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((pooled[1] - 1.0).abs() < 1e-12);
        // upsampling repeats values
        let up = pool_sketch(&r, 2, 6);
        assert_eq!(&up[..6], &[-1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn multiple_sites_and_frame_check() {
        let s = seq(vec![SketchRaster::filled(4, 4, 255).unwrap(); 3]);
        let sites = [VolumeShape::new(3, 1, 4, 4), VolumeShape::new(3, 2, 2, 2)];
        let f = default_adapter_features(&s, &sites).unwrap();
        assert_eq!(f[0].shape(), sites[0]);
        assert_eq!(f[1].shape(), sites[1]);
        assert!(default_adapter_features(&s, &[VolumeShape::new(2, 1, 2, 2)]).is_err());
    }

    #[test]
    fn affine_prediction_uses_injected_input() {
        let shape = VolumeShape::new(2, 1, 1, 2);
        let d = AffineDenoiser::new(vec![2.0, 3.0], vec![1.0, 0.0]).unwrap();
        let x = FrameLatentVolume::new(shape, vec![1.0, 1.0, 2.0, -1.0]).unwrap();
        let eps = d.predict_noise(&x, 5, &(), &mut no_injection);
        assert_eq!(eps.data(), &[3.0, 3.0, 5.0, -3.0]);
        let eps = d.predict_noise(&x, 5, &(), &mut |_, h: &mut FrameLatentVolume| {
            h.data_mut().iter_mut().for_each(|v| *v += 1.0)
        });
        assert_eq!(eps.data(), &[5.0, 6.0, 7.0, 0.0]);
        assert!(AffineDenoiser::new(vec![1.0], vec![]).is_err());
    }
}
