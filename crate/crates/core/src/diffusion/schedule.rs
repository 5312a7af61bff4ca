use serde::{Deserialize, Serialize};

use super::DiffusionError;

pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 2e-2;

/// Per-step retained-signal coefficients `alpha_t` and their running
/// products `alpha_bar_t`, indexed by step `t` in `1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Linear beta schedule from `beta_start` to `beta_end` over `steps` steps.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self, DiffusionError> {
        if steps == 0 {
            return Err(DiffusionError::InvalidSchedule("at least one step is required".into()));
        }
        let betas = (0..steps).map(|i| {
            if steps == 1 {
                beta_start
            } else {
                beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
            }
        });
        Self::from_alphas(betas.map(|b| 1.0 - b).collect())
    }

    /// The default linear schedule (`1e-4` to `2e-2`).
    pub fn default_linear(steps: usize) -> Result<Self, DiffusionError> {
        Self::linear(steps, DEFAULT_BETA_START, DEFAULT_BETA_END)
    }

    pub fn from_alphas(alphas: Vec<f64>) -> Result<Self, DiffusionError> {
        if alphas.is_empty() {
            return Err(DiffusionError::InvalidSchedule("at least one step is required".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(DiffusionError::InvalidSchedule(format!("alpha {a} outside (0, 1]")));
        }
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self { alphas, alpha_bars })
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn check_step(&self, t: usize) -> Result<(), DiffusionError> {
        if t == 0 || t > self.steps() {
            return Err(DiffusionError::StepOutOfRange { t, steps: self.steps() });
        }
        Ok(())
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn beta(&self, t: usize) -> f64 {
        1.0 - self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t - 1]
    }

    /// `alpha_bar_{t-1}`, with `alpha_bar_0 = 1`.
    pub fn alpha_bar_prev(&self, t: usize) -> f64 {
        if t <= 1 {
            1.0
        } else {
            self.alpha_bars[t - 2]
        }
    }

    /// Posterior variance `beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)`;
    /// zero at `t = 1`.
    pub fn posterior_variance(&self, t: usize) -> f64 {
        let denom = 1.0 - self.alpha_bar(t);
        if denom <= 0.0 {
            return 0.0;
        }
        self.beta(t) * (1.0 - self.alpha_bar_prev(t)) / denom
    }
}
