use crate::error::{Error, Result};
use crate::landscape::Landscape;
use serde::{Deserialize, Serialize};

/// Plain gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub eta: f64,
    /// Number of steps; the trajectory holds `max_iters + 1` iterates unless a
    /// stopping rule fires first.
    pub max_iters: u64,
    /// Stop at the first iterate with `‖∇f‖ <= stop_grad_norm`.
    #[serde(default)]
    pub stop_grad_norm: Option<f64>,
    /// Stop at the first iterate within this distance of the global minimum.
    #[serde(default)]
    pub stop_dist_to_min: Option<f64>,
    /// Keep every `store_every`-th point (region changes and perturbations are
    /// always kept). `None` keeps none except the first and last.
    #[serde(default = "default_store_every")]
    pub store_every: Option<u64>,
}

fn default_store_every() -> Option<u64> {
    Some(1)
}

impl GdConfig {
    pub fn new(eta: f64, max_iters: u64) -> Self {
        GdConfig {
            eta,
            max_iters,
            stop_grad_norm: None,
            stop_dist_to_min: None,
            store_every: Some(1),
        }
    }

    pub fn with_stop_grad_norm(mut self, eps: f64) -> Self {
        self.stop_grad_norm = Some(eps);
        self
    }

    pub fn with_stop_dist_to_min(mut self, dist: f64) -> Self {
        self.stop_dist_to_min = Some(dist);
        self
    }

    pub fn with_store_every(mut self, every: Option<u64>) -> Self {
        self.store_every = every;
        self
    }

    /// Rejects `η > 2/L` outright and warns above `1/(2L)`.
    pub fn validate(&self, landscape: &dyn Landscape) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Parameter(format!("step size must be positive, got {}", self.eta)));
        }
        if self.store_every == Some(0) {
            return Err(Error::Parameter("store_every must be at least 1".into()));
        }
        if let Some(c) = landscape.step_curvature() {
            if self.eta > 2.0 / c {
                return Err(Error::Parameter(format!(
                    "step size {} exceeds 2/L = {}",
                    self.eta,
                    2.0 / c
                )));
            }
            if self.eta > 0.5 / c {
                log::warn!("step size {} is above 1/(2L) = {}", self.eta, 0.5 / c);
            }
        }
        Ok(())
    }
}

/// Perturbed gradient descent settings on top of the GD ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    #[serde(flatten)]
    pub gd: GdConfig,
    /// Perturbation radius.
    pub r: f64,
    /// Minimum number of steps between two perturbations.
    pub t_thres: u64,
    /// Gradient norm below which a perturbation may be added.
    pub g_thres: f64,
    pub seed: u64,
    /// ChaCha stream of the noise generator.
    #[serde(default)]
    pub stream: u64,
}

impl PgdConfig {
    pub fn new(gd: GdConfig, r: f64, t_thres: u64, g_thres: f64, seed: u64) -> Self {
        PgdConfig {
            gd,
            r,
            t_thres,
            g_thres,
            seed,
            stream: 0,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self, landscape: &dyn Landscape) -> Result<()> {
        self.gd.validate(landscape)?;
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::Parameter(format!("perturbation radius must be >= 0, got {}", self.r)));
        }
        if !(self.g_thres >= 0.0 && self.g_thres.is_finite()) {
            return Err(Error::Parameter(format!("g_thres must be >= 0, got {}", self.g_thres)));
        }
        Ok(())
    }
}
