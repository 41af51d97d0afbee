//! Objective functions: the mirrored saddle chain ("octopus"), the two
//! planar warm-up landscapes, and an affine reparametrisation wrapper.

mod affine;
mod octopus;
mod params;
mod warmup;

pub use affine::{affine_rescale, Rescaled};
pub use octopus::{locate_region, Octopus, StationaryKind, StationaryPoint};
pub use params::{LandscapeDocument, LandscapeParams, OobPolicy};
pub use warmup::{thin_band_start, warmup_far_away, warmup_thin_band, FarAway, ThinBand};

use crate::error::Result;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::RngCore;
use serde::Serialize;
use std::fmt;

/// Which piece of a piecewise objective a point falls in.
///
/// Indices are 1-based saddle indices. `Ramp` and `RampConnector` only occur
/// on the far-away warm-up landscape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionKind {
    Quadratic(usize),
    ConnectorXY(usize),
    ConnectorXd,
    Optimum,
    OutOfDomain,
    Ramp,
    RampConnector,
}

impl RegionKind {
    pub fn label(&self) -> &'static str {
        match self {
            RegionKind::Quadratic(_) => "quadratic",
            RegionKind::ConnectorXY(_) => "connector_xy",
            RegionKind::ConnectorXd => "connector_xd",
            RegionKind::Optimum => "optimum",
            RegionKind::OutOfDomain => "out_of_domain",
            RegionKind::Ramp => "ramp",
            RegionKind::RampConnector => "ramp_connector",
        }
    }

    pub fn is_connector(&self) -> bool {
        matches!(
            self,
            RegionKind::ConnectorXY(_) | RegionKind::ConnectorXd | RegionKind::RampConnector
        )
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionKind::Quadratic(i) | RegionKind::ConnectorXY(i) => write!(f, "{}({i})", self.label()),
            _ => f.write_str(self.label()),
        }
    }
}

/// Region of a point: piece kind, branch sign pattern and active saddle index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub kind: RegionKind,
    /// `+1`/`-1` per coordinate; zero coordinates count as `+1`.
    pub signs: Vec<i8>,
    /// `1..=d` for saddle blocks, `d + 1` for the optimum, `0` outside.
    pub saddle_index: usize,
}

/// Scalar result of one evaluation; the gradient is written to a caller buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub kind: RegionKind,
    pub saddle_index: usize,
    /// Set when the point was outside the domain and evaluation was redirected.
    pub oob: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    pub region: Region,
    pub oob: bool,
}

/// A twice-differentiable objective with analytic derivatives.
pub trait Landscape: Send + Sync {
    fn dim(&self) -> usize;

    fn locate(&self, x: &[f64]) -> Region;

    /// Value at `x`; writes the gradient into `grad`.
    fn eval_into(&self, x: &[f64], grad: &mut [f64]) -> Result<Sample>;

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    /// Draws a point from the domain, stratified over pieces where that applies.
    fn sample_domain(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    fn params(&self) -> Option<&LandscapeParams> {
        None
    }

    /// Curvature used to validate step sizes (`L` for the octopus).
    fn step_curvature(&self) -> Option<f64> {
        None
    }

    /// Length scale of the domain, used by the divergence guard.
    fn scale(&self) -> f64 {
        1.0
    }

    fn distance_to_minimum(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn eval(&self, x: &[f64]) -> Result<Evaluation> {
        let mut grad = vec![0.0; self.dim()];
        let sample = self.eval_into(x, &mut grad)?;
        Ok(Evaluation {
            value: sample.value,
            grad,
            region: self.locate(x),
            oob: sample.oob,
        })
    }
}

impl<T: Landscape + ?Sized> Landscape for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn locate(&self, x: &[f64]) -> Region {
        (**self).locate(x)
    }
    fn eval_into(&self, x: &[f64], grad: &mut [f64]) -> Result<Sample> {
        (**self).eval_into(x, grad)
    }
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (**self).hessian(x)
    }
    fn sample_domain(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (**self).sample_domain(rng)
    }
    fn params(&self) -> Option<&LandscapeParams> {
        (**self).params()
    }
    fn step_curvature(&self) -> Option<f64> {
        (**self).step_curvature()
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn distance_to_minimum(&self, x: &[f64]) -> Option<f64> {
        (**self).distance_to_minimum(x)
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.min()
}

/// Largest absolute eigenvalue of a symmetric matrix (its operator norm).
pub fn spectral_norm(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.amax()
}

pub(crate) fn sign_of(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}
