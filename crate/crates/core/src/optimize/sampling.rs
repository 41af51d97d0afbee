use crate::error::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Seedable generator used for every random draw in a run.
pub type TrialRng = ChaCha8Rng;

/// Which of a trial's independent streams to open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Noise = 1,
}

/// Stream id for `(trial, purpose)`. Trials below `2^63` never share a stream;
/// larger indices wrap.
pub fn stream_id(trial: u64, purpose: Stream) -> u64 {
    trial.wrapping_mul(2) | purpose as u64
}

/// Generator for one trial, derived from the master seed and the trial index.
pub fn trial_rng(master_seed: u64, trial: u64, purpose: Stream) -> TrialRng {
    seeded_rng(master_seed, stream_id(trial, purpose))
}

pub fn seeded_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the Euclidean ball of radius `r` in `d` dimensions.
pub fn sample_ball<R: RngCore + ?Sized>(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    if r == 0.0 || d == 0 {
        return vec![0.0; d];
    }
    let mut v: Vec<f64> = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().any(|x: &f64| *x != 0.0) {
            break v;
        }
    };
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = r * rng.random::<f64>().powf(1.0 / d as f64);
    v.iter_mut().for_each(|x| *x *= radius / norm);
    v
}

/// Initialization distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitScheme {
    /// Uniform on `[-1, 1]^d`.
    UnitCube,
    Cube { lo: f64, hi: f64 },
    Gaussian { sigma: f64 },
}

impl InitScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitScheme::UnitCube => Ok(()),
            InitScheme::Cube { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(()),
            InitScheme::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            other => Err(Error::Parameter(format!("invalid init scheme {other}"))),
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScheme::UnitCube => f.write_str("unitcube"),
            InitScheme::Cube { lo, hi } => write!(f, "cube:{lo},{hi}"),
            InitScheme::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("cannot parse init scheme '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let scheme = match s.split_once(':') {
            None if s == "unitcube" => InitScheme::UnitCube,
            Some(("gaussian", sigma)) => InitScheme::Gaussian { sigma: num(sigma)? },
            Some(("cube", bounds)) => {
                let (lo, hi) = bounds.split_once(',').ok_or_else(bad)?;
                InitScheme::Cube {
                    lo: num(lo)?,
                    hi: num(hi)?,
                }
            }
            _ => return Err(bad()),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

pub fn sample_init<R: RngCore + ?Sized>(rng: &mut R, d: usize, scheme: InitScheme) -> Vec<f64> {
    match scheme {
        InitScheme::UnitCube => (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        InitScheme::Cube { lo, hi } => (0..d).map(|_| rng.random_range(lo..=hi)).collect(),
        InitScheme::Gaussian { sigma } => (0..d)
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    }
}
