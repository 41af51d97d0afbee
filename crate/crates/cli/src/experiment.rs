use crate::args::{Algo, ExperimentArgs};
use crate::failure::{usage, Failure};
use octopus::landscape::LandscapeParams;
use octopus::optimize::InitScheme;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::path::{Path, PathBuf};

/// Dimensions from here on are refused: `((L+γ)/γ)^(d-1)` step counts are out of reach.
pub const MAX_DIM: usize = 24;
pub const DEFAULT_PGD_ITERS: u64 = 1_000_000;
pub const DEFAULT_STOP_DIST: f64 = 0.1;
/// Target number of thinned rows per trajectory file.
const TARGET_ROWS: u64 = 10_000;

/// JSON experiment file. Keys mirror the long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: Option<Vec<usize>>,
    #[serde(rename = "L")]
    pub l: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub algo: Option<Algo>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub init: Option<String>,
    pub tthres: Option<u64>,
    pub gthres: Option<f64>,
    pub r: Option<f64>,
    pub max_iters: Option<u64>,
    /// `null` disables stopping.
    #[serde(default, deserialize_with = "explicit_option")]
    pub stop_dist: Option<Option<f64>>,
    pub record_every: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn explicit_option<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Option<Option<f64>>, D::Error> {
    Option::<f64>::deserialize(de).map(Some)
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub dims: Vec<usize>,
    #[serde(rename = "L")]
    pub ls: Vec<f64>,
    pub gamma: f64,
    pub tau: f64,
    pub eta: Option<f64>,
    pub algo: Algo,
    pub trials: u64,
    pub seed: u64,
    pub init: String,
    #[serde(skip)]
    pub init_scheme: InitScheme,
    pub tthres: u64,
    pub gthres: f64,
    pub r: f64,
    pub max_iters: Option<u64>,
    pub stop_dist: Option<f64>,
    pub record_every: Option<u64>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub jobs: Option<usize>,
}

/// One (d, L, algorithm) cell of the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub params: LandscapeParams,
    pub algo: Algo,
    pub eta: f64,
    pub max_iters: u64,
    pub record_every: u64,
}

impl Cell {
    pub fn tag(&self) -> String {
        format!("d{}_L{}_{}", self.params.d, self.params.l, self.algo.name())
    }
}

/// GD default: ten times the non-escape bound `((L+γ)/γ)^(d-1) / (2ηγ)`.
pub fn default_gd_iters(params: &LandscapeParams, eta: f64) -> u64 {
    let bound = params.escape_factor().powi(params.d as i32 - 1) / (2.0 * eta * params.gamma);
    10 * bound.ceil() as u64
}

impl ExperimentSpec {
    /// Flags override the config file, which overrides the defaults.
    /// `sweep` allows several dimensions; `run` takes exactly one.
    pub fn resolve(args: &ExperimentArgs, sweep: bool) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let default_dims = if sweep { vec![5, 10] } else { vec![5] };
        let gamma = args.gamma.or(file.gamma).unwrap_or(1.0);
        let init = match (&args.init, &file.init) {
            (Some(s), _) => *s,
            (None, Some(text)) => text.parse().map_err(|e: octopus::Error| usage(e.to_string()))?,
            (None, None) => InitScheme::UnitCube,
        };
        let stop_dist = if args.no_stop {
            None
        } else {
            match (args.stop_dist, file.stop_dist) {
                (Some(v), _) => Some(v),
                (None, Some(v)) => v,
                (None, None) => Some(DEFAULT_STOP_DIST),
            }
        };
        let spec = ExperimentSpec {
            dims: args.d.clone().or(file.d).unwrap_or(default_dims),
            ls: args.l.clone().or(file.l).unwrap_or_else(|| vec![1.0, 1.5, 2.0, 3.0]),
            gamma,
            tau: args.tau.or(file.tau).unwrap_or(E),
            eta: args.eta.or(file.eta),
            algo: args.algo.or(file.algo).unwrap_or(Algo::Both),
            trials: args.trials.or(file.trials).unwrap_or(100),
            seed: args.seed.or(file.seed).unwrap_or(0),
            init: init.to_string(),
            init_scheme: init,
            tthres: args.tthres.or(file.tthres).unwrap_or(1),
            gthres: args.gthres.or(file.gthres).unwrap_or(gamma * E / 100.0),
            r: args.r.or(file.r).unwrap_or(E / 100.0),
            max_iters: args.max_iters.or(file.max_iters),
            stop_dist,
            record_every: args.record_every.or(file.record_every),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("octopus-out")),
            jobs: args.jobs.or(file.jobs),
        };
        spec.validate(sweep)?;
        Ok(spec)
    }

    fn validate(&self, sweep: bool) -> Result<(), Failure> {
        if self.dims.is_empty() || self.ls.is_empty() {
            return Err(usage("the d and L lists must not be empty"));
        }
        if !sweep && self.dims.len() != 1 {
            return Err(usage("run takes a single --d; use sweep for several"));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d > MAX_DIM) {
            return Err(usage(format!(
                "d = {d} is refused: step counts grow like ((L+γ)/γ)^(d-1); use d <= {MAX_DIM}"
            )));
        }
        if self.trials == 0 {
            return Err(usage("trials must be at least 1"));
        }
        let positive = [
            ("eta", self.eta.unwrap_or(1.0)),
            ("gthres", self.gthres),
            ("r", self.r),
            ("stop-dist", self.stop_dist.unwrap_or(1.0)),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(usage(format!("{name} must be positive, got {v}")));
        }
        if self.max_iters == Some(0) || self.record_every == Some(0) || self.jobs == Some(0) {
            return Err(usage("max-iters, record-every and jobs must be at least 1"));
        }
        self.init_scheme.validate()?;
        for params in self.landscapes() {
            params.validate()?;
        }
        Ok(())
    }

    pub fn landscapes(&self) -> impl Iterator<Item = LandscapeParams> + '_ {
        self.dims
            .iter()
            .flat_map(move |&d| self.ls.iter().map(move |&l| LandscapeParams::new(d, l, self.gamma, self.tau)))
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.landscapes()
            .flat_map(|params| {
                let eta = self.eta.unwrap_or(1.0 / (4.0 * params.l));
                self.algo.expand().iter().map(move |&algo| {
                    let max_iters = self.max_iters.unwrap_or(match algo {
                        Algo::Pgd => DEFAULT_PGD_ITERS,
                        _ => default_gd_iters(&params, eta),
                    });
                    let record_every = self.record_every.unwrap_or((max_iters / TARGET_ROWS).max(1));
                    Cell {
                        params,
                        algo,
                        eta,
                        max_iters,
                        record_every,
                    }
                })
            })
            .collect()
    }
}
