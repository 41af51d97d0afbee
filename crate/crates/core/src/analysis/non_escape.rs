use crate::error::{Error, Result};
use crate::landscape::{LandscapeParams, Octopus};
use crate::optimize::{
    run_gd, run_gd_observed, sample_init, trial_rng, GdConfig, InitScheme, StepObserver, StepRecord,
    Stream, Trajectory,
};
use serde::Serialize;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

/// First trial in which `|x_d|` passed `2τ` within the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonEscapeWitness {
    pub trial: u64,
    pub x0: Vec<f64>,
    pub iter: u64,
    pub x_d: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonEscapeOutcome {
    pub pass: bool,
    /// Horizon `⌈((L+γ)/γ)^(d-1)⌉`.
    pub steps: u64,
    pub trials: u64,
    /// Largest `|x_d|` seen over all trials and steps.
    pub max_abs_x_d: f64,
    pub witness: Option<NonEscapeWitness>,
}

/// `⌈((L+γ)/γ)^(d-1)⌉`
pub fn non_escape_horizon(params: &LandscapeParams) -> f64 {
    params.escape_factor().powi(params.d as i32 - 1).ceil()
}

struct LastCoordinate {
    bound: f64,
    max_abs: f64,
    first_violation: Option<(u64, f64)>,
}

impl StepObserver for LastCoordinate {
    fn on_step(&mut self, record: &StepRecord, x: &[f64]) {
        let v = x[x.len() - 1].abs();
        self.max_abs = self.max_abs.max(v);
        if v > self.bound && self.first_violation.is_none() {
            self.first_violation = Some((record.iter, v));
        }
    }
}

/// Runs GD from `trials` uniform draws on `[0,1]^d` and checks that the last
/// coordinate stays within `2τ` for the whole horizon.
pub fn verify_non_escape(
    params: &LandscapeParams,
    eta: f64,
    trials: u64,
    seed: u64,
    budget: u64,
) -> Result<NonEscapeOutcome> {
    params.validate()?;
    if params.tau_below_escape_regime() {
        return Err(Error::Parameter(format!("τ = {} is below e", params.tau)));
    }
    if eta > 0.5 / params.l {
        return Err(Error::Parameter(format!("η = {eta} exceeds 1/(2L)")));
    }
    let horizon = non_escape_horizon(params);
    if !(horizon <= budget as f64) {
        return Err(Error::Budget {
            steps: horizon.min(u64::MAX as f64) as u64,
            budget,
        });
    }
    let steps = horizon as u64;
    let octopus = Octopus::new(*params)?;
    let cfg = GdConfig::new(eta, steps).with_store_every(None);
    let mut max_abs_x_d = 0.0f64;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial, Stream::Init);
        let x0 = sample_init(&mut rng, params.d, InitScheme::Cube { lo: 0.0, hi: 1.0 });
        let mut watch = LastCoordinate {
            bound: 2.0 * params.tau,
            max_abs: 0.0,
            first_violation: None,
        };
        run_gd_observed(&octopus, &x0, &cfg, &mut watch)?;
        max_abs_x_d = max_abs_x_d.max(watch.max_abs);
        if let Some((iter, x_d)) = watch.first_violation {
            let trajectory = run_gd(&octopus, &x0, &cfg.clone().with_store_every(Some(1)))?;
            return Ok(NonEscapeOutcome {
                pass: false,
                steps,
                trials,
                max_abs_x_d,
                witness: Some(NonEscapeWitness {
                    trial,
                    x0,
                    iter,
                    x_d,
                    trajectory,
                }),
            });
        }
    }
    Ok(NonEscapeOutcome {
        pass: true,
        steps,
        trials,
        max_abs_x_d,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn horizons() {
        assert_eq!(non_escape_horizon(&LandscapeParams::new(2, E, 1.0, E)), 4.0);
        assert_eq!(non_escape_horizon(&LandscapeParams::new(5, E, 1.0, E)), 192.0);
    }

    #[test]
    fn d5_passes() {
        let p = LandscapeParams::new(5, E, 1.0, E);
        let out = verify_non_escape(&p, 1.0 / (2.0 * E), 100, 0, DEFAULT_STEP_BUDGET).unwrap();
        assert!(out.pass);
        assert_eq!(out.steps, 192);
        assert!(out.max_abs_x_d <= 2.0 * E);
        assert!(out.witness.is_none());
    }

    #[test]
    fn d2_passes() {
        let p = LandscapeParams::new(2, E, 1.0, E);
        let out = verify_non_escape(&p, 1.0 / (4.0 * E), 50, 3, DEFAULT_STEP_BUDGET).unwrap();
        assert!(out.pass);
        assert_eq!(out.steps, 4);
    }

    #[test]
    fn budget_and_preconditions() {
        let p = LandscapeParams::new(20, E, 1.0, E);
        assert!(matches!(
            verify_non_escape(&p, 0.1, 1, 0, DEFAULT_STEP_BUDGET),
            Err(Error::Budget { .. })
        ));
        let p = LandscapeParams::new(3, E, 1.0, E);
        assert!(verify_non_escape(&p, 1.0 / E, 1, 0, DEFAULT_STEP_BUDGET).is_err());
        let p = LandscapeParams::new(3, E, 1.0, 1.0);
        assert!(verify_non_escape(&p, 0.1, 1, 0, DEFAULT_STEP_BUDGET).is_err());
    }
}
