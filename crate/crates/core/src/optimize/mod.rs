//! Gradient descent and perturbed gradient descent.

mod config;
mod sampling;
mod trajectory;

pub use config::{GdConfig, PgdConfig};
pub use sampling::{
    sample_ball, sample_init, seeded_rng, stream_id, trial_rng, InitScheme, Stream, TrialRng,
};
pub use trajectory::{
    RunConfig, RunSummary, StepObserver, StepRecord, StopReason, StoredPoint, Trajectory,
    TrajectoryRecorder,
};

use crate::error::{Error, Result};
use crate::landscape::Landscape;

/// Iterates beyond `DIVERGENCE_FACTOR * scale` in sup norm abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

fn check_start(landscape: &dyn Landscape, x0: &[f64]) -> Result<()> {
    if x0.len() != landscape.dim() {
        return Err(Error::Parameter(format!(
            "initial point has {} coordinates, landscape has dimension {}",
            x0.len(),
            landscape.dim()
        )));
    }
    Ok(())
}

struct Stepper<'a> {
    landscape: &'a dyn Landscape,
    cfg: &'a GdConfig,
    limit: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(landscape: &'a dyn Landscape, cfg: &'a GdConfig, x0: &[f64]) -> Self {
        Stepper {
            landscape,
            cfg,
            limit: DIVERGENCE_FACTOR * landscape.scale(),
            x: x0.to_vec(),
            grad: vec![0.0; x0.len()],
        }
    }

    fn observe(&mut self, iter: u64) -> Result<StepRecord> {
        let sample = self.landscape.eval_into(&self.x, &mut self.grad)?;
        Ok(StepRecord {
            iter,
            f: sample.value,
            grad_norm: norm(&self.grad),
            kind: sample.kind,
            saddle_index: sample.saddle_index,
            noise_added: false,
            oob: sample.oob,
            dist_to_min: self.landscape.distance_to_minimum(&self.x),
        })
    }

    fn stop_reason(&self, rec: &StepRecord) -> Option<StopReason> {
        if self.cfg.stop_grad_norm.is_some_and(|eps| rec.grad_norm <= eps) {
            return Some(StopReason::GradNorm);
        }
        match (self.cfg.stop_dist_to_min, rec.dist_to_min) {
            (Some(tol), Some(dist)) if dist <= tol => Some(StopReason::DistToMin),
            _ => None,
        }
    }

    /// `x ← x - η ∇f`, using whatever gradient is currently in the buffer.
    fn step(&mut self, iter: u64) -> Result<()> {
        let eta = self.cfg.eta;
        self.x.iter_mut().zip(&self.grad).for_each(|(x, g)| *x -= eta * g);
        let max_abs = self.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(max_abs <= self.limit) {
            return Err(Error::Divergence { iter, max_abs });
        }
        Ok(())
    }
}

/// Runs GD from `x0`, streaming every iterate to `observer`.
pub fn run_gd_observed<O: StepObserver>(
    landscape: &dyn Landscape,
    x0: &[f64],
    cfg: &GdConfig,
    mut observer: O,
) -> Result<RunSummary> {
    cfg.validate(landscape)?;
    check_start(landscape, x0)?;
    let mut s = Stepper::new(landscape, cfg, x0);
    let mut t = 0;
    loop {
        let rec = s.observe(t)?;
        observer.on_step(&rec, &s.x);
        let stop = s.stop_reason(&rec).or((t == cfg.max_iters).then_some(StopReason::MaxIters));
        if let Some(stop) = stop {
            observer.on_finish(&rec, &s.x, stop);
            return Ok(RunSummary {
                last: rec,
                final_point: s.x,
                stop,
            });
        }
        t += 1;
        s.step(t)?;
    }
}

/// Runs PGD from `x0`, streaming every iterate to `observer`.
///
/// A perturbation drawn uniformly from the ball of radius `r` is added when
/// `‖∇f‖ <= g_thres` and more than `t_thres` steps have passed since the last
/// one; the step is then taken from the perturbed point.
pub fn run_pgd_observed<O: StepObserver>(
    landscape: &dyn Landscape,
    x0: &[f64],
    cfg: &PgdConfig,
    mut observer: O,
) -> Result<RunSummary> {
    cfg.validate(landscape)?;
    check_start(landscape, x0)?;
    let mut rng = seeded_rng(cfg.seed, cfg.stream);
    let gd = &cfg.gd;
    let mut s = Stepper::new(landscape, gd, x0);
    let t_thres = i128::from(cfg.t_thres);
    let mut t_noise = -t_thres - 1;
    let mut t = 0;
    loop {
        let mut rec = s.observe(t)?;
        let stop = s.stop_reason(&rec).or((t == gd.max_iters).then_some(StopReason::MaxIters));
        if let Some(stop) = stop {
            observer.on_step(&rec, &s.x);
            observer.on_finish(&rec, &s.x, stop);
            return Ok(RunSummary {
                last: rec,
                final_point: s.x,
                stop,
            });
        }
        if rec.grad_norm <= cfg.g_thres && i128::from(t) - t_noise > t_thres {
            rec.noise_added = true;
            observer.on_step(&rec, &s.x);
            let xi = sample_ball(&mut rng, s.x.len(), cfg.r);
            observer.on_perturbation(t, &xi);
            s.x.iter_mut().zip(&xi).for_each(|(x, e)| *x += e);
            t_noise = i128::from(t);
            landscape.eval_into(&s.x, &mut s.grad)?;
        } else {
            observer.on_step(&rec, &s.x);
        }
        t += 1;
        s.step(t)?;
    }
}

pub fn run_gd(landscape: &dyn Landscape, x0: &[f64], cfg: &GdConfig) -> Result<Trajectory> {
    let mut rec = TrajectoryRecorder::new(cfg.store_every, 1);
    run_gd_observed(landscape, x0, cfg, &mut rec)?;
    Ok(rec.finish(RunConfig::Gd(cfg.clone()), None, landscape.params().copied()))
}

pub fn run_pgd(landscape: &dyn Landscape, x0: &[f64], cfg: &PgdConfig) -> Result<Trajectory> {
    let mut rec = TrajectoryRecorder::new(cfg.gd.store_every, 1);
    run_pgd_observed(landscape, x0, cfg, &mut rec)?;
    Ok(rec.finish(
        RunConfig::Pgd(cfg.clone()),
        Some(cfg.seed),
        landscape.params().copied(),
    ))
}
