use crate::error::{Error, Result};
use crate::landscape::{min_eigenvalue, Landscape, Octopus, RegionKind};
use rand::RngCore;
use serde::Serialize;

/// `‖∇f(x)‖ <= ε` and `λ_min(∇²f(x)) >= -√(ρε)`.
pub fn sosp_check(landscape: &dyn Landscape, x: &[f64], epsilon: f64, rho: f64) -> Result<bool> {
    if !(epsilon > 0.0 && rho > 0.0) {
        return Err(Error::Parameter(format!(
            "ε and ρ must be positive, got ε = {epsilon}, ρ = {rho}"
        )));
    }
    let e = landscape.eval(x)?;
    let grad_norm = e.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if grad_norm > epsilon {
        return Ok(false);
    }
    Ok(min_eigenvalue(&landscape.hessian(x)?) >= -(rho * epsilon).sqrt())
}

/// Sup-norm distance from `x` to the nearest stationary point of the octopus
/// (any saddle or minimum on any branch).
pub fn distance_to_stationary(octopus: &Octopus, x: &[f64]) -> f64 {
    let c = 4.0 * octopus.params().map(|p| p.tau).unwrap_or_default();
    let d = x.len();
    (0..=d)
        .map(|i| {
            let head = x[..i].iter().map(|v| (v.abs() - c).abs());
            let tail = x[i..].iter().map(|v| v.abs());
            head.chain(tail).fold(0.0f64, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// A point with a small gradient far from every stationary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanHit {
    pub x: Vec<f64>,
    pub kind: RegionKind,
    pub grad_norm: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub points: u64,
    pub threshold: f64,
    pub exclusion: f64,
    pub hits: Vec<ScanHit>,
}

/// Where to probe the domain.
#[derive(Debug, Clone, Copy)]
pub enum ScanPoints {
    /// Cell centres of a regular grid of the given spacing over `[-6τ, 6τ]^d`.
    Grid { spacing: f64 },
    /// Stratified random draws.
    Random { count: u64 },
}

/// Looks for points with `‖∇f‖ <= threshold` further than `exclusion`
/// (sup norm) from every catalogued stationary point.
pub fn scan_small_gradient(
    octopus: &Octopus,
    points: ScanPoints,
    threshold: f64,
    exclusion: f64,
    rng: &mut dyn RngCore,
) -> Result<ScanReport> {
    let d = octopus.dim();
    let tau = octopus.params().map(|p| p.tau).unwrap_or_default();
    let mut grad = vec![0.0; d];
    let mut report = ScanReport {
        points: 0,
        threshold,
        exclusion,
        hits: Vec::new(),
    };
    let mut probe = |x: &[f64], report: &mut ScanReport| -> Result<()> {
        if octopus.locate(x).kind == RegionKind::OutOfDomain {
            return Ok(());
        }
        let s = octopus.eval_into(x, &mut grad)?;
        report.points += 1;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= threshold {
            let distance = distance_to_stationary(octopus, x);
            if distance > exclusion {
                report.hits.push(ScanHit {
                    x: x.to_vec(),
                    kind: s.kind,
                    grad_norm,
                    distance,
                });
            }
        }
        Ok(())
    };
    match points {
        ScanPoints::Grid { spacing } => {
            if !(spacing > 0.0) {
                return Err(Error::Parameter(format!("grid spacing must be positive, got {spacing}")));
            }
            let n = (12.0 * tau / spacing).ceil() as usize;
            let total = (n as f64).powi(d as i32);
            if total > 1e8 {
                return Err(Error::Parameter(format!("grid of {total:e} points is too large")));
            }
            let coord = |k: usize| -6.0 * tau + (k as f64 + 0.5) * spacing;
            let mut idx = vec![0usize; d];
            let mut x = vec![0.0; d];
            'outer: loop {
                x.iter_mut().zip(&idx).for_each(|(v, &k)| *v = coord(k));
                probe(&x, &mut report)?;
                for j in 0..d {
                    idx[j] += 1;
                    if idx[j] < n {
                        continue 'outer;
                    }
                    idx[j] = 0;
                }
                break;
            }
        }
        ScanPoints::Random { count } => {
            for _ in 0..count {
                let x = octopus.sample_domain(rng);
                probe(&x, &mut report)?;
            }
        }
    }
    Ok(report)
}
