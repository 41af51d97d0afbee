use crate::error::{Error, Result};
use crate::landscape::{spectral_norm, Landscape};
use crate::optimize::{sample_ball, seeded_rng, TrialRng};
use serde::Serialize;

/// Sampled lower bounds on the bound `B`, gradient Lipschitz constant `ℓ` and
/// Hessian Lipschitz constant `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothnessEstimate {
    pub b_hat: f64,
    pub ell_hat: f64,
    pub rho_hat: f64,
    pub sample_count: u64,
    pub pair_scale: f64,
}

/// Running maxima over point pairs `(x, x + pair_scale·u)`, `u` a random unit
/// vector and `x` a stratified domain draw.
pub struct SmoothnessEstimator<'a> {
    landscape: &'a dyn Landscape,
    rng: TrialRng,
    estimate: SmoothnessEstimate,
}

/// Directions tried per base point before the point is dropped.
const DIRECTION_TRIES: usize = 32;

impl<'a> SmoothnessEstimator<'a> {
    pub fn new(landscape: &'a dyn Landscape, pair_scale: f64, seed: u64) -> Result<Self> {
        if !(pair_scale > 0.0 && pair_scale.is_finite()) {
            return Err(Error::Parameter(format!("pair_scale must be positive, got {pair_scale}")));
        }
        Ok(SmoothnessEstimator {
            landscape,
            rng: seeded_rng(seed, 0),
            estimate: SmoothnessEstimate {
                b_hat: 0.0,
                ell_hat: 0.0,
                rho_hat: 0.0,
                sample_count: 0,
                pair_scale,
            },
        })
    }

    pub fn estimate(&self) -> SmoothnessEstimate {
        self.estimate
    }

    /// Draws `n` more pairs.
    pub fn add(&mut self, n: u64) -> Result<SmoothnessEstimate> {
        let d = self.landscape.dim();
        let h = self.estimate.pair_scale;
        for _ in 0..n {
            let x = self.landscape.sample_domain(&mut self.rng);
            let ex = self.landscape.eval(&x)?;
            let hx = self.landscape.hessian(&x)?;
            self.estimate.sample_count += 1;
            self.estimate.b_hat = self.estimate.b_hat.max(ex.value.abs());
            for _ in 0..DIRECTION_TRIES {
                let mut u = sample_ball(&mut self.rng, d, 1.0);
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                u.iter_mut().for_each(|v| *v *= h / norm);
                let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
                let Ok(ey) = self.landscape.eval(&y) else {
                    continue;
                };
                if ey.oob {
                    continue;
                }
                let hy = self.landscape.hessian(&y)?;
                let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let dg = ex.grad.iter().zip(&ey.grad).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let e = &mut self.estimate;
                e.b_hat = e.b_hat.max(ey.value.abs());
                e.ell_hat = e.ell_hat.max(dg / dist);
                e.rho_hat = e.rho_hat.max(spectral_norm(&(&hx - &hy)) / dist);
                break;
            }
        }
        Ok(self.estimate)
    }
}

pub fn estimate_smoothness(
    landscape: &dyn Landscape,
    samples: u64,
    pair_scale: f64,
    seed: u64,
) -> Result<SmoothnessEstimate> {
    if samples == 0 {
        return Err(Error::Parameter("at least one sample is required".into()));
    }
    SmoothnessEstimator::new(landscape, pair_scale, seed)?.add(samples)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Parameter("log-log fit needs at least two positive pairs".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("log-log fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{warmup_thin_band, LandscapeParams, Octopus};
    use std::f64::consts::E;

    #[test]
    fn thin_band_gradient_constant() {
        let e = estimate_smoothness(&warmup_thin_band(), 500, 0.1, 1).unwrap();
        assert!((e.ell_hat - 2.0).abs() < 1e-12);
        assert_eq!(e.rho_hat, 0.0);
        assert!(e.b_hat <= 1.0 + 0.2 + 0.01);
    }

    #[test]
    fn octopus_curvature_lower_bound() {
        let o = Octopus::new(LandscapeParams::new(2, E, 1.0, E)).unwrap();
        let e = estimate_smoothness(&o, 2000, 0.05, 2).unwrap();
        assert!(e.ell_hat >= 2.0 * E - 1e-9, "{e:?}");
        assert!(e.rho_hat > 0.0 && e.rho_hat.is_finite());
        assert!(e.b_hat > 0.0 && e.b_hat.is_finite());
        assert_eq!(e.sample_count, 2000);
    }

    #[test]
    fn running_max_is_monotone() {
        let o = Octopus::new(LandscapeParams::new(3, E, 1.0, E)).unwrap();
        let mut est = SmoothnessEstimator::new(&o, 0.05, 5).unwrap();
        let mut prev = est.estimate();
        for _ in 0..20 {
            let next = est.add(50).unwrap();
            assert!(next.b_hat >= prev.b_hat && next.ell_hat >= prev.ell_hat && next.rho_hat >= prev.rho_hat);
            prev = next;
        }
        let again = estimate_smoothness(&o, 1000, 0.05, 5).unwrap();
        assert_eq!(again, prev);
    }

    #[test]
    fn rejects_bad_input() {
        let f = warmup_thin_band();
        assert!(estimate_smoothness(&f, 0, 0.1, 0).is_err());
        assert!(estimate_smoothness(&f, 10, 0.0, 0).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (2..=10).map(|d| d as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(1.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(loglog_slope(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
