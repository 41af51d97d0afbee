use super::{Landscape, LandscapeParams, Region, Sample};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::RngCore;

/// `x ↦ f((x - z) / R)` for an inner landscape `f`.
///
/// Gradients pick up a factor `1/R` and Hessians `1/R²`, so GD with step `η`
/// here follows GD with step `η/R²` on the inner landscape.
#[derive(Debug, Clone)]
pub struct Rescaled<T> {
    inner: T,
    shift: Vec<f64>,
    radius: f64,
}

pub fn affine_rescale<T: Landscape>(inner: T, shift: Vec<f64>, radius: f64) -> Result<Rescaled<T>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("rescaling radius must be positive, got {radius}")));
    }
    if shift.len() != inner.dim() {
        return Err(Error::Parameter(format!(
            "shift has {} entries, landscape has dimension {}",
            shift.len(),
            inner.dim()
        )));
    }
    Ok(Rescaled { inner, shift, radius })
}

impl<T: Landscape> Rescaled<T> {
    pub fn inner(&self) -> &T {
        &self.inner
    }

    /// `h(x) = (x - z) / R`
    pub fn to_inner(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(a, z)| (a - z) / self.radius).collect()
    }

    pub fn from_inner(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.shift).map(|(a, z)| self.radius * a + z).collect()
    }
}

impl<T: Landscape> Landscape for Rescaled<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn locate(&self, x: &[f64]) -> Region {
        self.inner.locate(&self.to_inner(x))
    }

    fn eval_into(&self, x: &[f64], grad: &mut [f64]) -> Result<Sample> {
        let sample = self.inner.eval_into(&self.to_inner(x), grad)?;
        grad.iter_mut().for_each(|g| *g /= self.radius);
        Ok(sample)
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.inner.hessian(&self.to_inner(x))? / (self.radius * self.radius))
    }

    fn sample_domain(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.from_inner(&self.inner.sample_domain(rng))
    }

    fn params(&self) -> Option<&LandscapeParams> {
        None
    }

    fn step_curvature(&self) -> Option<f64> {
        self.inner.step_curvature().map(|c| c / (self.radius * self.radius))
    }

    fn scale(&self) -> f64 {
        let offset = self.shift.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        self.radius * self.inner.scale() + offset
    }

    fn distance_to_minimum(&self, x: &[f64]) -> Option<f64> {
        self.inner.distance_to_minimum(&self.to_inner(x)).map(|d| d * self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::Octopus;
    use rand::SeedableRng;
    use std::f64::consts::E;

    #[test]
    fn identity_transform() {
        let o = Octopus::new(LandscapeParams::new(3, E, 1.0, E)).unwrap();
        let r = affine_rescale(o.clone(), vec![0.0; 3], 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = o.sample_domain(&mut rng);
            assert_eq!(o.eval(&x).unwrap(), r.eval(&x).unwrap());
            assert_eq!(o.hessian(&x).unwrap(), r.hessian(&x).unwrap());
        }
    }

    #[test]
    fn shifted_saddle_has_zero_gradient() {
        let o = Octopus::new(LandscapeParams::new(3, E, 1.0, E)).unwrap();
        let z = vec![1.0, -2.0, 0.5];
        let r = affine_rescale(o, z.clone(), 10.0).unwrap();
        assert!(r.eval(&z).unwrap().grad.iter().all(|&g| g == 0.0));
        let h = r.hessian(&z).unwrap();
        assert!((h[(0, 0)] + 2.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_radius() {
        let o = Octopus::new(LandscapeParams::new(2, E, 1.0, E)).unwrap();
        assert!(affine_rescale(o.clone(), vec![0.0; 2], 0.0).is_err());
        assert!(affine_rescale(o.clone(), vec![0.0; 2], -1.0).is_err());
        assert!(affine_rescale(o, vec![0.0; 3], 1.0).is_err());
    }
}
