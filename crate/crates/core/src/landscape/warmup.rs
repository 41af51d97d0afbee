//! Planar warm-ups with a single strict saddle at the origin.

use super::{sign_of, Landscape, Region, RegionKind, Sample};
use crate::error::{Error, Result};
use crate::spline::{hermite_fit, Polynomial};
use nalgebra::DMatrix;
use num_bigint::BigUint;
use rand::{Rng, RngCore};

/// `f(x1, x2) = x1² - x2²`, defined on the whole plane.
///
/// The neighbourhood of interest is `U = [-1, 1]²`; GD with `η = 1/4` halves
/// `x1` and multiplies `x2` by `3/2` each step.
#[derive(Debug, Clone, Default)]
pub struct ThinBand;

pub fn warmup_thin_band() -> ThinBand {
    ThinBand
}

/// Smallest double not below `(2/3)^n`.
///
/// Rounding to nearest can land one ulp under `(2/3)^n`, and from there the
/// exact GD orbit needs `n + 1` steps to reach `|x2| >= 1`.
pub fn thin_band_start(n: u32) -> f64 {
    let mut c = 1.5f64.powi(-(n as i32));
    while !not_below_two_thirds_pow(c, n) {
        c = c.next_up();
    }
    while not_below_two_thirds_pow(c.next_down(), n) {
        c = c.next_down();
    }
    c
}

/// Exact test of `c >= (2/3)^n`, i.e. `c * 3^n >= 2^n`.
fn not_below_two_thirds_pow(c: f64, n: u32) -> bool {
    if c <= 0.0 {
        return false;
    }
    let bits = c.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    let lhs = BigUint::from(m) * BigUint::from(3u32).pow(n);
    let two = BigUint::from(1u32);
    if e >= 0 {
        (lhs << e as usize) >= (two << n as usize)
    } else {
        lhs >= (two << (n as usize + e.unsigned_abs() as usize))
    }
}

impl Landscape for ThinBand {
    fn dim(&self) -> usize {
        2
    }

    fn locate(&self, x: &[f64]) -> Region {
        Region {
            kind: RegionKind::Quadratic(1),
            signs: x.iter().map(|&v| sign_of(v)).collect(),
            saddle_index: 1,
        }
    }

    fn eval_into(&self, x: &[f64], grad: &mut [f64]) -> Result<Sample> {
        if x.len() != 2 || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        grad[0] = 2.0 * x[0];
        grad[1] = -2.0 * x[1];
        Ok(Sample {
            value: x[0] * x[0] - x[1] * x[1],
            kind: RegionKind::Quadratic(1),
            saddle_index: 1,
            oob: false,
        })
    }

    fn hessian(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0]))
    }

    fn sample_domain(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]
    }

    fn step_curvature(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Long linear ramp feeding the saddle at the origin.
///
/// * `x1 < -2`: `-4 x1 + x2²`
/// * `-2 <= x1 <= -1`: `h1(x1) + h2(x1) x2²`
/// * `-1 < x1 <= 1`: `x1² - x2² + offset`
///
/// `h1` integrates a cubic Hermite slope from `-4` to `-2` (curvature `0` to
/// `2`) and `h2` moves the `x2²` coefficient from `1` to `-1` with vanishing
/// first and second derivatives. `offset` absorbs the value mismatch so the
/// ramp keeps its exact form. Domain: `x1 <= 1`, `|x2| <= 1`.
#[derive(Debug, Clone)]
pub struct FarAway {
    h1: Polynomial,
    h2: Polynomial,
    offset: f64,
}

pub fn warmup_far_away() -> FarAway {
    let slope = hermite_fit(-2.0, -1.0, -4.0, -2.0, 0.0, 2.0).expect("fixed unit interval");
    let h1 = slope.as_polynomial().antiderivative().shifted(8.0);
    let h2 = Polynomial::new(-2.0, vec![1.0, 0.0, 0.0, -20.0, 30.0, -12.0]);
    let offset = h1.eval(-1.0) - 1.0;
    FarAway { h1, h2, offset }
}

impl FarAway {
    /// Constant added to the saddle piece.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn kind_of(&self, x: &[f64]) -> RegionKind {
        let inside = x.len() == 2 && x.iter().all(|v| v.is_finite()) && x[0] <= 1.0 && x[1].abs() <= 1.0;
        if !inside {
            RegionKind::OutOfDomain
        } else if x[0] < -2.0 {
            RegionKind::Ramp
        } else if x[0] <= -1.0 {
            RegionKind::RampConnector
        } else {
            RegionKind::Quadratic(1)
        }
    }

    /// Evaluates one piece's formula at `x` regardless of where `x` lies.
    pub fn piece(&self, kind: RegionKind, x: &[f64]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let (a, b) = (x[0], x[1]);
        match kind {
            RegionKind::Ramp => (-4.0 * a + b * b, [-4.0, 2.0 * b], [[0.0, 0.0], [0.0, 2.0]]),
            RegionKind::RampConnector => {
                let (v1, d1, dd1) = self.h1.eval_with_derivs(a);
                let (v2, d2, dd2) = self.h2.eval_with_derivs(a);
                let b2 = b * b;
                (
                    v1 + v2 * b2,
                    [d1 + d2 * b2, 2.0 * v2 * b],
                    [[dd1 + dd2 * b2, 2.0 * d2 * b], [2.0 * d2 * b, 2.0 * v2]],
                )
            }
            RegionKind::Quadratic(_) => (
                a * a - b * b + self.offset,
                [2.0 * a, -2.0 * b],
                [[2.0, 0.0], [0.0, -2.0]],
            ),
            _ => panic!("{kind} is not a far-away piece"),
        }
    }
}

impl Landscape for FarAway {
    fn dim(&self) -> usize {
        2
    }

    fn locate(&self, x: &[f64]) -> Region {
        let kind = self.kind_of(x);
        Region {
            kind,
            signs: x.iter().map(|&v| sign_of(v)).collect(),
            saddle_index: usize::from(kind != RegionKind::OutOfDomain),
        }
    }

    fn eval_into(&self, x: &[f64], grad: &mut [f64]) -> Result<Sample> {
        let kind = self.kind_of(x);
        if kind == RegionKind::OutOfDomain {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let (value, g, _) = self.piece(kind, x);
        grad.copy_from_slice(&g);
        Ok(Sample {
            value,
            kind,
            saddle_index: 1,
            oob: false,
        })
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let kind = self.kind_of(x);
        if kind == RegionKind::OutOfDomain {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let (_, _, h) = self.piece(kind, x);
        Ok(DMatrix::from_row_slice(2, 2, &[h[0][0], h[0][1], h[1][0], h[1][1]]))
    }

    fn sample_domain(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(-6.0..=1.0), rng.random_range(-1.0..=1.0)]
    }

    fn step_curvature(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gd_step(f: &impl Landscape, x: &[f64], eta: f64) -> Vec<f64> {
        let g = f.eval(x).unwrap().grad;
        x.iter().zip(&g).map(|(a, b)| a - eta * b).collect()
    }

    #[test]
    fn thin_band_step() {
        let f = warmup_thin_band();
        assert_eq!(gd_step(&f, &[1.0, 1.0], 0.25), vec![0.5, 1.5]);
        assert_eq!(gd_step(&f, &[0.0, 0.0], 0.25), vec![0.0, 0.0]);
    }

    #[test]
    fn thin_band_exit_iteration() {
        let f = warmup_thin_band();
        for n in [1, 10, 200] {
            let mut x = vec![0.3, thin_band_start(n)];
            let mut t = 0;
            while x[1].abs() < 1.0 {
                x = gd_step(&f, &x, 0.25);
                t += 1;
            }
            assert_eq!(t, n, "x2 = {}", x[1]);
        }
    }

    #[test]
    fn thin_band_orbit_rounding() {
        // each step rounds 1.5 * x2 once; after 50 steps the orbit sits a few ulps below 1
        let f = warmup_thin_band();
        let mut x = vec![0.3, thin_band_start(50)];
        for _ in 0..50 {
            x = gd_step(&f, &x, 0.25);
        }
        assert!(x[1] < 1.0);
        assert!((x[1] - 1.0).abs() <= 64.0 * f64::EPSILON);
    }

    #[test]
    fn thin_band_start_brackets_power() {
        assert_eq!(thin_band_start(0), 1.0);
        assert_eq!(thin_band_start(1), (2.0f64 / 3.0).next_up());
        for n in [10, 50, 200, 1000] {
            let c = thin_band_start(n);
            assert!(not_below_two_thirds_pow(c, n));
            assert!(!not_below_two_thirds_pow(c.next_down(), n));
            assert!((c / 1.5f64.powi(-(n as i32)) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn far_away_ramp_values() {
        let f = warmup_far_away();
        let e = f.eval(&[-3.0, 0.0]).unwrap();
        assert_eq!(e.value, 12.0);
        assert_eq!(e.grad[0], -4.0);
        assert_eq!(gd_step(&f, &[-3.0, 1.0], 0.25), vec![-2.0, 0.5]);
    }

    #[test]
    fn far_away_pieces_agree_on_faces() {
        let f = warmup_far_away();
        for b in [-1.0, -0.4, 0.0, 0.7, 1.0] {
            for (a, left, right) in [
                (-2.0, RegionKind::Ramp, RegionKind::RampConnector),
                (-1.0, RegionKind::RampConnector, RegionKind::Quadratic(1)),
            ] {
                let (v0, g0, h0) = f.piece(left, &[a, b]);
                let (v1, g1, h1) = f.piece(right, &[a, b]);
                assert!((v0 - v1).abs() <= 1e-8, "value at ({a}, {b})");
                for i in 0..2 {
                    assert!((g0[i] - g1[i]).abs() <= 1e-10);
                    for j in 0..2 {
                        assert!((h0[i][j] - h1[i][j]).abs() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn far_away_connector_keeps_moving_right() {
        let f = warmup_far_away();
        for k in 0..=100 {
            let a = -2.0 + k as f64 / 100.0;
            for b in [-1.0, 0.0, 0.5, 1.0] {
                let g = f.eval(&[a, b]).unwrap().grad;
                assert!(g[0] < 0.0);
            }
        }
    }

    #[test]
    fn far_away_domain() {
        let f = warmup_far_away();
        assert!(f.eval(&[1.5, 0.0]).is_err());
        assert!(f.eval(&[-50.0, 1.5]).is_err());
        assert_eq!(f.locate(&[-1.0, 0.0]).kind, RegionKind::RampConnector);
        assert_eq!(f.locate(&[-0.5, 0.0]).kind, RegionKind::Quadratic(1));
    }
}
