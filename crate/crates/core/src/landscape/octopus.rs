use super::{min_eigenvalue, sign_of, Landscape, LandscapeParams, OobPolicy, Region, RegionKind, Sample};
use crate::error::{Error, Result};
use crate::spline::{build_connectors, ConnectorSet};
use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde::Serialize;

/// Finds the piece containing `x`.
///
/// Boundaries go to connectors: `|x_i| = τ` and `|x_i| = 2τ` are both
/// assigned to the connector of saddle `i` when that connector contains `x`.
pub fn locate_region(params: &LandscapeParams, x: &[f64]) -> Region {
    let d = params.d;
    let tau = params.tau;
    let signs: Vec<i8> = x.iter().map(|&v| sign_of(v)).collect();
    let out = |signs| Region {
        kind: RegionKind::OutOfDomain,
        signs,
        saddle_index: 0,
    };
    if x.len() != d || x.iter().any(|v| !v.is_finite()) {
        return out(signs);
    }

    let k = x.iter().position(|v| v.abs() < 2.0 * tau).unwrap_or(d);
    if x[..k].iter().any(|v| v.abs() > 6.0 * tau) {
        return out(signs);
    }
    if k < d && x[k + 1..].iter().any(|v| v.abs() > tau) {
        return out(signs);
    }

    // |x_{k-1}| sitting exactly on 2τ belongs to the previous connector.
    let (k, kind) = if k > 0 && x[k - 1].abs() == 2.0 * tau && (k == d || x[k].abs() <= tau) {
        (k - 1, connector_kind(k - 1, d))
    } else if k == d {
        (d, RegionKind::Optimum)
    } else if x[k].abs() < tau {
        (k, RegionKind::Quadratic(k + 1))
    } else {
        (k, connector_kind(k, d))
    };
    Region {
        kind,
        signs,
        saddle_index: k + 1,
    }
}

fn connector_kind(k: usize, d: usize) -> RegionKind {
    if k + 1 < d {
        RegionKind::ConnectorXY(k + 1)
    } else {
        RegionKind::ConnectorXd
    }
}

/// The mirrored chain of `d` strict saddles leading to `2^d` minima.
#[derive(Debug, Clone)]
pub struct Octopus {
    params: LandscapeParams,
    connectors: ConnectorSet,
    oob_policy: OobPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StationaryKind {
    StrictSaddle,
    LocalMinimum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub location: Vec<f64>,
    pub kind: StationaryKind,
    pub lambda_min: f64,
    /// Strictness `α`; `2γ` at the saddles, `0` at the minimum.
    pub alpha: f64,
    pub grad_norm: f64,
    pub value: f64,
}

impl Octopus {
    pub fn new(params: LandscapeParams) -> Result<Self> {
        Self::with_policy(params, OobPolicy::Error)
    }

    pub fn with_policy(params: LandscapeParams, oob_policy: OobPolicy) -> Result<Self> {
        params.validate()?;
        let connectors = build_connectors(&params)?;
        Ok(Self {
            params,
            connectors,
            oob_policy,
        })
    }

    pub fn connectors(&self) -> &ConnectorSet {
        &self.connectors
    }

    pub fn nu(&self) -> f64 {
        self.connectors.nu
    }

    pub fn oob_policy(&self) -> OobPolicy {
        self.oob_policy
    }

    /// Evaluates the formula of one piece at `x`, regardless of where `x` lies.
    ///
    /// `signs` selects the mirrored branch. Used to compare neighbouring
    /// pieces on shared faces.
    pub fn piece_value_grad(&self, kind: RegionKind, signs: &[i8], x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let LandscapeParams { d, l, gamma, tau } = self.params;
        let nu = self.connectors.nu;
        let mut set = |j: usize, v: f64| {
            if let Some(g) = grad.as_deref_mut() {
                g[j] = v;
            }
        };
        let mut value = 0.0;
        let settled = |j: usize| x[j] - 4.0 * tau * signs[j] as f64;

        // active block index (0-based) and the first coordinate still in its quadratic tail
        let (k, tail) = match kind {
            RegionKind::Quadratic(i) => (i - 1, i),
            RegionKind::ConnectorXY(i) => (i - 1, i + 1),
            RegionKind::ConnectorXd => (d - 1, d),
            RegionKind::Optimum => (d, d),
            _ => panic!("{kind} is not an octopus piece"),
        };
        for j in 0..k {
            let q = settled(j);
            value += l * q * q;
            set(j, 2.0 * l * q);
        }
        match kind {
            RegionKind::Quadratic(_) => {
                value -= gamma * x[k] * x[k];
                set(k, -2.0 * gamma * x[k]);
            }
            RegionKind::ConnectorXY(_) => {
                let s = signs[k] as f64;
                let e = self.connectors.eval_unchecked(s * x[k], x[k + 1]);
                value += e.value;
                set(k, s * e.d_xi);
                set(k + 1, e.d_xnext);
            }
            RegionKind::ConnectorXd => {
                let s = signs[k] as f64;
                let (g1, dg1, _) = self.connectors.g1(s * x[k]);
                value += g1;
                set(k, s * dg1);
            }
            _ => {}
        }
        for j in tail..d {
            value += l * x[j] * x[j];
            set(j, 2.0 * l * x[j]);
        }
        value - k as f64 * nu
    }

    pub fn piece_hessian(&self, kind: RegionKind, signs: &[i8], x: &[f64]) -> DMatrix<f64> {
        let LandscapeParams { d, l, gamma, .. } = self.params;
        let mut h = DMatrix::from_diagonal_element(d, d, 2.0 * l);
        match kind {
            RegionKind::Quadratic(i) => h[(i - 1, i - 1)] = -2.0 * gamma,
            RegionKind::ConnectorXY(i) => {
                let k = i - 1;
                let s = signs[k] as f64;
                let e = self.connectors.eval_unchecked(s * x[k], x[k + 1]);
                h[(k, k)] = e.second_partials[0][0];
                h[(k, k + 1)] = s * e.second_partials[0][1];
                h[(k + 1, k)] = s * e.second_partials[1][0];
                h[(k + 1, k + 1)] = e.second_partials[1][1];
            }
            RegionKind::ConnectorXd => {
                let k = d - 1;
                let (_, _, ddg1) = self.connectors.g1(signs[k] as f64 * x[k]);
                h[(k, k)] = ddg1;
            }
            RegionKind::Optimum => {}
            _ => panic!("{kind} is not an octopus piece"),
        }
        h
    }

    /// Nearest point of the domain (Euclidean), keeping the sign pattern of `x`.
    pub fn project_to_domain(&self, x: &[f64]) -> Vec<f64> {
        let LandscapeParams { d, tau, .. } = self.params;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..=d {
            let mut dist = 0.0;
            let mut p = Vec::with_capacity(d);
            for (j, &v) in x.iter().enumerate() {
                let (lo, hi) = if j < k {
                    (2.0 * tau, 6.0 * tau)
                } else if j == k {
                    (0.0, 2.0 * tau)
                } else {
                    (0.0, tau)
                };
                let a = v.abs();
                let c = if a.is_nan() { lo } else { a.clamp(lo, hi) };
                dist += (a - c) * (a - c);
                p.push(sign_of(v) as f64 * c);
            }
            if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                best = Some((dist, p));
            }
        }
        best.map(|(_, p)| p).unwrap_or_default()
    }

    /// Catalog of the `d` saddles and the minimum on the branch `signs`, each
    /// checked against its gradient and curvature invariant.
    pub fn stationary_points(&self, signs: &[i8]) -> Result<Vec<StationaryPoint>> {
        let LandscapeParams { d, gamma, tau, .. } = self.params;
        if signs.len() != d || signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::Parameter("branch signs must be d entries of +1/-1".into()));
        }
        let mut out = Vec::with_capacity(d + 1);
        for k in 1..=d + 1 {
            let location: Vec<f64> = (0..d)
                .map(|j| if j + 1 < k { 4.0 * tau * signs[j] as f64 } else { 0.0 })
                .collect();
            let mut grad = vec![0.0; d];
            let sample = self.eval_into(&location, &mut grad)?;
            let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            let lambda_min = min_eigenvalue(&self.hessian(&location)?);
            let (kind, alpha) = if k <= d {
                (StationaryKind::StrictSaddle, 2.0 * gamma)
            } else {
                (StationaryKind::LocalMinimum, 0.0)
            };
            let ok = grad_norm <= 1e-10
                && match kind {
                    StationaryKind::StrictSaddle => lambda_min <= -alpha + 1e-9 && alpha > 0.0,
                    StationaryKind::LocalMinimum => lambda_min >= 0.0,
                };
            if !ok {
                return Err(Error::Verification(format!(
                    "stationary point {location:?}: |grad| = {grad_norm:e}, lambda_min = {lambda_min}"
                )));
            }
            out.push(StationaryPoint {
                location,
                kind,
                lambda_min,
                alpha,
                grad_norm,
                value: sample.value,
            });
        }
        Ok(out)
    }

    /// Uniform draw from one stratum of the domain with random branch signs.
    pub fn sample_stratum(&self, kind: RegionKind, rng: &mut dyn RngCore) -> Vec<f64> {
        let LandscapeParams { d, tau, .. } = self.params;
        let (k, lo_k, hi_k) = match kind {
            RegionKind::Quadratic(i) => (i - 1, 0.0, tau),
            RegionKind::ConnectorXY(i) => (i - 1, tau, 2.0 * tau),
            RegionKind::ConnectorXd => (d - 1, tau, 2.0 * tau),
            RegionKind::Optimum => (d, 0.0, 0.0),
            _ => panic!("{kind} is not a domain stratum"),
        };
        (0..d)
            .map(|j| {
                let a = if j < k {
                    rng.random_range(2.0 * tau..=6.0 * tau)
                } else if j == k {
                    rng.random_range(lo_k..=hi_k)
                } else {
                    rng.random_range(0.0..=tau)
                };
                if rng.random::<bool>() {
                    a
                } else {
                    -a
                }
            })
            .collect()
    }

    /// All `2d + 1` strata of the domain.
    pub fn strata(&self) -> Vec<RegionKind> {
        let d = self.params.d;
        let mut kinds: Vec<RegionKind> = (1..=d).map(RegionKind::Quadratic).collect();
        kinds.extend((1..d).map(RegionKind::ConnectorXY));
        kinds.push(RegionKind::ConnectorXd);
        kinds.push(RegionKind::Optimum);
        kinds
    }

    fn resolve(&self, x: &[f64]) -> Result<(Region, Option<Vec<f64>>)> {
        let region = locate_region(&self.params, x);
        if region.kind != RegionKind::OutOfDomain {
            return Ok((region, None));
        }
        match self.oob_policy {
            OobPolicy::Error => Err(Error::OutOfDomain { point: x.to_vec() }),
            OobPolicy::FreezeGradient => {
                let p = self.project_to_domain(x);
                let region = locate_region(&self.params, &p);
                Ok((region, Some(p)))
            }
        }
    }
}

impl Landscape for Octopus {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn locate(&self, x: &[f64]) -> Region {
        locate_region(&self.params, x)
    }

    fn eval_into(&self, x: &[f64], grad: &mut [f64]) -> Result<Sample> {
        let (region, projected) = self.resolve(x)?;
        let at = projected.as_deref().unwrap_or(x);
        let value = self.piece_value_grad(region.kind, &region.signs, at, Some(grad));
        Ok(Sample {
            value,
            kind: region.kind,
            saddle_index: region.saddle_index,
            oob: projected.is_some(),
        })
    }

    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (region, projected) = self.resolve(x)?;
        let at = projected.as_deref().unwrap_or(x);
        Ok(self.piece_hessian(region.kind, &region.signs, at))
    }

    fn sample_domain(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let strata = self.strata();
        let kind = strata[rng.random_range(0..strata.len())];
        self.sample_stratum(kind, rng)
    }

    fn params(&self) -> Option<&LandscapeParams> {
        Some(&self.params)
    }

    fn step_curvature(&self) -> Option<f64> {
        Some(self.params.l)
    }

    fn scale(&self) -> f64 {
        self.params.tau
    }

    fn distance_to_minimum(&self, x: &[f64]) -> Option<f64> {
        let c = 4.0 * self.params.tau;
        Some(x.iter().map(|v| (v.abs() - c).powi(2)).sum::<f64>().sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn octopus(d: usize) -> Octopus {
        Octopus::new(LandscapeParams::new(d, E, 1.0, E)).unwrap()
    }

    #[test]
    fn locate_examples() {
        let p = LandscapeParams::new(3, E, 1.0, E);
        let r = locate_region(&p, &[0.5, 0.1, 0.1]);
        assert_eq!(r.kind, RegionKind::Quadratic(1));
        assert_eq!(r.signs, vec![1, 1, 1]);
        assert_eq!(r.saddle_index, 1);
        let r = locate_region(&p, &[4.0 * E; 3]);
        assert_eq!(r.kind, RegionKind::Optimum);
        assert_eq!(r.saddle_index, 4);
        assert_eq!(locate_region(&p, &[7.0 * E, 0.0, 0.0]).kind, RegionKind::OutOfDomain);
    }

    #[test]
    fn locate_boundaries_go_to_connectors() {
        let p = LandscapeParams::new(3, E, 1.0, E);
        assert_eq!(locate_region(&p, &[E, 0.0, 0.0]).kind, RegionKind::ConnectorXY(1));
        assert_eq!(locate_region(&p, &[2.0 * E, 0.5, 0.0]).kind, RegionKind::ConnectorXY(1));
        assert_eq!(locate_region(&p, &[-3.0 * E, 2.0 * E, 0.5]).kind, RegionKind::ConnectorXY(2));
        assert_eq!(locate_region(&p, &[3.0 * E, 3.0 * E, -2.0 * E]).kind, RegionKind::ConnectorXd);
        assert_eq!(locate_region(&p, &[3.0 * E, 3.0 * E, 1.5 * E]).kind, RegionKind::ConnectorXd);
        // connector of saddle 1 needs the tail inside [-τ, τ]
        assert_eq!(locate_region(&p, &[1.5 * E, 1.5 * E, 0.0]).kind, RegionKind::OutOfDomain);
        assert_eq!(locate_region(&p, &[f64::NAN, 0.0, 0.0]).kind, RegionKind::OutOfDomain);
        assert_eq!(locate_region(&p, &[0.0, 0.0]).kind, RegionKind::OutOfDomain);
    }

    #[test]
    fn origin_and_first_block() {
        let o = octopus(4);
        let e = o.eval(&[0.0; 4]).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.grad.iter().all(|&g| g == 0.0));
        let e = o.eval(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.region.kind, RegionKind::Quadratic(1));
        assert_eq!(e.grad, vec![-2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn optimum_value() {
        for d in [2, 3, 6] {
            let o = octopus(d);
            let e = o.eval(&vec![4.0 * E; d]).unwrap();
            assert_eq!(e.value, -(d as f64) * o.nu());
            assert!(e.grad.iter().all(|&g| g == 0.0));
            assert_eq!(o.hessian(&vec![-4.0 * E; d]).unwrap(), DMatrix::from_diagonal_element(d, d, 2.0 * E));
        }
    }

    #[test]
    fn hessian_at_origin() {
        let o = octopus(3);
        let h = o.hessian(&[0.0; 3]).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 2.0 * E, 2.0 * E]));
        assert_eq!(h, want);
    }

    #[test]
    fn connector_xd_gradient_matches_differences() {
        let o = octopus(3);
        let x = [4.0 * E, 4.0 * E, 1.3 * E];
        let e = o.eval(&x).unwrap();
        assert_eq!(e.region.kind, RegionKind::ConnectorXd);
        let h = 1e-6;
        for j in 0..3 {
            let mut a = x;
            let mut b = x;
            a[j] += h;
            b[j] -= h;
            let fd = (o.eval(&a).unwrap().value - o.eval(&b).unwrap().value) / (2.0 * h);
            assert!((fd - e.grad[j]).abs() <= 1e-5 * e.grad[j].abs().max(1.0));
        }
    }

    #[test]
    fn mirrored_connector_hessian_matches_gradient_differences() {
        let o = octopus(4);
        let x = [-4.2 * E, -1.5 * E, 0.4 * E, -0.3];
        assert_eq!(o.locate(&x).kind, RegionKind::ConnectorXY(2));
        let hess = o.hessian(&x).unwrap();
        let h = 1e-5;
        for j in 0..4 {
            let mut a = x;
            let mut b = x;
            a[j] += h;
            b[j] -= h;
            let ga = o.eval(&a).unwrap().grad;
            let gb = o.eval(&b).unwrap().grad;
            for i in 0..4 {
                let fd = (ga[i] - gb[i]) / (2.0 * h);
                assert!((fd - hess[(i, j)]).abs() <= 1e-4 * hess[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn stationary_catalog_d2() {
        let o = octopus(2);
        let pts = o.stationary_points(&[1, 1]).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].location, vec![0.0, 0.0]);
        assert_eq!(pts[1].location, vec![4.0 * E, 0.0]);
        assert_eq!(pts[2].location, vec![4.0 * E, 4.0 * E]);
        for s in &pts[..2] {
            assert_eq!(s.kind, StationaryKind::StrictSaddle);
            assert!((s.lambda_min + 2.0).abs() < 1e-9);
        }
        assert_eq!(pts[2].kind, StationaryKind::LocalMinimum);
        assert_eq!(pts[2].value, -2.0 * o.nu());
    }

    #[test]
    fn stationary_catalog_rejects_bad_signs() {
        let o = octopus(3);
        assert!(o.stationary_points(&[1, 0, 1]).is_err());
        assert!(o.stationary_points(&[1, 1]).is_err());
    }

    #[test]
    fn out_of_domain_policies() {
        let p = LandscapeParams::new(3, E, 1.0, E);
        let strict = Octopus::new(p).unwrap();
        let x = [7.0 * E, 0.0, 0.0];
        assert!(matches!(strict.eval(&x), Err(Error::OutOfDomain { .. })));
        assert!(strict.hessian(&x).is_err());

        let frozen = Octopus::with_policy(p, OobPolicy::FreezeGradient).unwrap();
        let e = frozen.eval(&x).unwrap();
        assert!(e.oob);
        let inside = frozen.eval(&[6.0 * E, 0.0, 0.0]).unwrap();
        assert_eq!(e.grad, inside.grad);
        assert_eq!(frozen.project_to_domain(&[-0.5, 1.5 * E, 0.2]), vec![-0.5, E, 0.2]);
    }

    #[test]
    fn projection_is_identity_inside() {
        let o = octopus(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let x = o.sample_domain(&mut rng);
            assert_eq!(o.project_to_domain(&x), x);
        }
    }

    #[test]
    fn strata_samples_land_in_their_stratum() {
        let o = octopus(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in o.strata() {
            for _ in 0..200 {
                let x = o.sample_stratum(kind, &mut rng);
                let found = o.locate(&x).kind;
                assert_ne!(found, RegionKind::OutOfDomain);
                // boundary draws may legitimately resolve to the neighbouring connector
                if !x.iter().any(|v| v.abs() == E || v.abs() == 2.0 * E) {
                    assert_eq!(found, kind, "{x:?}");
                }
            }
        }
    }

    #[test]
    fn distance_to_nearest_minimum() {
        let o = octopus(2);
        assert_eq!(o.distance_to_minimum(&[4.0 * E, -4.0 * E]), Some(0.0));
        let d = o.distance_to_minimum(&[0.0, 4.0 * E]).unwrap();
        assert!((d - 4.0 * E).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn mirror_symmetry(seed in 0u64..5000, flip in 0usize..5) {
            let o = octopus(5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = o.sample_domain(&mut rng);
            let mut y = x.clone();
            y[flip] = -y[flip];
            let (a, b) = (o.eval(&x).unwrap(), o.eval(&y).unwrap());
            proptest::prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0));
            proptest::prop_assert!((a.grad[flip] + b.grad[flip]).abs() <= 1e-12 * a.grad[flip].abs().max(1.0));
        }
    }
}
