//! Cubic Hermite fitting and the C² connector polynomials that stitch
//! neighbouring quadratic blocks of the landscape together.
//!
//! For a connector slab `τ ≤ y ≤ 2τ` the bivariate connector is
//! `g(y, z) = g1(y) + g2(y)·z²`, where
//!
//! * `g1` is the antiderivative of a cubic Hermite interpolant `p` that takes
//!   the slope `-2γτ` (curvature `-2γ`) at `y = τ` to the slope `-4Lτ`
//!   (curvature `2L`) at `y = 2τ`, anchored so that `g1(τ) = -γτ²`;
//! * `g2` is a quintic that moves the `z²` coefficient from `L` to `-γ` with
//!   vanishing first and second derivatives at both ends.
//!
//! The constant `ν = -g1(2τ) + 4Lτ²` offsets the next quadratic block so the
//! pieces agree to second order.

use crate::error::{Error, Result};
use crate::landscape::LandscapeParams;
use serde::Serialize;

const DEGENERATE_WIDTH: f64 = 1e-12;
pub const BOUNDARY_RTOL: f64 = 1e-10;
const G2_GRID: usize = 1000;
const BAND_GRID: usize = 200;

/// Dense polynomial in the shifted variable `y - origin`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    origin: f64,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(origin: f64, coeffs: Vec<f64>) -> Self {
        Self { origin, coeffs }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let t = y - self.origin;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Value, first and second derivative in one Horner pass.
    pub fn eval_with_derivs(&self, y: f64) -> (f64, f64, f64) {
        let t = y - self.origin;
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * t + 2.0 * dp;
            dp = dp * t + p;
            p = p * t + c;
        }
        (p, dp, ddp)
    }

    pub fn derivative(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Polynomial::new(self.origin, coeffs)
    }

    /// Antiderivative that vanishes at `origin`, computed by coefficient division.
    pub fn antiderivative(&self) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Polynomial::new(self.origin, coeffs)
    }

    /// Same polynomial with the constant term shifted by `delta`.
    pub fn shifted(mut self, delta: f64) -> Polynomial {
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
        self.coeffs[0] += delta;
        self
    }
}

/// Cubic Hermite interpolant on `[y0, y1]`, stored as coefficients in `δ = y - y0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicHermite {
    pub y0: f64,
    pub y1: f64,
    pub coeffs: [f64; 4],
}

impl CubicHermite {
    pub fn fit(y0: f64, y1: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> Result<Self> {
        let width = y1 - y0;
        if !(width >= DEGENERATE_WIDTH) {
            return Err(Error::DegenerateInterval { width });
        }
        let slope = (f1 - f0) / width;
        let c2 = (3.0 * slope - d1 - 2.0 * d0) / width;
        let c3 = -(2.0 * slope - d1 - d0) / (width * width);
        Ok(Self {
            y0,
            y1,
            coeffs: [f0, d0, c2, c3],
        })
    }

    pub fn as_polynomial(&self) -> Polynomial {
        Polynomial::new(self.y0, self.coeffs.to_vec())
    }

    pub fn eval(&self, y: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        let t = y - self.y0;
        ((c3 * t + c2) * t + c1) * t + c0
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let [_, c1, c2, c3] = self.coeffs;
        let t = y - self.y0;
        (3.0 * c3 * t + 2.0 * c2) * t + c1
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        let [_, _, c2, c3] = self.coeffs;
        6.0 * c3 * (y - self.y0) + 2.0 * c2
    }
}

/// Fits the cubic Hermite interpolant through `(y0, f0, d0)` and `(y1, f1, d1)`.
pub fn hermite_fit(y0: f64, y1: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> Result<CubicHermite> {
    CubicHermite::fit(y0, y1, f0, f1, d0, d1)
}

/// Grid measurements of the connector gradient band.
///
/// `dxi_min`/`dxi_max` bound `∂g/∂xi` over `[τ,2τ]×[0,τ]`; `dxnext_slack_min`
/// is the smallest value of `∂g/∂xnext + 2γ·xnext`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub grid: usize,
    /// Smallest value of `g1' = p` on a 1000-point grid.
    pub g1_slope_min: f64,
    pub dxi_min: f64,
    pub dxi_max: f64,
    pub dxnext_slack_min: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub dxnext_holds: bool,
}

impl BandReport {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds && self.dxnext_holds
    }
}

/// Value, gradient and Hessian of `g` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectorEval {
    pub value: f64,
    pub d_xi: f64,
    pub d_xnext: f64,
    /// `[[g_xx, g_xz], [g_zx, g_zz]]`
    pub second_partials: [[f64; 2]; 2],
}

/// Immutable set of connector polynomials for one parameter instance.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectorSet {
    pub p: CubicHermite,
    pub g1_poly: Polynomial,
    pub g2_poly: Polynomial,
    pub nu: f64,
    pub params: LandscapeParams,
    pub band: BandReport,
}

fn close(actual: f64, expected: f64, rtol: f64) -> bool {
    ConnectorSet::relative_residual(actual, expected) <= rtol
}

/// Builds `g1`, `g2` and `ν` for `params` and checks every boundary condition.
pub fn build_connectors(params: &LandscapeParams) -> Result<ConnectorSet> {
    let (l, gamma, tau) = (params.l, params.gamma, params.tau);
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(l >= gamma) || !l.is_finite() {
        return Err(Error::Parameter(format!(
            "L must satisfy L >= gamma, got L = {l}, gamma = {gamma}"
        )));
    }

    let p = hermite_fit(
        tau,
        2.0 * tau,
        -2.0 * gamma * tau,
        -4.0 * l * tau,
        -2.0 * gamma,
        2.0 * l,
    )?;
    let g1_poly = p.as_polynomial().antiderivative().shifted(-gamma * tau * tau);

    let s = l + gamma;
    let g2_poly = Polynomial::new(
        2.0 * tau,
        vec![
            -gamma,
            0.0,
            0.0,
            -10.0 * s / tau.powi(3),
            -15.0 * s / tau.powi(4),
            -6.0 * s / tau.powi(5),
        ],
    );
    let nu = -g1_poly.eval(2.0 * tau) + 4.0 * l * tau * tau;

    let mut conn = ConnectorSet {
        p,
        g1_poly,
        g2_poly,
        nu,
        params: *params,
        band: BandReport {
            grid: 0,
            g1_slope_min: f64::NAN,
            dxi_min: f64::NAN,
            dxi_max: f64::NAN,
            dxnext_slack_min: f64::NAN,
            lower_bound: -4.0 * l * tau,
            upper_bound: -2.0 * gamma * tau,
            lower_holds: false,
            upper_holds: false,
            dxnext_holds: false,
        },
    };
    conn.check_boundary_conditions()?;
    conn.check_g2_shape()?;
    let g1_slope_min = conn.check_g1_slope()?;
    conn.band = conn.measure_band(BAND_GRID);
    conn.band.g1_slope_min = g1_slope_min;
    if !conn.band.upper_holds || !conn.band.dxnext_holds {
        return Err(Error::Construction(format!(
            "gradient band violated: max dg/dxi = {} (bound {}), min dg/dxnext + 2γ·xnext = {}",
            conn.band.dxi_max, conn.band.upper_bound, conn.band.dxnext_slack_min
        )));
    }
    if !conn.band.lower_holds {
        log::debug!(
            "connector lower band not attained: min dg/dxi = {} < {}",
            conn.band.dxi_min,
            conn.band.lower_bound
        );
    }
    Ok(conn)
}

impl ConnectorSet {
    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    /// `(g1, g1', g1'')` at `y`.
    pub fn g1(&self, y: f64) -> (f64, f64, f64) {
        self.g1_poly.eval_with_derivs(y)
    }

    /// `(g2, g2', g2'')` at `y`.
    pub fn g2(&self, y: f64) -> (f64, f64, f64) {
        self.g2_poly.eval_with_derivs(y)
    }

    /// Unchecked evaluation of `g(y, z)`; valid for any real arguments.
    pub fn eval_unchecked(&self, y: f64, z: f64) -> ConnectorEval {
        let (a, da, dda) = self.g1(y);
        let (b, db, ddb) = self.g2(y);
        let z2 = z * z;
        let cross = 2.0 * db * z;
        ConnectorEval {
            value: a + b * z2,
            d_xi: da + db * z2,
            d_xnext: 2.0 * b * z,
            second_partials: [[dda + ddb * z2, cross], [cross, 2.0 * b]],
        }
    }

    /// Evaluates `g` on the connector rectangle `[τ, 2τ] × [0, τ]`.
    pub fn eval_g(&self, xi: f64, xnext: f64) -> Result<ConnectorEval> {
        let tau = self.tau();
        let inside = (tau..=2.0 * tau).contains(&xi) && (0.0..=tau).contains(&xnext);
        if !inside {
            return Err(Error::Range {
                xi,
                xnext,
                lo: tau,
                hi: 2.0 * tau,
            });
        }
        Ok(self.eval_unchecked(xi, xnext))
    }

    /// `(name, actual, expected)` for every endpoint condition on `g1` and `g2`.
    pub fn boundary_conditions(&self) -> Vec<(&'static str, f64, f64)> {
        let LandscapeParams { l, gamma, tau, .. } = self.params;
        let (g1_lo, dg1_lo, ddg1_lo) = self.g1(tau);
        let (_, dg1_hi, ddg1_hi) = self.g1(2.0 * tau);
        let (g2_lo, dg2_lo, ddg2_lo) = self.g2(tau);
        let (g2_hi, dg2_hi, ddg2_hi) = self.g2(2.0 * tau);
        vec![
            ("g1(τ)", g1_lo, -gamma * tau * tau),
            ("g1'(τ)", dg1_lo, -2.0 * gamma * tau),
            ("g1'(2τ)", dg1_hi, -4.0 * l * tau),
            ("g1''(τ)", ddg1_lo, -2.0 * gamma),
            ("g1''(2τ)", ddg1_hi, 2.0 * l),
            ("g2(τ)", g2_lo, l),
            ("g2(2τ)", g2_hi, -gamma),
            ("g2'(τ)", dg2_lo, 0.0),
            ("g2'(2τ)", dg2_hi, 0.0),
            ("g2''(τ)", ddg2_lo, 0.0),
            ("g2''(2τ)", ddg2_hi, 0.0),
        ]
    }

    /// Relative residual used for the endpoint conditions.
    pub fn relative_residual(actual: f64, expected: f64) -> f64 {
        (actual - expected).abs() / actual.abs().max(expected.abs()).max(1.0)
    }

    fn check_boundary_conditions(&self) -> Result<()> {
        for (name, actual, expected) in self.boundary_conditions() {
            if !close(actual, expected, BOUNDARY_RTOL) {
                return Err(Error::Construction(format!(
                    "{name} = {actual}, expected {expected}"
                )));
            }
        }
        Ok(())
    }

    fn check_g2_shape(&self) -> Result<()> {
        let LandscapeParams { l, gamma, tau, .. } = self.params;
        let tol = BOUNDARY_RTOL * (l + gamma);
        for k in 0..G2_GRID {
            let y = tau + tau * k as f64 / (G2_GRID - 1) as f64;
            let (v, dv, _) = self.g2(y);
            if v < -gamma - tol || dv > tol / tau {
                return Err(Error::Construction(format!(
                    "g2 not monotone above -gamma at y = {y}: g2 = {v}, g2' = {dv}"
                )));
            }
        }
        Ok(())
    }

    /// The fitted slope `p = g1'` must stay at or below `-2γτ`. The lower
    /// side cannot hold everywhere: `p'(2τ) = 2L > 0` means `p` approaches
    /// `-4Lτ` from below, so the minimum is only recorded.
    fn check_g1_slope(&self) -> Result<f64> {
        let LandscapeParams { l, gamma, tau, .. } = self.params;
        let hi = -2.0 * gamma * tau;
        let tol = BOUNDARY_RTOL * 4.0 * l * tau;
        let mut min_slope = f64::INFINITY;
        for k in 0..G2_GRID {
            let y = tau + tau * k as f64 / (G2_GRID - 1) as f64;
            let slope = self.p.eval(y);
            if slope > hi + tol {
                return Err(Error::Construction(format!(
                    "g1' = {slope} at y = {y} rises above {hi}"
                )));
            }
            min_slope = min_slope.min(slope);
        }
        Ok(min_slope)
    }

    /// Grid scan of the gradient band over `[τ,2τ]×[0,τ]` with `n×n` nodes.
    pub fn measure_band(&self, n: usize) -> BandReport {
        let LandscapeParams { l, gamma, tau, .. } = self.params;
        let n = n.max(2);
        let (mut dxi_min, mut dxi_max, mut slack_min) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..n {
            let y = tau + tau * a as f64 / (n - 1) as f64;
            for b in 0..n {
                let z = tau * b as f64 / (n - 1) as f64;
                let e = self.eval_unchecked(y, z);
                dxi_min = dxi_min.min(e.d_xi);
                dxi_max = dxi_max.max(e.d_xi);
                slack_min = slack_min.min(e.d_xnext + 2.0 * gamma * z);
            }
        }
        let lower_bound = -4.0 * l * tau;
        let upper_bound = -2.0 * gamma * tau;
        let tol = BOUNDARY_RTOL * lower_bound.abs();
        BandReport {
            grid: n,
            g1_slope_min: f64::NAN,
            dxi_min,
            dxi_max,
            dxnext_slack_min: slack_min,
            lower_bound,
            upper_bound,
            lower_holds: dxi_min >= lower_bound - tol,
            upper_holds: dxi_max <= upper_bound + tol,
            dxnext_holds: slack_min >= -tol,
        }
    }
}
