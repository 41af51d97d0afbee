use super::checks::{check_derivatives, check_faces, FaceReport};
use super::{
    estimate_smoothness, loglog_slope, scan_small_gradient, sosp_check, verify_non_escape, ScanPoints,
    DEFAULT_STEP_BUDGET,
};
use crate::error::{Error, Result};
use crate::landscape::{LandscapeParams, Octopus, RegionKind};
use crate::optimize::seeded_rng;
use crate::spline::{build_connectors, ConnectorSet, BOUNDARY_RTOL};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Spline,
    Boundary,
    Gradient,
    Lemma8,
    Sosp,
    Smoothness,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Spline,
        Suite::Boundary,
        Suite::Gradient,
        Suite::Lemma8,
        Suite::Sosp,
        Suite::Smoothness,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Spline => "spline",
            Suite::Boundary => "boundary",
            Suite::Gradient => "gradient",
            Suite::Lemma8 => "lemma8",
            Suite::Sosp => "sosp",
            Suite::Smoothness => "smoothness",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite '{s}'")))
    }
}

/// Knobs shared by the suites. Defaults are the documented tolerances' sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub params: LandscapeParams,
    pub seed: u64,
    pub face_points: usize,
    pub gradient_points: usize,
    pub trials: u64,
    pub smoothness_samples: u64,
    pub pair_scale: f64,
    /// Dimensions for the polynomial-growth fit of the smoothness estimates.
    pub smoothness_dims: Vec<usize>,
    pub scan_points: u64,
}

impl SuiteOptions {
    pub fn new(params: LandscapeParams) -> Self {
        SuiteOptions {
            params,
            seed: 0,
            face_points: 1000,
            gradient_points: 10_000,
            trials: 100,
            smoothness_samples: 5000,
            pair_scale: params.tau / 10.0,
            smoothness_dims: (2..=10).collect(),
            scan_points: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub violations: Vec<String>,
    pub measurements: BTreeMap<String, f64>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite,
            pass: true,
            violations: Vec::new(),
            measurements: BTreeMap::new(),
        }
    }

    fn measure(&mut self, key: impl Into<String>, value: f64) {
        self.measurements.insert(key.into(), value);
    }

    fn require(&mut self, ok: bool, violation: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.violations.push(violation());
        }
    }
}

/// Runs one suite, or every suite for [`Suite::All`].
///
/// Parameter and construction failures are returned as errors rather than
/// reports.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<SuiteReport>> {
    if suite == Suite::All {
        let mut out = Vec::new();
        for s in Suite::EACH {
            out.extend(run_suite(s, opts)?);
        }
        return Ok(out);
    }
    opts.params.validate()?;
    let report = match suite {
        Suite::Spline => spline_suite(opts)?,
        Suite::Boundary => boundary_suite(opts)?,
        Suite::Gradient => gradient_suite(opts)?,
        Suite::Lemma8 => lemma8_suite(opts)?,
        Suite::Sosp => sosp_suite(opts)?,
        Suite::Smoothness => smoothness_suite(opts)?,
        Suite::All => unreachable!(),
    };
    Ok(vec![report])
}

fn spline_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Spline);
    let conn = build_connectors(&opts.params)?;
    let mut worst = 0.0f64;
    for (name, actual, expected) in conn.boundary_conditions() {
        let res = ConnectorSet::relative_residual(actual, expected);
        worst = worst.max(res);
        r.require(res <= BOUNDARY_RTOL, || {
            format!("{name} = {actual}, expected {expected} (relative residual {res:e})")
        });
    }
    r.measure("boundary_max_relative_residual", worst);
    let band = &conn.band;
    r.measure("band_dxi_min", band.dxi_min);
    r.measure("band_dxi_max", band.dxi_max);
    r.measure("band_lower_bound", band.lower_bound);
    r.measure("band_upper_bound", band.upper_bound);
    r.measure("band_dxnext_slack_min", band.dxnext_slack_min);
    r.measure("g1_slope_min", band.g1_slope_min);
    r.require(band.lower_holds, || {
        format!(
            "gradient band: min dg/dxi = {} on the {}x{} grid is below -4Lτ = {}",
            band.dxi_min, band.grid, band.grid, band.lower_bound
        )
    });
    r.require(band.upper_holds, || {
        format!("gradient band: max dg/dxi = {} exceeds -2γτ = {}", band.dxi_max, band.upper_bound)
    });
    r.require(band.dxnext_holds, || {
        format!("gradient band: dg/dxnext + 2γ·xnext reaches {}", band.dxnext_slack_min)
    });
    Ok(r)
}

fn boundary_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Boundary);
    let o = Octopus::new(opts.params)?;
    let mut rng = seeded_rng(opts.seed, 0);
    let reports = check_faces(&o, opts.face_points, &mut rng);
    let worst = |f: fn(&FaceReport) -> f64| reports.iter().map(f).fold(0.0f64, f64::max);
    r.measure("max_value_jump", worst(|x| x.value));
    r.measure("max_grad_jump", worst(|x| x.grad));
    r.measure("max_hess_jump", worst(|x| x.hess));
    for f in &reports {
        r.require(f.holds(), || {
            format!(
                "face |x_{}| = {} between {} and {}: Δf = {:e}, Δ∇f = {:e}, Δ∇²f = {:e}",
                f.face.coordinate, f.face.level, f.face.inner, f.face.outer, f.value, f.grad, f.hess
            )
        });
    }
    Ok(r)
}

fn gradient_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Gradient);
    let o = Octopus::new(opts.params)?;
    let mut rng = seeded_rng(opts.seed, 1);
    let d = check_derivatives(&o, opts.gradient_points, &mut rng)?;
    r.measure("points", d.points as f64);
    r.measure("grad_max_relative_error", d.grad_rel_err);
    r.measure("hess_max_relative_error", d.hess_rel_err);
    r.require(d.points == opts.gradient_points, || {
        format!("only {} of {} points had in-domain probes", d.points, opts.gradient_points)
    });
    r.require(d.holds(), || {
        format!(
            "finite differences disagree: gradient {:e}, Hessian {:e}",
            d.grad_rel_err, d.hess_rel_err
        )
    });
    Ok(r)
}

fn lemma8_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Lemma8);
    let eta = 0.5 / opts.params.l;
    let out = verify_non_escape(&opts.params, eta, opts.trials, opts.seed, DEFAULT_STEP_BUDGET)?;
    r.measure("steps", out.steps as f64);
    r.measure("trials", out.trials as f64);
    r.measure("max_abs_x_d", out.max_abs_x_d);
    if let Some(w) = &out.witness {
        r.require(false, || {
            format!("trial {}: |x_d| = {} > 2τ at step {} from {:?}", w.trial, w.x_d, w.iter, w.x0)
        });
    }
    Ok(r)
}

/// `min(γτ, 4γ²/ρ)/2`: below `γτ` so connector points fail the gradient
/// test, and below `4γ²/ρ` so `√(ρε) < 2γ` keeps every saddle out.
pub fn sosp_epsilon(params: &LandscapeParams, rho: f64) -> f64 {
    let g = params.gamma;
    (g * params.tau).min(4.0 * g * g / rho) / 2.0
}

fn sosp_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Sosp);
    let p = opts.params;
    let o = Octopus::new(p)?;
    let rho = estimate_smoothness(&o, opts.smoothness_samples, opts.pair_scale, opts.seed)?.rho_hat;
    let eps = sosp_epsilon(&p, rho);
    r.measure("rho_hat", rho);
    r.measure("epsilon", eps);

    let signs = vec![1i8; p.d];
    let catalog = match o.stationary_points(&signs) {
        Ok(c) => c,
        Err(Error::Verification(msg)) => {
            r.require(false, || msg);
            return Ok(r);
        }
        Err(e) => return Err(e),
    };
    for sp in &catalog {
        let is_sosp = sosp_check(&o, &sp.location, eps, rho)?;
        let want = sp.lambda_min >= 0.0;
        r.require(is_sosp == want, || {
            format!("sosp_check at {:?} is {is_sosp}, expected {want}", sp.location)
        });
        if !want {
            r.require((sp.lambda_min + 2.0 * p.gamma).abs() <= 1e-9, || {
                format!("λ_min at {:?} is {}, expected {}", sp.location, sp.lambda_min, -2.0 * p.gamma)
            });
        }
    }
    let min = catalog.last().expect("catalog ends with the minimum");
    r.require(min.value == -(p.d as f64) * o.nu(), || {
        format!("f at the minimum is {}, expected {}", min.value, -(p.d as f64) * o.nu())
    });

    let mut rng = seeded_rng(opts.seed, 2);
    let threshold = p.gamma * p.tau / 2.0;
    let exclusion = threshold / (2.0 * p.gamma);
    let points = if p.d <= 2 {
        ScanPoints::Grid { spacing: p.tau / 20.0 }
    } else {
        ScanPoints::Random {
            count: opts.scan_points,
        }
    };
    let scan = scan_small_gradient(&o, points, threshold, exclusion, &mut rng)?;
    r.measure("scan_points", scan.points as f64);
    r.measure("scan_hits", scan.hits.len() as f64);
    for hit in scan.hits.iter().take(10) {
        r.require(false, || {
            format!(
                "small gradient {:e} in {} at {:?}, {} from every stationary point",
                hit.grad_norm, hit.kind, hit.x, hit.distance
            )
        });
    }

    let mut connector_sosp = 0;
    for kind in o.strata().into_iter().filter(RegionKind::is_connector) {
        for _ in 0..200 {
            let x = o.sample_stratum(kind, &mut rng);
            if sosp_check(&o, &x, eps, rho)? {
                connector_sosp += 1;
            }
        }
    }
    r.require(connector_sosp == 0, || format!("{connector_sosp} connector points pass sosp_check"));
    Ok(r)
}

fn smoothness_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Smoothness);
    let p = opts.params;
    let mut dims = Vec::new();
    let mut series: [Vec<f64>; 3] = Default::default();
    for &d in &opts.smoothness_dims {
        let o = Octopus::new(LandscapeParams { d, ..p })?;
        let e = estimate_smoothness(&o, opts.smoothness_samples, opts.pair_scale, opts.seed)?;
        for (name, v) in [("B", e.b_hat), ("ell", e.ell_hat), ("rho", e.rho_hat)] {
            r.measure(format!("{name}_hat_d{d}"), v);
            r.require(v.is_finite() && v > 0.0, || format!("{name} estimate {v} at d = {d}"));
        }
        dims.push(d as f64);
        series[0].push(e.b_hat);
        series[1].push(e.ell_hat);
        series[2].push(e.rho_hat);
    }
    if dims.len() >= 2 {
        for (name, ys) in ["B", "ell", "rho"].iter().zip(&series) {
            if let Ok(slope) = loglog_slope(&dims, ys) {
                r.measure(format!("{name}_loglog_slope"), slope);
                r.require(slope <= 3.0, || format!("{name} grows with log-log slope {slope} > 3"));
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn quick(d: usize) -> SuiteOptions {
        let mut o = SuiteOptions::new(LandscapeParams::new(d, E, 1.0, E));
        o.face_points = 100;
        o.gradient_points = 300;
        o.trials = 20;
        o.smoothness_samples = 500;
        o.smoothness_dims = vec![2, 3, 4];
        o.scan_points = 5000;
        o
    }

    #[test]
    fn names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn passing_suites() {
        for s in [Suite::Boundary, Suite::Gradient, Suite::Lemma8, Suite::Sosp, Suite::Smoothness] {
            let r = run_suite(s, &quick(3)).unwrap();
            assert!(r[0].pass, "{:?}", r[0]);
        }
    }

    #[test]
    fn spline_suite_reports_band_lower_bound() {
        let r = &run_suite(Suite::Spline, &quick(2)).unwrap()[0];
        assert!(!r.pass);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].contains("below -4Lτ"));
        assert!(r.measurements["boundary_max_relative_residual"] <= BOUNDARY_RTOL);
    }

    #[test]
    fn saddles_pass_second_order_test_at_half_gamma_tau() {
        // with ρ = ρ̂, ε = γτ/2 gives √(ρε) far above 2γ
        let p = LandscapeParams::new(3, E, 1.0, E);
        let o = Octopus::new(p).unwrap();
        let rho = estimate_smoothness(&o, 500, p.tau / 10.0, 0).unwrap().rho_hat;
        assert!((rho * p.gamma * p.tau / 2.0).sqrt() > 2.0 * p.gamma);
        assert!(sosp_check(&o, &[0.0; 3], p.gamma * p.tau / 2.0, rho).unwrap());
        assert!(!sosp_check(&o, &[0.0; 3], sosp_epsilon(&p, rho), rho).unwrap());
    }

    #[test]
    fn all_runs_every_suite() {
        let r = run_suite(Suite::All, &quick(2)).unwrap();
        let names: Vec<Suite> = r.iter().map(|x| x.suite).collect();
        assert_eq!(names, Suite::EACH.to_vec());
    }

    #[test]
    fn invalid_params_error() {
        let opts = SuiteOptions::new(LandscapeParams::new(3, 0.5, 1.0, E));
        assert!(run_suite(Suite::All, &opts).is_err());
    }

    #[test]
    fn json_shape() {
        let r = &run_suite(Suite::Boundary, &quick(2)).unwrap()[0];
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        assert_eq!(v["suite"], "boundary");
        assert_eq!(v["pass"], true);
        assert!(v["violations"].as_array().unwrap().is_empty());
    }
}
