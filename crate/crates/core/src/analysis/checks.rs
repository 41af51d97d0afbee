use crate::error::Result;
use crate::landscape::{Landscape, LandscapeParams, Octopus, RegionKind};
use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde::Serialize;

pub const FACE_VALUE_TOL: f64 = 1e-8;
pub const FACE_GRAD_TOL: f64 = 1e-6;
pub const FACE_HESS_TOL: f64 = 1e-4;

pub const FD_GRAD_STEP: f64 = 1e-6;
pub const FD_HESS_STEP: f64 = 1e-5;
pub const FD_GRAD_RTOL: f64 = 1e-5;
pub const FD_HESS_RTOL: f64 = 1e-4;

/// A face `|x_i| = c` shared by two pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Face {
    pub coordinate: usize,
    pub level: f64,
    pub inner: RegionKind,
    pub outer: RegionKind,
}

/// All `2d` interior faces of the octopus (one representative per mirror image).
pub fn faces(params: &LandscapeParams) -> Vec<Face> {
    let LandscapeParams { d, tau, .. } = *params;
    let mut out = Vec::with_capacity(2 * d);
    for i in 1..=d {
        let conn = if i < d {
            RegionKind::ConnectorXY(i)
        } else {
            RegionKind::ConnectorXd
        };
        let next = if i < d {
            RegionKind::Quadratic(i + 1)
        } else {
            RegionKind::Optimum
        };
        out.push(Face {
            coordinate: i,
            level: tau,
            inner: RegionKind::Quadratic(i),
            outer: conn,
        });
        out.push(Face {
            coordinate: i,
            level: 2.0 * tau,
            inner: conn,
            outer: next,
        });
    }
    out
}

/// Largest mismatch of both pieces' value, gradient and Hessian on one face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaceReport {
    pub face: Face,
    pub points: usize,
    pub value: f64,
    pub grad: f64,
    pub hess: f64,
}

impl FaceReport {
    pub fn holds(&self) -> bool {
        self.value <= FACE_VALUE_TOL && self.grad <= FACE_GRAD_TOL && self.hess <= FACE_HESS_TOL
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn random_sign(rng: &mut dyn RngCore) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Random point on `face` with random branch signs.
pub fn sample_face(params: &LandscapeParams, face: &Face, rng: &mut dyn RngCore) -> Vec<f64> {
    let tau = params.tau;
    let k = face.coordinate - 1;
    (0..params.d)
        .map(|j| {
            let a = if j < k {
                rng.random_range(2.0 * tau..=6.0 * tau)
            } else if j == k {
                face.level
            } else {
                rng.random_range(0.0..=tau)
            };
            random_sign(rng) * a
        })
        .collect()
}

/// Compares neighbouring pieces at `points` random points on every face.
pub fn check_faces(octopus: &Octopus, points: usize, rng: &mut dyn RngCore) -> Vec<FaceReport> {
    let params = *octopus.params().expect("octopus has parameters");
    let d = params.d;
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    faces(&params)
        .into_iter()
        .map(|face| {
            let mut report = FaceReport {
                face,
                points,
                value: 0.0,
                grad: 0.0,
                hess: 0.0,
            };
            for _ in 0..points {
                let x = sample_face(&params, &face, rng);
                let signs: Vec<i8> = x.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect();
                let va = octopus.piece_value_grad(face.inner, &signs, &x, Some(&mut ga));
                let vb = octopus.piece_value_grad(face.outer, &signs, &x, Some(&mut gb));
                let ha = octopus.piece_hessian(face.inner, &signs, &x);
                let hb = octopus.piece_hessian(face.outer, &signs, &x);
                report.value = report.value.max((va - vb).abs());
                report.grad = report.grad.max(sup_diff(&ga, &gb));
                report.hess = report.hess.max((ha - hb).amax());
            }
            report
        })
        .collect()
}

/// Worst relative finite-difference errors over a batch of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub points: usize,
    pub grad_rel_err: f64,
    pub hess_rel_err: f64,
}

impl DerivativeReport {
    pub fn holds(&self) -> bool {
        self.grad_rel_err <= FD_GRAD_RTOL && self.hess_rel_err <= FD_HESS_RTOL
    }
}

/// `‖a - b‖∞ / max(‖b‖∞, 1)`
pub fn relative_error(analytic: &[f64], approx: &[f64]) -> f64 {
    let scale = analytic.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    sup_diff(analytic, approx) / scale
}

/// Central differences of `f` (step `h`), or `None` if a probe leaves the domain.
pub fn fd_gradient(landscape: &dyn Landscape, x: &[f64], h: f64) -> Option<Vec<f64>> {
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut probe = x.to_vec();
    for j in 0..d {
        probe[j] = x[j] + h;
        let fp = landscape.eval_into(&probe, &mut scratch).ok()?;
        probe[j] = x[j] - h;
        let fm = landscape.eval_into(&probe, &mut scratch).ok()?;
        probe[j] = x[j];
        if fp.oob || fm.oob {
            return None;
        }
        g[j] = (fp.value - fm.value) / (2.0 * h);
    }
    Some(g)
}

/// Central differences of `∇f` (step `h`), symmetrised.
pub fn fd_hessian(landscape: &dyn Landscape, x: &[f64], h: f64) -> Option<DMatrix<f64>> {
    let d = x.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    let mut probe = x.to_vec();
    for j in 0..d {
        probe[j] = x[j] + h;
        let sp = landscape.eval_into(&probe, &mut gp).ok()?;
        probe[j] = x[j] - h;
        let sm = landscape.eval_into(&probe, &mut gm).ok()?;
        probe[j] = x[j];
        if sp.oob || sm.oob {
            return None;
        }
        for i in 0..d {
            hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Some((&hess + hess.transpose()) * 0.5)
}

/// Compares analytic derivatives with finite differences at `points` domain
/// draws. Draws whose probes leave the domain are replaced.
pub fn check_derivatives(landscape: &dyn Landscape, points: usize, rng: &mut dyn RngCore) -> Result<DerivativeReport> {
    let mut report = DerivativeReport {
        points: 0,
        grad_rel_err: 0.0,
        hess_rel_err: 0.0,
    };
    let mut attempts = 0usize;
    while report.points < points {
        attempts += 1;
        if attempts > 100 * points.max(1) {
            break;
        }
        let x = landscape.sample_domain(rng);
        let (Some(fg), Some(fh)) = (
            fd_gradient(landscape, &x, FD_GRAD_STEP),
            fd_hessian(landscape, &x, FD_HESS_STEP),
        ) else {
            continue;
        };
        let e = landscape.eval(&x)?;
        let h = landscape.hessian(&x)?;
        report.points += 1;
        report.grad_rel_err = report.grad_rel_err.max(relative_error(&e.grad, &fg));
        report.hess_rel_err = report.hess_rel_err.max(relative_error(h.as_slice(), fh.as_slice()));
    }
    Ok(report)
}
