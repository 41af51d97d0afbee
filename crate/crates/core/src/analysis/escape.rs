use crate::error::{Error, Result};
use crate::landscape::{LandscapeParams, RegionKind};
use crate::optimize::{StepObserver, StepRecord, Trajectory};
use serde::Serialize;
use std::io::Write;

/// Escape statistics of one saddle. Times count iterations from 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleEscape {
    pub saddle: usize,
    /// First iteration past the saddle's block (`|x_k| >= 2τ`).
    pub t_k: Option<u64>,
    /// Iterations spent in the saddle's connector, reported once escaped.
    pub t_k_tau: Option<u64>,
    /// `t_k - t_k_tau`.
    pub quadratic_time: Option<u64>,
    /// Connector iterations seen so far, escaped or not.
    pub dwell_observed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    pub params: LandscapeParams,
    pub saddles: Vec<SaddleEscape>,
    /// `quadratic_time[k+1] / quadratic_time[k]` for `k = 1..d-1`.
    pub ratios: Vec<Option<f64>>,
    /// Lower bound on each ratio that also covers a censored `k+1` (never
    /// escaped before the run ended): its quadratic time is then at least the
    /// number of iterations run outside its connector.
    pub ratio_lower_bounds: Vec<Option<f64>>,
    pub reached_min: bool,
    /// Index of the last iterate.
    pub total_iters: u64,
}

impl EscapeReport {
    /// Iterations spent on each saddle: `T_1`, then `T_k - T_{k-1}`.
    pub fn escape_counts(&self) -> Vec<Option<u64>> {
        let mut prev = Some(0);
        self.saddles
            .iter()
            .map(|s| {
                let c = match (s.t_k, prev) {
                    (Some(t), Some(p)) => Some(t - p),
                    _ => None,
                };
                prev = s.t_k;
                c
            })
            .collect()
    }

    pub fn all_escaped(&self) -> bool {
        self.saddles.iter().all(|s| s.t_k.is_some())
    }

    /// `saddle_index,T_k,T_k_tau,quadratic_time,ratio`; undefined cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["saddle_index", "T_k", "T_k_tau", "quadratic_time", "ratio"])?;
        let cell = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (i, s) in self.saddles.iter().enumerate() {
            w.write_record([
                s.saddle.to_string(),
                cell(s.t_k),
                cell(s.t_k_tau),
                cell(s.quadratic_time),
                self.ratios
                    .get(i)
                    .copied()
                    .flatten()
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Observer that accumulates escape statistics while a run streams by.
#[derive(Debug, Clone)]
pub struct EscapeTracker {
    params: LandscapeParams,
    first_beyond: Vec<Option<u64>>,
    dwell: Vec<u64>,
    reached_min: bool,
    last_iter: u64,
}

impl EscapeTracker {
    pub fn new(params: LandscapeParams) -> Self {
        EscapeTracker {
            params,
            first_beyond: vec![None; params.d],
            dwell: vec![0; params.d],
            reached_min: false,
            last_iter: 0,
        }
    }

    pub fn push(&mut self, r: &StepRecord) {
        let d = self.params.d;
        self.last_iter = r.iter;
        match r.kind {
            RegionKind::ConnectorXY(k) => self.dwell[k - 1] += 1,
            RegionKind::ConnectorXd => self.dwell[d - 1] += 1,
            RegionKind::Optimum => self.reached_min = true,
            _ => {}
        }
        if r.kind != RegionKind::OutOfDomain {
            let passed = r.saddle_index.saturating_sub(1).min(d);
            for slot in self.first_beyond[..passed].iter_mut().filter(|s| s.is_none()) {
                *slot = Some(r.iter);
            }
        }
    }

    pub fn report(&self) -> EscapeReport {
        let saddles: Vec<SaddleEscape> = (0..self.params.d)
            .map(|k| {
                let t_k = self.first_beyond[k];
                let t_k_tau = t_k.map(|_| self.dwell[k]);
                SaddleEscape {
                    saddle: k + 1,
                    t_k,
                    t_k_tau,
                    quadratic_time: t_k.zip(t_k_tau).map(|(t, c)| t - c),
                    dwell_observed: self.dwell[k],
                }
            })
            .collect();
        let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        let ratios = saddles
            .windows(2)
            .map(|w| match (w[1].quadratic_time, w[0].quadratic_time) {
                (Some(a), Some(b)) => ratio(a, b),
                _ => None,
            })
            .collect();
        let run_length = self.last_iter + 1;
        let ratio_lower_bounds = saddles
            .windows(2)
            .map(|w| {
                let next = w[1]
                    .quadratic_time
                    .unwrap_or(run_length.saturating_sub(w[1].dwell_observed));
                w[0].quadratic_time.and_then(|b| ratio(next, b))
            })
            .collect();
        EscapeReport {
            params: self.params,
            saddles,
            ratios,
            ratio_lower_bounds,
            reached_min: self.reached_min,
            total_iters: self.last_iter,
        }
    }
}

impl StepObserver for EscapeTracker {
    fn on_step(&mut self, record: &StepRecord, _x: &[f64]) {
        self.push(record);
    }
}

/// Escape statistics of a finished trajectory on the octopus with `params`.
///
/// Only region metadata is used, so thinned point storage does not matter,
/// but the records must be complete.
pub fn escape_report(traj: &Trajectory, params: &LandscapeParams) -> Result<EscapeReport> {
    match traj.params {
        Some(p) if p == *params => {}
        other => {
            return Err(Error::Mismatch(format!(
                "trajectory was run on {other:?}, report requested for {params:?}"
            )))
        }
    }
    if traj.records.iter().enumerate().any(|(i, r)| r.iter != i as u64) {
        return Err(Error::Mismatch("trajectory records are thinned".into()));
    }
    let mut tracker = EscapeTracker::new(*params);
    traj.records.iter().for_each(|r| tracker.push(r));
    Ok(tracker.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::Octopus;
    use crate::optimize::{run_gd, GdConfig};
    use std::f64::consts::E;

    fn rec(iter: u64, kind: RegionKind, saddle_index: usize) -> StepRecord {
        StepRecord {
            iter,
            f: 0.0,
            grad_norm: 0.0,
            kind,
            saddle_index,
            noise_added: false,
            oob: false,
            dist_to_min: None,
        }
    }

    #[test]
    fn hand_built_sequence() {
        use RegionKind::*;
        let p = LandscapeParams::new(2, E, 1.0, E);
        let seq = [
            (Quadratic(1), 1),
            (Quadratic(1), 1),
            (ConnectorXY(1), 1),
            (Quadratic(2), 2),
            (Quadratic(2), 2),
            (Quadratic(2), 2),
            (Quadratic(2), 2),
            (ConnectorXd, 2),
            (ConnectorXd, 2),
            (Optimum, 3),
        ];
        let mut t = EscapeTracker::new(p);
        for (i, (k, s)) in seq.iter().enumerate() {
            t.push(&rec(i as u64, *k, *s));
        }
        let r = t.report();
        assert_eq!(r.saddles[0].t_k, Some(3));
        assert_eq!(r.saddles[0].t_k_tau, Some(1));
        assert_eq!(r.saddles[0].quadratic_time, Some(2));
        assert_eq!(r.saddles[1].t_k, Some(9));
        assert_eq!(r.saddles[1].t_k_tau, Some(2));
        assert_eq!(r.ratios, vec![Some(3.5)]);
        assert_eq!(r.ratio_lower_bounds, vec![Some(3.5)]);
        assert_eq!(r.escape_counts(), vec![Some(3), Some(6)]);
        assert!(r.reached_min);
        assert_eq!(r.total_iters, 9);
    }

    #[test]
    fn censored_lower_bound() {
        use RegionKind::*;
        let p = LandscapeParams::new(2, E, 1.0, E);
        let mut t = EscapeTracker::new(p);
        let seq = [(Quadratic(1), 1), (ConnectorXY(1), 1), (Quadratic(2), 2)];
        for (i, (k, s)) in seq.iter().enumerate() {
            t.push(&rec(i as u64, *k, *s));
        }
        for i in 3..20 {
            t.push(&rec(i, Quadratic(2), 2));
        }
        let r = t.report();
        assert_eq!(r.ratios, vec![None]);
        assert_eq!(r.saddles[1].t_k, None);
        assert_eq!(r.saddles[1].t_k_tau, None);
        assert_eq!(r.ratio_lower_bounds, vec![Some(20.0)]);
        assert!(!r.reached_min);
    }

    #[test]
    fn stuck_at_first_saddle() {
        let p = LandscapeParams::new(3, E, 1.0, E);
        let o = Octopus::new(p).unwrap();
        let traj = run_gd(&o, &[0.0; 3], &GdConfig::new(0.05, 50)).unwrap();
        let r = escape_report(&traj, &p).unwrap();
        assert!(r.saddles.iter().all(|s| s.t_k.is_none() && s.quadratic_time.is_none()));
        assert!(r.ratios.iter().all(Option::is_none));
        assert!(!r.reached_min);
        assert_eq!(r.total_iters, 50);
    }

    #[test]
    fn mismatch_is_rejected() {
        let p = LandscapeParams::new(2, E, 1.0, E);
        let o = Octopus::new(p).unwrap();
        let traj = run_gd(&o, &[0.1, 0.1], &GdConfig::new(0.05, 5)).unwrap();
        let q = LandscapeParams::new(2, 2.0, 1.0, E);
        assert!(matches!(escape_report(&traj, &q), Err(Error::Mismatch(_))));
    }

    #[test]
    fn gd_report_is_ordered_and_reproducible() {
        let p = LandscapeParams::new(3, 1.0, 1.0, E);
        let o = Octopus::new(p).unwrap();
        let cfg = GdConfig::new(0.25, 5000);
        let a = escape_report(&run_gd(&o, &[0.3, 0.2, 0.1], &cfg).unwrap(), &p).unwrap();
        let b = escape_report(&run_gd(&o, &[0.3, 0.2, 0.1], &cfg).unwrap(), &p).unwrap();
        assert_eq!(a, b);
        assert!(a.all_escaped() && a.reached_min);
        let t: Vec<u64> = a.saddles.iter().map(|s| s.t_k.unwrap()).collect();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(a.saddles.iter().all(|s| s.quadratic_time.unwrap() > 0));
    }

    #[test]
    fn csv_layout() {
        let p = LandscapeParams::new(2, E, 1.0, E);
        let mut t = EscapeTracker::new(p);
        t.push(&rec(0, RegionKind::Quadratic(1), 1));
        t.push(&rec(1, RegionKind::Quadratic(2), 2));
        let mut buf = Vec::new();
        t.report().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "saddle_index,T_k,T_k_tau,quadratic_time,ratio\n1,1,0,1,\n2,,,,\n"
        );
    }
}
