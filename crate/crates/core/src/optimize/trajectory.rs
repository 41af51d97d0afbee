use super::{GdConfig, PgdConfig};
use crate::error::Result;
use crate::landscape::{LandscapeParams, RegionKind};
use serde::Serialize;
use std::io::Write;

/// Per-iterate record. `f`, `grad_norm` and the region describe the iterate
/// before any perturbation added at the same iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub iter: u64,
    pub f: f64,
    pub grad_norm: f64,
    pub kind: RegionKind,
    pub saddle_index: usize,
    pub noise_added: bool,
    pub oob: bool,
    pub dist_to_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoredPoint {
    pub iter: u64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    GradNorm,
    DistToMin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum RunConfig {
    Gd(GdConfig),
    Pgd(PgdConfig),
}

impl RunConfig {
    pub fn gd(&self) -> &GdConfig {
        match self {
            RunConfig::Gd(c) => c,
            RunConfig::Pgd(c) => &c.gd,
        }
    }
}

/// Receives every iterate of a run as it is produced.
pub trait StepObserver {
    fn on_step(&mut self, record: &StepRecord, x: &[f64]);

    fn on_perturbation(&mut self, _iter: u64, _xi: &[f64]) {}

    fn on_finish(&mut self, _last: &StepRecord, _x: &[f64], _stop: StopReason) {}
}

impl StepObserver for () {
    fn on_step(&mut self, _record: &StepRecord, _x: &[f64]) {}
}

impl<A: StepObserver, B: StepObserver> StepObserver for (A, B) {
    fn on_step(&mut self, record: &StepRecord, x: &[f64]) {
        self.0.on_step(record, x);
        self.1.on_step(record, x);
    }

    fn on_perturbation(&mut self, iter: u64, xi: &[f64]) {
        self.0.on_perturbation(iter, xi);
        self.1.on_perturbation(iter, xi);
    }

    fn on_finish(&mut self, last: &StepRecord, x: &[f64], stop: StopReason) {
        self.0.on_finish(last, x, stop);
        self.1.on_finish(last, x, stop);
    }
}

impl<T: StepObserver + ?Sized> StepObserver for &mut T {
    fn on_step(&mut self, record: &StepRecord, x: &[f64]) {
        (**self).on_step(record, x);
    }

    fn on_perturbation(&mut self, iter: u64, xi: &[f64]) {
        (**self).on_perturbation(iter, xi);
    }

    fn on_finish(&mut self, last: &StepRecord, x: &[f64], stop: StopReason) {
        (**self).on_finish(last, x, stop);
    }
}

/// What a run returns when the caller streams iterates through an observer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub last: StepRecord,
    pub final_point: Vec<f64>,
    pub stop: StopReason,
}

/// A finished run. Points are thinned according to the run's `store_every`
/// and `record_every` settings; first, last, region-change and perturbation
/// iterates are always kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub points: Vec<StoredPoint>,
    pub perturbations: Vec<StoredPoint>,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub params: Option<LandscapeParams>,
    pub stop: StopReason,
    pub final_point: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("a trajectory holds at least its initial iterate")
    }

    /// `iter,f,grad_norm,region_kind,saddle_index,noise_added,dist_to_min`
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iter",
            "f",
            "grad_norm",
            "region_kind",
            "saddle_index",
            "noise_added",
            "dist_to_min",
        ])?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                r.f.to_string(),
                r.grad_norm.to_string(),
                r.kind.label().to_string(),
                r.saddle_index.to_string(),
                u8::from(r.noise_added).to_string(),
                r.dist_to_min.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `iter,x_1,...,x_d`
    pub fn write_points_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.final_point.len();
        let mut header = vec!["iter".to_string()];
        header.extend((1..=d).map(|j| format!("x_{j}")));
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.iter.to_string()];
            row.extend(p.x.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Observer that builds a [`Trajectory`].
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    store_every: Option<u64>,
    record_every: u64,
    records: Vec<StepRecord>,
    points: Vec<StoredPoint>,
    perturbations: Vec<StoredPoint>,
    prev_kind: Option<RegionKind>,
    stop: Option<(StopReason, Vec<f64>)>,
}

impl TrajectoryRecorder {
    /// `record_every = 1` keeps every record.
    pub fn new(store_every: Option<u64>, record_every: u64) -> Self {
        TrajectoryRecorder {
            store_every,
            record_every: record_every.max(1),
            records: Vec::new(),
            points: Vec::new(),
            perturbations: Vec::new(),
            prev_kind: None,
            stop: None,
        }
    }

    /// Records collected so far.
    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn finish(
        self,
        config: RunConfig,
        seed: Option<u64>,
        params: Option<LandscapeParams>,
    ) -> Trajectory {
        let (stop, final_point) = self.stop.expect("run finished");
        Trajectory {
            records: self.records,
            points: self.points,
            perturbations: self.perturbations,
            config,
            seed,
            params,
            stop,
            final_point,
        }
    }
}

impl StepObserver for TrajectoryRecorder {
    fn on_step(&mut self, record: &StepRecord, x: &[f64]) {
        let changed = self.prev_kind != Some(record.kind);
        self.prev_kind = Some(record.kind);
        let keep_record = changed || record.noise_added || record.iter.is_multiple_of(self.record_every);
        if keep_record {
            self.records.push(*record);
        }
        let keep_point = changed
            || record.noise_added
            || self.store_every.is_some_and(|k| record.iter.is_multiple_of(k));
        if keep_point {
            self.points.push(StoredPoint {
                iter: record.iter,
                x: x.to_vec(),
            });
        }
    }

    fn on_perturbation(&mut self, iter: u64, xi: &[f64]) {
        self.perturbations.push(StoredPoint { iter, x: xi.to_vec() });
    }

    fn on_finish(&mut self, last: &StepRecord, x: &[f64], stop: StopReason) {
        if self.records.last().map(|r| r.iter) != Some(last.iter) {
            self.records.push(*last);
        }
        if self.points.last().map(|p| p.iter) != Some(last.iter) {
            self.points.push(StoredPoint {
                iter: last.iter,
                x: x.to_vec(),
            });
        }
        self.stop = Some((stop, x.to_vec()));
    }
}
