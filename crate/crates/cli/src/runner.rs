use crate::args::Algo;
use crate::experiment::{Cell, ExperimentSpec};
use crate::failure::Failure;
use anyhow::Context;
use octopus::analysis::{EscapeReport, EscapeTracker};
use octopus::landscape::Octopus;
use octopus::optimize::{
    run_gd_observed, run_pgd_observed, sample_init, stream_id, trial_rng, GdConfig, PgdConfig, RunConfig,
    Stream, TrajectoryRecorder,
};
use rayon::prelude::*;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Removes everything it registered unless `commit` is called.
struct OutputGuard {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        let created_dir = if dir.exists() {
            None
        } else {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            Some(dir.to_path_buf())
        };
        Ok(OutputGuard {
            files: Vec::new(),
            created_dir,
            committed: false,
        })
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
        if let Some(dir) = &self.created_dir {
            let _ = std::fs::remove_dir(dir);
        }
    }
}

struct Job {
    cell: usize,
    trial: u64,
    traj_path: PathBuf,
    escape_path: PathBuf,
}

/// Result of one trial, kept for the summary.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub cell: usize,
    pub trial: u64,
    pub report: EscapeReport,
    /// Iterations actually run.
    pub iterations: u64,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn run_trial(spec: &ExperimentSpec, cell: &Cell, landscape: &Octopus, job: &Job) -> Result<TrialOutcome, Failure> {
    let d = cell.params.d;
    let x0 = sample_init(&mut trial_rng(spec.seed, job.trial, Stream::Init), d, spec.init_scheme);
    let mut gd = GdConfig::new(cell.eta, cell.max_iters).with_store_every(None);
    gd.stop_dist_to_min = spec.stop_dist;
    let mut recorder = TrajectoryRecorder::new(None, cell.record_every);
    let mut tracker = EscapeTracker::new(cell.params);
    let (config, seed) = match cell.algo {
        Algo::Pgd => {
            let pgd = PgdConfig::new(gd, spec.r, spec.tthres, spec.gthres, spec.seed)
                .with_stream(stream_id(job.trial, Stream::Noise));
            run_pgd_observed(landscape, &x0, &pgd, (&mut recorder, &mut tracker))?;
            (RunConfig::Pgd(pgd), Some(spec.seed))
        }
        _ => {
            run_gd_observed(landscape, &x0, &gd, (&mut recorder, &mut tracker))?;
            (RunConfig::Gd(gd), None)
        }
    };
    let traj = recorder.finish(config, seed, Some(cell.params));
    let report = tracker.report();
    let mut out = create(&job.traj_path)?;
    traj.write_records_csv(&mut out)?;
    out.flush().context("flush trajectory")?;
    let mut out = create(&job.escape_path)?;
    report.write_csv(&mut out)?;
    out.flush().context("flush escape report")?;
    log::debug!("{} trial {}: {} iterations", cell.tag(), job.trial, traj.last().iter);
    Ok(TrialOutcome {
        cell: job.cell,
        trial: job.trial,
        iterations: report.total_iters,
        report,
    })
}

/// Runs every (cell, trial) and writes trajectory, escape and summary files
/// into `spec.out`. On failure nothing written by this call is left behind.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>, Failure> {
    let cells = spec.cells();
    let landscapes = spec
        .landscapes()
        .map(Octopus::new)
        .collect::<Result<Vec<_>, _>>()?;
    let per_landscape = spec.algo.expand().len();

    let mut guard = OutputGuard::new(&spec.out)?;
    let jobs: Vec<Job> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, cell)| {
            (0..spec.trials).map(move |trial| Job {
                cell: i,
                trial,
                traj_path: spec.out.join(format!("traj_{}_{trial:03}.csv", cell.tag())),
                escape_path: spec.out.join(format!("escape_{}_{trial:03}.csv", cell.tag())),
            })
        })
        .collect();
    let summary_path = spec.out.join("summary.csv");
    let saddles_path = spec.out.join("summary_saddles.csv");
    let spec_path = spec.out.join("experiment.json");
    guard.files.extend(jobs.iter().flat_map(|j| [j.traj_path.clone(), j.escape_path.clone()]));
    guard.files.extend([summary_path.clone(), saddles_path.clone(), spec_path.clone()]);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.unwrap_or(0))
        .build()
        .context("cannot start worker pool")?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let cell = &cells[job.cell];
                run_trial(spec, cell, &landscapes[job.cell / per_landscape], job)
                    .map_err(|e| annotate(e, &format!("{} trial {}", cell.tag(), job.trial)))
            })
            .collect::<Result<_, _>>()
    })?;

    let mut out = create(&summary_path)?;
    write_summary(&mut out, spec, &cells, &outcomes)?;
    out.flush().context("flush summary")?;
    let mut out = create(&saddles_path)?;
    write_saddle_summary(&mut out, &cells, &outcomes)?;
    out.flush().context("flush summary")?;
    std::fs::write(&spec_path, serde_json::to_string_pretty(spec).context("serialize experiment")? + "\n")
        .with_context(|| format!("cannot write {}", spec_path.display()))?;

    let files = guard.files.clone();
    guard.commit();
    Ok(files)
}

fn annotate(e: Failure, what: &str) -> Failure {
    match e {
        Failure::Runtime(err) => Failure::Runtime(err.context(what.to_string())),
        other => other,
    }
}

/// Median of a non-empty sample; the mean of the middle pair for even sizes.
pub fn median(values: &mut [u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
    })
}

fn cell_outcomes(outcomes: &[TrialOutcome], cell: usize) -> impl Iterator<Item = &TrialOutcome> {
    outcomes.iter().filter(move |o| o.cell == cell)
}

fn cell_key(cell: &Cell) -> [String; 3] {
    [cell.params.d.to_string(), cell.params.l.to_string(), cell.algo.name().into()]
}

fn write_summary<W: Write>(out: W, spec: &ExperimentSpec, cells: &[Cell], outcomes: &[TrialOutcome]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "d",
        "L",
        "algo",
        "eta",
        "max_iters",
        "trials",
        "reached_min",
        "median_total_iters",
    ])?;
    for (i, cell) in cells.iter().enumerate() {
        let reached = cell_outcomes(outcomes, i).filter(|o| o.report.reached_min).count();
        let mut iters: Vec<u64> = cell_outcomes(outcomes, i).map(|o| o.iterations).collect();
        let [d, l, algo] = cell_key(cell);
        w.write_record([
            d,
            l,
            algo,
            cell.eta.to_string(),
            cell.max_iters.to_string(),
            spec.trials.to_string(),
            reached.to_string(),
            median(&mut iters).map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_saddle_summary<W: Write>(out: W, cells: &[Cell], outcomes: &[TrialOutcome]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "L", "algo", "saddle_index", "escaped", "median_escape_count"])?;
    for (i, cell) in cells.iter().enumerate() {
        for k in 0..cell.params.d {
            let mut counts: Vec<u64> = cell_outcomes(outcomes, i)
                .filter_map(|o| o.report.escape_counts()[k])
                .collect();
            let [d, l, algo] = cell_key(cell);
            w.write_record([
                d,
                l,
                algo,
                (k + 1).to_string(),
                counts.len().to_string(),
                median(&mut counts).map(|m| m.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3, 1, 2]), Some(2.0));
        assert_eq!(median(&mut [4, 1, 2, 3]), Some(2.5));
    }

    #[test]
    fn guard_cleans_up_unless_committed() {
        let base = std::env::temp_dir().join(format!("octopus-guard-{}", std::process::id()));
        let dir = base.join("out");
        {
            let mut g = OutputGuard::new(&dir).unwrap();
            let f = dir.join("a.csv");
            std::fs::write(&f, "x").unwrap();
            g.files.push(f);
        }
        assert!(!dir.exists());
        {
            let mut g = OutputGuard::new(&dir).unwrap();
            let f = dir.join("a.csv");
            std::fs::write(&f, "x").unwrap();
            g.files.push(f);
            g.commit();
        }
        assert!(dir.join("a.csv").exists());
        std::fs::remove_dir_all(base).unwrap();
    }
}
