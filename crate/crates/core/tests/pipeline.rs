use octopus::analysis::{escape_report, run_suite, Suite, SuiteOptions};
use octopus::landscape::{LandscapeDocument, LandscapeParams, Octopus};
use octopus::optimize::{run_gd, run_pgd, sample_init, trial_rng, GdConfig, InitScheme, PgdConfig, Stream};
use octopus::Error;
use std::f64::consts::E;

#[test]
fn pgd_run_to_escape_csv() {
    let p = LandscapeParams::new(3, 2.0, 1.0, E);
    let o = Octopus::new(p).unwrap();
    let x0 = sample_init(&mut trial_rng(7, 0, Stream::Init), 3, InitScheme::Cube { lo: 0.0, hi: 1.0 });
    let cfg = PgdConfig::new(
        GdConfig::new(0.125, 50_000).with_stop_dist_to_min(0.1),
        E / 100.0,
        1,
        E / 100.0,
        7,
    );
    let traj = run_pgd(&o, &x0, &cfg).unwrap();
    assert!(traj.last().dist_to_min.unwrap() <= 0.1);

    let report = escape_report(&traj, &p).unwrap();
    assert!(report.all_escaped() && report.reached_min);

    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let mut rows = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["saddle_index", "T_k", "T_k_tau", "quadratic_time", "ratio"]
    );
    let records: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 3);
    let t: Vec<u64> = records.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(t.windows(2).all(|w| w[0] < w[1]));

    let mut buf = Vec::new();
    traj.write_records_csv(&mut buf).unwrap();
    let n = csv::Reader::from_reader(buf.as_slice()).records().count();
    assert_eq!(n, traj.records.len());
}

#[test]
fn json_document_drives_a_run() {
    let doc = LandscapeDocument::from_json(r#"{"d": 2, "L": 1.5, "gamma": 1.0, "tau": 2.718281828459045}"#).unwrap();
    let o = Octopus::with_policy(doc.params, doc.oob_policy).unwrap();
    let traj = run_gd(&o, &[0.5, 0.5], &GdConfig::new(1.0 / 6.0, 2000).with_stop_dist_to_min(1e-6)).unwrap();
    assert!(traj.last().dist_to_min.unwrap() <= 1e-6);
}

#[test]
fn boundary_and_gradient_suites_pass() {
    let mut opts = SuiteOptions::new(LandscapeParams::new(3, E, 1.0, E));
    opts.face_points = 200;
    opts.gradient_points = 1000;
    for suite in [Suite::Boundary, Suite::Gradient] {
        for r in run_suite(suite, &opts).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }
}

#[test]
fn inverted_constants_are_rejected() {
    let p = LandscapeParams::new(3, 0.5, 1.0, E);
    assert!(matches!(Octopus::new(p), Err(Error::Parameter(_))));
    assert!(run_suite(Suite::All, &SuiteOptions::new(p)).is_err());
}
