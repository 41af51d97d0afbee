use octopus::analysis::{escape_report, EscapeTracker};
use octopus::landscape::{Landscape, LandscapeParams, Octopus, RegionKind};
use octopus::optimize::{
    run_gd, run_gd_observed, run_pgd, sample_init, seeded_rng, stream_id, GdConfig, InitScheme, PgdConfig,
    StepObserver, StepRecord, Stream,
};
use proptest::prelude::*;
use std::f64::consts::E;

fn unit_cube(d: usize, seed: u64) -> Vec<f64> {
    sample_init(&mut seeded_rng(seed, 0), d, InitScheme::Cube { lo: 0.0, hi: 1.0 })
}

fn pgd_config(seed: u64, max_iters: u64) -> PgdConfig {
    PgdConfig::new(
        GdConfig::new(1.0 / 12.0, max_iters).with_stop_dist_to_min(0.1),
        E / 100.0,
        1,
        E / 100.0,
        seed,
    )
    .with_stream(stream_id(seed, Stream::Noise))
}

#[derive(Default)]
struct Progression {
    last: usize,
    regressions: u32,
    out_of_domain: u32,
}

impl StepObserver for Progression {
    fn on_step(&mut self, r: &StepRecord, _x: &[f64]) {
        self.regressions += u32::from(r.saddle_index < self.last);
        self.out_of_domain += u32::from(r.oob || r.kind == RegionKind::OutOfDomain);
        self.last = r.saddle_index;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gd_stays_in_domain_and_moves_forward(
        d in 2usize..=6,
        l in 1.0f64..3.0,
        eta_frac in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let o = Octopus::new(LandscapeParams::new(d, l, 1.0, E)).unwrap();
        let eta = eta_frac / (2.0 * l);
        let mut watch = Progression::default();
        run_gd_observed(&o, &unit_cube(d, seed), &GdConfig::new(eta, 3000).with_store_every(None), &mut watch)
            .unwrap();
        prop_assert_eq!(watch.regressions, 0);
        prop_assert_eq!(watch.out_of_domain, 0);
    }

    #[test]
    fn pgd_stays_in_domain(seed in any::<u64>(), d in prop::sample::select(vec![3usize, 5])) {
        let o = Octopus::new(LandscapeParams::new(d, 3.0, 1.0, E)).unwrap();
        let traj = run_pgd(&o, &unit_cube(d, seed), &pgd_config(seed, 20_000)).unwrap();
        prop_assert!(traj.records.iter().all(|r| !r.oob && r.kind != RegionKind::OutOfDomain));
    }

    #[test]
    fn pgd_is_deterministic(seed in any::<u64>()) {
        let o = Octopus::new(LandscapeParams::new(3, 2.0, 1.0, E)).unwrap();
        let x0 = unit_cube(3, seed);
        let a = run_pgd(&o, &x0, &pgd_config(seed, 5000)).unwrap();
        let b = run_pgd(&o, &x0, &pgd_config(seed, 5000)).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        prop_assert_eq!(&a.points, &b.points);
        let p = *o.params().unwrap();
        prop_assert_eq!(escape_report(&a, &p).unwrap(), escape_report(&b, &p).unwrap());
    }

    #[test]
    fn minimum_value_is_a_lower_bound(d in 2usize..=6, seed in any::<u64>()) {
        let o = Octopus::new(LandscapeParams::new(d, E, 1.0, E)).unwrap();
        let floor = -(d as f64) * o.nu();
        let mut rng = seeded_rng(seed, 1);
        for _ in 0..64 {
            let x = o.sample_domain(&mut rng);
            prop_assert!(o.eval(&x).unwrap().value >= floor - 1e-9 * floor.abs());
        }
    }

    #[test]
    fn escape_report_from_tracker_matches_trajectory(seed in any::<u64>(), l in 1.0f64..3.0) {
        let p = LandscapeParams::new(4, l, 1.0, E);
        let o = Octopus::new(p).unwrap();
        let cfg = GdConfig::new(1.0 / (4.0 * l), 4000);
        let x0 = unit_cube(4, seed);
        let traj = run_gd(&o, &x0, &cfg).unwrap();
        let mut tracker = EscapeTracker::new(p);
        run_gd_observed(&o, &x0, &cfg, &mut tracker).unwrap();
        prop_assert_eq!(escape_report(&traj, &p).unwrap(), tracker.report());
    }

    #[test]
    fn dwell_bound_holds(seed in any::<u64>(), l in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let p = LandscapeParams::new(4, l, 1.0, E);
        let o = Octopus::new(p).unwrap();
        let eta = 1.0 / (4.0 * l);
        let mut tracker = EscapeTracker::new(p);
        run_gd_observed(&o, &unit_cube(4, seed), &GdConfig::new(eta, 20_000).with_store_every(None), &mut tracker)
            .unwrap();
        let cap = (1.0 / (2.0 * eta)).ceil() as u64 + 1;
        for s in tracker.report().saddles {
            prop_assert!(s.dwell_observed <= cap, "{:?}", s);
        }
    }
}
