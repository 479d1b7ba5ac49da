use l1mp::experiments::{
    read_aggregates, render_chart, rho_grid, run_density_evolution, run_sweep, trial_seed, write_aggregates,
    write_chart, write_records, ExperimentError, SolverKind, SweepConfig, SweepTable, AGGREGATE_HEADER,
    RECORD_HEADER,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn small(solver: SolverKind, rhos: Vec<f64>) -> SweepConfig {
    let n = if solver == SolverKind::Amp { 100 } else { 200 };
    SweepConfig {
        trials: 6,
        ..SweepConfig::new(solver, vec![n], rhos)
    }
}

#[test]
fn zero_signal_is_always_recovered() {
    for solver in [SolverKind::Bp, SolverKind::Amp] {
        let t = run_sweep(&small(solver, vec![0.0])).unwrap();
        assert!(t.aggregates.iter().all(|a| a.p_success == 1.0), "{solver:?}");
    }
    let t = run_density_evolution(&small(SolverKind::Bp, vec![0.0])).unwrap();
    assert_eq!(t.aggregates[0].solver, SolverKind::De);
    assert_eq!(t.aggregates[0].p_success, 1.0);
}

#[test]
fn success_flag_matches_mse() {
    let t = run_sweep(&small(SolverKind::Amp, vec![0.1, 0.3])).unwrap();
    for r in &t.records {
        assert_eq!(r.success, r.mse < 1e-8);
    }
}

#[test]
fn sweeps_are_reproducible_across_thread_counts() {
    for solver in [SolverKind::Bp, SolverKind::Amp, SolverKind::De] {
        let cfg = small(solver, vec![0.1, 0.2]);
        let run = |c: &SweepConfig| {
            if solver == SolverKind::De {
                run_density_evolution(&SweepConfig { solver: SolverKind::Bp, ..c.clone() }).unwrap()
            } else {
                run_sweep(c).unwrap()
            }
        };
        let a = run(&cfg);
        let b = run(&SweepConfig { threads: 3, ..cfg.clone() });
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!(x.same_outcome(y), "{x:?} vs {y:?}");
        }
        assert_eq!(a.aggregates, b.aggregates);
    }
}

#[test]
fn changing_one_rho_leaves_other_points_alone() {
    let a = run_sweep(&small(SolverKind::Bp, vec![0.1, 0.2])).unwrap();
    let b = run_sweep(&small(SolverKind::Bp, vec![0.1, 0.25])).unwrap();
    let at = |t: &SweepTable, rho: f64| t.records.iter().filter(|r| r.rho == rho).cloned().collect::<Vec<_>>();
    for (x, y) in at(&a, 0.1).iter().zip(&at(&b, 0.1)) {
        assert!(x.same_outcome(y));
    }
    for (x, y) in at(&a, 0.2).iter().zip(&at(&b, 0.25)) {
        assert_ne!(x.seed, y.seed);
    }
}

#[test]
fn trial_seeds_do_not_collide() {
    let mut seen = std::collections::HashSet::new();
    for n in [100, 200, 400] {
        for rho in rho_grid(0.0, 0.5, 0.05).unwrap() {
            for t in 0..100 {
                assert!(seen.insert(trial_seed(7, n, rho, t)));
            }
        }
    }
}

#[test]
fn empty_tables_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    assert!(matches!(write_records(&path, &[]), Err(ExperimentError::EmptyTable)));
    assert!(matches!(write_aggregates(&path, &[]), Err(ExperimentError::EmptyTable)));
    assert!(matches!(write_chart(&path, &[]), Err(ExperimentError::EmptyTable)));
    assert!(!path.exists());
}

#[test]
fn single_record_table() {
    let cfg = SweepConfig { trials: 1, ..small(SolverKind::Amp, vec![0.1]) };
    let t = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    write_records(&path, &t.records).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], RECORD_HEADER);
    assert!(lines[1].starts_with("amp,100,50,0.5,0.1,0,0,0,"));
}

#[test]
fn aggregates_survive_a_round_trip() {
    let t = run_sweep(&small(SolverKind::Bp, vec![0.05, 0.15, 0.3])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agg.csv");
    write_aggregates(&path, &t.aggregates).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().next(), Some(AGGREGATE_HEADER));
    assert_eq!(read_aggregates(&path).unwrap(), t.aggregates);
}

#[test]
fn chart_has_one_polyline_per_n() {
    let cfg = SweepConfig {
        ns: vec![100, 200],
        ..small(SolverKind::Bp, vec![0.05, 0.2, 0.35])
    };
    let t = run_sweep(&cfg).unwrap();
    let svg = render_chart(&t.aggregates).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chart.svg");
    write_chart(&path, &t.aggregates).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), svg);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = small(SolverKind::Bp, vec![0.1]);
    for cfg in [
        SweepConfig { trials: 0, ..base.clone() },
        SweepConfig { threads: 0, ..base.clone() },
        SweepConfig { rhos: vec![], ..base.clone() },
        SweepConfig { rhos: vec![1.5], ..base.clone() },
        SweepConfig { j: 3, k: 5, ..base.clone() },
        SweepConfig { ns: vec![201], ..base.clone() },
    ] {
        assert!(run_sweep(&cfg).is_err(), "{cfg:?}");
    }
    assert!(run_density_evolution(&small(SolverKind::Amp, vec![0.1])).is_err());
}

/// The BP success curve steepens with `n` on both sides of its crossing:
/// more success below it and less above it, up to 3-sigma binomial slack.
#[test]
fn bp_transition_sharpens_with_n() {
    let cfg = SweepConfig {
        ns: vec![3200, 6400],
        trials: 50,
        threads: 4,
        ..SweepConfig::new(SolverKind::Bp, vec![], vec![0.13, 0.20])
    };
    let t = run_sweep(&cfg).unwrap();
    let p = |n, rho| t.aggregate(n, rho).unwrap();
    let slack = |a: &l1mp::experiments::Aggregate, b: &l1mp::experiments::Aggregate| {
        // Floor the per-point error so p = 0 or 1 does not give zero slack.
        let s = |x: &l1mp::experiments::Aggregate| x.stderr.max(0.5 / x.trials as f64);
        3.0 * (s(a).powi(2) + s(b).powi(2)).sqrt()
    };
    let (lo_small, lo_big) = (p(3200, 0.13), p(6400, 0.13));
    let (hi_small, hi_big) = (p(3200, 0.20), p(6400, 0.20));
    assert!(lo_big.p_success >= lo_small.p_success - slack(lo_small, lo_big), "{lo_small:?} {lo_big:?}");
    assert!(hi_big.p_success <= hi_small.p_success + slack(hi_small, hi_big), "{hi_small:?} {hi_big:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn aggregation_ignores_record_order(shuffle in any::<u64>()) {
        static TABLE: OnceLock<SweepTable> = OnceLock::new();
        let t = TABLE.get_or_init(|| {
            run_sweep(&SweepConfig { trials: 4, ..small(SolverKind::Amp, vec![0.1, 0.25]) }).unwrap()
        });
        let mut shuffled = t.records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        prop_assert_eq!(&SweepTable::from_records(shuffled).aggregates, &t.aggregates);
    }
}
