use l1mp::instance::{
    gen_dense_matrix, gen_regular_sparse_matrix, gen_signal, parse_instance, write_instance,
    EnsembleSpec, Instance, MeasurementMatrix, RngSeed, SignalVector, STREAM_MATRIX, STREAM_SIGNAL,
};
use proptest::prelude::*;

#[test]
fn thousand_regular_graphs_have_exact_degrees() {
    let shapes = [(40, 20, 10, 20), (60, 30, 4, 8), (30, 20, 2, 3), (48, 36, 3, 4), (100, 50, 6, 12)];
    for g in 0..1000u64 {
        let (n, m, j, k) = shapes[(g % shapes.len() as u64) as usize];
        let spec = EnsembleSpec::regular(n, m, j, k).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(g, STREAM_MATRIX)).unwrap();
        assert_eq!(f.nnz(), n * j);
        assert!((0..n).all(|i| f.column_degree(i) == j), "graph {g}");
        assert!((0..m).all(|mu| f.row_degree(mu) == k), "graph {g}");
        let mut pairs: Vec<(usize, usize)> = f.edges().iter().map(|e| (e.row, e.col)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        assert_eq!(pairs.len(), n * j, "duplicate entry in graph {g}");
        for mu in 0..m {
            for &e in f.row_edges(mu) {
                assert_eq!(f.edge(e).row, mu);
            }
        }
    }
}

#[test]
fn sparse_measure_matches_densified_product() {
    for seed in 0..100u64 {
        let n = 20 + 2 * (seed as usize % 90);
        let spec = EnsembleSpec::regular_for_n(n, 3, 6).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(seed, STREAM_MATRIX)).unwrap();
        let x = gen_signal(n, 0.3, RngSeed::new(seed, STREAM_SIGNAL)).unwrap();
        let sparse = f.measure(&x).unwrap();
        let dense = f.to_dense().measure(&x).unwrap();
        for (a, b) in sparse.values().iter().zip(dense.values()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn generators_are_deterministic() {
    let spec = EnsembleSpec::regular(200, 100, 10, 20).unwrap();
    let a = gen_regular_sparse_matrix(&spec, RngSeed::new(5, 0)).unwrap();
    assert_eq!(a, gen_regular_sparse_matrix(&spec, RngSeed::new(5, 0)).unwrap());
    assert_ne!(a, gen_regular_sparse_matrix(&spec, RngSeed::new(5, 1)).unwrap());
    let dspec = EnsembleSpec::dense(50, 25).unwrap();
    assert_eq!(
        gen_dense_matrix(&dspec, RngSeed::new(9, 0)).unwrap(),
        gen_dense_matrix(&dspec, RngSeed::new(9, 0)).unwrap()
    );
    assert_eq!(
        gen_signal(1000, 0.2, RngSeed::new(3, 1)).unwrap(),
        gen_signal(1000, 0.2, RngSeed::new(3, 1)).unwrap()
    );
}

#[test]
fn zero_signal_gives_zero_measurements() {
    let spec = EnsembleSpec::regular(40, 20, 10, 20).unwrap();
    let f = gen_regular_sparse_matrix(&spec, RngSeed::new(1, 0)).unwrap();
    let y = f.measure(&SignalVector::new(vec![0.0; 40], 0.0)).unwrap();
    assert!(y.values().iter().all(|&v| v == 0.0));
}

fn round_trip(inst: &Instance) -> Instance {
    let mut buf = Vec::new();
    write_instance(&mut buf, inst).unwrap();
    parse_instance(&String::from_utf8(buf).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_round_trip_is_bit_exact(seed in any::<u64>(), half in 2usize..20, rho in 0.0f64..1.0, dense in any::<bool>()) {
        let n = 2 * half;
        let matrix: MeasurementMatrix = if dense {
            gen_dense_matrix(&EnsembleSpec::dense(n, half).unwrap(), RngSeed::new(seed, 0)).unwrap().into()
        } else {
            let spec = EnsembleSpec::regular_for_n(n, 2, 4).unwrap();
            gen_regular_sparse_matrix(&spec, RngSeed::new(seed, 0)).unwrap().into()
        };
        let signal = gen_signal(n, rho, RngSeed::new(seed, 1)).unwrap();
        let inst = Instance::measured(matrix, signal).unwrap();
        prop_assert_eq!(round_trip(&inst), inst);
    }

    #[test]
    fn regular_degrees_hold_for_any_seed(seed in any::<u64>(), cols in 4usize..60) {
        let spec = EnsembleSpec::regular_for_n(2 * cols, 3, 6).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(seed, 0)).unwrap();
        prop_assert!((0..f.n()).all(|i| f.column_degree(i) == 3));
        prop_assert!((0..f.m()).all(|mu| f.row_degree(mu) == 6));
    }
}
