use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    DenseMeasurementMatrix, EnsembleKind, EnsembleSpec, InstanceError, MeasurementVector, RngSeed,
    SignalVector,
};

/// Full re-pairings tried before giving up on a simple graph.
pub const PAIRING_ATTEMPTS: usize = 100;

/// Random swap proposals allowed per edge while removing duplicate pairs.
const SWAPS_PER_EDGE: usize = 50;

/// A stored entry `F[row][col] = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse matrix stored as a bipartite edge list.
///
/// Edges are sorted by `(col, row)`, so the edges of column `i` occupy the
/// contiguous id range [`column_edges`](Self::column_edges). Rows keep a list
/// of edge ids. Edge ids index the per-edge message arrays of the BP solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMeasurementMatrix {
    n: usize,
    m: usize,
    edges: Vec<Edge>,
    col_offsets: Vec<usize>,
    row_offsets: Vec<usize>,
    row_edges: Vec<usize>,
}

impl SparseMeasurementMatrix {
    pub fn from_edges(n: usize, m: usize, mut edges: Vec<Edge>) -> Result<Self, InstanceError> {
        for e in &edges {
            if e.row >= m || e.col >= n {
                return Err(InstanceError::IndexOutOfRange {
                    row: e.row,
                    col: e.col,
                    m,
                    n,
                });
            }
            if !e.value.is_finite() {
                return Err(InstanceError::NonFinite {
                    what: "matrix entry",
                    value: e.value,
                });
            }
        }
        edges.sort_by_key(|e| (e.col, e.row));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].col, w[0].row) == (w[1].col, w[1].row))
        {
            return Err(InstanceError::DuplicateEdge {
                row: w[0].row,
                col: w[0].col,
            });
        }

        let mut col_offsets = vec![0usize; n + 1];
        let mut row_offsets = vec![0usize; m + 1];
        for e in &edges {
            col_offsets[e.col + 1] += 1;
            row_offsets[e.row + 1] += 1;
        }
        for i in 0..n {
            col_offsets[i + 1] += col_offsets[i];
        }
        for mu in 0..m {
            row_offsets[mu + 1] += row_offsets[mu];
        }
        let mut fill = row_offsets.clone();
        let mut row_edges = vec![0usize; edges.len()];
        for (id, e) in edges.iter().enumerate() {
            row_edges[fill[e.row]] = id;
            fill[e.row] += 1;
        }

        Ok(Self {
            n,
            m,
            edges,
            col_offsets,
            row_offsets,
            row_edges,
        })
    }

    /// Stores every nonzero entry of a dense matrix.
    pub fn from_dense(f: &DenseMeasurementMatrix) -> Self {
        let mut edges = Vec::new();
        for mu in 0..f.m() {
            for (i, &v) in f.row(mu).iter().enumerate() {
                if v != 0.0 {
                    edges.push(Edge {
                        row: mu,
                        col: i,
                        value: v,
                    });
                }
            }
        }
        Self::from_edges(f.n(), f.m(), edges).expect("dense entries are finite and unique")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nnz(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Edge ids incident to column `i`.
    pub fn column_edges(&self, i: usize) -> Range<usize> {
        self.col_offsets[i]..self.col_offsets[i + 1]
    }

    /// Edge ids incident to row `mu`.
    pub fn row_edges(&self, mu: usize) -> &[usize] {
        &self.row_edges[self.row_offsets[mu]..self.row_offsets[mu + 1]]
    }

    pub fn column_degree(&self, i: usize) -> usize {
        self.col_offsets[i + 1] - self.col_offsets[i]
    }

    pub fn row_degree(&self, mu: usize) -> usize {
        self.row_offsets[mu + 1] - self.row_offsets[mu]
    }

    pub fn to_dense(&self) -> DenseMeasurementMatrix {
        let mut values = vec![0.0; self.m * self.n];
        for e in &self.edges {
            values[e.row * self.n + e.col] = e.value;
        }
        DenseMeasurementMatrix::new(self.n, self.m, values).expect("finite by construction")
    }

    /// `F x` evaluated row by row over each row's neighborhood.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.m)
            .map(|mu| {
                self.row_edges(mu)
                    .iter()
                    .map(|&id| {
                        let e = &self.edges[id];
                        e.value * x[e.col]
                    })
                    .sum()
            })
            .collect()
    }

    pub fn measure(&self, x: &SignalVector) -> Result<MeasurementVector, InstanceError> {
        if x.len() != self.n {
            return Err(InstanceError::DimensionMismatch {
                what: "signal",
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(MeasurementVector::new(self.mul_vec(x.values())))
    }

    /// Column sums of squared entries, `Σ_μ F²_{μi}`.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.column_edges(i)
                    .map(|id| self.edges[id].value * self.edges[id].value)
                    .sum()
            })
            .collect()
    }
}

/// Draws a regular `(j, k)` matrix with `N(0, 1)` edge values.
pub fn gen_regular_sparse_matrix(
    spec: &EnsembleSpec,
    seed: RngSeed,
) -> Result<SparseMeasurementMatrix, InstanceError> {
    gen_regular_sparse_matrix_with(spec, seed, &StandardNormal)
}

/// Draws a regular `(j, k)` matrix with edge values from `values`.
///
/// Column sockets are paired with a uniformly shuffled list of row sockets.
/// Pairs that repeat an existing `(row, column)` entry are then removed by
/// random socket swaps that keep every degree fixed. If the swap budget runs
/// out the whole pairing is redrawn, up to [`PAIRING_ATTEMPTS`] times.
pub fn gen_regular_sparse_matrix_with<D: Distribution<f64>>(
    spec: &EnsembleSpec,
    seed: RngSeed,
    values: &D,
) -> Result<SparseMeasurementMatrix, InstanceError> {
    spec.validate()?;
    let EnsembleKind::RegularSparse { j, k } = spec.kind else {
        return Err(InstanceError::InvalidSpec(
            "a regular sparse ensemble is required".into(),
        ));
    };
    let mut rng = seed.rng();
    for _ in 0..PAIRING_ATTEMPTS {
        if let Some(rows) = pair_sockets(spec.n, spec.m, j, k, &mut rng) {
            let edges = rows
                .into_iter()
                .enumerate()
                .map(|(socket, row)| Edge {
                    row,
                    col: socket / j,
                    value: values.sample(&mut rng),
                })
                .collect();
            return SparseMeasurementMatrix::from_edges(spec.n, spec.m, edges);
        }
    }
    Err(InstanceError::PairingFailed {
        attempts: PAIRING_ATTEMPTS,
    })
}

/// Returns the row attached to each column socket (column `socket / j`), or
/// `None` if duplicates could not be removed within the swap budget.
///
/// Columns hold only `j` sockets, so membership tests scan the column
/// instead of maintaining a pair count.
fn pair_sockets<R: Rng>(n: usize, m: usize, j: usize, k: usize, rng: &mut R) -> Option<Vec<usize>> {
    let mut rows: Vec<usize> = (0..m).flat_map(|mu| std::iter::repeat(mu).take(k)).collect();
    rows.shuffle(rng);
    let n_edges = rows.len();
    debug_assert_eq!(n_edges, n * j);

    let column = |c: usize| (c * j)..((c + 1) * j);
    let repeats = |rows: &[usize], s: usize| {
        let c = s / j;
        rows[column(c)].iter().filter(|&&r| r == rows[s]).count() > 1
    };
    let mut pending: Vec<usize> = (0..n_edges).filter(|&s| repeats(&rows, s)).collect();

    let mut budget = SWAPS_PER_EDGE * n_edges;
    while let Some(s) = pending.pop() {
        if !repeats(&rows, s) {
            continue;
        }
        let (cs, rs) = (s / j, rows[s]);
        loop {
            if budget == 0 {
                return None;
            }
            budget -= 1;
            let t = rng.random_range(0..n_edges);
            let (ct, rt) = (t / j, rows[t]);
            if ct == cs || rt == rs {
                continue;
            }
            if rows[column(cs)].contains(&rt) || rows[column(ct)].contains(&rs) {
                continue;
            }
            rows.swap(s, t);
            break;
        }
    }
    Some(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees_exact(f: &SparseMeasurementMatrix, j: usize, k: usize) -> bool {
        (0..f.n()).all(|i| f.column_degree(i) == j) && (0..f.m()).all(|mu| f.row_degree(mu) == k)
    }

    #[test]
    fn ten_twenty_ensemble_small() {
        let spec = EnsembleSpec::regular(40, 20, 10, 20).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(1, 0)).unwrap();
        assert!(degrees_exact(&f, 10, 20));
        assert_eq!(f.nnz(), 400);
    }

    #[test]
    fn forced_complete_bipartite() {
        let spec = EnsembleSpec::regular(3, 2, 2, 3).unwrap();
        for seed in 0..20 {
            let f = gen_regular_sparse_matrix(&spec, RngSeed::new(seed, 0)).unwrap();
            assert_eq!(f.nnz(), 6);
            let mut pairs: Vec<(usize, usize)> = f.edges().iter().map(|e| (e.row, e.col)).collect();
            pairs.sort();
            assert_eq!(pairs, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        }
    }

    #[test]
    fn large_ensemble_histogram_and_mean() {
        let spec = EnsembleSpec::regular(3200, 1600, 10, 20).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(2024, 0)).unwrap();
        assert!(degrees_exact(&f, 10, 20));
        assert_eq!(f.nnz(), 32_000);
        let mean = f.edges().iter().map(|e| e.value).sum::<f64>() / 32_000.0;
        assert!(mean.abs() < 4.0 / 32_000f64.sqrt(), "mean {mean}");
    }

    #[test]
    fn adjacency_consistent() {
        let spec = EnsembleSpec::regular(60, 30, 4, 8).unwrap();
        let f = gen_regular_sparse_matrix(&spec, RngSeed::new(5, 0)).unwrap();
        for i in 0..f.n() {
            for id in f.column_edges(i) {
                assert_eq!(f.edge(id).col, i);
            }
        }
        let mut seen = vec![false; f.nnz()];
        for mu in 0..f.m() {
            for &id in f.row_edges(mu) {
                assert_eq!(f.edge(id).row, mu);
                assert!(!seen[id]);
                seen[id] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = EnsembleSpec::regular(100, 50, 4, 8).unwrap();
        let a = gen_regular_sparse_matrix(&spec, RngSeed::new(9, 4)).unwrap();
        let b = gen_regular_sparse_matrix(&spec, RngSeed::new(9, 4)).unwrap();
        let c = gen_regular_sparse_matrix(&spec, RngSeed::new(10, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_wrong_kind_and_bad_spec() {
        let dense = EnsembleSpec::dense(10, 5).unwrap();
        assert!(gen_regular_sparse_matrix(&dense, RngSeed::default()).is_err());
        let bad = EnsembleSpec {
            n: 10,
            m: 5,
            kind: EnsembleKind::RegularSparse { j: 3, k: 7 },
        };
        assert!(matches!(
            gen_regular_sparse_matrix(&bad, RngSeed::default()),
            Err(InstanceError::InvalidSpec(_))
        ));
    }

    #[test]
    fn from_edges_rejects_duplicates_and_out_of_range() {
        let e = |row, col| Edge { row, col, value: 1.0 };
        assert!(matches!(
            SparseMeasurementMatrix::from_edges(3, 2, vec![e(0, 1), e(0, 1)]),
            Err(InstanceError::DuplicateEdge { row: 0, col: 1 })
        ));
        assert!(matches!(
            SparseMeasurementMatrix::from_edges(3, 2, vec![e(2, 1)]),
            Err(InstanceError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn measure_by_hand() {
        let f = SparseMeasurementMatrix::from_edges(
            2,
            1,
            vec![
                Edge { row: 0, col: 0, value: 1.0 },
                Edge { row: 0, col: 1, value: 2.0 },
            ],
        )
        .unwrap();
        let y = f.measure(&SignalVector::new(vec![3.0, -1.0], 1.0)).unwrap();
        assert_eq!(y.values(), &[1.0]);
        assert!(f.measure(&SignalVector::new(vec![1.0], 1.0)).is_err());
    }
}
