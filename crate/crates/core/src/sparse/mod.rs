//! Compressed sparse storage for doubly sparse matrices.
//!
//! Every matrix is kept twice, once by rows and once by columns, both in CSR
//! form. The solvers need `O(s)` access to a single column (to push a
//! coordinate change of `x` into `b = Ax`) and to a single row (to push a
//! change of `b` into the gradient `Aᵀb`), so the memory is doubled in
//! exchange for never touching more than the affected entries.
//!
//! Values are `f64`. The incremental bookkeeping in the solvers accumulates
//! millions of small updates, so single precision is not an option.

mod io;

pub use io::{read_dsm, write_dsm, DSM_MAGIC};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking row sums of a stochastic matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_start: Vec<usize>,
    col_index: Vec<usize>,
    value: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles a CSR matrix from raw parts, checking every structural
    /// invariant (monotone offsets, strictly increasing in-row columns).
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_start: Vec<usize>,
        col_index: Vec<usize>,
        value: Vec<f64>,
    ) -> Result<Self> {
        if row_start.len() != n_rows + 1 {
            return Err(Error::BadFormat(format!(
                "row_start has length {}, expected {}",
                row_start.len(),
                n_rows + 1
            )));
        }
        if col_index.len() != value.len() {
            return Err(Error::BadFormat(
                "col_index and value lengths differ".to_string(),
            ));
        }
        if row_start[0] != 0 || row_start[n_rows] != col_index.len() {
            return Err(Error::BadFormat(
                "row_start endpoints are wrong".to_string(),
            ));
        }
        for row in 0..n_rows {
            let (lo, hi) = (row_start[row], row_start[row + 1]);
            if lo > hi || hi > col_index.len() {
                return Err(Error::BadFormat(format!(
                    "row_start decreases at row {row}"
                )));
            }
            let cols = &col_index[lo..hi];
            if let Some(&last) = cols.last() {
                if last >= n_cols {
                    return Err(Error::IndexOutOfRange {
                        row,
                        col: last,
                        n_rows,
                        n_cols,
                    });
                }
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::BadFormat(format!(
                    "columns of row {row} are not strictly increasing"
                )));
            }
        }
        if let Some(v) = value.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix value {v}")));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_start,
            col_index,
            value,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_index.len()
    }

    pub fn row_start(&self) -> &[usize] {
        &self.row_start
    }

    pub fn col_index(&self) -> &[usize] {
        &self.col_index
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_start[i], self.row_start[i + 1]);
        (&self.col_index[lo..hi], &self.value[lo..hi])
    }

    #[inline]
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_start[i + 1] - self.row_start[i]
    }

    /// Value at `(i, j)`, zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// All `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Counting-sort transpose; the result is again CSR with sorted rows.
    pub fn transpose(&self) -> CsrMatrix {
        let mut row_start = vec![0usize; self.n_cols + 1];
        for &j in &self.col_index {
            row_start[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            row_start[j + 1] += row_start[j];
        }
        let mut next = row_start.clone();
        let mut col_index = vec![0usize; self.nnz()];
        let mut value = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = next[j];
                col_index[slot] = i;
                value[slot] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_start,
            col_index,
            value,
        }
    }
}

/// One matrix stored by rows and by columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSparseMatrix {
    by_rows: CsrMatrix,
    by_cols: CsrMatrix,
}

impl DualSparseMatrix {
    /// Builds the column copy from the row copy.
    pub fn from_rows(by_rows: CsrMatrix) -> Self {
        let by_cols = by_rows.transpose();
        Self { by_rows, by_cols }
    }

    /// Builds both CSR copies from unordered triplets.
    ///
    /// Zero-valued triplets are dropped, so `nnz` counts structural nonzeros
    /// only. Duplicated `(row, col)` pairs are rejected even when one of them
    /// is zero.
    pub fn from_triplets(
        triplets: &[(usize, usize, f64)],
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        for &(row, col, v) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("entry ({row}, {col}) = {v}")));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = sorted
            .windows(2)
            .find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1)
        {
            return Err(Error::DuplicateEntry {
                row: w[0].0,
                col: w[0].1,
            });
        }

        let mut row_start = vec![0usize; n_rows + 1];
        let mut col_index = Vec::with_capacity(sorted.len());
        let mut value = Vec::with_capacity(sorted.len());
        for &(r, c, v) in sorted.iter().filter(|t| t.2 != 0.0) {
            row_start[r + 1] += 1;
            col_index.push(c);
            value.push(v);
        }
        for r in 0..n_rows {
            row_start[r + 1] += row_start[r];
        }
        let by_rows = CsrMatrix {
            n_rows,
            n_cols,
            row_start,
            col_index,
            value,
        };
        Ok(Self::from_rows(by_rows))
    }

    pub fn n_rows(&self) -> usize {
        self.by_rows.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.by_rows.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.by_rows.nnz()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows() == self.n_cols()
    }

    pub fn by_rows(&self) -> &CsrMatrix {
        &self.by_rows
    }

    pub fn by_cols(&self) -> &CsrMatrix {
        &self.by_cols
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.by_rows.row(i)
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        self.by_cols.row(j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.by_rows.get(i, j)
    }

    /// `y = Mx`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        spmv(&self.by_rows, x)
    }

    /// `y = Mᵀx`, using the column copy.
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Result<Vec<f64>> {
        spmv(&self.by_cols, x)
    }
}

/// Full sparse product `Mx` in `O(nnz)`.
pub fn spmv(m: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.n_cols {
        return Err(Error::DimensionMismatch {
            expected: m.n_cols,
            actual: x.len(),
        });
    }
    Ok((0..m.n_rows)
        .map(|i| {
            let (cols, vals) = m.row(i);
            cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
        })
        .collect())
}

/// Builds `A = Pᵀ − I` from a row-stochastic `P`.
///
/// Row `j` of `A` is column `j` of `P` with one subtracted on the diagonal;
/// a diagonal that cancels exactly (`P_jj = 1`) is dropped.
pub fn pagerank_operator(p: &DualSparseMatrix) -> Result<DualSparseMatrix> {
    check_row_stochastic(p)?;
    let n = p.n_rows();
    let mut row_start = Vec::with_capacity(n + 1);
    let mut col_index = Vec::with_capacity(p.nnz() + n);
    let mut value = Vec::with_capacity(p.nnz() + n);
    row_start.push(0);
    for j in 0..n {
        let (rows, vals) = p.col(j);
        let mut diagonal_done = false;
        for (&i, &v) in rows.iter().zip(vals) {
            if !diagonal_done && i >= j {
                diagonal_done = true;
                if i == j {
                    let d = v - 1.0;
                    if d != 0.0 {
                        col_index.push(j);
                        value.push(d);
                    }
                    continue;
                }
                col_index.push(j);
                value.push(-1.0);
            }
            col_index.push(i);
            value.push(v);
        }
        if !diagonal_done {
            col_index.push(j);
            value.push(-1.0);
        }
        row_start.push(col_index.len());
    }
    let by_rows = CsrMatrix {
        n_rows: n,
        n_cols: n,
        row_start,
        col_index,
        value,
    };
    Ok(DualSparseMatrix::from_rows(by_rows))
}

/// Checks that `p` is square, entrywise nonnegative, and every row sums to
/// one within [`STOCHASTIC_TOL`].
pub fn check_row_stochastic(p: &DualSparseMatrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::NotSquare {
            n_rows: p.n_rows(),
            n_cols: p.n_cols(),
        });
    }
    for i in 0..p.n_rows() {
        let (_, vals) = p.row(i);
        if let Some(&v) = vals.iter().find(|&&v| v < 0.0) {
            return Err(Error::NotStochastic {
                row: i,
                reason: format!("has negative entry {v}"),
            });
        }
        let sum: f64 = vals.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotStochastic {
                row: i,
                reason: format!("sums to {sum}"),
            });
        }
    }
    Ok(())
}

/// Checks that `a` has the shape of `Pᵀ − I` for some row-stochastic `P`:
/// square, off-diagonal entries in `[0, 1]`, diagonal in `[−1, 0]`, and
/// every column summing to zero.
pub fn check_operator(a: &DualSparseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    for j in 0..a.n_cols() {
        let (rows, vals) = a.col(j);
        let mut sum = 0.0;
        let mut has_diagonal = false;
        for (&i, &v) in rows.iter().zip(vals) {
            let ok = if i == j {
                has_diagonal = true;
                (-1.0..=0.0).contains(&v)
            } else {
                (0.0..=1.0).contains(&v)
            };
            if !ok {
                return Err(Error::NotOperator(format!("entry ({i}, {j}) = {v}")));
            }
            sum += v;
        }
        // a missing diagonal means P_jj = 1, so the whole column must be empty
        if (!has_diagonal && !rows.is_empty()) || sum.abs() > STOCHASTIC_TOL {
            return Err(Error::NotOperator(format!("column {j} sums to {sum}")));
        }
    }
    Ok(())
}

/// `½‖Ax‖₂²`, recomputed from scratch.
pub fn residual_two(a: &DualSparseMatrix, x: &[f64]) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    Ok(0.5 * ax.iter().map(|v| v * v).sum::<f64>())
}

/// `‖Ax‖_∞`, recomputed from scratch.
pub fn residual_inf(a: &DualSparseMatrix, x: &[f64]) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    Ok(ax.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Nonzero counts per row and per column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityStats {
    pub row_nnz_min: usize,
    pub row_nnz_max: usize,
    pub row_nnz_avg: f64,
    pub col_nnz_min: usize,
    pub col_nnz_max: usize,
    pub col_nnz_avg: f64,
}

pub fn sparsity_stats(m: &DualSparseMatrix) -> SparsityStats {
    fn axis(csr: &CsrMatrix) -> (usize, usize, f64) {
        if csr.n_rows() == 0 {
            return (0, 0, 0.0);
        }
        let (min, max) = (0..csr.n_rows())
            .map(|i| csr.row_nnz(i))
            .fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c), hi.max(c)));
        (min, max, csr.nnz() as f64 / csr.n_rows() as f64)
    }
    let (row_nnz_min, row_nnz_max, row_nnz_avg) = axis(m.by_rows());
    let (col_nnz_min, col_nnz_max, col_nnz_avg) = axis(m.by_cols());
    SparsityStats {
        row_nnz_min,
        row_nnz_max,
        row_nnz_avg,
        col_nnz_min,
        col_nnz_max,
        col_nnz_avg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle3() -> DualSparseMatrix {
        DualSparseMatrix::from_triplets(&[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], 3, 3).unwrap()
    }

    fn swap2() -> DualSparseMatrix {
        DualSparseMatrix::from_triplets(&[(0, 1, 1.0), (1, 0, 1.0)], 2, 2).unwrap()
    }

    fn identity(n: usize) -> DualSparseMatrix {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        DualSparseMatrix::from_triplets(&t, n, n).unwrap()
    }

    #[test]
    fn singleton() {
        let m = DualSparseMatrix::from_triplets(&[(0, 0, 1.0)], 1, 1).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.by_rows(), m.by_cols());
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let m = DualSparseMatrix::from_triplets(&[], 3, 3).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.by_cols().nnz(), 0);
        assert_eq!(m.by_rows().row_start(), &[0, 0, 0, 0]);
    }

    #[test]
    fn permutation_transpose() {
        let m = cycle3();
        assert_eq!(m.row(0), (&[1usize][..], &[1.0][..]));
        assert_eq!(m.col(1), (&[0usize][..], &[1.0][..]));
    }

    #[test]
    fn zero_triplets_dropped() {
        let m = DualSparseMatrix::from_triplets(&[(0, 0, 0.0), (1, 1, 2.0)], 2, 2).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 1), 2.0);
    }

    #[test]
    fn bad_triplets_rejected() {
        assert!(matches!(
            DualSparseMatrix::from_triplets(&[(0, 3, 1.0)], 2, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            DualSparseMatrix::from_triplets(&[(1, 1, 1.0), (0, 0, 1.0), (1, 1, 0.0)], 2, 2),
            Err(Error::DuplicateEntry { row: 1, col: 1 })
        ));
    }

    #[test]
    fn operator_of_identity_is_zero() {
        let a = pagerank_operator(&identity(3)).unwrap();
        assert_eq!(a.nnz(), 0);
        check_operator(&a).unwrap();
    }

    #[test]
    fn operator_of_cycle() {
        let a = pagerank_operator(&cycle3()).unwrap();
        for j in 0..3 {
            assert_eq!(a.get(j, j), -1.0);
            let (_, vals) = a.col(j);
            assert_eq!(vals.len(), 2);
            assert_eq!(vals.iter().sum::<f64>(), 0.0);
        }
        // P has 0 -> 1, so A = Pᵀ - I has A[1][0] = 1
        assert_eq!(a.get(1, 0), 1.0);
        check_operator(&a).unwrap();
    }

    #[test]
    fn operator_of_swap() {
        let a = pagerank_operator(&swap2()).unwrap();
        assert_eq!(a.get(0, 0), -1.0);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.get(1, 1), -1.0);
        assert_eq!(a.mul_vec(&[0.5, 0.5]).unwrap(), vec![0.0, 0.0]);
        assert_ne!(a.mul_vec(&[0.6, 0.4]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn operator_rejects_non_stochastic() {
        let p = DualSparseMatrix::from_triplets(&[(0, 0, 0.5), (1, 1, 1.0)], 2, 2).unwrap();
        assert!(matches!(
            pagerank_operator(&p),
            Err(Error::NotStochastic { row: 0, .. })
        ));
        let p = DualSparseMatrix::from_triplets(&[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 1.0)], 2, 2)
            .unwrap();
        assert!(pagerank_operator(&p).is_err());
        let p = DualSparseMatrix::from_triplets(&[(0, 0, 1.0)], 1, 2).unwrap();
        assert!(matches!(
            pagerank_operator(&p),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn check_operator_rejects_stochastic_input() {
        assert!(check_operator(&cycle3()).is_err());
        assert!(check_operator(&DualSparseMatrix::from_triplets(&[], 4, 4).unwrap()).is_ok());
    }

    #[test]
    fn spmv_basics() {
        let z = DualSparseMatrix::from_triplets(&[], 3, 3).unwrap();
        assert_eq!(z.mul_vec(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(
            identity(3).mul_vec(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let a = pagerank_operator(&cycle3()).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(a.mul_vec(&[third; 3]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            a.mul_vec(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 1
            })
        ));
    }

    #[test]
    fn residuals() {
        let z = DualSparseMatrix::from_triplets(&[], 2, 2).unwrap();
        assert_eq!(residual_two(&z, &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(residual_inf(&z, &[0.3, 0.7]).unwrap(), 0.0);

        let a = pagerank_operator(&swap2()).unwrap();
        assert_eq!(a.mul_vec(&[1.0, 0.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(residual_two(&a, &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(residual_inf(&a, &[1.0, 0.0]).unwrap(), 1.0);

        let a = pagerank_operator(&cycle3()).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(residual_two(&a, &[third; 3]).unwrap(), 0.0);
        assert_eq!(residual_inf(&a, &[third; 3]).unwrap(), 0.0);
    }

    #[test]
    fn stats() {
        let s = sparsity_stats(&identity(4));
        assert_eq!((s.row_nnz_min, s.row_nnz_max, s.row_nnz_avg), (1, 1, 1.0));
        assert_eq!((s.col_nnz_min, s.col_nnz_max, s.col_nnz_avg), (1, 1, 1.0));
        let s = sparsity_stats(&DualSparseMatrix::from_triplets(&[], 3, 3).unwrap());
        assert_eq!((s.row_nnz_min, s.row_nnz_max, s.row_nnz_avg), (0, 0, 0.0));
        assert_eq!((s.col_nnz_min, s.col_nnz_max, s.col_nnz_avg), (0, 0, 0.0));
    }

    fn random_triplets() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
        (1usize..30, 1usize..30).prop_flat_map(|(r, c)| {
            let cells = proptest::collection::btree_map((0..r, 0..c), -5.0f64..5.0, 0..(r * c));
            cells.prop_map(move |m| (r, c, m.into_iter().map(|((i, j), v)| (i, j, v)).collect()))
        })
    }

    proptest! {
        #[test]
        fn transpose_duality((r, c, t) in random_triplets()) {
            let m = DualSparseMatrix::from_triplets(&t, r, c).unwrap();
            let mut from_rows: Vec<_> = m.by_rows().triplets().collect();
            let mut from_cols: Vec<_> = m.by_cols().triplets().map(|(j, i, v)| (i, j, v)).collect();
            from_rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
            from_cols.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(from_rows, from_cols);
        }

        #[test]
        fn operator_columns_sum_to_zero(n in 1usize..40, s in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut t = Vec::new();
            for i in 0..n {
                let mut cols: Vec<usize> = (0..s.min(n)).map(|_| rng.random_range(0..n)).collect();
                cols.sort_unstable();
                cols.dedup();
                let w: Vec<f64> = cols.iter().map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = w.iter().sum();
                t.extend(cols.iter().zip(&w).map(|(&j, &v)| (i, j, v / total)));
            }
            let p = DualSparseMatrix::from_triplets(&t, n, n).unwrap();
            if check_row_stochastic(&p).is_ok() {
                let a = pagerank_operator(&p).unwrap();
                for j in 0..n {
                    let (_, vals) = a.col(j);
                    prop_assert!(vals.iter().sum::<f64>().abs() <= 1e-12);
                    prop_assert!(vals.iter().all(|v| (-1.0..=1.0).contains(v)));
                }
            }
        }
    }
}
