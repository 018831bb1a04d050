//! Compressed sparse matrices and a sparse LU factorization with partial
//! pivoting (left-looking Gilbert–Peierls, CSparse-style).

use crate::error::{Error, Result};
use crate::series::C64;
use nalgebra::{DMatrix, DVector};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Complex sparse matrix in compressed sparse row format.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet out of bounds");
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    data.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, c(1.0))))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        CsrMatrix::from_triplets(n, n, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.data[p]))
        })
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)),
        )
    }

    pub fn scale(&self, s: C64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        CsrMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().chain(other.triplets()),
        )
    }

    /// y = A x
    pub fn matvec(&self, x: &DVector<C64>) -> DVector<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let mut acc = C64::default();
            for p in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[p] * x[self.indices[p]];
            }
            y[i] = acc;
        }
        y
    }

    /// Y = A X for a dense block of vectors.
    pub fn matmul_dense(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let a = self.data[p];
                let j = self.indices[p];
                for col in 0..x.ncols() {
                    y[(i, col)] += a * x[(j, col)];
                }
            }
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1])
                    .map(|p| self.data[p].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest |a_ij - a_ji| over all entries.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut dev = 0.0f64;
        // both matrices sorted by (row, col); walk rows in parallel
        for i in 0..self.nrows {
            let mut pa = self.indptr[i];
            let mut pb = t.indptr[i];
            let ea = self.indptr[i + 1];
            let eb = t.indptr[i + 1];
            while pa < ea || pb < eb {
                let ja = if pa < ea { self.indices[pa] } else { usize::MAX };
                let jb = if pb < eb { t.indices[pb] } else { usize::MAX };
                if ja == jb {
                    dev = dev.max((self.data[pa] - t.data[pb]).norm());
                    pa += 1;
                    pb += 1;
                } else if ja < jb {
                    dev = dev.max(self.data[pa].norm());
                    pa += 1;
                } else {
                    dev = dev.max(t.data[pb].norm());
                    pb += 1;
                }
            }
        }
        dev
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            out[(i, j)] = v;
        }
        out
    }

    /// Row indices that carry at least one structural nonzero entry.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.nrows)
            .filter(|&i| {
                (self.indptr[i]..self.indptr[i + 1]).any(|p| self.data[p] != C64::default())
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Column-compressed copy used by the factorization.
struct Csc {
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<C64>,
}

impl Csc {
    fn from_csr(a: &CsrMatrix) -> Self {
        let t = a.transpose(); // rows of the transpose are columns of a
        Csc {
            colptr: t.indptr,
            rowind: t.indices,
            values: t.data,
        }
    }
}

/// Sparse LU factorization with partial pivoting: P A = L U.
pub struct SparseLu {
    n: usize,
    // L unit lower triangular, U upper triangular, both in CSC with respect
    // to the pivoted row order.
    l_colptr: Vec<usize>,
    l_rowind: Vec<usize>,
    l_values: Vec<C64>,
    u_colptr: Vec<usize>,
    u_rowind: Vec<usize>,
    u_values: Vec<C64>,
    /// pinv[original_row] = pivoted position
    pinv: Vec<usize>,
}

impl SparseLu {
    pub fn factorize(a: &CsrMatrix) -> Result<SparseLu> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix passed to LU",
                a.nrows, a.ncols
            )));
        }
        let n = a.nrows;
        let acsc = Csc::from_csr(a);
        let mut l_colptr = vec![0usize];
        let mut l_rowind: Vec<usize> = Vec::new();
        let mut l_values: Vec<C64> = Vec::new();
        let mut u_colptr = vec![0usize];
        let mut u_rowind: Vec<usize> = Vec::new();
        let mut u_values: Vec<C64> = Vec::new();

        let mut pinv = vec![usize::MAX; n];
        let mut x = vec![C64::default(); n];
        let mut xi = Vec::with_capacity(n); // pattern of x in topological order
        let mut stack = Vec::with_capacity(n);
        let mut mark = vec![false; n];

        for j in 0..n {
            // symbolic: depth-first reach of A(:,j) through the columns of L
            xi.clear();
            for p in acsc.colptr[j]..acsc.colptr[j + 1] {
                let row = acsc.rowind[p];
                if mark[row] {
                    continue;
                }
                // iterative DFS over eliminated rows
                stack.push((row, l_colptr_range_start(&l_colptr, pinv[row])));
                mark[row] = true;
                while let Some(&(node, ptr)) = stack.last() {
                    let col = pinv[node];
                    if col == usize::MAX {
                        // uneliminated row: leaf
                        xi.push(node);
                        stack.pop();
                        continue;
                    }
                    let end = l_colptr[col + 1];
                    let mut next_child = None;
                    let mut p = ptr;
                    while p < end {
                        let cand = l_rowind[p];
                        p += 1;
                        if !mark[cand] {
                            next_child = Some(cand);
                            break;
                        }
                    }
                    stack.last_mut().unwrap().1 = p;
                    match next_child {
                        Some(ch) => {
                            mark[ch] = true;
                            stack.push((ch, l_colptr_range_start(&l_colptr, pinv[ch])));
                        }
                        None => {
                            xi.push(node);
                            stack.pop();
                        }
                    }
                }
            }
            // xi is in reverse topological order
            for &row in xi.iter() {
                x[row] = C64::default();
            }
            for p in acsc.colptr[j]..acsc.colptr[j + 1] {
                x[acsc.rowind[p]] = acsc.values[p];
            }
            // numeric: eliminate in topological order (reverse of xi)
            for &row in xi.iter().rev() {
                let col = pinv[row];
                if col == usize::MAX {
                    continue;
                }
                let xj = x[row];
                if xj == C64::default() {
                    continue;
                }
                for p in l_colptr[col]..l_colptr[col + 1] {
                    x[l_rowind[p]] -= l_values[p] * xj;
                }
            }
            // partial pivoting: largest magnitude among uneliminated rows
            let mut pivot_row = usize::MAX;
            let mut pivot_mag = 0.0f64;
            for &row in xi.iter() {
                if pinv[row] == usize::MAX {
                    let m = x[row].norm();
                    if m > pivot_mag {
                        pivot_mag = m;
                        pivot_row = row;
                    }
                }
            }
            if pivot_row == usize::MAX || pivot_mag == 0.0 || !pivot_mag.is_finite() {
                // clean up marks before reporting
                for &row in xi.iter() {
                    mark[row] = false;
                }
                return Err(Error::SingularM0 { rcond: 0.0 });
            }
            let pivot = x[pivot_row];
            pinv[pivot_row] = j;
            // U column j: eliminated rows plus the pivot on the diagonal
            for &row in xi.iter() {
                if pinv[row] < j {
                    u_rowind.push(pinv[row]);
                    u_values.push(x[row]);
                }
            }
            u_rowind.push(j);
            u_values.push(pivot);
            u_colptr.push(u_rowind.len());
            // L column j: remaining uneliminated rows scaled by the pivot
            for &row in xi.iter() {
                if pinv[row] == usize::MAX && x[row] != C64::default() {
                    l_rowind.push(row);
                    l_values.push(x[row] / pivot);
                }
            }
            l_colptr.push(l_rowind.len());
            for &row in xi.iter() {
                mark[row] = false;
                x[row] = C64::default();
            }
        }
        // remap L row indices into pivoted order
        for r in l_rowind.iter_mut() {
            *r = pinv[*r];
        }
        Ok(SparseLu {
            n,
            l_colptr,
            l_rowind,
            l_values,
            u_colptr,
            u_rowind,
            u_values,
            pinv,
        })
    }

    /// Solve A x = b.
    pub fn solve_vec(&self, b: &DVector<C64>) -> DVector<C64> {
        assert_eq!(b.len(), self.n);
        let mut x = DVector::zeros(self.n);
        for i in 0..self.n {
            x[self.pinv[i]] = b[i];
        }
        // forward: L y = P b (unit diagonal, columns hold the strict part)
        for jcol in 0..self.n {
            let xj = x[jcol];
            if xj != C64::default() {
                for p in self.l_colptr[jcol]..self.l_colptr[jcol + 1] {
                    x[self.l_rowind[p]] -= self.l_values[p] * xj;
                }
            }
        }
        // backward: U z = y; the diagonal is the last entry of each column
        for jcol in (0..self.n).rev() {
            let dpos = self.u_colptr[jcol + 1] - 1;
            debug_assert_eq!(self.u_rowind[dpos], jcol);
            let xj = x[jcol] / self.u_values[dpos];
            x[jcol] = xj;
            if xj != C64::default() {
                for p in self.u_colptr[jcol]..dpos {
                    x[self.u_rowind[p]] -= self.u_values[p] * xj;
                }
            }
        }
        x
    }

    pub fn solve_mat(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for col in 0..b.ncols() {
            let sol = self.solve_vec(&b.column(col).clone_owned());
            out.column_mut(col).copy_from(&sol);
        }
        out
    }

    /// Cheap reciprocal-condition estimate: inf-norm of A against a probed
    /// lower bound on ||A^{-1}|| obtained from two seeded solves.
    pub fn rcond_estimate(&self, a_inf_norm: f64) -> f64 {
        let n = self.n;
        let mut v = DVector::from_fn(n, |i, _| {
            // deterministic pseudo-random probe
            let t = (i as f64 * 0.754877666 + 0.1).fract() - 0.5;
            C64::new(t, 0.0)
        });
        v /= c(v.norm());
        let u1 = self.solve_vec(&v);
        let n1 = u1.norm();
        let mut inv_norm = n1;
        if n1 > 0.0 && n1.is_finite() {
            let u2 = self.solve_vec(&(&u1 / c(n1)));
            inv_norm = inv_norm.max(u2.norm());
        }
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return 0.0;
        }
        1.0 / (a_inf_norm * inv_norm).max(f64::MIN_POSITIVE)
    }
}

fn l_colptr_range_start(l_colptr: &[usize], col: usize) -> usize {
    if col == usize::MAX {
        0
    } else {
        l_colptr[col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_sparse(n: usize, fill: f64, seed: u64) -> CsrMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, C64::new(rng.gen::<f64>() + 2.0, rng.gen::<f64>())));
            for j in 0..n {
                if i != j && rng.gen::<f64>() < fill {
                    trip.push((i, j, C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn matvec_matches_dense() {
        let a = random_sparse(20, 0.2, 1);
        let d = a.to_dense();
        let x = DVector::from_fn(20, |i, _| C64::new(i as f64 * 0.3 - 1.0, 0.5));
        let err = (a.matvec(&x) - d * &x).norm();
        assert!(err < 1e-12, "matvec err {err}");
    }

    #[test]
    fn lu_solves_random_systems() {
        for seed in 0..5u64 {
            let n = 40;
            let a = random_sparse(n, 0.15, seed);
            let lu = SparseLu::factorize(&a).unwrap();
            let b = DVector::from_fn(n, |i, _| C64::new((i as f64).sin(), (i as f64).cos()));
            let x = lu.solve_vec(&b);
            let res = (a.matvec(&x) - &b).norm() / b.norm();
            assert!(res < 1e-12, "seed {seed}: residual {res}");
        }
    }

    #[test]
    fn lu_matches_dense_inverse() {
        let n = 25;
        let a = random_sparse(n, 0.3, 9);
        let lu = SparseLu::factorize(&a).unwrap();
        let eye = DMatrix::<C64>::identity(n, n);
        let inv = lu.solve_mat(&eye);
        let err = (a.to_dense() * inv - eye).norm();
        assert!(err < 1e-10, "inverse err {err}");
    }

    #[test]
    fn lu_rejects_singular() {
        // rank-deficient: a zero column
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, c(1.0)), (1, 0, c(2.0)), (2, 2, c(1.0))],
        );
        assert!(matches!(
            SparseLu::factorize(&a),
            Err(Error::SingularM0 { .. })
        ));
    }

    #[test]
    fn rcond_detects_near_singularity() {
        let mut trip: Vec<(usize, usize, C64)> = (0..10).map(|i| (i, i, c(1.0))).collect();
        trip[5] = (5, 5, c(1e-16));
        let a = CsrMatrix::from_triplets(10, 10, trip);
        let lu = SparseLu::factorize(&a).unwrap();
        assert!(lu.rcond_estimate(a.inf_norm()) < 1e-14);
        let good = CsrMatrix::identity(10);
        let lu = SparseLu::factorize(&good).unwrap();
        assert!(lu.rcond_estimate(good.inf_norm()) > 0.1);
    }

    #[test]
    fn asymmetry_measures() {
        let sym = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, c(3.0)), (1, 0, c(3.0)), (0, 0, c(1.0))],
        );
        assert_eq!(sym.asymmetry(), 0.0);
        let asym = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(3.0))]);
        assert_eq!(asym.asymmetry(), 3.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn lu_solve_has_small_residual(seed in 0u64..1000, fill in 0.05f64..0.4) {
                let n = 30;
                let a = random_sparse(n, fill, seed);
                let lu = SparseLu::factorize(&a).unwrap();
                let b = DVector::from_fn(n, |i, _| {
                    C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.71).cos())
                });
                let x = lu.solve_vec(&b);
                let res = (a.matvec(&x) - &b).norm() / b.norm();
                prop_assert!(res < 1e-10, "residual {res}");
            }
        }
    }

    #[test]
    fn inf_norm_is_max_abs_row_sum() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(-1.0)), (0, 1, c(2.0)), (1, 1, c(0.5))],
        );
        assert!((a.inf_norm() - 3.0).abs() < 1e-15);
    }
}
