//! Nonlinear eigenvalue problems in sum-of-products form
//! M(λ) = Σ_m f_m(λ) A_m with symmetric coefficient matrices.

use crate::error::{Error, Result};
use crate::series::{PowerSeries, ScalarFunction, C64};
use crate::sparse::{CsrMatrix, SparseLu};
use nalgebra::{DMatrix, DVector};
use std::sync::{Arc, RwLock};

#[cfg(test)]
fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Coefficient matrix of one SPMF term.
#[derive(Debug, Clone)]
pub enum TermMatrix {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix),
}

impl TermMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            TermMatrix::Dense(m) => m.nrows(),
            TermMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            TermMatrix::Dense(m) => m.ncols(),
            TermMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, TermMatrix::Sparse(_))
    }

    pub fn matvec(&self, x: &DVector<C64>) -> DVector<C64> {
        match self {
            TermMatrix::Dense(m) => m * x,
            TermMatrix::Sparse(m) => m.matvec(x),
        }
    }

    pub fn matmul_dense(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            TermMatrix::Dense(m) => m * x,
            TermMatrix::Sparse(m) => m.matmul_dense(x),
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        match self {
            TermMatrix::Dense(m) => (0..m.nrows())
                .map(|i| m.row(i).iter().map(|v| v.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            TermMatrix::Sparse(m) => m.inf_norm(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            TermMatrix::Dense(m) => m.iter().map(|v| v.norm()).fold(0.0, f64::max),
            TermMatrix::Sparse(m) => m.max_abs(),
        }
    }

    /// Largest |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        match self {
            TermMatrix::Dense(m) => {
                let mut dev = 0.0f64;
                for i in 0..m.nrows() {
                    for j in 0..i {
                        dev = dev.max((m[(i, j)] - m[(j, i)]).norm());
                    }
                }
                dev
            }
            TermMatrix::Sparse(m) => m.asymmetry(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            TermMatrix::Dense(m) => m.norm(),
            TermMatrix::Sparse(m) => m.frobenius_norm(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            TermMatrix::Dense(m) => m.clone(),
            TermMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

/// One term (f_m, A_m) with optional structure tags.
#[derive(Debug, Clone)]
pub struct SpmfTerm {
    pub function: ScalarFunction,
    pub matrix: TermMatrix,
    /// Low-rank factor U with A_m ≈ U Uᵀ.
    pub low_rank: Option<DMatrix<C64>>,
}

impl SpmfTerm {
    pub fn new(function: ScalarFunction, matrix: TermMatrix) -> Self {
        SpmfTerm {
            function,
            matrix,
            low_rank: None,
        }
    }

    pub fn with_low_rank(mut self, u: DMatrix<C64>) -> Self {
        self.low_rank = Some(u);
        self
    }
}

/// Cached Taylor data for every term, in the three scalings consumers need:
/// `t[m][j] = f_m^(j)(0)/j!`, `raw[m][j] = f_m^(j)(0)`, and
/// `over[m][j] = f_m^(j)(0)/j`.
#[derive(Debug, Clone)]
pub struct TaylorTables {
    pub order: usize,
    pub t: Vec<Vec<C64>>,
    pub raw: Vec<Vec<C64>>,
    pub over: Vec<Vec<C64>>,
}

/// A symmetric NEP in SPMF form.
#[derive(Debug)]
pub struct SpmfNep {
    n: usize,
    terms: Vec<SpmfTerm>,
    inf_norms: Vec<f64>,
    taylor: RwLock<Option<Arc<TaylorTables>>>,
}

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const LOW_RANK_TOL: f64 = 1e-12;
const RCOND_TOL: f64 = 1e-14;

impl SpmfNep {
    /// Build a symmetric NEP; every term matrix is validated entrywise.
    pub fn new(terms: Vec<SpmfTerm>) -> Result<Self> {
        let nep = Self::new_general(terms)?;
        for (m, term) in nep.terms.iter().enumerate() {
            let dev = term.matrix.asymmetry();
            let scale = term.matrix.max_abs().max(1.0);
            if dev > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric {
                    term: m,
                    deviation: dev,
                });
            }
        }
        Ok(nep)
    }

    /// Build without the symmetry check (input to [`symmetrize_double`]).
    pub fn new_general(terms: Vec<SpmfTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::DimensionMismatch("no terms".into()));
        }
        let n = terms[0].matrix.nrows();
        for (m, term) in terms.iter().enumerate() {
            if term.matrix.nrows() != n || term.matrix.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "term {m} is {}x{}, expected {n}x{n}",
                    term.matrix.nrows(),
                    term.matrix.ncols()
                )));
            }
            if let Some(u) = &term.low_rank {
                if u.nrows() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "low-rank factor of term {m} has {} rows, expected {n}",
                        u.nrows()
                    )));
                }
                let residual = (term.matrix.to_dense() - u * u.transpose()).norm();
                let scale = term.matrix.frobenius_norm().max(f64::MIN_POSITIVE);
                if residual > LOW_RANK_TOL * scale {
                    return Err(Error::LowRankTagInvalid {
                        term: m,
                        residual: residual / scale,
                    });
                }
            }
        }
        let inf_norms = terms.iter().map(|t| t.matrix.inf_norm()).collect();
        Ok(SpmfNep {
            n,
            terms,
            inf_norms,
            taylor: RwLock::new(None),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[SpmfTerm] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Cached ‖A_m‖_∞ values.
    pub fn inf_norms(&self) -> &[f64] {
        &self.inf_norms
    }

    /// Largest asymmetry over all terms (0 for a symmetric NEP).
    pub fn max_asymmetry(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.matrix.asymmetry())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.terms.iter().all(|t| {
            t.matrix.asymmetry() <= SYMMETRY_TOL * t.matrix.max_abs().max(1.0)
        })
    }

    /// True when every term matrix is stored sparse.
    pub fn all_sparse(&self) -> bool {
        self.terms.iter().all(|t| t.matrix.is_sparse())
    }

    /// Extend the Taylor tables to at least `order` (grown in doubling steps)
    /// and return a snapshot.
    pub fn taylor_tables(&self, order: usize) -> Result<Arc<TaylorTables>> {
        {
            let guard = self.taylor.read().unwrap();
            if let Some(tbl) = guard.as_ref() {
                if tbl.order >= order {
                    return Ok(tbl.clone());
                }
            }
        }
        let mut guard = self.taylor.write().unwrap();
        let current = guard.as_ref().map(|t| t.order).unwrap_or(0);
        if let Some(tbl) = guard.as_ref() {
            if tbl.order >= order {
                return Ok(tbl.clone());
            }
        }
        let target = order.max(current.saturating_mul(2)).max(8);
        let mut t = Vec::with_capacity(self.terms.len());
        let mut raw = Vec::with_capacity(self.terms.len());
        let mut over = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let series: PowerSeries = term.function.taylor(target)?;
            t.push(series.coeffs().to_vec());
            let raw_exact = term.function.raw_derivatives(target)?;
            let over_v: Vec<C64> = raw_exact
                .iter()
                .enumerate()
                .map(|(j, &r)| {
                    if j == 0 {
                        C64::default()
                    } else {
                        r / C64::new(j as f64, 0.0)
                    }
                })
                .collect();
            raw.push(raw_exact);
            over.push(over_v);
        }
        let tables = Arc::new(TaylorTables {
            order: target,
            t,
            raw,
            over,
        });
        *guard = Some(tables.clone());
        Ok(tables)
    }

    /// M(λ) as a dense matrix (oracle/desk-scale use).
    pub fn evaluate(&self, lambda: C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for term in &self.terms {
            let f = term.function.evaluate(lambda);
            match &term.matrix {
                TermMatrix::Dense(m) => out += m * f,
                TermMatrix::Sparse(m) => {
                    for (i, j, v) in m.triplets() {
                        out[(i, j)] += f * v;
                    }
                }
            }
        }
        out
    }

    /// M(λ) x without forming M(λ).
    pub fn evaluate_matvec(&self, lambda: C64, x: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.n);
        for term in &self.terms {
            out += term.matrix.matvec(x) * term.function.evaluate(lambda);
        }
        out
    }

    /// M_j X = Σ_m f_m^(j)(0) A_m X without forming M_j. Requires the Taylor
    /// tables to be precomputed at least to order `j`.
    pub fn derivative_matvec(&self, j: usize, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let guard = self.taylor.read().unwrap();
        let tables = guard.as_ref().ok_or(Error::DerivativeOrderExceeded {
            requested: j,
            available: 0,
        })?;
        if tables.order < j {
            return Err(Error::DerivativeOrderExceeded {
                requested: j,
                available: tables.order,
            });
        }
        let mut out = DMatrix::zeros(self.n, x.ncols());
        for (m, term) in self.terms.iter().enumerate() {
            let w = tables.raw[m][j];
            if w != C64::default() {
                out += term.matrix.matmul_dense(x) * w;
            }
        }
        Ok(out)
    }

    /// M_j as a dense matrix (desk-scale oracle use; tables must cover j).
    pub fn derivative_dense(&self, j: usize) -> Result<DMatrix<C64>> {
        self.derivative_matvec(j, &DMatrix::identity(self.n, self.n))
    }

    /// Factorize M(0) once; the returned handle is reusable and read-only.
    pub fn m0_factorize(&self) -> Result<M0Solver> {
        if self.all_sparse() {
            let mut m0: Option<CsrMatrix> = None;
            for term in &self.terms {
                let f0 = term.function.evaluate(C64::default());
                if f0 == C64::default() {
                    continue;
                }
                let scaled = match &term.matrix {
                    TermMatrix::Sparse(m) => m.scale(f0),
                    TermMatrix::Dense(_) => unreachable!(),
                };
                m0 = Some(match m0 {
                    None => scaled,
                    Some(acc) => acc.add(&scaled),
                });
            }
            let m0 = m0.ok_or(Error::SingularM0 { rcond: 0.0 })?;
            let lu = SparseLu::factorize(&m0)?;
            let rcond = lu.rcond_estimate(m0.inf_norm());
            if rcond < RCOND_TOL {
                return Err(Error::SingularM0 { rcond });
            }
            Ok(M0Solver::Sparse { lu, rcond })
        } else {
            let m0 = self.evaluate(C64::default());
            // exact 2-norm rcond at dense (small) scale
            let svd = m0.clone().svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
            if rcond < RCOND_TOL {
                return Err(Error::SingularM0 { rcond });
            }
            let lu = m0.lu();
            Ok(M0Solver::Dense {
                lu: Box::new(lu),
                rcond,
            })
        }
    }

    /// M̂(λ̂) = M(λ0 + αλ̂); eigenvalues map back as λ = λ0 + αλ̂.
    pub fn shift_scale(&self, lambda0: C64, alpha: C64) -> SpmfNep {
        assert!(alpha != C64::default(), "shift_scale requires alpha != 0");
        let terms = self
            .terms
            .iter()
            .map(|t| SpmfTerm {
                function: t.function.clone().affine(lambda0, alpha),
                matrix: t.matrix.clone(),
                low_rank: t.low_rank.clone(),
            })
            .collect();
        SpmfNep {
            n: self.n,
            terms,
            inf_norms: self.inf_norms.clone(),
            taylor: RwLock::new(None),
        }
    }

    /// Relative residual Err(λ, x) = ‖M(λ)x‖₂ / (Σ_m |f_m(λ)| ‖A_m‖_∞ ‖x‖₂).
    pub fn residual_error(&self, lambda: C64, x: &DVector<C64>) -> Result<f64> {
        let xnorm = x.norm();
        assert!(xnorm > 0.0, "residual_error requires x != 0");
        let mut denom = 0.0f64;
        for (m, term) in self.terms.iter().enumerate() {
            denom += term.function.evaluate(lambda).norm() * self.inf_norms[m];
        }
        if denom == 0.0 {
            return Err(Error::DegeneratePoint { lambda });
        }
        Ok(self.evaluate_matvec(lambda, x).norm() / (denom * xnorm))
    }
}

/// Reusable factorization handle for M(0).
pub enum M0Solver {
    Dense {
        lu: Box<nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
        rcond: f64,
    },
    Sparse {
        lu: SparseLu,
        rcond: f64,
    },
}

impl M0Solver {
    pub fn solve_vec(&self, b: &DVector<C64>) -> DVector<C64> {
        match self {
            M0Solver::Dense { lu, .. } => lu.solve(b).expect("factorized M0 must solve"),
            M0Solver::Sparse { lu, .. } => lu.solve_vec(b),
        }
    }

    pub fn solve_mat(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        match self {
            M0Solver::Dense { lu, .. } => lu.solve(b).expect("factorized M0 must solve"),
            M0Solver::Sparse { lu, .. } => lu.solve_mat(b),
        }
    }

    pub fn rcond(&self) -> f64 {
        match self {
            M0Solver::Dense { rcond, .. } => *rcond,
            M0Solver::Sparse { rcond, .. } => *rcond,
        }
    }
}

/// Symmetrize a (possibly nonsymmetric) NEP by doubling: every term matrix
/// becomes [[0, A_m], [A_mᵀ, 0]]. If (λ, [yᵀ, xᵀ]ᵀ) is an eigenpair of the
/// doubled problem, (λ, x) is an eigenpair of the original.
pub fn symmetrize_double(nep: &SpmfNep) -> SpmfNep {
    let n = nep.dim();
    let terms = nep
        .terms()
        .iter()
        .map(|term| {
            let matrix = match &term.matrix {
                TermMatrix::Sparse(a) => {
                    let mut trip = Vec::with_capacity(2 * a.nnz());
                    for (i, j, v) in a.triplets() {
                        trip.push((i, n + j, v));
                        trip.push((n + j, i, v));
                    }
                    TermMatrix::Sparse(CsrMatrix::from_triplets(2 * n, 2 * n, trip))
                }
                TermMatrix::Dense(a) => {
                    let mut d = DMatrix::zeros(2 * n, 2 * n);
                    d.view_mut((0, n), (n, n)).copy_from(a);
                    d.view_mut((n, 0), (n, n)).copy_from(&a.transpose());
                    TermMatrix::Dense(d)
                }
            };
            SpmfTerm::new(term.function.clone(), matrix)
        })
        .collect();
    SpmfNep::new(terms).expect("doubled problem is symmetric by construction")
}

/// Original-problem eigenvector from a doubled-problem eigenvector: the lower
/// block of [yᵀ, xᵀ]ᵀ.
pub fn unpack_doubled(x: &DVector<C64>) -> DVector<C64> {
    let n = x.len() / 2;
    x.rows(n, n).clone_owned()
}
