//! Eigenpair extraction. The robust path projects the NEP onto the
//! orthonormalized first-block subspace and solves the small projected
//! problem with an infinite Arnoldi iteration (full two-pass Gram-Schmidt);
//! the plain path extracts Ritz pairs from the tridiagonal recurrence
//! coefficients. Both report NEP eigenvalues as reciprocals of the companion
//! operator's Ritz values, a convention validated against dense oracles.

use crate::eig;
use crate::error::{Error, Result};
use crate::ilan;
use crate::linearization::Disk;
use crate::nep::{SpmfNep, SpmfTerm, TermMatrix};
use crate::series::C64;
use nalgebra::{DMatrix, DVector};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Rank cutoff when orthonormalizing the first-block history.
pub const BASIS_DROP_TOL: f64 = 1e-12;
/// Eigenvalues closer than this (relative) are considered duplicates.
pub const DEDUP_TOL: f64 = 1e-8;

/// Orthonormal basis of the column span of the first-block history, computed
/// by QR with column pivoting; directions below 1e-12 of the leading pivot
/// are dropped.
pub fn basis(first_blocks: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = first_blocks.nrows();
    let k = first_blocks.ncols();
    if k == 0 || first_blocks.norm() == 0.0 {
        return Err(Error::ZeroSubspace);
    }
    let qr = nalgebra::linalg::ColPivQR::new(first_blocks.clone());
    let (q, r, _p) = qr.unpack();
    let lead = r[(0, 0)].norm();
    if lead == 0.0 {
        return Err(Error::ZeroSubspace);
    }
    let maxrank = n.min(k);
    let mut rank = 0;
    while rank < maxrank && r[(rank, rank)].norm() > BASIS_DROP_TOL * lead {
        rank += 1;
    }
    Ok(q.columns(0, rank).clone_owned())
}

/// A projected NEP: the small problem Vᵀ M(λ) V together with the basis.
pub struct ProjectedNep {
    pub nep: SpmfNep,
    pub v: DMatrix<C64>,
}

/// Project term by term: Vᵀ A_m V (transpose product keeps complex symmetry);
/// low-rank tags are recomputed as Vᵀ U_m.
pub fn project(nep: &SpmfNep, v: &DMatrix<C64>) -> Result<ProjectedNep> {
    let terms = nep
        .terms()
        .iter()
        .map(|term| {
            let av = term.matrix.matmul_dense(v);
            let mut p = v.tr_mul(&av);
            // the transpose product of a symmetric matrix is symmetric up to
            // rounding; make it exact so downstream symmetry checks hold
            let dev = {
                let mut d = 0.0f64;
                for i in 0..p.nrows() {
                    for j in 0..i {
                        d = d.max((p[(i, j)] - p[(j, i)]).norm());
                    }
                }
                d
            };
            if dev <= 1e-10 * p.norm().max(1.0) {
                let sym = (&p + p.transpose()) * c(0.5);
                p = sym;
            }
            let mut out = SpmfTerm::new(term.function.clone(), TermMatrix::Dense(p));
            if let Some(u) = &term.low_rank {
                out.low_rank = Some(v.tr_mul(u));
            }
            out
        })
        .collect();
    Ok(ProjectedNep {
        nep: SpmfNep::new_general(terms)?,
        v: v.clone(),
    })
}

/// Options for the inner infinite Arnoldi solve.
pub struct IarOptions {
    pub maxiter: usize,
    pub disk: Option<Disk>,
    pub seed: u64,
}

impl Default for IarOptions {
    fn default() -> Self {
        IarOptions {
            maxiter: 150,
            disk: None,
            seed: 1,
        }
    }
}

/// Infinite Arnoldi on a small dense NEP: standard Arnoldi with the Euclidean
/// inner product and two-pass Gram-Schmidt on the companion operator, whose
/// block action is y_{j+1} = x_j/j, y_1 = -M₀⁻¹ Σ (M_j/j) x_j. Ritz values θ
/// of the Hessenberg matrix give NEP approximations λ = 1/θ; eigenvectors are
/// the first block of the Ritz vectors.
pub fn iar(projected: &SpmfNep, opts: &IarOptions) -> Result<Vec<(C64, DVector<C64>)>> {
    let s = projected.dim();
    let m = opts.maxiter.max(1);
    let m0 = projected.m0_factorize().map_err(|e| match e {
        Error::SingularM0 { rcond } => Error::SingularProjectedM0 { rcond },
        other => other,
    })?;
    let tables = projected.taylor_tables(m + 1)?;
    let dim = s * (m + 1);
    let mut v = DMatrix::<C64>::zeros(dim, m + 1);
    let start = ilan::default_start(s, opts.seed);
    v.view_mut((0, 0), (s, 1)).copy_from(&start);
    let mut h = DMatrix::<C64>::zeros(m + 1, m);
    let mut steps = 0usize;
    for j in 1..=m {
        // operator action on the j-block vector in column j-1
        let x = v.view((0, j - 1), (s * j, 1)).clone_owned();
        let xmat = DMatrix::from_column_slice(s, j, x.as_slice());
        let mut y = DMatrix::<C64>::zeros(s, j + 1);
        let mut rhs = DVector::<C64>::zeros(s);
        let mut scratch = DVector::<C64>::zeros(s);
        for (midx, term) in projected.terms().iter().enumerate() {
            let weights = &tables.over[midx];
            scratch.fill(C64::default());
            let mut any = false;
            for i in 1..=j {
                if weights[i] != C64::default() {
                    scratch.axpy(weights[i], &xmat.column(i - 1), c(1.0));
                    any = true;
                }
            }
            if any {
                rhs += term.matrix.matvec(&scratch);
            }
        }
        y.column_mut(0).copy_from(&(-m0.solve_vec(&rhs)));
        for i in 1..=j {
            let inv = c(1.0 / i as f64);
            let src = xmat.column(i - 1);
            let mut dst = y.column_mut(i);
            for r in 0..s {
                dst[r] = src[r] * inv;
            }
        }
        let mut w = DVector::<C64>::zeros(dim);
        for i in 0..=j {
            w.rows_mut(i * s, s).copy_from(&y.column(i));
        }
        // two-pass classical Gram-Schmidt
        for pass in 0..2 {
            let _ = pass;
            for i in 0..j {
                let hij = v.column(i).dotc(&w);
                h[(i, j - 1)] += hij;
                w.axpy(-hij, &v.column(i).clone_owned(), c(1.0));
            }
        }
        let norm = w.norm();
        h[(j, j - 1)] = c(norm);
        steps = j;
        if norm <= 1e-14 * y.norm().max(1e-300) {
            break;
        }
        v.column_mut(j).copy_from(&(w / c(norm)));
    }
    // Ritz extraction from the square Hessenberg part
    let hk = h.view((0, 0), (steps, steps)).clone_owned();
    let (thetas, zvecs) = eig::complex_eig(&hk)?;
    let theta_scale = thetas.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        if theta.norm() <= 1e-12 * theta_scale.max(1e-300) {
            continue;
        }
        let lambda = c(1.0) / theta;
        if let Some(d) = opts.disk {
            if !d.contains(lambda) {
                continue;
            }
        }
        // first block of the Ritz vector V_k z
        let z = zvecs.column(i);
        let mut x = DVector::<C64>::zeros(s);
        for col in 0..steps {
            x.axpy(z[col], &v.view((0, col), (s, 1)).column(0).clone_owned(), c(1.0));
        }
        if normalize_rotate(&mut x) {
            out.push((lambda, x));
        }
    }
    Ok(out)
}

/// Ritz pairs from the three-term recurrence: solve the symmetric pencil
/// (Ω_k T_k, Ω_k) — equivalently the standard eigenproblem of T_k — and
/// report λ = 1/θ with eigenvectors assembled from the first-block history.
pub fn ritz_pairs(
    t_square: &DMatrix<C64>,
    omega: &[C64],
    first_blocks: &DMatrix<C64>,
) -> Result<Vec<(C64, DVector<C64>)>> {
    let k = t_square.nrows();
    assert!(k >= 1);
    assert!(omega.len() >= k);
    assert!(first_blocks.ncols() >= k);
    for (i, om) in omega[..k].iter().enumerate() {
        if om.norm() == 0.0 {
            return Err(Error::SingularOmega { index: i + 1 });
        }
    }
    let (thetas, zvecs) = eig::complex_eig(t_square)?;
    let theta_scale = thetas.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        if theta.norm() <= 1e-12 * theta_scale.max(1e-300) {
            continue;
        }
        let lambda = c(1.0) / theta;
        let z = zvecs.column(i);
        let mut x = DVector::<C64>::zeros(first_blocks.nrows());
        for col in 0..k {
            x.axpy(z[col], &first_blocks.column(col).clone_owned(), c(1.0));
        }
        if normalize_rotate(&mut x) {
            out.push((lambda, x));
        }
    }
    Ok(out)
}

/// Deterministic normalization: unit 2-norm with the first nonnegligible
/// component rotated to the positive real axis. Returns false for a zero
/// vector.
pub fn normalize_rotate(x: &mut DVector<C64>) -> bool {
    let norm = x.norm();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    *x /= c(norm);
    let lead = x.iter().find(|v| v.norm() > 1e-12).copied();
    if let Some(l) = lead {
        let phase = l / c(l.norm());
        *x /= phase;
    }
    true
}

/// Which extraction produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMethod {
    ProjectedIar,
    Ritz,
}

impl ExtractionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ExtractionMethod::ProjectedIar => "projected-iar",
            ExtractionMethod::Ritz => "ritz",
        }
    }
}

/// One converged eigenpair with its verified residual.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: C64,
    pub vector: DVector<C64>,
    pub residual: f64,
}

/// Converged count recorded at an extraction checkpoint.
#[derive(Debug, Clone, Copy)]
pub struct HistoryPoint {
    pub iteration: usize,
    pub converged: usize,
    pub elapsed: f64,
}

/// Extraction outcome: converged pairs (residual-verified on the full
/// problem), checkpoint history, and counts of discarded candidates.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub pairs: Vec<Eigenpair>,
    pub history: Vec<HistoryPoint>,
    pub method: ExtractionMethod,
    /// Candidates that failed the residual tolerance (after deduplication).
    pub rejected: usize,
}

/// Recompute residuals on the full-size NEP, deduplicate nearby eigenvalues
/// (keeping the smaller residual), and keep pairs with Err < tol.
pub fn filter_converged(
    candidates: Vec<(C64, DVector<C64>)>,
    nep: &SpmfNep,
    tol: f64,
    method: ExtractionMethod,
) -> Result<EigenResult> {
    let mut scored: Vec<(C64, DVector<C64>, f64)> = Vec::with_capacity(candidates.len());
    for (lambda, x) in candidates {
        if x.norm() == 0.0 || !lambda.is_finite() {
            continue;
        }
        match nep.residual_error(lambda, &x) {
            // far-out candidates can overflow the functions; drop them
            Ok(err) if !err.is_finite() => continue,
            Ok(err) => scored.push((lambda, x, err)),
            Err(Error::DegeneratePoint { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    // dedup within relative tolerance, smaller residual wins
    scored.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    let mut kept: Vec<(C64, DVector<C64>, f64)> = Vec::new();
    for cand in scored {
        let dup = kept.iter().any(|k| {
            (k.0 - cand.0).norm() <= DEDUP_TOL * k.0.norm().max(cand.0.norm()).max(1e-300)
        });
        if !dup {
            kept.push(cand);
        }
    }
    let mut pairs = Vec::new();
    let mut rejected = 0usize;
    for (value, vector, residual) in kept {
        if residual < tol {
            pairs.push(Eigenpair {
                value,
                vector,
                residual,
            });
        } else {
            rejected += 1;
        }
    }
    pairs.sort_by(|a, b| a.value.norm().partial_cmp(&b.value.norm()).unwrap());
    Ok(EigenResult {
        pairs,
        history: Vec::new(),
        method,
        rejected,
    })
}
