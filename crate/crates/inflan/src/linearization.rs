//! The symmetric infinite linearization: scalar coefficient tables C and G,
//! Hankel derivative tables, explicitly truncated pencil matrices for oracle
//! use, the generic dense indefinite Lanczos recurrence, and dense pencil
//! eigenvalue oracles.

use crate::eig;
use crate::error::{Error, Result};
use crate::nep::SpmfNep;
use crate::series::{ScalarFunction, C64};
use nalgebra::{DMatrix, DVector};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense truncations are an oracle facility; anything bigger than this is a
/// caller mistake.
pub const DENSE_TRUNCATION_CAP: usize = 5000;

/// The scalar coefficient tables of the symmetrizer.
///
/// `c` is k×k with c_{i,1} = 1/(i+1) and c_{i-1,j} = (j/i)·c_{i,j-1}; it is
/// symmetric and satisfies the closed form c_{i,j} = 1/binomial(i+j, i).
/// `g` is (k+1)×(k+1) with g_{1,j} = g_{j,1} = 1/j and g_{i,j} = c_{i-1,j}/j.
/// Both are computed by the recurrence only; the closed form is a test oracle.
#[derive(Debug, Clone)]
pub struct CoeffTables {
    k: usize,
    /// (k+1)×(k+1), 0-based storage of c_{i,j} for 1 <= i,j <= k+1
    c_full: DMatrix<f64>,
    /// (k+1)×(k+1), 0-based storage of g_{i,j} for 1 <= i,j <= k+1
    g: DMatrix<f64>,
}

impl CoeffTables {
    pub fn new(k: usize) -> CoeffTables {
        assert!(k >= 1);
        let m = k + 1; // c is needed one index past k to fill g
        // column 1 padded far enough that the recurrence can walk down-left
        let pad = 2 * m + 1;
        let mut col: Vec<f64> = (1..=pad).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let mut c_full = DMatrix::zeros(m, m);
        for i in 1..=m {
            c_full[(i - 1, 0)] = col[i - 1];
        }
        for j in 2..=m {
            // c_{i-1,j} = (j/i) c_{i,j-1}: column j from column j-1, one row up
            let mut next = vec![0.0; pad];
            for i in 2..=pad {
                next[i - 2] = (j as f64 / i as f64) * col[i - 1];
            }
            col = next;
            for i in 1..=m {
                c_full[(i - 1, j - 1)] = col[i - 1];
            }
        }
        // the table is symmetric (proved from the recurrence); mirror the
        // lower triangle so equal pairs are bitwise equal
        for i in 0..m {
            for j in (i + 1)..m {
                c_full[(i, j)] = c_full[(j, i)];
            }
        }
        let mut g = DMatrix::zeros(m, m);
        for j in 1..=m {
            g[(0, j - 1)] = 1.0 / j as f64;
            g[(j - 1, 0)] = 1.0 / j as f64;
        }
        for i in 2..=m {
            for j in 2..=m {
                g[(i - 1, j - 1)] = c_full[(i - 2, j - 1)] / j as f64;
            }
        }
        CoeffTables { k, c_full, g }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// c_{i,j} (1-based), valid for 1 <= i,j <= k+1.
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c_full[(i - 1, j - 1)]
    }

    /// The k×k table as a matrix.
    pub fn c_matrix(&self) -> DMatrix<f64> {
        self.c_full.view((0, 0), (self.k, self.k)).clone_owned()
    }

    /// g_{i,j} (1-based), valid for 1 <= i,j <= k+1.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[(i - 1, j - 1)]
    }

    /// The (k+1)×(k+1) G table.
    pub fn g_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

/// Derivative table of one scalar function in Hankel form: the defining
/// sequence f^(s)(0), s = 1..2k+1, kept as scaled Taylor coefficients with
/// the raw values reconstructed through the stable recurrence. The Hankel
/// entry F[i,j] = f^(i+j-1)(0) is implicit.
#[derive(Debug, Clone)]
pub struct HankelTable {
    k: usize,
    /// t_s = f^(s)(0)/s! for s = 0..=2k+1
    t: Vec<C64>,
    /// f^(s)(0) for s = 0..=2k+1
    raw: Vec<C64>,
}

impl HankelTable {
    pub fn new(f: &ScalarFunction, k: usize) -> Result<HankelTable> {
        let series = f.taylor(2 * k + 1)?;
        let t = series.coeffs().to_vec();
        let raw = f.raw_derivatives(2 * k + 1)?;
        Ok(HankelTable { k, t, raw })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Scaled pair (t_s, s).
    pub fn scaled(&self, s: usize) -> (C64, usize) {
        (self.t[s], s)
    }

    /// f^(s)(0), 1 <= s <= 2k+1.
    pub fn raw(&self, s: usize) -> C64 {
        self.raw[s]
    }

    /// The defining sequence f^(1)(0) .. f^(2k+1)(0).
    pub fn sequence(&self) -> &[C64] {
        &self.raw[1..]
    }

    /// F[i,j] = f^(i+j-1)(0) for 1 <= i,j <= k+1.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.raw[i + j - 1]
    }

    /// Dense (k+1)×(k+1) F matrix (test/oracle use).
    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.k + 1, self.k + 1, |i, j| self.raw[i + j + 1])
    }
}

/// Explicit dense truncations of the infinite pencil and its symmetrizer.
#[derive(Debug, Clone)]
pub struct TruncatedLinearization {
    pub n: usize,
    pub depth: usize,
    /// [A]_N = diag(-M0, I, ...)
    pub a: DMatrix<C64>,
    /// [B]_N: first block row M_j/j, subdiagonal I/j
    pub b: DMatrix<C64>,
    /// [S]_N: block (1,1) = I, blocks (i,j >= 2) = c_{i-1,j-1} M_{i+j-2}
    pub s: DMatrix<C64>,
    /// [SA]_N assembled directly from the tables
    pub sa: DMatrix<C64>,
    /// [SB]_N assembled directly from the tables
    pub sb: DMatrix<C64>,
}

/// Dense derivative matrices M_0..M_jmax.
fn derivative_matrices(nep: &SpmfNep, jmax: usize) -> Result<Vec<DMatrix<C64>>> {
    let tables = nep.taylor_tables(jmax)?;
    let n = nep.dim();
    let mut out = Vec::with_capacity(jmax + 1);
    for j in 0..=jmax {
        let mut m = DMatrix::zeros(n, n);
        for (idx, term) in nep.terms().iter().enumerate() {
            let w = tables.raw[idx][j];
            if w != C64::default() {
                m += term.matrix.to_dense() * w;
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Build [A]_N, [B]_N, [S]_N, [SA]_N, [SB]_N for a truncation depth N.
pub fn build_truncated(nep: &SpmfNep, depth: usize) -> Result<TruncatedLinearization> {
    assert!(depth >= 1);
    let n = nep.dim();
    let dim = n * depth;
    if dim > DENSE_TRUNCATION_CAP {
        return Err(Error::SizeCapExceeded {
            requested: dim,
            cap: DENSE_TRUNCATION_CAP,
        });
    }
    if nep
        .terms()
        .iter()
        .all(|t| t.function.polynomial_coeffs().is_some())
    {
        log::warn!(
            "purely polynomial NEP: the truncated symmetrizer is singular; \
             the iteration is still applicable but the dense oracle may be inaccurate"
        );
    }
    let tables = CoeffTables::new(depth.max(2));
    let mj = derivative_matrices(nep, 2 * depth)?;

    let mut a = DMatrix::zeros(dim, dim);
    a.view_mut((0, 0), (n, n)).copy_from(&(-&mj[0]));
    for d in n..dim {
        a[(d, d)] = c(1.0);
    }

    let mut b = DMatrix::zeros(dim, dim);
    for j in 1..=depth {
        let blk = &mj[j] / c(j as f64);
        b.view_mut((0, (j - 1) * n), (n, n)).copy_from(&blk);
    }
    for j in 1..depth {
        for d in 0..n {
            b[(j * n + d, (j - 1) * n + d)] = c(1.0 / j as f64);
        }
    }

    let mut s = DMatrix::zeros(dim, dim);
    for d in 0..n {
        s[(d, d)] = c(1.0);
    }
    for i in 2..=depth {
        for j in 2..=depth {
            let blk = &mj[i + j - 2] * c(tables.c(i - 1, j - 1));
            s.view_mut(((i - 1) * n, (j - 1) * n), (n, n)).copy_from(&blk);
        }
    }

    let mut sa = DMatrix::zeros(dim, dim);
    sa.view_mut((0, 0), (n, n)).copy_from(&(-&mj[0]));
    for i in 2..=depth {
        for j in 2..=depth {
            let blk = &mj[i + j - 2] * c(tables.c(i - 1, j - 1));
            sa.view_mut(((i - 1) * n, (j - 1) * n), (n, n)).copy_from(&blk);
        }
    }

    let mut sb = DMatrix::zeros(dim, dim);
    for i in 1..=depth {
        for j in 1..=depth {
            let blk = &mj[i + j - 1] * c(tables.g(i, j));
            sb.view_mut(((i - 1) * n, (j - 1) * n), (n, n)).copy_from(&blk);
        }
    }

    Ok(TruncatedLinearization {
        n,
        depth,
        a,
        b,
        s,
        sa,
        sb,
    })
}

/// Output of the dense indefinite Lanczos recurrence.
#[derive(Debug, Clone)]
pub struct DenseLanczos {
    /// Basis vectors as columns, dim × (k+1) (B-orthogonal, unit 2-norm).
    pub q: DMatrix<C64>,
    /// Tridiagonal coefficients, (k+1) × k.
    pub t: DMatrix<C64>,
    /// ω_1..ω_{k+1}.
    pub omega: Vec<C64>,
    pub breakdown: Option<LanczosStop>,
}

/// Why an indefinite Lanczos run stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LanczosStop {
    /// t_{k+1,k} ≈ 0: an invariant subspace was found.
    HappyBreakdown { iteration: usize },
    /// ω ≈ 0: the indefinite scalar product degenerated.
    OmegaBreakdown { iteration: usize },
}

pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Indefinite Lanczos on a symmetric pencil (A, B): computes a B-orthogonal
/// basis of K_k(A⁻¹B, q1) with a three-term recurrence, including the ω update
/// that avoids a second B-product per iteration.
pub fn indefinite_lanczos_dense(
    a: &DMatrix<C64>,
    b: &DMatrix<C64>,
    q1: &DVector<C64>,
    maxiter: usize,
) -> Result<DenseLanczos> {
    assert_eq!(a.nrows(), a.ncols());
    assert_eq!(b.nrows(), b.ncols());
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(q1.len(), a.nrows());
    let n = a.nrows();
    let q1norm = q1.norm();
    if q1norm == 0.0 {
        return Err(Error::ZeroStartingVector);
    }
    let alu = a.clone().lu();
    let mut q = DMatrix::<C64>::zeros(n, maxiter + 1);
    q.column_mut(0).copy_from(&(q1 / c(q1norm)));
    let mut t = DMatrix::<C64>::zeros(maxiter + 1, maxiter);
    let mut omega: Vec<C64> = Vec::with_capacity(maxiter + 1);
    let q1n = q.column(0).clone_owned();
    omega.push((q1n.transpose() * b * &q1n)[(0, 0)]);
    let mut breakdown = None;
    let mut performed = 0usize;
    for k in 1..=maxiter {
        let qk = q.column(k - 1).clone_owned();
        let bq = b * &qk;
        let w = alu.solve(&bq).ok_or(Error::SingularM0 { rcond: 0.0 })?;
        let z = b * &w;
        let alpha: C64 = (z.transpose() * &qk)[(0, 0)];
        let (beta, tkm1k) = if k > 1 {
            let qkm1 = q.column(k - 2).clone_owned();
            let beta: C64 = (z.transpose() * &qkm1)[(0, 0)];
            (beta, beta / omega[k - 2])
        } else {
            (C64::default(), C64::default())
        };
        let gamma: C64 = (z.transpose() * &w)[(0, 0)];
        let tkk = alpha / omega[k - 1];
        t[(k - 1, k - 1)] = tkk;
        if k > 1 {
            t[(k - 2, k - 1)] = tkm1k;
        }
        let mut wperp = w.clone() - &qk * tkk;
        if k > 1 {
            wperp -= q.column(k - 2) * tkm1k;
        }
        let tk1k = wperp.norm();
        if tk1k <= BREAKDOWN_TOL * w.norm().max(1e-300) {
            // invariant subspace: the orthogonalization coefficients of this
            // column stay valid with t_{k+1,k} = 0; no q_{k+1} or ω_{k+1}
            breakdown = Some(LanczosStop::HappyBreakdown { iteration: k });
            omega.push(C64::default());
            performed = k;
            break;
        }
        t[(k, k - 1)] = c(tk1k);
        q.column_mut(k).copy_from(&(wperp / c(tk1k)));
        let omega_next = (gamma - c(2.0) * tkk * alpha - c(2.0) * tkm1k * beta
            + tkk * tkk * omega[k - 1]
            + if k > 1 {
                tkm1k * tkm1k * omega[k - 2]
            } else {
                C64::default()
            })
            / c(tk1k * tk1k);
        let omega_scale = omega.iter().map(|o| o.norm()).fold(1.0f64, f64::max);
        omega.push(omega_next);
        performed = k;
        if omega_next.norm() <= BREAKDOWN_TOL * omega_scale {
            breakdown = Some(LanczosStop::OmegaBreakdown { iteration: k + 1 });
            break;
        }
    }
    let k = performed;
    Ok(DenseLanczos {
        q: q.view((0, 0), (n, k + 1)).clone_owned(),
        t: t.view((0, 0), (k + 1, k)).clone_owned(),
        omega,
        breakdown,
    })
}

/// Symmetric pencil (A, B) for a polynomial NEP M(λ) = Σ_{j=0}^d M_j λ^j with
/// M_d nonsingular; the pencil has the same eigenvalues, and an eigenvector v
/// embeds as [vᵀ, λvᵀ, …, λ^{d-1}vᵀ]ᵀ.
pub fn pep_sym_pencil(nep: &SpmfNep) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = nep.dim();
    let mut degree = 0usize;
    let mut coeff_lists = Vec::new();
    for (m, term) in nep.terms().iter().enumerate() {
        let p = term
            .function
            .polynomial_coeffs()
            .ok_or(Error::NotPolynomial { term: m })?;
        degree = degree.max(p.len() - 1);
        coeff_lists.push(p);
    }
    if degree == 0 {
        return Err(Error::NotPolynomial { term: 0 });
    }
    // coefficient matrices in the monomial basis
    let mut mj = vec![DMatrix::<C64>::zeros(n, n); degree + 1];
    for (term, coeffs) in nep.terms().iter().zip(&coeff_lists) {
        for (j, &w) in coeffs.iter().enumerate() {
            if w != C64::default() {
                mj[j] += term.matrix.to_dense() * w;
            }
        }
    }
    let lead_svd = mj[degree].clone().svd(false, false);
    let smax = lead_svd.singular_values.max();
    let smin = lead_svd.singular_values.min();
    if smax == 0.0 || smin / smax < 1e-12 {
        return Err(Error::SingularLeadingCoefficient);
    }
    let dim = n * degree;
    if dim > DENSE_TRUNCATION_CAP {
        return Err(Error::SizeCapExceeded {
            requested: dim,
            cap: DENSE_TRUNCATION_CAP,
        });
    }
    let mut a = DMatrix::zeros(dim, dim);
    a.view_mut((0, 0), (n, n)).copy_from(&(-&mj[0]));
    for i in 2..=degree {
        for j in 2..=degree {
            if i + j - 2 <= degree {
                a.view_mut(((i - 1) * n, (j - 1) * n), (n, n))
                    .copy_from(&mj[i + j - 2]);
            }
        }
    }
    let mut b = DMatrix::zeros(dim, dim);
    for i in 1..=degree {
        for j in 1..=degree {
            if i + j - 1 <= degree {
                b.view_mut(((i - 1) * n, (j - 1) * n), (n, n))
                    .copy_from(&mj[i + j - 1]);
            }
        }
    }
    Ok((a, b))
}

/// Eigenvalue region of interest.
#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, lambda: C64) -> bool {
        (lambda - self.center).norm() <= self.radius
    }
}

/// Brute-force oracle: eigenvalues of the truncated companion pencil
/// ([A]_N, [B]_N), optionally filtered to a target disk. Exact for polynomial
/// NEPs of degree <= N; approximate (improving with N) otherwise.
pub fn companion_eigs(nep: &SpmfNep, depth: usize, disk: Option<Disk>) -> Result<Vec<C64>> {
    let tl = build_truncated(nep, depth)?;
    let mut vals = eig::pencil_eigenvalues(&tl.a, &tl.b)?;
    if let Some(d) = disk {
        vals.retain(|l| d.contains(*l));
    }
    Ok(vals)
}
