//! Structure-exploiting computations of Z = Σ_m A_m W (G ∘ F_m): the naive
//! reference, rank-compressed G with FFT Hankel products, the exact rank-one
//! delay kernel, and the exact polynomial-plus-low-rank split.

use crate::error::{Error, Result};
use crate::linearization::CoeffTables;
use crate::nep::{SpmfNep, TaylorTables};
use crate::series::{C64, ScalarFunction};
use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use std::sync::Mutex;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// How step 3 of the iteration computes Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZStrategy {
    /// Direct evaluation of Z = Σ_m A_m W (G ∘ F_m); O(k²n) per iteration.
    #[default]
    Naive,
    /// Best rank-q approximation of G with FFT Hankel products; approximate
    /// within the tail bound. `rank: None` picks q adaptively from the
    /// singular value decay (tail ≤ 1e-12·σ₁, capped at 40).
    LowRankFft { rank: Option<usize> },
    /// Exact reformulation for delay problems (-λ, constants, exponentials).
    Dep,
    /// Exact split for polynomial terms plus low-rank-tagged terms.
    PolyLowRank,
}

impl ZStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            ZStrategy::Naive => "naive",
            ZStrategy::LowRankFft { .. } => "lowrank-fft",
            ZStrategy::Dep => "dep",
            ZStrategy::PolyLowRank => "poly-lowrank",
        }
    }

    /// Check the problem structure the strategy relies on.
    pub fn validate(&self, nep: &SpmfNep) -> Result<()> {
        match self {
            ZStrategy::Naive | ZStrategy::LowRankFft { .. } => Ok(()),
            ZStrategy::Dep => {
                for (m, term) in nep.terms().iter().enumerate() {
                    match &term.function {
                        ScalarFunction::NegatedIdentity | ScalarFunction::Constant => {}
                        ScalarFunction::Exponential { rate } if *rate != C64::default() => {}
                        other => {
                            return Err(Error::StrategyMismatch {
                                strategy: "dep".into(),
                                reason: format!(
                                    "term {m} has function {other:?}; the delay kernel needs \
                                     -λ, constants and exponentials only"
                                ),
                            });
                        }
                    }
                }
                Ok(())
            }
            ZStrategy::PolyLowRank => {
                for (m, term) in nep.terms().iter().enumerate() {
                    if term.low_rank.is_none() && term.function.polynomial_coeffs().is_none() {
                        return Err(Error::StrategyMismatch {
                            strategy: "poly-lowrank".into(),
                            reason: format!(
                                "term {m} is neither polynomial nor low-rank tagged"
                            ),
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// (G_{k+1} ∘ F)(i,j) = (i-1)!(j-1)!·t_{i+j-1}, assembled from the scaled
/// first-row values r_s = (s-1)!·t_s by the anti-diagonal ratio recurrence
/// e(i+1,j-1) = e(i,j)·i/(j-1). Anti-diagonals with t_s = 0 vanish entirely,
/// so the factorials are only ever combined with decaying coefficients.
pub fn gf_hadamard(over: &[C64], k: usize) -> DMatrix<C64> {
    let m = k + 1;
    let mut out = DMatrix::zeros(m, m);
    for s in 1..=(2 * k + 1).min(over.len() - 1) {
        let start = over[s];
        if start == C64::default() {
            continue;
        }
        // walk the anti-diagonal i + j - 1 = s from (1, s) downward
        let mut val = start;
        for i in 1..s {
            // value now at (i, s + 1 - i); move to (i + 1, s - i)
            let j = s + 1 - i;
            if i <= m && j <= m {
                out[(i - 1, j - 1)] = val;
            }
            val = val * c(i as f64) / c((j - 1) as f64);
        }
        if s <= m {
            out[(s - 1, 0)] = val;
        }
    }
    out
}

/// Best rank-q factors of the G table: G ≈ U Vᵀ with the σ split evenly, plus
/// the discarded tail σ_{q+1}.. for error bounds.
#[derive(Debug, Clone)]
pub struct GFactors {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// All singular values σ_1..σ_{k+1} (non-increasing).
    pub sigma: Vec<f64>,
    pub rank: usize,
}

impl GFactors {
    pub fn tail_sum(&self) -> f64 {
        self.sigma[self.rank..].iter().sum()
    }
}

pub const ADAPTIVE_RANK_CAP: usize = 40;
pub const ADAPTIVE_RANK_TOL: f64 = 1e-12;

/// SVD-based rank-q truncation of G_{k+1}. `rank: None` picks the smallest q
/// with Σ_{j>q} σ_j ≤ 1e-12·σ_1, capped at 40.
pub fn g_factors(tables: &CoeffTables, rank: Option<usize>) -> GFactors {
    let g = tables.g_matrix();
    let svd = g.clone().svd(true, true);
    let u_full = svd.u.expect("svd with u");
    let vt_full = svd.v_t.expect("svd with v_t");
    let mut sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    // nalgebra returns them sorted descending already; enforce for safety
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let kp1 = g.nrows();
    let q = match rank {
        Some(q) => q.min(kp1),
        None => {
            let s1 = sigma[0];
            let mut suffix = vec![0.0f64; kp1 + 1];
            for idx in (0..kp1).rev() {
                suffix[idx] = suffix[idx + 1] + sigma[idx];
            }
            let mut q = 0;
            while q < kp1.min(ADAPTIVE_RANK_CAP) && suffix[q] > ADAPTIVE_RANK_TOL * s1 {
                q += 1;
            }
            q.max(1)
        }
    };
    let mut u = DMatrix::zeros(kp1, q);
    let mut v = DMatrix::zeros(kp1, q);
    for j in 0..q {
        let s = sigma[j].sqrt();
        for i in 0..kp1 {
            u[(i, j)] = u_full[(i, j)] * s;
            v[(i, j)] = vt_full[(j, i)] * s;
        }
    }
    GFactors {
        u,
        v,
        sigma,
        rank: q,
    }
}

/// Singular values of G_{k+1} (for table dumps and decay checks).
pub fn g_singular_values(k: usize) -> Vec<f64> {
    let tables = CoeffTables::new(k);
    let svd = tables.g_matrix().clone().svd(false, false);
    let mut sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigma
}

/// FFT plan source shared within one solve; rustfft's planner caches plans
/// per length internally.
pub struct HankelFft {
    planner: Mutex<FftPlanner<f64>>,
}

impl Default for HankelFft {
    fn default() -> Self {
        HankelFft {
            planner: Mutex::new(FftPlanner::new()),
        }
    }
}

impl HankelFft {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Y = H X where H is the m×m Hankel matrix H[i,j] = seq[i+j] (0-based,
/// seq of length 2m-1), computed column-wise by circulant embedding: with
/// x̂ the reversed column, y[i] = (seq ∗ x̂)[i+m-1], one forward FFT of the
/// sequence per call. Lengths are padded to the next power of two.
pub fn hankel_matmul(seq: &[C64], x: &DMatrix<C64>, fft: &HankelFft) -> DMatrix<C64> {
    let m = x.nrows();
    assert_eq!(seq.len(), 2 * m - 1, "Hankel sequence must have length 2m-1");
    let len = (3 * m).next_power_of_two();
    let (fwd, inv) = {
        let mut planner = fft.planner.lock().unwrap();
        (
            planner.plan_fft_forward(len),
            planner.plan_fft_inverse(len),
        )
    };
    let mut seq_hat = vec![C64::default(); len];
    seq_hat[..2 * m - 1].copy_from_slice(seq);
    fwd.process(&mut seq_hat);
    let mut out = DMatrix::zeros(m, x.ncols());
    let mut buf = vec![C64::default(); len];
    let scale = 1.0 / len as f64;
    for col in 0..x.ncols() {
        buf.iter_mut().for_each(|v| *v = C64::default());
        for i in 0..m {
            buf[i] = x[(m - 1 - i, col)];
        }
        fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&seq_hat) {
            *b *= s;
        }
        inv.process(&mut buf);
        for i in 0..m {
            out[(i, col)] = buf[m - 1 + i] * scale;
        }
    }
    out
}

/// Dense Hankel product oracle (tests and the naive fallback at small sizes).
pub fn hankel_matmul_dense(seq: &[C64], x: &DMatrix<C64>) -> DMatrix<C64> {
    let m = x.nrows();
    assert_eq!(seq.len(), 2 * m - 1);
    let h = DMatrix::from_fn(m, m, |i, j| seq[i + j]);
    h * x
}

/// Z = Σ_m A_m W (G_{k+1} ∘ F_m) evaluated directly.
pub fn z_naive(nep: &SpmfNep, tables: &TaylorTables, w: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    let n = nep.dim();
    let mut z = DMatrix::zeros(n, k + 1);
    for (m, term) in nep.terms().iter().enumerate() {
        let gf = gf_hadamard(&tables.over[m], k);
        if gf.iter().all(|v| *v == C64::default()) {
            continue;
        }
        let aw = term.matrix.matmul_dense(w);
        z += aw * gf;
    }
    z
}

/// Rank-compressed Z̃ = Σ_m A_m Σ_{j<=q} W diag(u_j) F_m diag(v_j) with the
/// Hankel products F_m · (…) done by FFT. The error obeys
/// ‖Z - Z̃‖_F ≤ (Σ_m ‖A_m W‖_F ‖F_m‖_F) · Σ_{j>q} σ_j(G).
pub fn z_lowrank_fft(
    nep: &SpmfNep,
    tables: &TaylorTables,
    w: &DMatrix<C64>,
    k: usize,
    factors: &GFactors,
    fft: &HankelFft,
) -> DMatrix<C64> {
    let n = nep.dim();
    let kp1 = k + 1;
    let q = factors.rank;
    let mut z = DMatrix::zeros(n, kp1);
    let wt = w.transpose(); // (k+1) × n
    for (m, term) in nep.terms().iter().enumerate() {
        let seq = &tables.raw[m][1..=2 * k + 1];
        if seq.iter().all(|v| *v == C64::default()) {
            continue;
        }
        // Yᵀ = Σ_j diag(v_j) F (diag(u_j) Wᵀ), using the symmetry of F
        let mut yt = DMatrix::<C64>::zeros(kp1, n);
        for j in 0..q {
            let mut scaled = wt.clone();
            for row in 0..kp1 {
                let uj = c(factors.u[(row, j)]);
                for col in 0..n {
                    scaled[(row, col)] *= uj;
                }
            }
            let fs = hankel_matmul(seq, &scaled, fft);
            for row in 0..kp1 {
                let vj = c(factors.v[(row, j)]);
                for col in 0..n {
                    yt[(row, col)] += vj * fs[(row, col)];
                }
            }
        }
        z += term.matrix.matmul_dense(&yt.transpose());
    }
    z
}

/// The right-hand side of the rank-q error bound:
/// (Σ_m ‖A_m W‖_F ‖F_m‖_F) · Σ_{j>q} σ_j(G).
pub fn lowrank_error_bound(
    nep: &SpmfNep,
    tables: &TaylorTables,
    w: &DMatrix<C64>,
    k: usize,
    factors: &GFactors,
) -> f64 {
    let mut coeff = 0.0f64;
    for (m, term) in nep.terms().iter().enumerate() {
        let aw = term.matrix.matmul_dense(w).norm();
        let mut f_frob = 0.0f64;
        for s in 1..=2 * k + 1 {
            let count = s.min(2 * k + 2 - s) as f64;
            f_frob += count * tables.raw[m][s].norm_sqr();
        }
        coeff += aw * f_frob.sqrt();
    }
    coeff * factors.tail_sum()
}

/// Exact delay kernel. For f = -λ the Hadamard factor is -e₁e₁ᵀ, constants
/// vanish, and an exponential e^{aλ} gives F = a·vvᵀ with v_j = a^{j-1}, so
/// G ∘ F = a·diag(v)·G·diag(v) and each delay term costs one dense product
/// with G instead of a per-term Hadamard assembly.
pub fn z_dep(
    nep: &SpmfNep,
    coeff: &CoeffTables,
    w: &DMatrix<C64>,
    k: usize,
) -> Result<DMatrix<C64>> {
    let n = nep.dim();
    let kp1 = k + 1;
    let g = coeff.g_matrix();
    debug_assert!(g.nrows() >= kp1);
    // G is real: the product with it runs as two real GEMMs
    let g_real = g.view((0, 0), (kp1, kp1)).clone_owned();
    let mut z = DMatrix::<C64>::zeros(n, kp1);
    for (m, term) in nep.terms().iter().enumerate() {
        match &term.function {
            ScalarFunction::Constant => {}
            ScalarFunction::NegatedIdentity => {
                // G ∘ F = -g₁₁ e₁e₁ᵀ = -e₁e₁ᵀ
                let w1 = w.column(0).clone_owned();
                let aw1 = term.matrix.matvec(&w1);
                for i in 0..n {
                    z[(i, 0)] -= aw1[i];
                }
            }
            ScalarFunction::Exponential { rate } => {
                let a = *rate;
                let mut v = DVector::<C64>::zeros(kp1);
                let mut p = c(1.0);
                for j in 0..kp1 {
                    v[j] = p;
                    p *= a;
                }
                // a · A_m (W diag v) G diag v
                let mut wv_re = DMatrix::<f64>::zeros(n, kp1);
                let mut wv_im = DMatrix::<f64>::zeros(n, kp1);
                for j in 0..kp1 {
                    let vj = v[j];
                    for i in 0..n {
                        let x = w[(i, j)] * vj;
                        wv_re[(i, j)] = x.re;
                        wv_im[(i, j)] = x.im;
                    }
                }
                let pre = &wv_re * &g_real;
                let pim = &wv_im * &g_real;
                let mut prod =
                    DMatrix::<C64>::from_fn(n, kp1, |i, j| C64::new(pre[(i, j)], pim[(i, j)]));
                for j in 0..kp1 {
                    let vj = v[j] * a;
                    for i in 0..n {
                        prod[(i, j)] *= vj;
                    }
                }
                z += term.matrix.matmul_dense(&prod);
            }
            other => {
                return Err(Error::StrategyMismatch {
                    strategy: "dep".into(),
                    reason: format!("term {m} has unsupported function {other:?}"),
                });
            }
        }
    }
    Ok(z)
}

/// Exact polynomial plus low-rank split Z = Z_p + Z_lr. Polynomial terms have
/// banded G ∘ F (at most d nonzero anti-diagonals) applied as a sparse
/// product; tagged terms use A_m = U_m U_mᵀ so the big dimension only enters
/// through U_m (the small (U_mᵀW)(G∘F_m) product is formed first).
pub fn z_poly_lowrank(
    nep: &SpmfNep,
    tables: &TaylorTables,
    w: &DMatrix<C64>,
    k: usize,
) -> Result<DMatrix<C64>> {
    let n = nep.dim();
    let kp1 = k + 1;
    let mut z = DMatrix::<C64>::zeros(n, kp1);
    for (m, term) in nep.terms().iter().enumerate() {
        if let Some(u) = &term.low_rank {
            let gf = gf_hadamard(&tables.over[m], k);
            let p = u.transpose() * w; // r × (k+1)
            let q = p * gf;
            z += u * q;
        } else if term.function.polynomial_coeffs().is_some() {
            // banded: anti-diagonal s contributes only when t_s ≠ 0
            let over = &tables.over[m];
            let aw = term.matrix.matmul_dense(w);
            for s in 1..=(2 * k + 1).min(over.len() - 1) {
                if over[s] == C64::default() {
                    continue;
                }
                let mut val = over[s];
                for i in 1..=s {
                    let j = s + 1 - i;
                    if i <= kp1 && j <= kp1 {
                        // z[:, j] += (A W)[:, i] · e(i, j)
                        for row in 0..n {
                            let add = aw[(row, i - 1)] * val;
                            z[(row, j - 1)] += add;
                        }
                    }
                    if i < s {
                        val = val * c(i as f64) / c((j - 1) as f64);
                    }
                }
            }
        } else {
            return Err(Error::StrategyMismatch {
                strategy: "poly-lowrank".into(),
                reason: format!("term {m} is neither polynomial nor low-rank tagged"),
            });
        }
    }
    Ok(z)
}

/// Per-solve context owning the coefficient tables, FFT plans, and the G
/// factors for the current iteration size.
pub struct ZContext {
    pub strategy: ZStrategy,
    coeff: CoeffTables,
    fft: HankelFft,
    factors: Option<(usize, GFactors)>,
}

impl ZContext {
    pub fn new(strategy: ZStrategy, nep: &SpmfNep) -> Result<ZContext> {
        strategy.validate(nep)?;
        Ok(ZContext {
            strategy,
            coeff: CoeffTables::new(8),
            fft: HankelFft::new(),
            factors: None,
        })
    }

    /// Coefficient tables covering at least size k (doubling growth).
    pub fn coeff_tables(&mut self, k: usize) -> &CoeffTables {
        if self.coeff.k() < k {
            self.coeff = CoeffTables::new(k.max(self.coeff.k() * 2));
        }
        &self.coeff
    }

    pub fn compute_z(
        &mut self,
        nep: &SpmfNep,
        tables: &TaylorTables,
        w: &DMatrix<C64>,
        k: usize,
    ) -> Result<DMatrix<C64>> {
        match self.strategy {
            ZStrategy::Naive => Ok(z_naive(nep, tables, w, k)),
            ZStrategy::Dep => {
                self.coeff_tables(k);
                z_dep(nep, &self.coeff, w, k)
            }
            ZStrategy::PolyLowRank => z_poly_lowrank(nep, tables, w, k),
            ZStrategy::LowRankFft { rank } => {
                let needs_new = match &self.factors {
                    Some((kk, _)) => *kk != k,
                    None => true,
                };
                if needs_new {
                    // factors of the exact-size table: the truncation quality
                    // statement is about G_{k+1} itself
                    let exact = CoeffTables::new(k.max(1));
                    self.factors = Some((k, g_factors(&exact, rank)));
                }
                let factors = &self.factors.as_ref().unwrap().1;
                Ok(z_lowrank_fft(nep, tables, w, k, factors, &self.fft))
            }
        }
    }
}
