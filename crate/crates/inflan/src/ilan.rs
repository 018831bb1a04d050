//! The infinite Lanczos iteration: a block-structured short-term recurrence on
//! the symmetric linearization that never forms it. The k-th Lanczos vector of
//! the linearized problem has exactly k nonzero blocks; only the last two
//! block matrices are kept, plus the running first-block history that feeds
//! eigenpair extraction.

use crate::error::{Error, Result};
use crate::kernels::{ZContext, ZStrategy};
use crate::nep::{M0Solver, SpmfNep, TaylorTables};
use crate::series::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use std::time::Instant;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub const BREAKDOWN_TOL: f64 = 1e-14;
/// Below this relative size ω is suspicious but the iteration continues.
pub const NEAR_BREAKDOWN_WARN: f64 = 1e-8;

/// Iteration state: the two trailing block bases, the tridiagonal
/// coefficients, the indefinite-product diagonal, and the first-block history.
#[derive(Debug, Clone)]
pub struct KrylovState {
    n: usize,
    /// number of Lanczos block-vectors built so far (the current one has
    /// `k` nonzero blocks, stored as the columns of `q_cur`)
    k: usize,
    q_prev: DMatrix<C64>,
    q_cur: DMatrix<C64>,
    /// t_{j,j}
    t_diag: Vec<C64>,
    /// t_{j+1,j} (real normalization coefficients, stored complex)
    t_sub: Vec<C64>,
    /// t_{j-1,j} for j >= 2 (equals t_{j,j-1} in exact arithmetic)
    t_super: Vec<C64>,
    /// ω_1, ω_2, ...
    omega: Vec<C64>,
    /// first column of every Lanczos block-vector, in order
    first_blocks: Vec<DVector<C64>>,
}

impl KrylovState {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of Lanczos vectors in the basis.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Completed iterations (= columns of T).
    pub fn iterations(&self) -> usize {
        self.t_diag.len()
    }

    pub fn q_cur(&self) -> &DMatrix<C64> {
        &self.q_cur
    }

    pub fn q_prev(&self) -> &DMatrix<C64> {
        &self.q_prev
    }

    pub fn omega(&self) -> &[C64] {
        &self.omega
    }

    /// The (j+1)×j leading part of T, j <= completed iterations.
    pub fn t_matrix(&self, j: usize) -> DMatrix<C64> {
        assert!(j <= self.t_diag.len());
        let mut t = DMatrix::zeros(j + 1, j);
        for i in 0..j {
            t[(i, i)] = self.t_diag[i];
            t[(i + 1, i)] = self.t_sub[i];
            if i + 1 < j {
                t[(i, i + 1)] = self.t_super[i];
            }
        }
        t
    }

    /// The square j×j leading part of T.
    pub fn t_square(&self, j: usize) -> DMatrix<C64> {
        let full = self.t_matrix(j);
        full.view((0, 0), (j, j)).clone_owned()
    }

    /// n×k matrix of accumulated first blocks.
    pub fn first_blocks_matrix(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.n, self.first_blocks.len());
        for (j, col) in self.first_blocks.iter().enumerate() {
            out.column_mut(j).copy_from(col);
        }
        out
    }
}

/// Start the recurrence: normalize q1 and compute ω_1 = q̂₁ᵀ M₁ q̂₁
/// (transpose product, complex-symmetric convention).
pub fn init(nep: &SpmfNep, q1: &DVector<C64>) -> Result<KrylovState> {
    let n = nep.dim();
    assert_eq!(q1.len(), n);
    let norm = q1.norm();
    if norm == 0.0 {
        return Err(Error::ZeroStartingVector);
    }
    let q = q1 / c(norm);
    nep.taylor_tables(1)?;
    let m1q = nep.derivative_matvec(1, &DMatrix::from_column_slice(n, 1, q.as_slice()))?;
    let mut omega1 = C64::default();
    for i in 0..n {
        omega1 += q[i] * m1q[(i, 0)];
    }
    let scale = m1q.norm().max(1e-300);
    if omega1.norm() <= BREAKDOWN_TOL * scale {
        return Err(Error::BreakdownOmega {
            iteration: 1,
            omega: omega1.norm(),
        });
    }
    let mut q_cur = DMatrix::zeros(n, 1);
    q_cur.column_mut(0).copy_from(&q);
    Ok(KrylovState {
        n,
        k: 1,
        q_prev: DMatrix::zeros(n, 0),
        q_cur,
        t_diag: Vec::new(),
        t_sub: Vec::new(),
        t_super: Vec::new(),
        omega: vec![omega1],
        first_blocks: vec![q],
    })
}

/// The operator action in block form: W = w₁e₁ᵀ + Q_k D with d_{j,j+1} = 1/j
/// and w₁ = -M₀⁻¹ Σ_{j=1}^k (M_j/j) q̃_j. (The sign follows from the
/// companion structure: its (1,1) block is -M₀.)
pub fn step_w(
    state: &KrylovState,
    nep: &SpmfNep,
    tables: &TaylorTables,
    m0: &M0Solver,
) -> (DVector<C64>, DMatrix<C64>) {
    let n = state.n;
    let k = state.k;
    debug_assert!(tables.order >= k);
    let mut rhs = DVector::<C64>::zeros(n);
    let mut scratch = DVector::<C64>::zeros(n);
    for (m, term) in nep.terms().iter().enumerate() {
        let weights = &tables.over[m];
        scratch.fill(C64::default());
        let mut any = false;
        for j in 1..=k {
            let wj = weights[j];
            if wj != C64::default() {
                scratch.axpy(wj, &state.q_cur.column(j - 1), c(1.0));
                any = true;
            }
        }
        if any {
            rhs += term.matrix.matvec(&scratch);
        }
    }
    let w1 = -m0.solve_vec(&rhs);
    let mut w = DMatrix::zeros(n, k + 1);
    w.column_mut(0).copy_from(&w1);
    for j in 1..=k {
        let inv = c(1.0 / j as f64);
        let src = state.q_cur.column(j - 1);
        let mut dst = w.column_mut(j);
        for i in 0..n {
            dst[i] = src[i] * inv;
        }
    }
    (w1, w)
}

/// Unconjugated inner product of vectorized matrices, zero-padding the one
/// with fewer columns: vec(Z)ᵀ vec(Y) = sum of all entries of Z ∘ Y.
pub fn transpose_inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    debug_assert_eq!(a.nrows(), b.nrows());
    let cols = a.ncols().min(b.ncols());
    let mut acc = C64::default();
    for j in 0..cols {
        let ca = a.column(j);
        let cb = b.column(j);
        for i in 0..a.nrows() {
            acc += ca[i] * cb[i];
        }
    }
    acc
}

/// The three scalar products of one iteration, computed in matrix form.
pub fn scalar_products(
    z: &DMatrix<C64>,
    q_cur: &DMatrix<C64>,
    q_prev: &DMatrix<C64>,
    w: &DMatrix<C64>,
) -> (C64, C64, C64) {
    let alpha = transpose_inner(z, q_cur);
    let beta = transpose_inner(z, q_prev);
    let gamma = transpose_inner(z, w);
    (alpha, beta, gamma)
}

/// What an update step decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Continue,
    /// t_{k+1,k} ≈ 0: invariant subspace found; the state was not advanced.
    HappyBreakdown,
    /// ω_{k+1} ≈ 0: the next iteration would divide by a vanishing product.
    OmegaBreakdown,
}

/// Orthogonalize W against the two trailing basis vectors, normalize, and
/// update the recurrence coefficients.
pub fn lanczos_update(
    state: &mut KrylovState,
    w: &DMatrix<C64>,
    alpha: C64,
    beta: C64,
    gamma: C64,
) -> Result<StepOutcome> {
    let k = state.k;
    let omega_k = state.omega[k - 1];
    let tkk = alpha / omega_k;
    let tkm1k = if k > 1 {
        beta / state.omega[k - 2]
    } else {
        C64::default()
    };
    let mut wperp = w.clone();
    for j in 0..state.q_cur.ncols() {
        let src = state.q_cur.column(j);
        let mut dst = wperp.column_mut(j);
        for i in 0..state.n {
            dst[i] -= tkk * src[i];
        }
    }
    for j in 0..state.q_prev.ncols() {
        let src = state.q_prev.column(j);
        let mut dst = wperp.column_mut(j);
        for i in 0..state.n {
            dst[i] -= tkm1k * src[i];
        }
    }
    let tk1k = wperp.norm();
    if !tk1k.is_finite() || !tkk.is_finite() {
        return Err(Error::NonFiniteIterate { iteration: k });
    }
    state.t_diag.push(tkk);
    if k > 1 {
        state.t_super.push(tkm1k);
    }
    if tk1k <= BREAKDOWN_TOL * w.norm().max(1e-300) {
        state.t_sub.push(C64::default());
        state.omega.push(C64::default());
        return Ok(StepOutcome::HappyBreakdown);
    }
    state.t_sub.push(c(tk1k));
    let q_next = wperp / c(tk1k);
    let omega_next = (gamma - c(2.0) * tkk * alpha - c(2.0) * tkm1k * beta
        + tkk * tkk * omega_k
        + if k > 1 {
            tkm1k * tkm1k * state.omega[k - 2]
        } else {
            C64::default()
        })
        / c(tk1k * tk1k);
    if !omega_next.is_finite() {
        return Err(Error::NonFiniteIterate { iteration: k });
    }
    let omega_scale = state.omega.iter().map(|o| o.norm()).fold(1.0f64, f64::max);
    let outcome = if omega_next.norm() <= BREAKDOWN_TOL * omega_scale {
        StepOutcome::OmegaBreakdown
    } else {
        if omega_next.norm() <= NEAR_BREAKDOWN_WARN * omega_scale {
            log::warn!(
                "iteration {k}: omega is small ({:.3e} relative); continuing without look-ahead",
                omega_next.norm() / omega_scale
            );
        }
        StepOutcome::Continue
    };
    state.omega.push(omega_next);
    state.first_blocks.push(q_next.column(0).clone_owned());
    state.q_prev = std::mem::replace(&mut state.q_cur, q_next);
    state.k += 1;
    Ok(outcome)
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    MaxIter,
    HappyBreakdown { iteration: usize },
    OmegaBreakdown { iteration: usize },
}

/// Per-iteration progress: (index, t_{k+1,k}, ω_{k+1}, elapsed seconds).
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub iteration: usize,
    pub t_next: f64,
    pub omega_next: C64,
    pub elapsed: f64,
}

pub struct IlanOptions {
    pub maxiter: usize,
    pub strategy: ZStrategy,
    /// Starting vector; a seeded pseudorandom unit vector when absent.
    pub start: Option<DVector<C64>>,
    pub seed: u64,
    /// Invoke the checkpoint callback every this many iterations (and at the
    /// end); 0 disables mid-run checkpoints.
    pub checkpoint_every: usize,
}

impl Default for IlanOptions {
    fn default() -> Self {
        IlanOptions {
            maxiter: 50,
            strategy: ZStrategy::Naive,
            start: None,
            seed: 1,
            checkpoint_every: 0,
        }
    }
}

pub struct IlanOutput {
    pub state: KrylovState,
    pub stop: StopReason,
    /// Seconds spent in each completed iteration.
    pub iteration_seconds: Vec<f64>,
}

/// Deterministic pseudorandom unit starting vector.
pub fn default_start(n: usize, seed: u64) -> DVector<C64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5));
    let norm = v.norm();
    v /= c(norm);
    v
}

/// Run the infinite Lanczos iteration. The checkpoint callback receives the
/// state after selected iterations (snapshot semantics: read what you need,
/// e.g. the first-block history, before returning).
pub fn run(
    nep: &SpmfNep,
    m0: &M0Solver,
    opts: &IlanOptions,
    mut progress: Option<&mut dyn FnMut(Progress)>,
    mut checkpoint: Option<&mut dyn FnMut(usize, &KrylovState) -> Result<()>>,
) -> Result<IlanOutput> {
    assert!(opts.maxiter >= 1);
    let start_vec = match &opts.start {
        Some(v) => v.clone(),
        None => default_start(nep.dim(), opts.seed),
    };
    let mut zctx = ZContext::new(opts.strategy, nep)?;
    let mut state = init(nep, &start_vec)?;
    let mut stop = StopReason::MaxIter;
    let mut iteration_seconds = Vec::with_capacity(opts.maxiter);
    let t0 = Instant::now();
    for k in 1..=opts.maxiter {
        let iter_start = Instant::now();
        let tables = nep.taylor_tables(2 * k + 1)?;
        let (_w1, w) = step_w(&state, nep, &tables, m0);
        let z = zctx.compute_z(nep, &tables, &w, k)?;
        let (alpha, beta, gamma) = scalar_products(&z, &state.q_cur, &state.q_prev, &w);
        let outcome = lanczos_update(&mut state, &w, alpha, beta, gamma).map_err(|e| match e {
            Error::NonFiniteIterate { .. } => Error::NonFiniteIterate { iteration: k },
            other => other,
        })?;
        iteration_seconds.push(iter_start.elapsed().as_secs_f64());
        if let Some(p) = progress.as_deref_mut() {
            p(Progress {
                iteration: k,
                t_next: state.t_sub.last().map(|t| t.re).unwrap_or(0.0),
                omega_next: *state.omega.last().unwrap(),
                elapsed: t0.elapsed().as_secs_f64(),
            });
        }
        match outcome {
            StepOutcome::HappyBreakdown => {
                stop = StopReason::HappyBreakdown { iteration: k };
                break;
            }
            StepOutcome::OmegaBreakdown => {
                stop = StopReason::OmegaBreakdown { iteration: k + 1 };
                break;
            }
            StepOutcome::Continue => {}
        }
        if opts.checkpoint_every > 0 && k % opts.checkpoint_every == 0 && k < opts.maxiter {
            if let Some(cb) = checkpoint.as_deref_mut() {
                cb(k, &state)?;
            }
        }
    }
    if let Some(cb) = checkpoint {
        cb(state.iterations(), &state)?;
    }
    Ok(IlanOutput {
        state,
        stop,
        iteration_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearization::{build_truncated, indefinite_lanczos_dense};
    use crate::nep::{SpmfNep, SpmfTerm, TermMatrix};
    use crate::problems;
    use crate::series::ScalarFunction;

    fn scalar_nep(terms: Vec<(ScalarFunction, f64)>) -> SpmfNep {
        SpmfNep::new(
            terms
                .into_iter()
                .map(|(f, v)| {
                    SpmfTerm::new(f, TermMatrix::Dense(DMatrix::from_element(1, 1, c(v))))
                })
                .collect(),
        )
        .unwrap()
    }

    fn one_minus_lambda() -> SpmfNep {
        scalar_nep(vec![
            (ScalarFunction::Constant, 1.0),
            (ScalarFunction::NegatedIdentity, 1.0),
        ])
    }

    #[test]
    fn init_scalar_omega() {
        // M(λ) = 1 - λ: ω₁ = q̂ᵀ M₁ q̂ = -1
        let nep = one_minus_lambda();
        let state = init(&nep, &DVector::from_element(1, c(1.0))).unwrap();
        assert!((state.omega[0] + c(1.0)).norm() < 1e-15);
        // M₁ = I: ω₁ = 1 for any real unit start
        let nep = SpmfNep::new(vec![SpmfTerm::new(
            ScalarFunction::Monomial { degree: 1 },
            TermMatrix::Dense(DMatrix::identity(4, 4)),
        )])
        .unwrap();
        let q = default_start(4, 3);
        let state = init(&nep, &q).unwrap();
        assert!((state.omega[0] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn init_rejects_zero_omega() {
        // M(λ) = λ²: M₁ = 0 so ω₁ = 0
        let nep = scalar_nep(vec![(ScalarFunction::Monomial { degree: 2 }, 1.0)]);
        let res = init(&nep, &DVector::from_element(1, c(1.0)));
        assert!(matches!(res, Err(Error::BreakdownOmega { iteration: 1, .. })));
    }

    #[test]
    fn step_w_scalar_hand_trace() {
        // M(λ) = 1 - λ: w₁ = -M₀⁻¹ (M₁/1) q̃₁ = +1 and W = [1, 1].
        // (The companion block (1,1) is -M₀, which fixes the sign; see the
        // dense-oracle equivalence test below for the cross-check.)
        let nep = one_minus_lambda();
        let m0 = nep.m0_factorize().unwrap();
        let state = init(&nep, &DVector::from_element(1, c(1.0))).unwrap();
        let tables = nep.taylor_tables(3).unwrap();
        let (w1, w) = step_w(&state, &nep, &tables, &m0);
        assert!((w1[0] - c(1.0)).norm() < 1e-15);
        assert!((w[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!((w[(0, 1)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn step_w_columns_scale_like_one_over_j() {
        // columns 2..k+1 of W equal q̃_j / j
        let nep = problems::gen_random_symmetric(6, 2);
        let m0 = nep.m0_factorize().unwrap();
        let mut state = init(&nep, &default_start(6, 1)).unwrap();
        for k in 1..=4usize {
            let tables = nep.taylor_tables(2 * k + 1).unwrap();
            let (_w1, w) = step_w(&state, &nep, &tables, &m0);
            for j in 1..=state.k() {
                let expect = state.q_cur.column(j - 1) / c(j as f64);
                let dev = (w.column(j) - expect).norm();
                assert!(dev <= 1e-15, "k={k} col {j}: {dev}");
            }
            let z = crate::kernels::z_naive(&nep, &tables, &w, k);
            let (a, b, g) = scalar_products(&z, &state.q_cur, &state.q_prev, &w);
            lanczos_update(&mut state, &w, a, b, g).unwrap();
        }
    }

    #[test]
    fn step_w_constant_problem_gives_zero_w1() {
        // all M_j = 0 for j >= 1: w₁ = 0, W = [0 | Q_cur D]
        let nep = SpmfNep::new(vec![SpmfTerm::new(
            ScalarFunction::Constant,
            TermMatrix::Dense(DMatrix::identity(3, 3) * c(2.0)),
        )])
        .unwrap();
        let m0 = nep.m0_factorize().unwrap();
        let state = init_for_constant(&nep);
        let tables = nep.taylor_tables(3).unwrap();
        let (w1, w) = step_w(&state, &nep, &tables, &m0);
        assert!(w1.norm() == 0.0);
        assert!(w.column(0).norm() == 0.0);
        assert!((w.column(1) - state.q_cur.column(0)).norm() == 0.0);
    }

    /// Constant problems have ω₁ = 0, so build the state by hand for the
    /// step_w structure check.
    fn init_for_constant(nep: &SpmfNep) -> KrylovState {
        let n = nep.dim();
        let q = default_start(n, 7);
        let mut q_cur = DMatrix::zeros(n, 1);
        q_cur.column_mut(0).copy_from(&q);
        KrylovState {
            n,
            k: 1,
            q_prev: DMatrix::zeros(n, 0),
            q_cur,
            t_diag: Vec::new(),
            t_sub: Vec::new(),
            t_super: Vec::new(),
            omega: vec![c(1.0)],
            first_blocks: vec![q],
        }
    }

    #[test]
    fn scalar_products_examples() {
        // Z = W real: γ = ||W||_F²
        let w = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let (_, _, g) = scalar_products(&w, &DMatrix::zeros(2, 0), &DMatrix::zeros(2, 0), &w);
        assert!((g - c(30.0)).norm() < 1e-14);
        // 1×2 case Z = [1, 2], Q_cur = [3] padded: α = 3
        let z = DMatrix::from_row_slice(1, 2, &[c(1.0), c(2.0)]);
        let q = DMatrix::from_element(1, 1, c(3.0));
        let (a, _, _) = scalar_products(&z, &q, &DMatrix::zeros(1, 0), &z);
        assert!((a - c(3.0)).norm() < 1e-14);
        // random complex: equals the explicit vectorized transpose product
        let za = DMatrix::from_fn(3, 4, |i, j| C64::new(i as f64 + 0.3, j as f64 - 1.0));
        let qa = DMatrix::from_fn(3, 2, |i, j| C64::new(j as f64 - 0.5, i as f64));
        let (a, _, _) = scalar_products(&za, &qa, &DMatrix::zeros(3, 0), &za);
        let mut direct = C64::default();
        for j in 0..2 {
            for i in 0..3 {
                direct += za[(i, j)] * qa[(i, j)];
            }
        }
        assert!((a - direct).norm() < 1e-14);
    }

    #[test]
    fn scalar_one_minus_lambda_full_trace() {
        // hand trace: ω₁ = -1, t₁₁ = 1, t₂₁ = 1, ω₂ = 0 (breakdown), and the
        // Ritz value 1/t₁₁ recovers λ = 1
        let nep = one_minus_lambda();
        let m0 = nep.m0_factorize().unwrap();
        let out = run(
            &nep,
            &m0,
            &IlanOptions {
                maxiter: 5,
                start: Some(DVector::from_element(1, c(1.0))),
                ..Default::default()
            },
            None,
            None,
        )
        .unwrap();
        assert!(matches!(out.stop, StopReason::OmegaBreakdown { iteration: 2 }));
        let st = &out.state;
        assert!((st.omega[0] + c(1.0)).norm() < 1e-15);
        assert!((st.t_diag[0] - c(1.0)).norm() < 1e-15);
        assert!((st.t_sub[0] - c(1.0)).norm() < 1e-15);
        assert!(st.omega[1].norm() < 1e-15);
        // basis normalized
        assert!((st.q_cur.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maxiter_one_gives_two_vectors() {
        let nep = problems::gen_random_symmetric(8, 5);
        let m0 = nep.m0_factorize().unwrap();
        let out = run(
            &nep,
            &m0,
            &IlanOptions {
                maxiter: 1,
                seed: 2,
                ..Default::default()
            },
            None,
            None,
        )
        .unwrap();
        assert_eq!(out.state.k(), 2);
        assert_eq!(out.state.omega.len(), 2);
        assert_eq!(out.state.t_diag.len(), 1);
        assert_eq!(out.state.first_blocks.len(), 2);
        assert!((out.state.q_cur.norm() - 1.0).abs() < 1e-13);
    }

    /// The central oracle: the structured iteration must reproduce the dense
    /// indefinite Lanczos recurrence on the explicitly truncated pair
    /// ([SA]_N, [SB]_N) column by column when started from the same
    /// first-block vector.
    #[test]
    fn equivalence_with_dense_truncation() {
        let n = 20;
        let nep = problems::gen_random_symmetric(n, 4);
        let maxiter = 12;
        let depth = 14;
        let tl = build_truncated(&nep, depth).unwrap();
        let q0 = default_start(n, 11);
        let mut q1_full = DVector::<C64>::zeros(n * depth);
        q1_full.rows_mut(0, n).copy_from(&q0);
        let dense = indefinite_lanczos_dense(&tl.sa, &tl.sb, &q1_full, maxiter).unwrap();
        assert!(dense.breakdown.is_none());

        let m0 = nep.m0_factorize().unwrap();
        let out = run(
            &nep,
            &m0,
            &IlanOptions {
                maxiter,
                start: Some(q0.clone()),
                ..Default::default()
            },
            None,
            None,
        )
        .unwrap();
        let st = &out.state;
        let compare = 10usize;
        // T and Ω columnwise
        for j in 0..compare {
            let rel = (st.t_diag[j] - dense.t[(j, j)]).norm()
                / dense.t[(j, j)].norm().max(1e-300);
            assert!(rel < 1e-6, "t_diag[{j}] rel {rel}");
            let rel =
                (st.t_sub[j] - dense.t[(j + 1, j)]).norm() / dense.t[(j + 1, j)].norm().max(1e-300);
            assert!(rel < 1e-6, "t_sub[{j}] rel {rel}");
            let rel = (st.omega[j] - dense.omega[j]).norm() / dense.omega[j].norm().max(1e-300);
            assert!(rel < 1e-6, "omega[{j}] rel {rel}");
        }
        // structure: dense vector j+1 has exactly j+1 nonzero blocks (up to
        // the dense solve noise; [SA]_N has exponentially decaying trailing
        // blocks, so its LU leaves a ~1e-8 footprint in the tail)
        for j in 0..compare {
            let col = dense.q.column(j);
            let tail = col.rows((j + 1) * n, (depth - j - 1) * n).norm();
            assert!(tail < 1e-6, "vector {j} tail {tail}");
        }
        // stored blocks: the current block matrix equals the reshaped dense
        // vector at index k, the previous at k-1
        let k = st.k();
        for (mat, idx) in [(&st.q_cur, k - 1), (&st.q_prev, k - 2)] {
            let col = dense.q.column(idx);
            for blk in 0..mat.ncols() {
                let dev = (mat.column(blk) - col.rows(blk * n, n)).norm();
                assert!(dev < 1e-6, "block {blk} of vector {idx}: {dev}");
            }
        }
        // first-block history
        let fb = st.first_blocks_matrix();
        for j in 0..fb.ncols().min(dense.q.ncols()) {
            let dev = (fb.column(j) - dense.q.column(j).rows(0, n)).norm();
            assert!(dev < 1e-6, "first block {j}: {dev}");
        }
    }

    #[test]
    fn omega_t_symmetry() {
        // Ω_k T_k symmetric: self-adjointness of the operator in the B-product
        let nep = problems::gen_random_symmetric(15, 9);
        let m0 = nep.m0_factorize().unwrap();
        let out = run(
            &nep,
            &m0,
            &IlanOptions {
                maxiter: 15,
                seed: 5,
                ..Default::default()
            },
            None,
            None,
        )
        .unwrap();
        let k = out.state.iterations().min(15);
        let t = out.state.t_square(k);
        let om = DMatrix::from_diagonal(&DVector::from_iterator(
            k,
            out.state.omega[..k].iter().copied(),
        ));
        let ot = &om * &t;
        let rel = (&ot - ot.transpose()).norm() / ot.norm();
        assert!(rel < 1e-8, "Omega T asymmetry {rel}");
    }

    #[test]
    fn z_naive_equals_dense_sb_action() {
        // Z from the kernel equals [SB]_{k+1} vec(W) on the dense truncation
        let n = 6;
        let nep = problems::gen_random_symmetric(n, 13);
        let k = 5;
        let tl = build_truncated(&nep, k + 1).unwrap();
        let tables = nep.taylor_tables(2 * k + 1).unwrap();
        let w = DMatrix::from_fn(n, k + 1, |i, j| {
            C64::new((i + 2 * j) as f64 * 0.1 - 0.4, (i * j) as f64 * 0.05)
        });
        let z = crate::kernels::z_naive(&nep, &tables, &w, k);
        let mut wvec = DVector::<C64>::zeros(n * (k + 1));
        for j in 0..=k {
            wvec.rows_mut(j * n, n).copy_from(&w.column(j));
        }
        let zvec = &tl.sb * wvec;
        for j in 0..=k {
            let dev = (z.column(j) - zvec.rows(j * n, n)).norm();
            assert!(
                dev < 1e-10 * zvec.norm().max(1.0),
                "block {j} deviation {dev}"
            );
        }
    }

    #[test]
    fn progress_and_checkpoint_callbacks_fire() {
        let nep = problems::gen_random_symmetric(10, 6);
        let m0 = nep.m0_factorize().unwrap();
        let mut progress_count = 0usize;
        let mut checkpoints = Vec::new();
        let mut progress = |p: Progress| {
            progress_count += 1;
            assert!(p.t_next >= 0.0);
            assert!(p.elapsed >= 0.0);
        };
        let mut checkpoint = |k: usize, st: &KrylovState| {
            checkpoints.push((k, st.first_blocks_matrix().ncols()));
            Ok(())
        };
        let out = run(
            &nep,
            &m0,
            &IlanOptions {
                maxiter: 9,
                checkpoint_every: 3,
                seed: 8,
                ..Default::default()
            },
            Some(&mut progress),
            Some(&mut checkpoint),
        )
        .unwrap();
        assert!(matches!(out.stop, StopReason::MaxIter));
        assert_eq!(progress_count, 9);
        assert_eq!(out.iteration_seconds.len(), 9);
        // checkpoints at 3, 6 and the final one at 9
        assert_eq!(checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), vec![3, 6, 9]);
    }

    #[test]
    fn strategies_agree_inside_iteration() {
        // run the same problem with naive and dep kernels; coefficients match
        let nep = problems::gen_random_dep(25, 3);
        let m0 = nep.m0_factorize().unwrap();
        let mk_opts = |strategy| IlanOptions {
            maxiter: 10,
            strategy,
            seed: 4,
            ..Default::default()
        };
        let a = run(&nep, &m0, &mk_opts(ZStrategy::Naive), None, None).unwrap();
        let b = run(&nep, &m0, &mk_opts(ZStrategy::Dep), None, None).unwrap();
        for j in 0..a.state.t_diag.len().min(b.state.t_diag.len()) {
            let dev = (a.state.t_diag[j] - b.state.t_diag[j]).norm();
            assert!(dev < 1e-9 * a.state.t_diag[j].norm().max(1.0), "col {j}");
        }
    }
}
