//! Acceptance suite: one test per criterion, each printing a pass line with
//! its runtime (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Tolerances are pinned in the assertions.

use inflan::config::{ProblemKind, ProblemSpec, RunConfig, StrategySpec};
use inflan::driver;
use inflan::extraction::{basis, filter_converged, iar, project, ExtractionMethod, IarOptions};
use inflan::ilan::{self, IlanOptions};
use inflan::kernels::{
    g_factors, g_singular_values, hankel_matmul, hankel_matmul_dense, lowrank_error_bound,
    z_dep, z_lowrank_fft, z_naive, z_poly_lowrank, HankelFft, ZStrategy,
};
use inflan::linearization::{
    build_truncated, companion_eigs, indefinite_lanczos_dense, CoeffTables, Disk,
};
use inflan::nep::{unpack_doubled, SpmfNep, SpmfTerm, TermMatrix};
use inflan::problems;
use inflan::series::ScalarFunction;
use inflan::C64;
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn pass(criterion: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < budget_s,
        "{criterion}: runtime {elapsed:.2}s exceeded the {budget_s}s budget"
    );
    println!("acceptance {criterion}: PASS ({elapsed:.2}s)");
}

fn binom(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// 1. Coefficient tables: recurrence vs closed form 1/binomial(i+j, i) for
/// all i, j <= 30 within 1e-12; C symmetric exactly. Runtime < 1 s.
#[test]
fn criterion_01_coefficient_tables() {
    let t0 = Instant::now();
    let k = 30;
    let tables = CoeffTables::new(k);
    for i in 1..=k {
        for j in 1..=k {
            let dev = (tables.c(i, j) * binom(i + j, i) - 1.0).abs();
            assert!(dev <= 1e-12, "c({i},{j}) closed-form deviation {dev:.3e}");
            assert!(
                tables.c(i, j) == tables.c(j, i),
                "C symmetry must be exact at ({i},{j})"
            );
        }
    }
    pass("1 (coefficient tables)", t0, 1.0);
}

/// 2. Symmetrizer theorem: for 5 random symmetric NEPs (n <= 8, mixed
/// catalog), [SA]_6 and [SB]_6 are symmetric within 1e-13 and equal the
/// products with [S] within 1e-12 (the product formed one depth up and
/// restricted, which is the finite statement of the infinite identity).
/// Runtime < 5 s.
#[test]
fn criterion_02_symmetrizer_theorem() {
    let t0 = Instant::now();
    for seed in 0..5u64 {
        let n = 4 + (seed as usize % 5);
        let nep = problems::gen_random_symmetric(n, seed);
        let depth = 6;
        let tl = build_truncated(&nep, depth).unwrap();
        let sa_scale = tl.sa.norm();
        let sb_scale = tl.sb.norm();
        assert!(
            (&tl.sa - tl.sa.transpose()).norm() <= 1e-13 * sa_scale,
            "seed {seed}: SA symmetry"
        );
        assert!(
            (&tl.sb - tl.sb.transpose()).norm() <= 1e-13 * sb_scale,
            "seed {seed}: SB symmetry"
        );
        let big = build_truncated(&nep, depth + 1).unwrap();
        let dim = tl.sa.nrows();
        let sa_prod = (&big.s * &big.a).view((0, 0), (dim, dim)).clone_owned();
        let sb_prod = (&big.s * &big.b).view((0, 0), (dim, dim)).clone_owned();
        assert!(
            (&tl.sa - &sa_prod).norm() <= 1e-12 * sa_scale,
            "seed {seed}: SA = S·A"
        );
        assert!(
            (&tl.sb - &sb_prod).norm() <= 1e-12 * sb_scale,
            "seed {seed}: SB = S·B"
        );
    }
    pass("2 (symmetrizer theorem)", t0, 5.0);
}

/// 3. Infinite-dimensional equivalence: structured iteration vs dense
/// indefinite Lanczos on ([SA]_14, [SB]_14), n = 20, first-block start:
/// T, Ω, and stored blocks agree columnwise to relative 1e-6 for the first
/// 10 iterations. Runtime < 10 s.
#[test]
fn criterion_03_infinite_dimensional_equivalence() {
    let t0 = Instant::now();
    let n = 20;
    let nep = problems::gen_random_symmetric(n, 4);
    let depth = 14;
    let maxiter = 12;
    let tl = build_truncated(&nep, depth).unwrap();
    let q0 = ilan::default_start(n, 11);
    let mut q_full = DVector::<C64>::zeros(n * depth);
    q_full.rows_mut(0, n).copy_from(&q0);
    let dense = indefinite_lanczos_dense(&tl.sa, &tl.sb, &q_full, maxiter).unwrap();
    let m0 = nep.m0_factorize().unwrap();
    let out = ilan::run(
        &nep,
        &m0,
        &IlanOptions {
            maxiter,
            strategy: ZStrategy::Naive,
            start: Some(q0),
            seed: 1,
            checkpoint_every: 0,
        },
        None,
        None,
    )
    .unwrap();
    let st = &out.state;
    let t_struct = st.t_matrix(10);
    for j in 0..10usize {
        for i in 0..=10usize {
            let dev = (t_struct[(i, j)] - dense.t[(i, j)]).norm();
            let scale = dense.t.column(j).norm().max(1e-300);
            assert!(dev / scale < 1e-6, "T({i},{j}) relative deviation");
        }
        let dev = (st.omega()[j] - dense.omega[j]).norm() / dense.omega[j].norm();
        assert!(dev < 1e-6, "omega[{j}] relative deviation {dev:.3e}");
    }
    let fb = st.first_blocks_matrix();
    for j in 0..10usize {
        let dense_block = dense.q.column(j).rows(0, n).clone_owned();
        let dev = (fb.column(j) - &dense_block).norm() / dense_block.norm();
        assert!(dev < 1e-6, "stored block {j} relative deviation {dev:.3e}");
    }
    pass("3 (infinite-dimensional equivalence)", t0, 10.0);
}

/// 4. Z-strategy agreement: delay and polynomial+low-rank kernels match the
/// direct evaluation to relative 1e-12 at n = 50, k = 30; the rank-20 FFT
/// path at k = 60 stays within its singular-tail bound (plus the floating
/// point comparison floor) and within 1e-8 relative. Runtime < 30 s.
#[test]
fn criterion_04_z_strategy_agreement() {
    let t0 = Instant::now();
    let n = 50;
    let k = 30;
    let w = DMatrix::<C64>::from_fn(n, k + 1, |i, j| {
        C64::new(
            ((i * 7 + j * 3) as f64 * 0.137).sin(),
            ((i + 2 * j) as f64 * 0.291).cos() * 0.5,
        )
    });
    // delay kernel
    let dep = problems::gen_random_dep(n, 9);
    let tables = dep.taylor_tables(2 * k + 1).unwrap();
    let reference = z_naive(&dep, &tables, &w, k);
    let coeff = CoeffTables::new(k);
    let fast = z_dep(&dep, &coeff, &w, k).unwrap();
    let rel = (&fast - &reference).norm() / reference.norm();
    assert!(rel <= 1e-12, "dep vs naive relative {rel:.3e}");
    // polynomial + low-rank kernel
    let mut rng_u = ilan::default_start(n, 5);
    rng_u *= c(2.0);
    let u = DMatrix::from_column_slice(n, 1, rng_u.as_slice());
    let low_rank_matrix = &u * u.transpose();
    let plr = SpmfNep::new(vec![
        SpmfTerm::new(
            ScalarFunction::Monomial { degree: 2 },
            TermMatrix::Dense(DMatrix::identity(n, n)),
        ),
        SpmfTerm::new(
            ScalarFunction::Monomial { degree: 1 },
            TermMatrix::Dense(DMatrix::identity(n, n) * c(0.3)),
        ),
        SpmfTerm::new(
            ScalarFunction::Exponential { rate: c(-0.7) },
            TermMatrix::Dense(low_rank_matrix),
        )
        .with_low_rank(u),
    ])
    .unwrap();
    let tables_p = plr.taylor_tables(2 * k + 1).unwrap();
    let ref_p = z_naive(&plr, &tables_p, &w, k);
    let fast_p = z_poly_lowrank(&plr, &tables_p, &w, k).unwrap();
    let rel = (&fast_p - &ref_p).norm() / ref_p.norm();
    assert!(rel <= 1e-12, "poly-lowrank vs naive relative {rel:.3e}");
    // rank-compressed FFT path at q = 20, k = 60
    let k2 = 60;
    let mixed = problems::gen_random_symmetric(n, 8);
    let tables_m = mixed.taylor_tables(2 * k2 + 1).unwrap();
    let w2 = DMatrix::<C64>::from_fn(n, k2 + 1, |i, j| {
        C64::new(((i + j) as f64 * 0.211).sin(), ((i * 3 + j) as f64 * 0.173).cos())
    });
    let ref_m = z_naive(&mixed, &tables_m, &w2, k2);
    let coeff2 = CoeffTables::new(k2);
    let factors = g_factors(&coeff2, Some(20));
    let fft = HankelFft::new();
    let approx = z_lowrank_fft(&mixed, &tables_m, &w2, k2, &factors, &fft);
    let err = (&approx - &ref_m).norm();
    let bound = lowrank_error_bound(&mixed, &tables_m, &w2, k2, &factors);
    let floor = 1e-14 * ref_m.norm();
    assert!(
        err <= bound + floor,
        "fft error {err:.3e} above bound {bound:.3e} + floor {floor:.3e}"
    );
    assert!(
        err <= 1e-8 * ref_m.norm(),
        "fft relative error {:.3e} above 1e-8",
        err / ref_m.norm()
    );
    pass("4 (Z-strategy agreement)", t0, 30.0);
}

/// 5. Hankel FFT kernel matches dense Hankel products to 1e-12 for
/// k in {16, 100, 512}, 20 random cases.
#[test]
fn criterion_05_hankel_fft_kernel() {
    let t0 = Instant::now();
    use rand::Rng;
    use rand::SeedableRng;
    let fft = HankelFft::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let mut cases = 0;
    for &k in &[16usize, 100, 512] {
        let m = k + 1;
        for _ in 0..7 {
            let seq: Vec<C64> = (0..2 * m - 1)
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let x = DMatrix::<C64>::from_fn(m, 2, |_, _| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let fast = hankel_matmul(&seq, &x, &fft);
            let dense = hankel_matmul_dense(&seq, &x);
            let rel = (&fast - &dense).norm() / dense.norm();
            assert!(rel <= 1e-12, "k={k}: relative deviation {rel:.3e}");
            cases += 1;
        }
    }
    assert!(cases >= 20);
    pass("5 (Hankel FFT kernel)", t0, 30.0);
}

/// 6. Singular value decay of G_100 in double precision: non-increasing and
/// σ_30/σ_1 <= 1e-12.
#[test]
fn criterion_06_g_singular_value_decay() {
    let t0 = Instant::now();
    let sigma = g_singular_values(99); // G_100 is (k+1)×(k+1) with k = 99
    assert_eq!(sigma.len(), 100);
    for w in sigma.windows(2) {
        assert!(w[0] >= w[1] - 1e-18, "singular values must be non-increasing");
    }
    let ratio = sigma[29] / sigma[0];
    assert!(ratio <= 1e-12, "sigma_30/sigma_1 = {ratio:.3e}");
    pass("6 (G singular-value decay)", t0, 10.0);
}

/// 7. Scalar and small oracles: the root of λ = e^{-λ} (0.567143…) recovered
/// to 1e-8 by the full pipeline at n = 1; every converged eigenvalue of a
/// random symmetric NEP (n = 30) inside the target disk matches the companion
/// oracle at truncation 30 within relative 1e-6.
#[test]
fn criterion_07_scalar_and_small_oracles() {
    let t0 = Instant::now();
    // scalar pipeline
    let one = DMatrix::from_element(1, 1, c(1.0));
    let nep = SpmfNep::new(vec![
        SpmfTerm::new(
            ScalarFunction::Exponential { rate: c(-1.0) },
            TermMatrix::Dense(one.clone()),
        ),
        SpmfTerm::new(ScalarFunction::NegatedIdentity, TermMatrix::Dense(one)),
    ])
    .unwrap();
    let m0 = nep.m0_factorize().unwrap();
    let out = ilan::run(
        &nep,
        &m0,
        &IlanOptions {
            maxiter: 12,
            start: Some(DVector::from_element(1, c(1.0))),
            ..Default::default()
        },
        None,
        None,
    )
    .unwrap();
    let fb = out.state.first_blocks_matrix();
    let v = basis(&fb).unwrap();
    let proj = project(&nep, &v).unwrap();
    let cands = iar(
        &proj.nep,
        &IarOptions {
            maxiter: 150,
            disk: None,
            seed: 1,
        },
    )
    .unwrap();
    let lifted: Vec<(C64, DVector<C64>)> =
        cands.into_iter().map(|(l, z)| (l, &proj.v * z)).collect();
    let res = filter_converged(lifted, &nep, 1e-8, ExtractionMethod::ProjectedIar).unwrap();
    let mut newton = 0.5f64;
    for _ in 0..60 {
        newton -= (newton - (-newton).exp()) / (1.0 + (-newton).exp());
    }
    let best = res
        .pairs
        .iter()
        .map(|p| (p.value - c(newton)).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-8, "λ = e^(-λ) root missed by {best:.3e}");

    // random symmetric NEP vs companion oracle
    let n = 30;
    let nep = problems::gen_random_symmetric(n, 21);
    let m0 = nep.m0_factorize().unwrap();
    let out = ilan::run(
        &nep,
        &m0,
        &IlanOptions {
            maxiter: 30,
            seed: 3,
            ..Default::default()
        },
        None,
        None,
    )
    .unwrap();
    let fb = out.state.first_blocks_matrix();
    let v = basis(&fb).unwrap();
    let proj = project(&nep, &v).unwrap();
    let disk = Disk {
        center: C64::default(),
        radius: 2.0,
    };
    let cands = iar(
        &proj.nep,
        &IarOptions {
            maxiter: 150,
            disk: Some(disk),
            seed: 2,
        },
    )
    .unwrap();
    let lifted: Vec<(C64, DVector<C64>)> =
        cands.into_iter().map(|(l, z)| (l, &proj.v * z)).collect();
    let res = filter_converged(lifted, &nep, 1e-6, ExtractionMethod::ProjectedIar).unwrap();
    assert!(
        !res.pairs.is_empty(),
        "expected converged eigenvalues inside the disk"
    );
    let oracle = companion_eigs(&nep, 30, None).unwrap();
    for p in &res.pairs {
        let best = oracle
            .iter()
            .map(|l| (l - p.value).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(
            best <= 1e-6 * p.value.norm().max(1.0),
            "eigenvalue {} missed the companion oracle by {best:.3e}",
            p.value
        );
    }
    pass("7 (scalar/small oracles)", t0, 60.0);
}

/// 8. Desk-scale delay-PDE benchmark: 10×10 interior grid (n = 100), 60
/// iterations, projected extraction: at least 5 eigenpairs with Err < 1e-6,
/// non-decreasing converged counts over checkpoints, every reported pair
/// re-verified by the residual measure. Runtime < 60 s.
#[test]
fn criterion_08_delay_pde_benchmark() {
    let t0 = Instant::now();
    let config = RunConfig {
        problem: ProblemSpec {
            kind: ProblemKind::DelayPde { grid: 10 },
            shift: [0.0, 0.0],
            scale: [1.0, 0.0],
            target_disk: None,
        },
        maxiter: 60,
        strategy: StrategySpec::Dep,
        lowrank_rank: None,
        tol: 1e-6,
        inner_iterations: 150,
        extraction_cadence: 10,
        seed: 1,
        output: None,
    };
    let out = driver::solve(&config).unwrap();
    assert!(
        out.result.pairs.len() >= 5,
        "only {} converged eigenpairs",
        out.result.pairs.len()
    );
    let counts: Vec<usize> = out.report.history.iter().map(|h| h.n_converged).collect();
    for w in counts.windows(2) {
        assert!(
            w[1] >= w[0],
            "converged counts must be non-decreasing: {counts:?}"
        );
    }
    for p in &out.result.pairs {
        let err = out.nep.residual_error(p.value, &p.vector).unwrap();
        assert!(err < 1e-6, "re-verified residual {err:.3e}");
    }
    pass("8 (delay-PDE benchmark)", t0, 60.0);
}

/// 8 (soft complexity report, not asserted): one Z evaluation by the exact
/// delay kernel vs the direct path at n = 400, k = 400.
#[test]
fn criterion_08_complexity_report() {
    let n_grid = 20; // n = 400
    let k = 400;
    let nep = problems::gen_delay_pde(n_grid);
    let tables = nep.taylor_tables(2 * k + 1).unwrap();
    let w = DMatrix::<C64>::from_fn(nep.dim(), k + 1, |i, j| {
        C64::new(((i + j) as f64 * 0.173).sin(), 0.0)
    });
    let coeff = CoeffTables::new(k);
    let t0 = Instant::now();
    let zn = z_naive(&nep, &tables, &w, k);
    let t_naive = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let zd = z_dep(&nep, &coeff, &w, k).unwrap();
    let t_dep = t0.elapsed().as_secs_f64();
    let rel = (&zd - &zn).norm() / zn.norm();
    assert!(rel <= 1e-12, "exactness still holds at scale: {rel:.3e}");
    println!(
        "acceptance 8 complexity report (not asserted): naive {t_naive:.3}s, dep {t_dep:.3}s, \
         speedup {:.2}x at n = 400, k = 400",
        t_naive / t_dep
    );
}

/// 9. Robust extraction beats raw Ritz: on the random delay problem
/// (n = 200) at 60 iterations, the projected path yields at least as many
/// residual-verified pairs as the raw Ritz path.
#[test]
fn criterion_09_projected_beats_ritz() {
    let t0 = Instant::now();
    let n = 200;
    let k = 60;
    let tol = 1e-6;
    let nep = problems::gen_random_dep(n, 7);
    let m0 = nep.m0_factorize().unwrap();
    let out = ilan::run(
        &nep,
        &m0,
        &IlanOptions {
            maxiter: k,
            strategy: ZStrategy::Dep,
            start: None,
            seed: 1,
            checkpoint_every: 0,
        },
        None,
        None,
    )
    .unwrap();
    let state = &out.state;
    let fb = state.first_blocks_matrix();
    let v = basis(&fb).unwrap();
    let proj = project(&nep, &v).unwrap();
    let cands = iar(
        &proj.nep,
        &IarOptions {
            maxiter: 150,
            disk: None,
            seed: 1,
        },
    )
    .unwrap();
    let lifted: Vec<(C64, DVector<C64>)> =
        cands.into_iter().map(|(l, z)| (l, &proj.v * z)).collect();
    let projected = filter_converged(lifted, &nep, tol, ExtractionMethod::ProjectedIar).unwrap();
    let ritz = driver::ritz_extraction(&nep, state, tol, None).unwrap();
    // both paths are residual-verified by construction; check anyway
    for p in projected.pairs.iter().chain(ritz.pairs.iter()) {
        let err = nep.residual_error(p.value, &p.vector).unwrap();
        assert!(err < tol);
    }
    assert!(
        projected.pairs.len() >= ritz.pairs.len(),
        "projected {} < ritz {}",
        projected.pairs.len(),
        ritz.pairs.len()
    );
    println!(
        "acceptance 9 counts: projected {} vs ritz {}",
        projected.pairs.len(),
        ritz.pairs.len()
    );
    pass("9 (projected extraction >= raw Ritz)", t0, 120.0);
}

/// 10. Symmetrized nonsymmetric NEP at desk scale: the doubled problem
/// (n = 100 → 200) yields at least one eigenpair with Err < 1e-6, and the
/// unpacked lower block satisfies the original problem with a residual
/// consistent with the doubled one within a factor 10.
#[test]
fn criterion_10_symmetrized_problem() {
    let t0 = Instant::now();
    let n = 100;
    let config = RunConfig {
        problem: ProblemSpec {
            kind: ProblemKind::SymmetrizedRandom { n },
            shift: [0.0, 0.0],
            scale: [1.0, 0.0],
            target_disk: None,
        },
        maxiter: 80,
        strategy: StrategySpec::Naive,
        lowrank_rank: None,
        tol: 1e-6,
        inner_iterations: 150,
        extraction_cadence: 20,
        seed: 1,
        output: None,
    };
    let out = driver::solve(&config).unwrap();
    assert!(
        !out.result.pairs.is_empty(),
        "expected at least one converged pair on the doubled problem"
    );
    let base = problems::gen_symmetrized_base(n);
    let mut checked = 0;
    for p in &out.result.pairs {
        let x = unpack_doubled(&p.vector);
        if x.norm() < 1e-6 * p.vector.norm() {
            continue; // eigenvector concentrated in the upper block
        }
        let err_original = base.residual_error(p.value, &x).unwrap();
        assert!(
            err_original <= 10.0 * p.residual.max(1e-15),
            "unpacked residual {err_original:.3e} vs doubled {:.3e}",
            p.residual
        );
        checked += 1;
    }
    assert!(checked >= 1, "no unpackable eigenvectors");
    pass("10 (symmetrized nonsymmetric NEP)", t0, 180.0);
}
