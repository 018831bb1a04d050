//! Matrix Market round trip with low-rank detection: write a generated sparse
//! problem shaped like an electromagnetic-cavity NEP
//! (A₁ - λA₂ + √(λ)-type terms with low-rank coupling matrices) to disk,
//! reload it with automatic low-rank tagging, shift-and-scale the problem,
//! and solve with the polynomial-plus-low-rank kernel.
//!
//! Run with: cargo run --release --example matrix_market

use inflan::config::{
    DiskSpec, FunctionSpec, MmTermSpec, ProblemKind, ProblemSpec, RunConfig, StrategySpec,
};
use inflan::mm::write_matrix_market;
use inflan::sparse::CsrMatrix;
use inflan::{driver, C64};
use rand::Rng;
use rand::SeedableRng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn main() -> inflan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let dir = std::env::temp_dir().join("inflan_mm_example");
    std::fs::create_dir_all(&dir)?;
    let n = 60;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);

    // stiffness-like tridiagonal A1 and identity mass A2
    let mut a1 = Vec::new();
    for i in 0..n {
        a1.push((i, i, c(2.2 + 0.1 * (i as f64).sin())));
        if i + 1 < n {
            a1.push((i, i + 1, c(-1.0)));
            a1.push((i + 1, i, c(-1.0)));
        }
    }
    let a1 = CsrMatrix::from_triplets(n, n, a1);
    let a2 = CsrMatrix::identity(n).scale(c(1.0 / 2.5));

    // low-rank boundary coupling A3 = U Uᵀ with rank 4
    let r = 4;
    let rows: Vec<usize> = (0..12).collect();
    let mut u = vec![vec![0.0f64; r]; n];
    for &row in &rows {
        for col in 0..r {
            u[row][col] = rng.gen::<f64>() - 0.5;
        }
    }
    let mut a3 = Vec::new();
    for &i in &rows {
        for &j in &rows {
            let mut v = 0.0;
            for col in 0..r {
                v += u[i][col] * u[j][col];
            }
            a3.push((i, j, c(0.05 * v)));
        }
    }
    let a3 = CsrMatrix::from_triplets(n, n, a3);

    let p1 = dir.join("a1.mtx");
    let p2 = dir.join("a2.mtx");
    let p3 = dir.join("a3.mtx");
    write_matrix_market(&p1, &a1, true)?;
    write_matrix_market(&p2, &a2, true)?;
    write_matrix_market(&p3, &a3, true)?;
    println!("wrote a1/a2/a3 .mtx files to {}", dir.display());

    // M(λ) = A1 - λ A2 + √(λ + 4)·A3, shifted so the region of interest is
    // centered: λ = 2 + λ̂
    let config = RunConfig {
        problem: ProblemSpec {
            kind: ProblemKind::MatrixMarket {
                terms: vec![
                    MmTermSpec {
                        path: p1,
                        function: FunctionSpec::Constant,
                        low_rank: false,
                    },
                    MmTermSpec {
                        path: p2,
                        function: FunctionSpec::NegatedIdentity,
                        low_rank: false,
                    },
                    MmTermSpec {
                        path: p3,
                        function: FunctionSpec::SqrtShift {
                            a: [1.0, 0.0],
                            b: [4.0, 0.0],
                        },
                        low_rank: true,
                    },
                ],
            },
            shift: [2.0, 0.0],
            scale: [1.0, 0.0],
            target_disk: Some(DiskSpec {
                center: [2.0, 0.0],
                radius: 2.0,
            }),
        },
        maxiter: 40,
        strategy: StrategySpec::Naive,
        lowrank_rank: None,
        tol: 1e-6,
        inner_iterations: 150,
        extraction_cadence: 10,
        seed: 1,
        output: None,
    };
    let out = driver::solve(&config)?;
    println!(
        "loaded problem n = {}, low-rank tag on term 3: rank {}",
        out.nep.dim(),
        out.nep.terms()[2]
            .low_rank
            .as_ref()
            .map(|u| u.ncols())
            .unwrap_or(0)
    );
    println!("{} eigenpairs inside the target disk:", out.result.pairs.len());
    for p in &out.result.pairs {
        println!(
            "  {:+12.6e} {:+12.6e}i   err = {:.2e}",
            p.value.re, p.value.im, p.residual
        );
    }
    Ok(())
}
