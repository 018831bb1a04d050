//! Agreement and timing of the Z-computation strategies.
//!
//! The exact reformulations (delay, polynomial plus low-rank) must match the
//! direct evaluation to rounding; the rank-compressed FFT path stays within
//! its singular-value tail bound. The timing section repeats the delay kernel
//! at n = 400, k = 400 against the direct path; the speedup is machine
//! dependent and reported, not asserted.
//!
//! Run with: cargo run --release --example z_strategies

use inflan::ilan::default_start;
use inflan::kernels::{
    g_factors, lowrank_error_bound, z_dep, z_lowrank_fft, z_naive, z_poly_lowrank, HankelFft,
};
use inflan::linearization::CoeffTables;
use inflan::problems;
use inflan::C64;
use nalgebra::DMatrix;
use std::time::Instant;

fn random_w(n: usize, cols: usize, seed: u64) -> DMatrix<C64> {
    let mut w = DMatrix::zeros(n, cols);
    for j in 0..cols {
        let col = default_start(n, seed + j as u64);
        w.column_mut(j).copy_from(&col);
    }
    w
}

fn main() -> inflan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    // exactness at n = 50, k = 30
    let k = 30;
    let dep = problems::gen_random_dep(50, 1);
    let tables = dep.taylor_tables(2 * k + 1)?;
    let w = random_w(50, k + 1, 3);
    let reference = z_naive(&dep, &tables, &w, k);
    let coeff = CoeffTables::new(k);
    let fast = z_dep(&dep, &coeff, &w, k)?;
    println!(
        "delay kernel vs direct (n=50, k=30): rel diff {:.3e}",
        (&fast - &reference).norm() / reference.norm()
    );

    let poly = problems::gen_random_polynomial(50, 3, 2);
    let tables_p = poly.taylor_tables(2 * k + 1)?;
    let ref_p = z_naive(&poly, &tables_p, &w, k);
    let fast_p = z_poly_lowrank(&poly, &tables_p, &w, k)?;
    println!(
        "polynomial kernel vs direct (n=50, k=30): rel diff {:.3e}",
        (&fast_p - &ref_p).norm() / ref_p.norm()
    );

    // rank-compressed path at k = 60 for a range of ranks
    let k2 = 60;
    let mixed = problems::gen_random_symmetric(50, 5);
    let tables_m = mixed.taylor_tables(2 * k2 + 1)?;
    let w2 = random_w(50, k2 + 1, 9);
    let ref_m = z_naive(&mixed, &tables_m, &w2, k2);
    let coeff2 = CoeffTables::new(k2);
    let fft = HankelFft::new();
    println!("\nrank-compressed FFT path at k = 60:");
    for q in [5usize, 10, 20] {
        let factors = g_factors(&coeff2, Some(q));
        let approx = z_lowrank_fft(&mixed, &tables_m, &w2, k2, &factors, &fft);
        let err = (&approx - &ref_m).norm();
        let bound = lowrank_error_bound(&mixed, &tables_m, &w2, k2, &factors);
        println!(
            "  q = {q:>2}: error {err:.3e}, tail bound {bound:.3e}, rel {:.3e}",
            err / ref_m.norm()
        );
    }
    let adaptive = g_factors(&coeff2, None);
    println!("  adaptive rank choice: q = {}", adaptive.rank);

    // timing: one Z evaluation at n = 400, k = 400
    let n = 400;
    let kt = 400;
    let big = problems::gen_delay_pde(20);
    let tables_b = big.taylor_tables(2 * kt + 1)?;
    let wb = random_w(n, kt + 1, 11);
    let coeff_b = CoeffTables::new(kt);
    let t0 = Instant::now();
    let zn = z_naive(&big, &tables_b, &wb, kt);
    let t_naive = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let zd = z_dep(&big, &coeff_b, &wb, kt)?;
    let t_dep = t0.elapsed().as_secs_f64();
    println!(
        "\ntiming at n=400, k=400: direct {:.3}s, delay kernel {:.3}s, speedup {:.2}x",
        t_naive,
        t_dep,
        t_naive / t_dep
    );
    println!(
        "agreement: rel diff {:.3e}",
        (&zd - &zn).norm() / zn.norm()
    );
    Ok(())
}
