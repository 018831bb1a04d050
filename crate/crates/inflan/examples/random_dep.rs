//! Robust extraction versus raw Ritz pairs on a random delay problem.
//!
//! The short-term recurrence loses orthogonality, so Ritz pairs taken
//! directly from the tridiagonal coefficients stall; solving the projected
//! problem instead stays on track. This example runs both extractions from
//! the same Krylov state and prints the verified counts.
//!
//! Run with: cargo run --release --example random_dep

use inflan::extraction::{basis, filter_converged, iar, project, ExtractionMethod, IarOptions};
use inflan::ilan::{self, IlanOptions};
use inflan::kernels::ZStrategy;
use inflan::{driver, problems, C64};
use nalgebra::DVector;

fn main() -> inflan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let n = 200;
    let k = 60;
    let tol = 1e-6;
    let nep = problems::gen_random_dep(n, 7);
    let m0 = nep.m0_factorize()?;
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
    )?;
    let state = &out.state;
    println!(
        "random delay problem, n = {n}, {} iterations",
        state.iterations()
    );

    // projected path
    let fb = state.first_blocks_matrix();
    let v = basis(&fb)?;
    let proj = project(&nep, &v)?;
    let candidates = iar(
        &proj.nep,
        &IarOptions {
            maxiter: 150.min(2 * v.ncols()),
            disk: None,
            seed: 1,
        },
    )?;
    let lifted: Vec<(C64, DVector<C64>)> = candidates
        .into_iter()
        .map(|(l, z)| (l, &proj.v * z))
        .collect();
    let projected = filter_converged(lifted, &nep, tol, ExtractionMethod::ProjectedIar)?;

    // raw Ritz path from the same state
    let ritz = driver::ritz_extraction(&nep, state, tol, None)?;

    println!("\nprojected problem (inner Arnoldi): {} converged", projected.pairs.len());
    for p in projected.pairs.iter().take(8) {
        println!(
            "  {:+12.6e} {:+12.6e}i   err = {:.2e}",
            p.value.re, p.value.im, p.residual
        );
    }
    println!("\nraw Ritz pairs: {} converged", ritz.pairs.len());
    for p in ritz.pairs.iter().take(8) {
        println!(
            "  {:+12.6e} {:+12.6e}i   err = {:.2e}",
            p.value.re, p.value.im, p.residual
        );
    }
    Ok(())
}
