//! The full pipeline on the 1-dimensional problem e^{-λ} - λ = 0: the root
//! λ = e^{-λ} ≈ 0.567143 is recovered to solver precision and checked against
//! a Newton iteration on the scalar equation.
//!
//! Run with: cargo run --release --example scalar_root

use inflan::extraction::{basis, filter_converged, iar, project, ExtractionMethod, IarOptions};
use inflan::ilan::{self, IlanOptions};
use inflan::nep::{SpmfNep, SpmfTerm, TermMatrix};
use inflan::series::ScalarFunction;
use inflan::C64;
use nalgebra::{DMatrix, DVector};

fn main() -> inflan::Result<()> {
    let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let nep = SpmfNep::new(vec![
        SpmfTerm::new(
            ScalarFunction::Exponential {
                rate: C64::new(-1.0, 0.0),
            },
            TermMatrix::Dense(one.clone()),
        ),
        SpmfTerm::new(ScalarFunction::NegatedIdentity, TermMatrix::Dense(one)),
    ])?;
    let m0 = nep.m0_factorize()?;
    let out = ilan::run(
        &nep,
        &m0,
        &IlanOptions {
            maxiter: 12,
            start: Some(DVector::from_element(1, C64::new(1.0, 0.0))),
            ..Default::default()
        },
        None,
        None,
    )?;
    let fb = out.state.first_blocks_matrix();
    let v = basis(&fb)?;
    let proj = project(&nep, &v)?;
    let candidates = iar(
        &proj.nep,
        &IarOptions {
            maxiter: 40,
            disk: None,
            seed: 1,
        },
    )?;
    let lifted: Vec<(C64, DVector<C64>)> = candidates
        .into_iter()
        .map(|(l, z)| (l, &proj.v * z))
        .collect();
    let result = filter_converged(lifted, &nep, 1e-8, ExtractionMethod::ProjectedIar)?;

    // Newton oracle on λ - e^{-λ}
    let mut newton = 0.5f64;
    for _ in 0..60 {
        newton -= (newton - (-newton).exp()) / (1.0 + (-newton).exp());
    }
    println!("Newton reference: {newton:.12}");
    let best = result
        .pairs
        .iter()
        .min_by(|a, b| {
            (a.value.re - newton)
                .abs()
                .partial_cmp(&(b.value.re - newton).abs())
                .unwrap()
        })
        .expect("pipeline found the root");
    println!(
        "pipeline:         {:.12} {:+.3e}i   err = {:.3e}",
        best.value.re, best.value.im, best.residual
    );
    println!("difference:       {:.3e}", (best.value.re - newton).abs());
    Ok(())
}
