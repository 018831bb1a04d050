//! Infinite Lanczos solver for large sparse symmetric nonlinear eigenvalue
//! problems (NEPs) in sum-of-products form M(λ) = Σ_m f_m(λ) A_m.
//!
//! The solver runs an indefinite Lanczos recurrence on a symmetric
//! linearization of the NEP without ever forming it, exploits term structure
//! (delay form, polynomial plus low rank, rank-compressed coefficient tables
//! with FFT Hankel products) in the hot kernel, and extracts eigenpairs
//! robustly by projecting the NEP onto the accumulated first-block subspace
//! and solving the small projected problem with an infinite Arnoldi iteration.
//!
//! Entry points: problem construction via [`nep::SpmfNep`], the generators in
//! [`problems`] and Matrix Market loading in [`mm`]; the iteration in
//! [`ilan::run`]; eigenpair extraction in [`extraction`]; and the full
//! pipeline with config/report types in [`driver::solve`].

pub mod config;
pub mod driver;
pub mod eig;
pub mod error;
pub mod extraction;
pub mod ilan;
pub mod kernels;
pub mod linearization;
pub mod mm;
pub mod nep;
pub mod problems;
pub mod series;
pub mod sparse;

pub use error::{Error, Result};
pub use series::C64;
