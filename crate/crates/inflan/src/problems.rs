//! Benchmark problem generators: the delay PDE, random delay problems,
//! the deterministic symmetrized construction, and random mixed-function
//! symmetric NEPs for oracle tests.

use crate::nep::{symmetrize_double, SpmfNep, SpmfTerm, TermMatrix};
use crate::series::{ScalarFunction, C64};
use crate::sparse::CsrMatrix;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense random symmetric matrix with N(0, sigma²) entries, symmetrized draw.
fn random_symmetric_dense(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let r = DMatrix::<f64>::from_fn(n, n, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        x * sigma
    });
    ((&r + r.transpose()) * 0.5).map(c)
}

/// Delay PDE benchmark: u_t = Δu + a(ξ)u + b(ξ)u(t-2) on [0,π]² with
/// homogeneous Dirichlet boundary, a(ξ) = 8 sin(ξ₁) sin(ξ₂) and
/// b(ξ) = 100 |sin(ξ₁+ξ₂)|, discretized on a uniform grid with `grid` interior
/// points per direction (spacing h = π/(grid+1)) by the 5-point stencil.
/// The stability problem is the delay NEP
/// M(λ) = -λI + (Δ_h + diag a) + e^{-2λ} diag b of size n = grid².
pub fn gen_delay_pde(grid: usize) -> SpmfNep {
    assert!(grid >= 2);
    let n = grid * grid;
    let h = std::f64::consts::PI / (grid + 1) as f64;
    let idx = |i: usize, j: usize| i * grid + j;
    let inv_h2 = 1.0 / (h * h);
    let mut lap = Vec::with_capacity(5 * n);
    let mut a_diag = Vec::with_capacity(n);
    let mut b_diag = Vec::with_capacity(n);
    for i in 0..grid {
        for j in 0..grid {
            let x1 = (i + 1) as f64 * h;
            let x2 = (j + 1) as f64 * h;
            let row = idx(i, j);
            lap.push((row, row, c(-4.0 * inv_h2)));
            if i > 0 {
                lap.push((row, idx(i - 1, j), c(inv_h2)));
            }
            if i + 1 < grid {
                lap.push((row, idx(i + 1, j), c(inv_h2)));
            }
            if j > 0 {
                lap.push((row, idx(i, j - 1), c(inv_h2)));
            }
            if j + 1 < grid {
                lap.push((row, idx(i, j + 1), c(inv_h2)));
            }
            a_diag.push(c(8.0 * x1.sin() * x2.sin()));
            b_diag.push(c(100.0 * (x1 + x2).sin().abs()));
        }
    }
    let a2 = CsrMatrix::from_triplets(n, n, lap).add(&CsrMatrix::from_diagonal(&a_diag));
    let a3 = CsrMatrix::from_diagonal(&b_diag);
    SpmfNep::new(vec![
        SpmfTerm::new(
            ScalarFunction::NegatedIdentity,
            TermMatrix::Sparse(CsrMatrix::identity(n)),
        ),
        SpmfTerm::new(ScalarFunction::Constant, TermMatrix::Sparse(a2)),
        SpmfTerm::new(
            ScalarFunction::Exponential { rate: c(-2.0) },
            TermMatrix::Sparse(a3),
        ),
    ])
    .expect("delay PDE terms are symmetric by construction")
}

/// Random delay problem M(λ) = -λI + A₀ + A₁ e^{-λ} with dense symmetric
/// random A₀, A₁ (ChaCha8-seeded standard normal, symmetrized draws), τ = 1.
pub fn gen_random_dep(n: usize, seed: u64) -> SpmfNep {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = 1.0 / (n as f64).sqrt();
    let a0 = random_symmetric_dense(n, sigma, &mut rng);
    let a1 = random_symmetric_dense(n, sigma, &mut rng);
    SpmfNep::new(vec![
        SpmfTerm::new(
            ScalarFunction::NegatedIdentity,
            TermMatrix::Dense(DMatrix::identity(n, n)),
        ),
        SpmfTerm::new(ScalarFunction::Constant, TermMatrix::Dense(a0)),
        SpmfTerm::new(
            ScalarFunction::Exponential { rate: c(-1.0) },
            TermMatrix::Dense(a1),
        ),
    ])
    .expect("random DEP terms are symmetric by construction")
}

/// The nonsymmetric construction behind the symmetrization benchmark:
/// M(λ) = A₁ - λA₂ + λ sin(λ) A₃ + e^{-λ} A₄ with A₁ tridiagonal (500 on the
/// two off-diagonals), A₂ = I, A₃ = A₁/500 and A₄ carrying the imaginary unit
/// on the subdiagonal.
pub fn gen_symmetrized_base(n: usize) -> SpmfNep {
    assert!(n >= 2);
    let mut a1 = Vec::new();
    let mut a3 = Vec::new();
    let mut a4 = Vec::new();
    for i in 0..n - 1 {
        a1.push((i, i + 1, c(500.0)));
        a1.push((i + 1, i, c(500.0)));
        a3.push((i, i + 1, c(1.0)));
        a3.push((i + 1, i, c(1.0)));
        a4.push((i + 1, i, C64::new(0.0, 1.0)));
    }
    SpmfNep::new_general(vec![
        SpmfTerm::new(
            ScalarFunction::Constant,
            TermMatrix::Sparse(CsrMatrix::from_triplets(n, n, a1)),
        ),
        SpmfTerm::new(
            ScalarFunction::NegatedIdentity,
            TermMatrix::Sparse(CsrMatrix::identity(n)),
        ),
        SpmfTerm::new(
            ScalarFunction::LambdaSine,
            TermMatrix::Sparse(CsrMatrix::from_triplets(n, n, a3)),
        ),
        SpmfTerm::new(
            ScalarFunction::Exponential { rate: c(-1.0) },
            TermMatrix::Sparse(CsrMatrix::from_triplets(n, n, a4)),
        ),
    ])
    .expect("well-formed terms")
}

/// The symmetrization benchmark: [`gen_symmetrized_base`] doubled to a
/// symmetric problem of size 2n.
pub fn gen_symmetrized_random(n: usize) -> SpmfNep {
    symmetrize_double(&gen_symmetrized_base(n))
}

/// Random symmetric NEP with mixed catalog functions, scaled so that a few
/// eigenvalues sit within a couple of units of the origin and M(0) is well
/// conditioned. Used by oracle and equivalence tests.
pub fn gen_random_symmetric(n: usize, seed: u64) -> SpmfNep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let sigma = 0.5 / (n as f64).sqrt().max(1.0);
    let a = random_symmetric_dense(n, sigma, &mut rng) * c(0.4) + DMatrix::identity(n, n) * c(0.8);
    let b = random_symmetric_dense(n, sigma, &mut rng) * c(0.2) + DMatrix::identity(n, n);
    let d = random_symmetric_dense(n, sigma, &mut rng) * c(0.3);
    let e = random_symmetric_dense(n, sigma, &mut rng) * c(0.3);
    SpmfNep::new(vec![
        SpmfTerm::new(ScalarFunction::Constant, TermMatrix::Dense(a)),
        SpmfTerm::new(ScalarFunction::NegatedIdentity, TermMatrix::Dense(b)),
        SpmfTerm::new(
            ScalarFunction::Exponential { rate: c(-0.8) },
            TermMatrix::Dense(d),
        ),
        SpmfTerm::new(ScalarFunction::Sine, TermMatrix::Dense(e)),
    ])
    .expect("generated terms are symmetric")
}

/// Random symmetric polynomial NEP of the given degree with a well-conditioned
/// leading coefficient.
pub fn gen_random_polynomial(n: usize, degree: usize, seed: u64) -> SpmfNep {
    assert!(degree >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    let sigma = 0.5 / (n as f64).sqrt().max(1.0);
    let mut terms = Vec::new();
    for deg in 0..degree {
        terms.push(SpmfTerm::new(
            ScalarFunction::Monomial { degree: deg },
            TermMatrix::Dense(random_symmetric_dense(n, sigma, &mut rng)),
        ));
    }
    let lead =
        random_symmetric_dense(n, sigma, &mut rng) * c(0.3) + DMatrix::identity(n, n);
    terms.push(SpmfTerm::new(
        ScalarFunction::Monomial { degree },
        TermMatrix::Dense(lead),
    ));
    SpmfNep::new(terms).expect("generated terms are symmetric")
}
