//! Dense complex eigenvalue helpers built on the Schur decomposition:
//! eigenvalues from the triangular factor, eigenvectors by back-substitution,
//! and generalized pencil eigenvalues through inversion of one side.

use crate::error::{Error, Result};
use crate::series::C64;
use nalgebra::DMatrix;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Deterministic random unitary (Q factor of a seeded complex Gaussian-ish
/// matrix), used to break structural symmetries that stall the QR iteration.
fn random_unitary(n: usize, seed: u64) -> DMatrix<C64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::<C64>::from_fn(n, n, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let qr = m.qr();
    qr.q()
}

/// Schur decomposition with any residual 2x2 diagonal blocks split by a
/// unitary similarity, so `t` is upper triangular. Matrices with symmetric
/// spectra (e.g. ±λ pairs) can stall the shifted QR iteration; those are
/// retried under a random unitary similarity, which leaves eigenvalues and
/// the accumulated Q·T·Qᴴ factorization intact.
fn triangular_schur(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let mut attempt = a.clone().try_schur(1e-14, 200 * n.max(20)).map(|s| {
        let (q, t) = s.unpack();
        (q, t)
    });
    if attempt.is_none() {
        for seed in 1..=3u64 {
            let u = random_unitary(n, 0xC0FFEE + seed);
            let rotated = u.adjoint() * a * &u;
            if let Some(s) = rotated.try_schur(1e-14, 400 * n.max(20)) {
                let (q, t) = s.unpack();
                attempt = Some((&u * q, t));
                break;
            }
        }
    }
    let (mut q, mut t) = attempt.ok_or(Error::EigConvergence)?;
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)].norm() <= 1e-15 * scale {
            t[(i + 1, i)] = C64::default();
            i += 1;
            continue;
        }
        // split the 2x2 block [(i,i) (i,i+1); (i+1,i) (i+1,i+1)]
        let a11 = t[(i, i)];
        let a12 = t[(i, i + 1)];
        let a21 = t[(i + 1, i)];
        let a22 = t[(i + 1, i + 1)];
        let tr = a11 + a22;
        let disc = ((a11 - a22) * (a11 - a22) + c(4.0) * a12 * a21).sqrt();
        // pick the root further from a22 for a stable eigenvector below
        let mu1 = (tr + disc) * c(0.5);
        let mu2 = (tr - disc) * c(0.5);
        let mu = if (mu1 - a22).norm() >= (mu2 - a22).norm() {
            mu1
        } else {
            mu2
        };
        // eigenvector of the block for mu: (A - mu I) v = 0. Both candidates
        // satisfy it via the characteristic equation; the second has |a21| > 0
        // as a component so at least one is nonzero.
        let v1 = nalgebra::Vector2::new(a12, mu - a11);
        let v2 = nalgebra::Vector2::new(mu - a22, a21);
        let mut v = if v1.norm() >= v2.norm() { v1 } else { v2 };
        let nv = v.norm();
        v /= c(nv);
        // unitary [v, v_perp]
        let g = nalgebra::Matrix2::new(v[0], -v[1].conj(), v[1], v[0].conj());
        // similarity on rows/cols i, i+1 of t and columns of q
        for jcol in 0..n {
            let x = t[(i, jcol)];
            let y = t[(i + 1, jcol)];
            t[(i, jcol)] = g[(0, 0)].conj() * x + g[(1, 0)].conj() * y;
            t[(i + 1, jcol)] = g[(0, 1)].conj() * x + g[(1, 1)].conj() * y;
        }
        for row in 0..n {
            let x = t[(row, i)];
            let y = t[(row, i + 1)];
            t[(row, i)] = x * g[(0, 0)] + y * g[(1, 0)];
            t[(row, i + 1)] = x * g[(0, 1)] + y * g[(1, 1)];
            let x = q[(row, i)];
            let y = q[(row, i + 1)];
            q[(row, i)] = x * g[(0, 0)] + y * g[(1, 0)];
            q[(row, i + 1)] = x * g[(0, 1)] + y * g[(1, 1)];
        }
        t[(i + 1, i)] = C64::default();
        i += 1;
    }
    Ok((q, t))
}

/// Eigenvalues of a general complex matrix.
pub fn complex_eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>> {
    let (_, t) = triangular_schur(a)?;
    Ok((0..a.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues and (right) eigenvectors of a general complex matrix. The
/// eigenvector for each eigenvalue is obtained by back-substitution on the
/// triangular Schur factor, with near-zero denominators perturbed to keep the
/// solve bounded (repeated eigenvalues then yield the same invariant vector).
pub fn complex_eig(a: &DMatrix<C64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    let (q, t) = triangular_schur(a)?;
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let eps = 1e-15 * scale;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    let mut y = vec![C64::default(); n];
    for (idx, &lam) in values.iter().enumerate() {
        for v in y.iter_mut() {
            *v = C64::default();
        }
        y[idx] = c(1.0);
        for j in (0..idx).rev() {
            let mut acc = C64::default();
            for l in (j + 1)..=idx {
                acc += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lam;
            if denom.norm() < eps {
                denom = C64::new(eps, 0.0);
            }
            y[j] = -acc / denom;
        }
        let mut col = vectors.column_mut(idx);
        for row in 0..n {
            let mut acc = C64::default();
            for l in 0..=idx {
                acc += q[(row, l)] * y[l];
            }
            col[row] = acc;
        }
        let nv = col.norm();
        if nv > 0.0 {
            col /= c(nv);
        }
    }
    Ok((values, vectors))
}

/// Finite eigenvalues of the pencil A x = λ B x, computed from eig(A⁻¹B)
/// (λ = 1/μ), falling back to eig(B⁻¹A) and finally a random complex shift
/// (A - σB)⁻¹B when one side is singular.
pub fn pencil_eigenvalues(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<Vec<C64>> {
    assert_eq!(a.nrows(), b.nrows());
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let drop_tol = 1e-10;
    if let Some(ainvb) = a.clone().lu().solve(b) {
        if ainvb.iter().all(|v| v.is_finite()) {
            let mus = complex_eigenvalues(&ainvb)?;
            let scale = mus.iter().map(|m| m.norm()).fold(0.0, f64::max).max(1.0);
            return Ok(mus
                .into_iter()
                .filter(|mu| mu.norm() > drop_tol * scale)
                .map(|mu| c(1.0) / mu)
                .collect());
        }
    }
    if let Some(binva) = b.clone().lu().solve(a) {
        if binva.iter().all(|v| v.is_finite()) {
            return complex_eigenvalues(&binva);
        }
    }
    // shifted fallback: eig((A - σB)^{-1} B) = 1/(λ - σ)
    for attempt in 0..4u32 {
        let sigma = C64::new(0.31 + 0.77 * attempt as f64, 0.59 + 0.23 * attempt as f64);
        let shifted = a - b * sigma;
        if let Some(op) = shifted.lu().solve(b) {
            if op.iter().all(|v| v.is_finite()) {
                let mus = complex_eigenvalues(&op)?;
                let scale = mus.iter().map(|m| m.norm()).fold(0.0, f64::max).max(1.0);
                return Ok(mus
                    .into_iter()
                    .filter(|mu| mu.norm() > drop_tol * scale)
                    .map(|mu| sigma + c(1.0) / mu)
                    .collect());
            }
        }
    }
    Err(Error::EigConvergence)
}
