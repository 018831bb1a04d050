//! Matrix Market exchange format (coordinate, real/complex/integer,
//! general/symmetric) and assembly of NEPs from matrix files with declared
//! scalar functions and optional low-rank tags.

use crate::error::{Error, Result};
use crate::nep::{SpmfNep, SpmfTerm, TermMatrix};
use crate::series::{ScalarFunction, C64};
use crate::sparse::CsrMatrix;
use nalgebra::DMatrix;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MatrixMarket {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

/// Read a coordinate-format Matrix Market file. Symmetric storage is expanded
/// to the full pattern.
pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (ln, banner) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))
        .and_then(|(i, l)| Ok((i + 1, l?)))?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, ln, "missing %%MatrixMarket banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(path, ln, "only coordinate format is supported"));
    }
    let field = tokens[3].as_str();
    if !matches!(field, "real" | "complex" | "integer") {
        return Err(parse_err(path, ln, format!("unsupported field `{field}`")));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                path,
                ln,
                format!("unsupported symmetry `{other}`"),
            ));
        }
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(parse_err(path, ln, "size line must have 3 entries"));
                }
                let nrows = parts[0]
                    .parse()
                    .map_err(|_| parse_err(path, ln, "bad row count"))?;
                let ncols = parts[1]
                    .parse()
                    .map_err(|_| parse_err(path, ln, "bad column count"))?;
                let nnz: usize = parts[2]
                    .parse()
                    .map_err(|_| parse_err(path, ln, "bad nnz count"))?;
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
                size = Some((nrows, ncols, nnz));
            }
            Some(_) => {
                let want = if field == "complex" { 4 } else { 3 };
                if parts.len() != want {
                    return Err(parse_err(
                        path,
                        ln,
                        format!("entry line must have {want} fields"),
                    ));
                }
                let i1: usize = parts[0]
                    .parse()
                    .map_err(|_| parse_err(path, ln, "bad row index"))?;
                let j1: usize = parts[1]
                    .parse()
                    .map_err(|_| parse_err(path, ln, "bad column index"))?;
                let re: f64 = parts[2]
                    .parse()
                    .map_err(|_| parse_err(path, ln, "bad value"))?;
                let im: f64 = if field == "complex" {
                    parts[3]
                        .parse()
                        .map_err(|_| parse_err(path, ln, "bad imaginary value"))?
                } else {
                    0.0
                };
                let (nrows, ncols, _) = size.unwrap();
                if i1 == 0 || j1 == 0 || i1 > nrows || j1 > ncols {
                    return Err(parse_err(path, ln, "index out of range"));
                }
                let v = C64::new(re, im);
                triplets.push((i1 - 1, j1 - 1, v));
                if symmetric && i1 != j1 {
                    triplets.push((j1 - 1, i1 - 1, v));
                }
            }
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| parse_err(path, 0, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| i <= j).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(parse_err(
            path,
            0,
            format!("expected {nnz} entries, found {stored}"),
        ));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, triplets))
}

/// Write a matrix in coordinate format. With `symmetric` the lower triangle
/// is stored; values are printed with Rust's shortest-roundtrip formatting so
/// a reload reproduces them bitwise.
pub fn write_matrix_market(path: &Path, matrix: &CsrMatrix, symmetric: bool) -> Result<()> {
    let complex = matrix.triplets().any(|(_, _, v)| v.im != 0.0);
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let field = if complex { "complex" } else { "real" };
    let sym = if symmetric { "symmetric" } else { "general" };
    writeln!(out, "%%MatrixMarket matrix coordinate {field} {sym}")?;
    let entries: Vec<(usize, usize, C64)> = matrix
        .triplets()
        .filter(|(i, j, _)| !symmetric || j <= i)
        .collect();
    writeln!(out, "{} {} {}", matrix.nrows(), matrix.ncols(), entries.len())?;
    for (i, j, v) in entries {
        if complex {
            writeln!(out, "{} {} {} {}", i + 1, j + 1, v.re, v.im)?;
        } else {
            writeln!(out, "{} {} {}", i + 1, j + 1, v.re)?;
        }
    }
    Ok(())
}

pub const LOW_RANK_DETECT_TOL: f64 = 1e-12;

/// Try to factor a real symmetric sparse matrix as A ≈ U Uᵀ with U of small
/// rank, via a dense eigendecomposition of the compressed nonzero block
/// (negative eigenvalues contribute complex columns √λ·v). Returns None, with
/// a warning, when the matrix is not real or the tolerance cannot be met.
pub fn low_rank_factor(a: &CsrMatrix) -> Option<DMatrix<C64>> {
    let n = a.nrows();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Some(DMatrix::zeros(n, 0));
    }
    let max_im = a.triplets().map(|(_, _, v)| v.im.abs()).fold(0.0, f64::max);
    if max_im > 1e-14 * scale {
        log::warn!("low-rank detection skipped: matrix has complex entries");
        return None;
    }
    let rows = a.nonzero_rows();
    let m = rows.len();
    if m == 0 {
        return Some(DMatrix::zeros(n, 0));
    }
    if m > 2000 {
        log::warn!("low-rank detection skipped: dense block of size {m} is too large");
        return None;
    }
    let mut index_of = vec![usize::MAX; n];
    for (pos, &r) in rows.iter().enumerate() {
        index_of[r] = pos;
    }
    let mut block = DMatrix::<f64>::zeros(m, m);
    for (i, j, v) in a.triplets() {
        if v == C64::default() {
            continue;
        }
        let (bi, bj) = (index_of[i], index_of[j]);
        if bj == usize::MAX {
            // a nonzero column outside the nonzero-row set cannot happen for
            // A = U Uᵀ; bail out
            log::warn!("low-rank detection skipped: pattern is not symmetric");
            return None;
        }
        block[(bi, bj)] = v.re;
    }
    // a cyclic Jacobi sweep gives reconstruction accuracy near machine
    // epsilon, which the tag tolerance needs; the tridiagonalization-based
    // solver can miss 1e-12 for indefinite spectra
    let (eigenvalues, eigenvectors) = if m <= 600 {
        jacobi_symmetric_eigen(&block)
    } else {
        let e = block.symmetric_eigen();
        (
            e.eigenvalues.iter().copied().collect(),
            e.eigenvectors,
        )
    };
    // keep eigenvalues until the discarded tail meets the Frobenius tolerance
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| {
        eigenvalues[y]
            .abs()
            .partial_cmp(&eigenvalues[x].abs())
            .unwrap()
    });
    let total: f64 = eigenvalues.iter().map(|l| l * l).sum();
    let budget = (LOW_RANK_DETECT_TOL * total.sqrt()).powi(2);
    // tail sums built from the small end: subtracting from the total would
    // leave cancellation noise far above the budget
    let mut suffix = vec![0.0f64; m + 1];
    for idx in (0..m).rev() {
        suffix[idx] = suffix[idx + 1] + eigenvalues[order[idx]].powi(2);
    }
    let mut rank = 0;
    while rank < m && suffix[rank] > budget {
        rank += 1;
    }
    let mut u = DMatrix::<C64>::zeros(n, rank);
    for (col, &ei) in order[..rank].iter().enumerate() {
        let lam = eigenvalues[ei];
        let sqrt_lam = C64::new(lam, 0.0).sqrt();
        for (pos, &row) in rows.iter().enumerate() {
            u[(row, col)] = c(eigenvectors[(pos, ei)]) * sqrt_lam;
        }
    }
    // verify the tag invariant before attaching
    let residual = (a.to_dense() - &u * u.transpose()).norm();
    if residual > LOW_RANK_DETECT_TOL * scale {
        log::warn!(
            "low-rank detection failed the tolerance (residual {:.3e}); term left untagged",
            residual / scale
        );
        return None;
    }
    Some(u)
}

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
fn jacobi_symmetric_eigen(b: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = b.nrows();
    let mut a = b.clone();
    let mut v = DMatrix::<f64>::identity(m, m);
    let norm = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-16 * norm {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                for i in 0..m {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = cth * aip - sth * aiq;
                    a[(i, q)] = sth * aip + cth * aiq;
                }
                for j in 0..m {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = cth * apj - sth * aqj;
                    a[(q, j)] = sth * apj + cth * aqj;
                }
                for i in 0..m {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = cth * vip - sth * viq;
                    v[(i, q)] = sth * vip + cth * viq;
                }
            }
        }
    }
    ((0..m).map(|i| a[(i, i)]).collect(), v)
}

/// One term of a Matrix Market problem: the file plus its scalar function.
#[derive(Debug, Clone)]
pub struct MmTerm {
    pub path: std::path::PathBuf,
    pub function: ScalarFunction,
    /// Attempt low-rank detection and attach the factor when it succeeds.
    pub low_rank: bool,
}

/// Load an SPMF problem from Matrix Market files.
pub fn load_matrix_market(terms: &[MmTerm]) -> Result<SpmfNep> {
    let mut spmf_terms = Vec::with_capacity(terms.len());
    for term in terms {
        let matrix = read_matrix_market(&term.path)?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}: {}x{} is not square",
                term.path.display(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut t = SpmfTerm::new(term.function.clone(), TermMatrix::Sparse(matrix));
        if term.low_rank {
            if let TermMatrix::Sparse(m) = &t.matrix {
                if let Some(u) = low_rank_factor(m) {
                    t.low_rank = Some(u);
                }
            }
        }
        spmf_terms.push(t);
    }
    SpmfNep::new(spmf_terms)
}
