//! The full solve pipeline behind the CLI and the examples: problem assembly,
//! shift-and-scale, the Lanczos loop with extraction checkpoints, and
//! plot-ready results/history output. Also the benchmark grid, the
//! structured-vs-dense comparison, and coefficient table dumps.

use crate::config::{ProblemKind, RunConfig};
use crate::error::{Error, Result};
use crate::extraction::{
    self, basis, filter_converged, iar, project, ritz_pairs, EigenResult, ExtractionMethod,
    HistoryPoint, IarOptions,
};
use crate::ilan::{self, IlanOptions, KrylovState, StopReason};
use crate::kernels;
use crate::linearization::{build_truncated, indefinite_lanczos_dense, CoeffTables, Disk};
use crate::mm;
use crate::nep::SpmfNep;
use crate::problems;
use crate::series::C64;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Build the SPMF problem described by the config (before shift-and-scale).
pub fn build_problem(kind: &ProblemKind) -> Result<SpmfNep> {
    match kind {
        ProblemKind::DelayPde { grid } => Ok(problems::gen_delay_pde(*grid)),
        ProblemKind::RandomDep { n, seed } => Ok(problems::gen_random_dep(*n, *seed)),
        ProblemKind::SymmetrizedRandom { n } => Ok(problems::gen_symmetrized_random(*n)),
        ProblemKind::MatrixMarket { terms } => {
            let mm_terms: Vec<mm::MmTerm> = terms
                .iter()
                .map(|t| mm::MmTerm {
                    path: t.path.clone(),
                    function: t.function.to_function(),
                    low_rank: t.low_rank,
                })
                .collect();
            mm::load_matrix_market(&mm_terms)
        }
    }
}

/// One history checkpoint as serialized.
#[derive(Debug, Clone, Serialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub n_converged: usize,
    pub strategy: String,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_s: f64,
    pub iteration_total_s: f64,
    pub extraction_total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub n: usize,
    pub strategy: String,
    pub maxiter: usize,
    pub iterations_run: usize,
    pub stop: String,
    pub tol: f64,
    pub seed: u64,
    pub shift: [f64; 2],
    pub scale: [f64; 2],
    /// Discretization convention for generated delay-PDE problems.
    pub grid_note: Option<String>,
}

/// Serializable solve report (eigenvectors stay in [`SolveOutcome`]).
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Converged eigenvalues as [re, im], in the original coordinates.
    pub eigenvalues: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub history: Vec<HistoryRecord>,
    pub timings: Timings,
    pub metadata: Metadata,
}

pub struct SolveOutcome {
    pub report: SolveReport,
    pub result: EigenResult,
    /// The problem in original coordinates (residuals were verified on it).
    pub nep: SpmfNep,
}

fn stop_name(stop: &StopReason) -> String {
    match stop {
        StopReason::MaxIter => "maxiter".into(),
        StopReason::HappyBreakdown { iteration } => format!("happy-breakdown at {iteration}"),
        StopReason::OmegaBreakdown { iteration } => format!("omega-breakdown at {iteration}"),
    }
}

/// Extraction pass over the current first-block history: orthonormalize,
/// project, solve the small problem with inner infinite Arnoldi, lift, map
/// back to original coordinates, and verify residuals there.
#[allow(clippy::too_many_arguments)]
fn extract_at_checkpoint(
    original: &SpmfNep,
    state: &KrylovState,
    shift: C64,
    scale: C64,
    disk_hat: Option<Disk>,
    inner_iterations: usize,
    tol: f64,
    seed: u64,
) -> Result<EigenResult> {
    let fb = state.first_blocks_matrix();
    let v = basis(&fb)?;
    let proj = project_for_state(original, shift, scale, &v)?;
    // the projected problem is itself nonlinear, so the inner iteration count
    // is not bounded by the subspace dimension; the configured count (150 by
    // default) is used as given
    let candidates = iar(
        &proj.nep,
        &IarOptions {
            maxiter: inner_iterations,
            disk: disk_hat,
            seed,
        },
    )?;
    let lifted: Vec<(C64, DVector<C64>)> = candidates
        .into_iter()
        .map(|(lam_hat, z)| (shift + scale * lam_hat, &proj.v * z))
        .collect();
    filter_converged(lifted, original, tol, ExtractionMethod::ProjectedIar)
}

/// Project the shift-scaled problem onto V.
fn project_for_state(
    original: &SpmfNep,
    shift: C64,
    scale: C64,
    v: &DMatrix<C64>,
) -> Result<extraction::ProjectedNep> {
    if shift == C64::default() && scale == c(1.0) {
        project(original, v)
    } else {
        let hat = original.shift_scale(shift, scale);
        project(&hat, v)
    }
}

/// Run the full pipeline for a configuration. Writes result/history files
/// when output paths are set.
pub fn solve(config: &RunConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let t_total = Instant::now();
    let original = build_problem(&config.problem.kind)?;
    let shift = config.problem.shift_c();
    let scale = config.problem.scale_c();
    let identity = config.problem.is_identity_transform();
    let solved: SpmfNep = if identity {
        build_problem(&config.problem.kind)?
    } else {
        original.shift_scale(shift, scale)
    };
    // the target disk maps to (center - λ0)/α with radius/|α|
    let disk_hat = config.problem.target_disk.map(|d| {
        let disk = d.to_disk();
        Disk {
            center: (disk.center - shift) / scale,
            radius: disk.radius / scale.norm(),
        }
    });
    let m0 = solved.m0_factorize()?;
    let strategy = config.strategy.to_strategy(config.lowrank_rank);
    let mut history: Vec<HistoryRecord> = Vec::new();
    let mut last: Option<EigenResult> = None;
    let mut extraction_total = 0.0f64;
    let t_run = Instant::now();
    let mut checkpoint = |k: usize, state: &KrylovState| -> Result<()> {
        let t_ex = Instant::now();
        let res = extract_at_checkpoint(
            &original,
            state,
            shift,
            scale,
            disk_hat,
            config.inner_iterations,
            config.tol,
            config.seed,
        )?;
        extraction_total += t_ex.elapsed().as_secs_f64();
        history.push(HistoryRecord {
            iteration: k,
            n_converged: res.pairs.len(),
            strategy: strategy.name().into(),
            elapsed_s: t_run.elapsed().as_secs_f64(),
        });
        last = Some(res);
        Ok(())
    };
    let out = ilan::run(
        &solved,
        &m0,
        &IlanOptions {
            maxiter: config.maxiter,
            strategy,
            start: None,
            seed: config.seed,
            checkpoint_every: config.extraction_cadence,
        },
        None,
        Some(&mut checkpoint),
    )?;
    let mut result = last.ok_or_else(|| Error::Config("no extraction happened".into()))?;
    result.history = history
        .iter()
        .map(|h| HistoryPoint {
            iteration: h.iteration,
            converged: h.n_converged,
            elapsed: h.elapsed_s,
        })
        .collect();
    let iteration_total: f64 = out.iteration_seconds.iter().sum();
    let grid_note = match config.problem.kind {
        ProblemKind::DelayPde { grid } => Some(format!(
            "uniform interior grid, {grid} points per direction, spacing pi/(grid+1), \
             homogeneous Dirichlet 5-point Laplacian"
        )),
        _ => None,
    };
    let report = SolveReport {
        eigenvalues: result.pairs.iter().map(|p| [p.value.re, p.value.im]).collect(),
        residuals: result.pairs.iter().map(|p| p.residual).collect(),
        history,
        timings: Timings {
            total_s: t_total.elapsed().as_secs_f64(),
            iteration_total_s: iteration_total,
            extraction_total_s: extraction_total,
        },
        metadata: Metadata {
            n: original.dim(),
            strategy: strategy.name().into(),
            maxiter: config.maxiter,
            iterations_run: out.state.iterations(),
            stop: stop_name(&out.stop),
            tol: config.tol,
            seed: config.seed,
            shift: config.problem.shift,
            scale: config.problem.scale,
            grid_note,
        },
    };
    if let Some(paths) = &config.output {
        if let Some(p) = &paths.results {
            write_results(p, &report)?;
        }
        if let Some(p) = &paths.history {
            write_history_csv(p, &report.history)?;
        }
    }
    Ok(SolveOutcome {
        report,
        result,
        nep: original,
    })
}

pub fn write_results(path: &Path, report: &SolveReport) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_history_csv(path: &Path, history: &[HistoryRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "iteration,n_converged,strategy,elapsed_s")?;
    for h in history {
        writeln!(
            w,
            "{},{},{},{}",
            h.iteration, h.n_converged, h.strategy, h.elapsed_s
        )?;
    }
    Ok(())
}

/// Ritz-pair extraction from a finished run (the comparison path).
pub fn ritz_extraction(
    nep: &SpmfNep,
    state: &KrylovState,
    tol: f64,
    disk: Option<Disk>,
) -> Result<EigenResult> {
    let k = state.iterations();
    let fb = state.first_blocks_matrix();
    let pairs = ritz_pairs(&state.t_square(k), &state.omega()[..k], &fb)?;
    let pairs = match disk {
        Some(d) => pairs.into_iter().filter(|(l, _)| d.contains(*l)).collect(),
        None => pairs,
    };
    filter_converged(pairs, nep, tol, ExtractionMethod::Ritz)
}

/// One row of the benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub iterations: usize,
    pub strategy: String,
    pub seconds: f64,
}

/// Time the Lanczos iterations (no extraction) over a grid of problem sizes
/// and iteration counts, in the spirit of a fixed-iteration timing table.
/// `threads > 1` runs independent rows concurrently.
pub fn bench(
    kinds: &[ProblemKind],
    iters: &[usize],
    strategy: crate::kernels::ZStrategy,
    seed: u64,
    threads: usize,
) -> Result<Vec<BenchRow>> {
    let mut jobs: Vec<(ProblemKind, usize)> = Vec::new();
    for kind in kinds {
        for &it in iters {
            jobs.push((kind.clone(), it));
        }
    }
    let run_one = |kind: &ProblemKind, iterations: usize| -> Result<BenchRow> {
        let nep = build_problem(kind)?;
        let m0 = nep.m0_factorize()?;
        let t0 = Instant::now();
        let out = ilan::run(
            &nep,
            &m0,
            &IlanOptions {
                maxiter: iterations,
                strategy,
                start: None,
                seed,
                checkpoint_every: 0,
            },
            None,
            None,
        )?;
        let seconds = t0.elapsed().as_secs_f64();
        let _ = out;
        Ok(BenchRow {
            n: nep.dim(),
            iterations,
            strategy: strategy.name().into(),
            seconds,
        })
    };
    if threads <= 1 {
        jobs.iter().map(|(k, it)| run_one(k, *it)).collect()
    } else {
        let results: Vec<Result<BenchRow>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in jobs.chunks(jobs.len().div_ceil(threads)) {
                handles.push(scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(k, it)| run_one(k, *it))
                        .collect::<Vec<_>>()
                }));
            }
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("bench worker panicked"))
                .collect()
        });
        results.into_iter().collect()
    }
}

/// Deviations between the structured iteration and dense indefinite Lanczos
/// on the explicit truncation, columnwise relative.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub n: usize,
    pub iterations: usize,
    pub max_t_deviation: f64,
    pub max_omega_deviation: f64,
    pub max_block_deviation: f64,
}

/// Run both algorithms on a random symmetric NEP and report the worst
/// columnwise relative deviation of T, Ω, and the stored blocks.
pub fn compare_oracle(n: usize, iterations: usize, seed: u64) -> Result<CompareReport> {
    let nep = problems::gen_random_symmetric(n, seed);
    let depth = iterations + 2;
    let tl = build_truncated(&nep, depth)?;
    let q0 = ilan::default_start(n, seed.wrapping_add(1));
    let mut q_full = DVector::<C64>::zeros(n * depth);
    q_full.rows_mut(0, n).copy_from(&q0);
    let dense = indefinite_lanczos_dense(&tl.sa, &tl.sb, &q_full, iterations)?;
    let m0 = nep.m0_factorize()?;
    let out = ilan::run(
        &nep,
        &m0,
        &IlanOptions {
            maxiter: iterations,
            strategy: kernels::ZStrategy::Naive,
            start: Some(q0),
            seed,
            checkpoint_every: 0,
        },
        None,
        None,
    )?;
    let st = &out.state;
    let cols = st.iterations().min(dense.t.ncols());
    let mut max_t = 0.0f64;
    let mut max_om = 0.0f64;
    let t_struct = st.t_matrix(cols);
    for j in 0..cols {
        for i in 0..=cols {
            let dev = (t_struct[(i.min(cols), j)] - dense.t[(i.min(cols), j)]).norm();
            let scale = dense.t.column(j).norm().max(1e-300);
            max_t = max_t.max(dev / scale);
        }
        let dev = (st.omega()[j] - dense.omega[j]).norm() / dense.omega[j].norm().max(1e-300);
        max_om = max_om.max(dev);
    }
    let fb = st.first_blocks_matrix();
    let mut max_blk = 0.0f64;
    for j in 0..fb.ncols().min(dense.q.ncols()) {
        let dev = (fb.column(j) - dense.q.column(j).rows(0, n)).norm();
        max_blk = max_blk.max(dev);
    }
    Ok(CompareReport {
        n,
        iterations: cols,
        max_t_deviation: max_t,
        max_omega_deviation: max_om,
        max_block_deviation: max_blk,
    })
}

/// Dump the C and G coefficient tables and the singular values of G as CSV
/// files into `dir`.
pub fn gen_tables(k: usize, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tables = CoeffTables::new(k);
    let write_table = |name: &str, m: &DMatrix<f64>| -> Result<()> {
        let file = std::fs::File::create(dir.join(name))?;
        let mut w = std::io::BufWriter::new(file);
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    };
    write_table("c_table.csv", &tables.c_matrix())?;
    write_table("g_table.csv", tables.g_matrix())?;
    let sigma = kernels::g_singular_values(k);
    let file = std::fs::File::create(dir.join("g_singular_values.csv"))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "j,sigma")?;
    for (j, s) in sigma.iter().enumerate() {
        writeln!(w, "{},{}", j + 1, s)?;
    }
    Ok(())
}
