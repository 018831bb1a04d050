//! Thin command-line front end over the library pipeline.

use clap::{Parser, Subcommand};
use inflan::config::{ProblemKind, RunConfig, StrategySpec};
use inflan::{driver, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "inflan",
    about = "Infinite Lanczos solver for symmetric nonlinear eigenvalue problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for a JSON configuration and write results.
    Solve {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; the solve itself is sequential, pass 1 for
        /// bit-reproducible runs (the default).
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Time the Lanczos iterations over size and iteration grids.
    Bench {
        /// Problem family: delay-pde or random-dep.
        #[arg(long, default_value = "delay-pde")]
        problem: String,
        /// Sizes: grid points per side for delay-pde, dimension for random-dep.
        #[arg(long, value_delimiter = ',', default_value = "10,20")]
        sizes: Vec<usize>,
        /// Iteration counts to time.
        #[arg(long, value_delimiter = ',', default_value = "50,100")]
        iters: Vec<usize>,
        #[arg(long, default_value = "dep")]
        strategy: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Independent rows run concurrently when threads > 1.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Optional CSV output path (stdout table otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the structured iteration against the dense truncated oracle.
    CompareOracle {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Dump the C and G coefficient tables and σ(G) as CSV files.
    GenTables {
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value = "tables")]
        out_dir: PathBuf,
    },
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::BranchPointAtOrigin => "branch-point-at-origin",
        Error::OrderOverflow { .. } => "order-overflow",
        Error::DerivativeOrderExceeded { .. } => "derivative-order-exceeded",
        Error::SingularM0 { .. } => "singular-m0",
        Error::SingularProjectedM0 { .. } => "projected-m0-singular",
        Error::BreakdownOmega { .. } => "breakdown-omega",
        Error::NonFiniteIterate { .. } => "non-finite-iterate",
        Error::StrategyMismatch { .. } => "strategy-structure-mismatch",
        Error::SizeCapExceeded { .. } => "size-cap-exceeded",
        Error::DimensionMismatch(_) => "dimension-mismatch",
        Error::NotSymmetric { .. } => "not-symmetric",
        Error::LowRankTagInvalid { .. } => "low-rank-tag-invalid",
        Error::SingularLeadingCoefficient => "singular-leading-coefficient",
        Error::NotPolynomial { .. } => "not-polynomial",
        Error::ZeroStartingVector => "zero-starting-vector",
        Error::ZeroSubspace => "zero-subspace",
        Error::SingularOmega { .. } => "singular-omega",
        Error::DegeneratePoint { .. } => "degenerate-point",
        Error::EigConvergence => "eig-convergence",
        Error::MatrixMarket { .. } => "matrix-market",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn run(cli: Cli) -> inflan::Result<()> {
    match cli.command {
        Command::Solve {
            config,
            seed,
            threads,
        } => {
            if threads != 1 {
                log::warn!("solve is sequential; --threads {threads} has no effect");
            }
            let mut cfg = RunConfig::from_json_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = driver::solve(&cfg)?;
            println!(
                "converged {} eigenpairs in {} iterations ({}); total {:.3}s",
                out.result.pairs.len(),
                out.report.metadata.iterations_run,
                out.report.metadata.stop,
                out.report.timings.total_s
            );
            for p in &out.result.pairs {
                println!(
                    "  lambda = {:+.12e} {:+.12e}i   err = {:.3e}",
                    p.value.re, p.value.im, p.residual
                );
            }
            if cfg.output.is_none() {
                println!("(no output paths configured; results printed only)");
            }
            Ok(())
        }
        Command::Bench {
            problem,
            sizes,
            iters,
            strategy,
            seed,
            threads,
            out,
        } => {
            let kinds: Vec<ProblemKind> = match problem.as_str() {
                "delay-pde" => sizes
                    .iter()
                    .map(|&g| ProblemKind::DelayPde { grid: g })
                    .collect(),
                "random-dep" => sizes
                    .iter()
                    .map(|&n| ProblemKind::RandomDep { n, seed })
                    .collect(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown bench problem `{other}` (expected delay-pde or random-dep)"
                    )));
                }
            };
            let strategy = StrategySpec::parse(&strategy)?.to_strategy(None);
            let rows = driver::bench(&kinds, &iters, strategy, seed, threads)?;
            let mut table = String::from("n,iterations,strategy,seconds\n");
            for r in &rows {
                table.push_str(&format!(
                    "{},{},{},{}\n",
                    r.n, r.iterations, r.strategy, r.seconds
                ));
            }
            match out {
                Some(path) => std::fs::write(path, table)?,
                None => print!("{table}"),
            }
            Ok(())
        }
        Command::CompareOracle { n, k, seed } => {
            let rep = driver::compare_oracle(n, k, seed)?;
            println!(
                "n = {}, iterations = {}\nmax T deviation      = {:.3e}\nmax omega deviation  = {:.3e}\nmax block deviation  = {:.3e}",
                rep.n,
                rep.iterations,
                rep.max_t_deviation,
                rep.max_omega_deviation,
                rep.max_block_deviation
            );
            Ok(())
        }
        Command::GenTables { k, out_dir } => {
            driver::gen_tables(k, &out_dir)?;
            println!(
                "wrote c_table.csv, g_table.csv, g_singular_values.csv to {}",
                out_dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": {
                    "kind": error_kind(&e),
                    "message": e.to_string(),
                }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
