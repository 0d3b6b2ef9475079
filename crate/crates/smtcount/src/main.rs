use clap::{Args, Parser, Subcommand, ValueEnum};
use smtcount::backend::{self, Backend, OracleConfig};
use smtcount::corpus::{self, DESK};
use smtcount::process::SolverCommand;
use smtcount::report::{corpus_table, to_json, CountReport};
use smtcount::validate::{hash_law_suite, run_quality_suite, HashLawSpec};
use smtcount_core::bvformula::parse_smt2;
use smtcount_core::counter::{CoreOutcome, CountError, Failure, Params};
use smtcount_core::oracle::OracleError;
use smtcount_core::validate::{exact_count, ValidateError};
use smtcount_core::Formula;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

const EXIT_ALL_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "smtcount",
    version,
    about = "Approximate model counting for QF_BV formulas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true, default_value_t = 0.8)]
    epsilon: f64,
    #[arg(long, global = true, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Enum)]
    backend: BackendArg,
    /// Solver command line for the process backend.
    #[arg(long, global = true, default_value = "z3 -in -smt2")]
    solver_cmd: String,
    /// Wall-clock budget per bounded call, in seconds.
    #[arg(long, global = true, default_value_t = 60.0)]
    budget: f64,
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Enum,
    Process,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate model count of an SMT-LIB2 file.
    Count { file: PathBuf },
    /// Exact model count by enumeration.
    Exact { file: PathBuf },
    /// Compare estimates against exact counts over a corpus.
    Validate {
        /// Directory of `.smt2` files; the built-in desk corpus by default.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Runs per formula, with seeds `seed, seed+1, ...`.
        #[arg(long, default_value_t = 5)]
        runs: u64,
    },
    /// Empirical uniformity and pairwise independence of one hash config.
    HashStats {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: u32,
        /// Components per level, comma separated.
        #[arg(long = "C", value_delimiter = ',', required = true)]
        counts: Vec<u32>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
}

struct Failed(u8, String);

impl Opts {
    fn params(&self) -> Result<Params, Failed> {
        Params::new(self.epsilon, self.delta, self.seed)
            .map_err(|e| Failed(EXIT_USAGE, e.to_string()))
    }

    fn oracle(&self) -> Result<OracleConfig, Failed> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(Failed(EXIT_USAGE, "--budget must be positive".into()));
        }
        let solver = SolverCommand::parse(&self.solver_cmd)
            .ok_or_else(|| Failed(EXIT_USAGE, "--solver-cmd is empty".into()))?;
        Ok(OracleConfig {
            backend: match self.backend {
                BackendArg::Enum => Backend::Enum,
                BackendArg::Process => Backend::Process,
            },
            solver,
            budget: Duration::from_secs_f64(self.budget),
        })
    }
}

fn read_formula(path: &Path) -> Result<Formula, Failed> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failed(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    parse_smt2(&text).map_err(|e| Failed(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn oracle_failure(e: OracleError) -> Failed {
    let code = match e {
        OracleError::Formula(_) | OracleError::Hash(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    };
    Failed(code, e.to_string())
}

fn count(file: &Path, opts: &Opts) -> Result<(), Failed> {
    let f = read_formula(file)?;
    let params = opts.params()?;
    let est = backend::count(&f, &params, &opts.oracle()?).map_err(|e| match e {
        CountError::Oracle(e) => oracle_failure(e),
        e => Failed(EXIT_USAGE, e.to_string()),
    })?;
    let report = CountReport::new(&est, &params);
    if opts.json {
        print!("{}", to_json(&report));
    } else {
        print!("{}", report.to_text());
    }
    if est.final_count.is_none() {
        let timeouts = est
            .traces
            .iter()
            .all(|t| t.outcome == CoreOutcome::Failed(Failure::Timeout));
        return Err(if timeouts {
            Failed(EXIT_SOLVER, "every core invocation timed out".into())
        } else {
            Failed(EXIT_ALL_FAILED, "every core invocation failed".into())
        });
    }
    Ok(())
}

fn exact(file: &Path, opts: &Opts) -> Result<(), Failed> {
    let f = read_formula(file)?;
    let n = exact_count(&f).map_err(|e| match e {
        ValidateError::Enumeration(e) => oracle_failure(e),
        e => Failed(EXIT_USAGE, e.to_string()),
    })?;
    if opts.json {
        print!(
            "{}",
            to_json(&serde_json::json!({ "exact_count": n.to_string() }))
        );
    } else {
        println!("{n}");
    }
    Ok(())
}

fn validate(dir: Option<&Path>, runs: u64, opts: &Opts) -> Result<(), Failed> {
    let corpus: Vec<(String, Formula)> = match dir {
        Some(dir) => corpus::load_dir(dir).map_err(|e| Failed(EXIT_USAGE, e.to_string()))?,
        None => DESK
            .iter()
            .map(|e| (e.id.to_owned(), e.formula()))
            .collect(),
    };
    opts.params()?;
    let seeds: Vec<u64> = (0..runs).map(|i| opts.seed.wrapping_add(i)).collect();
    let report = run_quality_suite(&corpus, opts.epsilon, opts.delta, &seeds, &opts.oracle()?);
    if opts.json {
        print!("{}", to_json(&report));
    } else {
        print!("{}", corpus_table(&report));
    }
    Ok(())
}

fn hash_stats(n: usize, k: u32, counts: Vec<u32>, trials: u64, opts: &Opts) -> Result<(), Failed> {
    if n == 0 {
        return Err(Failed(EXIT_USAGE, "--n must be positive".into()));
    }
    let mut x2 = vec![0; n];
    x2[0] = 1;
    let spec = HashLawSpec {
        n,
        k,
        counts,
        trials,
        seed: opts.seed,
        x1: vec![0; n],
        x2,
    };
    let report = hash_law_suite(&spec).map_err(|e| Failed(EXIT_USAGE, e.to_string()))?;
    if opts.json {
        print!("{}", to_json(&report));
        return Ok(());
    }
    println!("cells={} trials={}", report.cells, report.trials);
    for law in [&report.uniformity, &report.joint, &report.collision] {
        let worst = law
            .bins
            .iter()
            .map(|b| (b.frequency - b.expected).abs())
            .fold(0.0, f64::max);
        let verdict = if law.pass() { "pass" } else { "FAIL" };
        println!(
            "{:<10} bins={:<4} z={:.3} max|dev|={:.5} tol={:.5} {verdict}",
            law.name,
            law.bins.len(),
            law.z,
            worst,
            law.bins.first().map_or(0.0, |b| b.tolerance)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = &cli.opts;
    let result = match cli.command {
        Command::Count { file } => count(&file, opts),
        Command::Exact { file } => exact(&file, opts),
        Command::Validate { corpus, runs } => validate(corpus.as_deref(), runs, opts),
        Command::HashStats {
            n,
            k,
            counts,
            trials,
        } => hash_stats(n, k, counts, trials, opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failed(code, msg)) => {
            eprintln!("smtcount: {msg}");
            ExitCode::from(code)
        }
    }
}
