//! Command-line front end: `project`, `bench` and `check`.
//!
//! Exit codes: 0 success, 1 check mismatch, 2 malformed input,
//! 3 invalid flags, 4 output I/O failure. Data goes to files or stdout,
//! diagnostics and `--stats` lines go to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{
    self, emit_j_csv, measure_j, parse_algos, parse_radii, SplitMix64, SweepConfig,
};
use crate::error::Error;
use crate::matrix::{norm_l1_inf, sign_decompose, sparsity_report, DenseMatrix};
use crate::oracle::{project_small_kkt, theta_by_bisection};
use crate::projection::{project_ball_l1inf, Algorithm, ProjectionOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_BAD_FLAGS: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "l1inf", version, about = "Projection onto the l1,inf norm ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a matrix file onto the l1,inf ball.
    Project(ProjectArgs),
    /// Run timing/sparsity sweeps and write CSV.
    Bench(BenchArgs),
    /// Cross-check every algorithm against the reference solvers.
    Check(CheckArgs),
}

#[derive(Debug, clap::Args)]
pub struct ProjectArgs {
    /// Input matrix: header `n m`, then n rows of m reals.
    pub input: PathBuf,
    /// Ball radius C >= 0.
    #[arg(long, allow_negative_numbers = true)]
    pub radius: f64,
    /// naive, total-order or inverse-total-order.
    #[arg(long, default_value = "inverse-total-order")]
    pub algo: String,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print theta, sparsity, J, K and elapsed time to stderr.
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Radius,
    Size,
    #[value(name = "j", alias = "J")]
    J,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub mode: BenchMode,
    /// Row counts, comma separated.
    #[arg(long)]
    pub n: Option<String>,
    /// Column counts, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Radii: `lo:hi:log|lin:count` or a comma-separated list.
    #[arg(long)]
    pub radii: Option<String>,
    /// Comma-separated algorithm names, or `all`.
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run every cell sequentially on one thread.
    #[arg(long)]
    pub timing_strict: bool,
    /// `key = value` sweep configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub max_n: usize,
    #[arg(long, default_value_t = 8)]
    pub max_m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_FLAGS } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Project(a) => cmd_project(&a, stdout, stderr),
        Command::Bench(a) => cmd_bench(&a, stderr),
        Command::Check(a) => cmd_check(&a, stdout, stderr),
    }
}

pub fn cmd_project(args: &ProjectArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    if !(args.radius >= 0.0) || !args.radius.is_finite() {
        let _ = writeln!(stderr, "error: --radius must be finite and >= 0, got {}", args.radius);
        return EXIT_BAD_FLAGS;
    }
    let algo: Algorithm = match args.algo.parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_BAD_FLAGS;
        }
    };
    let y = match File::open(&args.input)
        .map_err(|e| Error::io(&args.input, e))
        .and_then(|f| DenseMatrix::read_text(BufReader::new(f)))
    {
        Ok(y) => y,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e}", args.input.display());
            return EXIT_BAD_INPUT;
        }
    };
    let out = match project_ball_l1inf(&y, args.radius, algo) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_BAD_FLAGS;
        }
    };

    let written = match &args.output {
        Some(path) => File::create(path)
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                out.x.write_text(&mut w)?;
                w.flush()
            })
            .map_err(|e| Error::io(path, e)),
        None => out
            .x
            .write_text(&mut *stdout)
            .map_err(|e| Error::io("<stdout>", e)),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_IO;
    }

    if args.stats {
        let sp = sparsity_report(&out.x, 0.0).expect("zero tolerance");
        let _ = writeln!(stderr, "algo={algo}");
        let _ = writeln!(stderr, "theta={}", out.theta);
        let _ = writeln!(stderr, "entry_sparsity={}", sp.entry_sparsity);
        let _ = writeln!(stderr, "column_sparsity={}", sp.column_sparsity);
        let _ = writeln!(stderr, "J={}", out.stats.j);
        let _ = writeln!(stderr, "K={}", out.stats.k);
        let _ = writeln!(stderr, "elapsed_ns={}", out.stats.elapsed.as_nanos());
    }
    EXIT_OK
}

fn bench_config(args: &BenchArgs) -> Result<SweepConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            SweepConfig::from_kv_str(&text)?
        }
        None => SweepConfig::default(),
    };
    match (&args.n, &args.m) {
        (Some(n), Some(m)) => {
            cfg.shapes = bench::grid(&bench::parse_usize_list(n)?, &bench::parse_usize_list(m)?)
        }
        (None, None) => {}
        _ => return Err(Error::Config("--n and --m must be given together".into())),
    }
    if let Some(r) = &args.radii {
        cfg.radii = parse_radii(r)?;
    } else if args.mode == BenchMode::Size && args.config.is_none() {
        cfg.radii = vec![1.0];
    }
    if let Some(a) = &args.algo {
        cfg.algos = parse_algos(a)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reps {
        cfg.repetitions = r;
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    cfg.timing_strict |= args.timing_strict;
    cfg.validate()?;
    if cfg.output.is_none() {
        return Err(Error::Config("--out is required".into()));
    }
    Ok(cfg)
}

pub fn cmd_bench(args: &BenchArgs, stderr: &mut dyn Write) -> i32 {
    let cfg = match bench_config(args) {
        Ok(c) => c,
        Err(e @ Error::Io { .. }) | Err(e @ Error::Parse { .. }) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_BAD_INPUT;
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_BAD_FLAGS;
        }
    };
    let result = match args.mode {
        BenchMode::Radius => bench::sweep_radius(&cfg).map(|r| r.len()),
        BenchMode::Size => bench::sweep_size(&cfg).map(|r| r.len()),
        BenchMode::J => {
            if cfg.shapes.len() != 1 {
                let _ = writeln!(stderr, "error: J mode takes a single shape");
                return EXIT_BAD_FLAGS;
            }
            let (n, m) = cfg.shapes[0];
            measure_j(n, m, &cfg.radii, cfg.seed).and_then(|pairs| {
                let rows: Vec<bench::JRecord> = cfg
                    .radii
                    .iter()
                    .zip(pairs)
                    .map(|(&c, (s, j))| bench::JRecord {
                        c,
                        entry_sparsity: s,
                        j_fraction: j,
                    })
                    .collect();
                let path = cfg.output.as_ref().expect("validated");
                emit_j_csv(&rows, path).map(|_| rows.len())
            })
        }
    };
    match result {
        Ok(rows) => {
            let _ = writeln!(
                stderr,
                "wrote {rows} rows to {}",
                cfg.output.as_ref().expect("validated").display()
            );
            EXIT_OK
        }
        Err(e @ Error::Io { .. }) | Err(e @ Error::Csv(_)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_IO
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_BAD_FLAGS
        }
    }
}

/// Largest shape for which the exhaustive KKT solver joins the comparison.
pub const CHECK_KKT_MAX_DIM: usize = 4;
/// Largest shape accepted by `check`.
pub const CHECK_MAX_DIM: usize = 12;

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub trials: usize,
    pub max_n: usize,
    pub max_m: usize,
    pub seed: u64,
    pub tol: f64,
}

type ProjectFn = dyn Fn(&DenseMatrix, f64) -> crate::Result<ProjectionOutput> + Sync;

/// A projection routine under test.
pub struct Candidate<'a> {
    pub name: String,
    pub project: Box<ProjectFn>,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<'a> Candidate<'a> {
    pub fn new(
        name: impl Into<String>,
        project: impl Fn(&DenseMatrix, f64) -> crate::Result<ProjectionOutput> + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            project: Box::new(project),
            _marker: std::marker::PhantomData,
        }
    }

    /// The three library algorithms.
    pub fn library() -> Vec<Candidate<'static>> {
        Algorithm::ALL
            .iter()
            .map(|&a| Candidate::new(a.name(), move |y, c| project_ball_l1inf(y, c, a)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    /// Trials where the exhaustive KKT solver also participated.
    pub kkt_trials: usize,
}

/// Random instance for trial `t`: entries from `{0, 0.1, ..., 1}` with random
/// signs and a radius drawn from `(0, 1.5 * ||Y||_{1,inf}]`.
pub fn check_instance(rng: &mut SplitMix64, max_n: usize, max_m: usize) -> (DenseMatrix, f64) {
    let n = 1 + rng.next_below(max_n as u64) as usize;
    let m = 1 + rng.next_below(max_m as u64) as usize;
    let data: Vec<f64> = (0..n * m)
        .map(|_| {
            let v = rng.next_below(11) as f64 / 10.0;
            if rng.next_u64() & 1 == 1 {
                -v
            } else {
                v
            }
        })
        .collect();
    let y = DenseMatrix::from_col_major(n, m, data).expect("finite grid values");
    let frac = (rng.next_below(1000) + 1) as f64 / 1000.0;
    let norm = norm_l1_inf(&y);
    let c = if norm > 0.0 { frac * 1.5 * norm } else { frac };
    (y, c)
}

/// Runs `cfg.trials` randomized comparisons of every candidate against the
/// bisection oracle (and the KKT enumerator on small shapes). Mismatches are
/// described on `log`.
pub fn run_check(cfg: &CheckConfig, candidates: &[Candidate<'_>], log: &mut dyn Write) -> CheckReport {
    let mut rng = SplitMix64::new(cfg.seed);
    let mut report = CheckReport::default();
    let oracle_tol = (cfg.tol * 1e-3).clamp(1e-14, 1e-12);
    for trial in 0..cfg.trials {
        report.trials += 1;
        let (y, c) = check_instance(&mut rng, cfg.max_n, cfg.max_m);
        let (signs, mags) = sign_decompose(&y);
        let mut problems = Vec::new();

        let (expected, expected_theta) = if norm_l1_inf(&y) > c {
            let o = match theta_by_bisection(&mags, c, oracle_tol) {
                Ok(o) => o,
                Err(e) => {
                    problems.push(format!("bisection oracle failed: {e}"));
                    report.failed += 1;
                    describe(log, trial, &y, c, &problems, &[]);
                    continue;
                }
            };
            if y.rows() <= CHECK_KKT_MAX_DIM && y.cols() <= CHECK_KKT_MAX_DIM {
                report.kkt_trials += 1;
                match project_small_kkt(&mags, c) {
                    Ok(k) => {
                        let d = k.x.max_abs_diff(&o.x);
                        if d > cfg.tol || (k.theta - o.theta).abs() > cfg.tol {
                            problems.push(format!(
                                "kkt oracle disagrees with bisection: max |dX| = {d:e}, theta {} vs {}",
                                k.theta, o.theta
                            ));
                        }
                    }
                    Err(e) => problems.push(format!("kkt oracle failed: {e}")),
                }
            }
            (signs.apply_unchecked(&o.x), o.theta)
        } else {
            (y.clone(), 0.0)
        };

        let mut thetas = Vec::with_capacity(candidates.len());
        for cand in candidates {
            match (cand.project)(&y, c) {
                Ok(out) => {
                    thetas.push((cand.name.clone(), out.theta));
                    let d = out.x.max_abs_diff(&expected);
                    if d > cfg.tol {
                        problems.push(format!("{}: max |dX| = {d:e}", cand.name));
                    }
                    if (out.theta - expected_theta).abs() > cfg.tol {
                        problems.push(format!(
                            "{}: theta {} vs oracle {expected_theta}",
                            cand.name, out.theta
                        ));
                    }
                    if out.stats.k + out.stats.j != y.len() {
                        problems.push(format!(
                            "{}: K + J = {} + {} != {}",
                            cand.name,
                            out.stats.k,
                            out.stats.j,
                            y.len()
                        ));
                    }
                }
                Err(e) => problems.push(format!("{}: error {e}", cand.name)),
            }
        }
        if problems.is_empty() {
            report.passed += 1;
        } else {
            report.failed += 1;
            thetas.push(("oracle".into(), expected_theta));
            describe(log, trial, &y, c, &problems, &thetas);
        }
    }
    report
}

fn describe(
    log: &mut dyn Write,
    trial: usize,
    y: &DenseMatrix,
    c: f64,
    problems: &[String],
    thetas: &[(String, f64)],
) {
    let _ = writeln!(log, "MISMATCH trial={trial} C={c}");
    for p in problems {
        let _ = writeln!(log, "  {p}");
    }
    for (name, t) in thetas {
        let _ = writeln!(log, "  theta[{name}]={t}");
    }
    let _ = writeln!(log, "  matrix:");
    let _ = y.write_text(&mut *log);
}

pub fn check_exit_code(report: &CheckReport) -> i32 {
    if report.failed == 0 {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    }
}

pub fn cmd_check(args: &CheckArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    if args.max_n == 0 || args.max_m == 0 || args.max_n > CHECK_MAX_DIM || args.max_m > CHECK_MAX_DIM {
        let _ = writeln!(
            stderr,
            "error: --max-n and --max-m must lie in [1, {CHECK_MAX_DIM}]"
        );
        return EXIT_BAD_FLAGS;
    }
    if !(args.tol > 0.0) {
        let _ = writeln!(stderr, "error: --tol must be positive");
        return EXIT_BAD_FLAGS;
    }
    let cfg = CheckConfig {
        trials: args.trials,
        max_n: args.max_n,
        max_m: args.max_m,
        seed: args.seed,
        tol: args.tol,
    };
    let report = run_check(&cfg, &Candidate::library(), stderr);
    let _ = writeln!(
        stdout,
        "trials={} passed={} failed={} kkt_trials={}",
        report.trials, report.passed, report.failed, report.kkt_trials
    );
    check_exit_code(&report)
}
