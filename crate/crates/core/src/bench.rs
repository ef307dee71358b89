//! Benchmark harness: reproducible uniform matrices, radius and size sweeps,
//! J measurements, and CSV output.
//!
//! # Random matrices
//!
//! [`gen_uniform_matrix`] fills the matrix column by column from a 64-bit
//! generator with state `s` (initialised to the seed):
//!
//! ```text
//! s = s + 0x9E3779B97F4A7C15          (wrapping)
//! z = s
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (wrapping)
//! z = z ^ (z >> 31)
//! u = (z >> 11) * 2^-53                      (uniform on [0, 1))
//! ```
//!
//! Entry `(i, j)` is the `(j * n + i)`-th draw.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sparsity_report, DenseMatrix};
use crate::projection::{project_ball_l1inf, Algorithm, ProjectionOutput};

/// Shift/multiply generator described in the module docs.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`; `bound` must be positive.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}

/// `n x m` matrix with i.i.d. uniform `[0, 1)` entries, filled column-major.
pub fn gen_uniform_matrix(n: usize, m: usize, seed: u64) -> DenseMatrix {
    assert!(n >= 1 && m >= 1, "matrix shape must be positive");
    let mut rng = SplitMix64::new(seed);
    let data = (0..n * m).map(|_| rng.next_f64()).collect();
    DenseMatrix::from_parts_unchecked(n, m, data)
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algo: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub seed: u64,
    /// Median over `repetitions` timed runs.
    pub elapsed_ns: u64,
    pub entry_sparsity: f64,
    pub column_sparsity: f64,
    pub theta: f64,
    #[serde(rename = "J_fraction")]
    pub j_fraction: f64,
    pub repetitions: usize,
}

pub const CSV_HEADER: [&str; 11] = [
    "algo",
    "n",
    "m",
    "C",
    "seed",
    "elapsed_ns",
    "entry_sparsity",
    "column_sparsity",
    "theta",
    "J_fraction",
    "repetitions",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub shapes: Vec<(usize, usize)>,
    pub radii: Vec<f64>,
    pub algos: Vec<Algorithm>,
    pub seed: u64,
    pub repetitions: usize,
    pub output: Option<PathBuf>,
    /// Run cells one after another on the calling thread.
    pub timing_strict: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            shapes: vec![(1000, 1000)],
            radii: log_space(1e-3, 8.0, 30),
            algos: vec![Algorithm::InverseTotalOrder],
            seed: 0,
            repetitions: 5,
            output: None,
            timing_strict: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shapes.is_empty() || self.radii.is_empty() || self.algos.is_empty() {
            return Err(Error::Config("shapes, radii and algorithms must be non-empty".into()));
        }
        if let Some(&(n, m)) = self.shapes.iter().find(|&&(n, m)| n == 0 || m == 0) {
            return Err(Error::Config(format!("invalid shape {n}x{m}")));
        }
        if let Some(r) = self.radii.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::Config(format!("radii must be positive, got {r}")));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    ///
    /// Keys: `shapes` (`1000x1000,200x400`), `n` and `m` (comma lists,
    /// combined as a grid), `radii` (see [`parse_radii`]), `algos`, `seed`,
    /// `repetitions`, `output`, `timing_strict`.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        let mut ns: Option<Vec<usize>> = None;
        let mut ms: Option<Vec<usize>> = None;
        let mut shapes: Option<Vec<(usize, usize)>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let at = |e: Error| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            };
            match key {
                "shapes" => shapes = Some(parse_shapes(value).map_err(at)?),
                "n" => ns = Some(parse_usize_list(value).map_err(at)?),
                "m" => ms = Some(parse_usize_list(value).map_err(at)?),
                "radii" | "radius" => cfg.radii = parse_radii(value).map_err(at)?,
                "algos" | "algo" => cfg.algos = parse_algos(value).map_err(at)?,
                "seed" => cfg.seed = parse_num(value).map_err(at)?,
                "repetitions" | "reps" => cfg.repetitions = parse_num(value).map_err(at)?,
                "output" | "out" => cfg.output = Some(PathBuf::from(value)),
                "timing_strict" => cfg.timing_strict = parse_num(value).map_err(at)?,
                other => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        match (shapes, ns, ms) {
            (Some(s), None, None) => cfg.shapes = s,
            (None, Some(ns), Some(ms)) => cfg.shapes = grid(&ns, &ms),
            (None, None, None) => {}
            _ => {
                return Err(Error::Config(
                    "give either `shapes` or both `n` and `m`".into(),
                ))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{s}`")))
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(parse_num).collect()
}

pub fn parse_shapes(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|item| {
            let (n, m) = item
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| Error::Config(format!("shape `{item}` is not `NxM`")))?;
            Ok((parse_num(n)?, parse_num(m)?))
        })
        .collect()
}

/// Cartesian product `ns x ms`, `n` varying slowest.
pub fn grid(ns: &[usize], ms: &[usize]) -> Vec<(usize, usize)> {
    ns.iter()
        .flat_map(|&n| ms.iter().map(move |&m| (n, m)))
        .collect()
}

pub fn parse_algos(s: &str) -> Result<Vec<Algorithm>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    s.split(',').map(|a| a.trim().parse()).collect()
}

/// `count` points from `lo` to `hi`, evenly spaced in log scale.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn lin_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Parses `lo:hi:log:count`, `lo:hi:lin:count`, or a comma-separated list.
pub fn parse_radii(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let radii = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!(
                "radius range `{s}` must be `lo:hi:log|lin:count`"
            )));
        }
        let lo: f64 = parse_num(parts[0])?;
        let hi: f64 = parse_num(parts[1])?;
        let count: usize = parse_num(parts[3])?;
        if count == 0 || !(lo > 0.0) || !(hi >= lo) {
            return Err(Error::Config(format!(
                "radius range `{s}` needs 0 < lo <= hi and count >= 1"
            )));
        }
        match parts[2] {
            "log" => log_space(lo, hi, count),
            "lin" => lin_space(lo, hi, count),
            other => {
                return Err(Error::Config(format!(
                    "radius spacing `{other}` must be `log` or `lin`"
                )))
            }
        }
    } else {
        s.split(',').map(parse_num).collect::<Result<Vec<f64>>>()?
    };
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Config(format!("radii must be positive, got {r}")));
    }
    Ok(radii)
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2
    }
}

/// Warm-up run, then `repetitions` timed runs; returns the last output and
/// the median time in nanoseconds.
fn time_projection(y: &DenseMatrix, c: f64, algo: Algorithm, reps: usize) -> (ProjectionOutput, u64) {
    let mut out = project_ball_l1inf(y, c, algo).expect("validated radius");
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        out = project_ball_l1inf(y, c, algo).expect("validated radius");
        times.push(start.elapsed().as_nanos() as u64);
    }
    (out, median(times))
}

fn record(
    algo: Algorithm,
    y: &DenseMatrix,
    c: f64,
    seed: u64,
    reps: usize,
) -> BenchRecord {
    let (out, elapsed_ns) = time_projection(y, c, algo, reps);
    let sp = sparsity_report(&out.x, 0.0).expect("zero tolerance");
    BenchRecord {
        algo: algo.name().to_string(),
        n: y.rows(),
        m: y.cols(),
        c,
        seed,
        elapsed_ns,
        entry_sparsity: sp.entry_sparsity,
        column_sparsity: sp.column_sparsity,
        theta: out.theta,
        j_fraction: out.stats.j as f64 / y.len() as f64,
        repetitions: reps,
    }
}

/// Runs every `(shape, radius, algorithm)` cell in that nesting order.
fn run_cells(cfg: &SweepConfig) -> Vec<BenchRecord> {
    let matrices: Vec<DenseMatrix> = cfg
        .shapes
        .iter()
        .map(|&(n, m)| gen_uniform_matrix(n, m, cfg.seed))
        .collect();
    let cells: Vec<(usize, f64, Algorithm)> = (0..matrices.len())
        .flat_map(|s| {
            cfg.radii
                .iter()
                .flat_map(move |&c| cfg.algos.iter().map(move |&a| (s, c, a)))
        })
        .collect();
    let run = |&(s, c, a): &(usize, f64, Algorithm)| {
        record(a, &matrices[s], c, cfg.seed, cfg.repetitions)
    };
    if cfg.timing_strict {
        cells.iter().map(run).collect()
    } else {
        cells.par_iter().map(run).collect()
    }
}

fn finish(cfg: &SweepConfig, records: Vec<BenchRecord>) -> Result<Vec<BenchRecord>> {
    if let Some(path) = &cfg.output {
        emit_csv(&records, path)?;
    }
    Ok(records)
}

/// For each shape, radius and algorithm: time the projection and record
/// sparsity, threshold and J fraction. Writes CSV when `cfg.output` is set.
pub fn sweep_radius(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let records = run_cells(cfg);
    finish(cfg, records)
}

/// Like [`sweep_radius`] with the radius held fixed (exactly one radius).
pub fn sweep_size(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    if cfg.radii.len() != 1 {
        return Err(Error::Config(format!(
            "size sweep takes exactly one radius, got {}",
            cfg.radii.len()
        )));
    }
    let records = run_cells(cfg);
    finish(cfg, records)
}

/// `(entry sparsity, J / nm)` of the backward-walk algorithm for each radius.
pub fn measure_j(n: usize, m: usize, radii: &[f64], seed: u64) -> Result<Vec<(f64, f64)>> {
    if n == 0 || m == 0 {
        return Err(Error::Config(format!("invalid shape {n}x{m}")));
    }
    let y = gen_uniform_matrix(n, m, seed);
    radii
        .iter()
        .map(|&c| {
            let out = project_ball_l1inf(&y, c, Algorithm::InverseTotalOrder)?;
            let sp = sparsity_report(&out.x, 0.0)?;
            Ok((sp.entry_sparsity, out.stats.j as f64 / y.len() as f64))
        })
        .collect()
}

pub fn write_csv<W: Write>(records: &[BenchRecord], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    rdr.deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Writes the sweep CSV to `path`.
pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(records, &mut w).map_err(|e| match e {
        Error::Csv(c) if c.is_io_error() => Error::io(path, std::io::Error::other(c.to_string())),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JRecord {
    #[serde(rename = "C")]
    pub c: f64,
    pub entry_sparsity: f64,
    #[serde(rename = "J_fraction")]
    pub j_fraction: f64,
}

pub fn emit_j_csv(records: &[JRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    wtr.write_record(["C", "entry_sparsity", "J_fraction"])?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}
