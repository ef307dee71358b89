//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use l1inf::bench::{gen_uniform_matrix, log_space, measure_j, SplitMix64};
use l1inf::{
    norm_l1_inf, project_ball_l1inf, project_ball_l1inf_with, prox_linf_l1, sign_decompose,
    sparsity_report, Algorithm, DenseMatrix, ProjectionOptions, ProjectionOutput,
};

const TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// K + J bookkeeping shared by every criterion.
#[derive(Default)]
struct Accounting {
    instances: usize,
    violations: Vec<String>,
}

impl Accounting {
    fn record(&mut self, label: &str, y: &DenseMatrix, out: &ProjectionOutput) {
        self.instances += 1;
        if out.stats.k + out.stats.j != y.len() {
            self.violations.push(format!(
                "{label}: K={} J={} nm={}",
                out.stats.k,
                out.stats.j,
                y.len()
            ));
        }
    }
}

fn signed_uniform(rng: &mut SplitMix64, n: usize, m: usize) -> DenseMatrix {
    let data = (0..n * m).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
    DenseMatrix::from_col_major(n, m, data).unwrap()
}

fn small_shape(rng: &mut SplitMix64, max: usize) -> (usize, usize) {
    (
        1 + rng.next_below(max as u64) as usize,
        1 + rng.next_below(max as u64) as usize,
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_l1inf"))
        .args(["check", "--trials", "1000", "--max-n", "8", "--max-m", "8", "--tol", "1e-9"])
        .output()
        .expect("run l1inf check");
    let stdout = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let code = out.status.code();
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!("exit={code:?} {stdout} ({secs:.1}s)");
    if code != Some(0) {
        let stderr = String::from_utf8_lossy(&out.stderr);
        detail.push_str(&format!("\n{}", stderr.lines().take(20).collect::<Vec<_>>().join("\n")));
    }
    Outcome::new(code == Some(0), detail)
}

fn kkt_suite(acc: &mut Accounting) -> Outcome {
    let mut rng = SplitMix64::new(0xC2);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for trial in 0..200 {
        let y = signed_uniform(&mut rng, 50, 50);
        let (_, mags) = sign_decompose(&y);
        let c = (rng.next_below(999) + 1) as f64 / 1000.0 * norm_l1_inf(&y);
        for algo in Algorithm::ALL {
            let out = project_ball_l1inf(&y, c, algo).unwrap();
            acc.record("kkt", &y, &out);
            for j in 0..y.cols() {
                let removed: f64 = mags
                    .column(j)
                    .iter()
                    .zip(out.x.column(j))
                    .map(|(a, x)| a - x.abs())
                    .sum();
                let total: f64 = mags.column(j).iter().sum();
                if out.mu[j] > 0.0 {
                    let gap = (removed - out.theta).abs();
                    worst = worst.max(gap);
                    if gap > TOL {
                        failures.push(format!("trial {trial} {algo} col {j}: gap {gap:e}"));
                    }
                } else if total > out.theta + TOL {
                    failures.push(format!(
                        "trial {trial} {algo} zero col {j}: sum {total} > theta {}",
                        out.theta
                    ));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("600 projections, worst active-column gap {worst:e}; {}", summary(&failures)),
    )
}

fn boundary(acc: &mut Accounting) -> Outcome {
    let mut rng = SplitMix64::new(0xC3);
    let mut failures = Vec::new();
    let (mut outside, mut inside) = (0, 0);
    let mut worst = 0.0f64;
    for trial in 0..300 {
        let (n, m) = small_shape(&mut rng, 40);
        let y = signed_uniform(&mut rng, n, m);
        let norm = norm_l1_inf(&y);
        let c = rng.next_f64() * 1.5 * norm;
        for algo in Algorithm::ALL {
            let out = project_ball_l1inf(&y, c, algo).unwrap();
            acc.record("boundary", &y, &out);
            if norm > c {
                outside += 1;
                let gap = (norm_l1_inf(&out.x) - c).abs();
                worst = worst.max(gap);
                if gap > TOL {
                    failures.push(format!("trial {trial} {algo}: |norm - C| = {gap:e}"));
                }
            } else {
                inside += 1;
                if out.x != y {
                    failures.push(format!("trial {trial} {algo}: interior input changed"));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{outside} boundary cases (worst {worst:e}), {inside} interior cases; {}",
            summary(&failures)
        ),
    )
}

fn monotone_trace(acc: &mut Accounting) -> Outcome {
    let mut rng = SplitMix64::new(0xC4);
    let opts = ProjectionOptions {
        trace: true,
        verify: false,
    };
    let mut failures = Vec::new();
    let mut steps = 0usize;
    for algo in Algorithm::ALL {
        for trial in 0..100 {
            let (n, m) = small_shape(&mut rng, 60);
            let y = signed_uniform(&mut rng, n, m);
            let c = (rng.next_below(999) + 1) as f64 / 1000.0 * norm_l1_inf(&y);
            let out = project_ball_l1inf_with(&y, c, algo, &opts).unwrap();
            acc.record("trace", &y, &out);
            steps += out.trace.len();
            if let Some(w) = out.trace.windows(2).find(|w| w[1] < w[0]) {
                failures.push(format!("{algo} trial {trial}: {} -> {}", w[0], w[1]));
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("300 traced runs, {steps} transitions; {}", summary(&failures)),
    )
}

fn moreau(acc: &mut Accounting) -> Outcome {
    let mut rng = SplitMix64::new(0xC5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (n, m) = small_shape(&mut rng, 60);
        let y = signed_uniform(&mut rng, n, m);
        let c = (rng.next_below(1500) + 1) as f64 / 1000.0 * norm_l1_inf(&y);
        let prox = prox_linf_l1(&y, c).unwrap();
        let p = project_ball_l1inf(&y, c, Algorithm::InverseTotalOrder).unwrap();
        acc.record("moreau", &y, &p);
        worst = worst.max(prox.add(&p.x).unwrap().max_abs_diff(&y));
    }
    Outcome::new(worst <= EXACT_TOL, format!("100 matrices, max residual {worst:e}"))
}

fn projection_laws(acc: &mut Accounting) -> Outcome {
    let mut rng = SplitMix64::new(0xC6);
    let mut worst_idem = 0.0f64;
    let mut worst_expansion = f64::NEG_INFINITY;
    for _ in 0..100 {
        let a = signed_uniform(&mut rng, 100, 100);
        let b = signed_uniform(&mut rng, 100, 100);
        let c = (rng.next_below(1000) + 1) as f64 / 1000.0 * norm_l1_inf(&a).min(norm_l1_inf(&b));
        for algo in Algorithm::ALL {
            let pa = project_ball_l1inf(&a, c, algo).unwrap();
            let pb = project_ball_l1inf(&b, c, algo).unwrap();
            let ppa = project_ball_l1inf(&pa.x, c, algo).unwrap();
            acc.record("laws", &a, &pa);
            acc.record("laws", &b, &pb);
            acc.record("laws", &pa.x, &ppa);
            worst_idem = worst_idem.max(ppa.x.max_abs_diff(&pa.x));
            let lhs = pa.x.sub(&pb.x).unwrap().frobenius_norm();
            let rhs = a.sub(&b).unwrap().frobenius_norm();
            worst_expansion = worst_expansion.max(lhs - rhs);
        }
    }
    Outcome::new(
        worst_idem <= EXACT_TOL && worst_expansion <= TOL,
        format!(
            "100 pairs x 3 algorithms, idempotence {worst_idem:e}, max(|PA-PB| - |A-B|) {worst_expansion:e}"
        ),
    )
}

fn radius_trend(acc: &mut Accounting) -> Outcome {
    let y = gen_uniform_matrix(1000, 1000, 0);
    let radii = log_space(1e-3, 8.0, 30);
    let start = Instant::now();
    let mut sparsity = Vec::new();
    let mut thetas = Vec::new();
    for &c in &radii {
        let out = project_ball_l1inf(&y, c, Algorithm::InverseTotalOrder).unwrap();
        acc.record("radius-trend", &y, &out);
        sparsity.push(sparsity_report(&out.x, 0.0).unwrap().entry_sparsity);
        thetas.push(out.theta);
    }
    let secs = start.elapsed().as_secs_f64();
    let sparsity_monotone = sparsity.windows(2).all(|w| w[1] <= w[0]);
    let theta_monotone = thetas.windows(2).all(|w| w[1] <= w[0]);
    let (first, last) = (sparsity[0], *sparsity.last().unwrap());
    let span_high = first > 0.999;
    let span_low = last < 0.05;
    Outcome::new(
        sparsity_monotone && theta_monotone && span_high && span_low && secs < 120.0,
        format!(
            "sparsity nonincreasing={sparsity_monotone}, theta nonincreasing={theta_monotone}, \
             sparsity(C=1e-3)={first} (need > 0.999: {span_high}), \
             sparsity(C=8)={last} (need < 0.05: {span_low}), {secs:.1}s"
        ),
    )
}

fn j_trend() -> Outcome {
    let radii = log_space(1e-3, 8.0, 30);
    let pairs = measure_j(500, 500, &radii, 0).unwrap();
    let sparse_ok = pairs.iter().filter(|p| p.0 > 0.99).all(|p| p.1 < 0.01);
    let sparse_count = pairs.iter().filter(|p| p.0 > 0.99).count();
    let max_j = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    Outcome::new(
        sparse_ok && max_j < 0.10 && sparse_count > 0,
        format!(
            "{sparse_count} radii with sparsity > 0.99 all have J < 0.01: {sparse_ok}; \
             max J fraction over sweep {max_j:.4}"
        ),
    )
}

fn median_ns(y: &DenseMatrix, c: f64, algo: Algorithm, reps: usize) -> (u128, ProjectionOutput) {
    let mut out = project_ball_l1inf(y, c, algo).unwrap();
    let mut times: Vec<u128> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            out = project_ball_l1inf(y, c, algo).unwrap();
            t.elapsed().as_nanos()
        })
        .collect();
    times.sort_unstable();
    (times[reps / 2], out)
}

fn relative_speed(acc: &mut Accounting) -> Outcome {
    let y = gen_uniform_matrix(1000, 1000, 0);
    let mut t = Vec::new();
    for algo in Algorithm::ALL {
        let (ns, out) = median_ns(&y, 1.0, algo, 7);
        acc.record("speed", &y, &out);
        t.push((algo, ns));
    }
    let inv = t[2].1 as f64;
    let naive_ratio = t[0].1 as f64 / inv;
    let total_ratio = t[1].1 as f64 / inv;
    Outcome::new(
        naive_ratio >= 1.5 && total_ratio >= 1.5,
        format!(
            "median ms: naive {:.2}, total-order {:.2}, inverse {:.2}; speedups {naive_ratio:.1}x, {total_ratio:.1}x",
            t[0].1 as f64 / 1e6,
            t[1].1 as f64 / 1e6,
            inv / 1e6
        ),
    )
}

fn summary(failures: &[String]) -> String {
    match failures.first() {
        None => "no violations".into(),
        Some(f) => format!("{} violations, first: {f}", failures.len()),
    }
}

fn main() -> ExitCode {
    let mut acc = Accounting::default();
    let results = vec![
        ("oracle equivalence (check, 1000 trials)", oracle_equivalence()),
        ("KKT conditions on 50x50", kkt_suite(&mut acc)),
        ("boundary and interior", boundary(&mut acc)),
        ("threshold monotonicity", monotone_trace(&mut acc)),
        ("Moreau identity", moreau(&mut acc)),
        ("idempotence and nonexpansiveness", projection_laws(&mut acc)),
        ("sparsity and threshold vs radius, 1000x1000", radius_trend(&mut acc)),
        ("J fraction vs sparsity, 500x500", j_trend()),
        ("inverse algorithm speedup at C=1", relative_speed(&mut acc)),
    ];
    let accounting = Outcome::new(
        acc.violations.is_empty(),
        format!(
            "{} instances (plus every check trial); {}",
            acc.instances,
            summary(&acc.violations)
        ),
    );

    let mut failed = 0;
    for (i, (name, o)) in results
        .iter()
        .map(|(n, o)| (*n, o))
        .chain(std::iter::once(("K + J = nm", &accounting)))
        .enumerate()
    {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
