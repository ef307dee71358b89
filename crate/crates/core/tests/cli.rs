use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use l1inf::cli::{check_exit_code, run_check, Candidate, CheckConfig, EXIT_MISMATCH};
use l1inf::{project_ball_l1inf, Algorithm, DenseMatrix};

fn l1inf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l1inf"))
        .args(args)
        .output()
        .expect("spawn l1inf")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_matrix(path: &Path) -> DenseMatrix {
    DenseMatrix::read_text(fs::read_to_string(path).unwrap().as_bytes()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn project_identity_at_unit_radius() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "y.txt", "2 2\n1 0\n0 1\n");
    let out = dir.path().join("x.txt");
    let o = l1inf(&["project", &input, "--radius", "1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "2 2\n0.5 0\n0 0.5\n");
}

#[test]
fn project_every_algorithm_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "y.txt", "2 3\n3 -1 0.5\n-2 4 0.25\n");
    let y = read_matrix(Path::new(&input));
    for algo in Algorithm::ALL {
        let o = l1inf(&["project", &input, "--radius", "2.5", "--algo", algo.name()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let got = DenseMatrix::read_text(o.stdout.as_slice()).unwrap();
        let want = project_ball_l1inf(&y, 2.5, algo).unwrap().x;
        assert_eq!(got, want, "{algo}");
    }
}

#[test]
fn project_inside_ball_is_identity_and_zero_radius_zeroes() {
    let dir = tempfile::tempdir().unwrap();
    let text = "2 2\n0.1 -0.123456789012345678\n1e-7 0.3\n";
    let input = write(dir.path(), "y.txt", text);
    let y = read_matrix(Path::new(&input));

    let o = l1inf(&["project", &input, "--radius", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(DenseMatrix::read_text(o.stdout.as_slice()).unwrap(), y);

    let o = l1inf(&["project", &input, "--radius", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let x = DenseMatrix::read_text(o.stdout.as_slice()).unwrap();
    assert!(x.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn project_stats_go_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "y.txt", "2 2\n1 0\n0 1\n");
    let o = l1inf(&["project", &input, "--radius", "1", "--stats"]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    for key in ["theta=0.5", "entry_sparsity=0.5", "column_sparsity=0", "J=", "K=", "elapsed_ns="] {
        assert!(err.lines().any(|l| l.starts_with(key)), "missing {key} in {err}");
    }
    let x = DenseMatrix::read_text(o.stdout.as_slice()).unwrap();
    assert_eq!(x.get(0, 0), 0.5);
}

#[test]
fn malformed_input_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_value.txt", "2 2\n1 0\n0 abc\n", "line 3"),
        ("short_row.txt", "2 2\n1 0\n0\n", "line 3"),
        ("header.txt", "2\n1 0\n", "line 1"),
        ("nan.txt", "1 2\n1 NaN\n", "line 2"),
    ];
    for (name, text, needle) in cases {
        let input = write(dir.path(), name, text);
        let o = l1inf(&["project", &input, "--radius", "1"]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let o = l1inf(&["project", "/nonexistent/y.txt", "--radius", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_flags_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "y.txt", "1 1\n2\n");
    for args in [
        vec!["project", input.as_str(), "--radius", "-1"],
        vec!["project", input.as_str(), "--radius", "1", "--algo", "fastest"],
        vec!["project", input.as_str()],
        vec!["project", input.as_str(), "--radius", "1", "--bogus"],
        vec!["frobnicate"],
        vec!["bench", "--mode", "radius", "--n", "4", "--m", "4", "--radii", "1:2:cubic:3"],
        vec!["bench", "--mode", "radius", "--n", "4", "--m", "4", "--radii", "-1"],
        vec!["bench", "--mode", "radius", "--n", "4"],
        vec!["bench", "--mode", "size", "--n", "4", "--m", "4", "--radii", "1,2"],
        vec!["check", "--max-n", "13"],
        vec!["check", "--tol", "0"],
    ] {
        let o = l1inf(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(l1inf(&["--help"]).status.code(), Some(0));
    assert_eq!(l1inf(&["--version"]).status.code(), Some(0));
}

#[test]
fn output_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "y.txt", "1 1\n2\n");
    let bad = dir.path().join("no").join("such").join("x.txt");
    let o = l1inf(&["project", &input, "--radius", "1", "--output", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("x.txt"));

    let bad = dir.path().join("no").join("out.csv");
    let o = l1inf(&[
        "bench", "--mode", "radius", "--n", "4", "--m", "4", "--radii", "1", "--reps", "1", "--out",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_radius_row_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = l1inf(&[
            "bench", "--mode", "radius", "--n", "100", "--m", "100", "--radii", "1e-3:8:log:30",
            "--algo", "all", "--reps", "1", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        csv_rows(&out)
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a.len(), 1 + 30 * 3);
    assert_eq!(
        a[0].join(","),
        "algo,n,m,C,seed,elapsed_ns,entry_sparsity,column_sparsity,theta,J_fraction,repetitions"
    );
    let strip = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().enumerate().filter(|(i, _)| *i != 5).map(|(_, v)| v.clone()).collect())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn bench_j_mode_writes_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("j.csv");
    let o = l1inf(&["bench", "--mode", "J", "--n", "500", "--m", "500", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows[0].join(","), "C,entry_sparsity,J_fraction");
    assert_eq!(rows.len(), 31);
    for r in &rows[1..] {
        let s: f64 = r[1].parse().unwrap();
        let j: f64 = r[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&j));
    }
}

#[test]
fn bench_size_mode_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("size.csv");
    let cfg = write(
        dir.path(),
        "sweep.conf",
        &format!(
            "# size sweep\nshapes = 20x10, 20x40\nradius = 0.5\nalgos = naive,inverse\nreps = 1\nseed = 9\noutput = {}\n",
            out.display()
        ),
    );
    let o = l1inf(&["bench", "--mode", "size", "--config", &cfg, "--timing-strict"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1 + 2 * 2);
    assert!(rows[1..].iter().all(|r| r[3] == "0.5" && r[4] == "9"));

    let bad = write(dir.path(), "bad.conf", "shapes = 4x4\nradii = 1\nnonsense\n");
    let o = l1inf(&["bench", "--mode", "size", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn check_certification_runs_pass() {
    let o = l1inf(&["check", "--trials", "1", "--max-n", "1", "--max-m", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let o = l1inf(&["check", "--trials", "300", "--max-n", "12", "--max-m", "12", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("failed=0"));
}

#[test]
fn scalar_check_matches_clipping() {
    for (y, c) in [(3.0, 1.0), (-3.0, 1.0), (0.5, 1.0), (-0.25, 0.1)] {
        let m = DenseMatrix::from_rows(&[[y]]).unwrap();
        for algo in Algorithm::ALL {
            let x = project_ball_l1inf(&m, c, algo).unwrap().x.get(0, 0);
            assert_eq!(x, f64::min(y.abs(), c).copysign(y));
        }
    }
}

#[test]
fn tampered_candidate_is_reported() {
    let cfg = CheckConfig {
        trials: 50,
        max_n: 4,
        max_m: 4,
        seed: 1,
        tol: 1e-9,
    };
    let mut candidates = Candidate::library();
    candidates.push(Candidate::new("tampered", |y, c| {
        let mut out = project_ball_l1inf(y, c, Algorithm::InverseTotalOrder)?;
        out.theta *= 1.0 + 1e-6;
        out.x = out.x.scaled(0.999)?;
        Ok(out)
    }));
    let mut log = Vec::new();
    let report = run_check(&cfg, &candidates, &mut log);
    let log = String::from_utf8(log).unwrap();
    assert!(report.failed > 0);
    assert_eq!(check_exit_code(&report), EXIT_MISMATCH);
    assert!(log.contains("MISMATCH") && log.contains("tampered"), "{log}");
    assert!(log.contains("theta[inverse-total-order]") && log.contains("matrix:"));
    assert!(!log.contains("  naive:"), "honest candidates must not be flagged: {log}");

    let mut quiet = Vec::new();
    let honest = run_check(&cfg, &Candidate::library(), &mut quiet);
    assert_eq!((honest.failed, honest.passed), (0, 50));
    assert!(quiet.is_empty());
}
