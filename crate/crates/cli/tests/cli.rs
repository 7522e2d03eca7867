use std::path::Path;
use std::process::{Command, Output};

fn soefrac(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soefrac"))
        .args(args)
        .env("SOEFRAC_CACHE_DIR", cache)
        .env("SOEFRAC_THREADS", "2")
        .output()
        .unwrap()
}

fn ok(cache: &Path, args: &[&str]) -> (String, String) {
    let o = soefrac(cache, args);
    let (out, err) = (
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    );
    assert_eq!(o.status.code(), Some(0), "{args:?}\n{err}");
    (out, err)
}

/// `key=value` fields of a summary line.
fn field(summary: &str, key: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {summary}"))
        .parse()
        .unwrap()
}

/// Numeric rows of a CSV, skipping the header and comments.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|v| {
                    if v.is_empty() {
                        f64::NAN
                    } else {
                        v.parse().unwrap()
                    }
                })
                .collect()
        })
        .collect()
}

fn slope(csv: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix("# slope="))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn kernel_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = |p: &Path| {
        [
            "kernel",
            "--alpha",
            "0.5",
            "--h",
            "1e-5",
            "--T",
            "1",
            "--tol",
            "1e-12",
            "--out",
            p.to_str().unwrap(),
        ]
        .map(String::from)
    };
    let (summary, _) = ok(
        dir.path(),
        &args(&a).iter().map(String::as_str).collect::<Vec<_>>(),
    );
    ok(
        dir.path(),
        &args(&b).iter().map(String::as_str).collect::<Vec<_>>(),
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m = field(&summary, "m");
    assert!((8.0..=25.0).contains(&m), "{summary}");
    assert!(field(&summary, "eps_ra") <= 1e-9);
    assert!(field(&summary, "E_ra") > 0.0);
}

#[test]
fn integer_order_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let (json, summary) = ok(
        dir.path(),
        &[
            "kernel", "--alpha", "1", "--h", "1e-3", "--T", "1", "--tol", "1e-12",
        ],
    );
    assert_eq!(field(&summary, "m"), 1.0);
    assert!(
        json.contains(r#"{"c": 1.0000000000000000e0, "d": 0.0000000000000000e0}"#),
        "{json}"
    );
}

#[test]
fn scalar_run_single_step() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "--problem",
        "scalar",
        "--lambda",
        "-1",
        "--alpha",
        "1",
        "--scheme",
        "ie",
        "--h",
        "0.1",
        "--T",
        "0.1",
    ];
    let (csv, summary) = ok(dir.path(), &args);
    assert!(csv.starts_with("t,norm,energy,err\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 2);
    assert!((r[1][1] - 1.0 / 1.1).abs() < 1e-15);
    assert!(r[1][2].is_nan());
    // IE against e^{-0.1}
    assert!((r[1][3] - (1.0 / 1.1 - (-0.1f64).exp()).abs()).abs() < 1e-12);
    assert!((field(&summary, "final_norm") - 0.9091).abs() < 1e-4);
}

#[test]
fn heat_run_error_drops_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let err = |h: &str| {
        let (csv, _) = ok(
            dir.path(),
            &[
                "run",
                "--problem",
                "heat1d",
                "--alpha",
                "0.5",
                "--scheme",
                "mcn",
                "--h",
                h,
                "--T",
                "1",
            ],
        );
        rows(&csv).last().unwrap()[3]
    };
    assert!(err("0.0009765625") < err("0.00390625"));
}

#[test]
fn ch_run_conserves_mass_and_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ch").join("run.csv");
    let (summary, _) = ok(
        dir.path(),
        &[
            "run",
            "--problem",
            "ch2d",
            "--alpha",
            "0.9",
            "--h",
            "0.00390625",
            "--T",
            "1",
            "--snapshot-times",
            "0,1",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(field(&summary, "mass_drift") <= 1e-10, "{summary}");
    let csv = std::fs::read_to_string(&out).unwrap();
    let r = rows(&csv);
    assert_eq!(r.len(), 257);
    assert!(r.iter().all(|row| row[2].is_finite() && row[3].is_nan()));
    let snap = std::fs::read_to_string(dir.path().join("ch").join("run.snap1.csv")).unwrap();
    assert!(snap.starts_with("# t=1.0000000000000000e0\n"));
    let grid = rows(&format!("header\n{}", snap.split_once('\n').unwrap().1));
    assert_eq!((grid.len(), grid[0].len()), (64, 64));
    assert!(grid.iter().flatten().all(|v| v.abs() <= 1.2));
}

#[test]
fn convergence_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let study = |problem: &str, scheme: &str, alpha: &str| {
        let (csv, summary) = ok(
            dir.path(),
            &[
                "convergence",
                "--problem",
                problem,
                "--scheme",
                scheme,
                "--alpha",
                alpha,
                "--h-min-exp",
                "12",
                "--h-max-exp",
                "6",
            ],
        );
        assert!(csv.starts_with("h,E_r\n"));
        assert_eq!(rows(&csv).len(), 7);
        assert_eq!(slope(&csv), field(&summary, "slope"));
        slope(&csv)
    };
    assert!((study("scalar", "ie", "0.3") - 1.0).abs() < 0.15);
    assert!((study("scalar", "mcn", "0.3") - 1.3).abs() < 0.15);
    assert!((study("heat1d", "mcn", "0.9") - 1.9).abs() < 0.15);
}

#[test]
fn convergence_reuses_the_cached_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = [
        "convergence",
        "--problem",
        "scalar",
        "--alpha",
        "0.5",
        "--h-min-exp",
        "9",
        "--h-max-exp",
        "5",
        "--cache-dir",
        cache.to_str().unwrap(),
    ];
    let (first, _) = ok(dir.path(), &args);
    let files: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(files.len(), 1);
    let (second, _) = ok(dir.path(), &args);
    assert_eq!(first, second);
    let mut fresh = args.to_vec();
    fresh.push("--no-cache");
    assert_eq!(ok(dir.path(), &fresh).0, first);
}

#[test]
fn compare_against_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = ok(
        dir.path(),
        &[
            "compare", "--alpha", "1", "--scheme", "ie", "--h", "0.1", "--T", "1",
        ],
    );
    assert!(csv.starts_with("t,u_scheme,u_oracle,u_analytic,diff\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 11);
    assert!(r
        .iter()
        .all(|row| row[4] <= 1e-12 && (row[1] - row[2]).abs() <= 1e-12));

    let max_err = |h: &str| {
        let (csv, summary) = ok(
            dir.path(),
            &["compare", "--alpha", "0.5", "--h", h, "--T", "1"],
        );
        let r = rows(&csv);
        let diff = r.iter().map(|row| row[4]).fold(0.0, f64::max);
        assert_eq!(diff, field(&summary, "max_diff"));
        (
            diff,
            r.iter()
                .map(|row| (row[1] - row[3]).abs())
                .fold(0.0, f64::max),
        )
    };
    let (diff, coarse) = max_err("0.0009765625");
    assert!(diff <= 5e-3);
    let (_, fine) = max_err("0.00048828125");
    assert!(fine < coarse);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["kernel", "--h", "1e-3"],
        &[
            "run",
            "--problem",
            "scalar",
            "--alpha",
            "0.5",
            "--scheme",
            "theta",
            "--h",
            "0.1",
        ],
        &[
            "run",
            "--problem",
            "scalar",
            "--alpha",
            "0.5",
            "--scheme",
            "ie",
            "--theta",
            "0.5",
            "--h",
            "0.1",
        ],
        &[
            "run",
            "--problem",
            "scalar",
            "--alpha",
            "0.5",
            "--h",
            "2",
            "--T",
            "1",
        ],
        &[
            "run",
            "--problem",
            "scalar",
            "--alpha",
            "0.5",
            "--h",
            "0.3",
            "--T",
            "1",
        ],
        &[
            "convergence",
            "--problem",
            "scalar",
            "--alpha",
            "0.5",
            "--h-min-exp",
            "8",
            "--h-max-exp",
            "6",
        ],
        &["compare", "--alpha", "0.5", "--h", "0.1", "--unknown", "3"],
    ] {
        let o = soefrac(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(soefrac(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn module_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // the oracle refuses quadratic-cost runs of this size
    let o = soefrac(
        dir.path(),
        &[
            "compare",
            "--alpha",
            "0.5",
            "--h",
            "1e-6",
            "--T",
            "1",
            "--no-cache",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .starts_with("soefrac: "));
    let blocked = dir.path().join("missing").join("k.json");
    std::fs::write(dir.path().join("missing"), "a file, not a directory").unwrap();
    let o = soefrac(
        dir.path(),
        &[
            "kernel",
            "--alpha",
            "0.5",
            "--h",
            "1e-3",
            "--out",
            blocked.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# scalar decay\nproblem = scalar\nalpha = 1\nscheme = ie\nh = 0.1\nT = 0.1\nlambda = -3\nno_cache = true\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (from_file, _) = ok(dir.path(), &["run", "--config", cfg]);
    assert!((rows(&from_file)[1][1] - 1.0 / 1.3).abs() < 1e-15);
    let (overridden, _) = ok(dir.path(), &["run", "--config", cfg, "--lambda", "-1"]);
    assert!((rows(&overridden)[1][1] - 1.0 / 1.1).abs() < 1e-15);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "alpha = 0.5\nwidth = 3\n").unwrap();
    let o = soefrac(
        dir.path(),
        &["kernel", "--h", "1e-3", "--config", bad.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_thread_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_soefrac"))
        .args(["kernel", "--alpha", "0.5", "--h", "1e-3"])
        .env("SOEFRAC_THREADS", "zero")
        .env("SOEFRAC_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
