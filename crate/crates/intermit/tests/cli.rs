//! End-to-end checks of the installed binary: exit codes, analytic output
//! against hand-computed values, config diagnostics with line numbers, run
//! directories that round-trip, preset listing, override order, sweep
//! serial/parallel agreement, the output-directory environment fallback, and
//! trace replay determinism.

use std::process::{Command, Output};

use intermit::workload::{write_trace_file, ArrivalGen, ArrivalKind, ArrivalSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_intermit"))
}

fn run_args(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn intermit")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run_args(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

fn stderr_err(args: &[&str]) -> String {
    let out = run_args(args);
    assert!(!out.status.success(), "expected failure for {args:?}");
    String::from_utf8(out.stderr).expect("utf8 stderr")
}

fn analytic_f64(args: &[&str]) -> f64 {
    stdout_ok(args).trim().parse().expect("numeric output")
}

#[test]
fn analytic_values_match_closed_forms() {
    // M * target / (1 + rho + rho^2) at M = 3, rho = 0.5, target 10us.
    let ts = analytic_f64(&[
        "analytic",
        "adaptive-ts",
        "--m",
        "3",
        "--rho",
        "0.5",
        "--target",
        "10us",
    ]);
    assert!((ts - 30_000.0 / 1.75).abs() < 1e-9, "adaptive-ts {ts}");

    // Per-queue contention is M/N = 2 threads: 2 * 15us / (1 + 0.5).
    let mq = analytic_f64(&[
        "analytic",
        "adaptive-ts-mq",
        "--m",
        "8",
        "--n",
        "4",
        "--rho",
        "0.5",
        "--target",
        "15us",
    ]);
    assert!((mq - 20_000.0).abs() < 1e-9, "adaptive-ts-mq {mq}");

    // 1 - (1 - 20/500)^2 with two competitors on the long timer.
    let cdf = analytic_f64(&[
        "analytic",
        "cdf-high",
        "--x",
        "20us",
        "--m",
        "3",
        "--t-short",
        "50us",
        "--t-long",
        "500us",
    ]);
    assert!((cdf - 0.0784).abs() < 1e-12, "cdf-high {cdf}");

    // Past the short timer the law saturates: the atom closes the CDF.
    let capped = analytic_f64(&[
        "analytic",
        "cdf-high",
        "--x",
        "20us",
        "--m",
        "3",
        "--t-short",
        "10us",
        "--t-long",
        "500us",
    ]);
    assert!(
        (capped - 1.0).abs() < 1e-12,
        "cdf-high at x >= t_short {capped}"
    );

    // V * rho / (1 - rho) at rho = 0.5 returns the vacation itself.
    let busy = analytic_f64(&[
        "analytic",
        "expected-busy",
        "--vacation",
        "10us",
        "--lambda",
        "2.5mpps",
        "--mu",
        "5mpps",
    ]);
    assert!((busy - 10_000.0).abs() < 1e-9, "expected-busy {busy}");

    let rho = analytic_f64(&[
        "analytic",
        "load-from-periods",
        "--busy",
        "10us",
        "--vacation",
        "10us",
    ]);
    assert!((rho - 0.5).abs() < 1e-12, "load-from-periods {rho}");

    // Equal timers collapse the mean to T/M regardless of the tail shape.
    let mean = analytic_f64(&[
        "analytic",
        "mean-high",
        "--m",
        "2",
        "--t-short",
        "50us",
        "--t-long",
        "50us",
    ]);
    assert!((mean - 25_000.0).abs() < 1e-9, "mean-high {mean}");

    // (1 - (0.49)^3) / (3 * (0.5/10us + 0.5/500us)) lands on exactly 5767 ns.
    let exact = analytic_f64(&[
        "analytic",
        "mean-general",
        "--primary-prob",
        "0.5",
        "--m",
        "3",
        "--t-short",
        "10us",
        "--t-long",
        "500us",
    ]);
    assert!((exact - 5767.0).abs() < 1e-9, "mean-general {exact}");

    // The long-backup approximation (ts/M)(1 - (1-p)^M)/p sits just above it.
    let approx = analytic_f64(&[
        "analytic",
        "mean-general",
        "--primary-prob",
        "0.5",
        "--approx",
        "--m",
        "3",
        "--t-short",
        "10us",
        "--t-long",
        "500us",
    ]);
    assert!(
        (approx - 17_500.0 / 3.0).abs() < 1e-9,
        "mean-general --approx {approx}"
    );
}

#[test]
fn bad_config_reports_every_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.cfg");
    std::fs::write(
        &path,
        "m_threads=2\nmu=not-a-rate\n# comment line\nthis has no equals\nt_short=10us\n",
    )
    .unwrap();
    let err = stderr_err(&["run", "--config", path.to_str().unwrap()]);
    assert!(err.contains("line 2"), "missing line 2 in: {err}");
    assert!(err.contains("line 4"), "missing line 4 in: {err}");
    assert!(err.contains("mu"), "missing key name in: {err}");
}

#[test]
fn bad_set_and_unknown_preset_fail_cleanly() {
    let err = stderr_err(&["run", "--set", "m_threads"]);
    assert!(err.contains("KEY=VALUE"), "unexpected: {err}");

    let err = stderr_err(&["run", "--set", "no_such_key=5"]);
    assert!(err.contains("no_such_key"), "unexpected: {err}");

    let err = stderr_err(&["run", "--preset", "fig99"]);
    assert!(err.contains("fig99"), "unexpected: {err}");
}

#[test]
fn preset_list_names_every_builtin() {
    let listing = stdout_ok(&["preset", "--list"]);
    for name in [
        "fig3",
        "fig4",
        "fig5",
        "fig7-ramp",
        "table1",
        "table4-unbalanced",
    ] {
        assert!(listing.contains(name), "catalog missing {name}: {listing}");
    }
    // Printed preset text is itself a loadable config.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig3.cfg");
    std::fs::write(&path, stdout_ok(&["preset", "fig3"])).unwrap();
    let summary = stdout_ok(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--set",
        "horizon=10ms",
        "--set",
        "warmup=1ms",
    ]);
    assert!(
        summary.contains("conservation: arrivals = served + dropped + backlog + in_service: OK")
    );
}

#[test]
fn run_directory_roundtrips_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let again = dir.path().join("again");
    stdout_ok(&[
        "run",
        "--set",
        "horizon=50ms",
        "--set",
        "warmup=5ms",
        "--set",
        "rate=1mpps",
        "--set",
        "mu=5mpps",
        "--out",
        first.to_str().unwrap(),
    ]);
    for f in [
        "summary.txt",
        "config.txt",
        "queues.csv",
        "threads.csv",
        "latency_histogram.csv",
        "throughput.csv",
        "controller_trace.csv",
    ] {
        assert!(first.join(f).exists(), "missing {f}");
    }
    // Re-running from the emitted config reproduces the run bit for bit.
    let cfg = first.join("config.txt");
    stdout_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    let a = std::fs::read(first.join("summary.txt")).unwrap();
    let b = std::fs::read(again.join("summary.txt")).unwrap();
    assert_eq!(
        a, b,
        "summary differs between original and config round-trip"
    );
    let qa = std::fs::read(first.join("queues.csv")).unwrap();
    let qb = std::fs::read(again.join("queues.csv")).unwrap();
    assert_eq!(
        qa, qb,
        "queues.csv differs between original and config round-trip"
    );
}

#[test]
fn later_set_overrides_win() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    stdout_ok(&[
        "run",
        "--preset",
        "fig3",
        "--set",
        "m_threads=3",
        "--set",
        "m_threads=4",
        "--set",
        "horizon=5ms",
        "--set",
        "warmup=0ms",
        "--out",
        out.to_str().unwrap(),
    ]);
    let cfg = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(cfg.contains("m_threads=4"), "override not applied: {cfg}");
}

#[test]
fn sweep_serial_matches_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let par = dir.path().join("par");
    let ser = dir.path().join("ser");
    let common = [
        "sweep",
        "--axis",
        "rate",
        "--values",
        "1mpps,2mpps,3mpps",
        "--set",
        "horizon=20ms",
        "--set",
        "warmup=2ms",
        "--set",
        "mu=5mpps",
    ];
    let mut a = common.to_vec();
    a.extend(["--out", par.to_str().unwrap()]);
    stdout_ok(&a);
    let mut b = common.to_vec();
    b.extend(["--serial", "--out", ser.to_str().unwrap()]);
    stdout_ok(&b);
    let pa = std::fs::read(par.join("sweep.csv")).unwrap();
    let sa = std::fs::read(ser.join("sweep.csv")).unwrap();
    assert!(!pa.is_empty());
    assert_eq!(pa, sa, "parallel and serial sweeps disagree");
}

#[test]
fn out_dir_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--set", "horizon=5ms", "--set", "warmup=0ms"])
        .env("INTERMIT_OUT_DIR", dir.path())
        .output()
        .expect("spawn intermit");
    assert!(out.status.success());
    assert!(
        dir.path().join("summary.txt").exists(),
        "env out dir ignored"
    );
}

#[test]
fn trace_replay_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("arrivals.csv");
    let spec = ArrivalSpec {
        kind: ArrivalKind::Poisson { rate_pps: 1e6 },
        seed: 42,
    };
    let gen = ArrivalGen::new(&spec, 1, 10_000_000).unwrap();
    write_trace_file(&trace, gen).unwrap();

    let args = [
        "run",
        "--trace",
        trace.to_str().unwrap(),
        "--set",
        "horizon=10ms",
        "--set",
        "warmup=0ms",
        "--set",
        "mu=5mpps",
    ];
    let a = stdout_ok(&args);
    let b = stdout_ok(&args);
    assert_eq!(a, b, "replaying the same trace must match byte for byte");
    assert!(a.contains("conservation: arrivals = served + dropped + backlog + in_service: OK"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time_ns,queue,flow\n100,0,1\n50,0,2\n").unwrap();
    let err = stderr_err(&["run", "--trace", bad.to_str().unwrap()]);
    assert!(err.contains("trace line"), "unexpected: {err}");
}
