//! Backup timer trade-off: contention relief vs reaction time.
//!
//! Sweeps the long timer while everything else stays put. A longer backoff
//! keeps losing threads out of the race longer, so the fraction of lock
//! attempts that hit an already-locked queue falls, and with it the wasted
//! wakes; the price is a slower reaction when the incumbent stalls. The last
//! row pins the always-poll baseline, which burns a full CPU per thread.
//! Run with:
//!
//! ```text
//! cargo run --release --example timeout_tradeoff_sweep
//! ```

use intermit::config::ScenarioConfig;
use intermit::engine;
use intermit::sweep::run_sweep;
use intermit::workload::ArrivalKind;

fn main() {
    let mu = 2.925e6;
    let base = ScenarioConfig {
        m_threads: 3,
        n_queues: 1,
        target_vacation_ns: 10_000,
        t_long_ns: 100_000,
        adaptation: true,
        mu_pps: mu,
        arrival: ArrivalKind::Poisson { rate_pps: 0.5 * mu },
        horizon_ns: 1_000_000_000,
        warmup_ns: 200_000_000,
        ..ScenarioConfig::default()
    };
    let values: Vec<String> = ["100us", "200us", "300us", "500us", "700us"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    println!("sweeping t_long at rho = 0.5, M = 3...");
    let points = run_sweep(&base, "t_long", &values, false);

    println!(
        "\n{:>8} {:>12} {:>12} {:>12} {:>10}",
        "t_long", "busy_try_%", "cpu_proxy", "p99_us", "wakes/s"
    );
    for p in &points {
        let r = p.outcome.as_ref().unwrap();
        let busy: f64 =
            r.threads.iter().map(|t| t.busy_try_fraction).sum::<f64>() / r.threads.len() as f64;
        let wakes: u64 = r.threads.iter().map(|t| t.wakes).sum();
        let span_s = (base.horizon_ns - base.warmup_ns) as f64 / 1e9;
        println!(
            "{:>8} {:>12.3} {:>12.4} {:>12.1} {:>10.0}",
            p.value,
            100.0 * busy,
            r.cpu_proxy,
            r.latency.p99_ns as f64 / 1_000.0,
            wakes as f64 / span_s
        );
    }

    let poll = ScenarioConfig {
        always_poll: true,
        ..base
    };
    let r = engine::run(&poll).unwrap();
    println!(
        "{:>8} {:>12} {:>12.4} {:>12.1} {:>10}",
        "poll",
        "-",
        r.cpu_proxy,
        r.latency.p99_ns as f64 / 1_000.0,
        "-"
    );
}
