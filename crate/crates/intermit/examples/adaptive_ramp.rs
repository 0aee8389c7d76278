//! Adaptive timer tracking a load ramp.
//!
//! Offered load climbs in steps and comes back down while the controller
//! re-solves the short timer from its occupancy estimate. The printout shows,
//! per step, the offered rate, what was served, the timer the controller
//! settled on, and its occupancy estimate. The timer should shrink as load
//! rises and recover symmetrically on the way down. Run with:
//!
//! ```text
//! cargo run --release --example adaptive_ramp
//! ```

use intermit::config::ScenarioConfig;
use intermit::engine;
use intermit::workload::{ArrivalKind, RampStep};

fn main() {
    // A scaled-down ramp: 12 steps of 500ms, peak at 85% of service.
    let mu = 2.925e6;
    let step_ns = 500_000_000u64;
    let peak = 0.85 * mu;
    let steps: Vec<RampStep> = (1..=6)
        .chain((0..6).rev())
        .map(|k| RampStep {
            duration_ns: step_ns,
            rate_pps: k as f64 / 6.0 * peak,
        })
        .collect();
    let n_steps = steps.len();
    let cfg = ScenarioConfig {
        m_threads: 3,
        n_queues: 1,
        target_vacation_ns: 10_000,
        t_long_ns: 500_000,
        adaptation: true,
        mu_pps: mu,
        arrival: ArrivalKind::Ramp { steps },
        horizon_ns: n_steps as u64 * step_ns,
        warmup_ns: 0,
        stats_window_ns: 100_000_000,
        ..ScenarioConfig::default()
    };
    println!("running a {}s ramp...", cfg.horizon_ns / 1_000_000_000);
    let report = engine::run(&cfg).unwrap();

    let windows_per_step = (step_ns / cfg.stats_window_ns) as usize;
    println!(
        "\n{:>4} {:>12} {:>12} {:>12} {:>10} {:>8}",
        "step", "offered_pps", "served_pps", "t_short_us", "rho_est", "drops"
    );
    for s in 0..n_steps {
        let w0 = s * windows_per_step;
        let w1 = w0 + windows_per_step;
        let offered: u64 = report.throughput.offered[w0..w1].iter().sum();
        let served: u64 = report.throughput.served[w0..w1].iter().sum();
        // Mean controller state over the step, sampled at window edges.
        let in_step: Vec<_> = report
            .controller
            .iter()
            .filter(|c| c.time_ns > s as u64 * step_ns && c.time_ns <= (s + 1) as u64 * step_ns)
            .collect();
        let mean_ts =
            in_step.iter().map(|c| c.t_short_ns as f64).sum::<f64>() / in_step.len() as f64;
        let mean_rho = in_step.iter().map(|c| c.rho_est).sum::<f64>() / in_step.len() as f64;
        let span_s = step_ns as f64 / 1e9;
        println!(
            "{s:>4} {:>12.0} {:>12.0} {:>12.2} {:>10.3} {:>8}",
            offered as f64 / span_s,
            served as f64 / span_s,
            mean_ts / 1_000.0,
            mean_rho,
            report.totals.dropped
        );
    }
    println!(
        "\ntotals: arrivals {} served {} dropped {}",
        report.totals.arrivals, report.totals.served, report.totals.dropped
    );
}
