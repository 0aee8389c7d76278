//! Per-queue adaptation under skewed traffic.
//!
//! Six threads share three queues. One flow carries 30% of all traffic and
//! hashes to queue 0, the rest spreads evenly, so queue 0 runs at roughly
//! 0.73 occupancy while the others sit near 0.32. Each queue's controller
//! solves its own timer, so the hot queue ends up polled faster while both
//! cold queues agree with each other. Run with:
//!
//! ```text
//! cargo run --release --example unbalanced_queues
//! ```

use intermit::engine;
use intermit::presets;

fn main() {
    let mut cfg = presets::preset("table4-unbalanced").unwrap();
    cfg.horizon_ns = 800_000_000;
    cfg.warmup_ns = 200_000_000;
    println!(
        "running {} threads over {} queues for {}ms...",
        cfg.m_threads,
        cfg.n_queues,
        cfg.horizon_ns / 1_000_000
    );
    let report = engine::run(&cfg).unwrap();

    println!(
        "\n{:>6} {:>10} {:>8} {:>12} {:>12} {:>12}",
        "queue", "share_%", "rho", "t_short_us", "mean_V_us", "busy_try_%"
    );
    for (i, q) in report.queues.iter().enumerate() {
        // Trailing controller state: mean over the last quarter of samples.
        let ts: Vec<f64> = report
            .controller
            .iter()
            .filter(|c| c.queue == i as u32 && c.time_ns * 4 >= cfg.horizon_ns * 3)
            .map(|c| c.t_short_ns as f64)
            .collect();
        let mean_ts = ts.iter().sum::<f64>() / ts.len() as f64;
        println!(
            "{i:>6} {:>10.2} {:>8.4} {:>12.2} {:>12.2} {:>12.3}",
            100.0 * q.arrivals as f64 / report.totals.arrivals as f64,
            q.rho_measured,
            mean_ts / 1_000.0,
            q.cycles.mean_v_ns / 1_000.0,
            100.0 * q.busy_try_fraction
        );
    }
    println!(
        "\ntarget vacation was {}us on every queue.",
        cfg.target_vacation_ns / 1_000
    );
}
