//! Measured vacation distribution against the closed-form law.
//!
//! Three threads poll one queue with equal 50us timers at 80% load, so every
//! wake that loses the race backs off by the same amount and the vacation
//! seen by the queue is the minimum of uniform residuals. The run collects
//! per-cycle records, prints a coarse histogram next to the model density,
//! and reports the Kolmogorov-Smirnov distance. Run with:
//!
//! ```text
//! cargo run --release --example single_queue_vacations
//! ```

use intermit::analytics::{vacation_atom_high_load, vacation_cdf, ModelParams, Regime};
use intermit::engine;
use intermit::metrics::{compare_vacations, vacation_samples};
use intermit::presets;

fn main() {
    let mut cfg = presets::preset("fig3").unwrap();
    // Cycles run ~83us here (V ~16.7us, B four times that at rho = 0.8), so
    // 1.3s of measurement gives ~15k samples, enough for the KS gate.
    cfg.horizon_ns = 1_500_000_000;
    cfg.warmup_ns = 200_000_000;
    println!(
        "running {} threads on {} queue for {}ms...",
        cfg.m_threads,
        cfg.n_queues,
        cfg.horizon_ns / 1_000_000
    );

    let report = engine::run(&cfg).unwrap();
    let records = report.cycle_records.as_ref().unwrap();
    let samples = vacation_samples(records);
    let params = ModelParams::new(
        cfg.m_threads,
        cfg.n_queues,
        cfg.t_short_ns as f64,
        cfg.t_long_ns as f64,
        cfg.target_vacation_ns as f64,
    )
    .unwrap();

    println!(
        "cycles {} (with packets {}), measured rho {:.4}",
        records.len(),
        samples.len(),
        report.queues[0].rho_measured
    );

    let bins = 10usize;
    let width = cfg.t_short_ns as f64 / bins as f64;
    let mut hist = vec![0u64; bins + 1];
    for &v in &samples {
        let idx = if v >= cfg.t_short_ns {
            bins
        } else {
            (v as f64 / width) as usize
        };
        hist[idx.min(bins)] += 1;
    }
    let n = samples.len() as f64;
    println!("\n{:>12} {:>10} {:>10}", "bin_us", "measured", "model");
    for (i, &count) in hist.iter().enumerate().take(bins) {
        let lo = i as f64 * width;
        let hi = lo + width;
        let model = vacation_cdf(hi - 0.5, &params, Regime::HighLoad)
            - vacation_cdf(lo, &params, Regime::HighLoad);
        println!(
            "{:>5.1}-{:<6.1} {:>10.5} {:>10.5}",
            lo / 1_000.0,
            hi / 1_000.0,
            count as f64 / n,
            model
        );
    }
    println!(
        "{:>12} {:>10.5} {:>10.5}   <- point mass at the timer",
        "atom",
        hist[bins] as f64 / n,
        vacation_atom_high_load(&params)
    );

    let cmp = compare_vacations(&samples, &params, Regime::HighLoad).unwrap();
    println!(
        "\nKS distance vs high-load law: {:.5} over {} samples",
        cmp.ks, cmp.n
    );
    println!("cpu awake fraction: {:.4}", report.cpu_proxy);
}
