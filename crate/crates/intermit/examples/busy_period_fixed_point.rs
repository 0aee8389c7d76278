//! Busy-period fixed point of the vacation cycle.
//!
//! One thread, one queue, fixed 10us timer: each cycle sleeps V, then works
//! until the backlog that piled up during V plus everything arriving during
//! the drain itself is gone. The drain extends geometrically, so the mean
//! busy period should land on E[B] = E[V] * rho / (1 - rho). This runs a
//! load ladder and prints both sides. Run with:
//!
//! ```text
//! cargo run --release --example busy_period_fixed_point
//! ```

use intermit::config::ScenarioConfig;
use intermit::engine;
use intermit::workload::ArrivalKind;

fn main() {
    let mu = 5e6;
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "rho", "mean_V_us", "mean_B_us", "B/V", "rho/(1-rho)", "cycles"
    );
    for rho in [0.2, 0.3, 0.5, 0.7, 0.8] {
        let cfg = ScenarioConfig {
            m_threads: 1,
            n_queues: 1,
            t_short_ns: 10_000,
            t_long_ns: 500_000,
            adaptation: false,
            mu_pps: mu,
            arrival: ArrivalKind::Poisson { rate_pps: rho * mu },
            horizon_ns: 2_000_000_000,
            warmup_ns: 200_000_000,
            ..ScenarioConfig::default()
        };
        let report = engine::run(&cfg).unwrap();
        let c = report.cycles;
        let measured = c.mean_b_ns / c.mean_v_ns;
        let predicted = rho / (1.0 - rho);
        println!(
            "{rho:>5.2} {:>10.3} {:>10.3} {:>10.4} {:>10.4} {:>8}",
            c.mean_v_ns / 1_000.0,
            c.mean_b_ns / 1_000.0,
            measured,
            predicted,
            c.count
        );
    }
    println!("\npacket counts behave the same way: mean N_B / mean N_V -> rho/(1-rho).");
}
