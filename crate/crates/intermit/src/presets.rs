//! Canned scenarios for the experiments the simulator was built around.
//!
//! Each preset is an ordinary [`ScenarioConfig`]; `--set` overrides apply on
//! top. Names are stable so results can be reproduced by name alone.

use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::workload::{assign_queue, ArrivalKind, FlowChoice, FlowEntry};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresetError {
    #[error("unknown preset '{name}'; available: {available}")]
    Unknown { name: String, available: String },
}

/// Name and one-line description of every preset, in display order.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "fig3",
            "3 threads, one queue, equal 50us timers, rho 0.8: vacation distribution study",
        ),
        (
            "fig4",
            "3 threads, adaptive 10us vacation target, rho 0.5: latency under adaptation",
        ),
        (
            "fig5",
            "fig4 operating point sized for awake-fraction comparisons (sweep rate, set always_poll=on for the baseline)",
        ),
        (
            "fig7-ramp",
            "60s staircase load ramp, adaptive timers: tracking behavior over time",
        ),
        (
            "table1",
            "latency percentiles at a 10us vacation target (alias of table1-row2)",
        ),
        (
            "table1-row1",
            "latency percentiles at a 5us vacation target",
        ),
        (
            "table1-row2",
            "latency percentiles at a 10us vacation target",
        ),
        (
            "table1-row3",
            "latency percentiles at a 12us vacation target",
        ),
        (
            "table1-row4",
            "latency percentiles at a 15us vacation target",
        ),
        (
            "table1-row5",
            "latency percentiles at a 20us vacation target",
        ),
        (
            "table4-unbalanced",
            "6 threads, 3 queues, one hot flow: per-queue adaptation under skew",
        ),
    ]
}

/// Resolves a preset by name.
pub fn preset(name: &str) -> Result<ScenarioConfig, PresetError> {
    let cfg = match name {
        "fig3" => fig3(),
        "fig4" => fig4(),
        "fig5" => fig5(),
        "fig7-ramp" => fig7_ramp(),
        "table1" | "table1-row2" => table1_row(10_000),
        "table1-row1" => table1_row(5_000),
        "table1-row3" => table1_row(12_000),
        "table1-row4" => table1_row(15_000),
        "table1-row5" => table1_row(20_000),
        "table4-unbalanced" => table4_unbalanced(),
        other => {
            let names: Vec<&str> = catalog().iter().map(|(n, _)| *n).collect();
            return Err(PresetError::Unknown {
                name: other.to_string(),
                available: names.join(", "),
            });
        }
    };
    cfg.validate().expect("presets must validate");
    Ok(cfg)
}

/// Equal timers make every thread a 50us poller; at rho = 0.8 the vacation
/// distribution shows the uniform-residual shape with its atom at the timer.
fn fig3() -> ScenarioConfig {
    ScenarioConfig {
        m_threads: 3,
        n_queues: 1,
        t_short_ns: 50_000,
        t_long_ns: 50_000,
        adaptation: false,
        mu_pps: 29.25e6,
        arrival: ArrivalKind::Poisson { rate_pps: 23.4e6 },
        horizon_ns: 2_000_000_000,
        warmup_ns: 200_000_000,
        vacation_bins: 250,
        ..ScenarioConfig::default()
    }
}

fn fig4() -> ScenarioConfig {
    ScenarioConfig {
        m_threads: 3,
        n_queues: 1,
        target_vacation_ns: 10_000,
        t_long_ns: 500_000,
        adaptation: true,
        mu_pps: 29.25e6,
        arrival: ArrivalKind::Poisson { rate_pps: 14.88e6 },
        horizon_ns: 2_000_000_000,
        warmup_ns: 200_000_000,
        ..ScenarioConfig::default()
    }
}

fn fig5() -> ScenarioConfig {
    ScenarioConfig {
        horizon_ns: 1_000_000_000,
        ..fig4()
    }
}

fn fig7_ramp() -> ScenarioConfig {
    ScenarioConfig {
        m_threads: 3,
        n_queues: 1,
        target_vacation_ns: 10_000,
        t_long_ns: 500_000,
        adaptation: true,
        mu_pps: 29.25e6,
        arrival: ArrivalKind::Ramp {
            steps: crate::workload::ramp_profile_default(),
        },
        horizon_ns: 60_000_000_000,
        warmup_ns: 0,
        stats_window_ns: 100_000_000,
        ..ScenarioConfig::default()
    }
}

fn table1_row(target_vacation_ns: u64) -> ScenarioConfig {
    ScenarioConfig {
        target_vacation_ns,
        ..fig4()
    }
}

/// Three queues, one of them hot: 30% of traffic is one pinned flow, the
/// rest fans out over random flows. Expected per-queue occupancy is about
/// 0.73 on the hot queue and 0.32 on each cold one.
fn table4_unbalanced() -> ScenarioConfig {
    let base = ScenarioConfig {
        m_threads: 6,
        n_queues: 3,
        target_vacation_ns: 15_000,
        t_long_ns: 500_000,
        adaptation: true,
        mu_pps: 10.9e6,
        horizon_ns: 2_000_000_000,
        warmup_ns: 200_000_000,
        ..ScenarioConfig::default()
    };
    let hot = pinned_flow_for_queue(0, base.n_queues, base.seed_arrivals);
    ScenarioConfig {
        arrival: ArrivalKind::FlowMix {
            rate_pps: 14.88e6,
            entries: vec![
                FlowEntry {
                    weight: 0.3,
                    flow: FlowChoice::Id(hot),
                },
                FlowEntry {
                    weight: 0.7,
                    flow: FlowChoice::Random,
                },
            ],
        },
        ..base
    }
}

/// Smallest flow id that the queue hash sends to `queue` under this seed.
/// The generator hashes with the arrival-spec seed, so pass `seed_arrivals`.
pub fn pinned_flow_for_queue(queue: u32, n_queues: u32, seed: u64) -> u64 {
    (0u64..)
        .find(|&id| assign_queue(id, n_queues, seed) == queue)
        .unwrap()
}
