//! Parameter sweeps: the same scenario re-run across the values of one key.
//!
//! A sweep point applies `key=value` as an override, validates, and runs.
//! Failures are captured per point so one bad value does not abort the rest.
//! Points run in parallel by default (results keep the input order); serial
//! and parallel sweeps produce identical reports.

use rayon::prelude::*;

use crate::config::{self, ScenarioConfig};
use crate::engine;
use crate::metrics::SimulationReport;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// The raw override value, e.g. "14.88mpps".
    pub value: String,
    pub outcome: Result<SimulationReport, String>,
}

pub fn run_sweep(
    base: &ScenarioConfig,
    key: &str,
    values: &[String],
    parallel: bool,
) -> Vec<SweepPoint> {
    let one = |value: &String| -> SweepPoint {
        let mut cfg = base.clone();
        let outcome = config::apply_override(&mut cfg, key, value)
            .map_err(|e| e.to_string())
            .and_then(|()| engine::run(&cfg).map_err(|e| e.to_string()));
        SweepPoint {
            value: value.clone(),
            outcome,
        }
    };
    if parallel {
        values.par_iter().map(one).collect()
    } else {
        values.iter().map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::ArrivalKind;

    fn quick_base() -> ScenarioConfig {
        ScenarioConfig {
            arrival: ArrivalKind::Poisson { rate_pps: 2e6 },
            horizon_ns: 20_000_000,
            warmup_ns: 2_000_000,
            stats_window_ns: 2_000_000,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let base = quick_base();
        let values: Vec<String> = ["1mpps", "2mpps", "4mpps"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let serial = run_sweep(&base, "rate", &values, false);
        let parallel = run_sweep(&base, "rate", &values, true);
        assert_eq!(serial, parallel);
        assert!(serial.iter().all(|p| p.outcome.is_ok()));
        let served: Vec<u64> = serial
            .iter()
            .map(|p| p.outcome.as_ref().unwrap().totals.served)
            .collect();
        assert!(served[0] < served[1] && served[1] < served[2]);
    }

    #[test]
    fn bad_points_fail_alone() {
        let base = quick_base();
        let values: Vec<String> = ["1mpps", "oops", "2mpps"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let points = run_sweep(&base, "rate", &values, true);
        assert!(points[0].outcome.is_ok());
        assert!(points[1].outcome.is_err());
        assert!(points[2].outcome.is_ok());
        assert_eq!(points[1].value, "oops");
    }

    #[test]
    fn sweeping_structure_keys_is_refused_per_point() {
        let base = quick_base();
        let values = vec!["1s:1mpps".to_string()];
        let points = run_sweep(&base, "ramp_step", &values, false);
        assert!(points[0].outcome.is_err());
    }
}
