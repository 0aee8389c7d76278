//! Simulation and closed-form analysis of intermittent packet retrieval.
//!
//! The modeled system runs M worker threads against N shared receive
//! queues. A thread sleeps, wakes, and trylocks one queue: on success it
//! drains the queue at a fixed per-packet rate and goes back to sleep for
//! a short timeout; on failure it re-targets a random queue and sleeps a
//! long timeout. Queue time therefore alternates between vacation periods
//! (everyone asleep, packets accumulate) and busy periods (one owner
//! drains). An optional per-queue controller estimates occupancy from the
//! observed busy/vacation ratio and adapts the short timeout so the mean
//! vacation tracks a target.
//!
//! The crate has two halves that check each other:
//!
//! * [`analytics`] evaluates the stationary renewal model in closed form
//!   (vacation distributions, mean vacations, occupancy fixed point, the
//!   adaptive timer rule).
//! * [`engine`] simulates the same system event by event, deterministically,
//!   from an arrival stream built by [`workload`]; [`metrics`] turns the raw
//!   run into a report and measures empirical-vs-analytic distribution
//!   distances.
//!
//! [`config`], [`presets`], [`sweep`], and [`output`] provide the scenario
//! file format, canned experiment setups, parameter sweeps, and CSV/report
//! emission used by the `intermit` binary. The `examples/` directory is the
//! guided tour: one runnable program per capability.
//!
//! All simulator timestamps and durations are integer nanoseconds
//! ([`Nanos`]). Every run is reproducible: the three named seed streams
//! (arrivals, jitter, queue choice) fully determine a report.

pub mod analytics;
pub mod config;
pub mod controller;
pub mod engine;
pub mod metrics;
pub mod output;
pub mod presets;
pub mod sweep;
pub mod workload;

/// Integer nanoseconds, the time base for all simulator clocks and durations.
pub type Nanos = u64;

/// Nanoseconds per second, for rate (packets/second) conversions.
pub const NS_PER_SEC: f64 = 1e9;
