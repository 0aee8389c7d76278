//! Measurement: raw run collectors, the summarized report, the latency
//! histogram, and distribution tests against the closed-form laws.
//!
//! The simulation fills a [`RawRun`] with counters and integrals;
//! [`summarize`] turns that into a [`SimulationReport`] of derived
//! quantities. Reports compare equal (`PartialEq`) iff two runs produced
//! identical results, which is how reproducibility is asserted.
//!
//! Latencies go into a log-linear histogram: exact 1 ns bins up to 16 ns,
//! then 8 bins per octave. Quantiles read the upper edge of the bin holding
//! the nearest-rank sample, so they are conservative by at most one bin
//! width (about 12.5% above 16 ns).

use thiserror::Error;

use crate::analytics::{ModelParams, Regime};
use crate::config::ScenarioConfig;
use crate::Nanos;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("need at least {needed} samples for a distribution test, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// One vacation/busy cycle of one queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleRecord {
    pub v_ns: u64,
    pub b_ns: u64,
    /// Backlog found when the drain started.
    pub n_v: u32,
    /// Packets that arrived during the busy period and were served in it.
    pub n_b: u32,
    pub queue: u16,
    pub thread: u16,
}

/// Controller state snapshot taken at a stats-window boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtlSample {
    pub time_ns: Nanos,
    pub queue: u32,
    pub rho_est: f64,
    pub t_short_ns: Nanos,
}

// ============================================================================
// Raw collectors (filled by the simulation)
// ============================================================================

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CycleAgg {
    pub count: u64,
    /// Cycles that found the queue empty.
    pub zero_count: u64,
    pub sum_v_ns: u64,
    pub sum_b_ns: u64,
    pub sum_n_v: u64,
    pub sum_n_b: u64,
}

impl CycleAgg {
    pub fn add(&mut self, v_ns: u64, b_ns: u64, n_v: u32, n_b: u32) {
        self.count += 1;
        if n_v == 0 {
            self.zero_count += 1;
        }
        self.sum_v_ns += v_ns;
        self.sum_b_ns += b_ns;
        self.sum_n_v += u64::from(n_v);
        self.sum_n_b += u64::from(n_b);
    }

    fn merge(&mut self, other: &CycleAgg) {
        self.count += other.count;
        self.zero_count += other.zero_count;
        self.sum_v_ns += other.sum_v_ns;
        self.sum_b_ns += other.sum_b_ns;
        self.sum_n_v += other.sum_n_v;
        self.sum_n_b += other.sum_n_b;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawQueue {
    pub arrivals: u64,
    pub drops: u64,
    pub served: u64,
    pub backlog_end: u64,
    /// Busy time overlapping the measurement window.
    pub busy_ns_measured: u64,
    /// Full-run time integral of the backlog length, in packet-nanoseconds.
    pub backlog_integral: f64,
    /// Full-run sum of (grab time - arrival time) over grabbed packets.
    pub wait_sum_ns: u64,
    pub grabbed: u64,
    pub tries_measured: u64,
    pub busy_tries_measured: u64,
    pub max_n_v: u32,
    pub max_backlog: u32,
    pub cycles: CycleAgg,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawThread {
    pub wakes: u64,
    pub tries_measured: u64,
    pub busy_tries_measured: u64,
    pub awake_ns_measured: u64,
    pub drains: u64,
    pub served: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRaw {
    pub hist: Vec<u64>,
    pub count: u64,
    pub sum_ns: u64,
    pub max_ns: u64,
}

impl Default for LatencyRaw {
    fn default() -> Self {
        Self {
            hist: vec![0; LATENCY_BINS],
            count: 0,
            sum_ns: 0,
            max_ns: 0,
        }
    }
}

impl LatencyRaw {
    pub fn record(&mut self, latency_ns: u64) {
        self.hist[latency_bin_index(latency_ns)] += 1;
        self.count += 1;
        self.sum_ns += latency_ns;
        self.max_ns = self.max_ns.max(latency_ns);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawRun {
    pub queues: Vec<RawQueue>,
    pub threads: Vec<RawThread>,
    pub latency: LatencyRaw,
    pub cycle_records: Option<Vec<CycleRecord>>,
    pub served_series: Vec<u64>,
    pub offered_series: Vec<u64>,
    pub ctl_series: Vec<CtlSample>,
    /// Packets grabbed but not yet completed when the horizon cut.
    pub in_service_end: u64,
    pub max_vacation_ns: u64,
}

// ============================================================================
// Summarized report
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Totals {
    pub arrivals: u64,
    pub served: u64,
    pub dropped: u64,
    pub backlog_end: u64,
    pub in_service_end: u64,
}

impl Totals {
    /// Every packet is accounted for exactly once.
    pub fn conserved(&self) -> bool {
        self.arrivals == self.served + self.dropped + self.backlog_end + self.in_service_end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CycleSummary {
    pub count: u64,
    pub zero_count: u64,
    pub mean_v_ns: f64,
    pub mean_b_ns: f64,
    pub mean_n_v: f64,
    pub mean_n_b: f64,
}

impl CycleSummary {
    fn from_agg(agg: &CycleAgg) -> Self {
        let n = agg.count.max(1) as f64;
        Self {
            count: agg.count,
            zero_count: agg.zero_count,
            mean_v_ns: agg.sum_v_ns as f64 / n,
            mean_b_ns: agg.sum_b_ns as f64 / n,
            mean_n_v: agg.sum_n_v as f64 / n,
            mean_n_b: agg.sum_n_b as f64 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueReport {
    pub arrivals: u64,
    pub drops: u64,
    pub served: u64,
    pub backlog_end: u64,
    /// Fraction of the measurement window this queue was being drained.
    pub rho_measured: f64,
    /// Time-average backlog length over the full run.
    pub mean_backlog: f64,
    /// Mean wait from arrival to grab over the full run.
    pub mean_wait_ns: f64,
    /// Fraction of lock attempts that found the queue already locked.
    pub busy_try_fraction: f64,
    pub tries: u64,
    pub max_n_v: u32,
    pub max_backlog: u32,
    pub cycles: CycleSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreadReport {
    pub wakes: u64,
    pub drains: u64,
    pub served: u64,
    pub busy_try_fraction: f64,
    /// Fraction of the measurement window this thread was awake.
    pub awake_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistBin {
    pub lo_ns: u64,
    /// Inclusive upper edge.
    pub hi_ns: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub count: u64,
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub p999_ns: u64,
    pub max_ns: u64,
    /// Non-empty bins only.
    pub bins: Vec<HistBin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub window_ns: Nanos,
    pub served: Vec<u64>,
    pub offered: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: ScenarioConfig,
    pub totals: Totals,
    pub queues: Vec<QueueReport>,
    pub threads: Vec<ThreadReport>,
    pub latency: LatencyReport,
    pub cycles: CycleSummary,
    pub cycle_records: Option<Vec<CycleRecord>>,
    pub throughput: SeriesReport,
    pub controller: Vec<CtlSample>,
    /// Mean awake fraction across threads: the CPU cost stand-in.
    pub cpu_proxy: f64,
    pub max_vacation_ns: u64,
}

pub fn summarize(raw: RawRun, cfg: &ScenarioConfig) -> SimulationReport {
    let span_ns = (cfg.horizon_ns - cfg.warmup_ns) as f64;
    let frac = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };

    let mut totals = Totals {
        in_service_end: raw.in_service_end,
        ..Totals::default()
    };
    let mut cycles_all = CycleAgg::default();
    let queues: Vec<QueueReport> = raw
        .queues
        .iter()
        .map(|q| {
            totals.arrivals += q.arrivals;
            totals.served += q.served;
            totals.dropped += q.drops;
            totals.backlog_end += q.backlog_end;
            cycles_all.merge(&q.cycles);
            QueueReport {
                arrivals: q.arrivals,
                drops: q.drops,
                served: q.served,
                backlog_end: q.backlog_end,
                rho_measured: q.busy_ns_measured as f64 / span_ns,
                mean_backlog: q.backlog_integral / cfg.horizon_ns as f64,
                mean_wait_ns: frac(q.wait_sum_ns, q.grabbed),
                busy_try_fraction: frac(q.busy_tries_measured, q.tries_measured),
                tries: q.tries_measured,
                max_n_v: q.max_n_v,
                max_backlog: q.max_backlog,
                cycles: CycleSummary::from_agg(&q.cycles),
            }
        })
        .collect();

    let threads: Vec<ThreadReport> = raw
        .threads
        .iter()
        .map(|t| ThreadReport {
            wakes: t.wakes,
            drains: t.drains,
            served: t.served,
            busy_try_fraction: frac(t.busy_tries_measured, t.tries_measured),
            awake_fraction: t.awake_ns_measured as f64 / span_ns,
        })
        .collect();

    let cpu_proxy = if threads.is_empty() {
        0.0
    } else {
        threads.iter().map(|t| t.awake_fraction).sum::<f64>() / threads.len() as f64
    };

    let lat = &raw.latency;
    let latency = LatencyReport {
        count: lat.count,
        mean_ns: frac(lat.sum_ns, lat.count),
        p50_ns: histogram_quantile(&lat.hist, lat.count, 0.50),
        p99_ns: histogram_quantile(&lat.hist, lat.count, 0.99),
        p999_ns: histogram_quantile(&lat.hist, lat.count, 0.999),
        max_ns: lat.max_ns,
        bins: lat
            .hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| HistBin {
                lo_ns: latency_bin_lo(i),
                hi_ns: latency_bin_lo(i + 1) - 1,
                count: c,
            })
            .collect(),
    };

    SimulationReport {
        config: cfg.clone(),
        totals,
        queues,
        threads,
        latency,
        cycles: CycleSummary::from_agg(&cycles_all),
        cycle_records: raw.cycle_records,
        throughput: SeriesReport {
            window_ns: cfg.stats_window_ns,
            served: raw.served_series,
            offered: raw.offered_series,
        },
        controller: raw.ctl_series,
        cpu_proxy,
        max_vacation_ns: raw.max_vacation_ns,
    }
}

// ============================================================================
// Latency histogram
// ============================================================================

/// 16 exact bins, then 8 per octave up to u64::MAX.
pub const LATENCY_BINS: usize = 496;

pub fn latency_bin_index(v_ns: u64) -> usize {
    if v_ns < 16 {
        v_ns as usize
    } else {
        let msb = 63 - v_ns.leading_zeros() as usize;
        16 + (msb - 4) * 8 + ((v_ns >> (msb - 3)) & 7) as usize
    }
}

/// Lower edge of a bin; `latency_bin_lo(i + 1) - 1` is the inclusive upper
/// edge of bin `i`.
pub fn latency_bin_lo(idx: usize) -> u64 {
    if idx < 16 {
        idx as u64
    } else if idx >= LATENCY_BINS {
        u64::MAX
    } else {
        let octave = (idx - 16) / 8;
        let slot = ((idx - 16) % 8) as u64;
        (8 + slot) << (octave + 1)
    }
}

/// Nearest-rank quantile, reported as the upper edge of the holding bin.
pub fn histogram_quantile(hist: &[u64], count: u64, q: f64) -> u64 {
    if count == 0 {
        return 0;
    }
    let rank = ((q * count as f64).ceil() as u64).clamp(1, count);
    let mut seen = 0;
    for (i, &c) in hist.iter().enumerate() {
        seen += c;
        if seen >= rank {
            return latency_bin_lo(i + 1) - 1;
        }
    }
    latency_bin_lo(LATENCY_BINS) // unreachable when count matches hist
}

// ============================================================================
// Distribution comparison
// ============================================================================

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionComparison {
    /// Kolmogorov-Smirnov statistic: sup |F_empirical - F_model|.
    pub ks: f64,
    pub n: usize,
}

pub const KS_MIN_SAMPLES: usize = 10_000;

/// Pulls the vacation lengths of cycles that actually found packets; the
/// closed-form law describes vacations conditioned on work arriving.
pub fn vacation_samples(records: &[CycleRecord]) -> Vec<u64> {
    records
        .iter()
        .filter(|c| c.n_v >= 1)
        .map(|c| c.v_ns)
        .collect()
}

/// KS distance between empirical vacations (in ns) and the model CDF.
/// `params` must be expressed in nanoseconds too. Handles the point mass
/// the short timer puts at `t_short` under the high-load law.
pub fn compare_vacations(
    samples_ns: &[u64],
    params: &ModelParams,
    regime: Regime,
) -> Result<DistributionComparison, MetricsError> {
    if samples_ns.len() < KS_MIN_SAMPLES {
        return Err(MetricsError::InsufficientData {
            needed: KS_MIN_SAMPLES,
            got: samples_ns.len(),
        });
    }
    let mut sorted: Vec<u64> = samples_ns.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;

    let cdf = |x: f64| crate::analytics::vacation_cdf(x, params, regime);
    // Left limit of the model CDF, which differs from the CDF only at the
    // short-timer atom.
    let atom_at = params.t_short;
    let atom_mass = match regime {
        Regime::HighLoad => crate::analytics::vacation_atom_high_load(params),
        Regime::LowLoad => 0.0,
    };
    let cdf_minus = |x: f64| {
        if regime == Regime::HighLoad && x == atom_at {
            1.0 - atom_mass
        } else {
            cdf(x)
        }
    };

    let mut ks: f64 = 0.0;
    let mut below = 0u64;
    let mut i = 0usize;
    let mut saw_atom_point = false;
    while i < sorted.len() {
        let t = sorted[i];
        let mut c = 0u64;
        while i < sorted.len() && sorted[i] == t {
            c += 1;
            i += 1;
        }
        let x = t as f64;
        if x == atom_at {
            saw_atom_point = true;
        }
        let lo = below as f64 / n;
        let hi = (below + c) as f64 / n;
        ks = ks.max((cdf_minus(x) - lo).abs()).max((cdf(x) - hi).abs());
        below += c;
    }
    if !saw_atom_point && regime == Regime::HighLoad {
        // No sample landed exactly on the timer; still check the jump there.
        let below_atom = sorted.partition_point(|&t| (t as f64) < atom_at) as f64 / n;
        ks = ks.max((cdf_minus(atom_at) - below_atom).abs());
        ks = ks.max((cdf(atom_at) - below_atom).abs());
    }
    Ok(DistributionComparison {
        ks,
        n: sorted.len(),
    })
}
