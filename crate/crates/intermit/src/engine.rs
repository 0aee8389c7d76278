//! Discrete-event simulation of sleep/wake packet retrieval.
//!
//! M worker threads share N receive queues. A sleeping thread wakes, tries
//! the lock on its target queue, and either drains it (winner) or goes back
//! to sleep (loser). Winners grab up to `batch_size` packets at a time and
//! serve them back to back at the queue's drain rate; the busy period ends
//! at the first batch boundary that finds the backlog empty. The winner then
//! sleeps the queue's short timer and stays its primary; losers sleep the
//! long timer and re-target a uniformly random queue.
//!
//! Time is integer nanoseconds. Determinism: the event heap orders by
//! (time, priority, sequence) with arrivals < wakes < batch ends at equal
//! times, and the three random streams (arrivals, jitter, queue re-target)
//! are independently seeded. Equal inputs give byte-equal reports.
//!
//! Arrivals never enter the heap; the generator is merged lazily, which
//! keeps the heap at O(M + N) entries no matter the packet rate.
//!
//! Wake and lock overheads are charged to per-thread awake-time accounting
//! only; they never delay simulated packets. The `always_poll` mode pins
//! thread i to queue i mod N, never sleeps, and drains on arrival: the
//! busy-polling baseline with an awake fraction of exactly 1.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, JitterSpec, ScenarioConfig};
use crate::controller::{ControllerConfig, QueueController, Role};
use crate::metrics::{
    self, CtlSample, CycleRecord, LatencyRaw, RawQueue, RawRun, RawThread, SimulationReport,
};
use crate::workload::{Arrival, ArrivalGen, WorkloadError};
use crate::Nanos;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("trace arrival at {time_ns}ns targets queue {queue}, but the scenario has {n_queues}")]
    TraceQueueOutOfRange {
        time_ns: Nanos,
        queue: u32,
        n_queues: u32,
    },
}

// ============================================================================
// Events
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Wake { thread: u32 },
    BatchEnd { queue: u32 },
}

/// Heap key is (time, prio, seq): arrivals are merged at prio 0, so at equal
/// times a packet lands before a wake is tried and before a batch ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Event {
    time: Nanos,
    prio: u8,
    seq: u64,
    kind: EventKind,
}

const PRIO_WAKE: u8 = 1;
const PRIO_BATCH_END: u8 = 2;

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.prio, self.seq).cmp(&(other.time, other.prio, other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

// ============================================================================
// Simulation state
// ============================================================================

struct QueueSim {
    /// Arrival times of packets waiting to be grabbed.
    backlog: VecDeque<Nanos>,
    locked: bool,
    server: u32,
    drain_start: Nanos,
    /// Vacation that preceded the current busy period.
    vacation_ns: Nanos,
    /// Backlog found at lock acquisition.
    n_v: u32,
    served_in_drain: u64,
    /// Arrival times of the in-flight batch.
    batch: Vec<Nanos>,
    /// End of the previous busy period: the vacation reference point.
    prev_end: Nanos,
    ctl: QueueController,
    last_change: Nanos,
    raw: RawQueue,
}

impl QueueSim {
    /// Extends the backlog time integral up to `now`; call before any
    /// backlog change.
    fn advance(&mut self, now: Nanos) {
        self.raw.backlog_integral += self.backlog.len() as f64 * (now - self.last_change) as f64;
        self.last_change = now;
    }
}

struct ThreadSim {
    role: Role,
    target: u32,
    serving: bool,
    raw: RawThread,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    /// Per-packet service time in f64 ns; completions are rounded per index
    /// from the drain start, so long drains accumulate no drift.
    service_ns: f64,
    queues: Vec<QueueSim>,
    threads: Vec<ThreadSim>,
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    rng_jitter: ChaCha8Rng,
    rng_queues: ChaCha8Rng,
    latency: LatencyRaw,
    served_series: Vec<u64>,
    offered_series: Vec<u64>,
    ctl_series: Vec<CtlSample>,
    next_snapshot: Nanos,
    cycle_records: Option<Vec<CycleRecord>>,
    max_vacation_ns: u64,
    in_service_end: u64,
}

/// Runs the scenario with arrivals generated from its own spec.
pub fn run(cfg: &ScenarioConfig) -> Result<SimulationReport, EngineError> {
    cfg.validate()?;
    let gen = ArrivalGen::new(&cfg.arrival_spec(), cfg.n_queues, cfg.horizon_ns)?;
    Ok(run_merged(cfg, gen))
}

/// Runs the scenario against a fixed arrival list (trace replay).
pub fn run_with_arrivals(
    cfg: &ScenarioConfig,
    arrivals: Vec<Arrival>,
) -> Result<SimulationReport, EngineError> {
    cfg.validate()?;
    if let Some(bad) = arrivals.iter().find(|a| a.queue >= cfg.n_queues) {
        return Err(EngineError::TraceQueueOutOfRange {
            time_ns: bad.time_ns,
            queue: bad.queue,
            n_queues: cfg.n_queues,
        });
    }
    let gen = ArrivalGen::from_trace(arrivals, cfg.n_queues, cfg.horizon_ns);
    Ok(run_merged(cfg, gen))
}

fn run_merged(cfg: &ScenarioConfig, mut gen: ArrivalGen) -> SimulationReport {
    let mut sim = Sim::new(cfg);
    if !cfg.always_poll {
        sim.seed_initial_wakes();
    }
    let mut next_arrival = gen.next_arrival();
    loop {
        let next_event = sim.heap.peek().map(|Reverse(e)| *e);
        match (next_arrival, next_event) {
            (None, None) => break,
            (Some(a), None) => {
                sim.on_arrival(a);
                next_arrival = gen.next_arrival();
            }
            (None, Some(e)) => {
                if e.time > cfg.horizon_ns {
                    break;
                }
                sim.pop_and_handle();
            }
            (Some(a), Some(e)) => {
                // Arrivals win ties; the generator never outruns the horizon.
                if a.time_ns <= e.time {
                    sim.on_arrival(a);
                    next_arrival = gen.next_arrival();
                } else {
                    sim.pop_and_handle();
                }
            }
        }
    }
    let raw = sim.finalize();
    metrics::summarize(raw, cfg)
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let ctl_cfg = ControllerConfig {
            mode: cfg.timer_mode(),
            m_threads: cfg.m_threads,
            n_queues: cfg.n_queues,
            t_long_ns: cfg.t_long_ns,
            target_vacation_ns: cfg.target_vacation_ns,
            alpha: cfg.alpha,
            ts_min_ns: cfg.ts_min_ns,
            ts_max_ns: cfg.ts_max_resolved(),
        };
        let queues = (0..cfg.n_queues)
            .map(|_| QueueSim {
                backlog: VecDeque::new(),
                locked: false,
                server: 0,
                drain_start: 0,
                vacation_ns: 0,
                n_v: 0,
                served_in_drain: 0,
                batch: Vec::with_capacity(cfg.batch_size as usize),
                prev_end: 0,
                ctl: QueueController::new(ctl_cfg),
                last_change: 0,
                raw: RawQueue::default(),
            })
            .collect();
        let threads = (0..cfg.m_threads)
            .map(|i| ThreadSim {
                role: Role::Primary,
                target: i % cfg.n_queues,
                serving: false,
                raw: RawThread::default(),
            })
            .collect();
        let buckets = cfg.horizon_ns.div_ceil(cfg.stats_window_ns) as usize;
        Sim {
            cfg,
            service_ns: 1e9 / cfg.mu_pps,
            queues,
            threads,
            heap: BinaryHeap::new(),
            seq: 0,
            rng_jitter: ChaCha8Rng::seed_from_u64(cfg.seed_jitter),
            rng_queues: ChaCha8Rng::seed_from_u64(cfg.seed_queues),
            latency: LatencyRaw::default(),
            served_series: vec![0; buckets],
            offered_series: vec![0; buckets],
            ctl_series: Vec::new(),
            next_snapshot: cfg.stats_window_ns,
            cycle_records: if cfg.emit_cycles || cfg.vacation_bins > 0 {
                Some(Vec::new())
            } else {
                None
            },
            max_vacation_ns: 0,
            in_service_end: 0,
        }
    }

    fn push_event(&mut self, time: Nanos, prio: u8, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            time,
            prio,
            seq: self.seq,
            kind,
        }));
    }

    fn bucket(&self, t: Nanos) -> usize {
        ((t / self.cfg.stats_window_ns) as usize).min(self.served_series.len() - 1)
    }

    /// Overlap of [a, b] with the measurement window.
    fn measured_overlap(&self, a: Nanos, b: Nanos) -> u64 {
        let lo = a.max(self.cfg.warmup_ns);
        let hi = b.min(self.cfg.horizon_ns);
        hi.saturating_sub(lo)
    }

    fn jitter(&mut self) -> Nanos {
        match self.cfg.jitter {
            JitterSpec::None => 0,
            JitterSpec::Constant(d) => d,
            JitterSpec::Uniform(lo, hi) => {
                if lo == hi {
                    lo
                } else {
                    self.rng_jitter.gen_range(lo..=hi)
                }
            }
            JitterSpec::HeavyTail { prob, max_ns } => {
                let u: f64 = self.rng_jitter.gen();
                if u < prob && max_ns > 0 {
                    self.rng_jitter.gen_range(0..=max_ns)
                } else {
                    0
                }
            }
        }
    }

    /// Staggered first wakes: thread i fires at (i+1)/M of the initial
    /// short timer, so threads do not start in lockstep.
    fn seed_initial_wakes(&mut self) {
        for i in 0..self.cfg.m_threads {
            let ts = self.queues[(i % self.cfg.n_queues) as usize]
                .ctl
                .t_short_ns();
            let at = (u64::from(i) + 1) * ts / u64::from(self.cfg.m_threads);
            self.push_event(at, PRIO_WAKE, EventKind::Wake { thread: i });
        }
    }

    fn schedule_wake(&mut self, thread: u32, now: Nanos) {
        let th = &self.threads[thread as usize];
        let dur = self.queues[th.target as usize].ctl.sleep_for(th.role);
        let dur = dur + self.jitter();
        self.push_event(now + dur, PRIO_WAKE, EventKind::Wake { thread });
    }

    /// Emits controller snapshots for every window boundary at or before `t`.
    fn flush_snapshots(&mut self, t: Nanos) {
        while self.next_snapshot <= t && self.next_snapshot <= self.cfg.horizon_ns {
            for (qi, q) in self.queues.iter().enumerate() {
                self.ctl_series.push(CtlSample {
                    time_ns: self.next_snapshot,
                    queue: qi as u32,
                    rho_est: q.ctl.rho_est(),
                    t_short_ns: q.ctl.t_short_ns(),
                });
            }
            self.next_snapshot += self.cfg.stats_window_ns;
        }
    }

    fn on_arrival(&mut self, a: Arrival) {
        self.flush_snapshots(a.time_ns);
        let idx = self.bucket(a.time_ns);
        self.offered_series[idx] += 1;
        let q = &mut self.queues[a.queue as usize];
        q.raw.arrivals += 1;
        if q.backlog.len() as u32 >= self.cfg.capacity {
            q.raw.drops += 1;
            return;
        }
        q.advance(a.time_ns);
        q.backlog.push_back(a.time_ns);
        q.raw.max_backlog = q.raw.max_backlog.max(q.backlog.len() as u32);
        if self.cfg.always_poll && !q.locked {
            // A bound idle thread notices the packet immediately.
            let m = self.cfg.m_threads;
            let n = self.cfg.n_queues;
            let idle = (a.queue..m)
                .step_by(n as usize)
                .find(|&i| !self.threads[i as usize].serving);
            if let Some(th) = idle {
                self.begin_poll_drain(th, a.queue, a.time_ns);
            }
        }
    }

    fn pop_and_handle(&mut self) {
        let Reverse(ev) = self.heap.pop().expect("caller checked peek");
        self.flush_snapshots(ev.time);
        match ev.kind {
            EventKind::Wake { thread } => self.on_wake(thread, ev.time),
            EventKind::BatchEnd { queue } => self.on_batch_end(queue, ev.time),
        }
    }

    fn on_wake(&mut self, thread: u32, now: Nanos) {
        let measured = now >= self.cfg.warmup_ns;
        let overhead = self.cfg.wake_overhead_ns + self.cfg.lock_overhead_ns;
        let target = {
            let th = &mut self.threads[thread as usize];
            th.raw.wakes += 1;
            if measured {
                th.raw.tries_measured += 1;
                th.raw.awake_ns_measured += overhead;
            }
            th.target
        };
        let q = &mut self.queues[target as usize];
        if measured {
            q.raw.tries_measured += 1;
        }
        if q.locked {
            // Lost the race: back off on the long timer, pick a new queue.
            if measured {
                q.raw.busy_tries_measured += 1;
                self.threads[thread as usize].raw.busy_tries_measured += 1;
            }
            let th = &mut self.threads[thread as usize];
            th.role = Role::Backup;
            th.target = QueueController::select_next_queue(
                Role::Backup,
                target,
                self.cfg.n_queues,
                &mut self.rng_queues,
            );
            self.schedule_wake(thread, now);
        } else {
            self.begin_drain(thread, target, now);
        }
    }

    /// Lock acquisition: ends the queue's vacation and starts a busy period
    /// (possibly empty).
    fn begin_drain(&mut self, thread: u32, queue: u32, now: Nanos) {
        let q = &mut self.queues[queue as usize];
        let vacation = now - q.prev_end;
        self.max_vacation_ns = self.max_vacation_ns.max(vacation);
        q.locked = true;
        q.server = thread;
        q.drain_start = now;
        q.vacation_ns = vacation;
        q.n_v = q.backlog.len() as u32;
        q.served_in_drain = 0;
        q.raw.max_n_v = q.raw.max_n_v.max(q.n_v);
        self.threads[thread as usize].raw.drains += 1;
        if q.backlog.is_empty() {
            // Woke to nothing: a zero-length busy period.
            self.finish_cycle(queue, thread, now, self.cfg.feed_zero_cycles);
        } else {
            self.grab_batch(queue, now);
        }
    }

    /// Takes the next batch out of the backlog and schedules its completion.
    fn grab_batch(&mut self, queue: u32, now: Nanos) {
        let q = &mut self.queues[queue as usize];
        q.advance(now);
        q.batch.clear();
        let grab = (self.cfg.batch_size as usize).min(q.backlog.len());
        for _ in 0..grab {
            let arr = q.backlog.pop_front().expect("len checked");
            q.raw.wait_sum_ns += now - arr;
            q.batch.push(arr);
        }
        q.raw.grabbed += grab as u64;
        let done = q.served_in_drain + grab as u64;
        let end = q.drain_start + (done as f64 * self.service_ns).round() as u64;
        self.push_event(end, PRIO_BATCH_END, EventKind::BatchEnd { queue });
    }

    fn on_batch_end(&mut self, queue: u32, now: Nanos) {
        let warmup = self.cfg.warmup_ns;
        let q = &mut self.queues[queue as usize];
        let base = q.served_in_drain;
        let served = q.batch.len() as u64;
        for (j, &arr) in q.batch.iter().enumerate() {
            let completion =
                q.drain_start + ((base + j as u64 + 1) as f64 * self.service_ns).round() as u64;
            if completion >= warmup {
                self.latency.record(completion - arr);
            }
            let idx = ((completion / self.cfg.stats_window_ns) as usize)
                .min(self.served_series.len() - 1);
            self.served_series[idx] += 1;
        }
        q.batch.clear();
        q.served_in_drain += served;
        q.raw.served += served;
        self.threads[q.server as usize].raw.served += served;
        if !self.queues[queue as usize].backlog.is_empty() {
            self.grab_batch(queue, now);
        } else {
            self.end_drain(queue, now);
        }
    }

    fn end_drain(&mut self, queue: u32, now: Nanos) {
        let (thread, drain_start) = {
            let q = &self.queues[queue as usize];
            (q.server, q.drain_start)
        };
        let span = self.measured_overlap(drain_start, now);
        self.queues[queue as usize].raw.busy_ns_measured += span;
        if !self.cfg.always_poll {
            self.threads[thread as usize].raw.awake_ns_measured += span;
            self.finish_cycle(queue, thread, now, true);
        } else {
            self.queues[queue as usize].locked = false;
            self.threads[thread as usize].serving = false;
        }
    }

    /// Closes the current cycle at `now`, feeds the controller, and puts the
    /// winner back to sleep as the queue's primary.
    fn finish_cycle(&mut self, queue: u32, thread: u32, now: Nanos, feed: bool) {
        let q = &mut self.queues[queue as usize];
        let v = q.vacation_ns;
        let b = now - q.drain_start;
        let n_v = q.n_v;
        let n_b = (q.served_in_drain - u64::from(n_v)) as u32;
        if now >= self.cfg.warmup_ns {
            q.raw.cycles.add(v, b, n_v, n_b);
            if let Some(records) = &mut self.cycle_records {
                records.push(CycleRecord {
                    v_ns: v,
                    b_ns: b,
                    n_v,
                    n_b,
                    queue: queue as u16,
                    thread: thread as u16,
                });
            }
        }
        if feed {
            q.ctl.observe_cycle(v, b);
        }
        q.prev_end = now;
        q.locked = false;
        let th = &mut self.threads[thread as usize];
        th.role = Role::Primary;
        th.target = queue;
        self.schedule_wake(thread, now);
    }

    /// Drain start in always-poll mode: no vacation bookkeeping, no timers.
    fn begin_poll_drain(&mut self, thread: u32, queue: u32, now: Nanos) {
        let q = &mut self.queues[queue as usize];
        q.locked = true;
        q.server = thread;
        q.drain_start = now;
        q.n_v = q.backlog.len() as u32;
        q.raw.max_n_v = q.raw.max_n_v.max(q.n_v);
        q.served_in_drain = 0;
        let th = &mut self.threads[thread as usize];
        th.serving = true;
        th.raw.drains += 1;
        self.grab_batch(queue, now);
    }

    fn finalize(mut self) -> RawRun {
        let horizon = self.cfg.horizon_ns;
        self.flush_snapshots(horizon);
        for qi in 0..self.queues.len() {
            {
                let q = &mut self.queues[qi];
                q.advance(horizon);
                q.raw.backlog_end = q.backlog.len() as u64;
            }
            if self.queues[qi].locked {
                // Horizon cut a drain: flush its busy time, leave the
                // in-flight batch unserved.
                let (server, drain_start, in_flight) = {
                    let q = &self.queues[qi];
                    (q.server, q.drain_start, q.batch.len() as u64)
                };
                let span = self.measured_overlap(drain_start, horizon);
                self.queues[qi].raw.busy_ns_measured += span;
                self.in_service_end += in_flight;
                if !self.cfg.always_poll {
                    self.threads[server as usize].raw.awake_ns_measured += span;
                }
            }
        }
        if self.cfg.always_poll {
            // Spinning threads are awake for the whole window by definition.
            let span = horizon - self.cfg.warmup_ns;
            for th in &mut self.threads {
                th.raw.awake_ns_measured = span;
            }
        }
        RawRun {
            queues: self.queues.into_iter().map(|q| q.raw).collect(),
            threads: self.threads.into_iter().map(|t| t.raw).collect(),
            latency: self.latency,
            cycle_records: self.cycle_records,
            served_series: self.served_series,
            offered_series: self.offered_series,
            ctl_series: self.ctl_series,
            in_service_end: self.in_service_end,
            max_vacation_ns: self.max_vacation_ns,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::ArrivalKind;

    fn base_cfg() -> ScenarioConfig {
        ScenarioConfig {
            adaptation: false,
            warmup_ns: 0,
            stats_window_ns: 10_000_000,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn single_drain_timing_is_exact() {
        // 172 packets preloaded; mu = 29.25 Mpps, so the busy period is
        // round(172 * 34.188...) = 5880 ns across 6 batches.
        let cfg = ScenarioConfig {
            m_threads: 1,
            t_short_ns: 10_000,
            t_long_ns: 500_000,
            horizon_ns: 1_000_000,
            vacation_bins: 10,
            arrival: ArrivalKind::Poisson { rate_pps: 0.0 },
            ..base_cfg()
        };
        let arrivals: Vec<Arrival> = (0..172)
            .map(|_| Arrival {
                time_ns: 100,
                queue: 0,
                flow: 0,
            })
            .collect();
        let report = run_with_arrivals(&cfg, arrivals).unwrap();
        let records = report.cycle_records.as_ref().unwrap();
        let first = records.iter().find(|c| c.n_v > 0).unwrap();
        assert_eq!(first.v_ns, 10_000); // first wake of the staggered start
        assert_eq!(first.n_v, 172);
        assert_eq!(first.b_ns, 5_880);
        assert_eq!(first.n_b, 0);
        assert_eq!(report.totals.served, 172);
        // Last completion at 10000 + 5880, arrival at 100.
        assert_eq!(report.latency.max_ns, 15_780);
        assert!(report.totals.conserved());
    }

    #[test]
    fn arrivals_during_drain_extend_it_geometrically() {
        // At rho = 0.5, packets served per busy period are about twice the
        // backlog found, and E[B]/E[V] is about rho/(1-rho) = 1.
        let cfg = ScenarioConfig {
            m_threads: 1,
            t_short_ns: 50_000,
            t_long_ns: 500_000,
            mu_pps: 1e6,
            arrival: ArrivalKind::Cbr { rate_pps: 0.5e6 },
            horizon_ns: 2_000_000_000,
            warmup_ns: 100_000_000,
            ..base_cfg()
        };
        let report = run(&cfg).unwrap();
        let c = &report.cycles;
        assert!(c.count > 10_000, "cycles = {}", c.count);
        let nb_over_nv = c.mean_n_b / c.mean_n_v;
        assert!((nb_over_nv - 1.0).abs() < 0.1, "N_B/N_V = {nb_over_nv}");
        let b_over_v = c.mean_b_ns / c.mean_v_ns;
        assert!((b_over_v - 1.0).abs() < 0.1, "B/V = {b_over_v}");
        assert!(report.totals.conserved());
    }

    #[test]
    fn overfull_queue_drops() {
        let cfg = ScenarioConfig {
            m_threads: 1,
            t_short_ns: 10_000,
            horizon_ns: 1_000_000,
            arrival: ArrivalKind::Poisson { rate_pps: 0.0 },
            ..base_cfg()
        };
        let arrivals: Vec<Arrival> = (0..5_000)
            .map(|_| Arrival {
                time_ns: 1_000,
                queue: 0,
                flow: 0,
            })
            .collect();
        let report = run_with_arrivals(&cfg, arrivals).unwrap();
        assert_eq!(report.totals.dropped, 5_000 - 4_096);
        assert_eq!(report.totals.served, 4_096);
        assert_eq!(report.queues[0].max_backlog, 4_096);
        assert!(report.totals.conserved());
    }

    #[test]
    fn idle_system_runs_zero_cycles_only() {
        let cfg = ScenarioConfig {
            m_threads: 3,
            t_short_ns: 100_000,
            t_long_ns: 500_000,
            arrival: ArrivalKind::Poisson { rate_pps: 0.0 },
            horizon_ns: 1_000_000_000,
            ..base_cfg()
        };
        let report = run(&cfg).unwrap();
        assert!(report.cycles.count > 0);
        assert_eq!(report.cycles.count, report.cycles.zero_count);
        assert_eq!(report.totals.arrivals, 0);
        for t in &report.threads {
            assert_eq!(t.busy_try_fraction, 0.0);
        }
        // Each wake costs 1 us and timers are 100 us, so threads are awake
        // about 1% of the time.
        assert!(
            (report.cpu_proxy - 0.01).abs() < 0.002,
            "cpu proxy {}",
            report.cpu_proxy
        );
        assert!(report.totals.conserved());
    }

    #[test]
    fn zero_cycle_feedback_is_configurable() {
        let mut cfg = ScenarioConfig {
            m_threads: 2,
            arrival: ArrivalKind::Poisson { rate_pps: 0.0 },
            horizon_ns: 200_000_000,
            adaptation: true,
            feed_zero_cycles: false,
            ..base_cfg()
        };
        let untouched = run(&cfg).unwrap();
        let last = untouched.controller.last().unwrap();
        assert_eq!(last.rho_est, 0.5); // nothing fed, estimate never moved

        cfg.feed_zero_cycles = true;
        let fed = run(&cfg).unwrap();
        let last = fed.controller.last().unwrap();
        assert!(last.rho_est < 0.01, "rho_est = {}", last.rho_est);
        assert!(last.t_short_ns > untouched.controller.last().unwrap().t_short_ns);
    }

    #[test]
    fn latency_respects_the_structural_bound() {
        // Any packet waits at most one full vacation plus the time to drain
        // everything that could sit ahead of it.
        let cfg = ScenarioConfig {
            m_threads: 2,
            t_short_ns: 20_000,
            t_long_ns: 100_000,
            mu_pps: 5e6,
            arrival: ArrivalKind::Poisson { rate_pps: 2.5e6 },
            horizon_ns: 1_000_000_000,
            ..base_cfg()
        };
        let report = run(&cfg).unwrap();
        assert!(report.latency.count > 1_000_000);
        let q_ns = 1e9 / cfg.mu_pps;
        let worst_backlog = report.queues.iter().map(|q| q.max_backlog).max().unwrap();
        let bound = report.max_vacation_ns as f64 + (f64::from(worst_backlog) + 1.0) * q_ns + 2.0;
        assert!(
            (report.latency.max_ns as f64) <= bound,
            "max latency {} vs bound {bound}",
            report.latency.max_ns
        );
    }

    #[test]
    fn backlog_obeys_littles_law() {
        let cfg = ScenarioConfig {
            m_threads: 1,
            t_short_ns: 50_000,
            arrival: ArrivalKind::Cbr { rate_pps: 1e6 },
            horizon_ns: 100_000_000,
            ..base_cfg()
        };
        let report = run(&cfg).unwrap();
        let q = &report.queues[0];
        let grab_rate = q.served as f64 / cfg.horizon_ns as f64;
        let expected = grab_rate * q.mean_wait_ns;
        let rel = (q.mean_backlog - expected).abs() / expected;
        assert!(
            rel < 0.01,
            "L = {} vs lambda W = {expected}",
            q.mean_backlog
        );
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = ScenarioConfig {
            horizon_ns: 200_000_000,
            adaptation: true,
            warmup_ns: 20_000_000,
            vacation_bins: 50,
            jitter: JitterSpec::Uniform(0, 2_000),
            ..ScenarioConfig::default()
        };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.totals.conserved());
        assert!(a.totals.arrivals > 1_000_000);
        let seeded = ScenarioConfig {
            seed_arrivals: 99,
            ..cfg
        };
        let c = run(&seeded).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn polling_baseline_is_always_awake() {
        let cfg = ScenarioConfig {
            m_threads: 2,
            n_queues: 2,
            always_poll: true,
            arrival: ArrivalKind::Poisson { rate_pps: 2e6 },
            horizon_ns: 100_000_000,
            ..base_cfg()
        };
        let report = run(&cfg).unwrap();
        assert_eq!(report.cpu_proxy, 1.0);
        assert_eq!(report.cycles.count, 0);
        assert_eq!(report.totals.dropped, 0);
        // Packets are picked up the moment they land, so waits are tiny.
        assert!(report.queues.iter().all(|q| q.mean_wait_ns < 1_000.0));
        assert!(report.totals.conserved());
        let rerun = run(&cfg).unwrap();
        assert_eq!(report, rerun);
    }

    #[test]
    fn trace_queues_must_fit_the_scenario() {
        let cfg = ScenarioConfig {
            n_queues: 1,
            ..base_cfg()
        };
        let arrivals = vec![Arrival {
            time_ns: 5,
            queue: 3,
            flow: 0,
        }];
        match run_with_arrivals(&cfg, arrivals) {
            Err(EngineError::TraceQueueOutOfRange {
                queue: 3,
                n_queues: 1,
                ..
            }) => {}
            other => panic!("expected out-of-range error, got {other:?}"),
        }
    }

    #[test]
    fn warmup_gates_measurements_but_not_conservation() {
        let cfg = ScenarioConfig {
            horizon_ns: 100_000_000,
            warmup_ns: 50_000_000,
            ..base_cfg()
        };
        let gated = run(&cfg).unwrap();
        let full = run(&ScenarioConfig {
            warmup_ns: 0,
            ..cfg
        })
        .unwrap();
        assert_eq!(gated.totals.arrivals, full.totals.arrivals);
        assert!(gated.totals.conserved());
        assert!(gated.cycles.count < full.cycles.count);
        assert!(gated.latency.count < full.latency.count);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn every_packet_is_accounted_for(
                seed in any::<u64>(),
                m in 1u32..5,
                n in 1u32..3,
                rate in 1e5f64..2e7,
                adaptive in any::<bool>(),
            ) {
                let cfg = ScenarioConfig {
                    m_threads: m.max(n),
                    n_queues: n,
                    arrival: ArrivalKind::Poisson { rate_pps: rate },
                    seed_arrivals: seed,
                    adaptation: adaptive,
                    horizon_ns: 10_000_000,
                    warmup_ns: 1_000_000,
                    stats_window_ns: 1_000_000,
                    ..ScenarioConfig::default()
                };
                let report = run(&cfg).unwrap();
                prop_assert!(report.totals.conserved());
                let per_queue: u64 = report.queues.iter().map(|q| q.served).sum();
                prop_assert_eq!(per_queue, report.totals.served);
                let per_thread: u64 = report.threads.iter().map(|t| t.served).sum();
                prop_assert_eq!(per_thread, report.totals.served);
            }
        }
    }
}
