//! Per-queue sleep-timer control.
//!
//! Each receive queue owns one controller. Worker threads report every
//! completed cycle (vacation V, busy period B) to the controller of the
//! queue they drained; the controller tracks an EWMA load estimate
//!
//! ```text
//! rho_est <- (1 - alpha) * rho_est + alpha * B / (V + B)
//! ```
//!
//! and, in adaptive mode, re-solves the short-timer rule so that the mean
//! vacation holds at the configured target as load moves. Fixed mode keeps
//! the short timer pinned while still tracking the load estimate.
//!
//! Roles: the thread that last drained a queue is its primary and sleeps the
//! short timer on that same queue; every other thread acts as a backup,
//! sleeps the long timer, and re-targets a uniformly random queue when it
//! wakes.

use rand::Rng;

use crate::analytics;
use crate::Nanos;

/// Which sleep a thread takes after a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Won the last race on its queue; sleeps the short timer.
    Primary,
    /// Lost the race; sleeps the long timer and re-targets randomly.
    Backup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimerMode {
    /// Short timer pinned to a constant.
    Fixed(Nanos),
    /// Short timer re-solved from the load estimate after every cycle.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub mode: TimerMode,
    pub m_threads: u32,
    pub n_queues: u32,
    pub t_long_ns: Nanos,
    pub target_vacation_ns: Nanos,
    /// EWMA gain for the load estimate.
    pub alpha: f64,
    /// Clamp range for the adaptive short timer.
    pub ts_min_ns: Nanos,
    pub ts_max_ns: Nanos,
}

/// Load estimator plus short-timer policy for one queue.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueController {
    cfg: ControllerConfig,
    rho_est: f64,
    t_short_ns: Nanos,
}

/// Fresh controllers start from an agnostic load guess.
const RHO_INIT: f64 = 0.5;
/// The estimate stays strictly below 1 so the timer rule is always defined.
const RHO_MAX: f64 = 0.999;

impl QueueController {
    pub fn new(cfg: ControllerConfig) -> Self {
        let mut c = Self {
            cfg,
            rho_est: RHO_INIT,
            t_short_ns: 0,
        };
        c.t_short_ns = match cfg.mode {
            TimerMode::Fixed(ts) => ts,
            TimerMode::Adaptive => c.solve_t_short(),
        };
        c
    }

    pub fn rho_est(&self) -> f64 {
        self.rho_est
    }

    pub fn t_short_ns(&self) -> Nanos {
        self.t_short_ns
    }

    pub fn t_long_ns(&self) -> Nanos {
        self.cfg.t_long_ns
    }

    /// Feeds one completed cycle. Cycles with no vacation and no busy time
    /// carry no load information and are ignored.
    pub fn observe_cycle(&mut self, vacation_ns: Nanos, busy_ns: Nanos) {
        let sum = vacation_ns + busy_ns;
        if sum == 0 {
            return;
        }
        let sample = busy_ns as f64 / sum as f64;
        self.rho_est = (1.0 - self.cfg.alpha) * self.rho_est + self.cfg.alpha * sample;
        self.rho_est = self.rho_est.clamp(0.0, RHO_MAX);
        if self.cfg.mode == TimerMode::Adaptive {
            self.t_short_ns = self.solve_t_short();
        }
    }

    pub fn sleep_for(&self, role: Role) -> Nanos {
        match role {
            Role::Primary => self.t_short_ns,
            Role::Backup => self.cfg.t_long_ns,
        }
    }

    /// Primaries stick to their queue; backups re-target uniformly.
    pub fn select_next_queue<R: Rng>(role: Role, current: u32, n_queues: u32, rng: &mut R) -> u32 {
        match role {
            Role::Primary => current,
            Role::Backup => rng.gen_range(0..n_queues),
        }
    }

    fn solve_t_short(&self) -> Nanos {
        let ts = analytics::adaptive_ts_multiqueue(
            self.cfg.m_threads,
            self.cfg.n_queues,
            self.rho_est,
            self.cfg.target_vacation_ns as f64,
        )
        .expect("controller config was validated");
        (ts.round() as Nanos).clamp(self.cfg.ts_min_ns, self.cfg.ts_max_ns)
    }
}
