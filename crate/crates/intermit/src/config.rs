//! Scenario configuration: a flat `key=value` format, defaults, validation,
//! and overrides.
//!
//! Files use one `key=value` pair per line; `#` starts a comment. Durations
//! take a unit suffix (`ns`, `us`, `ms`, `s`), rates take `pps`, `kpps`, or
//! `mpps`. Every key has a default, so an empty file is a valid scenario.
//! The parser reports all problems at once, each with its line number,
//! rather than stopping at the first.
//!
//! `Display` serializes a config so that parsing the output reproduces the
//! config exactly; emitted run directories rely on this for reproducibility.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::controller::TimerMode;
use crate::workload::{
    ramp_profile_default, ArrivalKind, ArrivalSpec, FlowChoice, FlowEntry, RampStep,
};
use crate::Nanos;

/// One configuration problem, tagged with its source line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub msg: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        write!(f, "{}", self.msg)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}", issues_summary(.0))]
    Invalid(Vec<Issue>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn issues_summary(issues: &[Issue]) -> String {
    let lines: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    lines.join("\n")
}

/// Extra sleep added on top of a timer, modeling OS timer slop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JitterSpec {
    None,
    /// Every sleep is extended by exactly this much.
    Constant(Nanos),
    /// Every sleep is extended by a uniform draw from `[lo, hi]`.
    Uniform(Nanos, Nanos),
    /// With probability `prob` the sleep is extended by a uniform draw from
    /// `[0, max_ns]`; otherwise not at all.
    HeavyTail {
        prob: f64,
        max_ns: Nanos,
    },
}

/// A complete simulation scenario. All times are integer nanoseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m_threads: u32,
    pub n_queues: u32,
    /// Initial short timer; pinned when `adaptation` is off.
    pub t_short_ns: Nanos,
    pub t_long_ns: Nanos,
    /// Mean-vacation setpoint for the adaptive timer rule.
    pub target_vacation_ns: Nanos,
    /// Per-queue service rate, packets per second.
    pub mu_pps: f64,
    pub batch_size: u32,
    /// Charged to awake-time accounting on every wake; never moves the clock.
    pub wake_overhead_ns: Nanos,
    /// Charged to awake-time accounting on every lock attempt.
    pub lock_overhead_ns: Nanos,
    /// Per-queue backlog limit; packets beyond it are dropped.
    pub capacity: u32,
    pub arrival: ArrivalKind,
    pub jitter: JitterSpec,
    pub adaptation: bool,
    /// EWMA gain of the per-queue load estimate.
    pub alpha: f64,
    pub ts_min_ns: Nanos,
    /// `None` means auto: `round(1.1 * (m / n) * target_vacation)`.
    pub ts_max_ns: Option<Nanos>,
    /// Whether cycles that found an empty queue update the load estimate.
    pub feed_zero_cycles: bool,
    /// Baseline mode: statically bound threads that never sleep.
    pub always_poll: bool,
    pub horizon_ns: Nanos,
    pub warmup_ns: Nanos,
    pub stats_window_ns: Nanos,
    /// Linear bin count for the vacation histogram; 0 disables per-cycle
    /// record collection.
    pub vacation_bins: u32,
    pub seed_arrivals: u64,
    pub seed_jitter: u64,
    pub seed_queues: u64,
    pub out_dir: Option<PathBuf>,
    /// Write per-cycle records to CSV when emitting a run directory.
    pub emit_cycles: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m_threads: 3,
            n_queues: 1,
            t_short_ns: 10_000,
            t_long_ns: 500_000,
            target_vacation_ns: 10_000,
            mu_pps: 29.25e6,
            batch_size: 32,
            wake_overhead_ns: 1_000,
            lock_overhead_ns: 0,
            capacity: 4096,
            arrival: ArrivalKind::Poisson { rate_pps: 14.88e6 },
            jitter: JitterSpec::None,
            adaptation: true,
            alpha: 0.1,
            ts_min_ns: 1_000,
            ts_max_ns: None,
            feed_zero_cycles: true,
            always_poll: false,
            horizon_ns: 1_000_000_000,
            warmup_ns: 100_000_000,
            stats_window_ns: 100_000_000,
            vacation_bins: 0,
            seed_arrivals: 1,
            seed_jitter: 2,
            seed_queues: 3,
            out_dir: None,
            emit_cycles: false,
        }
    }
}

impl ScenarioConfig {
    /// Upper clamp for the adaptive short timer. The idle-limit timer is
    /// `(m / n) * target`, so 10% above it leaves headroom without letting
    /// the estimator wander.
    pub fn ts_max_resolved(&self) -> Nanos {
        self.ts_max_ns.unwrap_or_else(|| {
            let k = f64::from(self.m_threads) / f64::from(self.n_queues);
            (1.1 * k * self.target_vacation_ns as f64).round() as Nanos
        })
    }

    pub fn timer_mode(&self) -> TimerMode {
        if self.adaptation {
            TimerMode::Adaptive
        } else {
            TimerMode::Fixed(self.t_short_ns)
        }
    }

    pub fn arrival_spec(&self) -> ArrivalSpec {
        ArrivalSpec {
            kind: self.arrival.clone(),
            seed: self.seed_arrivals,
        }
    }

    /// Cross-field checks. Returns every violation, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |key: &str, msg: String| {
            issues.push(Issue {
                line: None,
                key: Some(key.to_string()),
                msg,
            });
        };
        if self.m_threads == 0 {
            bad("m_threads", "must be at least 1".into());
        }
        if self.m_threads > 65_535 {
            bad("m_threads", "must be at most 65535".into());
        }
        if self.n_queues == 0 {
            bad("n_queues", "must be at least 1".into());
        }
        if self.n_queues > 65_535 {
            bad("n_queues", "must be at most 65535".into());
        }
        if self.m_threads > 0 && self.n_queues > 0 && self.m_threads < self.n_queues {
            bad(
                "m_threads",
                format!(
                    "must be >= n_queues so every queue can be served (m = {}, n = {})",
                    self.m_threads, self.n_queues
                ),
            );
        }
        if self.t_short_ns == 0 {
            bad("t_short", "must be positive".into());
        }
        if self.t_long_ns < self.t_short_ns {
            bad(
                "t_long",
                format!(
                    "must be >= t_short ({} < {})",
                    self.t_long_ns, self.t_short_ns
                ),
            );
        }
        if self.target_vacation_ns == 0 {
            bad("target_vacation", "must be positive".into());
        }
        if !(self.mu_pps.is_finite() && self.mu_pps > 0.0) {
            bad(
                "mu",
                format!("must be a positive rate, got {}", self.mu_pps),
            );
        }
        if self.batch_size == 0 {
            bad("batch_size", "must be at least 1".into());
        }
        if self.capacity < self.batch_size {
            bad(
                "capacity",
                format!(
                    "must be >= batch_size ({} < {})",
                    self.capacity, self.batch_size
                ),
            );
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha <= 1.0) {
            bad("alpha", format!("must lie in (0, 1], got {}", self.alpha));
        }
        if self.ts_min_ns == 0 {
            bad("ts_min", "must be positive".into());
        }
        if self.ts_min_ns > self.ts_max_resolved() {
            bad(
                "ts_min",
                format!(
                    "must be <= ts_max ({} > {})",
                    self.ts_min_ns,
                    self.ts_max_resolved()
                ),
            );
        }
        if self.horizon_ns == 0 {
            bad("horizon", "must be positive".into());
        }
        if self.warmup_ns >= self.horizon_ns && self.horizon_ns > 0 {
            bad(
                "warmup",
                format!(
                    "must be shorter than horizon ({} >= {})",
                    self.warmup_ns, self.horizon_ns
                ),
            );
        }
        if self.stats_window_ns == 0 {
            bad("stats_window", "must be positive".into());
        }
        if let JitterSpec::Uniform(lo, hi) = self.jitter {
            if lo > hi {
                bad(
                    "jitter",
                    format!("uniform bounds out of order ({lo} > {hi})"),
                );
            }
        }
        if let JitterSpec::HeavyTail { prob, .. } = self.jitter {
            if !(prob.is_finite() && (0.0..=1.0).contains(&prob)) {
                bad(
                    "jitter",
                    format!("heavy_tail probability must lie in [0, 1], got {prob}"),
                );
            }
        }
        if let Err(e) = self.arrival_spec().validate() {
            bad("arrival", e.to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}

// ============================================================================
// Unit parsing
// ============================================================================

/// Parses a duration with a required unit suffix into nanoseconds.
/// Fractional values are rounded to the nearest nanosecond.
pub fn parse_duration_ns(s: &str) -> Result<Nanos, String> {
    let s = s.trim();
    let (num, scale) = if let Some(p) = s.strip_suffix("ns") {
        (p, 1.0)
    } else if let Some(p) = s.strip_suffix("us") {
        (p, 1e3)
    } else if let Some(p) = s.strip_suffix("ms") {
        (p, 1e6)
    } else if let Some(p) = s.strip_suffix('s') {
        (p, 1e9)
    } else {
        return Err(format!("'{s}' needs a duration unit (ns, us, ms, s)"));
    };
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a valid duration"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("'{s}' must be a non-negative duration"));
    }
    Ok((v * scale).round() as Nanos)
}

/// Parses a rate with a required unit suffix into packets per second.
pub fn parse_rate_pps(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, scale) = if let Some(p) = s.strip_suffix("mpps") {
        (p, 1e6)
    } else if let Some(p) = s.strip_suffix("kpps") {
        (p, 1e3)
    } else if let Some(p) = s.strip_suffix("pps") {
        (p, 1.0)
    } else {
        return Err(format!("'{s}' needs a rate unit (pps, kpps, mpps)"));
    };
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a valid rate"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("'{s}' must be a non-negative rate"));
    }
    Ok(v * scale)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        other => Err(format!(
            "'{other}' is not a boolean (true/false/on/off/1/0/yes/no)"
        )),
    }
}

fn parse_jitter(s: &str) -> Result<JitterSpec, String> {
    let s = s.trim();
    if s == "none" {
        return Ok(JitterSpec::None);
    }
    let mut parts = s.split(':');
    match parts.next() {
        Some("constant") => {
            let d = parts.next().ok_or("constant jitter needs a duration, e.g. constant:1us")?;
            if parts.next().is_some() {
                return Err("constant jitter takes exactly one duration".into());
            }
            Ok(JitterSpec::Constant(parse_duration_ns(d)?))
        }
        Some("uniform") => {
            let (lo, hi) = match (parts.next(), parts.next(), parts.next()) {
                (Some(lo), Some(hi), None) => (lo, hi),
                _ => return Err("uniform jitter needs two durations, e.g. uniform:0ns:5us".into()),
            };
            Ok(JitterSpec::Uniform(parse_duration_ns(lo)?, parse_duration_ns(hi)?))
        }
        Some("heavy_tail") => {
            let (p, max) = match (parts.next(), parts.next(), parts.next()) {
                (Some(p), Some(max), None) => (p, max),
                _ => return Err("heavy_tail jitter needs prob:max, e.g. heavy_tail:0.01:1ms".into()),
            };
            let prob: f64 = p.parse().map_err(|_| format!("'{p}' is not a probability"))?;
            Ok(JitterSpec::HeavyTail { prob, max_ns: parse_duration_ns(max)? })
        }
        _ => Err(format!(
            "'{s}' is not a jitter spec (none, constant:<d>, uniform:<lo>:<hi>, heavy_tail:<p>:<max>)"
        )),
    }
}

fn parse_ramp_step(s: &str) -> Result<RampStep, String> {
    let (d, r) = s
        .split_once(':')
        .ok_or("ramp_step needs duration:rate, e.g. 2s:0.933mpps")?;
    Ok(RampStep {
        duration_ns: parse_duration_ns(d)?,
        rate_pps: parse_rate_pps(r)?,
    })
}

fn parse_flow_entry(s: &str) -> Result<FlowEntry, String> {
    let (w, f) = s
        .split_once(':')
        .ok_or("flow needs weight:id or weight:random, e.g. 0.3:42")?;
    let weight: f64 = w
        .trim()
        .parse()
        .map_err(|_| format!("'{w}' is not a weight"))?;
    let flow = if f.trim() == "random" {
        FlowChoice::Random
    } else {
        FlowChoice::Id(
            f.trim()
                .parse::<u64>()
                .map_err(|_| format!("'{f}' is not a flow id"))?,
        )
    };
    Ok(FlowEntry { weight, flow })
}

// ============================================================================
// File parsing
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArrivalWord {
    Poisson,
    Cbr,
    Ramp,
    FlowMix,
}

/// Accumulates the multi-key arrival description while a file parses.
struct ArrivalBuild {
    word: Option<ArrivalWord>,
    rate: Option<f64>,
    steps: Vec<RampStep>,
    flows: Vec<FlowEntry>,
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut issues = Vec::new();
    let mut build = ArrivalBuild {
        word: None,
        rate: None,
        steps: Vec::new(),
        flows: Vec::new(),
    };
    let mut key_lines: HashMap<String, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(Issue {
                line: Some(lineno),
                key: None,
                msg: format!("expected key=value, got '{line}'"),
            });
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        key_lines.insert(key.to_string(), lineno);
        if let Err(msg) = apply_kv(&mut cfg, &mut build, key, value) {
            issues.push(Issue {
                line: Some(lineno),
                key: Some(key.to_string()),
                msg,
            });
        }
    }

    assemble_arrival(&mut cfg, build, &mut issues);

    match cfg.validate() {
        Ok(()) if issues.is_empty() => Ok(cfg),
        Ok(()) => Err(ConfigError::Invalid(issues)),
        Err(ConfigError::Invalid(mut more)) => {
            // Attach source lines to cross-field problems when the key
            // appeared in the file.
            for issue in &mut more {
                if let Some(key) = &issue.key {
                    issue.line = key_lines.get(key).copied();
                }
            }
            issues.extend(more);
            Err(ConfigError::Invalid(issues))
        }
        Err(e) => Err(e),
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Applies one `key=value` override to an already-built config, as used by
/// `--set` and sweeps. Arrival stream structure (`ramp_step`, `flow`) can
/// only be declared in a config file.
pub fn apply_override(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    if key == "ramp_step" || key == "flow" {
        return Err(ConfigError::Invalid(vec![Issue {
            line: None,
            key: Some(key.to_string()),
            msg: "can only be set in a config file".into(),
        }]));
    }
    let mut build = ArrivalBuild {
        word: None,
        rate: None,
        steps: Vec::new(),
        flows: Vec::new(),
    };
    apply_kv(cfg, &mut build, key, value).map_err(|msg| {
        ConfigError::Invalid(vec![Issue {
            line: None,
            key: Some(key.to_string()),
            msg,
        }])
    })?;
    let mut issues = Vec::new();
    assemble_arrival(cfg, build, &mut issues);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

fn apply_kv(
    cfg: &mut ScenarioConfig,
    build: &mut ArrivalBuild,
    key: &str,
    value: &str,
) -> Result<(), String> {
    match key {
        "m_threads" => cfg.m_threads = value.parse().map_err(|_| bad_int(value))?,
        "n_queues" => cfg.n_queues = value.parse().map_err(|_| bad_int(value))?,
        "t_short" => cfg.t_short_ns = parse_duration_ns(value)?,
        "t_long" => cfg.t_long_ns = parse_duration_ns(value)?,
        "target_vacation" => cfg.target_vacation_ns = parse_duration_ns(value)?,
        "mu" => cfg.mu_pps = parse_rate_pps(value)?,
        "batch_size" => cfg.batch_size = value.parse().map_err(|_| bad_int(value))?,
        "wake_overhead" => cfg.wake_overhead_ns = parse_duration_ns(value)?,
        "lock_overhead" => cfg.lock_overhead_ns = parse_duration_ns(value)?,
        "capacity" => cfg.capacity = value.parse().map_err(|_| bad_int(value))?,
        "arrival" => {
            let word = match value {
                "poisson" => ArrivalWord::Poisson,
                "cbr" => ArrivalWord::Cbr,
                "ramp" => ArrivalWord::Ramp,
                "flow_mix" => ArrivalWord::FlowMix,
                other => {
                    return Err(format!(
                        "'{other}' is not an arrival kind (poisson, cbr, ramp, flow_mix)"
                    ))
                }
            };
            build.word = Some(word);
        }
        "rate" => build.rate = Some(parse_rate_pps(value)?),
        "ramp_step" => build.steps.push(parse_ramp_step(value)?),
        "flow" => build.flows.push(parse_flow_entry(value)?),
        "jitter" => cfg.jitter = parse_jitter(value)?,
        "adaptation" => cfg.adaptation = parse_bool(value)?,
        "alpha" => cfg.alpha = value.parse().map_err(|_| bad_float(value))?,
        "ts_min" => cfg.ts_min_ns = parse_duration_ns(value)?,
        "ts_max" => {
            cfg.ts_max_ns = if value == "auto" {
                None
            } else {
                Some(parse_duration_ns(value)?)
            }
        }
        "feed_zero_cycles" => cfg.feed_zero_cycles = parse_bool(value)?,
        "always_poll" => cfg.always_poll = parse_bool(value)?,
        "horizon" => cfg.horizon_ns = parse_duration_ns(value)?,
        "warmup" => cfg.warmup_ns = parse_duration_ns(value)?,
        "stats_window" => cfg.stats_window_ns = parse_duration_ns(value)?,
        "vacation_bins" => cfg.vacation_bins = value.parse().map_err(|_| bad_int(value))?,
        "seed_arrivals" => cfg.seed_arrivals = value.parse().map_err(|_| bad_int(value))?,
        "seed_jitter" => cfg.seed_jitter = value.parse().map_err(|_| bad_int(value))?,
        "seed_queues" => cfg.seed_queues = value.parse().map_err(|_| bad_int(value))?,
        "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
        "emit_cycles" => cfg.emit_cycles = parse_bool(value)?,
        other => return Err(format!("unknown key '{other}'")),
    }
    Ok(())
}

fn bad_int(v: &str) -> String {
    format!("'{v}' is not a non-negative integer")
}

fn bad_float(v: &str) -> String {
    format!("'{v}' is not a number")
}

/// Folds the collected arrival keys into `cfg.arrival`. Keys that do not
/// apply to the chosen kind are reported rather than silently ignored.
fn assemble_arrival(cfg: &mut ScenarioConfig, build: ArrivalBuild, issues: &mut Vec<Issue>) {
    let ArrivalBuild {
        word,
        rate,
        steps,
        flows,
    } = build;
    let issue = |key: &str, msg: String| Issue {
        line: None,
        key: Some(key.to_string()),
        msg,
    };

    // No arrival keys at all: keep the existing kind, but let a bare
    // rate=... retune poisson/cbr/flow_mix streams.
    let word = match word {
        Some(w) => w,
        None => {
            if !steps.is_empty() {
                issues.push(issue("ramp_step", "only applies when arrival=ramp".into()));
            }
            if !flows.is_empty() {
                issues.push(issue("flow", "only applies when arrival=flow_mix".into()));
            }
            if let Some(r) = rate {
                match &mut cfg.arrival {
                    ArrivalKind::Poisson { rate_pps }
                    | ArrivalKind::Cbr { rate_pps }
                    | ArrivalKind::FlowMix { rate_pps, .. } => *rate_pps = r,
                    ArrivalKind::Ramp { .. } => {
                        issues.push(issue("rate", "a ramp stream has per-step rates".into()));
                    }
                }
            }
            return;
        }
    };

    let default_rate = 14.88e6;
    match word {
        ArrivalWord::Poisson | ArrivalWord::Cbr => {
            if !steps.is_empty() {
                issues.push(issue("ramp_step", "only applies when arrival=ramp".into()));
            }
            if !flows.is_empty() {
                issues.push(issue("flow", "only applies when arrival=flow_mix".into()));
            }
            let rate_pps = rate.unwrap_or(default_rate);
            cfg.arrival = match word {
                ArrivalWord::Poisson => ArrivalKind::Poisson { rate_pps },
                _ => ArrivalKind::Cbr { rate_pps },
            };
        }
        ArrivalWord::Ramp => {
            if rate.is_some() {
                issues.push(issue("rate", "a ramp stream has per-step rates".into()));
            }
            if !flows.is_empty() {
                issues.push(issue("flow", "only applies when arrival=flow_mix".into()));
            }
            let steps = if steps.is_empty() {
                ramp_profile_default()
            } else {
                steps
            };
            cfg.arrival = ArrivalKind::Ramp { steps };
        }
        ArrivalWord::FlowMix => {
            if !steps.is_empty() {
                issues.push(issue("ramp_step", "only applies when arrival=ramp".into()));
            }
            let entries = if flows.is_empty() {
                vec![FlowEntry {
                    weight: 1.0,
                    flow: FlowChoice::Random,
                }]
            } else {
                flows
            };
            cfg.arrival = ArrivalKind::FlowMix {
                rate_pps: rate.unwrap_or(default_rate),
                entries,
            };
        }
    }
}

// ============================================================================
// Serialization
// ============================================================================

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m_threads={}", self.m_threads)?;
        writeln!(f, "n_queues={}", self.n_queues)?;
        writeln!(f, "t_short={}ns", self.t_short_ns)?;
        writeln!(f, "t_long={}ns", self.t_long_ns)?;
        writeln!(f, "target_vacation={}ns", self.target_vacation_ns)?;
        writeln!(f, "mu={:?}pps", self.mu_pps)?;
        writeln!(f, "batch_size={}", self.batch_size)?;
        writeln!(f, "wake_overhead={}ns", self.wake_overhead_ns)?;
        writeln!(f, "lock_overhead={}ns", self.lock_overhead_ns)?;
        writeln!(f, "capacity={}", self.capacity)?;
        match &self.arrival {
            ArrivalKind::Poisson { rate_pps } => {
                writeln!(f, "arrival=poisson")?;
                writeln!(f, "rate={rate_pps:?}pps")?;
            }
            ArrivalKind::Cbr { rate_pps } => {
                writeln!(f, "arrival=cbr")?;
                writeln!(f, "rate={rate_pps:?}pps")?;
            }
            ArrivalKind::Ramp { steps } => {
                writeln!(f, "arrival=ramp")?;
                for s in steps {
                    writeln!(f, "ramp_step={}ns:{:?}pps", s.duration_ns, s.rate_pps)?;
                }
            }
            ArrivalKind::FlowMix { rate_pps, entries } => {
                writeln!(f, "arrival=flow_mix")?;
                writeln!(f, "rate={rate_pps:?}pps")?;
                for e in entries {
                    match e.flow {
                        FlowChoice::Id(id) => writeln!(f, "flow={:?}:{id}", e.weight)?,
                        FlowChoice::Random => writeln!(f, "flow={:?}:random", e.weight)?,
                    }
                }
            }
        }
        match self.jitter {
            JitterSpec::None => writeln!(f, "jitter=none")?,
            JitterSpec::Constant(d) => writeln!(f, "jitter=constant:{d}ns")?,
            JitterSpec::Uniform(lo, hi) => writeln!(f, "jitter=uniform:{lo}ns:{hi}ns")?,
            JitterSpec::HeavyTail { prob, max_ns } => {
                writeln!(f, "jitter=heavy_tail:{prob:?}:{max_ns}ns")?
            }
        }
        writeln!(f, "adaptation={}", self.adaptation)?;
        writeln!(f, "alpha={:?}", self.alpha)?;
        writeln!(f, "ts_min={}ns", self.ts_min_ns)?;
        match self.ts_max_ns {
            None => writeln!(f, "ts_max=auto")?,
            Some(v) => writeln!(f, "ts_max={v}ns")?,
        }
        writeln!(f, "feed_zero_cycles={}", self.feed_zero_cycles)?;
        writeln!(f, "always_poll={}", self.always_poll)?;
        writeln!(f, "horizon={}ns", self.horizon_ns)?;
        writeln!(f, "warmup={}ns", self.warmup_ns)?;
        writeln!(f, "stats_window={}ns", self.stats_window_ns)?;
        writeln!(f, "vacation_bins={}", self.vacation_bins)?;
        writeln!(f, "seed_arrivals={}", self.seed_arrivals)?;
        writeln!(f, "seed_jitter={}", self.seed_jitter)?;
        writeln!(f, "seed_queues={}", self.seed_queues)?;
        if let Some(dir) = &self.out_dir {
            writeln!(f, "out_dir={}", dir.display())?;
        }
        writeln!(f, "emit_cycles={}", self.emit_cycles)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn duration_units() {
        assert_eq!(parse_duration_ns("100ns").unwrap(), 100);
        assert_eq!(parse_duration_ns("1.5us").unwrap(), 1_500);
        assert_eq!(parse_duration_ns("10us").unwrap(), 10_000);
        assert_eq!(parse_duration_ns("2.5ms").unwrap(), 2_500_000);
        assert_eq!(parse_duration_ns("1s").unwrap(), 1_000_000_000);
        assert_eq!(parse_duration_ns(" 3 ms ").unwrap(), 3_000_000);
        assert!(parse_duration_ns("100").is_err());
        assert!(parse_duration_ns("-5ns").is_err());
        assert!(parse_duration_ns("abcus").is_err());
    }

    #[test]
    fn rate_units() {
        assert_eq!(parse_rate_pps("1000pps").unwrap(), 1e3);
        assert_eq!(parse_rate_pps("500kpps").unwrap(), 5e5);
        assert_eq!(parse_rate_pps("14.88mpps").unwrap(), 14.88e6);
        assert!(parse_rate_pps("10").is_err());
        assert!(parse_rate_pps("-1pps").is_err());
    }

    #[test]
    fn full_config_parses() {
        let text = "\
# scenario
m_threads=6
n_queues=3
t_short=20us
t_long=1ms
target_vacation=15us
mu=10.9mpps
batch_size=16
wake_overhead=2us
lock_overhead=50ns
capacity=8192
arrival=flow_mix
rate=14.88mpps   # aggregate
flow=0.3:42
flow=0.7:random
jitter=uniform:0ns:2us
adaptation=on
alpha=0.2
ts_min=2us
ts_max=40us
feed_zero_cycles=off
always_poll=off
horizon=2s
warmup=200ms
stats_window=50ms
vacation_bins=250
seed_arrivals=11
seed_jitter=12
seed_queues=13
out_dir=/tmp/run1
emit_cycles=on
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.m_threads, 6);
        assert_eq!(cfg.n_queues, 3);
        assert_eq!(cfg.t_short_ns, 20_000);
        assert_eq!(cfg.mu_pps, 10.9e6);
        assert_eq!(cfg.jitter, JitterSpec::Uniform(0, 2_000));
        assert_eq!(cfg.ts_max_ns, Some(40_000));
        assert!(!cfg.feed_zero_cycles);
        assert_eq!(cfg.out_dir, Some(PathBuf::from("/tmp/run1")));
        match &cfg.arrival {
            ArrivalKind::FlowMix { rate_pps, entries } => {
                assert_eq!(*rate_pps, 14.88e6);
                assert_eq!(entries.len(), 2);
                assert_eq!(entries[0].flow, FlowChoice::Id(42));
            }
            other => panic!("wrong arrival kind: {other:?}"),
        }
    }

    #[test]
    fn all_problems_reported_with_lines() {
        let text = "m_threads=zero\nrate=5\n\nhorizon=1s\nbogus_key=1\n";
        match parse_config(text) {
            Err(ConfigError::Invalid(issues)) => {
                let lines: Vec<Option<usize>> = issues.iter().map(|i| i.line).collect();
                assert_eq!(lines, vec![Some(1), Some(2), Some(5)]);
            }
            other => panic!("expected issue list, got {other:?}"),
        }
    }

    #[test]
    fn more_threads_than_queues_required() {
        let err = parse_config("m_threads=3\nn_queues=4\n").unwrap_err();
        match err {
            ConfigError::Invalid(issues) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].key.as_deref(), Some("m_threads"));
                assert_eq!(issues[0].line, Some(1));
                assert!(issues[0].msg.contains("n_queues"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn capacity_must_hold_a_batch() {
        let err = parse_config("batch_size=64\ncapacity=32\n").unwrap_err();
        let ConfigError::Invalid(issues) = err else {
            panic!()
        };
        assert!(issues.iter().any(|i| i.key.as_deref() == Some("capacity")));
    }

    #[test]
    fn ramp_defaults_when_no_steps_given() {
        let cfg = parse_config("arrival=ramp\n").unwrap();
        assert_eq!(
            cfg.arrival,
            ArrivalKind::Ramp {
                steps: ramp_profile_default()
            }
        );
        let cfg = parse_config("arrival=ramp\nramp_step=2s:1mpps\nramp_step=2s:2mpps\n").unwrap();
        match cfg.arrival {
            ArrivalKind::Ramp { steps } => assert_eq!(steps.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stray_arrival_keys_are_rejected() {
        assert!(parse_config("arrival=poisson\nramp_step=1s:1mpps\n").is_err());
        assert!(parse_config("flow=0.5:7\n").is_err());
        assert!(parse_config("arrival=ramp\nrate=1mpps\n").is_err());
    }

    #[test]
    fn display_round_trips() {
        let mut cfgs = vec![ScenarioConfig::default()];
        cfgs.push(
            parse_config("arrival=ramp\njitter=heavy_tail:0.01:1ms\nout_dir=/tmp/x\n").unwrap(),
        );
        cfgs.push(
            parse_config(
                "arrival=flow_mix\nrate=3.7mpps\nflow=0.25:9\nflow=0.75:random\nts_max=44us\nadaptation=off\n",
            )
            .unwrap(),
        );
        cfgs.push(parse_config("arrival=cbr\nrate=0.933mpps\njitter=uniform:10ns:90ns\n").unwrap());
        for cfg in cfgs {
            let text = cfg.to_string();
            let back =
                parse_config(&text).unwrap_or_else(|e| panic!("reparse failed: {e}\n{text}"));
            assert_eq!(back, cfg, "round trip changed the config:\n{text}");
        }
    }

    #[test]
    fn overrides_apply_and_guard_structure() {
        let mut cfg = ScenarioConfig::default();
        apply_override(&mut cfg, "rate", "2mpps").unwrap();
        assert_eq!(cfg.arrival, ArrivalKind::Poisson { rate_pps: 2e6 });
        apply_override(&mut cfg, "m_threads", "5").unwrap();
        assert_eq!(cfg.m_threads, 5);
        apply_override(&mut cfg, "arrival", "cbr").unwrap();
        assert_eq!(cfg.arrival, ArrivalKind::Cbr { rate_pps: 14.88e6 });
        assert!(apply_override(&mut cfg, "ramp_step", "1s:1mpps").is_err());
        assert!(apply_override(&mut cfg, "flow", "0.5:1").is_err());
        assert!(apply_override(&mut cfg, "nope", "1").is_err());
    }

    #[test]
    fn ts_max_auto_tracks_thread_share() {
        let mut cfg = ScenarioConfig {
            m_threads: 6,
            n_queues: 3,
            target_vacation_ns: 15_000,
            ..ScenarioConfig::default()
        };
        assert_eq!(cfg.ts_max_resolved(), 33_000); // 1.1 * 2 * 15us
        cfg.ts_max_ns = Some(50_000);
        assert_eq!(cfg.ts_max_resolved(), 50_000);
    }

    #[test]
    fn warmup_must_precede_horizon() {
        let err = parse_config("horizon=100ms\nwarmup=100ms\n").unwrap_err();
        let ConfigError::Invalid(issues) = err else {
            panic!()
        };
        assert!(issues.iter().any(|i| i.key.as_deref() == Some("warmup")));
    }
}
