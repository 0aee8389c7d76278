//! Closed-form stationary model of the sleep/wake retrieval cycle.
//!
//! Queue time is a renewal process alternating vacations V(i) (all threads
//! asleep, arrivals accumulate) and busy periods B(i) (the trylock winner
//! drains at rate mu). With Poisson arrivals at rate lambda and occupancy
//! rho = lambda/mu < 1, the stationary relations are
//!
//! ```text
//!   E[B | V = v] = v * rho / (1 - rho)        busy period regression
//!   rho          = E[B] / (E[V] + E[B])       occupancy fixed point
//! ```
//!
//! The vacation distribution is driven by the sleep timers. Writing t_s for
//! the short (post-service) timeout and t_l for the long (post-collision)
//! timeout, the previous server wakes exactly t_s after the drain ends while
//! each other thread wakes at a uniform residual of its own timer, so the
//! vacation is the minimum of t_s and M-1 (or M) uniform residuals:
//!
//! * high load, one server and M-1 backups on t_l:
//!   `F(x) = 1 - (1 - x/t_l)^(M-1)` for `x < t_s`, plus a probability atom
//!   of mass `(1 - t_s/t_l)^(M-1)` at exactly `x = t_s`;
//! * low load, all M threads primary on t_s:
//!   `F(x) = 1 - (1 - x/t_s)^M` for `x <= t_s` (no atom).
//!
//! [`mean_vacation_general`] bridges the regimes: each competitor is primary
//! with probability p, giving
//!
//! ```text
//!   E[V] = (1 - ((1-p)(1 - t_s/t_l))^M) / (M * (p/t_s + (1-p)/t_l))
//! ```
//!
//! which reduces to the high-load mean at p = 0 and to t_s/M at p = 1, and
//! for t_l >> t_s is approximated by `E[V] ~= (t_s/M) * (1 - (1-p)^M) / p`.
//! Inverting that approximation at a target mean gives the adaptive timer
//! rule implemented by [`adaptive_ts`] and, for N queues sharing M threads,
//! [`adaptive_ts_multiqueue`].
//!
//! Durations are unit-agnostic: supply every duration in one unit and
//! results come back in that unit (densities in its reciprocal). The
//! simulator calls these with nanoseconds. Probabilities are clamped to
//! [0, 1] after floating-point evaluation.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// The queue is not stable: occupancy at or above 1.
    #[error("unstable load: rho = {rho} (stationary model needs rho < 1)")]
    Unstable { rho: f64 },
    /// Occupancy is 0/0: no busy time and no vacation time observed.
    #[error("undefined load: busy and vacation means are both zero")]
    UndefinedLoad,
    /// A structural parameter is out of range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The requested point lies outside the curve's domain.
    #[error("outside domain: {0}")]
    OutOfDomain(String),
}

// ============================================================================
// Parameter types
// ============================================================================

/// Thread/timer configuration shared by the vacation-distribution curves.
///
/// Durations are in caller units (the simulator uses nanoseconds as f64).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub m_threads: u32,
    pub n_queues: u32,
    /// Short timeout slept after serving a queue.
    pub t_short: f64,
    /// Long timeout slept after losing the trylock race. `t_long >= t_short`.
    pub t_long: f64,
    /// Mean vacation targeted by the adaptive timer rule.
    pub target_vacation: f64,
}

impl ModelParams {
    pub fn new(
        m_threads: u32,
        n_queues: u32,
        t_short: f64,
        t_long: f64,
        target_vacation: f64,
    ) -> Result<Self, ModelError> {
        if m_threads < 1 {
            return Err(ModelError::InvalidParams("m_threads must be >= 1".into()));
        }
        if n_queues < 1 {
            return Err(ModelError::InvalidParams("n_queues must be >= 1".into()));
        }
        if n_queues > 1 && m_threads < n_queues {
            return Err(ModelError::InvalidParams(format!(
                "m_threads = {m_threads} < n_queues = {n_queues}"
            )));
        }
        if t_short <= 0.0 || !t_short.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "t_short must be positive, got {t_short}"
            )));
        }
        if t_long < t_short || !t_long.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "t_long = {t_long} must be >= t_short = {t_short}"
            )));
        }
        if target_vacation <= 0.0 || !target_vacation.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "target_vacation must be positive, got {target_vacation}"
            )));
        }
        Ok(Self {
            m_threads,
            n_queues,
            t_short,
            t_long,
            target_vacation,
        })
    }
}

/// An arrival/service operating point with `rho = lambda / mu < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    /// Arrival rate (packets per unit time).
    pub lambda: f64,
    /// Drain rate (packets per unit time).
    pub mu: f64,
    /// Occupancy, `lambda / mu`.
    pub rho: f64,
}

impl LoadPoint {
    /// Builds a load point from rates; stability (`rho < 1`) is checked here.
    pub fn from_rates(lambda: f64, mu: f64) -> Result<Self, ModelError> {
        if mu <= 0.0 || !mu.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        let rho = lambda / mu;
        if rho >= 1.0 {
            return Err(ModelError::Unstable { rho });
        }
        Ok(Self { lambda, mu, rho })
    }

    /// Builds a load point directly from an occupancy in [0, 1).
    pub fn from_rho(rho: f64) -> Result<Self, ModelError> {
        if rho < 0.0 || !rho.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "rho must be non-negative, got {rho}"
            )));
        }
        if rho >= 1.0 {
            return Err(ModelError::Unstable { rho });
        }
        Ok(Self {
            lambda: rho,
            mu: 1.0,
            rho,
        })
    }
}

/// Which timer population shapes the vacation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// One server on `t_short`, M-1 backups on `t_long`; atom at `t_short`.
    HighLoad,
    /// All M threads primary on `t_short`; continuous up to `t_short`.
    LowLoad,
}

fn clamp01(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

// ============================================================================
// Busy period / occupancy fixed point
// ============================================================================

/// Mean busy period following a vacation of mean `vacation_mean`:
/// `E[B] = vacation_mean * rho / (1 - rho)`.
pub fn expected_busy_given_vacation(
    vacation_mean: f64,
    load: &LoadPoint,
) -> Result<f64, ModelError> {
    debug_assert!(vacation_mean >= 0.0);
    if load.rho >= 1.0 {
        return Err(ModelError::Unstable { rho: load.rho });
    }
    Ok(vacation_mean * load.rho / (1.0 - load.rho))
}

/// Occupancy recovered from observed period means: `rho = B / (V + B)`.
pub fn load_from_periods(busy_mean: f64, vacation_mean: f64) -> Result<f64, ModelError> {
    debug_assert!(busy_mean >= 0.0 && vacation_mean >= 0.0);
    let total = busy_mean + vacation_mean;
    if total <= 0.0 {
        return Err(ModelError::UndefinedLoad);
    }
    Ok(clamp01(busy_mean / total))
}

// ============================================================================
// Vacation distribution, high load (one server, M-1 backups)
// ============================================================================

/// High-load vacation CDF: `1 - (1 - x/t_long)^(M-1)` below `t_short`, then 1.
///
/// The jump to 1 at `x = t_short` is the atom where no backup wakes first;
/// its mass is exposed by [`vacation_atom_high_load`]. Intended for
/// `p.m_threads >= 2` (with M = 1 it degenerates to the pure atom).
pub fn vacation_cdf_high_load(x: f64, p: &ModelParams) -> f64 {
    debug_assert!(x >= 0.0);
    if x >= p.t_short {
        return 1.0;
    }
    let base = 1.0 - x / p.t_long;
    clamp01(1.0 - powi(base, p.m_threads - 1))
}

/// Probability that the vacation equals `t_short` exactly: no backup wakes
/// inside the server's short sleep, mass `(1 - t_short/t_long)^(M-1)`.
pub fn vacation_atom_high_load(p: &ModelParams) -> f64 {
    clamp01(powi(1.0 - p.t_short / p.t_long, p.m_threads - 1))
}

/// High-load vacation density on `0 <= x < t_short`:
/// `((M-1)/t_long) * (1 - x/t_long)^(M-2)`.
///
/// The density excludes the atom at `t_short`; together they integrate to 1.
pub fn vacation_pdf_high_load(x: f64, p: &ModelParams) -> Result<f64, ModelError> {
    if p.m_threads < 2 {
        return Err(ModelError::InvalidParams(
            "high-load density needs m_threads >= 2 (with one thread the \
             vacation is the pure atom at t_short)"
                .into(),
        ));
    }
    if x < 0.0 || x >= p.t_short {
        return Err(ModelError::OutOfDomain(format!(
            "density is defined on 0 <= x < t_short = {}, got {x}",
            p.t_short
        )));
    }
    let m = p.m_threads;
    Ok((f64::from(m - 1) / p.t_long) * powi(1.0 - x / p.t_long, m - 2))
}

/// Mean high-load vacation: `(t_long/M) * (1 - (1 - t_short/t_long)^M)`.
///
/// Limits: M = 1 gives `t_short`; `t_short = t_long` gives `t_long / M`.
pub fn mean_vacation_high_load(p: &ModelParams) -> f64 {
    let m = p.m_threads;
    (p.t_long / f64::from(m)) * (1.0 - powi(1.0 - p.t_short / p.t_long, m))
}

/// Probability that a given backup thread is the one that ends the vacation:
/// `(1 - t_short/t_long)^(M-1) / (M-1)`.
pub fn backup_success_prob(p: &ModelParams) -> Result<f64, ModelError> {
    if p.m_threads < 2 {
        return Err(ModelError::InvalidParams(
            "backup success needs m_threads >= 2".into(),
        ));
    }
    let m = p.m_threads;
    Ok(powi(1.0 - p.t_short / p.t_long, m - 1) / f64::from(m - 1))
}

// ============================================================================
// Vacation distribution, low load (M primaries)
// ============================================================================

/// Low-load vacation CDF: `1 - (1 - x/t_short)^M` for `x <= t_short`, then 1.
/// Mean `t_short / M`; no atom.
pub fn vacation_cdf_low_load(x: f64, p: &ModelParams) -> f64 {
    debug_assert!(x >= 0.0);
    if x >= p.t_short {
        return 1.0;
    }
    clamp01(1.0 - powi(1.0 - x / p.t_short, p.m_threads))
}

/// Vacation CDF under either regime, atom included (the value at and beyond
/// `t_short` is exactly 1). This is the reference curve for distribution
/// comparisons against simulated vacations.
pub fn vacation_cdf(x: f64, p: &ModelParams, regime: Regime) -> f64 {
    match regime {
        Regime::HighLoad => vacation_cdf_high_load(x, p),
        Regime::LowLoad => vacation_cdf_low_load(x, p),
    }
}

/// Inverse CDF of the vacation distribution; `u` must lie in [0, 1).
/// Quantiles at and past the high-load atom map to exactly `t_short`.
pub fn vacation_quantile(u: f64, p: &ModelParams, regime: Regime) -> f64 {
    debug_assert!((0.0..1.0).contains(&u));
    match regime {
        Regime::HighLoad => {
            if p.m_threads == 1 {
                return p.t_short;
            }
            let atom = vacation_atom_high_load(p);
            if u >= 1.0 - atom {
                p.t_short
            } else {
                p.t_long * (1.0 - (1.0 - u).powf(1.0 / f64::from(p.m_threads - 1)))
            }
        }
        Regime::LowLoad => p.t_short * (1.0 - (1.0 - u).powf(1.0 / f64::from(p.m_threads))),
    }
}

// ============================================================================
// General load
// ============================================================================

/// Mean vacation when each competing thread is primary with probability p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralLoadMean {
    /// Exact mean of `min` over M competitors mixing both timers.
    pub exact: f64,
    /// The `t_long >> t_short` approximation `(t_short/M)(1-(1-p)^M)/p`.
    pub approx: f64,
}

/// Mean vacation at a general operating point.
///
/// Each of the M competitors is primary (sleeping `t_short`) with probability
/// `primary_prob` and backup (sleeping `t_long`) otherwise. Integrating the
/// survival function `(1 - p x/t_s - (1-p) x/t_l)^M` over `[0, t_short]`:
///
/// ```text
///   exact = (1 - ((1-p)(1 - t_s/t_l))^M) / (M * (p/t_s + (1-p)/t_l))
/// ```
///
/// At p = 0 this equals [`mean_vacation_high_load`]'s value with M
/// competitors; at p = 1 it equals `t_short / M`. The `approx` field is the
/// `t_long -> inf` limit, exact at p = 0 only in that limit.
pub fn mean_vacation_general(
    p: &ModelParams,
    primary_prob: f64,
) -> Result<GeneralLoadMean, ModelError> {
    if !(0.0..=1.0).contains(&primary_prob) {
        return Err(ModelError::InvalidParams(format!(
            "primary_prob must be in [0, 1], got {primary_prob}"
        )));
    }
    let m = f64::from(p.m_threads);
    let prob = primary_prob;

    let slope = prob / p.t_short + (1.0 - prob) / p.t_long;
    let base = (1.0 - prob) * (1.0 - p.t_short / p.t_long);
    let exact = (1.0 - powi(base, p.m_threads)) / (m * slope);

    // 1 - (1-p)^M evaluated stably for tiny p via expm1/ln_1p.
    let approx = if prob == 0.0 {
        p.t_short
    } else {
        let one_minus_qm = -f64::exp_m1(m * f64::ln_1p(-prob));
        (p.t_short / m) * one_minus_qm / prob
    };
    Ok(GeneralLoadMean { exact, approx })
}

// ============================================================================
// Adaptive timer rule
// ============================================================================

/// Short-timeout rule hitting a target mean vacation at occupancy `rho`:
///
/// ```text
///   t_short = M (1 - rho) / (1 - rho^M) * target
///           = M * target / (1 + rho + ... + rho^(M-1))
/// ```
///
/// The geometric-sum form is used so rho = 1 evaluates to exactly `target`
/// with no 0/0; `rho` is clamped to [0, 1] first. Range: `[target, M*target]`,
/// decreasing in rho.
pub fn adaptive_ts(m_threads: u32, rho: f64, target_vacation: f64) -> f64 {
    debug_assert!(m_threads >= 1 && target_vacation > 0.0);
    let rho = clamp01(rho);
    let mut geom_sum = 0.0;
    let mut term = 1.0;
    for _ in 0..m_threads {
        geom_sum += term;
        term *= rho;
    }
    f64::from(m_threads) * target_vacation / geom_sum
}

/// Per-queue variant of [`adaptive_ts`] for N queues sharing M threads, with
/// an effective real-valued competitor count `k = M/N`:
///
/// ```text
///   t_short = k (1 - rho) / (1 - rho^k) * target
/// ```
///
/// At `rho -> 1` the ratio tends to `1/k`, so the rule returns `target`
/// there. Matches [`adaptive_ts`] exactly when N = 1.
pub fn adaptive_ts_multiqueue(
    m_threads: u32,
    n_queues: u32,
    rho: f64,
    target_vacation: f64,
) -> Result<f64, ModelError> {
    if m_threads < 1 || n_queues < 1 {
        return Err(ModelError::InvalidParams(
            "m_threads and n_queues must be >= 1".into(),
        ));
    }
    if m_threads < n_queues {
        return Err(ModelError::InvalidParams(format!(
            "m_threads = {m_threads} < n_queues = {n_queues}"
        )));
    }
    if target_vacation <= 0.0 || !target_vacation.is_finite() {
        return Err(ModelError::InvalidParams(format!(
            "target_vacation must be positive, got {target_vacation}"
        )));
    }
    let k = f64::from(m_threads) / f64::from(n_queues);
    let rho = clamp01(rho);
    if rho == 0.0 {
        return Ok(k * target_vacation);
    }
    if 1.0 - rho < 1e-12 {
        return Ok(target_vacation);
    }
    Ok(k * (1.0 - rho) / (1.0 - rho.powf(k)) * target_vacation)
}

/// `base^e` for small non-negative integer exponents without powf drift.
fn powi(base: f64, e: u32) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(m: u32, t_short: f64, t_long: f64) -> ModelParams {
        ModelParams::new(m, 1, t_short, t_long, t_short).unwrap()
    }

    #[test]
    fn busy_regression_matches_hand_value() {
        // V = 10us at rho = 2/3 doubles into a 20us busy period.
        let load = LoadPoint::from_rho(2.0 / 3.0).unwrap();
        let b = expected_busy_given_vacation(10.0, &load).unwrap();
        assert_relative_eq!(b, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn busy_regression_rejects_saturation() {
        assert_eq!(
            LoadPoint::from_rho(1.0),
            Err(ModelError::Unstable { rho: 1.0 })
        );
        let load = LoadPoint {
            lambda: 2.0,
            mu: 2.0,
            rho: 1.0,
        };
        assert!(matches!(
            expected_busy_given_vacation(1.0, &load),
            Err(ModelError::Unstable { .. })
        ));
    }

    #[test]
    fn occupancy_from_measured_periods() {
        // Measured no-loss operating point: V = 19.55us, B = 20.24us.
        let rho = load_from_periods(20.24, 19.55).unwrap();
        assert_relative_eq!(rho, 0.508_670_5, max_relative = 1e-6);
        assert_eq!(load_from_periods(0.0, 0.0), Err(ModelError::UndefinedLoad));
        assert_eq!(load_from_periods(0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn occupancy_inverts_busy_regression() {
        for rho in [0.0, 0.1, 0.35, 0.6, 0.875, 0.99] {
            let load = LoadPoint::from_rho(rho).unwrap();
            for v in [0.5, 10.0, 1e6] {
                let b = expected_busy_given_vacation(v, &load).unwrap();
                assert_relative_eq!(load_from_periods(b, v).unwrap(), rho, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn high_load_cdf_values() {
        let p = params(3, 10.0, 500.0);
        // Just below the short timeout: 1 - (1 - 9.99/500)^2.
        assert_relative_eq!(
            vacation_cdf_high_load(9.99, &p),
            0.039_560_8,
            epsilon = 1e-7
        );
        assert_eq!(vacation_cdf_high_load(0.0, &p), 0.0);
        assert_eq!(vacation_cdf_high_load(10.0, &p), 1.0);
        assert_eq!(vacation_cdf_high_load(400.0, &p), 1.0);
    }

    #[test]
    fn high_load_atom_mass() {
        let p = params(3, 10.0, 500.0);
        assert_relative_eq!(vacation_atom_high_load(&p), 0.98 * 0.98, epsilon = 1e-12);
        // With a single thread the whole distribution is the atom.
        assert_eq!(vacation_atom_high_load(&params(1, 10.0, 500.0)), 1.0);
        // t_short = t_long leaves no atom.
        assert_eq!(vacation_atom_high_load(&params(3, 50.0, 50.0)), 0.0);
    }

    #[test]
    fn high_load_mean_value() {
        let p = params(3, 10.0, 500.0);
        assert_relative_eq!(mean_vacation_high_load(&p), 9.801_333_3, epsilon = 1e-6);
        // M = 1: the server always sleeps out its own timer.
        assert_relative_eq!(
            mean_vacation_high_load(&params(1, 10.0, 500.0)),
            10.0,
            epsilon = 1e-12
        );
        // Equal timers: t_long / M.
        assert_relative_eq!(
            mean_vacation_high_load(&params(4, 50.0, 50.0)),
            12.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn backup_success_values() {
        assert_relative_eq!(
            backup_success_prob(&params(2, 10.0, 500.0)).unwrap(),
            0.98,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            backup_success_prob(&params(3, 10.0, 500.0)).unwrap(),
            0.4802,
            epsilon = 1e-12
        );
        assert!(matches!(
            backup_success_prob(&params(1, 10.0, 500.0)),
            Err(ModelError::InvalidParams(_))
        ));
    }

    #[test]
    fn low_load_cdf_values() {
        let p = params(2, 50.0, 50.0);
        assert_relative_eq!(vacation_cdf_low_load(25.0, &p), 0.75, epsilon = 1e-12);
        assert_eq!(vacation_cdf_low_load(50.0, &p), 1.0);
        assert_eq!(vacation_cdf_low_load(80.0, &p), 1.0);
    }

    #[test]
    fn high_load_pdf_values() {
        // Equal 50us timers, two threads: flat density 1/50 per unit.
        let p = params(2, 50.0, 50.0);
        assert_relative_eq!(
            vacation_pdf_high_load(0.0, &p).unwrap(),
            0.02,
            epsilon = 1e-12
        );
        // Three threads, 50us timers: density 2/50 at the origin.
        let p3 = params(3, 50.0, 50.0);
        assert_relative_eq!(
            vacation_pdf_high_load(0.0, &p3).unwrap(),
            0.04,
            epsilon = 1e-12
        );
        assert!(matches!(
            vacation_pdf_high_load(50.0, &p3),
            Err(ModelError::OutOfDomain(_))
        ));
        assert!(matches!(
            vacation_pdf_high_load(0.0, &params(1, 10.0, 500.0)),
            Err(ModelError::InvalidParams(_))
        ));
    }

    #[test]
    fn general_mean_approximation_value() {
        // p = 0.5, M = 2, t_short = 20: (20/2) * (1 - 0.25) / 0.5 = 15.
        let p = ModelParams::new(2, 1, 20.0, 20_000.0, 20.0).unwrap();
        let gm = mean_vacation_general(&p, 0.5).unwrap();
        assert_relative_eq!(gm.approx, 15.0, epsilon = 1e-9);
        assert_relative_eq!(gm.exact, 15.0, max_relative = 1e-3);
    }

    #[test]
    fn general_mean_limits() {
        let p = params(3, 10.0, 500.0);
        // All-backup limit reproduces the high-load mean.
        let gm0 = mean_vacation_general(&p, 0.0).unwrap();
        assert_relative_eq!(gm0.exact, mean_vacation_high_load(&p), epsilon = 1e-12);
        assert_relative_eq!(gm0.approx, p.t_short, epsilon = 1e-12);
        // All-primary limit collapses to t_short / M.
        let gm1 = mean_vacation_general(&p, 1.0).unwrap();
        assert_relative_eq!(gm1.exact, p.t_short / 3.0, epsilon = 1e-12);
        assert_relative_eq!(gm1.approx, p.t_short / 3.0, epsilon = 1e-12);
        assert!(mean_vacation_general(&p, 1.5).is_err());
    }

    #[test]
    fn general_mean_matches_first_principles_quadrature() {
        // The vacation is min(t_short, M-1 competitor residuals); each
        // competitor survives past x with p(1 - x/t_short) + (1-p)(1 - x/t_long),
        // so E[V] = integral_0^t_short (1 - cx)^(M-1) dx with
        // c = p/t_short + (1-p)/t_long. Simpson on 2000 panels is far beyond
        // the needed accuracy for these low-degree polynomials.
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize| {
            let h = (b - a) / panels as f64;
            let mut acc = f(a) + f(b);
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + i as f64 * h);
            }
            acc * h / 3.0
        };
        let t_short = 10.0;
        for m in 1u32..=8 {
            for ratio in [0.002, 0.05, 0.2, 1.0] {
                let p = params(m, t_short, t_short / ratio);
                let mut prob: f64 = 0.0;
                while prob <= 1.0 + 1e-12 {
                    let exact = mean_vacation_general(&p, prob.min(1.0)).unwrap().exact;
                    let c = prob.min(1.0) / p.t_short + (1.0 - prob.min(1.0)) / p.t_long;
                    let f = |x: f64| (1.0 - c * x).powi(m as i32 - 1);
                    let quad = simpson(&f, 0.0, t_short, 2_000);
                    assert_relative_eq!(exact, quad, max_relative = 1e-9);
                    // Pairing each probability with the other timer is a
                    // different (wrong) law; it must not match the integral.
                    let cs = prob.min(1.0) / p.t_long + (1.0 - prob.min(1.0)) / p.t_short;
                    let swapped = (1.0 - ((1.0 - cs * t_short).max(0.0)).powi(m as i32))
                        / (f64::from(m) * cs);
                    // The two pairings coincide at m = 1, at t_short = t_long,
                    // and at p = 0.5 (symmetric mixture), so test away from
                    // those degeneracies.
                    if m >= 2 && ratio <= 0.2 && (prob - 0.5).abs() > 0.2 {
                        assert!(
                            (swapped - quad).abs() / quad > 0.01,
                            "m={m} ratio={ratio} p={prob}: swapped form should diverge"
                        );
                    }
                    prob += 0.05;
                }
            }
        }
    }

    #[test]
    fn approximation_tracks_exact_for_long_backup_timers() {
        // Wide-separation check: within 5% whenever t_long/t_short >= 100,
        // and the gap shrinks linearly in t_short/t_long (the discarded terms
        // are first order in that ratio).
        for m in 2..=8 {
            let rel_at = |ratio: f64, prob: f64| {
                let p = ModelParams::new(m, 1, 10.0, 10.0 * ratio, 10.0).unwrap();
                let gm = mean_vacation_general(&p, prob).unwrap();
                (gm.exact - gm.approx).abs() / gm.exact
            };
            let mut prob = 0.05;
            while prob <= 1.0 {
                let coarse = rel_at(100.0, prob);
                let fine = rel_at(1000.0, prob);
                assert!(coarse <= 0.05, "m={m} p={prob}: rel={coarse} at ratio 100");
                assert!(
                    fine <= 0.2 * coarse + 1e-9,
                    "m={m} p={prob}: rel {coarse} -> {fine} did not shrink with the ratio"
                );
                prob += 0.05;
            }
        }
    }

    #[test]
    fn adaptive_rule_values() {
        // rho = 0.5, M = 3: 3 * 10 / (1 + 0.5 + 0.25).
        assert_relative_eq!(
            adaptive_ts(3, 0.5, 10.0),
            17.142_857_142_857_14,
            epsilon = 1e-9
        );
        assert_relative_eq!(adaptive_ts(3, 0.0, 10.0), 30.0, epsilon = 1e-12);
        assert_relative_eq!(adaptive_ts(3, 1.0, 10.0), 10.0, epsilon = 1e-12);
        assert_relative_eq!(adaptive_ts(1, 0.7, 10.0), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_rule_multiqueue_values() {
        // M = 6, N = 3, rho = 0.5: 2 * 0.5 / 0.75 * 15 = 20.
        assert_relative_eq!(
            adaptive_ts_multiqueue(6, 3, 0.5, 15.0).unwrap(),
            20.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            adaptive_ts_multiqueue(4, 4, 0.3, 12.0).unwrap(),
            12.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            adaptive_ts_multiqueue(8, 4, 1.0, 15.0).unwrap(),
            15.0,
            epsilon = 1e-12
        );
        assert!(adaptive_ts_multiqueue(3, 4, 0.5, 10.0).is_err());
    }

    #[test]
    fn adaptive_rule_single_queue_forms_agree() {
        for m in 1..=8 {
            for rho in [0.0, 0.01, 0.3, 0.77, 0.999, 1.0] {
                let sum_form = adaptive_ts(m, rho, 10.0);
                let ratio_form = adaptive_ts_multiqueue(m, 1, rho, 10.0).unwrap();
                assert_relative_eq!(sum_form, ratio_form, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let p = params(3, 10.0, 500.0);
        for u in [0.0, 0.005, 0.01, 0.019] {
            let x = vacation_quantile(u, &p, Regime::HighLoad);
            assert_relative_eq!(vacation_cdf(x, &p, Regime::HighLoad), u, epsilon = 1e-9);
        }
        // Past the continuous mass everything lands on the atom.
        assert_eq!(vacation_quantile(0.9, &p, Regime::HighLoad), 10.0);
        for u in [0.0, 0.25, 0.5, 0.99] {
            let x = vacation_quantile(u, &p, Regime::LowLoad);
            assert_relative_eq!(vacation_cdf(x, &p, Regime::LowLoad), u, epsilon = 1e-9);
        }
    }

    #[test]
    fn param_validation() {
        assert!(ModelParams::new(0, 1, 1.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(3, 0, 1.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(3, 4, 1.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1, 0.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1, 5.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1, 1.0, 2.0, 0.0).is_err());
        assert!(ModelParams::new(8, 4, 1.0, 2.0, 1.0).is_ok());
        assert!(LoadPoint::from_rates(10.0, 5.0).is_err());
        assert!(LoadPoint::from_rates(4.0, 5.0).is_ok());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cdfs_are_monotone_and_bounded(
                m in 1u32..=8,
                ts_frac in 0.002f64..=1.0,
                xs in proptest::collection::vec(0.0f64..1.2, 2..40),
            ) {
                let t_long = 500.0;
                let p = ModelParams::new(m, 1, ts_frac * t_long, t_long, 10.0).unwrap();
                let mut pts: Vec<f64> = xs.iter().map(|f| f * t_long).collect();
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for regime in [Regime::HighLoad, Regime::LowLoad] {
                    let mut prev = 0.0;
                    for &x in &pts {
                        let c = vacation_cdf(x, &p, regime);
                        prop_assert!((0.0..=1.0).contains(&c));
                        prop_assert!(c >= prev - 1e-15);
                        prev = c;
                    }
                }
            }

            #[test]
            fn occupancy_fixed_point_roundtrips(
                rho in 0.0f64..0.99,
                v in 1e-3f64..1e9,
            ) {
                let load = LoadPoint::from_rho(rho).unwrap();
                let b = expected_busy_given_vacation(v, &load).unwrap();
                let back = load_from_periods(b, v).unwrap();
                prop_assert!((back - rho).abs() <= 1e-12);
            }

            #[test]
            fn adaptive_rule_stays_in_range_and_decreases(
                m in 1u32..=16,
                n in 1u32..=4,
                target in 1e2f64..1e6,
                rho_lo in 0.0f64..=1.0,
                step in 0.0f64..=0.5,
            ) {
                prop_assume!(m >= n);
                let rho_hi = (rho_lo + step).min(1.0);
                let k = f64::from(m) / f64::from(n);
                let lo = adaptive_ts_multiqueue(m, n, rho_lo, target).unwrap();
                let hi = adaptive_ts_multiqueue(m, n, rho_hi, target).unwrap();
                prop_assert!(lo <= k * target * (1.0 + 1e-12));
                prop_assert!(lo >= target * (1.0 - 1e-12));
                // Higher occupancy never lengthens the timer.
                prop_assert!(hi <= lo * (1.0 + 1e-12));
            }

            #[test]
            fn high_load_pdf_is_nonnegative(
                m in 2u32..=8,
                x_frac in 0.0f64..1.0,
            ) {
                let p = ModelParams::new(m, 1, 10.0, 500.0, 10.0).unwrap();
                let x = x_frac * (p.t_short - 1e-9);
                prop_assert!(vacation_pdf_high_load(x, &p).unwrap() >= 0.0);
            }
        }
    }
}
