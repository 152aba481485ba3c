//! The two-timescale clock and tick-level AoI law.
//!
//! AoI, safety checks, and safety queues evolve at the accounting tick
//! `tau_ac`; association, power, and handover decisions happen once per
//! decision slot `tau_s = N_ac * tau_ac`. The tick law is the ground truth;
//! the slot summary exists only for the controller's drift accounting.
//!
//! Ages are kept in integer ticks everywhere. Conversion to seconds is a
//! display concern.

use crate::rng::Stream;

/// Number of message priority classes (collision alert, platoon control,
/// map update).
pub const CLASS_COUNT: usize = 3;

// ============================================================================
// Timescales
// ============================================================================

/// The nested slot/tick clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimescaleConfig {
    /// Decision slot duration, seconds.
    pub slot_seconds: f64,
    /// Accounting tick duration, seconds.
    pub tick_seconds: f64,
    /// Ticks per slot.
    pub ticks_per_slot: u32,
}

impl TimescaleConfig {
    /// Builds the clock from a slot length and tick count.
    pub fn from_ticks_per_slot(slot_seconds: f64, ticks_per_slot: u32) -> Self {
        Self {
            slot_seconds,
            tick_seconds: slot_seconds / ticks_per_slot as f64,
            ticks_per_slot,
        }
    }

    /// Global tick index of tick `n` (0-based) in slot `t`.
    pub fn global_tick(&self, slot: u64, n: u32) -> u64 {
        slot * self.ticks_per_slot as u64 + n as u64
    }
}

impl Default for TimescaleConfig {
    fn default() -> Self {
        Self::from_ticks_per_slot(1.0, 50)
    }
}

/// Outcome of the tick-size design rule check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRuleReport {
    /// Whether `tick <= min(delta_safe_min, tau_ho_min) / 2` holds.
    pub rule_holds: bool,
    /// Whether the slot divides exactly into ticks.
    pub integer_ticks: bool,
    /// Implied minimum-class safety threshold in ticks.
    pub n_safe_min: f64,
    /// Implied minimum outage length in ticks.
    pub n_ho_min: u32,
    /// Overall pass: rule holds, ticks are integral, `n_safe_min >= 2`, and
    /// `n_ho_min >= 1`.
    pub pass: bool,
}

/// Checks the sufficient tick-size rule guaranteeing that the tightest
/// safety deadline resolves to at least two ticks and the shortest outage to
/// at least one.
pub fn validate_tick_rule(cfg: &TimescaleConfig, delta_safe_min_s: f64, tau_ho_min_s: f64) -> TickRuleReport {
    let bound = 0.5 * if delta_safe_min_s < tau_ho_min_s { delta_safe_min_s } else { tau_ho_min_s };
    // Closed inequality: equality at the boundary passes.
    let rule_holds = cfg.tick_seconds <= bound + 1e-12;
    let n_safe_min = delta_safe_min_s / cfg.tick_seconds;
    let n_ho_min = libm::floor(tau_ho_min_s / cfg.tick_seconds + 1e-9) as u32;
    let integer_ticks = {
        let ratio = cfg.slot_seconds / cfg.tick_seconds;
        libm::fabs(ratio - libm::round(ratio)) < 1e-6
            && libm::round(ratio) as u32 == cfg.ticks_per_slot
    };
    TickRuleReport {
        rule_holds,
        integer_ticks,
        n_safe_min,
        n_ho_min,
        pass: rule_holds && integer_ticks && n_safe_min >= 2.0 - 1e-9 && n_ho_min >= 1,
    }
}

// ============================================================================
// AoI state
// ============================================================================

/// Tick-resolution age counter for one (vehicle, class) flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AoiState {
    /// Current age in ticks; at least 1 after any reset.
    pub age_ticks: u32,
    /// Global tick index of the last successful update.
    pub last_reset_tick: u64,
}

impl AoiState {
    /// Fresh flow: one tick old.
    pub fn fresh() -> Self {
        Self {
            age_ticks: 1,
            last_reset_tick: 0,
        }
    }

    /// Flow starting at an arbitrary age.
    pub fn with_age(age_ticks: u32) -> Self {
        Self {
            age_ticks,
            last_reset_tick: 0,
        }
    }
}

/// One application of the tick law: a successful update resets the age to
/// exactly 1, anything else increments it by 1.
pub fn tick_update(state: AoiState, success: bool, global_tick: u64) -> AoiState {
    if success {
        AoiState {
            age_ticks: 1,
            last_reset_tick: global_tick,
        }
    } else {
        AoiState {
            age_ticks: state.age_ticks + 1,
            last_reset_tick: state.last_reset_tick,
        }
    }
}

// ============================================================================
// Safety thresholds
// ============================================================================

/// Per-class freshness deadlines in ticks, violation budgets, and objective
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyThresholds {
    /// Deadline per class, ticks. Strictly increasing across classes.
    pub n_safe: [u32; CLASS_COUNT],
    /// Violation budget per class. Strictly increasing across classes.
    pub epsilon: [f64; CLASS_COUNT],
    /// Objective weight per class. Strictly decreasing across classes.
    pub weights: [f64; CLASS_COUNT],
}

impl SafetyThresholds {
    /// Maps per-class deadlines in seconds to integer tick counts.
    pub fn from_deadlines(
        deadlines_s: [f64; CLASS_COUNT],
        epsilon: [f64; CLASS_COUNT],
        weights: [f64; CLASS_COUNT],
        tick_seconds: f64,
    ) -> Self {
        let mut n_safe = [0u32; CLASS_COUNT];
        for (n, d) in n_safe.iter_mut().zip(deadlines_s) {
            *n = libm::floor(d / tick_seconds + 1e-9) as u32;
        }
        Self { n_safe, epsilon, weights }
    }

    /// Checks the ordering invariants.
    pub fn validate(&self) -> bool {
        self.n_safe[0] < self.n_safe[1]
            && self.n_safe[1] < self.n_safe[2]
            && self.epsilon[0] < self.epsilon[1]
            && self.epsilon[1] < self.epsilon[2]
            && self.weights[0] > self.weights[1]
            && self.weights[1] > self.weights[2]
            && self.weights[2] > 0.0
    }
}

impl Default for SafetyThresholds {
    fn default() -> Self {
        Self {
            n_safe: [5, 10, 50],
            epsilon: [0.01, 0.05, 0.20],
            weights: [5.0, 2.0, 0.5],
        }
    }
}

// ============================================================================
// Handover outage model
// ============================================================================

/// Statistics of the handover interruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageModel {
    /// Mean outage length, milliseconds.
    pub mean_ms: f64,
    /// Standard deviation, milliseconds.
    pub std_ms: f64,
    /// Support lower bound, milliseconds. Draws are truncated here.
    pub min_ms: f64,
}

impl Default for OutageModel {
    fn default() -> Self {
        Self {
            mean_ms: 225.0,
            std_ms: 25.0,
            min_ms: 150.0,
        }
    }
}

impl OutageModel {
    /// Draws one outage duration in seconds (truncated normal).
    pub fn sample_seconds(&self, rng: &mut Stream) -> f64 {
        rng.truncated_normal(self.mean_ms, self.std_ms, self.min_ms) * 1e-3
    }

    /// Draws one outage length in whole ticks.
    pub fn sample_ticks(&self, rng: &mut Stream, tick_seconds: f64) -> u32 {
        outage_ticks(self.sample_seconds(rng), tick_seconds).0
    }

    /// Expected outage length in ticks (before the floor).
    pub fn mean_ticks(&self, tick_seconds: f64) -> f64 {
        self.mean_ms * 1e-3 / tick_seconds
    }
}

/// Discretizes an outage duration to whole ticks, returning the floor count
/// and the fractional tick lost to the floor.
///
/// # Panics
/// Panics when the duration is shorter than one tick; the outage model's
/// truncation is required to prevent that.
pub fn outage_ticks(tau_ho_s: f64, tick_seconds: f64) -> (u32, f64) {
    assert!(
        tau_ho_s >= tick_seconds,
        "outage shorter than one tick violates the tick-rule precondition"
    );
    let ratio = tau_ho_s / tick_seconds;
    let n = libm::floor(ratio + 1e-9) as u32;
    (n, ratio - n as f64)
}

// ============================================================================
// Slot summary and expected increment
// ============================================================================

/// Coarse slot-level age summary used by the controller's drift accounting:
/// a connected slot with at least one successful tick ends at age 1; any
/// other slot adds a full slot of ticks.
pub fn slot_summary(age_start: u32, connected: bool, any_tick_success: bool, ticks_per_slot: u32) -> u32 {
    if connected && any_tick_success {
        1
    } else {
        age_start + ticks_per_slot
    }
}

/// Expected per-slot age change for a connected slot,
/// `N_ac - P_succ * (N_ac + age - 1)`.
pub fn expected_slot_increment(age: u32, p_succ: f64, ticks_per_slot: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_succ));
    let n = ticks_per_slot as f64;
    n - p_succ * (n + age as f64 - 1.0)
}

// ============================================================================
// Followers and power
// ============================================================================

/// End-to-end age at a follower: the leader's age plus the deterministic
/// V2V relay delay in ticks.
pub fn follower_aoi(pl_age_ticks: u32, v2v_delay_ticks: u32) -> u32 {
    pl_age_ticks + v2v_delay_ticks
}

/// Relay delay profile down the platoon: follower `hop_index` (1-based) at
/// an intra-platoon gap of `gap_m` meters sits `floor(hop_index * gap_m /
/// reach_m)` ticks behind the leader, one tick per relay hop of reach
/// `reach_m`.
pub fn v2v_delay_ticks(hop_index: u32, gap_m: f64, reach_m: f64) -> u32 {
    libm::floor(hop_index as f64 * gap_m / reach_m) as u32
}

/// Total radiated power of one slot: payload power for every transmitting
/// vehicle plus signaling power for every vehicle in handover.
pub fn slot_power(transmit_flags: &[bool], powers_w: &[f64], handover_flags: &[bool], p_ho_w: f64) -> f64 {
    assert_eq!(transmit_flags.len(), powers_w.len());
    assert_eq!(transmit_flags.len(), handover_flags.len());
    let mut total = 0.0;
    for ((&tx, &p), &ho) in transmit_flags.iter().zip(powers_w).zip(handover_flags) {
        debug_assert!(p >= 0.0);
        if tx {
            total += p;
        }
        if ho {
            total += p_ho_w;
        }
    }
    total
}

// ============================================================================
// Phase decomposition
// ============================================================================

/// Long-run average age split into connected-phase and handover-phase
/// contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDecomposition {
    /// Fraction of ticks in the connected phase.
    pub conn_fraction: f64,
    /// Mean age over connected-phase ticks.
    pub conn_mean: f64,
    /// Fraction of ticks in the handover phase.
    pub ho_fraction: f64,
    /// Mean age over handover-phase ticks.
    pub ho_mean: f64,
    /// Mean age over all ticks.
    pub total_mean: f64,
}

impl PhaseDecomposition {
    /// Builds the decomposition from integer tick counts and age sums.
    ///
    /// # Panics
    /// Panics when both phases are empty.
    pub fn from_sums(n_conn: u64, sum_conn: u64, n_ho: u64, sum_ho: u64) -> Self {
        let total = n_conn + n_ho;
        assert!(total > 0, "phase decomposition of an empty log");
        let conn_mean = if n_conn > 0 { sum_conn as f64 / n_conn as f64 } else { 0.0 };
        let ho_mean = if n_ho > 0 { sum_ho as f64 / n_ho as f64 } else { 0.0 };
        Self {
            conn_fraction: n_conn as f64 / total as f64,
            conn_mean,
            ho_fraction: n_ho as f64 / total as f64,
            ho_mean,
            total_mean: (sum_conn + sum_ho) as f64 / total as f64,
        }
    }
}

/// Decomposes a tick log of `(age, in_handover_phase)` pairs.
///
/// The weighted-mean identity
/// `total = conn_fraction * conn_mean + ho_fraction * ho_mean`
/// holds by construction.
///
/// # Panics
/// Panics on an empty log.
pub fn phase_decomposition<I>(ticks: I) -> PhaseDecomposition
where
    I: IntoIterator<Item = (u32, bool)>,
{
    let (mut n_conn, mut n_ho) = (0u64, 0u64);
    let (mut sum_conn, mut sum_ho) = (0u64, 0u64);
    for (age, in_ho) in ticks {
        if in_ho {
            n_ho += 1;
            sum_ho += age as u64;
        } else {
            n_conn += 1;
            sum_conn += age as u64;
        }
    }
    PhaseDecomposition::from_sums(n_conn, sum_conn, n_ho, sum_ho)
}
