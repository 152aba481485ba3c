//! Per-slot scheduling policies: the drift-plus-penalty controller with
//! proactive handover timing, and the round-robin, max-visible-time, and
//! greedy-RSS baselines.
//!
//! The controller enumerates a finite candidate set per vehicle — serving
//! satellite, priority transmit flags, power level, handover-now versus
//! defer — and picks the candidate minimizing the one-slot queue-weighted
//! drift-plus-penalty score. Everything is deterministic: ties break toward
//! no-handover, then lower power, then lower satellite index.

use crate::aoi::{SafetyThresholds, CLASS_COUNT};


use crate::constellation::VisibilityWindow;
use alloc::vec::Vec;

// ============================================================================
// Actions and observations
// ============================================================================

/// Classification of a slot's handover decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandoverKind {
    /// No handover this slot.
    None,
    /// Proactive switch while the serving satellite is still available.
    Discretionary,
    /// The serving satellite left the admissible set.
    Forced,
}

/// One vehicle's decision for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    /// Serving satellite after this slot's decision.
    pub serving_satellite: usize,
    /// Per-class transmit flags.
    pub priority_flags: [bool; CLASS_COUNT],
    /// Transmit power, watts.
    pub power_w: f64,
    /// Planned wait before the next handover, slots (from the proactive
    /// look-ahead; zero when no plan is pending).
    pub handover_horizon: u32,
    /// Handover classification of this slot.
    pub handover_kind: HandoverKind,
}

/// Per-vehicle observation consumed by the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedState {
    /// Current ages per class, ticks.
    pub ages: [u32; CLASS_COUNT],
    /// Safety queue backlogs per class.
    pub safety_queues: [f64; CLASS_COUNT],
    /// Power queue backlog.
    pub q_power: f64,
    /// Discretionary-handover queue backlog.
    pub q_handover: f64,
    /// Predicted mean channel gain of the serving link.
    pub channel_gain: f64,
    /// Remaining visibility window of the serving link, slots.
    pub visibility_window: u32,
    /// Predicted mean channel gain of the best candidate link.
    pub best_candidate_gain: f64,
    /// Interference measured in the previous slot, watts.
    pub interference_prev_w: f64,
}

// ============================================================================
// Policy configuration
// ============================================================================

/// Which policy drives the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Queue-weighted drift-plus-penalty controller.
    Dpp,
    /// Cyclic class grants at fixed max power.
    RoundRobin,
    /// Stay until forced, then the longest remaining window.
    MaxVisibleTime,
    /// Always the strongest instantaneous signal.
    GreedyRss,
}

/// Controller hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    /// Penalty weight trading objective against queue drift.
    pub v: f64,
    /// Candidate transmit power levels, watts, ascending.
    pub power_grid: Vec<f64>,
    /// Proactive look-ahead horizon cap, slots.
    pub horizon_cap: u32,
    /// Weight of the violation-probability term in the look-ahead cost.
    pub kappa_safe: f64,
    /// Scale of the sigmoid argument in the look-ahead cost.
    pub z_scale: f64,
    /// Expected outage length used by the look-ahead, ticks.
    pub mu_n_ticks: f64,
    /// Pre-handover freshness window, seconds: when the serving window ends
    /// within it, the controller pins the collision-alert flag on.
    pub t_pre_s: f64,
    /// Minimum per-class rate, bits/s/Hz.
    pub rmin_bps_hz: [f64; CLASS_COUNT],
    /// Aggregate discretionary handover budget per slot.
    pub disc_budget_per_slot: f64,
    /// Whether the proactive look-ahead gates discretionary handovers.
    pub proactive: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        // Eight logarithmic power levels spanning one decade up to P_max.
        // A wider grid leaves a near-3 dB cliff between the top levels;
        // the controller's slot-level objective saturates there and every
        // budget-driven backoff then lands on the steep part of the
        // success curve.
        let p_max = 10.0_f64;
        let levels = 8;
        let power_grid = (0..levels)
            .map(|i| p_max / 10.0 * libm::pow(10.0, i as f64 / (levels - 1) as f64))
            .collect();
        Self {
            v: 50.0,
            power_grid,
            horizon_cap: 10,
            kappa_safe: 5.0,
            z_scale: 10.0,
            mu_n_ticks: 11.25,
            t_pre_s: 3.0,
            rmin_bps_hz: [0.5, 0.2, 0.1],
            disc_budget_per_slot: 0.2,
            proactive: true,
        }
    }
}

impl PolicyConfig {
    /// Highest grid power, watts.
    pub fn max_power(&self) -> f64 {
        *self.power_grid.last().expect("power grid must be nonempty")
    }

    /// Lowest grid power, watts.
    pub fn min_power(&self) -> f64 {
        self.power_grid[0]
    }
}

// ============================================================================
// Channel predictions
// ============================================================================

/// Predicted link statistics of one candidate satellite, built from the
/// deterministic geometry plus Monte-Carlo fading draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPrediction {
    /// Mean beamformed channel gain (path gain times array gain times mean
    /// fading power).
    pub mean_gain: f64,
    /// Sorted samples of the unit-power SNR `L * G * |rho|^2 / noise`.
    unit_snr: Vec<f64>,
}

impl ChannelPrediction {
    /// Builds a prediction from raw unit-power SNR samples.
    pub fn from_samples(mean_gain: f64, mut unit_snr: Vec<f64>) -> Self {
        unit_snr.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { mean_gain, unit_snr }
    }

    /// Predicted per-tick success probability at the given power and
    /// interference level.
    pub fn success_prob(&self, power_w: f64, gamma_th: f64, noise_w: f64, interference_w: f64) -> f64 {
        if self.unit_snr.is_empty() || power_w <= 0.0 {
            return 0.0;
        }
        // Success: power * x * noise / (noise + interference) >= gamma.
        let threshold = gamma_th * (noise_w + interference_w) / (power_w * noise_w);
        let below = self.unit_snr.partition_point(|&x| x < threshold);
        (self.unit_snr.len() - below) as f64 / self.unit_snr.len() as f64
    }
}

/// One admissible satellite in a vehicle's slot context.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCandidate {
    /// Satellite index.
    pub satellite: usize,
    /// Remaining visibility window.
    pub window: VisibilityWindow,
    /// Predicted channel statistics.
    pub prediction: ChannelPrediction,
    /// Instantaneous received signal strength measured this slot (used by
    /// the greedy baseline).
    pub measured_rss: f64,
}

/// Everything one vehicle's policy sees in one slot.
#[derive(Debug, Clone)]
pub struct VehicleSlotView<'a> {
    /// Vehicle index.
    pub vehicle: usize,
    /// Observation vector.
    pub obs: ObservedState,
    /// Serving satellite entering the slot, if any.
    pub serving: Option<usize>,
    /// True when the serving satellite is not admissible this slot and the
    /// vehicle must re-associate.
    pub forced: bool,
    /// Admissible candidates, ascending satellite index.
    pub candidates: &'a [SlotCandidate],
}

/// Slot-invariant parameters shared by the scoring functions.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    /// Controller hyperparameters.
    pub cfg: &'a PolicyConfig,
    /// Safety thresholds and weights.
    pub thresholds: &'a SafetyThresholds,
    /// Ticks per slot.
    pub ticks_per_slot: u32,
    /// Slot duration, seconds.
    pub slot_seconds: f64,
    /// Decoding threshold, linear.
    pub gamma_th: f64,
    /// Noise power, watts.
    pub noise_w: f64,
    /// Handover signaling power, watts.
    pub p_ho_w: f64,
    /// Long-run total power budget, watts per slot.
    pub p_budget_w: f64,
}

// ============================================================================
// MRT beamforming
// ============================================================================

/// Gain achieved by the maximum-ratio beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrtBeam {
    /// `|w^H h|^2 / P`, the full channel gain: MRT aligns the beam with the
    /// channel direction, so the achieved gain equals `||h||^2`.
    pub achieved_gain: f64,
}

/// Maximum-ratio transmission: the rate-optimal single-stream beam achieves
/// the full channel gain, giving `rate = log2(1 + P ||h||^2 / noise)`.
pub fn mrt_rate(channel_gain: f64, power_w: f64, noise_w: f64) -> (MrtBeam, f64) {
    debug_assert!(channel_gain >= 0.0 && power_w >= 0.0 && noise_w > 0.0);
    let rate = libm::log2(1.0 + power_w * channel_gain / noise_w);
    (MrtBeam { achieved_gain: channel_gain }, rate)
}

// ============================================================================
// Expected violation count
// ============================================================================

/// Expected number of violating ticks over `n_ticks` of connected operation
/// with i.i.d. per-tick success `p`, starting from age `a0` against
/// deadline `s`.
///
/// Closed form from the per-tick violation probability: before the first
/// success the age is `a0 + n`; after a success the age exceeds `s` exactly
/// when the most recent `s` ticks all failed.
pub fn expected_violations_connected(a0: u32, s: u32, n_ticks: u32, p: f64) -> f64 {
    if n_ticks == 0 {
        return 0.0;
    }
    if s == 0 {
        // Every age is at least one tick.
        return n_ticks as f64;
    }
    let q = 1.0 - p;
    let n = n_ticks;
    // Ticks n <= s violate only if no success so far and a0 + n > s.
    let n1 = if s >= a0 { s - a0 + 1 } else { 1 }.max(1);
    let hi = s.min(n);
    let term1 = if q == 1.0 {
        if n1 <= hi { (hi - n1 + 1) as f64 } else { 0.0 }
    } else if n1 <= hi {
        geometric_sum(q, n1, hi)
    } else {
        0.0
    };
    // Ticks n > s violate with probability q^s regardless of history.
    let term2 = if n > s {
        (n - s) as f64 * libm::pow(q, s as f64)
    } else {
        0.0
    };
    term1 + term2
}

/// Expected violating ticks over one handover slot: `outage_ticks` forced
/// failures followed by reconnection at per-tick success `p`.
pub fn expected_violations_handover(a0: u32, s: u32, n_ticks: u32, outage_ticks: u32, p: f64) -> f64 {
    let o = outage_ticks.min(n_ticks);
    // Outage ages run a0+1 .. a0+o deterministically.
    let clear = if s >= a0 { (s - a0).min(o) } else { 0 };
    let outage_viol = (o - clear) as f64;
    outage_viol + expected_violations_connected(a0 + o, s, n_ticks - o, p)
}

/// Sum of `q^n` for `n` in `lo..=hi` (requires `q < 1`).
fn geometric_sum(q: f64, lo: u32, hi: u32) -> f64 {
    (libm::pow(q, lo as f64) - libm::pow(q, hi as f64 + 1.0)) / (1.0 - q)
}

/// Expected mean age over a slot of `n_ticks`, starting from age `a0`, with
/// the first `outage_ticks` forced to fail and i.i.d. per-tick success `p`
/// afterwards. Exact under the tick law by linearity of expectation.
///
/// This is the per-slot contribution of one flow to the time-average age
/// objective; unlike the end-of-slot summary it stays sensitive to `p`
/// after the slot-level success probability saturates.
pub fn expected_mean_age(a0: u32, n_ticks: u32, outage_ticks: u32, p: f64) -> f64 {
    if n_ticks == 0 {
        return a0 as f64;
    }
    let o = outage_ticks.min(n_ticks);
    let mut age = a0 as f64;
    let mut sum = 0.0;
    for _ in 0..o {
        age += 1.0;
        sum += age;
    }
    for _ in 0..(n_ticks - o) {
        age = p + (1.0 - p) * (age + 1.0);
        sum += age;
    }
    sum / n_ticks as f64
}

// ============================================================================
// Drift-plus-penalty scoring
// ============================================================================

/// One scored candidate of the controller's enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    /// The action this candidate realizes.
    pub action: Action,
    /// Queue-weighted drift-plus-penalty score (lower is better).
    pub score: f64,
}

impl ScoredCandidate {
    /// Deterministic preference order: score, then no-handover first, then
    /// lower power, then lower satellite index, then more transmitted
    /// classes.
    pub fn better_than(&self, other: &Self) -> bool {
        if self.score != other.score {
            return self.score < other.score;
        }
        let ho = |a: &Action| a.handover_kind != HandoverKind::None;
        if ho(&self.action) != ho(&other.action) {
            return !ho(&self.action);
        }
        if self.action.power_w != other.action.power_w {
            return self.action.power_w < other.action.power_w;
        }
        if self.action.serving_satellite != other.action.serving_satellite {
            return self.action.serving_satellite < other.action.serving_satellite;
        }
        let count = |a: &Action| a.priority_flags.iter().filter(|&&f| f).count();
        count(&self.action) > count(&other.action)
    }
}

/// Scores one candidate by the one-slot drift-plus-penalty right-hand side:
/// power-queue drift plus handover-queue drift plus safety-queue terms plus
/// the V-weighted expected objective contribution.
pub fn score_candidate(
    view: &VehicleSlotView<'_>,
    ctx: &PolicyContext<'_>,
    candidate: &SlotCandidate,
    is_handover: bool,
    is_discretionary: bool,
    flags: [bool; CLASS_COUNT],
    power_w: f64,
) -> f64 {
    let n_ac = ctx.ticks_per_slot;
    let outage = libm::round(ctx.cfg.mu_n_ticks).max(1.0).min(n_ac as f64) as u32;
    let p_tick = candidate.prediction.success_prob(
        power_w,
        ctx.gamma_th,
        ctx.noise_w,
        view.obs.interference_prev_w,
    );
    let transmits = flags.iter().any(|&f| f);

    let mut theta = 0.0;
    let mut safety = 0.0;
    for m in 0..CLASS_COUNT {
        let age = view.obs.ages[m];
        let p_eff = if flags[m] { p_tick } else { 0.0 };
        let slot_outage = if is_handover { outage } else { 0 };
        theta += ctx.thresholds.weights[m] * expected_mean_age(age, n_ac, slot_outage, p_eff);
        let viol = if is_handover {
            expected_violations_handover(age, ctx.thresholds.n_safe[m], n_ac, outage, p_eff)
        } else {
            expected_violations_connected(age, ctx.thresholds.n_safe[m], n_ac, p_eff)
        };
        safety += view.obs.safety_queues[m] * (viol - n_ac as f64 * ctx.thresholds.epsilon[m]);
    }

    let own_power = if transmits { power_w } else { 0.0 }
        + if is_handover { ctx.p_ho_w } else { 0.0 };
    let power_term = view.obs.q_power * (own_power - ctx.p_budget_w);
    let disc = if is_discretionary { 1.0 } else { 0.0 };
    let ho_term = view.obs.q_handover * (disc - ctx.cfg.disc_budget_per_slot);

    power_term + ho_term + safety + ctx.cfg.v * theta
}

/// Enumerates every admissible (association, flags, power) candidate of one
/// vehicle's slot and scores it.
///
/// The association axis is `{stay}` plus handover-now to each admissible
/// satellite; on a forced slot only re-associations are admissible. Flag
/// patterns violating the per-class rate floor at the candidate power are
/// dropped, and when the serving window ends within the pre-handover
/// freshness window, patterns without the collision-alert class are dropped
/// as long as that class is rate-feasible at the top power.
pub fn enumerate_candidates(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>) -> Vec<ScoredCandidate> {
    let mut out = Vec::new();
    let serving = view.serving;
    for cand in view.candidates {
        let is_stay = !view.forced && serving == Some(cand.satellite);
        let is_switch = serving != Some(cand.satellite);
        if view.forced && !is_switch {
            continue;
        }
        if !is_stay && !is_switch {
            continue;
        }
        let is_handover = is_switch;
        let is_discretionary = is_switch && !view.forced;

        // Pre-handover freshness pin: keep only collision-alert patterns
        // while the serving window is about to close.
        let pin_class1 = is_stay
            && (view.obs.visibility_window as f64 * ctx.slot_seconds) < ctx.cfg.t_pre_s
            && rate_feasible(cand, ctx.cfg.max_power(), ctx.noise_w, ctx.cfg.rmin_bps_hz[0]);

        for bits in 0u8..(1 << CLASS_COUNT) {
            let flags = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
            if pin_class1 && !flags[0] {
                continue;
            }
            for &power_w in &ctx.cfg.power_grid {
                if !flags_rate_feasible(cand, power_w, ctx.noise_w, &ctx.cfg.rmin_bps_hz, flags) {
                    continue;
                }
                let score = score_candidate(view, ctx, cand, is_handover, is_discretionary, flags, power_w);
                let kind = if !is_handover {
                    HandoverKind::None
                } else if view.forced {
                    HandoverKind::Forced
                } else {
                    HandoverKind::Discretionary
                };
                out.push(ScoredCandidate {
                    action: Action {
                        serving_satellite: cand.satellite,
                        priority_flags: flags,
                        power_w,
                        handover_horizon: 0,
                        handover_kind: kind,
                    },
                    score,
                });
            }
        }
    }
    out
}

fn rate_feasible(cand: &SlotCandidate, power_w: f64, noise_w: f64, rmin: f64) -> bool {
    mrt_rate(cand.prediction.mean_gain, power_w, noise_w).1 >= rmin
}

fn flags_rate_feasible(
    cand: &SlotCandidate,
    power_w: f64,
    noise_w: f64,
    rmin: &[f64; CLASS_COUNT],
    flags: [bool; CLASS_COUNT],
) -> bool {
    let rate = mrt_rate(cand.prediction.mean_gain, power_w, noise_w).1;
    flags.iter().zip(rmin).all(|(&f, &r)| !f || rate >= r)
}

/// Picks the best candidate of a scored set by the deterministic preference
/// order. Returns `None` on an empty set.
pub fn argmin_candidate(candidates: &[ScoredCandidate]) -> Option<&ScoredCandidate> {
    let mut best: Option<&ScoredCandidate> = None;
    for c in candidates {
        match best {
            None => best = Some(c),
            Some(b) if c.better_than(b) => best = Some(c),
            _ => {}
        }
    }
    best
}

// ============================================================================
// Proactive handover timing
// ============================================================================

/// One evaluated point of the proactive look-ahead grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProactiveCost {
    /// Wait, slots, before executing the handover.
    pub horizon: u32,
    /// Target satellite.
    pub satellite: usize,
    /// Look-ahead cost.
    pub cost: f64,
}

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Forward-simulates the expected-age recursion of the tick law for `n`
/// ticks at per-tick success `p`, accumulating the age sum.
fn simulate_expected_ages(age: &mut f64, n: u32, p: f64, sum: &mut f64) {
    for _ in 0..n {
        *age = p + (1.0 - p) * (*age + 1.0);
        *sum += *age;
    }
}

/// Evaluates the look-ahead cost grid over every candidate and horizon: the
/// mean predicted collision-alert age over the wait-plus-handover window
/// (forward-simulated tick by tick, with the outage forced to fail and the
/// predicted reconnection success applied uniformly afterwards), plus the
/// sigmoid-estimated violation pressure of the safety backlog draining over
/// the wait.
///
/// The per-tick normalization makes costs comparable across horizons:
/// deferring on a healthy link amortizes the outage spike, while deferring
/// on a failing link accrues its stale age for the whole wait.
pub fn proactive_cost_grid(
    view: &VehicleSlotView<'_>,
    ctx: &PolicyContext<'_>,
    serving_success_prob: f64,
) -> Vec<ProactiveCost> {
    let cfg = ctx.cfg;
    let n_ac = ctx.ticks_per_slot;
    let outage = libm::round(cfg.mu_n_ticks).max(1.0).min(n_ac as f64) as u32;
    let z1 = view.obs.safety_queues[0];
    let eps1 = ctx.thresholds.epsilon[0];
    let a0 = view.obs.ages[0] as f64;
    let mut grid = Vec::new();
    for cand in view.candidates {
        let p_target = cand.prediction.success_prob(
            cfg.max_power(),
            ctx.gamma_th,
            ctx.noise_w,
            view.obs.interference_prev_w,
        );
        let h_max = cfg.horizon_cap.min(cand.window.slots);
        for h in 0..=h_max {
            // h connected slots on the serving link, then the outage, then
            // reconnection on the target.
            let mut age = a0;
            let mut sum = 0.0;
            simulate_expected_ages(&mut age, h * n_ac, serving_success_prob, &mut sum);
            for _ in 0..outage {
                age += 1.0;
                sum += age;
            }
            simulate_expected_ages(&mut age, n_ac - outage, p_target, &mut sum);
            let mean_age = sum / ((h + 1) as f64 * n_ac as f64);
            let pressure = sigmoid((z1 + cfg.mu_n_ticks - h as f64 * n_ac as f64 * eps1) / cfg.z_scale);
            grid.push(ProactiveCost {
                horizon: h,
                satellite: cand.satellite,
                cost: mean_age + cfg.kappa_safe * pressure,
            });
        }
    }
    grid
}

/// Exhaustive search of the look-ahead grid. Ties break toward the smaller
/// horizon, then the smaller satellite index.
///
/// # Panics
/// Panics when the candidate set is empty.
pub fn proactive_ho_search(
    view: &VehicleSlotView<'_>,
    ctx: &PolicyContext<'_>,
    serving_success_prob: f64,
) -> (u32, usize) {
    let grid = proactive_cost_grid(view, ctx, serving_success_prob);
    assert!(!grid.is_empty(), "proactive search needs at least one candidate");
    let mut best = grid[0];
    for c in &grid[1..] {
        let better = c.cost < best.cost
            || (c.cost == best.cost
                && (c.horizon < best.horizon
                    || (c.horizon == best.horizon && c.satellite < best.satellite)));
        if better {
            best = *c;
        }
    }
    (best.horizon, best.satellite)
}

// ============================================================================
// The policies
// ============================================================================

/// Drift-plus-penalty decision for one vehicle.
///
/// On a forced slot the controller re-associates by score over every
/// admissible satellite. Otherwise, when the proactive look-ahead is
/// enabled, it gates which handover is considered this slot: a plan with
/// horizon zero puts `{stay, switch-to-target}` on the table, a longer plan
/// keeps the vehicle on its serving satellite and records the horizon.
/// With the look-ahead disabled, the full `{stay} + {switch to any}` set is
/// enumerated.
pub fn dpp_decide(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>) -> Action {
    if view.candidates.is_empty() {
        return fallback_action(view, ctx);
    }
    if view.forced && ctx.cfg.proactive {
        // Re-associate to the look-ahead's best immediate target; its
        // mean-age cost separates link qualities that the one-slot score
        // cannot once the slot success saturates.
        let grid = proactive_cost_grid(view, ctx, 0.0);
        let mut best: Option<ProactiveCost> = None;
        for c in grid.into_iter().filter(|c| c.horizon == 0) {
            let replace = match best {
                None => true,
                Some(b) => c.cost < b.cost || (c.cost == b.cost && c.satellite < b.satellite),
            };
            if replace {
                best = Some(c);
            }
        }
        let target = best.map(|b| b.satellite);
        let filtered: Vec<SlotCandidate> = view
            .candidates
            .iter()
            .filter(|c| Some(c.satellite) == target)
            .cloned()
            .collect();
        let gated = VehicleSlotView {
            candidates: &filtered,
            ..view.clone()
        };
        let scored = enumerate_candidates(&gated, ctx);
        return match argmin_candidate(&scored) {
            Some(best) => best.action.clone(),
            None => fallback_action(view, ctx),
        };
    }
    if view.forced || view.serving.is_none() || !ctx.cfg.proactive {
        let scored = enumerate_candidates(view, ctx);
        return match argmin_candidate(&scored) {
            Some(best) => best.action.clone(),
            None => fallback_action(view, ctx),
        };
    }

    // Proactive gating: plan when and where the next handover should land.
    let serving_p = serving_success_prob(view, ctx);
    let (horizon, target) = proactive_ho_search(view, ctx, serving_p);
    let switch_now = horizon == 0 && view.serving != Some(target);

    let filtered: Vec<SlotCandidate> = view
        .candidates
        .iter()
        .filter(|c| Some(c.satellite) == view.serving || (switch_now && c.satellite == target))
        .cloned()
        .collect();
    let gated = VehicleSlotView {
        candidates: &filtered,
        ..view.clone()
    };
    let scored = enumerate_candidates(&gated, ctx);
    match argmin_candidate(&scored) {
        Some(best) => {
            let mut action = best.action.clone();
            if action.handover_kind == HandoverKind::None {
                action.handover_horizon = horizon;
            }
            action
        }
        None => fallback_action(view, ctx),
    }
}

fn serving_success_prob(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>) -> f64 {
    view.serving
        .and_then(|s| view.candidates.iter().find(|c| c.satellite == s))
        .map(|c| {
            c.prediction.success_prob(
                ctx.cfg.max_power(),
                ctx.gamma_th,
                ctx.noise_w,
                view.obs.interference_prev_w,
            )
        })
        .unwrap_or(0.0)
}

/// Stay-and-minimum-power fallback for degenerate inputs.
fn fallback_action(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>) -> Action {
    Action {
        serving_satellite: view.serving.unwrap_or(0),
        priority_flags: [false; CLASS_COUNT],
        power_w: ctx.cfg.min_power(),
        handover_horizon: 0,
        handover_kind: HandoverKind::None,
    }
}

/// Round-robin baseline: every vehicle transmits exactly one class per slot
/// at fixed max power, the grant rotating as `(slot + vehicle) mod 3`; the
/// full vehicle-to-class grant map repeats with the slot period of the
/// (vehicle, class) cycle. Association stays put until forced, then takes
/// the strongest predicted link.
pub fn round_robin_decide(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>, slot: u64) -> Action {
    let class = ((slot + view.vehicle as u64) % CLASS_COUNT as u64) as usize;
    let mut flags = [false; CLASS_COUNT];
    flags[class] = true;
    let (serving, kind) = stay_unless_forced(view, |cands| {
        argmax_by(cands, |c| c.prediction.mean_gain)
    });
    Action {
        serving_satellite: serving,
        priority_flags: flags,
        power_w: ctx.cfg.max_power(),
        handover_horizon: 0,
        handover_kind: kind,
    }
}

/// Max-visible-time baseline: stay until forced, then pick the candidate
/// with the longest remaining window. Transmits every class at max power.
/// Never hands over discretionarily.
pub fn mvt_decide(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>) -> Action {
    let (serving, kind) = stay_unless_forced(view, |cands| {
        argmax_by(cands, |c| c.window.slots as f64)
    });
    Action {
        serving_satellite: serving,
        priority_flags: [true; CLASS_COUNT],
        power_w: ctx.cfg.max_power(),
        handover_horizon: 0,
        handover_kind: kind,
    }
}

/// Greedy strongest-signal baseline: always associates to the strongest
/// instantaneous received signal, the classic ping-pong-inducing rule.
/// Transmits every class at max power.
pub fn greedy_rss_decide(view: &VehicleSlotView<'_>, ctx: &PolicyContext<'_>) -> Action {
    let target = argmax_by(view.candidates, |c| c.measured_rss);
    let kind = if Some(target) == view.serving {
        HandoverKind::None
    } else if view.forced {
        HandoverKind::Forced
    } else {
        HandoverKind::Discretionary
    };
    Action {
        serving_satellite: target,
        priority_flags: [true; CLASS_COUNT],
        power_w: ctx.cfg.max_power(),
        handover_horizon: 0,
        handover_kind: kind,
    }
}

fn stay_unless_forced<F>(view: &VehicleSlotView<'_>, pick: F) -> (usize, HandoverKind)
where
    F: FnOnce(&[SlotCandidate]) -> usize,
{
    match (view.serving, view.forced) {
        (Some(s), false) if view.candidates.iter().any(|c| c.satellite == s) => {
            (s, HandoverKind::None)
        }
        (None, _) => (pick(view.candidates), HandoverKind::None),
        _ => (pick(view.candidates), HandoverKind::Forced),
    }
}

fn argmax_by<F>(cands: &[SlotCandidate], key: F) -> usize
where
    F: Fn(&SlotCandidate) -> f64,
{
    let mut best = 0usize;
    let mut best_key = f64::NEG_INFINITY;
    for c in cands {
        let k = key(c);
        if k > best_key {
            best_key = k;
            best = c.satellite;
        }
    }
    best
}
