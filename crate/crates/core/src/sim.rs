//! Scenario configuration and the deterministic episode engine.
//!
//! One episode binds the whole stack together: per slot the engine updates
//! geometry and visibility, runs the configured policy, executes the chosen
//! actions, and then walks the accounting ticks — drawing fresh fading,
//! evaluating per-tick success with outage ticks forced to fail, advancing
//! ages and safety queues, and logging violations. Identical configurations
//! and seeds reproduce identical results.

use crate::aoi::{
    follower_aoi, outage_ticks, slot_power, tick_update, v2v_delay_ticks, validate_tick_rule,
    AoiState, OutageModel, PhaseDecomposition, SafetyThresholds, TimescaleConfig, CLASS_COUNT,
};
use crate::analysis::{detect_pingpong, PingPongEvent, SlotHandover};
use crate::channel::{
    calibrate_snr_threshold, db_to_lin, path_gain, sample_shadow_fading_db,
    sample_shadowed_rician, tick_sinr, ChannelParams,
};
use crate::constellation::{
    elevation_and_range, satellite_position_at, walker_ephemerides, ConstellationConfig,
    SatelliteEphemeris, VehicleState, VisibilityWindow,
};
use crate::rng::{derive_seed, Stream};
use crate::safety::{compliance_from_counts, ComplianceReport, VirtualQueueSet};
use crate::scheduler::{
    dpp_decide, greedy_rss_decide, mrt_rate, mvt_decide, round_robin_decide, Action,
    ChannelPrediction, HandoverKind, ObservedState, PolicyConfig, PolicyContext, PolicyKind,
    SlotCandidate, VehicleSlotView,
};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Stream labels for the independent per-subsystem generators.
const SALT_EPOCH: u64 = 0x45504f43;
const SALT_FADING: u64 = 0x46414445;
const SALT_MEASURE: u64 = 0x4d454153;
const SALT_OUTAGE: u64 = 0x4f555447;
const SALT_SHADOW: u64 = 0x53484144;
const SALT_PREDICT: u64 = 0x50524544;

/// Fixed seed of the threshold calibration stream, shared by every episode.
const CALIBRATION_SEED: u64 = 0x6c696e6bca11b;
/// Reference elevation of the threshold calibration, degrees.
const CALIBRATION_ELEVATION_DEG: f64 = 26.0;
/// Per-tick success probability targeted by the calibration at max power.
const CALIBRATION_TARGET_P: f64 = 0.45;
/// Fading draws used by the calibration.
const CALIBRATION_DRAWS: usize = 40_000;

// ============================================================================
// Configuration
// ============================================================================

/// Platoon layout and kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonConfig {
    /// Number of platoons (one leader each holds a satellite link).
    pub platoons: usize,
    /// Vehicles per platoon, leader included.
    pub vehicles_per_platoon: usize,
    /// Slowest leader speed, km/h.
    pub speed_kmh_min: f64,
    /// Fastest leader speed, km/h.
    pub speed_kmh_max: f64,
    /// Intra-platoon gaps to report follower end-to-end age for, meters.
    pub gaps_m: Vec<f64>,
    /// Culmination latitude of the highway, degrees.
    pub highway_latitude_deg: f64,
    /// Along-track spacing between consecutive leaders, meters.
    pub spacing_m: f64,
    /// Relay hop reach of the intra-platoon link, meters.
    pub v2v_reach_m: f64,
}

impl Default for PlatoonConfig {
    fn default() -> Self {
        Self {
            platoons: 5,
            vehicles_per_platoon: 6,
            speed_kmh_min: 36.0,
            speed_kmh_max: 54.0,
            gaps_m: vec![5.0, 15.0, 25.0, 35.0],
            highway_latitude_deg: 47.0,
            spacing_m: 2000.0,
            v2v_reach_m: 40.0,
        }
    }
}

/// Power caps and budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    /// Per-vehicle instantaneous transmit cap, watts.
    pub p_max_w: f64,
    /// Long-run budget on the slot-total radiated power, watts.
    pub budget_w: f64,
    /// Handover signaling power, watts.
    pub p_ho_w: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            p_max_w: 10.0,
            budget_w: 45.0,
            p_ho_w: 1.0,
        }
    }
}

/// Full scenario description. The defaults reproduce the reference
/// parameter table of the simulation study.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Constellation geometry.
    pub constellation: ConstellationConfig,
    /// Channel statistics. `snr_threshold` is overridden when
    /// `gamma_th_db` is set, and auto-calibrated when it is `None`.
    pub channel: ChannelParams,
    /// Explicit decoding threshold, dB; `None` calibrates it so the
    /// per-tick success at max power and low elevation hits the reference
    /// target.
    pub gamma_th_db: Option<f64>,
    /// The two-timescale clock.
    pub timescale: TimescaleConfig,
    /// Per-class freshness deadlines, seconds.
    pub deadlines_s: [f64; CLASS_COUNT],
    /// Per-class violation budgets.
    pub epsilon: [f64; CLASS_COUNT],
    /// Per-class objective weights.
    pub weights: [f64; CLASS_COUNT],
    /// Handover outage statistics.
    pub outage: OutageModel,
    /// Platoon layout.
    pub platoon: PlatoonConfig,
    /// Power caps and budgets.
    pub power: PowerConfig,
    /// Which policy drives the episode.
    pub policy: PolicyKind,
    /// Controller hyperparameters.
    pub policy_cfg: PolicyConfig,
    /// Dwell limit on one serving satellite, seconds; a value of zero or
    /// less disables periodic forced handovers.
    pub ho_period_s: f64,
    /// Uplink beamforming array gain on the served link.
    pub beam_gain: f64,
    /// Beam gain toward non-served satellites (sidelobe factor).
    pub sidelobe_gain: f64,
    /// Subchannel count carried in the configuration for forward
    /// compatibility; the slot laws do not use it.
    pub subchannels: u32,
    /// Fading draws per candidate when predicting per-tick success.
    pub prediction_draws: usize,
    /// Episode length, slots.
    pub episode_slots: u64,
    /// Base seed.
    pub seed: u64,
    /// Keep the full per-tick age log in the result.
    pub keep_tick_log: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            constellation: ConstellationConfig::default(),
            channel: ChannelParams::default(),
            gamma_th_db: None,
            timescale: TimescaleConfig::default(),
            deadlines_s: [0.1, 0.2, 1.0],
            epsilon: [0.01, 0.05, 0.20],
            weights: [5.0, 2.0, 0.5],
            outage: OutageModel::default(),
            platoon: PlatoonConfig::default(),
            power: PowerConfig::default(),
            policy: PolicyKind::Dpp,
            policy_cfg: PolicyConfig::default(),
            ho_period_s: 15.0,
            beam_gain: 16.0,
            sidelobe_gain: 0.05,
            subchannels: 3,
            prediction_draws: 200,
            episode_slots: 500,
            seed: 42,
            keep_tick_log: false,
        }
    }
}

/// Episode-level failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    /// The configuration violates an invariant; the message names it.
    InvalidConfig(String),
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::InvalidConfig(msg) => write!(f, "invalid scenario: {msg}"),
        }
    }
}

impl ScenarioConfig {
    /// Safety thresholds implied by the deadlines at the configured tick.
    pub fn thresholds(&self) -> SafetyThresholds {
        SafetyThresholds::from_deadlines(
            self.deadlines_s,
            self.epsilon,
            self.weights,
            self.timescale.tick_seconds,
        )
    }

    /// Periodic forced-handover dwell in slots; `None` when disabled.
    pub fn ho_period_slots(&self) -> Option<u64> {
        if self.ho_period_s > 0.0 {
            Some(libm::round(self.ho_period_s / self.timescale.slot_seconds).max(1.0) as u64)
        } else {
            None
        }
    }

    /// Checks every structural invariant the engine relies on.
    pub fn validate(&self) -> Result<(), SimError> {
        self.constellation
            .validate()
            .map_err(|e| SimError::InvalidConfig(format!("constellation: {e}")))?;
        self.channel
            .validate()
            .map_err(|e| SimError::InvalidConfig(format!("channel: {e}")))?;
        let rule = validate_tick_rule(&self.timescale, self.deadlines_s[0], self.outage.min_ms * 1e-3);
        if !rule.pass {
            return Err(SimError::InvalidConfig(format!(
                "tick rule failed: tick {} s against deadline {} s and outage floor {} ms",
                self.timescale.tick_seconds, self.deadlines_s[0], self.outage.min_ms
            )));
        }
        if !self.thresholds().validate() {
            return Err(SimError::InvalidConfig(String::from(
                "safety thresholds must be strictly ordered",
            )));
        }
        if self.policy_cfg.power_grid.is_empty() {
            return Err(SimError::InvalidConfig(String::from("power grid is empty")));
        }
        if self
            .policy_cfg
            .power_grid
            .windows(2)
            .any(|w| w[0] >= w[1])
        {
            return Err(SimError::InvalidConfig(String::from(
                "power grid must be strictly ascending",
            )));
        }
        if self.policy_cfg.max_power() > self.power.p_max_w + 1e-9 {
            return Err(SimError::InvalidConfig(String::from(
                "power grid exceeds the per-vehicle cap",
            )));
        }
        if self.policy_cfg.v <= 0.0 {
            return Err(SimError::InvalidConfig(String::from("penalty weight must be positive")));
        }
        if self.platoon.platoons == 0 || self.platoon.vehicles_per_platoon == 0 {
            return Err(SimError::InvalidConfig(String::from("platoon layout is empty")));
        }
        if self.episode_slots == 0 {
            return Err(SimError::InvalidConfig(String::from("episode length is zero")));
        }
        Ok(())
    }

    /// Resolves the decoding threshold (linear): the explicit value when
    /// set, otherwise the deterministic calibration at max power and the
    /// reference low-elevation geometry.
    pub fn resolved_gamma_th(&self) -> f64 {
        if let Some(db) = self.gamma_th_db {
            return db_to_lin(db);
        }
        let elev = CALIBRATION_ELEVATION_DEG.to_radians();
        let distance = slant_range_at(&self.constellation, elev);
        calibrate_snr_threshold(
            &self.channel,
            distance,
            elev,
            self.power.p_max_w,
            self.beam_gain,
            CALIBRATION_TARGET_P,
            CALIBRATION_DRAWS,
            CALIBRATION_SEED,
        )
    }
}

/// Slant range at a given elevation over the spherical Earth.
fn slant_range_at(cfg: &ConstellationConfig, elevation_rad: f64) -> f64 {
    let r = cfg.earth_radius_m;
    let h = cfg.altitude_m;
    let s = libm::sin(elevation_rad);
    libm::sqrt(r * r * s * s + 2.0 * r * h + h * h) - r * s
}

// ============================================================================
// Results
// ============================================================================

/// Per-class episode summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSummary {
    /// Mean age over every (vehicle, tick), ticks.
    pub mean_aoi_ticks: f64,
    /// Fraction of (vehicle, tick) pairs violating the deadline.
    pub violation_rate: f64,
    /// Budget the rate is held against.
    pub epsilon: f64,
    /// Whether the budget held.
    pub compliant: bool,
    /// Phase-segmented decomposition of the mean age.
    pub phase: PhaseDecomposition,
}

/// Follower end-to-end summary at one intra-platoon gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapE2e {
    /// Intra-platoon gap, meters.
    pub gap_m: f64,
    /// Mean end-to-end collision-alert age across followers, ticks.
    pub mean_e2e_ticks: f64,
}

/// Downsampled queue trace entry (one per slot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueSample {
    /// Slot index.
    pub slot: u64,
    /// Mean safety backlog per class across vehicles.
    pub mean_z: [f64; CLASS_COUNT],
    /// Power queue backlog.
    pub q_power: f64,
    /// Discretionary-handover queue backlog.
    pub q_handover: f64,
}

/// Full per-tick age log, kept when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct TickLog {
    /// `ages[vehicle][global_tick][class]`.
    pub ages: Vec<Vec<[u32; CLASS_COUNT]>>,
    /// `in_handover[vehicle][slot]`: slot-level handover phase labels.
    pub in_handover: Vec<Vec<bool>>,
    /// `actions[vehicle][slot]`: executed power and transmit flags.
    pub actions: Vec<Vec<(f64, [bool; CLASS_COUNT])>>,
}

/// Everything measured over one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Per-class summaries.
    pub classes: [ClassSummary; CLASS_COUNT],
    /// Weighted mean age, `sum_m w_m * mean_age_m`.
    pub weighted_aoi: f64,
    /// Mean slot-total radiated power, watts.
    pub mean_power_w: f64,
    /// Forced handovers executed.
    pub forced_handovers: u64,
    /// Discretionary handovers executed.
    pub discretionary_handovers: u64,
    /// Detected ping-pong events across vehicles.
    pub pingpong_events: Vec<PingPongEvent>,
    /// Follower end-to-end ages per configured gap.
    pub follower_e2e: Vec<GapE2e>,
    /// Per-slot queue trace.
    pub queue_trace: Vec<QueueSample>,
    /// Compliance report with stability diagnostics.
    pub compliance: ComplianceReport,
    /// Slots where a transmitted class sat below its rate floor.
    pub rate_floor_violations: u64,
    /// Resolved decoding threshold, linear.
    pub gamma_th: f64,
    /// Per-vehicle per-slot handover log.
    pub slot_serving: Vec<Vec<SlotHandover>>,
    /// Full tick log when `keep_tick_log` was set.
    pub tick_log: Option<TickLog>,
}

// ============================================================================
// Engine internals
// ============================================================================

struct VehicleRuntime {
    state: VehicleState,
    base_arc_m: f64,
    ages: [AoiState; CLASS_COUNT],
    serving: Option<usize>,
    outage_ticks_left: u32,
    slots_since_ho: u64,
    interference_prev_w: f64,
    shadow_db: Vec<f64>,
    was_visible: Vec<bool>,
    window_cache: Vec<Option<(u64, VisibilityWindow)>>,
    fading: Stream,
    measure: Stream,
    outage_rng: Stream,
    shadow_rng: Stream,
    predict: Stream,
    // Slot-scoped execution state.
    action: Action,
    serving_gain: f64,
    transmit_this_slot: bool,
}

struct ClassAccumulator {
    violations: u64,
    sum_conn: u64,
    n_conn: u64,
    sum_ho: u64,
    n_ho: u64,
}

/// Runs one episode. `seed` overrides the configuration's base seed, so a
/// sweep can fan replicates out of one scenario.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<RunResult, SimError> {
    cfg.validate()?;
    let thresholds = cfg.thresholds();
    let gamma_th = cfg.resolved_gamma_th();
    let eph = walker_ephemerides(&cfg.constellation);
    let n_sats = eph.len();
    let n_vehicles = cfg.platoon.platoons;
    let n_ac = cfg.timescale.ticks_per_slot;
    let tau_s = cfg.timescale.slot_seconds;
    let period_slots = cfg.ho_period_slots();
    let lat = cfg.platoon.highway_latitude_deg.to_radians();

    // Random epoch offset decorrelates geometry across seeds.
    let epoch_s = Stream::derived(seed, &[SALT_EPOCH]).uniform() * cfg.constellation.orbital_period_s();

    let policy_cfg = PolicyConfig {
        mu_n_ticks: cfg.outage.mean_ticks(cfg.timescale.tick_seconds),
        ..cfg.policy_cfg.clone()
    };
    let ctx = PolicyContext {
        cfg: &policy_cfg,
        thresholds: &thresholds,
        ticks_per_slot: n_ac,
        slot_seconds: tau_s,
        gamma_th,
        noise_w: cfg.channel.noise_w,
        p_ho_w: cfg.power.p_ho_w,
        p_budget_w: cfg.power.budget_w,
    };

    let mut vehicles: Vec<VehicleRuntime> = (0..n_vehicles)
        .map(|v| {
            let speed_kmh = if n_vehicles > 1 {
                cfg.platoon.speed_kmh_min
                    + (cfg.platoon.speed_kmh_max - cfg.platoon.speed_kmh_min) * v as f64
                        / (n_vehicles - 1) as f64
            } else {
                0.5 * (cfg.platoon.speed_kmh_min + cfg.platoon.speed_kmh_max)
            };
            let base_arc_m = -(v as f64) * cfg.platoon.spacing_m;
            // Stagger the dwell clocks so periodic handovers spread out.
            let stagger = period_slots
                .map(|p| p * v as u64 / n_vehicles as u64)
                .unwrap_or(0);
            VehicleRuntime {
                state: VehicleState::on_highway(v, lat, base_arc_m, speed_kmh / 3.6, cfg.constellation.earth_radius_m),
                base_arc_m,
                ages: [AoiState::fresh(); CLASS_COUNT],
                serving: None,
                outage_ticks_left: 0,
                slots_since_ho: stagger,
                interference_prev_w: 0.0,
                shadow_db: vec![0.0; n_sats],
                was_visible: vec![false; n_sats],
                window_cache: vec![None; n_sats],
                fading: Stream::derived(seed, &[SALT_FADING, v as u64]),
                measure: Stream::derived(seed, &[SALT_MEASURE, v as u64]),
                outage_rng: Stream::derived(seed, &[SALT_OUTAGE, v as u64]),
                shadow_rng: Stream::derived(seed, &[SALT_SHADOW, v as u64]),
                predict: Stream::derived(seed, &[SALT_PREDICT, v as u64]),
                action: Action {
                    serving_satellite: 0,
                    priority_flags: [false; CLASS_COUNT],
                    power_w: 0.0,
                    handover_horizon: 0,
                    handover_kind: HandoverKind::None,
                },
                serving_gain: 0.0,
                transmit_this_slot: false,
            }
        })
        .collect();

    let mut accum: Vec<[ClassAccumulator; CLASS_COUNT]> = (0..n_vehicles)
        .map(|_| core::array::from_fn(|_| ClassAccumulator { violations: 0, sum_conn: 0, n_conn: 0, sum_ho: 0, n_ho: 0 }))
        .collect();
    let mut queues = VirtualQueueSet::new(n_vehicles);
    let mut queue_trace = Vec::with_capacity(cfg.episode_slots as usize);
    let mut slot_serving: Vec<Vec<SlotHandover>> = vec![Vec::with_capacity(cfg.episode_slots as usize); n_vehicles];
    let mut tick_log = cfg.keep_tick_log.then(|| TickLog {
        ages: vec![Vec::with_capacity((cfg.episode_slots * n_ac as u64) as usize); n_vehicles],
        in_handover: vec![Vec::with_capacity(cfg.episode_slots as usize); n_vehicles],
        actions: vec![Vec::with_capacity(cfg.episode_slots as usize); n_vehicles],
    });
    let mut forced_handovers = 0u64;
    let mut discretionary_handovers = 0u64;
    let mut rate_floor_violations = 0u64;
    let mut power_sum = 0.0;

    // Scratch buffers reused across slots.
    let mut sat_positions = vec![[0.0; 3]; n_sats];
    let mut path_gains: Vec<Vec<f64>> = vec![vec![0.0; n_sats]; n_vehicles];
    let mut visible: Vec<Vec<usize>> = vec![Vec::new(); n_vehicles];

    for slot in 0..cfg.episode_slots {
        let t_s = epoch_s + slot as f64 * tau_s;
        for (k, e) in eph.iter().enumerate() {
            sat_positions[k] = satellite_position_at(e, &cfg.constellation, t_s);
        }

        // -- Geometry, shadow fading, visibility --------------------------
        for v in 0..n_vehicles {
            let rt = &mut vehicles[v];
            rt.state = VehicleState::on_highway(
                v,
                lat,
                rt.base_arc_m + rt.state.speed_mps * slot as f64 * tau_s,
                rt.state.speed_mps,
                cfg.constellation.earth_radius_m,
            );
            visible[v].clear();
            for k in 0..n_sats {
                let g = elevation_and_range(sat_positions[k], &rt.state, cfg.constellation.min_elevation_rad);
                if g.visible {
                    if !rt.was_visible[k] {
                        // New pass: one shadow-fading draw per pass.
                        rt.shadow_db[k] = sample_shadow_fading_db(&cfg.channel, &mut rt.shadow_rng);
                        rt.window_cache[k] = None;
                    }
                    rt.was_visible[k] = true;
                    visible[v].push(k);
                    path_gains[v][k] = path_gain(
                        g.slant_range_m,
                        g.elevation_rad,
                        cfg.channel.carrier_hz,
                        &cfg.channel,
                        rt.shadow_db[k],
                    )
                    .unwrap_or(0.0);
                } else {
                    rt.was_visible[k] = false;
                    path_gains[v][k] = 0.0;
                }
            }
        }

        // -- Policy decisions ----------------------------------------------
        for v in 0..n_vehicles {
            let forced_by_period = period_slots.is_some_and(|p| vehicles[v].slots_since_ho >= p);
            let serving_visible = vehicles[v]
                .serving
                .is_some_and(|s| visible[v].contains(&s));
            let has_serving = vehicles[v].serving.is_some();
            let forced = has_serving && (!serving_visible || forced_by_period);

            // Candidate set: every visible satellite; on a forced slot the
            // outgoing serving satellite is inadmissible.
            let mut cands: Vec<SlotCandidate> = Vec::with_capacity(visible[v].len());
            let vis = visible[v].clone();
            for &k in &vis {
                if forced && vehicles[v].serving == Some(k) {
                    continue;
                }
                let window = cached_window(&mut vehicles[v], &eph[k], &cfg.constellation, slot, tau_s, epoch_s, k);
                let rt = &mut vehicles[v];
                let mean_gain = path_gains[v][k] * cfg.beam_gain * cfg.channel.mean_fading_power();
                let unit_snr: Vec<f64> = (0..cfg.prediction_draws)
                    .map(|_| {
                        path_gains[v][k] * cfg.beam_gain * sample_shadowed_rician(&cfg.channel, &mut rt.predict)
                            / cfg.channel.noise_w
                    })
                    .collect();
                let rss = cfg.power.p_max_w
                    * path_gains[v][k]
                    * cfg.beam_gain
                    * sample_shadowed_rician(&cfg.channel, &mut rt.measure);
                cands.push(SlotCandidate {
                    satellite: k,
                    window,
                    prediction: ChannelPrediction::from_samples(mean_gain, unit_snr),
                    measured_rss: rss,
                });
            }

            let rt = &vehicles[v];
            let serving_cand = rt.serving.and_then(|s| cands.iter().find(|c| c.satellite == s));
            let obs = ObservedState {
                ages: [rt.ages[0].age_ticks, rt.ages[1].age_ticks, rt.ages[2].age_ticks],
                safety_queues: queues.z[v],
                q_power: queues.q_power,
                q_handover: queues.q_handover,
                channel_gain: serving_cand.map(|c| c.prediction.mean_gain).unwrap_or(0.0),
                visibility_window: serving_cand.map(|c| c.window.slots).unwrap_or(0),
                best_candidate_gain: cands
                    .iter()
                    .map(|c| c.prediction.mean_gain)
                    .fold(0.0, f64::max),
                interference_prev_w: rt.interference_prev_w,
            };
            let view = VehicleSlotView {
                vehicle: v,
                obs,
                serving: rt.serving,
                forced,
                candidates: &cands,
            };

            let mut action = if cands.is_empty() {
                // Total outage slot: keep the stale association, stay idle.
                Action {
                    serving_satellite: rt.serving.unwrap_or(0),
                    priority_flags: [false; CLASS_COUNT],
                    power_w: policy_cfg.min_power(),
                    handover_horizon: 0,
                    handover_kind: HandoverKind::None,
                }
            } else {
                match cfg.policy {
                    PolicyKind::Dpp => dpp_decide(&view, &ctx),
                    PolicyKind::RoundRobin => round_robin_decide(&view, &ctx, slot),
                    PolicyKind::MaxVisibleTime => mvt_decide(&view, &ctx),
                    PolicyKind::GreedyRss => greedy_rss_decide(&view, &ctx),
                }
            };

            // -- Execute ---------------------------------------------------
            let rt = &mut vehicles[v];
            let previous = rt.serving;
            let changed = previous != Some(action.serving_satellite);
            let is_initial = previous.is_none();
            if is_initial {
                action.handover_kind = HandoverKind::None;
                rt.serving = Some(action.serving_satellite);
                rt.slots_since_ho = 0;
            } else if changed && !cands.is_empty() {
                let kind = if forced { HandoverKind::Forced } else { HandoverKind::Discretionary };
                action.handover_kind = kind;
                match kind {
                    HandoverKind::Forced => forced_handovers += 1,
                    HandoverKind::Discretionary => discretionary_handovers += 1,
                    HandoverKind::None => {}
                }
                rt.outage_ticks_left = cfg
                    .outage
                    .sample_ticks(&mut rt.outage_rng, cfg.timescale.tick_seconds)
                    .min(n_ac);
                rt.serving = Some(action.serving_satellite);
                rt.slots_since_ho = 0;
            } else {
                action.handover_kind = HandoverKind::None;
                rt.slots_since_ho += 1;
            }

            rt.serving_gain = path_gains[v][action.serving_satellite];
            rt.transmit_this_slot = action.priority_flags.iter().any(|&f| f) && !cands.is_empty();

            // Rate floor audit at the executed power and association.
            if rt.transmit_this_slot {
                let mean_gain = rt.serving_gain * cfg.beam_gain * cfg.channel.mean_fading_power();
                let (_, rate) = mrt_rate(mean_gain, action.power_w, cfg.channel.noise_w);
                for m in 0..CLASS_COUNT {
                    if action.priority_flags[m] && rate < policy_cfg.rmin_bps_hz[m] {
                        rate_floor_violations += 1;
                    }
                }
            }

            let ho_now = action.handover_kind != HandoverKind::None;
            slot_serving[v].push(SlotHandover {
                handover: ho_now,
                serving: action.serving_satellite,
            });
            if let Some(log) = tick_log.as_mut() {
                log.in_handover[v].push(ho_now);
                log.actions[v].push((action.power_w, action.priority_flags));
            }
            rt.action = action;
        }

        // -- Tick loop ----------------------------------------------------
        let mut interference_sums = vec![0.0f64; n_vehicles];
        for n in 0..n_ac {
            // Who radiates payload this tick.
            let active: Vec<bool> = vehicles
                .iter()
                .map(|rt| rt.transmit_this_slot && rt.outage_ticks_left == 0)
                .collect();
            for v in 0..n_vehicles {
                let in_outage = vehicles[v].outage_ticks_left > 0;
                let success = if in_outage {
                    vehicles[v].outage_ticks_left -= 1;
                    false
                } else if active[v] {
                    let serving = vehicles[v].action.serving_satellite;
                    // Interference from co-channel leaders through their
                    // sidelobes, drawn from the receiver's stream.
                    let mut interference = 0.0;
                    for v2 in 0..n_vehicles {
                        if v2 == v || !active[v2] {
                            continue;
                        }
                        let rho = sample_shadowed_rician(&cfg.channel, &mut vehicles[v].fading);
                        interference += vehicles[v2].action.power_w
                            * path_gains[v2][serving]
                            * rho
                            * cfg.sidelobe_gain;
                    }
                    let rho = sample_shadowed_rician(&cfg.channel, &mut vehicles[v].fading);
                    let sinr = tick_sinr(
                        vehicles[v].action.power_w,
                        vehicles[v].serving_gain,
                        rho,
                        cfg.beam_gain,
                        interference,
                        cfg.channel.noise_w,
                    );
                    interference_sums[v] += interference;
                    sinr >= gamma_th
                } else {
                    false
                };

                let rt = &mut vehicles[v];
                let global_tick = cfg.timescale.global_tick(slot, n);
                let in_ho_slot = rt.action.handover_kind != HandoverKind::None;
                let mut ages_now = [0u32; CLASS_COUNT];
                for m in 0..CLASS_COUNT {
                    let class_success = success && rt.action.priority_flags[m];
                    rt.ages[m] = tick_update(rt.ages[m], class_success, global_tick);
                    ages_now[m] = rt.ages[m].age_ticks;
                    let acc = &mut accum[v][m];
                    acc.violations += u64::from(ages_now[m] > thresholds.n_safe[m]);
                    if in_ho_slot {
                        acc.n_ho += 1;
                        acc.sum_ho += ages_now[m] as u64;
                    } else {
                        acc.n_conn += 1;
                        acc.sum_conn += ages_now[m] as u64;
                    }
                }
                queues.tick_safety(v, ages_now, &thresholds);
                if let Some(log) = tick_log.as_mut() {
                    log.ages[v].push(ages_now);
                }
            }
        }

        // -- Slot wrap-up ---------------------------------------------------
        let tx_flags: Vec<bool> = vehicles.iter().map(|rt| rt.transmit_this_slot).collect();
        let powers: Vec<f64> = vehicles.iter().map(|rt| rt.action.power_w).collect();
        let ho_flags: Vec<bool> = vehicles
            .iter()
            .map(|rt| rt.action.handover_kind != HandoverKind::None)
            .collect();
        let p_tot = slot_power(&tx_flags, &powers, &ho_flags, cfg.power.p_ho_w);
        power_sum += p_tot;
        let disc_count = vehicles
            .iter()
            .filter(|rt| rt.action.handover_kind == HandoverKind::Discretionary)
            .count() as u32;
        queues.slot_update(p_tot, cfg.power.budget_w, disc_count, policy_cfg.disc_budget_per_slot);
        for (v, sum) in interference_sums.iter().enumerate() {
            vehicles[v].interference_prev_w = sum / n_ac as f64;
        }
        queue_trace.push(QueueSample {
            slot,
            mean_z: queues.mean_z(),
            q_power: queues.q_power,
            q_handover: queues.q_handover,
        });
    }

    // -- Aggregation ---------------------------------------------------------
    let total_ticks = cfg.episode_slots * n_ac as u64 * n_vehicles as u64;
    let mut classes = [ClassSummary {
        mean_aoi_ticks: 0.0,
        violation_rate: 0.0,
        epsilon: 0.0,
        compliant: false,
        phase: PhaseDecomposition::from_sums(1, 0, 0, 0),
    }; CLASS_COUNT];
    let mut violations_pooled = [0u64; CLASS_COUNT];
    for (m, class) in classes.iter_mut().enumerate() {
        let (mut sc, mut nc, mut sh, mut nh, mut viol) = (0u64, 0u64, 0u64, 0u64, 0u64);
        for acc in accum.iter().map(|a| &a[m]) {
            sc += acc.sum_conn;
            nc += acc.n_conn;
            sh += acc.sum_ho;
            nh += acc.n_ho;
            viol += acc.violations;
        }
        violations_pooled[m] = viol;
        let phase = PhaseDecomposition::from_sums(nc, sc, nh, sh);
        *class = ClassSummary {
            mean_aoi_ticks: phase.total_mean,
            violation_rate: viol as f64 / total_ticks as f64,
            epsilon: thresholds.epsilon[m],
            compliant: viol as f64 / total_ticks as f64 <= thresholds.epsilon[m],
            phase,
        };
    }
    let weighted_aoi = classes
        .iter()
        .zip(&thresholds.weights)
        .map(|(c, w)| w * c.mean_aoi_ticks)
        .sum();

    let z_trace: Vec<[f64; CLASS_COUNT]> = queue_trace.iter().map(|q| q.mean_z).collect();
    let compliance = compliance_from_counts(violations_pooled, total_ticks, &z_trace, &thresholds);

    let mut pingpong_events = Vec::new();
    for (v, log) in slot_serving.iter().enumerate() {
        pingpong_events.extend(detect_pingpong(v, log));
    }

    let followers = cfg.platoon.vehicles_per_platoon.saturating_sub(1) as u32;
    let pl_mean = classes[0].mean_aoi_ticks;
    let follower_e2e = cfg
        .platoon
        .gaps_m
        .iter()
        .map(|&gap| {
            let mean_delay = if followers > 0 {
                (1..=followers)
                    .map(|f| v2v_delay_ticks(f, gap, cfg.platoon.v2v_reach_m) as f64)
                    .sum::<f64>()
                    / followers as f64
            } else {
                0.0
            };
            GapE2e {
                gap_m: gap,
                mean_e2e_ticks: pl_mean + mean_delay,
            }
        })
        .collect();

    Ok(RunResult {
        classes,
        weighted_aoi,
        mean_power_w: power_sum / cfg.episode_slots as f64,
        forced_handovers,
        discretionary_handovers,
        pingpong_events,
        follower_e2e,
        queue_trace,
        compliance,
        rate_floor_violations,
        gamma_th,
        slot_serving,
        tick_log,
    })
}

/// Visibility window with the incremental cache: a window computed one slot
/// earlier shrinks by exactly one slot, and a censored window only needs its
/// far end re-checked.
fn cached_window(
    rt: &mut VehicleRuntime,
    eph: &SatelliteEphemeris,
    cfg: &ConstellationConfig,
    slot: u64,
    tau_s: f64,
    epoch_s: f64,
    k: usize,
) -> VisibilityWindow {
    if let Some((at, w)) = rt.window_cache[k] {
        if at + 1 == slot {
            let out = if w.censored {
                // Known visible through slot + cap - 1; probe the cap edge.
                let probe = slot + cfg.window_cap_slots as u64;
                let pos = satellite_position_at(eph, cfg, epoch_s + probe as f64 * tau_s);
                let veh = rt.state.advanced(cfg.window_cap_slots as f64 * tau_s);
                if elevation_and_range(pos, &veh, cfg.min_elevation_rad).visible {
                    VisibilityWindow { slots: cfg.window_cap_slots, censored: true }
                } else {
                    VisibilityWindow { slots: cfg.window_cap_slots - 1, censored: false }
                }
            } else if w.slots > 0 {
                VisibilityWindow { slots: w.slots - 1, censored: false }
            } else {
                // The cached window expired; rescan.
                scan_window(rt, eph, cfg, slot, tau_s, epoch_s)
            };
            rt.window_cache[k] = Some((slot, out));
            return out;
        }
    }
    let out = scan_window(rt, eph, cfg, slot, tau_s, epoch_s);
    rt.window_cache[k] = Some((slot, out));
    out
}

fn scan_window(
    rt: &VehicleRuntime,
    eph: &SatelliteEphemeris,
    cfg: &ConstellationConfig,
    slot: u64,
    tau_s: f64,
    epoch_s: f64,
) -> VisibilityWindow {
    for dt in 0..=cfg.window_cap_slots {
        let pos = satellite_position_at(eph, cfg, epoch_s + (slot + dt as u64) as f64 * tau_s);
        let veh = rt.state.advanced(dt as f64 * tau_s);
        if !elevation_and_range(pos, &veh, cfg.min_elevation_rad).visible {
            return VisibilityWindow { slots: dt.saturating_sub(1), censored: false };
        }
    }
    VisibilityWindow { slots: cfg.window_cap_slots, censored: true }
}

// ============================================================================
// Controlled ping-pong injection
// ============================================================================

/// Measured cost of an injected ping-pong sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PingPongInjection {
    /// Age at the end of the last handover slot, ticks.
    pub end_age: u64,
    /// Sum of the slot-end ages over the sequence.
    pub cumulative: u64,
    /// Slot-end ages, one per handover slot.
    pub slot_end_ages: Vec<u64>,
}

/// Forces `k` consecutive handover slots with reconnection disabled,
/// starting from age `a0`, and measures the resulting ages with the real
/// tick law.
pub fn inject_pingpong(cfg: &ScenarioConfig, k: u32, a0: u32) -> PingPongInjection {
    assert!(k >= 1 && a0 >= 1);
    let n_ac = cfg.timescale.ticks_per_slot;
    let mut state = AoiState::with_age(a0);
    let mut slot_end_ages = Vec::with_capacity(k as usize);
    let mut tick = 0u64;
    for _ in 0..k {
        for _ in 0..n_ac {
            tick += 1;
            // Handover slot with reconnection disabled: every tick fails.
            state = tick_update(state, false, tick);
        }
        slot_end_ages.push(state.age_ticks as u64);
    }
    PingPongInjection {
        end_age: state.age_ticks as u64,
        cumulative: slot_end_ages.iter().sum(),
        slot_end_ages,
    }
}

// ============================================================================
// Sweep seed derivation
// ============================================================================

/// Derives the per-point seed of a sweep from the base seed, the axis value
/// bits, and the replicate index, so concurrent execution order cannot
/// change any result.
pub fn sweep_point_seed(base: u64, axis_value: f64, replicate: u64) -> u64 {
    derive_seed(base, &[axis_value.to_bits(), replicate])
}

/// Convenience: the end-to-end follower age at one gap, from a leader age.
pub fn follower_e2e_at_gap(pl_age_ticks: u32, hop_index: u32, gap_m: f64, reach_m: f64) -> u32 {
    follower_aoi(pl_age_ticks, v2v_delay_ticks(hop_index, gap_m, reach_m))
}

/// Re-exported discretization helper for reporting.
pub fn outage_tick_count(tau_ho_s: f64, tick_seconds: f64) -> (u32, f64) {
    outage_ticks(tau_ho_s, tick_seconds)
}
