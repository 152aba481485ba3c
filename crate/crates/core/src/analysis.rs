//! Closed-form analysis of handover AoI dynamics, plus the brute-force tick
//! simulator used as the independent oracle for everything else.
//!
//! The central result is the ping-pong spike envelope: over `k` consecutive
//! all-fail handover slots the end-of-slot age is deterministic and the
//! cumulative slot-end age grows quadratically in `k`. The refined increment
//! bound tightens the envelope when post-outage reconnection statistics are
//! available, and the drift constant bounds the one-slot Lyapunov expansion
//! of the full queue set.

use crate::aoi::{tick_update, AoiState, CLASS_COUNT};
use alloc::vec::Vec;

// ============================================================================
// Spike envelope
// ============================================================================

/// Deterministic AoI cost of a run of consecutive all-fail handover slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpikeEnvelope {
    /// Initial age at the start of the run, ticks.
    pub a0: u64,
    /// Number of consecutive handover slots.
    pub k: u64,
    /// Age at the end of the run: `a0 + k * N_ac`.
    pub end_age: u64,
    /// Cumulative slot-end age: `k * a0 + k(k+1)/2 * N_ac`.
    pub cumulative: u64,
    /// Variance of the end age; zero, the trajectory is deterministic.
    pub variance: u64,
}

/// Closed-form spike envelope for `k` consecutive all-fail handover slots
/// starting from age `a0`.
pub fn spike_envelope(a0: u64, k: u64, ticks_per_slot: u64) -> SpikeEnvelope {
    assert!(a0 >= 1 && k >= 1);
    SpikeEnvelope {
        a0,
        k,
        end_age: a0 + k * ticks_per_slot,
        cumulative: k * a0 + k * (k + 1) / 2 * ticks_per_slot,
        variance: 0,
    }
}

// ============================================================================
// Refined handover increment
// ============================================================================

/// Upper bound on the expected one-slot age increment of a handover slot
/// with `n_ho` outage ticks followed by reconnection attempts succeeding
/// with probability `p_s` per tick:
/// `n_ho + (N_ac - n_ho) * (1 - p_s)^(N_ac - n_ho)`.
pub fn refined_increment_bound(n_ho: u32, ticks_per_slot: u32, p_s: f64) -> f64 {
    assert!(n_ho >= 1 && n_ho <= ticks_per_slot);
    assert!((0.0..=1.0).contains(&p_s));
    let tail = (ticks_per_slot - n_ho) as f64;
    n_ho as f64 + tail * libm::pow(1.0 - p_s, tail)
}

/// Sequence form of the bound: reconnection tick `n` succeeds with its own
/// probability, and the all-fail product runs over the whole tail.
pub fn refined_increment_bound_seq(n_ho: u32, ticks_per_slot: u32, p_s: &[f64]) -> f64 {
    assert!(n_ho >= 1 && n_ho <= ticks_per_slot);
    assert_eq!(p_s.len(), (ticks_per_slot - n_ho) as usize, "one probability per post-outage tick");
    let tail = (ticks_per_slot - n_ho) as f64;
    let all_fail: f64 = p_s.iter().map(|p| 1.0 - p).product();
    n_ho as f64 + tail * all_fail
}

/// Exact expected one-slot age increment of a handover slot starting from
/// age `a0`, under the slot-summary accounting the bound dominates: a slot
/// whose post-outage reconnection succeeds at least once ends at age 1, a
/// slot with no success ends at `a0 + N_ac`.
///
/// Computed by enumeration over the first-success position; used as the
/// Monte-Carlo reference that the bound is checked against.
pub fn refined_increment_exact(a0: u32, n_ho: u32, ticks_per_slot: u32, p_s: f64) -> f64 {
    assert!(n_ho >= 1 && n_ho <= ticks_per_slot);
    let n = ticks_per_slot;
    let q = 1.0 - p_s;
    // No success in any post-outage tick: the age grows by the full slot.
    let mut expected = libm::pow(q, (n - n_ho) as f64) * n as f64;
    // First success at tick j (1-based within the slot): the slot ends at
    // age 1, an increment of 1 - a0.
    for j in (n_ho + 1)..=n {
        let prob = p_s * libm::pow(q, (j - n_ho - 1) as f64);
        expected += prob * (1.0 - a0 as f64);
    }
    expected
}

// ============================================================================
// Drift constant
// ============================================================================

/// Bounded-drift constant of the one-slot Lyapunov expansion:
/// `0.5 * [dP^2 + dH^2 + sum_{v,m} (N_ac (1 - eps_m))^2]`.
pub fn drift_constant(
    dp_max: f64,
    dh_max: f64,
    ticks_per_slot: u32,
    epsilons: &[f64; CLASS_COUNT],
    n_vehicles: usize,
) -> f64 {
    let mut safety = 0.0;
    for &eps in epsilons {
        let term = ticks_per_slot as f64 * (1.0 - eps);
        safety += term * term;
    }
    0.5 * (dp_max * dp_max + dh_max * dh_max + n_vehicles as f64 * safety)
}

// ============================================================================
// Ping-pong detection
// ============================================================================

/// One slot of a vehicle's handover log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotHandover {
    /// Whether a handover happened in this slot.
    pub handover: bool,
    /// Serving satellite after the slot's decision.
    pub serving: usize,
}

/// A detected ping-pong oscillation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PingPongEvent {
    /// Vehicle the event belongs to.
    pub vehicle: usize,
    /// Slot indices of the consecutive handover slots.
    pub slots: Vec<u64>,
    /// Sequence length `k`.
    pub len: u32,
    /// The two satellites the vehicle oscillated between.
    pub satellites: (usize, usize),
}

/// Detects ping-pong sequences in one vehicle's per-slot handover log.
///
/// An event is a maximal run of consecutive handover slots whose target
/// sequence satisfies `k(t_i) = k(t_{i-2})` throughout, with length at least
/// two. A run that breaks the oscillation condition anywhere yields no
/// event, so `A,B,C` reports nothing while `A,B,A,B` reports one event of
/// length four.
pub fn detect_pingpong(vehicle: usize, log: &[SlotHandover]) -> Vec<PingPongEvent> {
    let mut events = Vec::new();
    let mut run_start = None::<usize>;
    let mut t = 0usize;
    while t <= log.len() {
        let in_ho = t < log.len() && log[t].handover;
        match (run_start, in_ho) {
            (None, true) => run_start = Some(t),
            (Some(start), false) => {
                let run = &log[start..t];
                if run.len() >= 2 {
                    let oscillates = (2..run.len()).all(|i| run[i].serving == run[i - 2].serving);
                    if oscillates {
                        events.push(PingPongEvent {
                            vehicle,
                            slots: (start..t).map(|s| s as u64).collect(),
                            len: run.len() as u32,
                            satellites: (run[0].serving, run[1].serving),
                        });
                    }
                }
                run_start = None;
            }
            _ => {}
        }
        t += 1;
    }
    events
}

// ============================================================================
// Reactive infeasibility
// ============================================================================

/// True when the outage length in ticks reaches the tightest deadline, the
/// regime where any single handover necessarily violates the top class
/// during its outage window no matter what the scheduler does afterwards.
pub fn reactive_infeasibility_check(n_ho: u32, n_safe_1: u32) -> bool {
    n_ho >= n_safe_1
}

// ============================================================================
// Brute-force tick oracle
// ============================================================================

/// Literal tick-by-tick replay of the age law over a success schedule,
/// starting from `a0`. Returns the age after every tick.
///
/// No summaries, no shortcuts: this is the independent reference that the
/// envelope, the refined increment, and the slot summaries are checked
/// against.
pub fn brute_force_tick_oracle(a0: u32, schedule: &[bool]) -> Vec<u32> {
    let mut state = AoiState::with_age(a0);
    let mut trajectory = Vec::with_capacity(schedule.len());
    for (tick, &success) in schedule.iter().enumerate() {
        state = tick_update(state, success, tick as u64 + 1);
        trajectory.push(state.age_ticks);
    }
    trajectory
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn envelope_single_slot() {
        let e = spike_envelope(1, 1, 50);
        assert_eq!(e.end_age, 51);
        assert_eq!(e.cumulative, 51);
        assert_eq!(e.variance, 0);
    }

    #[test]
    fn envelope_k3_and_k7() {
        let e = spike_envelope(1, 3, 50);
        assert_eq!(e.end_age, 151);
        assert_eq!(e.cumulative, 303);
        let e = spike_envelope(1, 7, 50);
        assert_eq!(e.cumulative, 1407);
    }

    #[test]
    fn envelope_matches_brute_force_on_full_grid() {
        // Exactness for every (a0, k, N_ac) in 1..=10 x 1..=7 x {20,50,100},
        // zero tolerance.
        for n_ac in [20u64, 50, 100] {
            for a0 in 1..=10u64 {
                for k in 1..=7u64 {
                    let env = spike_envelope(a0, k, n_ac);
                    let schedule = alloc::vec![false; (k * n_ac) as usize];
                    let traj = brute_force_tick_oracle(a0 as u32, &schedule);
                    assert_eq!(env.end_age, *traj.last().unwrap() as u64);
                    let cumulative: u64 = (1..=k)
                        .map(|i| traj[(i * n_ac - 1) as usize] as u64)
                        .sum();
                    assert_eq!(env.cumulative, cumulative, "a0={a0} k={k} n={n_ac}");
                }
            }
        }
    }

    #[test]
    fn envelope_second_difference_is_n_ac() {
        for n_ac in [20u64, 50, 100] {
            let c = |k: u64| spike_envelope(3, k, n_ac).cumulative as i64;
            for k in 2..=6 {
                assert_eq!(c(k + 1) - 2 * c(k) + c(k - 1), n_ac as i64);
                // Strictly increasing slot cost.
                assert!(c(k + 1) - c(k) > c(k) - c(k - 1));
            }
        }
    }

    #[test]
    fn refined_bound_limits() {
        // p = 0 recovers the conservative envelope; p = 1 leaves the outage.
        assert_eq!(refined_increment_bound(11, 50, 0.0), 50.0);
        assert_eq!(refined_increment_bound(11, 50, 1.0), 11.0);
        let b = refined_increment_bound(11, 50, 0.5);
        assert!((b - (11.0 + 39.0 * libm::pow(0.5, 39.0))).abs() < 1e-12);
        assert!((b - 11.0).abs() < 1e-9, "b = {b}");
    }

    #[test]
    fn refined_bound_monotone_in_p() {
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let b = refined_increment_bound(11, 50, p);
            assert!(b <= last + 1e-12);
            last = b;
        }
    }

    #[test]
    fn refined_bound_seq_matches_const() {
        let ps = alloc::vec![0.3; 39];
        let seq = refined_increment_bound_seq(11, 50, &ps);
        let cst = refined_increment_bound(11, 50, 0.3);
        assert!((seq - cst).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_respects_bound_and_matches_exact() {
        // Simulated mean slot-summary increment over many handover slots
        // stays below the bound and within three standard errors of the
        // exact conditional expectation. The tick oracle drives the draw;
        // the summary resets the slot whenever any reconnection succeeded.
        let mut rng = Stream::new(31);
        let (n_ho, n_ac, a0) = (11u32, 50u32, 1u32);
        for &p in &[0.0, 0.05, 0.2, 0.5, 1.0] {
            let runs = 100_000;
            let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
            for _ in 0..runs {
                let schedule: Vec<bool> = (0..n_ac)
                    .map(|n| n >= n_ho && rng.uniform() < p)
                    .collect();
                let traj = brute_force_tick_oracle(a0, &schedule);
                let any_success = traj.contains(&1);
                let end = if any_success { 1 } else { a0 + n_ac };
                let inc = end as f64 - a0 as f64;
                sum += inc;
                sum_sq += inc * inc;
            }
            let mean = sum / runs as f64;
            let var = sum_sq / runs as f64 - mean * mean;
            let se = libm::sqrt(var.max(0.0) / runs as f64);
            let bound = refined_increment_bound(n_ho, n_ac, p);
            let exact = refined_increment_exact(a0, n_ho, n_ac, p);
            assert!(mean <= bound + 3.0 * se + 1e-9, "p={p}: mean {mean} > bound {bound}");
            assert!(exact <= bound + 1e-9, "p={p}: exact {exact} > bound {bound}");
            assert!(
                (mean - exact).abs() <= 3.0 * se + 1e-9,
                "p={p}: mean {mean}, exact {exact}, se {se}"
            );
        }
    }

    #[test]
    fn drift_constant_cases() {
        // Single vehicle, eps -> 1 kills the safety term.
        let b = drift_constant(3.0, 4.0, 50, &[1.0, 1.0, 1.0], 1);
        assert!((b - 12.5).abs() < 1e-12);
        // Worked five-vehicle case.
        let b = drift_constant(10.0, 5.0, 50, &[0.01, 0.05, 0.20], 5);
        assert!((b - 15_828.75).abs() < 1e-9, "B = {b}");
        // Degenerate zero.
        assert_eq!(drift_constant(0.0, 0.0, 50, &[1.0, 1.0, 1.0], 5), 0.0);
    }

    #[test]
    fn drift_constant_monotone_in_epsilon() {
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let b = drift_constant(1.0, 1.0, 50, &[eps, eps, eps], 3);
            assert!(b <= last);
            assert!(b >= 0.0);
            last = b;
        }
    }

    #[test]
    fn pingpong_alternation_detected() {
        let (a, b) = (4usize, 9usize);
        let mut log = alloc::vec![SlotHandover { handover: false, serving: a }; 3];
        for i in 0..4 {
            log.push(SlotHandover { handover: true, serving: if i % 2 == 0 { b } else { a } });
        }
        log.push(SlotHandover { handover: false, serving: a });
        let events = detect_pingpong(7, &log);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].len, 4);
        assert_eq!(events[0].vehicle, 7);
        assert_eq!(events[0].satellites, (b, a));
        assert_eq!(events[0].slots, alloc::vec![3, 4, 5, 6]);
    }

    #[test]
    fn three_distinct_targets_is_no_event() {
        let log = [
            SlotHandover { handover: true, serving: 1 },
            SlotHandover { handover: true, serving: 2 },
            SlotHandover { handover: true, serving: 3 },
        ];
        assert!(detect_pingpong(0, &log).is_empty());
    }

    #[test]
    fn isolated_handovers_are_no_event() {
        let log = [
            SlotHandover { handover: true, serving: 1 },
            SlotHandover { handover: false, serving: 1 },
            SlotHandover { handover: true, serving: 2 },
            SlotHandover { handover: false, serving: 2 },
        ];
        assert!(detect_pingpong(0, &log).is_empty());
    }

    #[test]
    fn runs_are_maximal_and_non_overlapping() {
        // Two separated oscillation runs produce two events.
        let mut log = Vec::new();
        for i in 0..4 {
            log.push(SlotHandover { handover: true, serving: if i % 2 == 0 { 1 } else { 2 } });
        }
        log.push(SlotHandover { handover: false, serving: 2 });
        for i in 0..3 {
            log.push(SlotHandover { handover: true, serving: if i % 2 == 0 { 5 } else { 6 } });
        }
        let events = detect_pingpong(0, &log);
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].len, 4);
        assert_eq!(events[1].len, 3);
        let last_of_first = *events[0].slots.last().unwrap();
        let first_of_second = events[1].slots[0];
        assert!(last_of_first < first_of_second);
    }

    #[test]
    fn reactive_infeasibility_cases() {
        assert!(reactive_infeasibility_check(11, 5));
        assert!(!reactive_infeasibility_check(4, 5));
        assert!(reactive_infeasibility_check(5, 5));
    }

    #[test]
    fn oracle_all_fail_and_single_success() {
        let traj = brute_force_tick_oracle(3, &alloc::vec![false; 100]);
        assert_eq!(*traj.last().unwrap(), 103);
        let mut schedule = alloc::vec![false; 10];
        schedule[4] = true;
        let traj = brute_force_tick_oracle(7, &schedule);
        assert_eq!(traj[3], 11);
        assert_eq!(traj[4], 1);
        assert_eq!(traj[9], 6);
    }

    #[test]
    fn oracle_matches_closed_form_reconstruction() {
        let mut rng = Stream::new(33);
        let n = 10_000usize;
        let schedule: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.07).collect();
        let a0 = 5u32;
        let traj = brute_force_tick_oracle(a0, &schedule);
        let mut last_success: Option<usize> = None;
        for (i, &s) in schedule.iter().enumerate() {
            if s {
                last_success = Some(i);
            }
            let expect = match last_success {
                Some(j) => (i - j + 1) as u32,
                None => a0 + i as u32 + 1,
            };
            assert_eq!(traj[i], expect, "tick {i}");
        }
    }
}
