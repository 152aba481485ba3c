//! Virtual-queue enforcement of the time-average safety, power, and
//! discretionary-handover constraints.
//!
//! Each safety queue accumulates one unit per violating tick and drains at
//! the class budget rate; strong stability of the queue is equivalent to the
//! time-average violation frequency meeting its budget. The power and
//! discretionary-handover queues run the same reflected update at slot
//! granularity. Queue backlogs double as runtime tightness signals for the
//! scheduler.

use crate::aoi::{SafetyThresholds, CLASS_COUNT};
use alloc::vec::Vec;

// ============================================================================
// Queue updates
// ============================================================================

/// One tick of the safety queue: `max(z + 1{violated} - epsilon, 0)`.
pub fn update_safety_queue(z: f64, violated: bool, epsilon: f64) -> f64 {
    debug_assert!(z >= 0.0);
    let arrival = if violated { 1.0 } else { 0.0 };
    let next = z + arrival - epsilon;
    if next > 0.0 {
        next
    } else {
        0.0
    }
}

/// One slot of the power queue: `max(q + p_tot - p_budget, 0)`.
pub fn update_power_queue(q: f64, p_tot_w: f64, p_budget_w: f64) -> f64 {
    debug_assert!(q >= 0.0);
    let next = q + p_tot_w - p_budget_w;
    if next > 0.0 {
        next
    } else {
        0.0
    }
}

/// One slot of the discretionary-handover queue:
/// `max(q + disc_count - budget, 0)`.
pub fn update_ho_queue(q: f64, disc_count: u32, budget_per_slot: f64) -> f64 {
    debug_assert!(q >= 0.0);
    let next = q + disc_count as f64 - budget_per_slot;
    if next > 0.0 {
        next
    } else {
        0.0
    }
}

/// The full virtual-queue set of one episode: per-(vehicle, class) safety
/// queues at tick granularity plus the shared power and handover queues at
/// slot granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueueSet {
    /// Safety queues `z[vehicle][class]`.
    pub z: Vec<[f64; CLASS_COUNT]>,
    /// Power queue.
    pub q_power: f64,
    /// Discretionary-handover queue.
    pub q_handover: f64,
}

impl VirtualQueueSet {
    /// All queues empty.
    pub fn new(n_vehicles: usize) -> Self {
        Self {
            z: alloc::vec![[0.0; CLASS_COUNT]; n_vehicles],
            q_power: 0.0,
            q_handover: 0.0,
        }
    }

    /// Applies the tick law to one vehicle's safety queues.
    pub fn tick_safety(&mut self, vehicle: usize, ages: [u32; CLASS_COUNT], thresholds: &SafetyThresholds) {
        for (m, z) in self.z[vehicle].iter_mut().enumerate() {
            let violated = ages[m] > thresholds.n_safe[m];
            *z = update_safety_queue(*z, violated, thresholds.epsilon[m]);
        }
    }

    /// Applies the slot laws to the power and handover queues.
    pub fn slot_update(&mut self, p_tot_w: f64, p_budget_w: f64, disc_count: u32, ho_budget: f64) {
        self.q_power = update_power_queue(self.q_power, p_tot_w, p_budget_w);
        self.q_handover = update_ho_queue(self.q_handover, disc_count, ho_budget);
    }

    /// Mean safety backlog per class across vehicles.
    pub fn mean_z(&self) -> [f64; CLASS_COUNT] {
        let mut out = [0.0; CLASS_COUNT];
        for z in &self.z {
            for (o, v) in out.iter_mut().zip(z) {
                *o += v;
            }
        }
        for o in &mut out {
            *o /= self.z.len() as f64;
        }
        out
    }
}

// ============================================================================
// Violation counting
// ============================================================================

/// Number of ticks in one slot whose age exceeded the deadline.
///
/// # Panics
/// Panics when the age slice does not hold exactly one entry per tick of the
/// slot.
pub fn slot_violation_count(tick_ages: &[u32], n_safe: u32, ticks_per_slot: u32) -> u32 {
    assert_eq!(
        tick_ages.len(),
        ticks_per_slot as usize,
        "slot violation count needs exactly one age per tick"
    );
    tick_ages.iter().filter(|&&a| a > n_safe).count() as u32
}

// ============================================================================
// Compliance reporting
// ============================================================================

/// Empirical compliance of one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCompliance {
    /// Fraction of ticks violating the deadline.
    pub violation_rate: f64,
    /// Budget the rate is compared against.
    pub epsilon: f64,
    /// `violation_rate <= epsilon`.
    pub compliant: bool,
    /// Least-squares slope of the mean safety backlog over the trailing half
    /// of the run; a slope near zero indicates strong stability.
    pub z_slope: f64,
}

/// Compliance of all classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceReport {
    /// Per-class results.
    pub classes: [ClassCompliance; CLASS_COUNT],
}

impl ComplianceReport {
    /// True when every class is compliant.
    pub fn all_compliant(&self) -> bool {
        self.classes.iter().all(|c| c.compliant)
    }
}

/// Least-squares slope of `ys` against their indices over the trailing half.
fn trailing_slope(ys: &[f64]) -> f64 {
    let tail = &ys[ys.len() / 2..];
    let n = tail.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean_x = (nf - 1.0) / 2.0;
    let mean_y = tail.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in tail.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Builds the compliance report from per-class violation counts, the total
/// tick count, and a time-ordered trace of the mean safety backlog.
///
/// # Panics
/// Panics when the total tick count is zero.
pub fn compliance_from_counts(
    violations: [u64; CLASS_COUNT],
    total_ticks: u64,
    z_trace: &[[f64; CLASS_COUNT]],
    thresholds: &SafetyThresholds,
) -> ComplianceReport {
    assert!(total_ticks > 0, "compliance report of an empty log");
    let total = total_ticks as f64;
    let mut classes = [ClassCompliance {
        violation_rate: 0.0,
        epsilon: 0.0,
        compliant: false,
        z_slope: 0.0,
    }; CLASS_COUNT];
    for m in 0..CLASS_COUNT {
        let rate = violations[m] as f64 / total;
        let zs: Vec<f64> = z_trace.iter().map(|z| z[m]).collect();
        classes[m] = ClassCompliance {
            violation_rate: rate,
            epsilon: thresholds.epsilon[m],
            compliant: rate <= thresholds.epsilon[m],
            z_slope: trailing_slope(&zs),
        };
    }
    ComplianceReport { classes }
}

/// Builds the compliance report from pooled tick ages (any vehicle order)
/// and a time-ordered trace of the mean safety backlog per class.
///
/// # Panics
/// Panics on an empty age log.
pub fn compliance_report(
    tick_ages: &[[u32; CLASS_COUNT]],
    z_trace: &[[f64; CLASS_COUNT]],
    thresholds: &SafetyThresholds,
) -> ComplianceReport {
    let mut violations = [0u64; CLASS_COUNT];
    for ages in tick_ages {
        for m in 0..CLASS_COUNT {
            violations[m] += u64::from(ages[m] > thresholds.n_safe[m]);
        }
    }
    compliance_from_counts(violations, tick_ages.len() as u64, z_trace, thresholds)
}

// ============================================================================
// Slater feasibility
// ============================================================================

/// Checks the Slater-style feasibility condition
/// `f_forced <= (epsilon - delta) * N_ac / mu_n` for one class.
pub fn slater_check(forced_rate_per_slot: f64, mu_n_ticks: f64, ticks_per_slot: u32, epsilon: f64, delta: f64) -> bool {
    assert!(mu_n_ticks > 0.0, "mean outage ticks must be positive");
    assert!(delta > 0.0 && delta < epsilon, "slack must lie in (0, epsilon)");
    forced_rate_per_slot <= (epsilon - delta) * ticks_per_slot as f64 / mu_n_ticks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn safety_queue_unit_vectors() {
        assert!((update_safety_queue(0.0, true, 0.01) - 0.99).abs() < 1e-15);
        assert_eq!(update_safety_queue(0.0, false, 0.01), 0.0);
    }

    #[test]
    fn safety_queue_drains_to_exact_zero() {
        // From 0.99, clean ticks drain the queue; the projection reaches
        // exactly zero at step ceil(0.99/0.01) = 99.
        let mut z = update_safety_queue(0.0, true, 0.01);
        let mut zero_at = None;
        for k in 1..=100 {
            z = update_safety_queue(z, false, 0.01);
            if z == 0.0 {
                zero_at = Some(k);
                break;
            }
        }
        assert_eq!(zero_at, Some(99));
    }

    #[test]
    fn power_and_ho_queue_cases() {
        assert_eq!(update_power_queue(0.0, 10.0, 10.0), 0.0);
        assert_eq!(update_power_queue(5.0, 12.0, 10.0), 7.0);
        assert!((update_ho_queue(1.0, 0, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(update_ho_queue(0.0, 2, 0.5), 1.5);
    }

    #[test]
    fn queue_nonnegative_under_random_traffic() {
        let mut rng = Stream::new(21);
        let mut z = 0.0;
        let mut q = 0.0;
        for _ in 0..100_000 {
            z = update_safety_queue(z, rng.uniform() < 0.3, 0.2);
            q = update_power_queue(q, rng.uniform() * 20.0, 10.0);
            assert!(z >= 0.0 && q >= 0.0);
        }
    }

    #[test]
    fn per_tick_increment_bounded_by_one() {
        let mut rng = Stream::new(22);
        let mut z: f64 = 0.0;
        for _ in 0..10_000 {
            let next = update_safety_queue(z, rng.uniform() < 0.5, 0.05);
            assert!((next - z).abs() <= 1.0 + 1e-12);
            z = next;
        }
    }

    #[test]
    fn violation_count_cases() {
        let n_ac = 50u32;
        let under: Vec<u32> = (1..=50).map(|_| 3).collect();
        assert_eq!(slot_violation_count(&under, 5, n_ac), 0);
        // Handover slot from age 1 with no reconnection: ages 2..=51, of
        // which those exceeding 5 number 46 (tick oracle).
        let ho: Vec<u32> = (2..=51).collect();
        let oracle = ho.iter().filter(|&&a| a > 5).count() as u32;
        assert_eq!(oracle, 46);
        assert_eq!(slot_violation_count(&ho, 5, n_ac), 46);
        let all = alloc::vec![6u32; 50];
        assert_eq!(slot_violation_count(&all, 5, n_ac), 50);
    }

    #[test]
    #[should_panic(expected = "one age per tick")]
    fn violation_count_length_mismatch_panics() {
        slot_violation_count(&[1, 2, 3], 5, 50);
    }

    #[test]
    fn violation_count_matches_independent_recount() {
        let mut rng = Stream::new(23);
        for _ in 0..200 {
            let ages: Vec<u32> = (0..50).map(|_| 1 + (rng.next_u64() % 20) as u32).collect();
            let n_safe = 1 + (rng.next_u64() % 15) as u32;
            let independent: u32 = ages.iter().map(|&a| u32::from(a > n_safe)).sum();
            assert_eq!(slot_violation_count(&ages, n_safe, 50), independent);
        }
    }

    #[test]
    fn threshold_monotonicity() {
        // Raising n_safe never increases the violation count.
        let ages: Vec<u32> = (1..=50).collect();
        let mut last = u32::MAX;
        for n_safe in [1u32, 5, 10, 25, 60] {
            let v = slot_violation_count(&ages, n_safe, 50);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn deficit_identity_on_random_traces() {
        // Over any window starting and ending at z = 0 with v violations
        // and L ticks, v <= epsilon * L. Consecutive zero-to-zero windows
        // suffice: violation counts are additive across windows.
        let mut rng = Stream::new(24);
        for trace in 0..100 {
            let epsilon = 0.05 + 0.15 * rng.uniform();
            let p = epsilon * (0.5 + rng.uniform());
            let mut z = 0.0;
            let mut window_v = 0u64;
            let mut window_l = 0u64;
            for _ in 0..10_000 {
                let violated = rng.uniform() < p;
                z = update_safety_queue(z, violated, epsilon);
                window_v += u64::from(violated);
                window_l += 1;
                if z == 0.0 {
                    assert!(
                        window_v as f64 <= epsilon * window_l as f64 + 1e-9,
                        "trace {trace}: v = {window_v}, eps*L = {}",
                        epsilon * window_l as f64
                    );
                    window_v = 0;
                    window_l = 0;
                }
            }
        }
    }

    #[test]
    fn compliance_report_cases() {
        let thresholds = SafetyThresholds::default();
        // Zero violations.
        let ages = alloc::vec![[1u32, 1, 1]; 1000];
        let zs = alloc::vec![[0.0; 3]; 1000];
        let r = compliance_report(&ages, &zs, &thresholds);
        assert!(r.all_compliant());
        assert_eq!(r.classes[0].violation_rate, 0.0);

        // Exactly 1% of ticks violating class 1.
        let mut ages = alloc::vec![[1u32, 1, 1]; 10_000];
        for a in ages.iter_mut().take(100) {
            a[0] = 6;
        }
        let r = compliance_report(&ages, &zs, &thresholds);
        assert!((r.classes[0].violation_rate - 0.01).abs() < 1e-12);
        assert!(r.classes[0].compliant);
    }

    #[test]
    fn z_slope_detects_instability() {
        let thresholds = SafetyThresholds::default();
        let ages = alloc::vec![[1u32, 1, 1]; 100];
        // Linearly growing backlog: slope 0.5 per tick.
        let growing: Vec<[f64; 3]> = (0..1000).map(|i| [0.5 * i as f64, 0.0, 0.0]).collect();
        let r = compliance_report(&ages, &growing, &thresholds);
        assert!((r.classes[0].z_slope - 0.5).abs() < 1e-9);
        assert!(r.classes[1].z_slope.abs() < 1e-12);

        // Flat backlog: slope zero.
        let flat = alloc::vec![[3.0, 0.0, 0.0]; 1000];
        let r = compliance_report(&ages, &flat, &thresholds);
        assert!(r.classes[0].z_slope.abs() < 1e-12);
    }

    #[test]
    fn slater_cases() {
        // Threshold 0.1 per slot; one forced handover per 60 slots passes.
        assert!(slater_check(1.0 / 60.0, 2.5, 50, 0.01, 0.005));
        assert!(slater_check(0.0, 2.5, 50, 0.01, 0.005));
        assert!(!slater_check(0.2, 2.5, 50, 0.01, 0.005));
    }

    #[test]
    fn queue_set_roundtrip() {
        let thresholds = SafetyThresholds::default();
        let mut q = VirtualQueueSet::new(2);
        q.tick_safety(0, [6, 1, 1], &thresholds);
        assert!((q.z[0][0] - 0.99).abs() < 1e-15);
        assert_eq!(q.z[1][0], 0.0);
        q.slot_update(45.0, 40.0, 1, 0.2);
        assert!((q.q_power - 5.0).abs() < 1e-12);
        assert!((q.q_handover - 0.8).abs() < 1e-12);
        let mean = q.mean_z();
        assert!((mean[0] - 0.495).abs() < 1e-12);
    }
}
