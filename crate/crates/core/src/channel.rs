//! Link-level channel model: compound Doppler analytics, large-scale path
//! gain, Shadowed-Rician small-scale fading, per-tick SINR, and per-tick /
//! per-slot success probabilities.
//!
//! Fading is drawn fresh at every accounting tick: the compound Doppler of a
//! moving satellite seen from a moving vehicle collapses the coherence time
//! far below one tick, so consecutive ticks see independent realizations.

use crate::rng::Stream;
use alloc::vec::Vec;

/// Propagation speed used throughout the Doppler and path-loss formulas, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

// ============================================================================
// Parameters
// ============================================================================

/// Errors raised by the channel operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelError {
    /// Elevation at or below zero: the zenith-loss term diverges and the
    /// Doppler ratio is undefined below the mask.
    BelowMask,
    /// A strictly positive parameter was zero or negative.
    NonPositive(&'static str),
}

impl core::fmt::Display for ChannelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::BelowMask => write!(f, "geometry below the elevation mask"),
            Self::NonPositive(what) => write!(f, "{what} must be positive"),
        }
    }
}

/// Static channel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Receiver noise power, watts.
    pub noise_w: f64,
    /// Shadowed-Rician shadowing severity m.
    pub sr_m: f64,
    /// Shadowed-Rician half scatter power b.
    pub sr_b: f64,
    /// Shadowed-Rician mean line-of-sight power Omega.
    pub sr_omega: f64,
    /// Zenith atmospheric loss, dB.
    pub zenith_loss_db: f64,
    /// Shadow-fading standard deviation, dB (drawn once per pass).
    pub shadow_sigma_db: f64,
    /// Decoding SNR threshold, linear.
    pub snr_threshold: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth_hz: f64,
}

impl ChannelParams {
    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), ChannelError> {
        for (v, name) in [
            (self.carrier_hz, "carrier frequency"),
            (self.noise_w, "noise power"),
            (self.sr_m, "sr m"),
            (self.sr_b, "sr b"),
            (self.sr_omega, "sr omega"),
            (self.snr_threshold, "snr threshold"),
            (self.bandwidth_hz, "bandwidth"),
        ] {
            if v <= 0.0 {
                return Err(ChannelError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Mean small-scale fading power, `Omega + 2b`.
    pub fn mean_fading_power(&self) -> f64 {
        self.sr_omega + 2.0 * self.sr_b
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 1.67e9,
            noise_w: dbm_to_watts(-101.0),
            sr_m: 10.0,
            sr_b: 0.126,
            sr_omega: 1.29,
            zenith_loss_db: 0.5,
            shadow_sigma_db: 2.0,
            snr_threshold: 1.0,
            bandwidth_hz: 10e6,
        }
    }
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

/// Linear ratio to decibels.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// Decibels to linear ratio.
pub fn db_to_lin(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

// ============================================================================
// Compound Doppler
// ============================================================================

/// Doppler and coherence summary for one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerReport {
    /// Satellite-induced shift, Hz.
    pub f_sat_hz: f64,
    /// Vehicle-induced shift, Hz.
    pub f_veh_hz: f64,
    /// Compound shift `f_sat - f_veh`, Hz.
    pub f_total_hz: f64,
    /// Coherence time `0.423 / |f_total|`, seconds; infinite when the
    /// compound shift vanishes.
    pub coherence_time_s: f64,
    /// Vehicle-to-satellite Doppler ratio bound `v_veh / (v_sat sin theta)`.
    pub doppler_ratio: f64,
    /// Nonstationarity index at tick resolution, `tau_ac / T_c`.
    pub nsi_tick: f64,
    /// Nonstationarity index at slot resolution, `tau_s / T_c`.
    pub nsi_slot: f64,
}

/// Compound Doppler shift `(f_c/c) * (v_sat sin(theta) - v_veh cos(psi))`.
pub fn compound_doppler(v_sat: f64, v_veh: f64, theta_sat: f64, psi_veh: f64, carrier_hz: f64) -> f64 {
    carrier_hz / SPEED_OF_LIGHT * (v_sat * libm::sin(theta_sat) - v_veh * libm::cos(psi_veh))
}

/// Full Doppler report for one geometry.
///
/// Fails with [`ChannelError::BelowMask`] when `sin(theta) <= 0`, where the
/// Doppler ratio is undefined.
pub fn coherence_report(
    v_sat: f64,
    v_veh: f64,
    theta_sat: f64,
    psi_veh: f64,
    carrier_hz: f64,
    tau_ac: f64,
    tau_s: f64,
) -> Result<DopplerReport, ChannelError> {
    let sin_theta = libm::sin(theta_sat);
    if sin_theta <= 0.0 {
        return Err(ChannelError::BelowMask);
    }
    let f_sat_hz = carrier_hz / SPEED_OF_LIGHT * v_sat * sin_theta;
    let f_veh_hz = carrier_hz / SPEED_OF_LIGHT * v_veh * libm::cos(psi_veh);
    let f_total_hz = f_sat_hz - f_veh_hz;
    let coherence_time_s = if f_total_hz == 0.0 {
        f64::INFINITY
    } else {
        0.423 / libm::fabs(f_total_hz)
    };
    let (nsi_tick, nsi_slot) = if coherence_time_s.is_finite() {
        (tau_ac / coherence_time_s, tau_s / coherence_time_s)
    } else {
        (0.0, 0.0)
    };
    Ok(DopplerReport {
        f_sat_hz,
        f_veh_hz,
        f_total_hz,
        coherence_time_s,
        doppler_ratio: v_veh / (v_sat * sin_theta),
        nsi_tick,
        nsi_slot,
    })
}

// ============================================================================
// Large-scale gain
// ============================================================================

/// Free-space path loss in dB: `20 log10(4 pi d f_c / c)`.
pub fn fspl_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * libm::log10(4.0 * core::f64::consts::PI * distance_m * carrier_hz / SPEED_OF_LIGHT)
}

/// Large-scale linear path gain from the NTN-style decomposition
/// `P_loss(dB) = FSPL + SF + L_zenith / sin(theta)`, returned as `1/P_loss`.
///
/// Fails when the elevation is at or below zero (the zenith term diverges).
pub fn path_gain(
    distance_m: f64,
    elevation_rad: f64,
    carrier_hz: f64,
    params: &ChannelParams,
    shadow_db: f64,
) -> Result<f64, ChannelError> {
    if elevation_rad <= 0.0 {
        return Err(ChannelError::BelowMask);
    }
    if distance_m <= 0.0 {
        return Err(ChannelError::NonPositive("distance"));
    }
    let loss_db = fspl_db(distance_m, carrier_hz)
        + shadow_db
        + params.zenith_loss_db / libm::sin(elevation_rad);
    Ok(db_to_lin(-loss_db))
}

// ============================================================================
// Small-scale fading
// ============================================================================

/// One draw of Shadowed-Rician fading power `|rho|^2`.
///
/// Compositional sampling: the line-of-sight power is Gamma(m, Omega/m), the
/// scatter component is complex Gaussian with per-dimension variance b, and
/// the power is the squared magnitude of their phasor sum. The mean is
/// exactly `Omega + 2b`.
pub fn sample_shadowed_rician(params: &ChannelParams, rng: &mut Stream) -> f64 {
    let los_power = rng.gamma(params.sr_m, params.sr_omega / params.sr_m);
    let los_amp = libm::sqrt(los_power);
    let phase = rng.uniform() * core::f64::consts::TAU;
    let sigma = libm::sqrt(params.sr_b);
    let re = los_amp * libm::cos(phase) + sigma * rng.normal();
    let im = los_amp * libm::sin(phase) + sigma * rng.normal();
    re * re + im * im
}

/// Shadow-fading draw in dB, zero-mean Gaussian. Drawn once per
/// (vehicle, satellite, pass) by the engine.
pub fn sample_shadow_fading_db(params: &ChannelParams, rng: &mut Stream) -> f64 {
    params.shadow_sigma_db * rng.normal()
}

// ============================================================================
// SINR and success probabilities
// ============================================================================

/// Instantaneous link sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    /// Large-scale linear gain.
    pub path_gain: f64,
    /// Small-scale fading power.
    pub fading_power: f64,
    /// Post-beamforming SINR, linear.
    pub sinr: f64,
    /// True when the SINR clears the decoding threshold.
    pub success: bool,
}

/// Per-tick SINR: `P * L * |rho|^2 * G / (noise + interference)`.
///
/// The interference argument aggregates the same product over co-channel
/// transmitters; that aggregation is performed by the simulation engine.
pub fn tick_sinr(
    tx_power_w: f64,
    path_gain: f64,
    fading_power: f64,
    beam_gain: f64,
    interference_w: f64,
    noise_w: f64,
) -> f64 {
    debug_assert!(noise_w > 0.0);
    tx_power_w * path_gain * fading_power * beam_gain / (noise_w + interference_w)
}

/// Slot-level success probability `1 - prod_n (1 - delta(n) p(n))`.
///
/// # Panics
/// Panics when the two sequences differ in length.
pub fn slot_success_prob(per_tick_probs: &[f64], schedule: &[bool]) -> f64 {
    assert_eq!(
        per_tick_probs.len(),
        schedule.len(),
        "per-tick probabilities and schedule must have equal length"
    );
    let mut all_fail = 1.0;
    for (&p, &on) in per_tick_probs.iter().zip(schedule) {
        debug_assert!((0.0..=1.0).contains(&p));
        if on {
            all_fail *= 1.0 - p;
        }
    }
    1.0 - all_fail
}

/// Closed-form slot success for a constant per-tick probability over `n_on`
/// scheduled ticks.
pub fn slot_success_prob_const(p: f64, n_on: u32) -> f64 {
    1.0 - libm::pow(1.0 - p, n_on as f64)
}

// ============================================================================
// Threshold calibration
// ============================================================================

/// Calibrates the decoding threshold so that the per-tick success
/// probability equals `target_p` at the given reference power and geometry
/// with zero interference and zero shadow fading.
///
/// Draws `draws` fading samples from a dedicated stream seeded by `seed`, so
/// the calibration is deterministic.
pub fn calibrate_snr_threshold(
    params: &ChannelParams,
    distance_m: f64,
    elevation_rad: f64,
    tx_power_w: f64,
    beam_gain: f64,
    target_p: f64,
    draws: usize,
    seed: u64,
) -> f64 {
    assert!((0.0..1.0).contains(&target_p) && target_p > 0.0);
    let gain = path_gain(distance_m, elevation_rad, params.carrier_hz, params, 0.0)
        .expect("calibration geometry above mask");
    let mut rng = Stream::new(seed);
    let mut snrs: Vec<f64> = (0..draws)
        .map(|_| tick_sinr(tx_power_w, gain, sample_shadowed_rician(params, &mut rng), beam_gain, 0.0, params.noise_w))
        .collect();
    snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // P(SNR >= threshold) = target_p puts the threshold at the
    // (1 - target_p) quantile.
    let idx = ((1.0 - target_p) * draws as f64) as usize;
    snrs[idx.min(draws - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doppler_single_term_collapse() {
        // v_veh = 0 at zenith leaves only the satellite term.
        let f = compound_doppler(7.589e3, 0.0, core::f64::consts::FRAC_PI_2, 0.0, 1.67e9);
        let expect = 1.67e9 / SPEED_OF_LIGHT * 7.589e3;
        assert!((f - expect).abs() < 1e-9);
    }

    #[test]
    fn doppler_at_zenith_near_42_3_khz() {
        // v_sat from sqrt(GM/a) at 550 km altitude.
        let v_sat = libm::sqrt(3.986004418e14 / 6.921e6);
        let f = compound_doppler(v_sat, 0.0, core::f64::consts::FRAC_PI_2, 0.0, 1.67e9);
        assert!((f - 4.23e4).abs() / 4.23e4 < 0.01, "f_D = {f}");
    }

    #[test]
    fn doppler_cancellation() {
        // v_sat sin(theta) = v_veh cos(psi) makes the shift vanish.
        let theta = 0.3_f64;
        let v_sat = 1000.0;
        let v_veh = v_sat * libm::sin(theta);
        let f = compound_doppler(v_sat, v_veh, theta, 0.0, 1.67e9);
        assert!(f.abs() < 1e-9);
    }

    #[test]
    fn coherence_report_values() {
        let v_sat = libm::sqrt(3.986004418e14 / 6.921e6);
        let r = coherence_report(v_sat, 0.0, core::f64::consts::FRAC_PI_2, 0.0, 1.67e9, 0.02, 1.0)
            .unwrap();
        assert!((r.coherence_time_s - 1.0e-5).abs() / 1.0e-5 < 0.01, "Tc = {}", r.coherence_time_s);
        assert!((r.nsi_tick - 2.0e3).abs() / 2.0e3 < 0.01, "NSI = {}", r.nsi_tick);
        assert!((r.f_total_hz - r.f_sat_hz + r.f_veh_hz).abs() < 1e-12);
    }

    #[test]
    fn doppler_ratio_at_25_degrees() {
        let v_sat = libm::sqrt(3.986004418e14 / 6.921e6);
        let r = coherence_report(v_sat, 15.0, 25.0_f64.to_radians(), 0.0, 1.67e9, 0.02, 1.0).unwrap();
        assert!((r.doppler_ratio - 4.7e-3).abs() / 4.7e-3 < 0.01, "rho_D = {}", r.doppler_ratio);
        // Doppler dominance regime for every masked geometry at platoon speeds.
        assert!(r.doppler_ratio < 0.005);
    }

    #[test]
    fn doppler_ratio_zero_for_static_vehicle() {
        let r = coherence_report(7.5e3, 0.0, 0.5, 0.0, 1.67e9, 0.02, 1.0).unwrap();
        assert_eq!(r.doppler_ratio, 0.0);
    }

    #[test]
    fn below_mask_is_signaled() {
        assert_eq!(
            coherence_report(7.5e3, 10.0, 0.0, 0.0, 1.67e9, 0.02, 1.0),
            Err(ChannelError::BelowMask)
        );
    }

    #[test]
    fn pure_fspl_at_zenith() {
        let params = ChannelParams {
            zenith_loss_db: 0.0,
            ..ChannelParams::default()
        };
        let d = 5.5e5;
        let fc = 1.67e9;
        let gain = path_gain(d, core::f64::consts::FRAC_PI_2, fc, &params, 0.0).unwrap();
        let expect = {
            let x = SPEED_OF_LIGHT / (4.0 * core::f64::consts::PI * d * fc);
            x * x
        };
        assert!((gain - expect).abs() / expect < 1e-9);
    }

    #[test]
    fn fspl_at_25_degree_slant() {
        let db = fspl_db(1.12e6, 1.67e9);
        assert!((db - 157.9).abs() < 0.05, "FSPL = {db}");
    }

    #[test]
    fn halving_distance_gains_six_db() {
        let params = ChannelParams::default();
        let g1 = path_gain(1.0e6, 0.7, 1.67e9, &params, 1.3).unwrap();
        let g2 = path_gain(0.5e6, 0.7, 1.67e9, &params, 1.3).unwrap();
        let delta_db = lin_to_db(g2 / g1);
        assert!((delta_db - 6.0206).abs() < 1e-6, "delta = {delta_db}");
    }

    #[test]
    fn path_gain_rejects_zero_elevation() {
        let params = ChannelParams::default();
        assert_eq!(path_gain(1.0e6, 0.0, 1.67e9, &params, 0.0), Err(ChannelError::BelowMask));
    }

    #[test]
    fn shadowed_rician_mean_is_omega_plus_2b() {
        let params = ChannelParams::default();
        let mut rng = Stream::new(0xfade);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = sample_shadowed_rician(&params, &mut rng);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se = libm::sqrt(var / n as f64);
        let expect = params.mean_fading_power();
        assert!((expect - 1.542).abs() < 1e-12);
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean = {mean}, expect = {expect}, se = {se}"
        );
        // Also inside the 1% band used by the coarser oracle.
        assert!((mean - expect).abs() / expect < 0.01);
    }

    #[test]
    fn degenerate_limit_collapses_to_omega() {
        let params = ChannelParams {
            sr_m: 1e8,
            sr_b: 1e-12,
            ..ChannelParams::default()
        };
        let mut rng = Stream::new(3);
        for _ in 0..1000 {
            let x = sample_shadowed_rician(&params, &mut rng);
            assert!((x - params.sr_omega).abs() < 0.01, "x = {x}");
        }
    }

    #[test]
    fn exponential_limit_ks_distance() {
        // b = 0, m = 1 collapses to an exponential with mean Omega.
        let params = ChannelParams {
            sr_m: 1.0,
            sr_b: 1e-300,
            sr_omega: 1.29,
            ..ChannelParams::default()
        };
        let mut rng = Stream::new(5);
        let n = 100_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_shadowed_rician(&params, &mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let cdf = 1.0 - libm::exp(-x / params.sr_omega);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max(libm::fabs(cdf - lo)).max(libm::fabs(cdf - hi));
        }
        assert!(ks < 0.01, "KS distance = {ks}");
    }

    #[test]
    fn fading_draws_uncorrelated_across_ticks() {
        let params = ChannelParams::default();
        let mut rng = Stream::new(77);
        let n = 100_000usize;
        let xs: Vec<f64> = (0..n).map(|_| sample_shadowed_rician(&params, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let mut cov = 0.0;
        for w in xs.windows(2) {
            cov += (w[0] - mean) * (w[1] - mean);
        }
        cov /= (n - 1) as f64;
        let rho = cov / var;
        assert!(rho.abs() < 3.0 / libm::sqrt(n as f64), "lag-1 autocorr = {rho}");
    }

    #[test]
    fn sinr_arithmetic() {
        // tx = noise with unit gains and no interference.
        assert!((tick_sinr(1e-14, 1.0, 1.0, 1.0, 0.0, 1e-14) - 1.0).abs() < 1e-12);
        // Doubling the denominator halves the SINR.
        let s1 = tick_sinr(10.0, 1.0, 1.0, 1.0, 1e-14, 1e-14);
        let s2 = tick_sinr(10.0, 1.0, 1.0, 1.0, 3e-14, 1e-14);
        assert!((s1 / s2 - 2.0).abs() < 1e-12);
        // 10 W through a 1e-15 gain product over 1e-13 noise.
        let s = tick_sinr(10.0, 1e-15, 1.0, 1.0, 0.0, 1e-13);
        assert!((s - 1e-1).abs() < 1e-15, "s = {s}");
    }

    #[test]
    fn slot_success_cases() {
        let p = [0.3; 4];
        assert_eq!(slot_success_prob(&p, &[false; 4]), 0.0);
        assert!((slot_success_prob(&[0.3], &[true]) - 0.3).abs() < 1e-15);
        let probs = [0.05; 50];
        let sched = [true; 50];
        let got = slot_success_prob(&probs, &sched);
        assert!((got - 0.9231).abs() < 5e-5, "got = {got}");
        assert!((got - slot_success_prob_const(0.05, 50)).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "equal length")]
    fn slot_success_length_mismatch_panics() {
        slot_success_prob(&[0.5, 0.5], &[true]);
    }

    #[test]
    fn slot_success_monotone() {
        let mut rng = Stream::new(9);
        for _ in 0..200 {
            let n = 8;
            let mut probs: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let sched: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.5).collect();
            let base = slot_success_prob(&probs, &sched);
            // Raising any p never lowers the slot success.
            let k = (rng.next_u64() % n as u64) as usize;
            probs[k] = (probs[k] + 0.3).min(1.0);
            assert!(slot_success_prob(&probs, &sched) >= base - 1e-15);
            // Turning any tick on never lowers it either.
            let mut sched2 = sched.clone();
            sched2[k] = true;
            assert!(slot_success_prob(&probs, &sched2) >= base - 1e-15);
        }
    }

    #[test]
    fn calibration_hits_target() {
        let params = ChannelParams::default();
        let th = calibrate_snr_threshold(&params, 1.0e6, 0.5, 10.0, 16.0, 0.3, 40_000, 1234);
        // Empirical check with an independent stream.
        let gain = path_gain(1.0e6, 0.5, params.carrier_hz, &params, 0.0).unwrap();
        let mut rng = Stream::new(4321);
        let n = 100_000;
        let mut hits = 0u32;
        for _ in 0..n {
            let snr = tick_sinr(10.0, gain, sample_shadowed_rician(&params, &mut rng), 16.0, 0.0, params.noise_w);
            if snr >= th {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        assert!((p - 0.3).abs() < 0.01, "p = {p}");
    }
}
