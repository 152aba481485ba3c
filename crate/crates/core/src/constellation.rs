//! Walker-Delta constellation propagation, elevation geometry, visibility
//! sets, and visibility-window prediction.
//!
//! Satellites move on circular orbits around a non-rotating spherical Earth;
//! vehicles move along a great-circle highway segment. This deterministic
//! geometry is the prediction source for the scheduler: visibility windows
//! and predicted link gains are all derived from it.

use alloc::vec::Vec;
use core::f64::consts::TAU;

// ============================================================================
// Vector helpers (Earth-centered frame)
// ============================================================================

/// 3-vector in the Earth-centered inertial frame, meters.
pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

// ============================================================================
// Configuration
// ============================================================================

/// Errors raised by invalid constellation parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstellationError {
    /// `total_satellites` is not divisible by `planes`.
    UnevenPlanes,
    /// A strictly positive parameter was zero or negative.
    NonPositive(&'static str),
}

impl core::fmt::Display for ConstellationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::UnevenPlanes => write!(f, "total satellites must divide evenly into planes"),
            Self::NonPositive(what) => write!(f, "{what} must be positive"),
        }
    }
}

/// Walker-Delta constellation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationConfig {
    /// Total number of satellites.
    pub total_satellites: usize,
    /// Number of orbital planes.
    pub planes: usize,
    /// Walker phasing factor F.
    pub phasing_factor: usize,
    /// Orbital altitude above the surface, meters.
    pub altitude_m: f64,
    /// Orbital inclination, radians.
    pub inclination_rad: f64,
    /// Earth radius, meters.
    pub earth_radius_m: f64,
    /// Earth gravitational parameter, m^3/s^2.
    pub gm_earth: f64,
    /// Minimum elevation mask, radians.
    pub min_elevation_rad: f64,
    /// Forward-scan cap for visibility windows, slots.
    pub window_cap_slots: u32,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            total_satellites: 1200,
            planes: 24,
            phasing_factor: 1,
            altitude_m: 550e3,
            inclination_rad: 53.0_f64.to_radians(),
            earth_radius_m: 6.371e6,
            gm_earth: 3.986004418e14,
            min_elevation_rad: 25.0_f64.to_radians(),
            window_cap_slots: 120,
        }
    }
}

impl ConstellationConfig {
    /// Semi-major axis of the shell, meters.
    pub fn semi_major_axis(&self) -> f64 {
        self.earth_radius_m + self.altitude_m
    }

    /// Mean angular rate of the circular orbit, rad/s.
    pub fn angular_rate(&self) -> f64 {
        let a = self.semi_major_axis();
        libm::sqrt(self.gm_earth / (a * a * a))
    }

    /// Orbital period, seconds.
    pub fn orbital_period_s(&self) -> f64 {
        TAU / self.angular_rate()
    }

    /// Orbital speed of a satellite, m/s.
    pub fn satellite_speed(&self) -> f64 {
        libm::sqrt(self.gm_earth / self.semi_major_axis())
    }

    /// Satellites per plane.
    pub fn sats_per_plane(&self) -> usize {
        self.total_satellites / self.planes
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), ConstellationError> {
        if self.planes == 0 || self.total_satellites == 0 {
            return Err(ConstellationError::NonPositive("satellite count"));
        }
        if !self.total_satellites.is_multiple_of(self.planes) {
            return Err(ConstellationError::UnevenPlanes);
        }
        if self.altitude_m <= 0.0 {
            return Err(ConstellationError::NonPositive("altitude"));
        }
        if self.earth_radius_m <= 0.0 {
            return Err(ConstellationError::NonPositive("earth radius"));
        }
        if self.gm_earth <= 0.0 {
            return Err(ConstellationError::NonPositive("gravitational parameter"));
        }
        Ok(())
    }
}

// ============================================================================
// Ephemerides
// ============================================================================

/// Orbital elements of one satellite in the shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteEphemeris {
    /// Satellite index within the constellation.
    pub satellite_id: usize,
    /// Right ascension of the ascending node, radians in [0, 2pi).
    pub raan: f64,
    /// In-plane phase offset, radians in [0, 2pi).
    pub phase_offset: f64,
    /// Initial anomaly shared by the shell, radians in [0, 2pi).
    pub initial_anomaly: f64,
}

fn wrap_angle(x: f64) -> f64 {
    let mut a = x % TAU;
    if a < 0.0 {
        a += TAU;
    }
    a
}

/// Standard Walker phase assignment: satellite `s` of plane `p` gets
/// RAAN `2*pi*p/planes` and in-plane phase
/// `2*pi*(s + p*F/planes)/sats_per_plane`.
pub fn walker_ephemerides(cfg: &ConstellationConfig) -> Vec<SatelliteEphemeris> {
    let per_plane = cfg.sats_per_plane();
    let mut out = Vec::with_capacity(cfg.total_satellites);
    for p in 0..cfg.planes {
        let raan = TAU * p as f64 / cfg.planes as f64;
        for s in 0..per_plane {
            let phase = TAU * (s as f64 + p as f64 * cfg.phasing_factor as f64 / cfg.planes as f64)
                / per_plane as f64;
            out.push(SatelliteEphemeris {
                satellite_id: p * per_plane + s,
                raan: wrap_angle(raan),
                phase_offset: wrap_angle(phase),
                initial_anomaly: 0.0,
            });
        }
    }
    out
}

/// Position of a satellite at decision slot `t` (slot duration `tau_s`).
///
/// The in-plane anomaly advances as `phase + omega * t * tau_s + f0` and is
/// rotated by RAAN and inclination; the result always has magnitude equal to
/// the semi-major axis.
pub fn satellite_position(
    eph: &SatelliteEphemeris,
    cfg: &ConstellationConfig,
    t: u64,
    tau_s: f64,
) -> Vec3 {
    satellite_position_at(eph, cfg, t as f64 * tau_s)
}

/// Position at an absolute time offset in seconds.
pub fn satellite_position_at(eph: &SatelliteEphemeris, cfg: &ConstellationConfig, t_s: f64) -> Vec3 {
    let a = cfg.semi_major_axis();
    let psi = eph.phase_offset + cfg.angular_rate() * t_s + eph.initial_anomaly;
    let (sin_psi, cos_psi) = (libm::sin(psi), libm::cos(psi));
    let (sin_raan, cos_raan) = (libm::sin(eph.raan), libm::cos(eph.raan));
    let (sin_inc, cos_inc) = (libm::sin(cfg.inclination_rad), libm::cos(cfg.inclination_rad));
    [
        a * (cos_psi * cos_raan - sin_psi * sin_raan * cos_inc),
        a * (cos_psi * sin_raan + sin_psi * cos_raan * cos_inc),
        a * (sin_psi * sin_inc),
    ]
}

// ============================================================================
// Vehicles
// ============================================================================

/// Kinematic state of one platoon leader.
///
/// The highway is the great circle that culminates at `highway_latitude_rad`
/// (at arc position zero) and runs eastward; `arc_m` is the signed
/// along-track offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Vehicle index.
    pub vehicle_id: usize,
    /// Position in the Earth-centered frame, meters.
    pub position: Vec3,
    /// Ground speed, m/s.
    pub speed_mps: f64,
    /// Unit heading vector.
    pub heading: Vec3,
    /// Culmination latitude of the highway great circle, radians.
    pub highway_latitude_rad: f64,
    /// Along-track offset, meters.
    pub arc_m: f64,
    /// Earth radius used for the highway parameterization, meters.
    pub earth_radius_m: f64,
}

impl VehicleState {
    /// Places a vehicle on the highway at the given along-track offset.
    pub fn on_highway(
        vehicle_id: usize,
        latitude_rad: f64,
        arc_m: f64,
        speed_mps: f64,
        earth_radius_m: f64,
    ) -> Self {
        let (sin_lat, cos_lat) = (libm::sin(latitude_rad), libm::cos(latitude_rad));
        // Great circle through (cos_lat, 0, sin_lat) with eastward tangent (0, 1, 0).
        let s = arc_m / earth_radius_m;
        let (sin_s, cos_s) = (libm::sin(s), libm::cos(s));
        let position = [
            earth_radius_m * cos_lat * cos_s,
            earth_radius_m * sin_s,
            earth_radius_m * sin_lat * cos_s,
        ];
        let heading = normalize([-cos_lat * sin_s, cos_s, -sin_lat * sin_s]);
        Self {
            vehicle_id,
            position,
            speed_mps,
            heading,
            highway_latitude_rad: latitude_rad,
            arc_m,
            earth_radius_m,
        }
    }

    /// State after travelling along the highway for `dt_s` seconds.
    pub fn advanced(&self, dt_s: f64) -> Self {
        Self::on_highway(
            self.vehicle_id,
            self.highway_latitude_rad,
            self.arc_m + self.speed_mps * dt_s,
            self.speed_mps,
            self.earth_radius_m,
        )
    }
}

// ============================================================================
// Geometry
// ============================================================================

/// Line-of-sight geometry between a vehicle and a satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySample {
    /// Elevation above the local horizontal plane at the vehicle, radians.
    pub elevation_rad: f64,
    /// Slant range, meters.
    pub slant_range_m: f64,
    /// Unit vector from vehicle to satellite.
    pub link_direction: Vec3,
    /// True when the elevation clears the configured mask.
    pub visible: bool,
}

/// Computes elevation, slant range, and visibility of `sat_pos` as seen from
/// the vehicle. A satellite below the horizon yields a negative elevation and
/// `visible = false`, not an error.
pub fn elevation_and_range(sat_pos: Vec3, veh: &VehicleState, min_elevation_rad: f64) -> GeometrySample {
    let los = sub(sat_pos, veh.position);
    let slant_range_m = norm(los);
    let link_direction = scale(los, 1.0 / slant_range_m);
    let up = normalize(veh.position);
    let sin_elev = dot(up, link_direction).clamp(-1.0, 1.0);
    let elevation_rad = libm::asin(sin_elev);
    GeometrySample {
        elevation_rad,
        slant_range_m,
        link_direction,
        visible: elevation_rad >= min_elevation_rad,
    }
}

/// Indices of all satellites whose elevation clears the mask at slot `t`.
pub fn visible_set(
    cfg: &ConstellationConfig,
    ephemerides: &[SatelliteEphemeris],
    veh: &VehicleState,
    t: u64,
    tau_s: f64,
) -> Vec<usize> {
    ephemerides
        .iter()
        .filter(|eph| {
            let pos = satellite_position(eph, cfg, t, tau_s);
            elevation_and_range(pos, veh, cfg.min_elevation_rad).visible
        })
        .map(|eph| eph.satellite_id)
        .collect()
}

/// Result of a visibility-window scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisibilityWindow {
    /// Number of whole slots, counted from `t`, over which the satellite
    /// stays above the mask.
    pub slots: u32,
    /// Set when visibility persisted past the scan cap; `slots` then equals
    /// the cap.
    pub censored: bool,
}

/// Scans forward at slot resolution for the largest run of slots over which
/// the satellite stays visible, following the vehicle along its highway.
///
/// Returns zero slots when the satellite is not visible at `t`.
pub fn visibility_window(
    cfg: &ConstellationConfig,
    eph: &SatelliteEphemeris,
    veh: &VehicleState,
    t: u64,
    tau_s: f64,
) -> VisibilityWindow {
    let cap = cfg.window_cap_slots;
    for dt in 0..=cap {
        let pos = satellite_position(eph, cfg, t + dt as u64, tau_s);
        let v = veh.advanced(dt as f64 * tau_s);
        let g = elevation_and_range(pos, &v, cfg.min_elevation_rad);
        if !g.visible {
            return VisibilityWindow {
                slots: dt.saturating_sub(1),
                censored: false,
            };
        }
    }
    VisibilityWindow {
        slots: cap,
        censored: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn test_cfg() -> ConstellationConfig {
        ConstellationConfig::default()
    }

    #[test]
    fn position_all_angles_zero_lands_on_x_axis() {
        let cfg = ConstellationConfig {
            inclination_rad: 0.0,
            ..test_cfg()
        };
        let eph = SatelliteEphemeris {
            satellite_id: 0,
            raan: 0.0,
            phase_offset: 0.0,
            initial_anomaly: 0.0,
        };
        let p = satellite_position(&eph, &cfg, 0, 1.0);
        let a = cfg.semi_major_axis();
        assert!((p[0] - a).abs() < 1e-6);
        assert!(p[1].abs() < 1e-6 && p[2].abs() < 1e-6);
    }

    #[test]
    fn polar_orbit_quarter_anomaly_is_north_pole() {
        let cfg = ConstellationConfig {
            inclination_rad: PI / 2.0,
            ..test_cfg()
        };
        let eph = SatelliteEphemeris {
            satellite_id: 0,
            raan: 0.0,
            phase_offset: PI / 2.0,
            initial_anomaly: 0.0,
        };
        let p = satellite_position(&eph, &cfg, 0, 1.0);
        let a = cfg.semi_major_axis();
        assert!(p[0].abs() < 1e-6);
        assert!(p[1].abs() < 1e-6);
        assert!((p[2] - a).abs() < 1e-6);
    }

    #[test]
    fn orbital_period_at_550_km() {
        let cfg = test_cfg();
        // 2*pi*sqrt(a^3/GM) with a = 6.921e6 m.
        let period = cfg.orbital_period_s();
        assert!((period - 5.7304e3).abs() / 5.7304e3 < 1e-3, "period = {period}");
    }

    #[test]
    fn radius_preserved_for_random_elements() {
        let cfg = test_cfg();
        let a = cfg.semi_major_axis();
        for eph in walker_ephemerides(&cfg).iter().step_by(97) {
            for t in [0u64, 13, 377, 5000] {
                let r = norm(satellite_position(eph, &cfg, t, 1.0));
                assert!((r - a).abs() / a < 1e-9);
            }
        }
    }

    #[test]
    fn period_property() {
        let cfg = test_cfg();
        let eph = &walker_ephemerides(&cfg)[17];
        let tau_s = 1.0;
        let period_slots = cfg.orbital_period_s() / tau_s;
        let p0 = satellite_position_at(eph, &cfg, 100.0);
        let p1 = satellite_position_at(eph, &cfg, 100.0 + period_slots * tau_s);
        let err = norm(sub(p0, p1)) / cfg.semi_major_axis();
        assert!(err < 1e-6, "relative drift over one period = {err}");
    }

    #[test]
    fn walker_assignment_covers_planes_evenly() {
        let cfg = test_cfg();
        let eph = walker_ephemerides(&cfg);
        assert_eq!(eph.len(), cfg.total_satellites);
        // First satellite of plane 1.
        let e = &eph[cfg.sats_per_plane()];
        assert!((e.raan - TAU / cfg.planes as f64).abs() < 1e-12);
        assert!(
            (e.phase_offset
                - TAU * (cfg.phasing_factor as f64 / cfg.planes as f64) / cfg.sats_per_plane() as f64)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn zenith_geometry() {
        let cfg = test_cfg();
        let veh = VehicleState::on_highway(0, 0.3, 0.0, 12.5, cfg.earth_radius_m);
        let sat = scale(normalize(veh.position), cfg.semi_major_axis());
        let g = elevation_and_range(sat, &veh, cfg.min_elevation_rad);
        assert!((g.elevation_rad - PI / 2.0).abs() < 1e-9);
        assert!((g.slant_range_m - cfg.altitude_m).abs() < 1e-3);
        assert!(g.visible);
    }

    #[test]
    fn antipodal_satellite_is_below_horizon() {
        let cfg = test_cfg();
        let veh = VehicleState::on_highway(0, 0.3, 0.0, 12.5, cfg.earth_radius_m);
        let sat = scale(normalize(veh.position), -cfg.semi_major_axis());
        let g = elevation_and_range(sat, &veh, cfg.min_elevation_rad);
        assert!(g.elevation_rad < 0.0);
        assert!(!g.visible);
    }

    #[test]
    fn slant_range_at_25_degrees() {
        // Law-of-cosines oracle: d = sqrt(R^2 sin^2 e + 2Rh + h^2) - R sin e.
        let cfg = test_cfg();
        let (r, h) = (cfg.earth_radius_m, cfg.altitude_m);
        let e = 25.0_f64.to_radians();
        let oracle = libm::sqrt(r * r * libm::sin(e) * libm::sin(e) + 2.0 * r * h + h * h)
            - r * libm::sin(e);
        assert!((oracle - 1.1233e6).abs() < 1e3, "oracle = {oracle}");

        // Construct an actual geometry at that elevation and compare.
        let veh = VehicleState::on_highway(0, 0.0, 0.0, 12.5, r);
        // Earth-central angle lambda from the elevation via the range oracle.
        let a = r + h;
        let lambda = libm::acos((r * r + a * a - oracle * oracle) / (2.0 * r * a)).abs();
        let sat = [a * libm::cos(lambda), a * libm::sin(lambda), 0.0];
        let g = elevation_and_range(sat, &veh, cfg.min_elevation_rad);
        assert!((g.elevation_rad - e).abs() < 1e-9, "elev = {}", g.elevation_rad);
        assert!((g.slant_range_m - oracle).abs() < 1.0);
    }

    #[test]
    fn visible_set_nonempty_at_zero_mask() {
        let cfg = ConstellationConfig {
            min_elevation_rad: 0.0,
            ..test_cfg()
        };
        let eph = walker_ephemerides(&cfg);
        let veh = VehicleState::on_highway(0, 47.0_f64.to_radians(), 0.0, 12.5, cfg.earth_radius_m);
        assert!(!visible_set(&cfg, &eph, &veh, 0, 1.0).is_empty());
    }

    #[test]
    fn visible_set_monotone_in_mask() {
        let base = test_cfg();
        let eph = walker_ephemerides(&base);
        let veh = VehicleState::on_highway(0, 47.0_f64.to_radians(), 0.0, 12.5, base.earth_radius_m);
        let mut last = usize::MAX;
        for mask_deg in [0.0f64, 10.0, 25.0, 40.0, 60.0, 89.9] {
            let cfg = ConstellationConfig {
                min_elevation_rad: mask_deg.to_radians(),
                ..base.clone()
            };
            let n = visible_set(&cfg, &eph, &veh, 1234, 1.0).len();
            assert!(n <= last, "mask {mask_deg}: {n} > {last}");
            last = n;
        }
    }

    #[test]
    fn near_vertical_mask_sees_almost_nothing() {
        let cfg = ConstellationConfig {
            min_elevation_rad: (PI / 2.0) - 1e-6,
            ..test_cfg()
        };
        let eph = walker_ephemerides(&cfg);
        let veh = VehicleState::on_highway(0, 47.0_f64.to_radians(), 0.0, 12.5, cfg.earth_radius_m);
        assert!(visible_set(&cfg, &eph, &veh, 0, 1.0).len() <= 1);
    }

    #[test]
    fn mean_visible_count_near_ten_over_one_period() {
        let cfg = test_cfg();
        let eph = walker_ephemerides(&cfg);
        let lat = 47.0_f64.to_radians();
        let period_slots = cfg.orbital_period_s() as u64;
        let mut total = 0usize;
        let mut samples = 0usize;
        for t in (0..period_slots).step_by(7) {
            let veh = VehicleState::on_highway(0, lat, 12.5 * t as f64, 12.5, cfg.earth_radius_m);
            total += visible_set(&cfg, &eph, &veh, t, 1.0).len();
            samples += 1;
        }
        let mean = total as f64 / samples as f64;
        assert!((5.0..=15.0).contains(&mean), "mean visible = {mean}");
    }

    #[test]
    fn window_zero_when_invisible() {
        let cfg = test_cfg();
        let eph = walker_ephemerides(&cfg);
        let lat = 47.0_f64.to_radians();
        let veh = VehicleState::on_highway(0, lat, 0.0, 12.5, cfg.earth_radius_m);
        let vis = visible_set(&cfg, &eph, &veh, 0, 1.0);
        let hidden = eph.iter().find(|e| !vis.contains(&e.satellite_id)).unwrap();
        let w = visibility_window(&cfg, hidden, &veh, 0, 1.0);
        assert_eq!(w.slots, 0);
        assert!(!w.censored);
    }

    #[test]
    fn window_matches_brute_force_scan_and_self_consistency() {
        let cfg = ConstellationConfig {
            window_cap_slots: 400,
            ..test_cfg()
        };
        let eph_all = walker_ephemerides(&cfg);
        let lat = 47.0_f64.to_radians();
        let veh = VehicleState::on_highway(0, lat, 0.0, 12.5, cfg.earth_radius_m);
        let vis = visible_set(&cfg, &eph_all, &veh, 0, 1.0);
        assert!(!vis.is_empty());
        let eph = &eph_all[vis[0]];
        let w = visibility_window(&cfg, eph, &veh, 0, 1.0);

        // Brute-force forward scan oracle at 1-slot resolution.
        let mut oracle = 0u32;
        for dt in 1..=cfg.window_cap_slots {
            let pos = satellite_position(eph, &cfg, dt as u64, 1.0);
            let v = veh.advanced(dt as f64);
            if elevation_and_range(pos, &v, cfg.min_elevation_rad).visible {
                oracle = dt;
            } else {
                break;
            }
        }
        if !w.censored {
            assert_eq!(w.slots, oracle);
        }

        // Self-consistency: the satellite is in the visible set throughout.
        for dt in 0..=w.slots {
            let v = veh.advanced(dt as f64);
            let set = visible_set(&cfg, &eph_all, &v, dt as u64, 1.0);
            assert!(set.contains(&eph.satellite_id), "missing at dt = {dt}");
        }
    }

    #[test]
    fn window_cap_sets_censored_flag() {
        let cfg = ConstellationConfig {
            window_cap_slots: 5,
            ..test_cfg()
        };
        let eph_all = walker_ephemerides(&cfg);
        let lat = 47.0_f64.to_radians();
        let veh = VehicleState::on_highway(0, lat, 0.0, 12.5, cfg.earth_radius_m);
        // Find a satellite well above the mask; five slots is far shorter
        // than any real pass, so the scan must censor.
        let best = eph_all
            .iter()
            .max_by(|a, b| {
                let ga = elevation_and_range(satellite_position(a, &cfg, 0, 1.0), &veh, 0.0);
                let gb = elevation_and_range(satellite_position(b, &cfg, 0, 1.0), &veh, 0.0);
                ga.elevation_rad.partial_cmp(&gb.elevation_rad).unwrap()
            })
            .unwrap();
        let w = visibility_window(&cfg, best, &veh, 0, 1.0);
        assert_eq!(w.slots, 5);
        assert!(w.censored);
    }

    #[test]
    fn config_validation() {
        let mut cfg = test_cfg();
        assert!(cfg.validate().is_ok());
        cfg.total_satellites = 1201;
        assert_eq!(cfg.validate(), Err(ConstellationError::UnevenPlanes));
        cfg.total_satellites = 1200;
        cfg.altitude_m = 0.0;
        assert!(matches!(cfg.validate(), Err(ConstellationError::NonPositive(_))));
    }
}
