//! Flat, commented, key-per-line scenario configuration files.
//!
//! The format is deliberately plain: one `key = value` per line, `#`
//! comments, dotted section prefixes. Keys are case-insensitive; lists are
//! comma-separated. Unknown keys are rejected so typos fail loudly.

use anyhow::{anyhow, bail, Context, Result};
use leolink::aoi::{OutageModel, TimescaleConfig};
use leolink::scheduler::PolicyKind;
use leolink::sim::ScenarioConfig;

/// Parses a scenario file. Starts from the built-in defaults; every key is
/// optional.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    // n_safe arrives in ticks; deadlines are stored in seconds, so the tick
    // length must be known first. Collect everything, then apply in order.
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
        entries.push((
            key.trim().to_ascii_lowercase(),
            value.trim().to_string(),
            lineno + 1,
        ));
    }

    // Clock keys first: threshold ticks depend on them.
    let mut slot_s = cfg.timescale.slot_seconds;
    let mut tick_ms = cfg.timescale.tick_seconds * 1e3;
    for (key, value, line) in &entries {
        match key.as_str() {
            "timescale.slot_s" => slot_s = parse_f64(value, line)?,
            "timescale.tick_ms" => tick_ms = parse_f64(value, line)?,
            _ => {}
        }
    }
    let ticks_per_slot = (slot_s / (tick_ms * 1e-3)).round();
    if ticks_per_slot < 1.0 || (slot_s / (tick_ms * 1e-3) - ticks_per_slot).abs() > 1e-6 {
        bail!("slot_s must be an integer multiple of tick_ms");
    }
    cfg.timescale = TimescaleConfig::from_ticks_per_slot(slot_s, ticks_per_slot as u32);
    let tick_s = cfg.timescale.tick_seconds;

    for (key, value, line) in &entries {
        let line = *line;
        match key.as_str() {
            // -- constellation -------------------------------------------
            "constellation.altitude_m" => cfg.constellation.altitude_m = parse_f64(value, &line)?,
            "constellation.inclination_deg" => {
                cfg.constellation.inclination_rad = parse_f64(value, &line)?.to_radians()
            }
            "constellation.planes" => {
                let planes = parse_usize(value, &line)?;
                let per_plane = cfg.constellation.total_satellites / cfg.constellation.planes.max(1);
                cfg.constellation.planes = planes;
                cfg.constellation.total_satellites = planes * per_plane;
            }
            "constellation.sats_per_plane" => {
                let per_plane = parse_usize(value, &line)?;
                cfg.constellation.total_satellites = cfg.constellation.planes * per_plane;
            }
            "constellation.phasing_factor" => {
                cfg.constellation.phasing_factor = parse_usize(value, &line)?
            }
            "constellation.min_elevation_deg" => {
                cfg.constellation.min_elevation_rad = parse_f64(value, &line)?.to_radians()
            }
            "constellation.window_cap_slots" => {
                cfg.constellation.window_cap_slots = parse_usize(value, &line)? as u32
            }
            // -- channel --------------------------------------------------
            "channel.fc_hz" => cfg.channel.carrier_hz = parse_f64(value, &line)?,
            "channel.sr_m" => cfg.channel.sr_m = parse_f64(value, &line)?,
            "channel.sr_b" => cfg.channel.sr_b = parse_f64(value, &line)?,
            "channel.sr_omega" => cfg.channel.sr_omega = parse_f64(value, &line)?,
            "channel.noise_dbm" => {
                cfg.channel.noise_w = leolink::channel::dbm_to_watts(parse_f64(value, &line)?)
            }
            "channel.gamma_th_db" => {
                cfg.gamma_th_db = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse_f64(value, &line)?)
                }
            }
            "channel.zenith_loss_db" => cfg.channel.zenith_loss_db = parse_f64(value, &line)?,
            "channel.sf_sigma_db" => cfg.channel.shadow_sigma_db = parse_f64(value, &line)?,
            "channel.sidelobe_factor" => cfg.sidelobe_gain = parse_f64(value, &line)?,
            "channel.beam_gain" => cfg.beam_gain = parse_f64(value, &line)?,
            // -- timescale (handled above) -------------------------------
            "timescale.slot_s" | "timescale.tick_ms" => {}
            // -- safety ---------------------------------------------------
            "safety.n_safe" => {
                let ticks = parse_list3(value, &line)?;
                cfg.deadlines_s = [ticks[0] * tick_s, ticks[1] * tick_s, ticks[2] * tick_s];
            }
            "safety.epsilon" => {
                let e = parse_list3(value, &line)?;
                cfg.epsilon = [e[0], e[1], e[2]];
            }
            "safety.weights" => {
                let w = parse_list3(value, &line)?;
                cfg.weights = [w[0], w[1], w[2]];
            }
            "safety.ho_mean_ms" => cfg.outage.mean_ms = parse_f64(value, &line)?,
            "safety.ho_std_ms" => cfg.outage.std_ms = parse_f64(value, &line)?,
            "safety.ho_min_ms" => cfg.outage.min_ms = parse_f64(value, &line)?,
            "safety.p_ho_w" => cfg.power.p_ho_w = parse_f64(value, &line)?,
            // -- platoons -------------------------------------------------
            "platoon.count" => cfg.platoon.platoons = parse_usize(value, &line)?,
            "platoon.vehicles_per_platoon" => {
                cfg.platoon.vehicles_per_platoon = parse_usize(value, &line)?
            }
            "platoon.speed_kmh_min" => cfg.platoon.speed_kmh_min = parse_f64(value, &line)?,
            "platoon.speed_kmh_max" => cfg.platoon.speed_kmh_max = parse_f64(value, &line)?,
            "platoon.gaps_m" => cfg.platoon.gaps_m = parse_list(value, &line)?,
            "platoon.latitude_deg" => cfg.platoon.highway_latitude_deg = parse_f64(value, &line)?,
            "platoon.spacing_m" => cfg.platoon.spacing_m = parse_f64(value, &line)?,
            "platoon.v2v_reach_m" => cfg.platoon.v2v_reach_m = parse_f64(value, &line)?,
            // -- power ----------------------------------------------------
            "power.p_max_w" => cfg.power.p_max_w = parse_f64(value, &line)?,
            "power.budget_w" => cfg.power.budget_w = parse_f64(value, &line)?,
            // -- policy ---------------------------------------------------
            "policy" => {
                cfg.policy = match value.to_ascii_lowercase().as_str() {
                    "dpp" => PolicyKind::Dpp,
                    "rr" => PolicyKind::RoundRobin,
                    "mvt" => PolicyKind::MaxVisibleTime,
                    "mrss" => PolicyKind::GreedyRss,
                    other => bail!("line {line}: unknown policy `{other}`"),
                }
            }
            "dpp.v" => cfg.policy_cfg.v = parse_f64(value, &line)?,
            "dpp.power_grid" => cfg.policy_cfg.power_grid = parse_list(value, &line)?,
            "dpp.rmin_bps_hz" => {
                let r = parse_list3(value, &line)?;
                cfg.policy_cfg.rmin_bps_hz = [r[0], r[1], r[2]];
            }
            "proactive.enabled" => cfg.policy_cfg.proactive = parse_bool(value, &line)?,
            "proactive.kappa_safe" => cfg.policy_cfg.kappa_safe = parse_f64(value, &line)?,
            "proactive.z_scale" => cfg.policy_cfg.z_scale = parse_f64(value, &line)?,
            "proactive.horizon_cap" => {
                cfg.policy_cfg.horizon_cap = parse_usize(value, &line)? as u32
            }
            "proactive.t_pre_s" => cfg.policy_cfg.t_pre_s = parse_f64(value, &line)?,
            // -- handover environment --------------------------------------
            "ho.period_s" => cfg.ho_period_s = parse_f64(value, &line)?,
            "ho.disc_budget_per_slot" => {
                cfg.policy_cfg.disc_budget_per_slot = parse_f64(value, &line)?
            }
            // -- simulation -------------------------------------------------
            "sim.episode_slots" => cfg.episode_slots = parse_usize(value, &line)? as u64,
            "sim.seed" => cfg.seed = parse_usize(value, &line)? as u64,
            "sim.prediction_draws" => cfg.prediction_draws = parse_usize(value, &line)?,
            "sim.subchannels" => cfg.subchannels = parse_usize(value, &line)? as u32,
            other => bail!("line {line}: unknown key `{other}`"),
        }
    }
    Ok(cfg)
}

/// Reads and parses a scenario file from disk.
pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("parsing scenario {}", path.display()))
}

fn parse_f64(v: &str, line: &usize) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| anyhow!("line {line}: `{v}` is not a number"))
}

fn parse_usize(v: &str, line: &usize) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| anyhow!("line {line}: `{v}` is not a non-negative integer"))
}

fn parse_bool(v: &str, line: &usize) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(anyhow!("line {line}: `{v}` is not a boolean")),
    }
}

fn parse_list(v: &str, line: &usize) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| parse_f64(s.trim(), line))
        .collect::<Result<Vec<f64>>>()
        .and_then(|xs| {
            if xs.is_empty() {
                Err(anyhow!("line {line}: empty list"))
            } else {
                Ok(xs)
            }
        })
}

fn parse_list3(v: &str, line: &usize) -> Result<[f64; 3]> {
    let xs = parse_list(v, line)?;
    if xs.len() != 3 {
        bail!("line {line}: expected exactly three comma-separated values");
    }
    Ok([xs[0], xs[1], xs[2]])
}

/// Renders a fully commented scenario file with the default values.
pub fn default_config_text() -> String {
    let cfg = ScenarioConfig::default();
    let OutageModel { mean_ms, std_ms, min_ms } = cfg.outage;
    let grid = cfg
        .policy_cfg
        .power_grid
        .iter()
        .map(|p| format!("{p:.4}"))
        .collect::<Vec<_>>()
        .join(",");
    let gaps = cfg
        .platoon
        .gaps_m
        .iter()
        .map(|g| format!("{g}"))
        .collect::<Vec<_>>()
        .join(",");
    let thresholds = cfg.thresholds();
    format!(
        "\
# Scenario configuration. One `key = value` per line; `#` starts a comment.
# Every key is optional and defaults to the value shown.

# --- constellation -----------------------------------------------------
constellation.altitude_m = {alt}
constellation.inclination_deg = {inc}
constellation.planes = {planes}
constellation.sats_per_plane = {spp}
constellation.phasing_factor = {pf}
constellation.min_elevation_deg = {mask}
constellation.window_cap_slots = {cap}

# --- channel ------------------------------------------------------------
channel.fc_hz = {fc}
channel.sr_m = {srm}
channel.sr_b = {srb}
channel.sr_omega = {sro}
channel.noise_dbm = {noise}
channel.gamma_th_db = auto        # `auto` calibrates the decoding threshold
channel.zenith_loss_db = {zen}
channel.sf_sigma_db = {sf}
channel.sidelobe_factor = {side}
channel.beam_gain = {beam}

# --- timescales -----------------------------------------------------------
timescale.slot_s = {slot}
timescale.tick_ms = {tick}

# --- safety ---------------------------------------------------------------
safety.n_safe = {ns0},{ns1},{ns2}   # deadlines in ticks at the tick above
safety.epsilon = {e0},{e1},{e2}
safety.weights = {w0},{w1},{w2}
safety.ho_mean_ms = {homean}
safety.ho_std_ms = {hostd}
safety.ho_min_ms = {homin}
safety.p_ho_w = {pho}

# --- platoons ---------------------------------------------------------------
platoon.count = {plats}
platoon.vehicles_per_platoon = {vpp}
platoon.speed_kmh_min = {vmin}
platoon.speed_kmh_max = {vmax}
platoon.gaps_m = {gaps}
platoon.latitude_deg = {lat}
platoon.spacing_m = {spacing}
platoon.v2v_reach_m = {reach}

# --- power ------------------------------------------------------------------
power.p_max_w = {pmax}
power.budget_w = {budget}

# --- policy ------------------------------------------------------------------
policy = dpp                      # dpp | rr | mvt | mrss
dpp.v = {v}
dpp.power_grid = {grid}
dpp.rmin_bps_hz = {r0},{r1},{r2}
proactive.enabled = true
proactive.kappa_safe = {kappa}
proactive.z_scale = {zscale}
proactive.horizon_cap = {hcap}
proactive.t_pre_s = {tpre}

# --- handover environment -------------------------------------------------
ho.period_s = {period}
ho.disc_budget_per_slot = {disc}

# --- simulation --------------------------------------------------------------
sim.episode_slots = {slots}
sim.seed = {seed}
sim.prediction_draws = {draws}
sim.subchannels = {sub}           # carried, unused by the slot laws
",
        alt = cfg.constellation.altitude_m,
        inc = cfg.constellation.inclination_rad.to_degrees(),
        planes = cfg.constellation.planes,
        spp = cfg.constellation.sats_per_plane(),
        pf = cfg.constellation.phasing_factor,
        mask = cfg.constellation.min_elevation_rad.to_degrees(),
        cap = cfg.constellation.window_cap_slots,
        fc = cfg.channel.carrier_hz,
        srm = cfg.channel.sr_m,
        srb = cfg.channel.sr_b,
        sro = cfg.channel.sr_omega,
        noise = 10.0 * cfg.channel.noise_w.log10() + 30.0,
        zen = cfg.channel.zenith_loss_db,
        sf = cfg.channel.shadow_sigma_db,
        side = cfg.sidelobe_gain,
        beam = cfg.beam_gain,
        slot = cfg.timescale.slot_seconds,
        tick = cfg.timescale.tick_seconds * 1e3,
        ns0 = thresholds.n_safe[0],
        ns1 = thresholds.n_safe[1],
        ns2 = thresholds.n_safe[2],
        e0 = cfg.epsilon[0],
        e1 = cfg.epsilon[1],
        e2 = cfg.epsilon[2],
        w0 = cfg.weights[0],
        w1 = cfg.weights[1],
        w2 = cfg.weights[2],
        homean = mean_ms,
        hostd = std_ms,
        homin = min_ms,
        pho = cfg.power.p_ho_w,
        plats = cfg.platoon.platoons,
        vpp = cfg.platoon.vehicles_per_platoon,
        vmin = cfg.platoon.speed_kmh_min,
        vmax = cfg.platoon.speed_kmh_max,
        gaps = gaps,
        lat = cfg.platoon.highway_latitude_deg,
        spacing = cfg.platoon.spacing_m,
        reach = cfg.platoon.v2v_reach_m,
        pmax = cfg.power.p_max_w,
        budget = cfg.power.budget_w,
        v = cfg.policy_cfg.v,
        grid = grid,
        r0 = cfg.policy_cfg.rmin_bps_hz[0],
        r1 = cfg.policy_cfg.rmin_bps_hz[1],
        r2 = cfg.policy_cfg.rmin_bps_hz[2],
        kappa = cfg.policy_cfg.kappa_safe,
        zscale = cfg.policy_cfg.z_scale,
        hcap = cfg.policy_cfg.horizon_cap,
        tpre = cfg.policy_cfg.t_pre_s,
        period = cfg.ho_period_s,
        disc = cfg.policy_cfg.disc_budget_per_slot,
        slots = cfg.episode_slots,
        seed = cfg.seed,
        draws = cfg.prediction_draws,
        sub = cfg.subchannels,
    )
}
