//! Runs the default scenario under each policy and prints a one-line
//! summary per policy.
//!
//! ```text
//! cargo run --release --example compare_policies
//! ```

use leolink::scheduler::PolicyKind;
use leolink::sim::{run_episode, ScenarioConfig};

fn main() {
    let base = ScenarioConfig::default();
    println!(
        "decoding threshold: {:.3} dB (auto-calibrated)",
        10.0 * base.resolved_gamma_th().log10()
    );
    println!(
        "{:<6} {:>8} {:>8} {:>8} {:>8} {:>9} {:>7} {:>7} {:>5}",
        "policy", "viol1", "viol2", "viol3", "aoi1", "power(W)", "forced", "disc", "pp"
    );
    for (policy, name) in [
        (PolicyKind::Dpp, "dpp"),
        (PolicyKind::RoundRobin, "rr"),
        (PolicyKind::MaxVisibleTime, "mvt"),
        (PolicyKind::GreedyRss, "mrss"),
    ] {
        let cfg = ScenarioConfig { policy, ..base.clone() };
        let r = run_episode(&cfg, cfg.seed).expect("episode");
        println!(
            "{:<6} {:>8.4} {:>8.4} {:>8.4} {:>8.3} {:>9.1} {:>7} {:>7} {:>5}",
            name,
            r.classes[0].violation_rate,
            r.classes[1].violation_rate,
            r.classes[2].violation_rate,
            r.classes[0].mean_aoi_ticks,
            r.mean_power_w,
            r.forced_handovers,
            r.discretionary_handovers,
            r.pingpong_events.len()
        );
    }
}
