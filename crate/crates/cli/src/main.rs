//! Command-line front end: single simulations, parameter sweeps, theory
//! validation, and report rendering.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use leolink::sim::run_episode;
use leolink_cli::{config, export, report, sweep};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "leolink", version, about = "Two-timescale AoI scheduling simulator for LEO-backhauled platoons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and export its results.
    Simulate {
        /// Scenario file; omit for the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for results.csv / results.json / compliance.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a grid of episodes over one axis.
    Sweep {
        /// Scenario file; omit for the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Axis: ticks_per_slot | ho_mean_ms | ho_period_s | dpp_v.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        /// Comma-separated replicate seeds.
        #[arg(long)]
        seeds: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the closed-form theory checks; exits nonzero on any mismatch.
    ValidateTheory {
        /// Output directory for the machine-readable table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render compliance tables from previously exported results.
    Report {
        /// Directory holding exported .csv files.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the default scenario file.
    DefaultConfig,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Simulate { config, seed, out } => {
            let cfg = match config {
                Some(path) => config::load_scenario(&path)?,
                None => Default::default(),
            };
            let seed = seed.unwrap_or(cfg.seed);
            let result = run_episode(&cfg, seed).map_err(|e| anyhow::anyhow!("{e}"))?;
            let records = export::records_from_run("simulate", seed, "-", 0.0, &result);
            export::export_results(&records, &out, "results")?;
            let compliance = serde_json::to_vec_pretty(&export::compliance_records(&result))?;
            std::fs::write(out.join("compliance.json"), compliance)?;
            println!("{}", report::render_compliance_table(&records));
            println!(
                "mean power {:.2} W, forced/discretionary handovers {}/{}, ping-pong events {}",
                result.mean_power_w,
                result.forced_handovers,
                result.discretionary_handovers,
                result.pingpong_events.len()
            );
            for gap in &result.follower_e2e {
                println!("follower e2e at {:>4.0} m gap: {:.2} ticks", gap.gap_m, gap.mean_e2e_ticks);
            }
            println!("results written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            axis,
            values,
            seeds,
            out,
        } => {
            let base = match config {
                Some(path) => config::load_scenario(&path)?,
                None => Default::default(),
            };
            let axis = sweep::SweepAxis::parse(&axis)?;
            let values: Vec<f64> = values
                .split(',')
                .map(|s| s.trim().parse::<f64>().context("parsing --values"))
                .collect::<Result<_>>()?;
            let seeds: Vec<u64> = seeds
                .split(',')
                .map(|s| s.trim().parse::<u64>().context("parsing --seeds"))
                .collect::<Result<_>>()?;
            let spec = sweep::SweepSpec {
                axis,
                values,
                seeds,
                base,
            };
            let rows = sweep::run_sweep(&spec)?;
            let mut records = Vec::new();
            let mut failures = Vec::new();
            for row in &rows {
                match &row.outcome {
                    Ok(result) => records.extend(export::records_from_run(
                        axis.name(),
                        row.seed,
                        axis.name(),
                        row.value,
                        result,
                    )),
                    Err(e) => failures.push(serde_json::json!({
                        "axis_value": row.value,
                        "seed": row.seed,
                        "error": e.to_string(),
                    })),
                }
            }
            if !records.is_empty() {
                export::export_results(&records, &out, "sweep")?;
                println!("{}", report::render_compliance_table(&records));
            }
            if !failures.is_empty() {
                std::fs::create_dir_all(&out)?;
                std::fs::write(
                    out.join("errors.json"),
                    serde_json::to_vec_pretty(&failures)?,
                )?;
                eprintln!("{} point(s) failed; see errors.json", failures.len());
                return Ok(ExitCode::FAILURE);
            }
            println!("sweep written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateTheory { out } => {
            let rows = report::validate_theory();
            print!("{}", report::render_theory_table(&rows));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("theory.json"), serde_json::to_vec_pretty(&rows)?)?;
                let mut csv = String::from("check,pass,detail\n");
                for r in &rows {
                    csv.push_str(&format!("{},{},\"{}\"\n", r.check, r.pass, r.detail));
                }
                std::fs::write(dir.join("theory.csv"), csv)?;
            }
            if rows.iter().all(|r| r.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("theory validation failed");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Report { input } => {
            let mut all = Vec::new();
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            paths.sort();
            for path in &paths {
                let text = std::fs::read_to_string(path)?;
                if text.starts_with("check,") {
                    continue; // theory table, not a results file
                }
                all.extend(report::parse_records_csv(&text)?);
            }
            if all.is_empty() {
                bail!("no result CSVs found in {}", input.display());
            }
            print!("{}", report::render_compliance_table(&all));
            Ok(ExitCode::SUCCESS)
        }
        Command::DefaultConfig => {
            print!("{}", config::default_config_text());
            Ok(ExitCode::SUCCESS)
        }
    }
}
