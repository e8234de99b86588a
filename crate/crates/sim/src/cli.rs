use std::path::{Path, PathBuf};

use cdofdm_core::ofdm::OfdmModem;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::experiment::{self, RadarDemo};
use crate::output::{self, WaveformHeader};

#[derive(Debug, Parser)]
#[command(
    name = "cdofdm",
    version,
    about = "CD-OFDM joint communication and sensing simulator"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration; omitted keys keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed, overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Trials per point: radar blocks for rmse-sweep, link blocks for
    /// aepp, random draws for theorem-check. ber-sweep sizes itself from
    /// `bits_per_point`.
    #[arg(long, global = true)]
    pub trials: Option<u64>,

    /// Use the configured `symbols` per block instead of `desk_symbols`.
    #[arg(long, global = true)]
    pub full_scale: bool,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Bit error rate against SINR.
    BerSweep,
    /// Range and velocity RMSE against SINR.
    RmseSweep,
    /// Error propagation power, formula and link measurement.
    Aepp,
    /// One block: estimate, radar image, channel, diagnostics, waveform.
    RadarDemo,
    /// Zero-free spreading check.
    TheoremCheck,
}

/// Loads the config and applies command line overrides.
pub fn effective_config(args: &Args) -> Result<SimConfig> {
    let mut config = match &args.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.full_scale {
        config.full_scale = true;
    }
    if let Some(t) = args.trials {
        let as_usize = usize::try_from(t)
            .map_err(|_| SimError::Config(vec!["  --trials: too large".into()]))?;
        match args.command {
            Command::RmseSweep | Command::RadarDemo | Command::BerSweep => config.trials = as_usize,
            Command::Aepp => config.aepp_trials = as_usize,
            Command::TheoremCheck => config.theorem_draws = t,
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn run(args: &Args) -> Result<()> {
    let config = effective_config(args)?;
    match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::Config(vec![format!("  --threads: {e}")]))?
            .install(|| dispatch(args.command, &config, &args.out)),
        None => dispatch(args.command, &config, &args.out),
    }
}

fn dispatch(command: Command, config: &SimConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    std::fs::write(out.join("config.toml"), config.to_toml())
        .map_err(|e| SimError::io(out.join("config.toml"), e))?;
    match command {
        Command::BerSweep => {
            log_switch(config);
            let res = experiment::run_ber_sweep(config)?;
            output::write_csv(&out.join("ber.csv"), config, &res.rows)?;
        }
        Command::RmseSweep => {
            log_switch(config);
            let res = experiment::run_rmse_sweep(config)?;
            output::write_csv(&out.join("rmse.csv"), config, &res.rows)?;
        }
        Command::Aepp => {
            let rows = experiment::run_aepp(config)?;
            output::write_csv(&out.join("aepp.csv"), config, &rows)?;
        }
        Command::RadarDemo => {
            let demo = experiment::run_radar_demo(config)?;
            write_demo(out, config, &demo)?;
        }
        Command::TheoremCheck => {
            let rows = experiment::run_theorem_check(config)?;
            for r in &rows {
                println!(
                    "Nc={:<5} NC={:<4} M={:<3} {:<10} {:>9} vectors: {}",
                    r.subcarriers,
                    r.channels,
                    r.order,
                    r.search,
                    r.vectors_checked,
                    if r.zero_free {
                        "zero-free".to_string()
                    } else {
                        format!("zero at {}", r.witness)
                    }
                );
            }
            output::write_csv(&out.join("theorem.csv"), config, &rows)?;
        }
    }
    Ok(())
}

fn log_switch(config: &SimConfig) {
    if let Some(t) = config.dsss_switch_threshold_db {
        for &s in &config.sinr_db {
            eprintln!(
                "switch: {s} dB against threshold {t} dB -> {}",
                experiment::select_scheme(s, t).name()
            );
        }
    }
}

#[derive(Serialize)]
struct DemoRow {
    scheme: &'static str,
    sinr_db: f64,
    delay_bin: usize,
    doppler_bin: i64,
    tau_s: f64,
    doppler_hz: f64,
    range_m: f64,
    velocity_mps: f64,
    peak_to_floor_db: f64,
    true_range_m: f64,
    true_velocity_mps: f64,
    range_resolution_m: f64,
    velocity_resolution_mps: f64,
    bit_errors: u64,
}

fn write_demo(out: &Path, config: &SimConfig, demo: &RadarDemo) -> Result<()> {
    let e = &demo.estimate;
    println!(
        "{} at {} dB: delay bin {}, doppler bin {}, range {:.3} m (true {:.3}), velocity {:.3} m/s (true {:.3}), peak/floor {:.1} dB",
        demo.scheme.name(),
        demo.sinr_db,
        e.delay_bin,
        e.doppler_bin,
        e.range_m,
        demo.truth.range_m,
        e.velocity_mps,
        demo.truth.velocity_mps,
        e.peak_to_floor_db
    );
    let row = DemoRow {
        scheme: demo.scheme.name(),
        sinr_db: demo.sinr_db,
        delay_bin: e.delay_bin,
        doppler_bin: e.doppler_bin,
        tau_s: e.tau_s,
        doppler_hz: e.doppler_hz,
        range_m: e.range_m,
        velocity_mps: e.velocity_mps,
        peak_to_floor_db: e.peak_to_floor_db,
        true_range_m: demo.truth.range_m,
        true_velocity_mps: demo.truth.velocity_mps,
        range_resolution_m: demo.range_resolution,
        velocity_resolution_mps: demo.velocity_resolution,
        bit_errors: demo.bit_errors,
    };
    output::write_csv(&out.join("radar_estimate.csv"), config, &[row])?;
    output::write_image(&out.join("radar_image.csv"), config, &demo.image)?;
    output::write_channel(&out.join("channel.csv"), config, &demo.channel)?;
    output::write_diagnostics(&out.join("diagnostics.csv"), config, 0, &demo.diagnostics)?;
    let samples = OfdmModem::new(demo.params).modulate_block(&demo.reference)?;
    output::write_waveform(
        &out.join("waveform.bin"),
        &WaveformHeader::new(&demo.params),
        &samples,
    )
}
