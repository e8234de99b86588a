//! Monte Carlo sweeps over SINR.
//!
//! Every trial draws from its own counter-based stream keyed by
//! `(seed, point, trial)`, and per-point results are reduced in trial order,
//! so the output does not depend on how many worker threads ran.

use cdofdm_core::analysis::{aepp_curves, AeppPoint};
use cdofdm_core::channel::{JcsChannelRealization, Truth};
use cdofdm_core::constellation::QamConstellation;
use cdofdm_core::link::{
    simulate_block, trial_rng, BlockOptions, BlockResult, LinkSetup, SymbolDiagnostics,
};
use cdofdm_core::ofdm::{FrameBlock, OfdmParams};
use cdofdm_core::radar::{self, RadarEstimate, RadarImage};
use cdofdm_core::spreading::{check_zero_free, CodeBook, Selection, ZeroSearch};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{SchemeName, SimConfig};
use crate::error::{is_guard, Result, SimError};

/// One line of a BER or RMSE table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scheme: &'static str,
    /// Peer code channels (`Nc` for the OFDM schemes).
    pub nc: usize,
    pub metric: &'static str,
    pub sinr_db: f64,
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    pub flag: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
}

impl ExperimentResult {
    pub fn find(&self, scheme: &str, metric: &str, sinr_db: f64) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.metric == metric && r.sinr_db == sinr_db)
    }
}

/// Picks the waveform for an estimated SINR. Below the threshold the
/// despreading gain is worth its cost; at or above it plain OFDM is used.
pub fn select_scheme(estimated_sinr_db: f64, threshold_db: f64) -> SchemeName {
    if estimated_sinr_db < threshold_db {
        SchemeName::CdOfdm
    } else {
        SchemeName::Ofdm
    }
}

struct PointRun<T> {
    done: Vec<T>,
    erased: usize,
}

fn run_point<T, F>(trials: usize, sinr_db: f64, budget: f64, f: F) -> Result<PointRun<T>>
where
    T: Send,
    F: Fn(u32) -> cdofdm_core::Result<T> + Sync,
{
    let results: Vec<cdofdm_core::Result<T>> = (0..trials as u32).into_par_iter().map(&f).collect();
    let mut done = Vec::with_capacity(trials);
    let mut erased = 0;
    let mut first = None;
    for r in results {
        match r {
            Ok(v) => done.push(v),
            Err(e) if is_guard(&e) => {
                erased += 1;
                first.get_or_insert(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if erased as f64 > budget * trials as f64 {
        return Err(SimError::Erasures {
            sinr_db,
            erased,
            trials,
            budget,
            first: first.expect("at least one erasure"),
        });
    }
    Ok(PointRun { done, erased })
}

fn erasure_flag(erased: usize) -> String {
    if erased == 0 {
        String::new()
    } else {
        format!("erased={erased}")
    }
}

/// Bit error rate of the peer link for `scheme` and every baseline.
pub fn run_ber_sweep(config: &SimConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut out = ExperimentResult::default();
    for scheme in config.schemes() {
        let setup = config.link(scheme)?;
        out.rows.extend(ber_curve(config, &setup, scheme)?);
    }
    Ok(out)
}

/// BER of one setup over the configured SINR grid.
pub fn ber_curve(config: &SimConfig, setup: &LinkSetup, scheme: SchemeName) -> Result<Vec<Row>> {
    let per_block = (setup.bits_per_symbol() * setup.params.symbols()) as u64;
    let blocks = config.bits_per_point.div_ceil(per_block) as usize;
    let mut rows = Vec::with_capacity(config.sinr_db.len());
    for (p, &sinr) in config.sinr_db.iter().enumerate() {
        let run = run_point(blocks, sinr, config.erasure_budget, |t| {
            simulate_block(
                setup,
                sinr,
                &BlockOptions::BER,
                &mut trial_rng(config.seed, p as u32, t),
            )
        })?;
        let bits: u64 = run.done.iter().map(|r| r.bits).sum();
        let errors: u64 = run.done.iter().map(|r| r.bit_errors).sum();
        let ber = errors as f64 / bits as f64;
        let stderr = (ber * (1.0 - ber) / bits as f64).sqrt();
        let mut flag = erasure_flag(run.erased);
        if errors == 0 || stderr > config.ber_rel_precision * ber {
            if !flag.is_empty() {
                flag.push(';');
            }
            flag.push_str("under-sampled");
        }
        rows.push(Row {
            scheme: scheme.name(),
            nc: setup.peer_book.channels(),
            metric: "ber",
            sinr_db: sinr,
            value: ber,
            stderr,
            trials: run.done.len() as u64,
            seed: config.seed,
            flag,
        });
    }
    Ok(rows)
}

/// Range and velocity RMSE against the true geometry.
pub fn run_rmse_sweep(config: &SimConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut out = ExperimentResult::default();
    for scheme in config.schemes() {
        let setup = config.link(scheme)?;
        out.rows.extend(rmse_curve(config, &setup, scheme)?);
    }
    Ok(out)
}

/// Root mean square of `errors` and its delta-method standard error.
fn rmse(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mse = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (n - 1.0).max(1.0);
    let r = mse.sqrt();
    let se = if r > 0.0 {
        (var / n).sqrt() / (2.0 * r)
    } else {
        0.0
    };
    (r, se)
}

pub fn rmse_curve(config: &SimConfig, setup: &LinkSetup, scheme: SchemeName) -> Result<Vec<Row>> {
    let dr = radar::range_resolution(&setup.params, setup.geometry.c0);
    let dv =
        radar::velocity_resolution(&setup.params, setup.geometry.carrier_hz, setup.geometry.c0);
    let mut rows = Vec::with_capacity(3 * config.sinr_db.len());
    for (p, &sinr) in config.sinr_db.iter().enumerate() {
        let run = run_point(config.trials, sinr, config.erasure_budget, |t| {
            let r = simulate_block(
                setup,
                sinr,
                &BlockOptions::RADAR,
                &mut trial_rng(config.seed, p as u32, t),
            )?;
            Ok((r.radar.expect("radar requested"), r.truth))
        })?;
        let range_err: Vec<f64> = run
            .done
            .iter()
            .map(|(e, t)| e.range_m - t.range_m)
            .collect();
        let vel_err: Vec<f64> = run
            .done
            .iter()
            .map(|(e, t)| e.velocity_mps - t.velocity_mps)
            .collect();
        let gross = range_err
            .iter()
            .zip(&vel_err)
            .filter(|(r, v)| r.abs() > dr || v.abs() > dv)
            .count();
        let n = run.done.len() as u64;
        let (rr, rs) = rmse(&range_err);
        let (vr, vs) = rmse(&vel_err);
        let g = gross as f64 / n as f64;
        let flag = erasure_flag(run.erased);
        for (metric, value, stderr) in [
            ("range_rmse_m", rr, rs),
            ("velocity_rmse_mps", vr, vs),
            ("gross_error_rate", g, (g * (1.0 - g) / n as f64).sqrt()),
        ] {
            rows.push(Row {
                scheme: scheme.name(),
                nc: setup.peer_book.channels(),
                metric,
                sinr_db: sinr,
                value,
                stderr,
                trials: n,
                seed: config.seed,
                flag: flag.clone(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeppRow {
    pub scheme: &'static str,
    #[serde(rename = "M")]
    pub order: usize,
    #[serde(rename = "Nc")]
    pub subcarriers: usize,
    #[serde(rename = "NC")]
    pub channels: usize,
    pub sinr_db: f64,
    pub aepp_formula: f64,
    pub aepp_montecarlo: f64,
    pub rel_err: f64,
}

/// Closed-form error propagation power next to the one measured in the
/// link: mean `|d - d̂|²` per decoded peer symbol.
pub fn run_aepp(config: &SimConfig) -> Result<Vec<AeppRow>> {
    config.validate()?;
    let nc = config.subcarriers;
    let formula = aepp_curves(
        &config.aepp_orders,
        &config.sinr_db,
        nc,
        &config.aepp_channels,
    )?;
    let mut rows = Vec::with_capacity(formula.len());
    let mut setups: Vec<((usize, usize), LinkSetup)> = Vec::new();
    for AeppPoint {
        order,
        subcarriers,
        channels,
        sinr_db,
        aepp,
    } in formula
    {
        let scheme = if channels == nc {
            SchemeName::Ofdm
        } else {
            SchemeName::CdOfdm
        };
        let key = (order, channels);
        if !setups.iter().any(|(k, _)| *k == key) {
            setups.push((
                key,
                config.link_with_channels(scheme, channels, channels, order)?,
            ));
        }
        let setup = &setups
            .iter()
            .find(|(k, _)| *k == key)
            .expect("inserted above")
            .1;
        let p = config
            .sinr_db
            .iter()
            .position(|s| *s == sinr_db)
            .expect("grid point") as u32;
        let run = run_point(config.aepp_trials, sinr_db, config.erasure_budget, |t| {
            simulate_block(
                setup,
                sinr_db,
                &BlockOptions::BER,
                &mut trial_rng(config.seed, p, t),
            )
        })?;
        let power: f64 = run.done.iter().map(|r| r.error_power).sum();
        let symbols: u64 = run.done.iter().map(|r| r.symbols).sum();
        let measured = power / symbols as f64;
        rows.push(AeppRow {
            scheme: scheme.name(),
            order,
            subcarriers,
            channels,
            sinr_db,
            aepp_formula: aepp,
            aepp_montecarlo: measured,
            rel_err: (measured - aepp).abs() / aepp,
        });
    }
    Ok(rows)
}

/// One high-SINR block with everything kept for inspection.
#[derive(Debug, Clone)]
pub struct RadarDemo {
    pub scheme: SchemeName,
    pub sinr_db: f64,
    pub params: OfdmParams,
    pub estimate: RadarEstimate,
    pub truth: Truth,
    pub range_resolution: f64,
    pub velocity_resolution: f64,
    pub image: RadarImage,
    pub reference: FrameBlock,
    pub residual: FrameBlock,
    pub channel: JcsChannelRealization,
    pub diagnostics: Vec<SymbolDiagnostics>,
    pub bit_errors: u64,
}

pub fn run_radar_demo(config: &SimConfig) -> Result<RadarDemo> {
    config.validate()?;
    let setup = config.link(config.scheme)?;
    let sinr = config.demo_sinr_db;
    let rng = trial_rng(config.seed, 0, 0);
    // the block realizes its channel first, so a copy of the stream
    // reproduces the realization for export
    let channel = JcsChannelRealization::realize(
        &setup.geometry,
        &setup.beams,
        &setup.params,
        &mut rng.clone(),
    )?;
    let options = BlockOptions {
        radar: true,
        noise: true,
        genie: false,
        diagnostics: true,
        keep_blocks: true,
    };
    let BlockResult {
        bit_errors,
        radar: estimate,
        truth,
        diagnostics,
        blocks,
        ..
    } = simulate_block(&setup, sinr, &options, &mut rng.clone())?;
    let blocks = blocks.expect("blocks kept");
    let (_, image) = radar::estimate(
        &blocks.residual,
        &blocks.tx_reference,
        &setup.params,
        setup.geometry.carrier_hz,
        setup.geometry.c0,
        setup.peak_rule,
    )?;
    Ok(RadarDemo {
        scheme: config.scheme,
        sinr_db: sinr,
        params: setup.params,
        estimate: estimate.expect("radar requested"),
        truth,
        range_resolution: radar::range_resolution(&setup.params, setup.geometry.c0),
        velocity_resolution: radar::velocity_resolution(
            &setup.params,
            setup.geometry.carrier_hz,
            setup.geometry.c0,
        ),
        image,
        reference: blocks.tx_reference,
        residual: blocks.residual,
        channel,
        diagnostics,
        bit_errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    #[serde(rename = "Nc")]
    pub subcarriers: usize,
    #[serde(rename = "NC")]
    pub channels: usize,
    #[serde(rename = "M")]
    pub order: usize,
    pub search: &'static str,
    pub vectors_checked: u64,
    pub zero_free: bool,
    pub min_abs_entry: f64,
    /// `subcarrier:label label ...` of the first zero found.
    pub witness: String,
}

/// Zero-free spreading check: every channel count at 8 subcarriers with
/// 4-QAM exhaustively, then random draws at the configured size for each
/// QAM order.
pub fn run_theorem_check(config: &SimConfig) -> Result<Vec<TheoremRow>> {
    config.validate()?;
    let mut jobs: Vec<(usize, usize, usize, ZeroSearch)> =
        (1..=8).map(|n| (8, n, 4, ZeroSearch::Exhaustive)).collect();
    for order in [4, 16, 64] {
        jobs.push((
            config.subcarriers,
            config.theorem_channels,
            order,
            ZeroSearch::Randomized {
                trials: config.theorem_draws,
            },
        ));
    }
    jobs.into_par_iter()
        .enumerate()
        .map(|(j, (nc, channels, order, search))| {
            let book = CodeBook::hadamard(nc, channels, &Selection::FIRST)?;
            let c = QamConstellation::new(order)?;
            let report =
                check_zero_free(&book, &c, search, &mut trial_rng(config.seed, j as u32, 0))?;
            let witness = report
                .witness
                .as_ref()
                .map(|w| {
                    let labels: Vec<String> = w.labels.iter().map(|l| l.to_string()).collect();
                    format!("{}:{}", w.subcarrier, labels.join(" "))
                })
                .unwrap_or_default();
            Ok(TheoremRow {
                subcarriers: nc,
                channels,
                order,
                search: match search {
                    ZeroSearch::Exhaustive => "exhaustive",
                    ZeroSearch::Randomized { .. } => "randomized",
                },
                vectors_checked: report.vectors_checked,
                zero_free: report.zero_free(),
                min_abs_entry: report.min_abs_entry,
                witness,
            })
        })
        .collect()
}
