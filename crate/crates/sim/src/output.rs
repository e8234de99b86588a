//! CSV tables and binary dumps.
//!
//! Every CSV starts with one `#` comment line naming the tool version, the
//! SHA-256 of the effective configuration and the seed, followed by a
//! regular header row.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use cdofdm_core::channel::JcsChannelRealization;
use cdofdm_core::link::SymbolDiagnostics;
use cdofdm_core::ofdm::OfdmParams;
use cdofdm_core::radar::RadarImage;
use cdofdm_core::C64;
use serde::Serialize;

use crate::config::SimConfig;
use crate::error::{Result, SimError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Magic bytes opening a waveform dump.
pub const WAVEFORM_MAGIC: [u8; 8] = *b"CDOFDMWF";

pub fn header_line(config: &SimConfig) -> String {
    format!(
        "# cdofdm {} config_sha256={} seed={} block_symbols={} trials={} bits_per_point={}",
        VERSION,
        config.hash(),
        config.seed,
        config.block_symbols(),
        config.trials,
        config.bits_per_point
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SimError::io(path, e))
}

/// Writes `rows` as CSV with the run header.
pub fn write_csv<T: Serialize>(path: &Path, config: &SimConfig, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header_line(config)).map_err(|e| SimError::io(path, e))?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush().map_err(|e| SimError::io(path, e))?;
    Ok(())
}

#[derive(Serialize)]
struct ImageCell {
    delay_bin: usize,
    doppler_bin: usize,
    magnitude: f64,
}

/// Radar image as `(delay_bin, doppler_bin, magnitude)`, delay-major.
pub fn write_image(path: &Path, config: &SimConfig, image: &RadarImage) -> Result<()> {
    let mut rows = Vec::with_capacity(image.magnitudes().len());
    for q in 0..image.delay_bins() {
        for k in 0..image.doppler_bins() {
            rows.push(ImageCell {
                delay_bin: q,
                doppler_bin: k,
                magnitude: image.get(q, k),
            });
        }
    }
    write_csv(path, config, &rows)
}

#[derive(Serialize)]
struct ChannelCell {
    link: &'static str,
    subcarrier: usize,
    symbol: usize,
    re: f64,
    im: f64,
}

/// Communication and radar channel responses, one line per entry.
pub fn write_channel(
    path: &Path,
    config: &SimConfig,
    channel: &JcsChannelRealization,
) -> Result<()> {
    let (nc, ms) = (channel.subcarriers(), channel.symbols());
    let mut rows = Vec::with_capacity(2 * nc * ms);
    for (link, block) in [
        ("comm", channel.comm_block()),
        ("radar", channel.radar_block()),
    ] {
        for i in 0..ms {
            for m in 0..nc {
                let v = block.get(m, i);
                rows.push(ChannelCell {
                    link,
                    subcarrier: m,
                    symbol: i,
                    re: v.re,
                    im: v.im,
                });
            }
        }
    }
    write_csv(path, config, &rows)
}

#[derive(Serialize)]
struct DiagnosticsRow {
    trial: u32,
    symbol: usize,
    bit_errors: u32,
    residual_energy: f64,
    error_prop_energy: f64,
}

pub fn write_diagnostics(
    path: &Path,
    config: &SimConfig,
    trial: u32,
    diagnostics: &[SymbolDiagnostics],
) -> Result<()> {
    let rows: Vec<DiagnosticsRow> = diagnostics
        .iter()
        .map(|d| DiagnosticsRow {
            trial,
            symbol: d.symbol,
            bit_errors: d.bit_errors,
            residual_energy: d.residual_energy,
            error_prop_energy: d.error_prop_energy,
        })
        .collect();
    write_csv(path, config, &rows)
}

/// Header of a waveform dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformHeader {
    pub subcarriers: u32,
    pub cp_len: u32,
    pub symbols: u32,
    pub sample_rate_hz: f64,
}

impl WaveformHeader {
    pub fn new(params: &OfdmParams) -> Self {
        Self {
            subcarriers: params.subcarriers() as u32,
            cp_len: params.cp_len() as u32,
            symbols: params.symbols() as u32,
            sample_rate_hz: params.bandwidth(),
        }
    }

    pub fn samples(&self) -> usize {
        (self.subcarriers as usize + self.cp_len as usize) * self.symbols as usize
    }
}

/// Time-domain waveform dump, all little-endian:
///
/// ```text
/// magic        8 bytes  "CDOFDMWF"
/// subcarriers  u32
/// cp_len       u32
/// symbols      u32
/// reserved     u32      0
/// sample_rate  f64      Hz
/// samples      (cp_len + subcarriers) * symbols pairs of f64 (re, im),
///              one OFDM symbol after the other, cyclic prefix first
/// ```
pub fn write_waveform(path: &Path, header: &WaveformHeader, samples: &[C64]) -> Result<()> {
    if samples.len() != header.samples() {
        return Err(cdofdm_core::Error::Shape {
            what: "waveform samples",
            expected: header.samples(),
            found: samples.len(),
        }
        .into());
    }
    let mut w = create(path)?;
    let mut buf = Vec::with_capacity(32 + 16 * samples.len());
    buf.extend_from_slice(&WAVEFORM_MAGIC);
    for v in [header.subcarriers, header.cp_len, header.symbols, 0] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&header.sample_rate_hz.to_le_bytes());
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    w.write_all(&buf)
        .and_then(|_| w.flush())
        .map_err(|e| SimError::io(path, e))
}

pub fn read_waveform(path: &Path) -> Result<(WaveformHeader, Vec<C64>)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| SimError::io(path, e))?;
    let bad = |msg: &str| {
        SimError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()),
        )
    };
    if bytes.len() < 32 || bytes[..8] != WAVEFORM_MAGIC {
        return Err(bad("not a waveform dump"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = WaveformHeader {
        subcarriers: u32_at(8),
        cp_len: u32_at(12),
        symbols: u32_at(16),
        sample_rate_hz: f64_at(24),
    };
    if bytes.len() != 32 + 16 * header.samples() {
        return Err(bad("waveform length does not match its header"));
    }
    let samples = (0..header.samples())
        .map(|k| C64::new(f64_at(32 + 16 * k), f64_at(40 + 16 * k)))
        .collect();
    Ok((header, samples))
}
