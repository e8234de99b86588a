//! OFDM numerology, frequency-domain frame blocks and the time-domain
//! modulator used for waveform export and consistency checks.

use alloc::vec;
use alloc::vec::Vec;

use crate::fft::{Direction, FftPlan};
use crate::math::{cis, C64, TAU};
use crate::{Error, Result};

/// OFDM numerology. The subcarrier spacing is exact and every other time
/// quantity is derived from it; the guard interval is snapped to a whole
/// number of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    subcarriers: usize,
    spacing_hz: f64,
    cp_len: usize,
    symbols: usize,
}

impl OfdmParams {
    /// `guard_s` is rounded to the nearest whole sample at rate `Nc * Δf`.
    pub fn new(subcarriers: usize, spacing_hz: f64, guard_s: f64, symbols: usize) -> Result<Self> {
        if subcarriers == 0 {
            return Err(Error::Domain("subcarrier count must be positive"));
        }
        if symbols == 0 {
            return Err(Error::Domain("symbols per block must be positive"));
        }
        if !(spacing_hz.is_finite() && spacing_hz > 0.0) {
            return Err(Error::Domain("subcarrier spacing must be positive"));
        }
        if !(guard_s.is_finite() && guard_s >= 0.0) {
            return Err(Error::Domain("guard interval must be non-negative"));
        }
        let cp = libm::round(guard_s * subcarriers as f64 * spacing_hz);
        Ok(Self {
            subcarriers,
            spacing_hz,
            cp_len: cp as usize,
            symbols,
        })
    }

    /// 1024 subcarriers at 120 kHz, 1.43 µs guard (176 samples), 1024 symbols.
    pub fn table_i() -> Self {
        Self::new(1024, 120e3, 1.43e-6, 1024).expect("valid defaults")
    }

    pub fn with_symbols(mut self, symbols: usize) -> Self {
        assert!(symbols > 0);
        self.symbols = symbols;
        self
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Symbols per radar block `Ms`.
    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.spacing_hz
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Bandwidth `B = Nc Δf`, which is also the sample rate.
    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.spacing_hz
    }

    /// Useful symbol time `T = 1/Δf`.
    pub fn useful_time(&self) -> f64 {
        1.0 / self.spacing_hz
    }

    /// Guard time after snapping to whole samples.
    pub fn guard_time(&self) -> f64 {
        self.cp_len as f64 / self.bandwidth()
    }

    /// Frame time `Ts = T + Tg`.
    pub fn frame_time(&self) -> f64 {
        (self.subcarriers + self.cp_len) as f64 / self.bandwidth()
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.subcarriers + self.cp_len
    }
}

/// `Nc x Ms` block of frequency-domain symbols. Each OFDM symbol (a column)
/// is stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlock {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl FrameBlock {
    pub fn zeros(subcarriers: usize, symbols: usize) -> Self {
        Self {
            rows: subcarriers,
            cols: symbols,
            data: vec![C64::new(0.0, 0.0); subcarriers * symbols],
        }
    }

    /// Builds a block from column-major data.
    pub fn from_columns(subcarriers: usize, symbols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != subcarriers * symbols {
            return Err(Error::Shape {
                what: "frame block data",
                expected: subcarriers * symbols,
                found: data.len(),
            });
        }
        Ok(Self {
            rows: subcarriers,
            cols: symbols,
            data,
        })
    }

    pub fn from_fn(
        subcarriers: usize,
        symbols: usize,
        mut f: impl FnMut(usize, usize) -> C64,
    ) -> Self {
        let mut data = Vec::with_capacity(subcarriers * symbols);
        for i in 0..symbols {
            for m in 0..subcarriers {
                data.push(f(m, i));
            }
        }
        Self {
            rows: subcarriers,
            cols: symbols,
            data,
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.rows
    }

    pub fn symbols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, i: usize) -> C64 {
        self.data[i * self.rows + m]
    }

    pub fn set(&mut self, m: usize, i: usize, v: C64) {
        self.data[i * self.rows + m] = v;
    }

    pub fn column(&self, i: usize) -> &[C64] {
        &self.data[i * self.rows..(i + 1) * self.rows]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.rows..(i + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        crate::math::energy(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn same_shape(&self, other: &FrameBlock) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape {
                what: "frame block size",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

/// Unitary DFT matrix, row-major: `F(m, q) = exp(-j 2π mq / Nc) / sqrt(Nc)`.
pub fn dft_matrix(n: usize) -> Vec<C64> {
    assert!(n > 0);
    let scale = 1.0 / libm::sqrt(n as f64);
    let mut out = Vec::with_capacity(n * n);
    for m in 0..n {
        for q in 0..n {
            out.push(cis(-TAU * ((m * q) % n) as f64 / n as f64) * scale);
        }
    }
    out
}

/// Time-domain OFDM modulator with a cached transform plan.
#[derive(Debug, Clone)]
pub struct OfdmModem {
    params: OfdmParams,
    plan: FftPlan,
}

impl OfdmModem {
    pub fn new(params: OfdmParams) -> Self {
        Self {
            plan: FftPlan::new(params.subcarriers()),
            params,
        }
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    /// Unitary inverse DFT of one symbol, with the cyclic prefix in front.
    pub fn modulate(&self, freq: &[C64]) -> Result<Vec<C64>> {
        let nc = self.params.subcarriers();
        if freq.len() != nc {
            return Err(Error::Shape {
                what: "frequency-domain symbol",
                expected: nc,
                found: freq.len(),
            });
        }
        let cp = self.params.cp_len();
        let mut out = vec![C64::new(0.0, 0.0); cp + nc];
        out[cp..].copy_from_slice(freq);
        self.plan
            .process_unitary(&mut out[cp..], Direction::Inverse);
        // a guard longer than the body wraps around it more than once
        for k in 0..cp {
            out[cp - 1 - k] = out[cp + nc - 1 - (k % nc)];
        }
        Ok(out)
    }

    /// Drops the cyclic prefix and applies the unitary DFT.
    pub fn demodulate(&self, samples: &[C64]) -> Result<Vec<C64>> {
        let nc = self.params.subcarriers();
        let cp = self.params.cp_len();
        if samples.len() != nc + cp {
            return Err(Error::Shape {
                what: "time-domain symbol",
                expected: nc + cp,
                found: samples.len(),
            });
        }
        let mut body = samples[cp..].to_vec();
        self.plan.process_unitary(&mut body, Direction::Forward);
        Ok(body)
    }

    /// Modulates every column of a block into one contiguous sample stream.
    pub fn modulate_block(&self, block: &FrameBlock) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(block.symbols() * self.params.samples_per_symbol());
        for i in 0..block.symbols() {
            out.extend(self.modulate(block.column(i))?);
        }
        Ok(out)
    }
}
