//! Successive interference cancellation: decode the peer's communication
//! signal, rebuild it with the known channel and subtract it, leaving the
//! own radar echo plus noise (and whatever the wrong decisions leaked in).

use alloc::vec;
use alloc::vec::Vec;

use crate::constellation::QamConstellation;
use crate::math::C64;
use crate::ofdm::FrameBlock;
use crate::spreading::CodeBook;
use crate::{Error, Result};

/// Channel magnitude below which equalization is refused.
pub const DEEP_FADE: f64 = 1e-12;

/// Decisions and residual for one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SicOutput {
    pub labels: Vec<u32>,
    pub decided: Vec<C64>,
    pub residual: Vec<C64>,
}

/// Decisions for a whole block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutput {
    /// Labels of symbol `i` at `i*NC .. (i+1)*NC`.
    pub labels: Vec<u32>,
    pub decided: FrameBlock,
    pub residual: FrameBlock,
}

/// Zero-forcing SIC receiver for one code book and transmit power.
#[derive(Debug, Clone)]
pub struct SicReceiver {
    book: CodeBook,
    constellation: QamConstellation,
    amplitude: f64,
    eq: Vec<C64>,
    scratch: Vec<C64>,
    spread: Vec<C64>,
}

impl SicReceiver {
    /// `power` is the peer's per-subcarrier transmit power.
    pub fn new(book: CodeBook, constellation: QamConstellation, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::Domain("transmit power must be positive"));
        }
        let nc = book.subcarriers();
        Ok(Self {
            amplitude: book.amplitude(power),
            book,
            constellation,
            eq: vec![C64::new(0.0, 0.0); nc],
            scratch: vec![C64::new(0.0, 0.0); nc],
            spread: vec![C64::new(0.0, 0.0); nc],
        })
    }

    pub fn book(&self) -> &CodeBook {
        &self.book
    }

    pub fn constellation(&self) -> &QamConstellation {
        &self.constellation
    }

    /// Per-subcarrier amplitude applied to the spread symbols.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn check_len(&self, what: &'static str, v: &[C64]) -> Result<()> {
        let nc = self.book.subcarriers();
        if v.len() != nc {
            return Err(Error::Shape {
                what,
                expected: nc,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Per-subcarrier division by the channel. `symbol` only labels errors.
    pub fn equalize(y: &[C64], h: &[C64], symbol: usize, out: &mut [C64]) -> Result<()> {
        for (m, ((o, &yv), &hv)) in out.iter_mut().zip(y).zip(h).enumerate() {
            if !(hv.norm() >= DEEP_FADE) {
                return Err(Error::DeepFade {
                    subcarrier: m,
                    symbol,
                });
            }
            *o = yv / hv;
        }
        Ok(())
    }

    /// Equalizes, despreads, normalizes to unit power and hard-decides.
    /// Returns the soft (pre-decision) symbols alongside the decisions.
    pub fn demodulate(
        &mut self,
        y: &[C64],
        h: &[C64],
        symbol: usize,
        labels: &mut [u32],
        decided: &mut [C64],
        soft: &mut [C64],
    ) -> Result<()> {
        self.check_len("received symbol", y)?;
        self.check_len("channel column", h)?;
        Self::equalize(y, h, symbol, &mut self.eq)?;
        self.book.despread_into(&self.eq, &mut self.scratch, soft)?;
        let inv = 1.0 / self.amplitude;
        for ((s, l), d) in soft
            .iter_mut()
            .zip(labels.iter_mut())
            .zip(decided.iter_mut())
        {
            *s *= inv;
            let dec = self.constellation.hard_decide(*s)?;
            *l = dec.label;
            *d = dec.point;
        }
        Ok(())
    }

    /// `h ⊙ (g C d)`: the communication signal as it arrives.
    pub fn reconstruct(&mut self, h: &[C64], symbols: &[C64], out: &mut [C64]) -> Result<()> {
        self.check_len("channel column", h)?;
        self.book.spread_into(symbols, out)?;
        for (o, &hv) in out.iter_mut().zip(h) {
            *o *= hv * self.amplitude;
        }
        Ok(())
    }

    /// `y - h ⊙ (g C d̂)`.
    pub fn cancel(
        &mut self,
        y: &[C64],
        h: &[C64],
        decided: &[C64],
        residual: &mut [C64],
    ) -> Result<()> {
        self.check_len("received symbol", y)?;
        let mut rebuilt = core::mem::take(&mut self.spread);
        let r = self.reconstruct(h, decided, &mut rebuilt);
        if r.is_ok() {
            for ((o, &yv), &c) in residual.iter_mut().zip(y).zip(&rebuilt) {
                *o = yv - c;
            }
        }
        self.spread = rebuilt;
        r
    }

    /// Full pipeline for one symbol.
    pub fn process(&mut self, y: &[C64], h: &[C64], symbol: usize) -> Result<SicOutput> {
        let nch = self.book.channels();
        let mut out = SicOutput {
            labels: vec![0; nch],
            decided: vec![C64::new(0.0, 0.0); nch],
            residual: vec![C64::new(0.0, 0.0); y.len()],
        };
        let mut soft = vec![C64::new(0.0, 0.0); nch];
        self.demodulate(y, h, symbol, &mut out.labels, &mut out.decided, &mut soft)?;
        self.cancel(y, h, &out.decided, &mut out.residual)?;
        Ok(out)
    }

    /// Runs [`process`](Self::process) over every symbol of a block and
    /// stacks the residuals column by column.
    pub fn run_block(
        &mut self,
        received: &FrameBlock,
        channel: &FrameBlock,
    ) -> Result<BlockOutput> {
        received.same_shape(channel)?;
        let ms = received.symbols();
        let nch = self.book.channels();
        let mut labels = vec![0u32; nch * ms];
        let mut decided = FrameBlock::zeros(nch, ms);
        let mut residual = FrameBlock::zeros(received.subcarriers(), ms);
        let mut soft = vec![C64::new(0.0, 0.0); nch];
        for i in 0..ms {
            let (y, h) = (received.column(i), channel.column(i));
            self.demodulate(
                y,
                h,
                i,
                &mut labels[i * nch..(i + 1) * nch],
                decided.column_mut(i),
                &mut soft,
            )?;
            let d = decided.column(i).to_vec();
            self.cancel(y, h, &d, residual.column_mut(i))?;
        }
        Ok(BlockOutput {
            labels,
            decided,
            residual,
        })
    }
}
