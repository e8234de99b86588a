//! Range/Doppler estimation from the post-cancellation residual.
//!
//! The residual block is divided by the known transmit block, which leaves a
//! 2-D complex sinusoid whose frequencies are the echo delay (along
//! subcarriers) and Doppler (along symbols). An inverse DFT down each column
//! and a DFT along each row focus it into a single peak.

use alloc::vec::Vec;

use crate::fft::{Direction, FftPlan};
use crate::math::C64;
use crate::ofdm::{FrameBlock, OfdmParams};
use crate::{Error, Result};

/// Transmit entries smaller than this are treated as zero.
pub const ZERO_REFERENCE: f64 = 1e-12;

/// Entrywise `residual / reference`.
pub fn reference_divide(residual: &FrameBlock, reference: &FrameBlock) -> Result<FrameBlock> {
    residual.same_shape(reference)?;
    let nc = residual.subcarriers();
    let mut out = residual.clone();
    for (idx, (o, r)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(reference.as_slice())
        .enumerate()
    {
        if !(r.norm() >= ZERO_REFERENCE) {
            return Err(Error::ZeroReference {
                subcarrier: idx % nc,
                symbol: idx / nc,
            });
        }
        *o /= r;
    }
    Ok(out)
}

/// Magnitude of the delay/Doppler periodogram.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarImage {
    delay_bins: usize,
    doppler_bins: usize,
    // delay-major within each Doppler column, like FrameBlock
    magnitude: Vec<f64>,
}

/// How the peak bin is turned into an index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakRule {
    /// Bin at or below the true off-grid position: when the larger neighbour
    /// of the maximum sits on its left, the maximum is the upper of the two
    /// bins straddling the target and the lower one is reported.
    #[default]
    Floor,
    /// Plain maximum.
    Nearest,
}

impl RadarImage {
    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    pub fn get(&self, delay: usize, doppler: usize) -> f64 {
        self.magnitude[doppler * self.delay_bins + delay]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitude
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.magnitude.iter().map(|v| v * v).sum()
    }

    /// Global maximum; ties go to the smaller delay bin, then the smaller
    /// Doppler bin.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_val = f64::NEG_INFINITY;
        for q in 0..self.delay_bins {
            for k in 0..self.doppler_bins {
                let v = self.get(q, k);
                if v > best_val {
                    best_val = v;
                    best = (q, k);
                }
            }
        }
        best
    }

    pub fn peak_search(&self, rule: PeakRule) -> (usize, usize) {
        let (q, k) = self.argmax();
        match rule {
            PeakRule::Nearest => (q, k),
            PeakRule::Floor => {
                let peak = self.get(q, k);
                let nq = self.delay_bins;
                let nk = self.doppler_bins;
                let q = floor_step(q, nq, peak, |j| self.get(j, k));
                let k = floor_step(k, nk, peak, |j| self.get(q, j));
                (q, k)
            }
        }
    }

    /// Peak power over the mean power of every other bin, in dB.
    pub fn peak_to_floor_db(&self) -> f64 {
        let (q, k) = self.argmax();
        let peak = self.get(q, k);
        let n = self.magnitude.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let rest = (self.energy() - peak * peak) / (n - 1) as f64;
        crate::math::linear_to_db(peak * peak / rest)
    }
}

fn floor_step(idx: usize, len: usize, peak: f64, value: impl Fn(usize) -> f64) -> usize {
    if len < 3 {
        return idx;
    }
    let left = value((idx + len - 1) % len);
    let right = value((idx + 1) % len);
    let tiny = 1e-9 * peak;
    if left < tiny && right < tiny {
        return idx;
    }
    if left > right {
        (idx + len - 1) % len
    } else {
        idx
    }
}

/// Reusable transform plans for one block size.
#[derive(Debug, Clone)]
pub struct Periodogram {
    delay: FftPlan,
    doppler: FftPlan,
}

impl Periodogram {
    pub fn new(subcarriers: usize, symbols: usize) -> Self {
        Self {
            delay: FftPlan::new(subcarriers),
            doppler: FftPlan::new(symbols),
        }
    }

    /// Unitary inverse DFT down every column, then unitary DFT along every
    /// row. Consumes the block to reuse its storage.
    pub fn transform(&self, mut div: FrameBlock) -> Result<FrameBlock> {
        let nc = div.subcarriers();
        let ms = div.symbols();
        if nc != self.delay.len() || ms != self.doppler.len() {
            return Err(Error::Shape {
                what: "periodogram block",
                expected: self.delay.len() * self.doppler.len(),
                found: nc * ms,
            });
        }
        for i in 0..ms {
            self.delay
                .process_unitary(div.column_mut(i), Direction::Inverse);
        }
        let mut row = alloc::vec![C64::new(0.0, 0.0); ms];
        for q in 0..nc {
            for (i, r) in row.iter_mut().enumerate() {
                *r = div.get(q, i);
            }
            self.doppler.process_unitary(&mut row, Direction::Forward);
            for (i, r) in row.iter().enumerate() {
                div.set(q, i, *r);
            }
        }
        Ok(div)
    }

    pub fn image(&self, div: FrameBlock) -> Result<RadarImage> {
        let t = self.transform(div)?;
        let (nc, ms) = (t.subcarriers(), t.symbols());
        Ok(RadarImage {
            delay_bins: nc,
            doppler_bins: ms,
            magnitude: t.as_slice().iter().map(|v| v.norm()).collect(),
        })
    }
}

pub fn periodogram(div: FrameBlock) -> Result<RadarImage> {
    Periodogram::new(div.subcarriers(), div.symbols()).image(div)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarEstimate {
    pub delay_bin: usize,
    /// Doppler bin with indices above `Ms/2` wrapped to negative values.
    pub doppler_bin: i64,
    pub tau_s: f64,
    pub doppler_hz: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
    pub peak_to_floor_db: f64,
}

/// Converts bin indices to delay, Doppler, range and velocity.
pub fn to_physical(
    delay_bin: usize,
    doppler_bin: usize,
    params: &OfdmParams,
    carrier_hz: f64,
    c0: f64,
) -> RadarEstimate {
    let ms = params.symbols();
    let signed = if doppler_bin > ms / 2 {
        doppler_bin as i64 - ms as i64
    } else {
        doppler_bin as i64
    };
    let tau = delay_bin as f64 / params.bandwidth();
    let fd = signed as f64 / (params.frame_time() * ms as f64);
    RadarEstimate {
        delay_bin,
        doppler_bin: signed,
        tau_s: tau,
        doppler_hz: fd,
        range_m: tau * c0 / 2.0,
        velocity_mps: fd * c0 / (2.0 * carrier_hz),
        peak_to_floor_db: f64::NAN,
    }
}

/// Range bin width `c0 / (2B)`.
pub fn range_resolution(params: &OfdmParams, c0: f64) -> f64 {
    c0 / (2.0 * params.bandwidth())
}

/// Velocity bin width `c0 / (2 fc Ts Ms)`.
pub fn velocity_resolution(params: &OfdmParams, carrier_hz: f64, c0: f64) -> f64 {
    c0 / (2.0 * carrier_hz * params.frame_time() * params.symbols() as f64)
}

/// Reference division, periodogram, peak search and conversion in one go.
pub fn estimate(
    residual: &FrameBlock,
    reference: &FrameBlock,
    params: &OfdmParams,
    carrier_hz: f64,
    c0: f64,
    rule: PeakRule,
) -> Result<(RadarEstimate, RadarImage)> {
    let div = reference_divide(residual, reference)?;
    let image = periodogram(div)?;
    let (q, k) = image.peak_search(rule);
    let mut est = to_physical(q, k, params, carrier_hz, c0);
    est.peak_to_floor_db = image.peak_to_floor_db();
    Ok((est, image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cis, complex_gaussian, TAU};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phasor_block(nc: usize, ms: usize, delay: f64, doppler: f64) -> FrameBlock {
        FrameBlock::from_fn(nc, ms, |m, i| {
            cis(-TAU * m as f64 * delay / nc as f64) * cis(TAU * i as f64 * doppler / ms as f64)
        })
    }

    fn table_i_3e8() -> (OfdmParams, f64, f64) {
        (OfdmParams::table_i(), 24e9, 3e8)
    }

    #[test]
    fn divide_by_itself_is_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = FrameBlock::from_fn(8, 4, |_, _| complex_gaussian(&mut rng, 1.0));
        let d = reference_divide(&b, &b).unwrap();
        assert!(d
            .as_slice()
            .iter()
            .all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn divide_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = FrameBlock::from_fn(16, 8, |_, _| complex_gaussian(&mut rng, 1.0));
        let b = FrameBlock::from_fn(16, 8, |_, _| complex_gaussian(&mut rng, 1.0));
        let d = reference_divide(&a, &b).unwrap();
        for i in 0..8 {
            for m in 0..16 {
                let (x, y) = (a.get(m, i), b.get(m, i));
                let den = y.re * y.re + y.im * y.im;
                let want = C64::new(
                    (x.re * y.re + x.im * y.im) / den,
                    (x.im * y.re - x.re * y.im) / den,
                );
                assert!((d.get(m, i) - want).norm() < 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn zero_reference_names_the_cell() {
        let a = FrameBlock::from_fn(4, 3, |_, _| C64::new(1.0, 0.0));
        let mut b = a.clone();
        b.set(2, 1, C64::new(0.0, 1e-13));
        assert_eq!(
            reference_divide(&a, &b).unwrap_err(),
            Error::ZeroReference {
                subcarrier: 2,
                symbol: 1
            }
        );
    }

    #[test]
    fn noise_free_quotient_phase() {
        let (p, _, _) = table_i_3e8();
        let p = p.with_symbols(8);
        let tau = 0.6667e-6;
        let fd = 2400.0;
        let tx = FrameBlock::from_fn(1024, 8, |m, i| C64::new(1.0 + (m % 3) as f64, i as f64));
        let rx = FrameBlock::from_fn(1024, 8, |m, i| {
            tx.get(m, i)
                * cis(-TAU * m as f64 * p.subcarrier_spacing() * tau)
                * cis(TAU * i as f64 * p.frame_time() * fd)
        });
        let d = reference_divide(&rx, &tx).unwrap();
        for (m, i) in [(0, 0), (100, 3), (1023, 7)] {
            let want = cis(-TAU * m as f64 * p.subcarrier_spacing() * tau
                + TAU * i as f64 * p.frame_time() * fd);
            assert!((d.get(m, i) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn on_grid_peak() {
        let (nc, ms) = (1024, 1024);
        let img = periodogram(phasor_block(nc, ms, 81.0, 24.0)).unwrap();
        assert_eq!(img.argmax(), (81, 24));
        assert!((img.get(81, 24) - ((nc * ms) as f64).sqrt()).abs() < 1e-6);
        assert_eq!(img.peak_search(PeakRule::Floor), (81, 24));
        // every other bin is empty
        let rest = img.energy() - img.get(81, 24).powi(2);
        assert!(rest < 1e-12 * img.energy());
    }

    #[test]
    fn all_ones_peaks_at_origin() {
        let img = periodogram(FrameBlock::from_fn(64, 32, |_, _| C64::new(1.0, 0.0))).unwrap();
        assert_eq!(img.argmax(), (0, 0));
        assert_eq!(img.peak_search(PeakRule::Floor), (0, 0));
    }

    #[test]
    fn matches_direct_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (nc, ms) = (8, 6);
        let div = FrameBlock::from_fn(nc, ms, |_, _| complex_gaussian(&mut rng, 1.0));
        let img = periodogram(div.clone()).unwrap();
        for q in 0..nc {
            for k in 0..ms {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..nc {
                    for i in 0..ms {
                        acc += div.get(m, i)
                            * cis(TAU * (m * q) as f64 / nc as f64)
                            * cis(-TAU * (i * k) as f64 / ms as f64);
                    }
                }
                let want = acc.norm() / ((nc * ms) as f64).sqrt();
                assert!((img.get(q, k) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn floor_rule_on_table_i_truth() {
        let (p, fc, c0) = table_i_3e8();
        let tau = 200.0 / c0;
        let fd = 2.0 * 15.0 / c0 * fc;
        let x_delay = tau * p.bandwidth();
        let x_dopp = fd * p.frame_time() * p.symbols() as f64;
        assert_eq!(x_delay.floor() as usize, 81);
        assert_eq!(x_dopp.floor() as usize, 24);
        let img = periodogram(phasor_block(1024, 1024, x_delay, x_dopp)).unwrap();
        assert_eq!(img.argmax(), (82, 24));
        assert_eq!(img.peak_search(PeakRule::Nearest), (82, 24));
        assert_eq!(img.peak_search(PeakRule::Floor), (81, 24));
    }

    #[test]
    fn floor_rule_keeps_bin_when_target_is_above() {
        let img = periodogram(phasor_block(64, 32, 10.3, 5.2)).unwrap();
        assert_eq!(img.peak_search(PeakRule::Floor), (10, 5));
        let img = periodogram(phasor_block(64, 32, 10.7, 5.8)).unwrap();
        assert_eq!(img.argmax(), (11, 6));
        assert_eq!(img.peak_search(PeakRule::Floor), (10, 5));
    }

    #[test]
    fn physical_conversion() {
        let (p, fc, c0) = table_i_3e8();
        let e = to_physical(81, 24, &p, fc, c0);
        assert!((e.range_m - 81.0 / 122.88e6 * 3e8 / 2.0).abs() < 1e-12);
        assert!((e.range_m - 98.88).abs() < 0.005);
        assert!((e.velocity_mps - 14.99).abs() < 0.011);
        assert!((range_resolution(&p, c0) - 1.2207).abs() < 1e-4);
        assert!((velocity_resolution(&p, fc, c0) - 0.6254).abs() < 1e-3);
        let z = to_physical(0, 0, &p, fc, c0);
        assert_eq!((z.range_m, z.velocity_mps), (0.0, 0.0));
        let neg = to_physical(0, 1000, &p, fc, c0);
        assert_eq!(neg.doppler_bin, -24);
        assert!(neg.velocity_mps < 0.0);
    }

    #[test]
    fn noise_only_has_no_outlier() {
        // max of n unit-mean exponentials exceeds ln(n) + t with probability
        // about e^{-t}; t = 12 gives ~6e-6 over all 100 images
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (nc, ms) = (64, 32);
        let plan = Periodogram::new(nc, ms);
        let bound = ((nc * ms) as f64).ln() + 12.0;
        for _ in 0..100 {
            let div = FrameBlock::from_fn(nc, ms, |_, _| complex_gaussian(&mut rng, 1.0));
            let img = plan.image(div).unwrap();
            let mean = img.energy() / (nc * ms) as f64;
            let max = img.magnitudes().iter().fold(0.0f64, |a, &v| a.max(v * v));
            assert!(max / mean < bound);
        }
    }

    #[test]
    fn injected_energy_raises_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (nc, ms) = (64, 32);
        let clean = phasor_block(nc, ms, 7.0, 3.0);
        let noise = FrameBlock::from_fn(nc, ms, |_, _| complex_gaussian(&mut rng, 0.01));
        let mut dirty = clean.clone();
        for (a, b) in dirty.as_mut_slice().iter_mut().zip(noise.as_slice()) {
            *a += b;
        }
        let ic = periodogram(clean.clone()).unwrap();
        let id = periodogram(dirty).unwrap();
        let inc = id.energy() - ic.energy();
        let cross: f64 = clean
            .as_slice()
            .iter()
            .zip(noise.as_slice())
            .map(|(a, b)| 2.0 * (a.conj() * b).re)
            .sum();
        assert!((inc - (noise.energy() + cross)).abs() < 1e-8);
        assert!(id.peak_to_floor_db() < ic.peak_to_floor_db());
    }

    proptest! {
        #[test]
        fn parseval_and_scale_invariance(seed in 0u64..10_000, re in -5.0f64..5.0, im in -5.0f64..5.0) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (nc, ms) = (32, 16);
            let mut div = phasor_block(nc, ms, 5.0, 11.0);
            for v in div.as_mut_slice() {
                *v += complex_gaussian(&mut rng, 0.2);
            }
            let img = periodogram(div.clone()).unwrap();
            prop_assert!((img.energy() - div.energy()).abs() < 1e-8 * div.energy());
            let s = C64::new(re, im);
            let mut scaled = div;
            scaled.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            let img2 = periodogram(scaled).unwrap();
            prop_assert_eq!(img.argmax(), img2.argmax());
        }

        #[test]
        fn quantization_only_error(delay in 0.0f64..200.0, dopp in -100.0f64..100.0) {
            let (nc, ms) = (256, 256);
            let x_dopp = dopp.rem_euclid(ms as f64);
            let img = periodogram(phasor_block(nc, ms, delay, x_dopp)).unwrap();
            let (q, k) = img.peak_search(PeakRule::Floor);
            let dq = delay - q as f64;
            let dk = (x_dopp - k as f64).rem_euclid(ms as f64);
            let dk = if dk > ms as f64 / 2.0 { dk - ms as f64 } else { dk };
            prop_assert!(dq > -1.0 && dq < 1.0, "delay {} -> {}", delay, q);
            prop_assert!(dk > -1.0 && dk < 1.0, "doppler {} -> {}", x_dopp, k);
        }
    }
}
