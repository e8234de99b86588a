//! Gray-mapped square QAM.
//!
//! An M-QAM point is a pair of independent √M-level PAM amplitudes. Each axis
//! carries `log2(√M)` bits with reflected-Gray labels on the level index, the
//! in-phase label occupying the high bits of the symbol label. Levels are
//! scaled so the average symbol power over a uniform prior is 1.

use alloc::vec::Vec;

use crate::math::{q_function, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_per_axis: u32,
    /// Ascending PAM amplitudes.
    levels: Vec<f64>,
    spacing: f64,
}

/// Outcome of a hard decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub point: C64,
    pub label: u32,
    /// Level index on the in-phase axis (0 = most negative).
    pub i_level: usize,
    /// Level index on the quadrature axis.
    pub q_level: usize,
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut k = g;
    while g > 0 {
        g >>= 1;
        k ^= g;
    }
    k
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        let bits_per_axis = match order {
            4 => 1,
            16 => 2,
            64 => 3,
            other => return Err(Error::QamOrder(other)),
        };
        let side = 1usize << bits_per_axis;
        // Levels (2k - (side-1)) * unit give E|x|^2 = 2 unit^2 (M-1)/3.
        let unit = libm::sqrt(3.0 / (2.0 * (order as f64 - 1.0)));
        let levels = (0..side)
            .map(|k| (2.0 * k as f64 - (side as f64 - 1.0)) * unit)
            .collect();
        Ok(Self {
            order,
            bits_per_axis,
            levels,
            spacing: 2.0 * unit,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis as usize
    }

    /// Number of PAM levels per axis (√M).
    pub fn side(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Distance `a` between adjacent PAM levels.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Point carrying `label` (`label < M`).
    pub fn point(&self, label: u32) -> C64 {
        let mask = (1u32 << self.bits_per_axis) - 1;
        let i = gray_inverse(label >> self.bits_per_axis) as usize;
        let q = gray_inverse(label & mask) as usize;
        C64::new(self.levels[i], self.levels[q])
    }

    fn label_of(&self, i_level: usize, q_level: usize) -> u32 {
        (gray(i_level as u32) << self.bits_per_axis) | gray(q_level as u32)
    }

    /// All M points, indexed by label.
    pub fn points(&self) -> Vec<C64> {
        (0..self.order as u32).map(|l| self.point(l)).collect()
    }

    /// Packs `log2(M)` bits (MSB first, values 0/1) into a label.
    pub fn label_from_bits(&self, bits: &[u8]) -> u32 {
        bits.iter()
            .fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32)
    }

    /// Appends the bits of `label`, MSB first.
    pub fn push_bits(&self, label: u32, out: &mut Vec<u8>) {
        let n = self.bits_per_symbol();
        for shift in (0..n).rev() {
            out.push(((label >> shift) & 1) as u8);
        }
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let k = self.bits_per_symbol();
        if bits.len() % k != 0 {
            return Err(Error::Shape {
                what: "bit sequence (multiple of bits per symbol)",
                expected: bits.len() - bits.len() % k + k,
                found: bits.len(),
            });
        }
        Ok(bits
            .chunks_exact(k)
            .map(|c| self.point(self.label_from_bits(c)))
            .collect())
    }

    /// Nearest PAM level index for one axis. Exact midpoints resolve to the
    /// lower level; values beyond the outer levels saturate.
    pub fn nearest_level(&self, x: f64) -> usize {
        let side = self.levels.len();
        let u = (x / self.spacing * 2.0 + (side as f64 - 1.0)) / 2.0;
        let k = libm::ceil(u - 0.5);
        if k <= 0.0 {
            0
        } else if k >= (side - 1) as f64 {
            side - 1
        } else {
            k as usize
        }
    }

    /// Maximum-likelihood decision, made independently per axis.
    pub fn hard_decide(&self, received: C64) -> Result<Decision> {
        if !received.re.is_finite() || !received.im.is_finite() {
            return Err(Error::NonFinite("received symbol"));
        }
        let i_level = self.nearest_level(received.re);
        let q_level = self.nearest_level(received.im);
        Ok(Decision {
            point: C64::new(self.levels[i_level], self.levels[q_level]),
            label: self.label_of(i_level, q_level),
            i_level,
            q_level,
        })
    }

    /// Probability that a PAM level `sent` observed in Gaussian noise of
    /// per-axis standard deviation `sigma` is decided as level `decided`.
    /// Level indices are zero-based and ascending.
    pub fn decide_prob(&self, decided: usize, sent: usize, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::Domain("noise standard deviation must be positive"));
        }
        let side = self.levels.len();
        if decided >= side || sent >= side {
            return Err(Error::Shape {
                what: "PAM level index",
                expected: side,
                found: decided.max(sent),
            });
        }
        let offset = self.levels[decided] - self.levels[sent];
        let half = self.spacing / 2.0;
        let upper = q_function((offset - half) / sigma);
        let lower = q_function((offset + half) / sigma);
        Ok(if side == 1 {
            1.0
        } else if decided == 0 {
            1.0 - lower
        } else if decided == side - 1 {
            upper
        } else {
            upper - lower
        })
    }
}
