//! Closed-form error-propagation power and SINR bookkeeping.

use alloc::vec::Vec;

use crate::constellation::QamConstellation;
use crate::math::{db_to_linear, linear_to_db};
use crate::{Error, Result};

/// Average energy of the decision error `d - d̂` for a unit-power QAM
/// constellation with independent Gaussian noise of standard deviation
/// `sigma` on each axis and uniform symbols.
///
/// Evaluated as the full sum over sent level pairs `(r1, r2)` and decided
/// level pairs `(r1', r2')`.
pub fn aepp(constellation: &QamConstellation, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("noise standard deviation must be positive"));
    }
    let side = constellation.side();
    let levels = constellation.levels();
    let prior = 1.0 / side as f64;
    let probs = transition_table(constellation, sigma)?;
    let p = |decided: usize, sent: usize| probs[sent * side + decided];
    let mut total = 0.0;
    for r1 in 0..side {
        for r2 in 0..side {
            let mut inner = 0.0;
            for d1 in 0..side {
                for d2 in 0..side {
                    let e1 = levels[r1] - levels[d1];
                    let e2 = levels[r2] - levels[d2];
                    inner += p(d1, r1) * p(d2, r2) * (e1 * e1 + e2 * e2);
                }
            }
            total += prior * prior * inner;
        }
    }
    Ok(total)
}

/// Same quantity using the independence of the two axes:
/// twice the per-axis mean squared decision error.
pub fn aepp_separable(constellation: &QamConstellation, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("noise standard deviation must be positive"));
    }
    let side = constellation.side();
    let levels = constellation.levels();
    let probs = transition_table(constellation, sigma)?;
    let mut axis = 0.0;
    for r in 0..side {
        for d in 0..side {
            let e = levels[r] - levels[d];
            axis += probs[r * side + d] * e * e;
        }
    }
    Ok(2.0 * axis / side as f64)
}

// row = sent level, column = decided level
fn transition_table(constellation: &QamConstellation, sigma: f64) -> Result<Vec<f64>> {
    let side = constellation.side();
    let mut t = Vec::with_capacity(side * side);
    for sent in 0..side {
        for decided in 0..side {
            t.push(constellation.decide_prob(decided, sent, sigma)?);
        }
    }
    Ok(t)
}

/// Per-axis noise standard deviation at symbol SINR `sinr_db`, for the
/// per-axis signal power 0.5 of a unit-power constellation.
pub fn sigma_from_sinr(sinr_db: f64) -> f64 {
    libm::sqrt(0.5 / db_to_linear(sinr_db))
}

/// Processing gain `Nc / NC` in dB.
pub fn cdm_gain_db(subcarriers: usize, channels: usize) -> f64 {
    linear_to_db(subcarriers as f64 / channels as f64)
}

/// Post-despreading SINR for a per-subcarrier SINR `gamma_of_db`.
pub fn sinr_map(gamma_of_db: f64, subcarriers: usize, channels: usize) -> f64 {
    gamma_of_db + cdm_gain_db(subcarriers, channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeppPoint {
    pub order: usize,
    pub subcarriers: usize,
    pub channels: usize,
    /// Per-subcarrier (OFDM reference) SINR.
    pub sinr_db: f64,
    pub aepp: f64,
}

/// AEPP against the reference SINR for every constellation order and code
/// channel count. `channels == subcarriers` is plain OFDM.
pub fn aepp_curves(
    orders: &[usize],
    sinr_db: &[f64],
    subcarriers: usize,
    channels: &[usize],
) -> Result<Vec<AeppPoint>> {
    let mut out = Vec::with_capacity(orders.len() * sinr_db.len() * channels.len());
    for &order in orders {
        let c = QamConstellation::new(order)?;
        for &nch in channels {
            if nch == 0 || nch > subcarriers {
                return Err(Error::TooManyChannels {
                    channels: nch,
                    nc: subcarriers,
                });
            }
            for &s in sinr_db {
                let sigma = sigma_from_sinr(sinr_map(s, subcarriers, nch));
                out.push(AeppPoint {
                    order,
                    subcarriers,
                    channels: nch,
                    sinr_db: s,
                    aepp: aepp(&c, sigma)?,
                });
            }
        }
    }
    Ok(out)
}
