//! Unified communication/radar channel between two JCS users.
//!
//! Each propagation path contributes a rank-one MIMO term
//! `b · a_N(θ_rx) a_M(θ_tx)ᵀ` with a delay and a Doppler shift. The radar
//! path travels the same geometry twice: double delay, double Doppler and the
//! two-way path loss scaled by a random RCS.
//!
//! After beamforming every path reduces to a complex scalar, so a block is
//! stored separably as per-path coefficients times a subcarrier phasor times
//! a symbol phasor rather than as two dense `Nc x Ms` matrices.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::{cis, complex_gaussian, C64, TAU};
use crate::ofdm::{FrameBlock, OfdmParams};
use crate::{Error, Result};

pub const DEFAULT_C0: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    /// Path length `R_l` in metres.
    pub length_m: f64,
    /// Communication angle of arrival.
    pub aoa_rad: f64,
    /// Communication angle of departure, shared with the radar path.
    pub aod_rad: f64,
    /// Variance of the small-scale communication gain (ignored on LoS).
    pub comm_variance: f64,
    /// RCS variance in m².
    pub rcs_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub carrier_hz: f64,
    pub c0: f64,
    /// Radial relative velocity, positive when the users close in.
    pub velocity_mps: f64,
    pub tx_elements: usize,
    pub rx_elements: usize,
    /// Path 0 is the line-of-sight path.
    pub paths: Vec<PathParams>,
}

impl GeometryConfig {
    /// 24 GHz, 16x16 arrays, LoS at 100 m broadside plus one weak
    /// reflection 30% longer and 20° off.
    pub fn table_i() -> Self {
        let off = 20f64.to_radians();
        Self {
            carrier_hz: 24e9,
            c0: DEFAULT_C0,
            velocity_mps: 15.0,
            tx_elements: 16,
            rx_elements: 16,
            paths: vec![
                PathParams {
                    length_m: 100.0,
                    aoa_rad: 0.0,
                    aod_rad: 0.0,
                    comm_variance: 1.0,
                    rcs_variance: 10.0,
                },
                PathParams {
                    length_m: 130.0,
                    aoa_rad: off,
                    aod_rad: off,
                    comm_variance: 0.1,
                    rcs_variance: 0.1,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.carrier_hz) {
            return Err(Error::Domain("carrier frequency must be positive"));
        }
        if !positive(self.c0) {
            return Err(Error::Domain("propagation speed must be positive"));
        }
        if !self.velocity_mps.is_finite() {
            return Err(Error::NonFinite("relative velocity"));
        }
        if self.tx_elements == 0 || self.rx_elements == 0 {
            return Err(Error::Domain("arrays need at least one element"));
        }
        if self.paths.is_empty() {
            return Err(Error::Domain("at least the line-of-sight path is required"));
        }
        for p in &self.paths {
            if !positive(p.length_m) {
                return Err(Error::Domain("path lengths must be positive"));
            }
            if !(p.aoa_rad.is_finite() && p.aod_rad.is_finite()) {
                return Err(Error::NonFinite("path angle"));
            }
            if !(p.comm_variance >= 0.0 && p.rcs_variance >= 0.0) {
                return Err(Error::Domain("fading variances must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.c0 / self.carrier_hz
    }

    pub fn comm_delay(&self, l: usize) -> f64 {
        self.paths[l].length_m / self.c0
    }

    pub fn radar_delay(&self, l: usize) -> f64 {
        2.0 * self.paths[l].length_m / self.c0
    }

    /// Doppler shift of every communication path.
    pub fn comm_doppler(&self) -> f64 {
        self.velocity_mps / self.c0 * self.carrier_hz
    }

    pub fn radar_doppler(&self) -> f64 {
        2.0 * self.velocity_mps / self.c0 * self.carrier_hz
    }

    /// The same propagation paths seen from the other end: arrival and
    /// departure angles and the array sizes swap.
    pub fn reversed(&self) -> Self {
        let mut g = self.clone();
        core::mem::swap(&mut g.tx_elements, &mut g.rx_elements);
        for p in &mut g.paths {
            core::mem::swap(&mut p.aoa_rad, &mut p.aod_rad);
        }
        g
    }

    /// Ground truth of the LoS path.
    pub fn truth(&self) -> Truth {
        Truth {
            tau_comm: self.comm_delay(0),
            tau_radar: self.radar_delay(0),
            doppler_comm: self.comm_doppler(),
            doppler_radar: self.radar_doppler(),
            range_m: self.paths[0].length_m,
            velocity_mps: self.velocity_mps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub tau_comm: f64,
    pub tau_radar: f64,
    pub doppler_comm: f64,
    pub doppler_radar: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
}

/// Half-wavelength ULA response, entry `p` = `exp(j π p sin θ)`.
pub fn steering(theta: f64, n: usize) -> Vec<C64> {
    let s = libm::sin(theta);
    (0..n)
        .map(|p| cis(core::f64::consts::PI * p as f64 * s))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSet {
    pub tx: Vec<C64>,
    pub rx_comm: Vec<C64>,
    pub rx_radar: Vec<C64>,
}

impl BeamformingSet {
    pub fn new(tx: Vec<C64>, rx_comm: Vec<C64>, rx_radar: Vec<C64>) -> Result<Self> {
        for v in [&tx, &rx_comm, &rx_radar] {
            let norm = libm::sqrt(crate::math::energy(v));
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Domain("beamforming vectors must have unit norm"));
            }
        }
        Ok(Self {
            tx,
            rx_comm,
            rx_radar,
        })
    }

    /// Beams seen by the opposite link direction: the peer transmits with
    /// what was the receive beam and receives with what was the transmit
    /// beam.
    pub fn reversed(&self) -> Self {
        Self {
            tx: self.rx_comm.clone(),
            rx_comm: self.tx.clone(),
            rx_radar: self.rx_radar.clone(),
        }
    }
}

/// Matched beams toward the LoS path. The channel applies `w_tx*`, so the
/// transmit beam is the plain steering vector.
pub fn conjugate_beams(geometry: &GeometryConfig) -> BeamformingSet {
    let los = &geometry.paths[0];
    let m = geometry.tx_elements;
    let n = geometry.rx_elements;
    let sm = 1.0 / libm::sqrt(m as f64);
    let sn = 1.0 / libm::sqrt(n as f64);
    BeamformingSet {
        tx: steering(los.aod_rad, m)
            .into_iter()
            .map(|v| v * sm)
            .collect(),
        rx_comm: steering(los.aoa_rad, n)
            .into_iter()
            .map(|v| v * sn)
            .collect(),
        rx_radar: steering(los.aod_rad, n)
            .into_iter()
            .map(|v| v * sn)
            .collect(),
    }
}

/// `w_rxᴴ a_N(θ_rx) a_M(θ_tx)ᵀ w_tx*`.
pub fn beam_gain(w_rx: &[C64], theta_rx: f64, theta_tx: f64, w_tx: &[C64]) -> C64 {
    let a_rx = steering(theta_rx, w_rx.len());
    let a_tx = steering(theta_tx, w_tx.len());
    let left: C64 = w_rx.iter().zip(&a_rx).map(|(w, a)| w.conj() * a).sum();
    let right: C64 = a_tx.iter().zip(w_tx).map(|(a, w)| a * w.conj()).sum();
    left * right
}

/// Large-scale and small-scale gains of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGains {
    pub comm: C64,
    pub radar: C64,
}

/// `λ / (4π R)`.
pub fn comm_path_loss(geometry: &GeometryConfig, l: usize) -> f64 {
    geometry.wavelength() / (2.0 * TAU * geometry.paths[l].length_m)
}

/// `sqrt(λ² / ((4π)³ R⁴))`.
pub fn radar_path_loss(geometry: &GeometryConfig, l: usize) -> f64 {
    let r = geometry.paths[l].length_m;
    let four_pi = 2.0 * TAU;
    geometry.wavelength() / libm::sqrt(four_pi * four_pi * four_pi) / (r * r)
}

/// Draws the fading of path `l`. The LoS communication gain is deterministic.
pub fn path_gains<R: Rng + ?Sized>(geometry: &GeometryConfig, l: usize, rng: &mut R) -> PathGains {
    let p = &geometry.paths[l];
    let small = if l == 0 {
        C64::new(1.0, 0.0)
    } else {
        complex_gaussian(rng, p.comm_variance)
    };
    let rcs = complex_gaussian(rng, p.rcs_variance);
    PathGains {
        comm: small * comm_path_loss(geometry, l),
        radar: rcs * radar_path_loss(geometry, l),
    }
}

pub fn draw_gains<R: Rng + ?Sized>(geometry: &GeometryConfig, rng: &mut R) -> Vec<PathGains> {
    (0..geometry.paths.len())
        .map(|l| path_gains(geometry, l, rng))
        .collect()
}

/// Spatial `N x M` channel matrix at the start of symbol `i` (row-major),
/// without the frequency phasor. `reverse` returns the opposite direction,
/// which has the array roles swapped.
pub fn comm_spatial_matrix(
    geometry: &GeometryConfig,
    gains: &[PathGains],
    params: &OfdmParams,
    i: usize,
    reverse: bool,
) -> (usize, usize, Vec<C64>) {
    let (rows, cols) = if reverse {
        (geometry.tx_elements, geometry.rx_elements)
    } else {
        (geometry.rx_elements, geometry.tx_elements)
    };
    let mut h = vec![C64::new(0.0, 0.0); rows * cols];
    let fd = geometry.comm_doppler();
    for (l, (p, g)) in geometry.paths.iter().zip(gains).enumerate() {
        let tau = geometry.comm_delay(l);
        let coef = g.comm * cis(TAU * fd * (tau + i as f64 * params.frame_time()));
        let (ar, at) = if reverse {
            (steering(p.aod_rad, rows), steering(p.aoa_rad, cols))
        } else {
            (steering(p.aoa_rad, rows), steering(p.aod_rad, cols))
        };
        for r in 0..rows {
            for c in 0..cols {
                h[r * cols + c] += coef * ar[r] * at[c];
            }
        }
    }
    (rows, cols, h)
}

/// One separable path term `coef · e^{j2π f_d i Ts} · e^{-j2π m Δf τ}`.
#[derive(Debug, Clone, PartialEq)]
struct PathTerm {
    coef: C64,
    doppler_step: f64,
    freq: Vec<C64>,
}

impl PathTerm {
    fn new(coef: C64, tau: f64, doppler: f64, params: &OfdmParams) -> Self {
        let df = params.subcarrier_spacing();
        let freq = (0..params.subcarriers())
            .map(|m| cis(-TAU * m as f64 * df * tau))
            .collect();
        Self {
            // e^{j2π f_d τ} is part of the coefficient
            coef: coef * cis(TAU * doppler * tau),
            doppler_step: TAU * doppler * params.frame_time(),
            freq,
        }
    }

    fn symbol_coef(&self, i: usize) -> C64 {
        self.coef * cis(self.doppler_step * i as f64)
    }
}

/// Frequency responses of the communication and radar channels over one
/// block of `Ms` symbols. Fading is frozen over the block.
#[derive(Debug, Clone, PartialEq)]
pub struct JcsChannelRealization {
    subcarriers: usize,
    symbols: usize,
    comm: Vec<PathTerm>,
    radar: Vec<PathTerm>,
    gains: Vec<PathGains>,
    truth: Truth,
}

impl JcsChannelRealization {
    /// Draws fading and builds the realization.
    pub fn realize<R: Rng + ?Sized>(
        geometry: &GeometryConfig,
        beams: &BeamformingSet,
        params: &OfdmParams,
        rng: &mut R,
    ) -> Result<Self> {
        geometry.validate()?;
        let gains = draw_gains(geometry, rng);
        Self::with_gains(geometry, beams, params, gains)
    }

    pub fn with_gains(
        geometry: &GeometryConfig,
        beams: &BeamformingSet,
        params: &OfdmParams,
        gains: Vec<PathGains>,
    ) -> Result<Self> {
        geometry.validate()?;
        if gains.len() != geometry.paths.len() {
            return Err(Error::Shape {
                what: "path gains",
                expected: geometry.paths.len(),
                found: gains.len(),
            });
        }
        if beams.tx.len() != geometry.tx_elements {
            return Err(Error::Shape {
                what: "tx beam",
                expected: geometry.tx_elements,
                found: beams.tx.len(),
            });
        }
        for w in [&beams.rx_comm, &beams.rx_radar] {
            if w.len() != geometry.rx_elements {
                return Err(Error::Shape {
                    what: "rx beam",
                    expected: geometry.rx_elements,
                    found: w.len(),
                });
            }
        }
        let fd_c = geometry.comm_doppler();
        let fd_r = geometry.radar_doppler();
        let mut comm = Vec::with_capacity(gains.len());
        let mut radar = Vec::with_capacity(gains.len());
        for (l, (p, g)) in geometry.paths.iter().zip(&gains).enumerate() {
            let gc = beam_gain(&beams.rx_comm, p.aoa_rad, p.aod_rad, &beams.tx);
            let gr = beam_gain(&beams.rx_radar, p.aod_rad, p.aod_rad, &beams.tx);
            comm.push(PathTerm::new(
                g.comm * gc,
                geometry.comm_delay(l),
                fd_c,
                params,
            ));
            radar.push(PathTerm::new(
                g.radar * gr,
                geometry.radar_delay(l),
                fd_r,
                params,
            ));
        }
        Ok(Self {
            subcarriers: params.subcarriers(),
            symbols: params.symbols(),
            comm,
            radar,
            gains,
            truth: geometry.truth(),
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn gains(&self) -> &[PathGains] {
        &self.gains
    }

    pub fn truth(&self) -> &Truth {
        &self.truth
    }

    fn column(terms: &[PathTerm], i: usize, out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        for t in terms {
            let c = t.symbol_coef(i);
            for (o, f) in out.iter_mut().zip(&t.freq) {
                *o += c * f;
            }
        }
    }

    /// Communication response of symbol `i` on every subcarrier.
    pub fn comm_column(&self, i: usize, out: &mut [C64]) {
        assert_eq!(out.len(), self.subcarriers);
        Self::column(&self.comm, i, out);
    }

    pub fn radar_column(&self, i: usize, out: &mut [C64]) {
        assert_eq!(out.len(), self.subcarriers);
        Self::column(&self.radar, i, out);
    }

    pub fn comm(&self, m: usize, i: usize) -> C64 {
        self.comm.iter().map(|t| t.symbol_coef(i) * t.freq[m]).sum()
    }

    pub fn radar(&self, m: usize, i: usize) -> C64 {
        self.radar
            .iter()
            .map(|t| t.symbol_coef(i) * t.freq[m])
            .sum()
    }

    pub fn comm_block(&self) -> FrameBlock {
        let mut b = FrameBlock::zeros(self.subcarriers, self.symbols);
        for i in 0..self.symbols {
            self.comm_column(i, b.column_mut(i));
        }
        b
    }

    pub fn radar_block(&self) -> FrameBlock {
        let mut b = FrameBlock::zeros(self.subcarriers, self.symbols);
        for i in 0..self.symbols {
            self.radar_column(i, b.column_mut(i));
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geometry_3e8() -> GeometryConfig {
        GeometryConfig {
            c0: 3e8,
            ..GeometryConfig::table_i()
        }
    }

    fn small_params() -> OfdmParams {
        OfdmParams::new(64, 120e3, 1.43e-6, 16).unwrap()
    }

    #[test]
    fn steering_examples() {
        assert!(steering(0.0, 5)
            .iter()
            .all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
        let a = steering(core::f64::consts::FRAC_PI_2, 2);
        assert!((a[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let a = steering(core::f64::consts::FRAC_PI_6, 4);
        let want = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ];
        for (x, y) in a.iter().zip(want) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn path_loss_values() {
        let g = geometry_3e8();
        assert!((g.wavelength() - 0.0125).abs() < 1e-15);
        let by_hand = 0.0125 / (4.0 * core::f64::consts::PI * 100.0);
        assert!((comm_path_loss(&g, 0) - by_hand).abs() < 1e-18);
        assert!((comm_path_loss(&g, 0) - 9.947e-6).abs() < 1e-9);
        assert!((radar_path_loss(&g, 0) - 2.806e-8).abs() < 1e-11);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gains = path_gains(&g, 0, &mut rng);
        assert!((gains.comm - C64::new(by_hand, 0.0)).norm() < 1e-20);
    }

    #[test]
    fn nlos_gain_power() {
        let g = geometry_3e8();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| path_gains(&g, 1, &mut rng).comm.norm_sqr())
            .sum::<f64>()
            / n as f64;
        let want = comm_path_loss(&g, 1).powi(2) * 0.1;
        assert!((mean / want - 1.0).abs() < 0.02);
    }

    #[test]
    fn comm_to_radar_power_ratio() {
        let g = geometry_3e8();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let radar: f64 = (0..n)
            .map(|_| path_gains(&g, 0, &mut rng).radar.norm_sqr())
            .sum::<f64>()
            / n as f64;
        let comm = comm_path_loss(&g, 0).powi(2);
        let r0 = g.paths[0].length_m;
        let want = g.paths[0].rcs_variance / (2.0 * TAU * r0 * r0);
        assert!((radar / comm / want - 1.0).abs() < 0.02);
    }

    #[test]
    fn table_i_truth() {
        let t = geometry_3e8().truth();
        assert!((t.doppler_radar - 2400.0).abs() < 1e-9);
        assert!((t.tau_radar - 0.6667e-6).abs() < 1e-10);
        assert!((t.tau_radar - 2.0 * t.tau_comm).abs() < 1e-22);
        assert!((t.doppler_radar - 2.0 * t.doppler_comm).abs() < 1e-12);
    }

    #[test]
    fn conjugate_beam_gain() {
        let g = GeometryConfig::table_i();
        let b = conjugate_beams(&g);
        assert!(b
            .tx
            .iter()
            .all(|v| (v - C64::new(0.25, 0.0)).norm() < 1e-15));
        let gain = beam_gain(&b.rx_comm, 0.0, 0.0, &b.tx);
        assert!((gain.norm() - 16.0).abs() < 1e-12);
        assert!((10.0 * gain.norm_sqr().log10() - 24.08).abs() < 0.01);
        // off-broadside LoS keeps the full array gain
        let mut g2 = g.clone();
        g2.paths[0].aoa_rad = 0.3;
        g2.paths[0].aod_rad = -0.7;
        let b2 = conjugate_beams(&g2);
        assert!((beam_gain(&b2.rx_comm, 0.3, -0.7, &b2.tx).norm() - 16.0).abs() < 1e-12);
        assert!(BeamformingSet::new(b2.tx, b2.rx_comm, b2.rx_radar).is_ok());
    }

    #[test]
    fn single_path_collapses() {
        let g = GeometryConfig {
            velocity_mps: 0.0,
            tx_elements: 1,
            rx_elements: 1,
            paths: vec![GeometryConfig::table_i().paths[0]],
            ..geometry_3e8()
        };
        let p = small_params();
        let unit = vec![C64::new(1.0, 0.0)];
        let beams = BeamformingSet::new(unit.clone(), unit.clone(), unit).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = JcsChannelRealization::realize(&g, &beams, &p, &mut rng).unwrap();
        let b0 = comm_path_loss(&g, 0);
        let tau = g.comm_delay(0);
        for i in [0, 7, 15] {
            for m in [0, 1, 33, 63] {
                let want = cis(-TAU * m as f64 * 120e3 * tau) * b0;
                assert!((ch.comm(m, i) - want).norm() < 1e-18);
            }
        }
    }

    #[test]
    fn column_matches_scalar_access() {
        let g = GeometryConfig::table_i();
        let p = small_params();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = JcsChannelRealization::realize(&g, &conjugate_beams(&g), &p, &mut rng).unwrap();
        let hc = ch.comm_block();
        let hr = ch.radar_block();
        for i in 0..p.symbols() {
            for m in 0..p.subcarriers() {
                assert!((hc.get(m, i) - ch.comm(m, i)).norm() < 1e-20);
                assert!((hr.get(m, i) - ch.radar(m, i)).norm() < 1e-24);
            }
        }
    }

    /// Direct evaluation of the beamformed channel sum for one cell.
    fn direct_comm(
        g: &GeometryConfig,
        beams: &BeamformingSet,
        gains: &[PathGains],
        p: &OfdmParams,
        m: usize,
        i: usize,
    ) -> C64 {
        let (rows, cols) = (g.rx_elements, g.tx_elements);
        let mut acc = C64::new(0.0, 0.0);
        for (l, (path, gain)) in g.paths.iter().zip(gains).enumerate() {
            let tau = g.comm_delay(l);
            let ar = steering(path.aoa_rad, rows);
            let at = steering(path.aod_rad, cols);
            let mut s = C64::new(0.0, 0.0);
            for r in 0..rows {
                for c in 0..cols {
                    s += beams.rx_comm[r].conj() * ar[r] * at[c] * beams.tx[c].conj();
                }
            }
            acc += gain.comm
                * cis(TAU * g.comm_doppler() * (tau + i as f64 * p.frame_time()))
                * cis(-TAU * m as f64 * p.subcarrier_spacing() * tau)
                * s;
        }
        acc
    }

    #[test]
    fn realization_matches_direct_sum() {
        let g = GeometryConfig::table_i();
        let p = small_params();
        let beams = conjugate_beams(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gains = draw_gains(&g, &mut rng);
        let ch = JcsChannelRealization::with_gains(&g, &beams, &p, gains.clone()).unwrap();
        for (m, i) in [(0, 0), (5, 3), (63, 15), (17, 9)] {
            let want = direct_comm(&g, &beams, &gains, &p, m, i);
            assert!((ch.comm(m, i) - want).norm() < 1e-12 * want.norm());
        }
    }

    #[test]
    fn reciprocity() {
        let mut g = GeometryConfig::table_i();
        g.paths[0].aoa_rad = 0.2;
        g.paths[1].aod_rad = -0.5;
        let p = small_params();
        let beams = conjugate_beams(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gains = draw_gains(&g, &mut rng);
        for i in [0, 3, 15] {
            let (r, c, fwd) = comm_spatial_matrix(&g, &gains, &p, i, false);
            let (r2, c2, rev) = comm_spatial_matrix(&g, &gains, &p, i, true);
            assert_eq!((r, c), (c2, r2));
            for a in 0..r {
                for b in 0..c {
                    assert!(
                        (fwd[a * c + b] - rev[b * r + a]).norm() <= 1e-15 * fwd[a * c + b].norm()
                    );
                }
            }
        }
        let fwd = JcsChannelRealization::with_gains(&g, &beams, &p, gains.clone()).unwrap();
        let rev =
            JcsChannelRealization::with_gains(&g.reversed(), &beams.reversed(), &p, gains).unwrap();
        for i in 0..p.symbols() {
            for m in 0..p.subcarriers() {
                assert!((fwd.comm(m, i) - rev.comm(m, i)).norm() < 1e-15 * fwd.comm(m, i).norm());
            }
        }
    }

    #[test]
    fn invalid_geometry() {
        let mut g = GeometryConfig::table_i();
        g.paths.clear();
        assert!(g.validate().is_err());
        let mut g = GeometryConfig::table_i();
        g.paths[1].length_m = 0.0;
        assert!(g.validate().is_err());
        let b = conjugate_beams(&GeometryConfig::table_i());
        assert!(BeamformingSet::new(vec![C64::new(2.0, 0.0)], b.rx_comm, b.rx_radar).is_err());
    }

    proptest! {
        #[test]
        fn single_path_phase_progression(
            r in 5.0f64..500.0,
            v in -40.0f64..40.0,
            theta in -1.2f64..1.2,
            seed in 0u64..1000,
        ) {
            let g = GeometryConfig {
                velocity_mps: v,
                paths: vec![PathParams { length_m: r, aoa_rad: theta, aod_rad: theta, comm_variance: 1.0, rcs_variance: 1.0 }],
                ..GeometryConfig::table_i()
            };
            let p = small_params();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = JcsChannelRealization::realize(&g, &conjugate_beams(&g), &p, &mut rng).unwrap();
            let step_i = cis(TAU * g.comm_doppler() * p.frame_time());
            let step_m = cis(-TAU * p.subcarrier_spacing() * g.comm_delay(0));
            let step_i_r = cis(TAU * g.radar_doppler() * p.frame_time());
            let step_m_r = cis(-TAU * p.subcarrier_spacing() * g.radar_delay(0));
            for (m, i) in [(0usize, 0usize), (10, 4), (40, 11)] {
                let h = ch.comm(m, i);
                prop_assert!((ch.comm(m, i + 1) / h - step_i).norm() < 1e-9);
                prop_assert!((ch.comm(m + 1, i) / h - step_m).norm() < 1e-9);
                let hr = ch.radar(m, i);
                prop_assert!((ch.radar(m, i + 1) / hr - step_i_r).norm() < 1e-9);
                prop_assert!((ch.radar(m + 1, i) / hr - step_m_r).norm() < 1e-9);
            }
            for l in 0..g.paths.len() {
                prop_assert!((g.radar_delay(l) - 2.0 * g.comm_delay(l)).abs() <= 1e-15 * g.radar_delay(l));
            }
            prop_assert!((g.radar_doppler() - 2.0 * g.comm_doppler()).abs() <= 1e-12 * g.radar_doppler().abs().max(1.0));
        }
    }
}
