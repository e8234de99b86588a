//! One block of the two-user JCS link, as seen by user 1.
//!
//! User 1 transmits its own symbols and listens for their echo while user 2
//! transmits towards it over the communication channel. User 1 decodes and
//! cancels user 2's signal, then estimates range and velocity from what is
//! left.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    beam_gain, comm_path_loss, BeamformingSet, GeometryConfig, JcsChannelRealization, Truth,
};
use crate::constellation::QamConstellation;
use crate::math::{complex_gaussian, db_to_linear, energy, C64};
use crate::ofdm::{FrameBlock, OfdmParams};
use crate::radar::{self, PeakRule, RadarEstimate};
use crate::sic::SicReceiver;
use crate::spreading::{CodeBook, Selection};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Walsh-Hadamard spread OFDM with SIC.
    CdOfdm,
    /// Plain OFDM with SIC.
    Ofdm,
    /// Plain OFDM where sensing and communication use separate time slots:
    /// the echo never overlaps the peer's signal.
    TddOfdm,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::CdOfdm => "cd-ofdm",
            Scheme::Ofdm => "ofdm",
            Scheme::TddOfdm => "tdd-ofdm",
        }
    }
}

/// Whether the two users draw their codes from the same Hadamard columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodeAssignment {
    /// Both start at column 0.
    #[default]
    Shared,
    /// User 2's columns follow user 1's.
    Disjoint,
}

/// Everything that stays fixed across trials.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub params: OfdmParams,
    pub geometry: GeometryConfig,
    pub beams: BeamformingSet,
    pub constellation: QamConstellation,
    pub scheme: Scheme,
    /// User 1's code book; its spread symbols are the radar reference.
    pub own_book: CodeBook,
    /// User 2's code book.
    pub peer_book: CodeBook,
    pub own_power: f64,
    pub peer_power: f64,
    pub peak_rule: PeakRule,
}

impl LinkSetup {
    /// Builds the code books for `scheme`. The channel counts are ignored by
    /// the OFDM schemes, which use identity books. CD-OFDM requires odd
    /// counts so the radar reference never has a zero entry.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: OfdmParams,
        geometry: GeometryConfig,
        beams: BeamformingSet,
        constellation: QamConstellation,
        scheme: Scheme,
        own_channels: usize,
        peer_channels: usize,
        assignment: CodeAssignment,
    ) -> Result<Self> {
        let nc = params.subcarriers();
        let (own_book, peer_book) = match scheme {
            Scheme::Ofdm | Scheme::TddOfdm => (CodeBook::identity(nc), CodeBook::identity(nc)),
            Scheme::CdOfdm => {
                for n in [own_channels, peer_channels] {
                    if n % 2 == 0 {
                        return Err(Error::EvenChannels(n));
                    }
                }
                let peer_offset = match assignment {
                    CodeAssignment::Shared => 0,
                    CodeAssignment::Disjoint => own_channels,
                };
                (
                    CodeBook::hadamard(nc, own_channels, &Selection::FIRST)?,
                    CodeBook::hadamard(
                        nc,
                        peer_channels,
                        &Selection::Contiguous {
                            offset: peer_offset,
                        },
                    )?,
                )
            }
        };
        Self::with_books(
            params,
            geometry,
            beams,
            constellation,
            scheme,
            own_book,
            peer_book,
        )
    }

    pub fn with_books(
        params: OfdmParams,
        geometry: GeometryConfig,
        beams: BeamformingSet,
        constellation: QamConstellation,
        scheme: Scheme,
        own_book: CodeBook,
        peer_book: CodeBook,
    ) -> Result<Self> {
        geometry.validate()?;
        for b in [&own_book, &peer_book] {
            if b.subcarriers() != params.subcarriers() {
                return Err(Error::Shape {
                    what: "code book subcarriers",
                    expected: params.subcarriers(),
                    found: b.subcarriers(),
                });
            }
        }
        Ok(Self {
            params,
            geometry,
            beams,
            constellation,
            scheme,
            own_book,
            peer_book,
            own_power: 1.0,
            peer_power: 1.0,
            peak_rule: PeakRule::Floor,
        })
    }

    pub fn with_powers(mut self, own: f64, peer: f64) -> Result<Self> {
        if !(own > 0.0 && peer > 0.0 && own.is_finite() && peer.is_finite()) {
            return Err(Error::Domain("transmit powers must be positive"));
        }
        self.own_power = own;
        self.peer_power = peer;
        Ok(self)
    }

    /// Received per-subcarrier power of the peer's LoS signal after
    /// beamforming.
    pub fn los_comm_power(&self) -> f64 {
        let los = &self.geometry.paths[0];
        let g = beam_gain(
            &self.beams.rx_comm,
            los.aoa_rad,
            los.aod_rad,
            &self.beams.tx,
        );
        self.peer_power
            * {
                let b = comm_path_loss(&self.geometry, 0);
                b * b
            }
            * g.norm_sqr()
    }

    /// Noise variance that puts the per-subcarrier LoS SINR at `sinr_db`.
    pub fn noise_variance(&self, sinr_db: f64) -> f64 {
        self.los_comm_power() / db_to_linear(sinr_db)
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.constellation.bits_per_symbol() * self.peer_book.channels()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockOptions {
    /// Run the radar estimator on the residual.
    pub radar: bool,
    pub noise: bool,
    /// Cancel with the true peer symbols instead of the decisions.
    pub genie: bool,
    /// Keep per-symbol diagnostics.
    pub diagnostics: bool,
    /// Return the full transmit, echo and residual blocks.
    pub keep_blocks: bool,
}

impl BlockOptions {
    pub const BER: BlockOptions = BlockOptions {
        radar: false,
        noise: true,
        genie: false,
        diagnostics: false,
        keep_blocks: false,
    };

    pub const RADAR: BlockOptions = BlockOptions {
        radar: true,
        ..Self::BER
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDiagnostics {
    pub symbol: usize,
    pub bit_errors: u32,
    pub residual_energy: f64,
    /// Energy of the leaked decision-error term `h ⊙ g C (d - d̂)`.
    pub error_prop_energy: f64,
}

/// Blocks kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockData {
    pub tx_reference: FrameBlock,
    pub echo: FrameBlock,
    pub residual: FrameBlock,
    /// Peer bits decided by the receiver.
    pub decided_labels: Vec<u32>,
    pub sent_labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub bits: u64,
    pub bit_errors: u64,
    /// Peer code-channel symbols decoded.
    pub symbols: u64,
    pub symbol_errors: u64,
    /// Sum of `|d - d̂|²` over every peer symbol.
    pub error_power: f64,
    pub radar: Option<RadarEstimate>,
    pub truth: Truth,
    pub diagnostics: Vec<SymbolDiagnostics>,
    pub blocks: Option<BlockData>,
}

/// Independent, reproducible generator for one trial of one sweep point.
pub fn trial_rng(seed: u64, point: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

/// Simulates one block of `Ms` symbols at per-subcarrier SINR `sinr_db`.
pub fn simulate_block<R: Rng + ?Sized>(
    setup: &LinkSetup,
    sinr_db: f64,
    options: &BlockOptions,
    rng: &mut R,
) -> Result<BlockResult> {
    let nc = setup.params.subcarriers();
    let ms = setup.params.symbols();
    let m = setup.constellation.order() as u32;
    let bps = setup.constellation.bits_per_symbol();
    let n_own = setup.own_book.channels();
    let n_peer = setup.peer_book.channels();
    let noise_var = setup.noise_variance(sinr_db);
    let tdd = setup.scheme == Scheme::TddOfdm;

    let channel =
        JcsChannelRealization::realize(&setup.geometry, &setup.beams, &setup.params, rng)?;
    let mut rx = SicReceiver::new(
        setup.peer_book.clone(),
        setup.constellation.clone(),
        setup.peer_power,
    )?;
    let own_amp = setup.own_book.amplitude(setup.own_power);

    let keep_radar = options.radar || options.keep_blocks;
    let mut tx_ref = keep_radar.then(|| FrameBlock::zeros(nc, ms));
    let mut residual_block = keep_radar.then(|| FrameBlock::zeros(nc, ms));
    let mut echo_block = options.keep_blocks.then(|| FrameBlock::zeros(nc, ms));
    let mut sent_all = Vec::new();
    let mut decided_all = Vec::new();

    let zero = C64::new(0.0, 0.0);
    let mut hc = vec![zero; nc];
    let mut hr = vec![zero; nc];
    let mut own_tx = vec![zero; nc];
    let mut echo = vec![zero; nc];
    let mut y = vec![zero; nc];
    let mut y_radar = vec![zero; nc];
    let mut residual = vec![zero; nc];
    let mut own_syms = vec![zero; n_own];
    let mut sent = vec![0u32; n_peer];
    let mut peer_syms = vec![zero; n_peer];
    let mut labels = vec![0u32; n_peer];
    let mut decided = vec![zero; n_peer];
    let mut soft = vec![zero; n_peer];
    let mut err_vec = vec![zero; n_peer];
    let mut err_sig = vec![zero; nc];

    let mut result = BlockResult {
        bits: 0,
        bit_errors: 0,
        symbols: 0,
        symbol_errors: 0,
        error_power: 0.0,
        radar: None,
        truth: *channel.truth(),
        diagnostics: Vec::new(),
        blocks: None,
    };

    for i in 0..ms {
        channel.comm_column(i, &mut hc);
        channel.radar_column(i, &mut hr);

        for s in own_syms.iter_mut() {
            *s = setup.constellation.point(rng.random_range(0..m));
        }
        for (l, s) in sent.iter_mut().zip(peer_syms.iter_mut()) {
            *l = rng.random_range(0..m);
            *s = setup.constellation.point(*l);
        }

        setup.own_book.spread_into(&own_syms, &mut own_tx)?;
        for ((e, t), h) in echo.iter_mut().zip(own_tx.iter_mut()).zip(&hr) {
            *t *= own_amp;
            *e = *t * h;
        }
        rx.reconstruct(&hc, &peer_syms, &mut y)?;

        if tdd {
            y_radar.copy_from_slice(&echo);
            if options.noise {
                for v in y.iter_mut() {
                    *v += complex_gaussian(rng, noise_var);
                }
                for v in y_radar.iter_mut() {
                    *v += complex_gaussian(rng, noise_var);
                }
            }
        } else {
            for (v, e) in y.iter_mut().zip(&echo) {
                *v += e;
            }
            if options.noise {
                for v in y.iter_mut() {
                    *v += complex_gaussian(rng, noise_var);
                }
            }
        }

        rx.demodulate(&y, &hc, i, &mut labels, &mut decided, &mut soft)?;
        let cancel_with = if options.genie { &peer_syms } else { &decided };
        if tdd {
            residual.copy_from_slice(&y_radar);
        } else {
            rx.cancel(&y, &hc, cancel_with, &mut residual)?;
        }

        let mut sym_bit_errors = 0u32;
        for (a, b) in labels.iter().zip(&sent) {
            let e = (a ^ b).count_ones();
            sym_bit_errors += e;
            if e != 0 {
                result.symbol_errors += 1;
            }
        }
        result.bit_errors += sym_bit_errors as u64;
        result.bits += (bps * n_peer) as u64;
        result.symbols += n_peer as u64;
        for ((e, d), s) in err_vec.iter_mut().zip(cancel_with).zip(&peer_syms) {
            *e = s - d;
        }
        result.error_power += energy(&err_vec);

        if options.diagnostics {
            let leaked = if tdd || err_vec.iter().all(|e| *e == zero) {
                0.0
            } else {
                rx.reconstruct(&hc, &err_vec, &mut err_sig)?;
                energy(&err_sig)
            };
            result.diagnostics.push(SymbolDiagnostics {
                symbol: i,
                bit_errors: sym_bit_errors,
                residual_energy: energy(&residual),
                error_prop_energy: leaked,
            });
        }
        if let (Some(t), Some(r)) = (tx_ref.as_mut(), residual_block.as_mut()) {
            t.column_mut(i).copy_from_slice(&own_tx);
            r.column_mut(i).copy_from_slice(&residual);
        }
        if let Some(e) = echo_block.as_mut() {
            e.column_mut(i).copy_from_slice(&echo);
            sent_all.extend_from_slice(&sent);
            decided_all.extend_from_slice(&labels);
        }
    }

    if options.radar {
        let (t, r) = (tx_ref.as_ref().unwrap(), residual_block.as_ref().unwrap());
        let (est, _) = radar::estimate(
            r,
            t,
            &setup.params,
            setup.geometry.carrier_hz,
            setup.geometry.c0,
            setup.peak_rule,
        )?;
        result.radar = Some(est);
    }
    if let (Some(tx_reference), Some(residual), Some(echo)) = (tx_ref, residual_block, echo_block) {
        result.blocks = Some(BlockData {
            tx_reference,
            echo,
            residual,
            decided_labels: decided_all,
            sent_labels: sent_all,
        });
    }
    Ok(result)
}
