//! Simulation configuration, loaded from TOML.

use std::path::Path;

use cdofdm_core::channel::{conjugate_beams, GeometryConfig, PathParams};
use cdofdm_core::constellation::QamConstellation;
use cdofdm_core::link::{CodeAssignment, LinkSetup, Scheme};
use cdofdm_core::ofdm::OfdmParams;
use cdofdm_core::radar::PeakRule;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    CdOfdm,
    Ofdm,
    TddOfdm,
}

impl SchemeName {
    pub fn scheme(self) -> Scheme {
        match self {
            SchemeName::CdOfdm => Scheme::CdOfdm,
            SchemeName::Ofdm => Scheme::Ofdm,
            SchemeName::TddOfdm => Scheme::TddOfdm,
        }
    }

    pub fn name(self) -> &'static str {
        self.scheme().name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    #[default]
    Shared,
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakRuleName {
    #[default]
    Floor,
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub length_m: f64,
    pub aoa_rad: f64,
    pub aod_rad: f64,
    pub comm_variance: f64,
    pub rcs_variance: f64,
}

/// Every knob of a run. Missing keys take the defaults, unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub scheme: SchemeName,
    /// Extra schemes swept alongside `scheme` for comparison.
    pub baselines: Vec<SchemeName>,

    pub subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    pub guard_time_s: f64,
    /// Symbols per radar block at full scale.
    pub symbols: usize,
    /// Symbols per block when `full_scale` is off.
    pub desk_symbols: usize,
    pub full_scale: bool,

    pub carrier_hz: f64,
    pub c0: f64,
    pub velocity_mps: f64,
    pub tx_elements: usize,
    pub rx_elements: usize,

    pub order: usize,
    /// Code channels of the sensing user (user 1).
    pub own_channels: usize,
    /// Code channels of the communicating peer (user 2).
    pub peer_channels: usize,
    pub own_power_w: f64,
    pub peer_power_w: f64,
    pub code_assignment: Assignment,
    pub peak_rule: PeakRuleName,

    pub sinr_db: Vec<f64>,
    /// Radar blocks per SINR point.
    pub trials: usize,
    /// Minimum number of bits per BER point.
    pub bits_per_point: u64,
    /// BER rows whose standard error exceeds this fraction of the BER are
    /// flagged under-sampled.
    pub ber_rel_precision: f64,
    /// Fraction of trials per point allowed to fail a numerical guard.
    pub erasure_budget: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dsss_switch_threshold_db: Option<f64>,

    pub aepp_orders: Vec<usize>,
    /// Code channel counts for the AEPP sweep; `subcarriers` means plain OFDM.
    pub aepp_channels: Vec<usize>,
    pub aepp_trials: usize,

    pub demo_sinr_db: f64,

    pub theorem_channels: usize,
    pub theorem_draws: u64,

    pub paths: Vec<PathConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let g = GeometryConfig::table_i();
        Self {
            scheme: SchemeName::CdOfdm,
            baselines: vec![SchemeName::Ofdm, SchemeName::TddOfdm],
            subcarriers: 1024,
            subcarrier_spacing_hz: 120e3,
            guard_time_s: 1.43e-6,
            symbols: 1024,
            desk_symbols: 256,
            full_scale: false,
            carrier_hz: g.carrier_hz,
            c0: g.c0,
            velocity_mps: g.velocity_mps,
            tx_elements: g.tx_elements,
            rx_elements: g.rx_elements,
            order: 4,
            own_channels: 1,
            peer_channels: 1,
            own_power_w: 1.0,
            peer_power_w: 1.0,
            code_assignment: Assignment::Shared,
            peak_rule: PeakRuleName::Floor,
            sinr_db: (-6..=6).map(|k| 5.0 * k as f64).collect(),
            trials: 200,
            bits_per_point: 2_000_000,
            ber_rel_precision: 0.1,
            erasure_budget: 0.01,
            seed: 1,
            dsss_switch_threshold_db: None,
            aepp_orders: vec![4, 16, 64],
            aepp_channels: vec![1, 511, 1024],
            aepp_trials: 4,
            demo_sinr_db: 20.0,
            theorem_channels: 511,
            theorem_draws: 1_000_000,
            paths: g
                .paths
                .iter()
                .map(|p| PathConfig {
                    length_m: p.length_m,
                    aoa_rad: p.aoa_rad,
                    aod_rad: p.aod_rad,
                    comm_variance: p.comm_variance,
                    rcs_variance: p.rcs_variance,
                })
                .collect(),
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| SimError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn block_symbols(&self) -> usize {
        if self.full_scale {
            self.symbols
        } else {
            self.desk_symbols.min(self.symbols)
        }
    }

    /// `scheme` followed by the baselines, without repeats.
    pub fn schemes(&self) -> Vec<SchemeName> {
        let mut out = vec![self.scheme];
        for &b in &self.baselines {
            if !out.contains(&b) {
                out.push(b);
            }
        }
        out
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                bad.push(format!("  {field}: {msg}"));
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nc = self.subcarriers;

        check(
            nc >= 2 && nc.is_power_of_two(),
            "subcarriers",
            "must be a power of two, at least 2",
        );
        check(
            pos(self.subcarrier_spacing_hz),
            "subcarrier_spacing_hz",
            "must be positive",
        );
        check(
            self.guard_time_s.is_finite() && self.guard_time_s >= 0.0,
            "guard_time_s",
            "must be non-negative",
        );
        check(self.symbols >= 1, "symbols", "must be at least 1");
        check(self.desk_symbols >= 1, "desk_symbols", "must be at least 1");
        check(pos(self.carrier_hz), "carrier_hz", "must be positive");
        check(pos(self.c0), "c0", "must be positive");
        check(
            self.velocity_mps.is_finite(),
            "velocity_mps",
            "must be finite",
        );
        check(self.tx_elements >= 1, "tx_elements", "must be at least 1");
        check(self.rx_elements >= 1, "rx_elements", "must be at least 1");
        check(
            !self.paths.is_empty(),
            "paths",
            "the line-of-sight path is required",
        );
        for (l, p) in self.paths.iter().enumerate() {
            check(
                pos(p.length_m),
                &format!("paths[{l}].length_m"),
                "must be positive",
            );
            check(
                p.aoa_rad.is_finite() && p.aod_rad.is_finite(),
                &format!("paths[{l}]"),
                "angles must be finite",
            );
            check(
                p.comm_variance >= 0.0 && p.comm_variance.is_finite(),
                &format!("paths[{l}].comm_variance"),
                "must be non-negative",
            );
            check(
                p.rcs_variance >= 0.0 && p.rcs_variance.is_finite(),
                &format!("paths[{l}].rcs_variance"),
                "must be non-negative",
            );
        }
        check(
            matches!(self.order, 4 | 16 | 64),
            "order",
            "must be 4, 16 or 64",
        );
        let uses_codes = self.schemes().contains(&SchemeName::CdOfdm);
        for (field, n) in [
            ("own_channels", self.own_channels),
            ("peer_channels", self.peer_channels),
        ] {
            check(n >= 1 && n <= nc, field, "must lie in 1..=subcarriers");
            if uses_codes {
                check(
                    n % 2 == 1,
                    field,
                    "cd-ofdm needs an odd number of code channels, otherwise spread symbols can be zero",
                );
            }
        }
        check(pos(self.own_power_w), "own_power_w", "must be positive");
        check(pos(self.peer_power_w), "peer_power_w", "must be positive");
        check(
            !self.sinr_db.is_empty(),
            "sinr_db",
            "must list at least one point",
        );
        check(
            self.sinr_db.iter().all(|s| s.is_finite()),
            "sinr_db",
            "values must be finite",
        );
        check(
            self.sinr_db.len() < u32::MAX as usize,
            "sinr_db",
            "too many points",
        );
        check(self.trials >= 1, "trials", "must be at least 1");
        check(self.trials < u32::MAX as usize, "trials", "too many trials");
        check(
            self.bits_per_point >= 1,
            "bits_per_point",
            "must be at least 1",
        );
        check(
            pos(self.ber_rel_precision),
            "ber_rel_precision",
            "must be positive",
        );
        check(
            (0.0..=1.0).contains(&self.erasure_budget),
            "erasure_budget",
            "must lie in [0, 1]",
        );
        if let Some(t) = self.dsss_switch_threshold_db {
            check(t.is_finite(), "dsss_switch_threshold_db", "must be finite");
        }
        check(
            self.aepp_orders.iter().all(|m| matches!(m, 4 | 16 | 64)),
            "aepp_orders",
            "orders must be 4, 16 or 64",
        );
        check(
            self.aepp_channels
                .iter()
                .all(|&n| n == nc || (n >= 1 && n < nc && n % 2 == 1)),
            "aepp_channels",
            "counts must be odd and below subcarriers, or equal to subcarriers for plain OFDM",
        );
        check(self.aepp_trials >= 1, "aepp_trials", "must be at least 1");
        check(
            self.demo_sinr_db.is_finite(),
            "demo_sinr_db",
            "must be finite",
        );
        check(
            self.theorem_channels >= 1 && self.theorem_channels <= nc,
            "theorem_channels",
            "must lie in 1..=subcarriers",
        );
        check(
            self.theorem_draws >= 1,
            "theorem_draws",
            "must be at least 1",
        );

        if bad.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config(bad))
        }
    }

    pub fn ofdm_params(&self) -> Result<OfdmParams> {
        Ok(OfdmParams::new(
            self.subcarriers,
            self.subcarrier_spacing_hz,
            self.guard_time_s,
            self.block_symbols(),
        )?)
    }

    pub fn geometry(&self) -> GeometryConfig {
        GeometryConfig {
            carrier_hz: self.carrier_hz,
            c0: self.c0,
            velocity_mps: self.velocity_mps,
            tx_elements: self.tx_elements,
            rx_elements: self.rx_elements,
            paths: self
                .paths
                .iter()
                .map(|p| PathParams {
                    length_m: p.length_m,
                    aoa_rad: p.aoa_rad,
                    aod_rad: p.aod_rad,
                    comm_variance: p.comm_variance,
                    rcs_variance: p.rcs_variance,
                })
                .collect(),
        }
    }

    pub fn peak_rule(&self) -> PeakRule {
        match self.peak_rule {
            PeakRuleName::Floor => PeakRule::Floor,
            PeakRuleName::Nearest => PeakRule::Nearest,
        }
    }

    /// Link setup for `scheme` with the configured channel counts.
    pub fn link(&self, scheme: SchemeName) -> Result<LinkSetup> {
        self.link_with_channels(scheme, self.own_channels, self.peer_channels, self.order)
    }

    pub fn link_with_channels(
        &self,
        scheme: SchemeName,
        own_channels: usize,
        peer_channels: usize,
        order: usize,
    ) -> Result<LinkSetup> {
        let geometry = self.geometry();
        let beams = conjugate_beams(&geometry);
        let assignment = match self.code_assignment {
            Assignment::Shared => CodeAssignment::Shared,
            Assignment::Disjoint => CodeAssignment::Disjoint,
        };
        let mut setup = LinkSetup::new(
            self.ofdm_params()?,
            geometry,
            beams,
            QamConstellation::new(order)?,
            scheme.scheme(),
            own_channels,
            peer_channels,
            assignment,
        )?
        .with_powers(self.own_power_w, self.peer_power_w)?;
        setup.peak_rule = self.peak_rule();
        Ok(setup)
    }
}
