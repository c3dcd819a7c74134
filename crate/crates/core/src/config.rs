//! TOML configuration.
//!
//! Lengths are in meters and frequencies in MHz; every file carries a
//! `[units]` table declaring this so that a file written for other units is
//! rejected rather than silently misread.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atomic::{
    self, BalanceSearch, BeamGeometry, PolarizabilityQ, ProbeColor, TransitionLine,
};
use crate::error::{Error, Result};
use crate::qnd::{self, TradeoffModel};
use crate::sim::{CampaignConfig, DriftSpec, SimPhysics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub frequency: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "m".into(),
            frequency: "MHz".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineTable {
    pub lines: Vec<TransitionLine>,
    /// Shift this color's detunings so that its `Re Q` equals the other color's.
    #[serde(default)]
    pub balance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Photons {
    pub pulse_photons_per_color: f64,
    /// Pulses combined into one measurement at the working point.
    pub pulses_combined: usize,
    /// Reference-arm photons relative to probe-arm photons.
    pub reference_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decoherence {
    /// Measured `η` after `n_ref` probe photons.
    pub eta_ref: f64,
    pub n_ref: f64,
    /// Photon number `2 n_P` at which the beam-profile model is evaluated.
    pub predict_photons: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub partition_fraction: f64,
    pub antisqueeze_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub units: Units,
    pub wavelength: f64,
    pub gamma: f64,
    pub up: LineTable,
    pub down: LineTable,
    pub beam: BeamGeometry,
    pub photons: Photons,
    /// Atom number at which predictions are reported.
    pub atom_number: f64,
    /// Per-atom coupling used for predictions and simulation. When absent the
    /// geometric coupling from the polarizability is used.
    #[serde(default)]
    pub calibrated_coupling: Option<f64>,
    pub decoherence: Decoherence,
    pub tradeoff: TradeoffModel,
    pub channel: Channel,
    /// Largest observed single-pass phase, rad; feeds the phase-based atom-number estimate.
    #[serde(default)]
    pub phi_max: Option<f64>,
    #[serde(default)]
    pub campaign: CampaignConfig,
}

/// Photon-number-independent and -dependent quantities derived from a config.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub up: ProbeColor,
    pub down: ProbeColor,
    pub balance_offset: f64,
    pub q_up: PolarizabilityQ,
    pub q_down: PolarizabilityQ,
}

fn config_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Renames the field of an [`Error::InvalidParameter`] into a config path.
fn within(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => config_err(format!("{prefix}.{name}"), reason),
        other => config_err(prefix, other.to_string()),
    }
}

impl PhysicsConfig {
    /// Defaults at the paper's working point. The ↓ table mirrors the ↑
    /// table and is balanced at load time; the paper does not publish it.
    pub fn paper_defaults() -> Self {
        let lead = -101.0;
        Self {
            units: Units::default(),
            wavelength: 852.347e-9,
            gamma: 5.234,
            up: LineTable {
                lines: vec![
                    TransitionLine {
                        cg_weight: 5.0 / 9.0,
                        detuning: lead,
                    },
                    TransitionLine {
                        cg_weight: 1.0 / 9.0,
                        detuning: lead + 452.0,
                    },
                ],
                balance: false,
            },
            down: LineTable {
                lines: vec![
                    TransitionLine {
                        cg_weight: 5.0 / 9.0,
                        detuning: lead,
                    },
                    TransitionLine {
                        cg_weight: 1.0 / 9.0,
                        detuning: lead - 452.0,
                    },
                ],
                balance: true,
            },
            beam: BeamGeometry {
                waist: 27e-6,
                detection_efficiency: 0.63,
                interaction_length: 1.0e-3,
            },
            photons: Photons {
                pulse_photons_per_color: 1.83e6,
                pulses_combined: 4,
                reference_ratio: 100.0,
            },
            atom_number: 1.2e5,
            calibrated_coupling: Some(1.349_627_2e-6),
            decoherence: Decoherence {
                eta_ref: 0.11,
                n_ref: 7.4e6,
                predict_photons: 7.4e6,
            },
            tradeoff: TradeoffModel {
                optical_depth: 16.0,
                kappa2_per_eta: 1.0,
            },
            channel: Channel {
                partition_fraction: 0.01,
                antisqueeze_fraction: 0.0,
            },
            phi_max: Some(0.18),
            campaign: CampaignConfig {
                detector_noise_var: 2.5e5,
                drift: DriftSpec {
                    random_walk_step: 200.0,
                },
                atom_signal_noise: 1.0e-3 * 1.349_627_2e-6 * 1.2e5,
                ..CampaignConfig::default()
            },
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| {
            let field = e
                .span()
                .map(|sp| {
                    let line = s[..sp.start.min(s.len())].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<document>".into());
            config_err(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.units.length != "m" {
            return Err(config_err("units.length", format!("expected \"m\", got {:?}", self.units.length)));
        }
        if self.units.frequency != "MHz" {
            return Err(config_err(
                "units.frequency",
                format!("expected \"MHz\", got {:?}", self.units.frequency),
            ));
        }
        self.color("up", &self.up).validate().map_err(|e| within("up", e))?;
        self.color("down", &self.down).validate().map_err(|e| within("down", e))?;
        if self.up.balance && self.down.balance {
            return Err(config_err("down.balance", "only one color can be balanced"));
        }
        self.beam.validate().map_err(|e| within("beam", e))?;
        if !(self.photons.pulse_photons_per_color >= 0.0) {
            return Err(config_err("photons.pulse_photons_per_color", "must be non-negative"));
        }
        if !(1..=10).contains(&self.photons.pulses_combined) {
            return Err(config_err("photons.pulses_combined", "must lie in 1..=10"));
        }
        if !(self.photons.reference_ratio > 0.0) {
            return Err(config_err("photons.reference_ratio", "must be positive"));
        }
        if !(self.atom_number >= 0.0) {
            return Err(config_err("atom_number", "must be non-negative"));
        }
        if let Some(k) = self.calibrated_coupling {
            if !k.is_finite() {
                return Err(config_err("calibrated_coupling", "must be finite"));
            }
        }
        qnd::eta_from_photons(0.0, self.decoherence.eta_ref, self.decoherence.n_ref)
            .map_err(|e| within("decoherence", e))?;
        if !(self.decoherence.predict_photons >= 0.0) {
            return Err(config_err("decoherence.predict_photons", "must be non-negative"));
        }
        if !(self.tradeoff.optical_depth >= 0.0 && self.tradeoff.kappa2_per_eta >= 0.0) {
            return Err(config_err("tradeoff", "optical_depth and kappa2_per_eta must be non-negative"));
        }
        if !(0.0..=qnd::MAX_PARTITION_FRACTION).contains(&self.channel.partition_fraction) {
            return Err(config_err(
                "channel.partition_fraction",
                format!("must lie in [0, {}]", qnd::MAX_PARTITION_FRACTION),
            ));
        }
        if !(self.channel.antisqueeze_fraction >= 0.0) {
            return Err(config_err("channel.antisqueeze_fraction", "must be non-negative"));
        }
        self.campaign.validate().map_err(|e| within("campaign", e))?;
        Ok(())
    }

    /// Probe-arm photons of one color over one measurement of `P` pulses.
    pub fn probe_photons(&self) -> f64 {
        self.photons.pulses_combined as f64 * self.photons.pulse_photons_per_color
    }

    /// Normalization `n = 2 P n_pulse` of one combined measurement.
    pub fn measurement_photons(&self) -> f64 {
        2.0 * self.probe_photons()
    }

    fn color(&self, _which: &str, table: &LineTable) -> ProbeColor {
        let n_p = self.probe_photons();
        ProbeColor {
            lines: table.lines.clone(),
            gamma: self.gamma,
            wavelength: self.wavelength,
            n_p,
            n_r: self.photons.reference_ratio * n_p,
        }
    }

    /// Builds both colors, balancing the one marked `balance`.
    pub fn resolve(&self) -> Result<Resolved> {
        let mut up = self.color("up", &self.up);
        let mut down = self.color("down", &self.down);
        let mut balance_offset = 0.0;
        if self.down.balance {
            balance_offset = atomic::balance_detuning_within(&up, &down, BalanceSearch::default())?;
            down = down.shifted(balance_offset);
        } else if self.up.balance {
            balance_offset = atomic::balance_detuning_within(&down, &up, BalanceSearch::default())?;
            up = up.shifted(balance_offset);
        }
        Ok(Resolved {
            q_up: atomic::compute_q(&up),
            q_down: atomic::compute_q(&down),
            up,
            down,
            balance_offset,
        })
    }

    /// Coupling from geometry alone, `None` without photons.
    pub fn geometric_coupling(&self, q: PolarizabilityQ) -> Option<f64> {
        let n_p = self.probe_photons();
        if n_p == 0.0 {
            return None;
        }
        atomic::coupling_constant(q, &self.beam, n_p, self.photons.reference_ratio * n_p).ok()
    }

    /// `κ²` implied by the geometric coupling: both colors double `n` at fixed `k`.
    pub fn geometric_kappa2(&self, q: PolarizabilityQ) -> Option<f64> {
        let k = self.geometric_coupling(q)?;
        let n_p = self.probe_photons();
        let n = 2.0 * atomic::photon_normalization(&self.beam, n_p, self.photons.reference_ratio * n_p);
        Some(qnd::measurement_strength(n, k, self.atom_number))
    }

    pub fn coupling(&self, q: PolarizabilityQ) -> Option<f64> {
        self.calibrated_coupling.or_else(|| self.geometric_coupling(q))
    }

    /// Decoherence of one dichromatic pulse.
    pub fn eta_per_pulse(&self) -> Result<f64> {
        qnd::eta_from_photons(
            2.0 * self.photons.pulse_photons_per_color,
            self.decoherence.eta_ref,
            self.decoherence.n_ref,
        )
    }

    /// Simulation physics with the configured (or geometric) coupling.
    pub fn sim_physics(&self) -> Result<SimPhysics> {
        let resolved = self.resolve()?;
        let coupling = self
            .coupling(resolved.q_up)
            .ok_or_else(|| config_err("calibrated_coupling", "no coupling without probe photons"))?;
        Ok(SimPhysics {
            coupling,
            eta_per_pulse: self.eta_per_pulse()?,
            partition_fraction: self.channel.partition_fraction,
            antisqueeze_fraction: self.channel.antisqueeze_fraction,
        })
    }

    /// Campaign settings with the pulse photon number taken from `[photons]`.
    pub fn campaign(&self) -> CampaignConfig {
        CampaignConfig {
            photons_per_pulse_per_color: self.photons.pulse_photons_per_color,
            ..self.campaign.clone()
        }
    }
}
