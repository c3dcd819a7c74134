//! Synthetic campaigns with the cycle structure of the experiment.
//!
//! Each MOT cycle interrogates four atomic ensembles (slots 0–3) and records
//! three empty-interferometer references (slots 4–6). Every run is a train of
//! pulses whose differential photon numbers `p_i` carry shot noise, detector
//! noise, a per-cycle drift offset and, for atom runs, the QND signal of a
//! latent `J_z` that is shared by all pulses of the run.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnd::{sample_measurement, QndPulseSpec};
use crate::spin::CollectiveSpinState;

pub const ATOM_SLOTS: u8 = 4;
pub const REFERENCE_SLOTS: u8 = 3;
pub const SLOTS_PER_CYCLE: u8 = ATOM_SLOTS + REFERENCE_SLOTS;

/// Distribution of `N_A` across atom runs, as fractions of `max_atoms`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomNumberModel {
    Uniform { lo_fraction: f64, hi_fraction: f64 },
    Fixed { fraction: f64 },
}

impl Default for AtomNumberModel {
    fn default() -> Self {
        AtomNumberModel::Uniform {
            lo_fraction: 0.1,
            hi_fraction: 1.0,
        }
    }
}

impl AtomNumberModel {
    fn draw<R: Rng + ?Sized>(&self, max_atoms: f64, rng: &mut R) -> f64 {
        match *self {
            AtomNumberModel::Uniform {
                lo_fraction,
                hi_fraction,
            } => max_atoms * rng.gen_range(lo_fraction..=hi_fraction),
            AtomNumberModel::Fixed { fraction } => max_atoms * fraction,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            AtomNumberModel::Uniform {
                lo_fraction,
                hi_fraction,
            } => lo_fraction > 0.0 && lo_fraction <= hi_fraction,
            AtomNumberModel::Fixed { fraction } => fraction > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("atom_number_model", "fractions must be positive and ordered"))
        }
    }
}

/// Per-cycle Gaussian random walk of an offset common to every pulse of the cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    /// Standard deviation of one step, photon counts.
    pub random_walk_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    /// Number of atom runs; four per MOT cycle.
    pub runs_per_campaign: usize,
    pub pulses_per_run: usize,
    pub photons_per_pulse_per_color: f64,
    pub pulse_interval_us: f64,
    pub pulse_duration_us: f64,
    /// Largest atom number the loading model produces.
    pub max_atoms: f64,
    pub atom_number_model: AtomNumberModel,
    pub drift: DriftSpec,
    /// Detector noise variance per pulse, photon counts².
    pub detector_noise_var: f64,
    /// Coefficient `v₂` of an atom-correlated classical noise term (variance `v₂ N_A²` in φ units).
    pub classical_noise_quadratic: f64,
    /// Standard deviation of the atom-number detection signal.
    pub atom_signal_noise: f64,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            runs_per_campaign: 2000,
            pulses_per_run: 20,
            photons_per_pulse_per_color: 1.83e6,
            pulse_interval_us: 20.0,
            pulse_duration_us: 10.0,
            max_atoms: 1.2e5,
            atom_number_model: AtomNumberModel::default(),
            drift: DriftSpec::default(),
            detector_noise_var: 0.0,
            classical_noise_quadratic: 0.0,
            atom_signal_noise: 0.0,
            seed: 0,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_campaign == 0 || !self.runs_per_campaign.is_multiple_of(ATOM_SLOTS as usize) {
            return Err(Error::param(
                "runs_per_campaign",
                format!("must be a positive multiple of {ATOM_SLOTS}"),
            ));
        }
        if self.pulses_per_run < 2 {
            return Err(Error::param("pulses_per_run", "at least 2 pulses are required"));
        }
        if !(self.photons_per_pulse_per_color > 0.0) {
            return Err(Error::param("photons_per_pulse_per_color", "must be positive"));
        }
        if !(self.max_atoms > 0.0) {
            return Err(Error::param("max_atoms", "must be positive"));
        }
        self.atom_number_model.validate()?;
        let non_negative = [
            ("drift.random_walk_step", self.drift.random_walk_step),
            ("detector_noise_var", self.detector_noise_var),
            ("classical_noise_quadratic", self.classical_noise_quadratic),
            ("atom_signal_noise", self.atom_signal_noise),
            ("pulse_interval_us", self.pulse_interval_us),
            ("pulse_duration_us", self.pulse_duration_us),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn cycles(&self) -> usize {
        self.runs_per_campaign / ATOM_SLOTS as usize
    }

    /// Detected photons of one dichromatic pulse, both colors.
    pub fn photons_per_pulse(&self) -> f64 {
        2.0 * self.photons_per_pulse_per_color
    }
}

/// Physics knobs of the simulated QND channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimPhysics {
    pub coupling: f64,
    pub eta_per_pulse: f64,
    pub partition_fraction: f64,
    pub antisqueeze_fraction: f64,
}

impl Default for SimPhysics {
    fn default() -> Self {
        Self {
            coupling: 0.0,
            eta_per_pulse: 0.0,
            partition_fraction: 0.0,
            antisqueeze_fraction: 0.0,
        }
    }
}

impl SimPhysics {
    fn pulse_spec(&self, photons: f64) -> Result<QndPulseSpec> {
        let spec = QndPulseSpec {
            photons_total: photons,
            coupling: self.coupling,
            eta_per_pulse: self.eta_per_pulse,
            partition_fraction: self.partition_fraction,
            antisqueeze_fraction: self.antisqueeze_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The analysis-facing part of a run: exactly what the campaign CSV holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cycle_id: u64,
    pub slot: u8,
    pub is_reference: bool,
    pub pulses: Vec<f64>,
    pub atom_signal: f64,
}

/// A simulated run with its hidden ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRun {
    pub record: RunRecord,
    pub true_atom_count: f64,
    /// `J_z` drawn at the first pulse; 0 for reference runs.
    pub latent_jz: f64,
    /// State after the last pulse; `None` for reference runs.
    pub final_state: Option<CollectiveSpinState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub runs: Vec<RawRun>,
}

impl Campaign {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }
}

/// Where a run sits in the campaign and the drift offset of its cycle.
#[derive(Clone, Copy, Debug)]
pub struct RunSlot {
    pub cycle_id: u64,
    pub slot: u8,
    pub drift_offset: f64,
}

pub fn simulate_run<R: Rng + ?Sized>(
    config: &CampaignConfig,
    physics: &SimPhysics,
    at: RunSlot,
    rng: &mut R,
) -> Result<RawRun> {
    let is_reference = at.slot >= ATOM_SLOTS;
    let n = config.photons_per_pulse();
    let pulse = physics.pulse_spec(n)?;
    let detector_sd = config.detector_noise_var.sqrt();

    let atoms = if is_reference {
        0.0
    } else {
        config.atom_number_model.draw(config.max_atoms, rng)
    };

    let mut pulses = Vec::with_capacity(config.pulses_per_run);
    let mut latent_first = 0.0;
    let mut final_state = None;

    if is_reference {
        for _ in 0..config.pulses_per_run {
            let shot: f64 = rng.sample(StandardNormal);
            let det: f64 = rng.sample(StandardNormal);
            pulses.push(n.sqrt() * shot + detector_sd * det + at.drift_offset);
        }
    } else {
        let classical_z: f64 = rng.sample(StandardNormal);
        let classical = config.classical_noise_quadratic.sqrt() * atoms * classical_z;
        let mut state = CollectiveSpinState::new_css(atoms, Vector3::y())?;
        let draw: f64 = rng.sample(StandardNormal);
        latent_first = state.mean.z + state.var_z().sqrt() * draw;
        let mut latent = Some(latent_first);
        for _ in 0..config.pulses_per_run {
            let out = sample_measurement(&state, latent, &pulse, rng)?;
            let det: f64 = rng.sample(StandardNormal);
            pulses.push(n * (out.phi + classical) + detector_sd * det + at.drift_offset);
            latent = Some(out.latent_jz);
            state = out.posterior;
        }
        final_state = Some(state);
    }

    let noise: f64 = rng.sample(StandardNormal);
    let atom_signal = physics.coupling * atoms + config.atom_signal_noise * noise;

    Ok(RawRun {
        record: RunRecord {
            cycle_id: at.cycle_id,
            slot: at.slot,
            is_reference,
            pulses,
            atom_signal,
        },
        true_atom_count: atoms,
        latent_jz: latent_first,
        final_state,
    })
}

/// Deterministic in `config.seed`: the drift walk uses stream 0 of the seed,
/// cycle `c` uses stream `c + 1`, so cycles can be simulated in parallel.
pub fn simulate_campaign(config: &CampaignConfig, physics: &SimPhysics) -> Result<Campaign> {
    config.validate()?;
    physics.pulse_spec(config.photons_per_pulse())?;
    let cycles = config.cycles();

    let mut drift_rng = ChaCha8Rng::seed_from_u64(config.seed);
    drift_rng.set_stream(0);
    let mut offset = 0.0;
    let offsets: Vec<f64> = (0..cycles)
        .map(|_| {
            let step: f64 = drift_rng.sample(StandardNormal);
            offset += config.drift.random_walk_step * step;
            offset
        })
        .collect();

    let per_cycle: Result<Vec<Vec<RawRun>>> = offsets
        .par_iter()
        .enumerate()
        .map(|(c, &drift_offset)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(c as u64 + 1);
            (0..SLOTS_PER_CYCLE)
                .map(|slot| {
                    let at = RunSlot {
                        cycle_id: c as u64,
                        slot,
                        drift_offset,
                    };
                    simulate_run(config, physics, at, &mut rng)
                })
                .collect()
        })
        .collect();

    Ok(Campaign {
        runs: per_cycle?.into_iter().flatten().collect(),
    })
}
