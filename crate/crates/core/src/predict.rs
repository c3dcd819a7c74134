//! Closed-form predictions for a physics config.

use serde::{Deserialize, Serialize};

use crate::analysis::atom_number_from_phase;
use crate::atomic::{self, PolarizabilityQ};
use crate::config::PhysicsConfig;
use crate::error::Result;
use crate::qnd::{self, TradeoffModel};

/// Quantities that need probe light are `None` when the photon numbers are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub q_up: PolarizabilityQ,
    pub q_down: PolarizabilityQ,
    /// Shift applied to the balanced color, MHz.
    pub balance_offset: f64,
    pub atom_number: f64,
    /// Photon normalization `n = 2 P n_pulse` of one measurement.
    pub measurement_photons: f64,
    pub coupling_geometric: Option<f64>,
    pub kappa2_geometric: Option<f64>,
    pub coupling: Option<f64>,
    pub kappa2: Option<f64>,
    pub zeta: Option<f64>,
    pub conditional_variance: Option<f64>,
    /// Atomic part of the conditional variance relative to projection noise.
    pub conditional_db: Option<f64>,
    /// Beam-profile decoherence after `predict_photons`.
    pub eta_predicted: Option<f64>,
    /// Decoherence of one measurement of `P` pulses.
    pub eta_working: Option<f64>,
    pub tradeoff: TradeoffModel,
    pub optimal_eta: f64,
    pub xi_min: f64,
    pub xi_min_db: f64,
    pub atom_number_from_phase: Option<f64>,
}

pub fn predict(cfg: &PhysicsConfig) -> Result<Prediction> {
    cfg.validate()?;
    let resolved = cfg.resolve()?;
    let n = cfg.measurement_photons();
    let lit = n > 0.0;
    let atoms = cfg.atom_number;

    let coupling = if lit { cfg.coupling(resolved.q_up) } else { None };
    let kappa2 = coupling.map(|k| qnd::measurement_strength(n, k, atoms));
    let conditional_variance = match coupling {
        Some(k) => Some(qnd::conditional_variance(n, n, k, atoms)?),
        None => None,
    };
    let conditional_db = match (coupling, conditional_variance) {
        (Some(k), Some(cv)) if k != 0.0 && atoms > 0.0 => {
            Some(10.0 * ((cv - 1.0 / n) / (k * k * atoms)).log10())
        }
        _ => None,
    };
    let eta_predicted = if cfg.decoherence.predict_photons > 0.0 {
        Some(atomic::predict_eta(
            &resolved.up,
            &resolved.down,
            &cfg.beam,
            cfg.decoherence.predict_photons,
        )?)
    } else {
        None
    };
    let eta_working = if lit {
        Some(qnd::eta_from_photons(n, cfg.decoherence.eta_ref, cfg.decoherence.n_ref)?)
    } else {
        None
    };
    let (optimal_eta, xi_min) = qnd::find_optimal_eta(&cfg.tradeoff)?;
    let atom_number_from_phase = match cfg.phi_max {
        Some(phi) => Some(atom_number_from_phase(phi, resolved.q_up, cfg.beam.waist)?),
        None => None,
    };

    Ok(Prediction {
        q_up: resolved.q_up,
        q_down: resolved.q_down,
        balance_offset: resolved.balance_offset,
        atom_number: atoms,
        measurement_photons: n,
        coupling_geometric: cfg.geometric_coupling(resolved.q_up),
        kappa2_geometric: cfg.geometric_kappa2(resolved.q_up),
        coupling,
        kappa2,
        zeta: kappa2.map(qnd::optimal_gain),
        conditional_variance,
        conditional_db,
        eta_predicted,
        eta_working,
        tradeoff: cfg.tradeoff,
        optimal_eta,
        xi_min,
        xi_min_db: 10.0 * xi_min.log10(),
        atom_number_from_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults() {
        let p = predict(&PhysicsConfig::paper_defaults()).unwrap();
        assert!((p.kappa2.unwrap() - 3.2).abs() < 1e-4);
        assert!((p.conditional_db.unwrap() + 6.23).abs() < 0.05);
        assert!((p.eta_predicted.unwrap() - 0.17).abs() < 0.005);
        assert!((p.atom_number_from_phase.unwrap() - 1.8e5).abs() < 0.05e5);
    }

    #[test]
    fn dark_config_predicts_nothing() {
        let mut cfg = PhysicsConfig::paper_defaults();
        cfg.photons.pulse_photons_per_color = 0.0;
        cfg.decoherence.predict_photons = 0.0;
        let p = predict(&cfg).unwrap();
        assert!(p.coupling.is_none() && p.kappa2.is_none() && p.zeta.is_none());
        assert!(p.conditional_variance.is_none() && p.conditional_db.is_none());
        assert!(p.eta_predicted.is_none() && p.eta_working.is_none());
        assert!(p.coupling_geometric.is_none() && p.kappa2_geometric.is_none());
    }
}
