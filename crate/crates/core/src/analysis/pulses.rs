use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::RunRecord;

/// Largest number of pulses combined into one measurement.
pub const MAX_COMBINED: usize = 10;

/// Two successive measurements of one run, each the normalized sum of `P` pulses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulsePair {
    pub phi1: f64,
    pub phi2: f64,
    /// Photon normalization `n = 2 P n_pulse`.
    pub n: f64,
    pub atom_signal: f64,
    pub is_reference: bool,
}

/// `φ₁ = (p₁ + … + p_P)/n`, `φ₂ = (p_{P+1} + … + p_{2P})/n`, `n = 2 P n_pulse`.
pub fn combine_pulses(run: &RunRecord, p: usize, photons_per_pulse_per_color: f64) -> Result<PulsePair> {
    let max = MAX_COMBINED.min(run.pulses.len() / 2);
    if p == 0 || p > max {
        return Err(Error::PulsesOutOfRange { p, max });
    }
    if !(photons_per_pulse_per_color > 0.0) {
        return Err(Error::param("photons_per_pulse_per_color", "must be positive"));
    }
    let n = 2.0 * p as f64 * photons_per_pulse_per_color;
    let first: f64 = run.pulses[..p].iter().sum();
    let second: f64 = run.pulses[p..2 * p].iter().sum();
    Ok(PulsePair {
        phi1: first / n,
        phi2: second / n,
        n,
        atom_signal: run.atom_signal,
        is_reference: run.is_reference,
    })
}

/// Records after previous-cycle subtraction, with the factor by which white
/// noise variances were inflated.
#[derive(Clone, Debug, PartialEq)]
pub struct Differenced {
    pub records: Vec<RunRecord>,
    pub variance_factor: f64,
}

/// Replaces every pulse value by its difference to the same slot of the
/// previous cycle and drops the first cycle.
///
/// The atom signal becomes the mean of the two runs' atom signals: the
/// differenced variance is `V(N) + V(N_prev)`, which for a noise model linear
/// in `N` equals `2 V((N + N_prev)/2)`. Hence variances divided by
/// `variance_factor = 2` are unbiased at the averaged atom number.
pub fn subtract_previous_cycle(records: &[RunRecord]) -> Result<Differenced> {
    let first_cycle = match records.iter().map(|r| r.cycle_id).min() {
        Some(c) => c,
        None => {
            return Ok(Differenced {
                records: Vec::new(),
                variance_factor: 2.0,
            })
        }
    };
    let index: HashMap<(u64, u8), &RunRecord> =
        records.iter().map(|r| ((r.cycle_id, r.slot), r)).collect();

    let mut out = Vec::with_capacity(records.len());
    for run in records.iter().filter(|r| r.cycle_id != first_cycle) {
        let prev = run
            .cycle_id
            .checked_sub(1)
            .and_then(|c| index.get(&(c, run.slot)))
            .ok_or(Error::MissingPredecessor {
                cycle: run.cycle_id,
                slot: run.slot,
            })?;
        if prev.pulses.len() != run.pulses.len() || prev.is_reference != run.is_reference {
            return Err(Error::MissingPredecessor {
                cycle: run.cycle_id,
                slot: run.slot,
            });
        }
        out.push(RunRecord {
            cycle_id: run.cycle_id,
            slot: run.slot,
            is_reference: run.is_reference,
            pulses: run.pulses.iter().zip(&prev.pulses).map(|(a, b)| a - b).collect(),
            atom_signal: 0.5 * (run.atom_signal + prev.atom_signal),
        });
    }
    Ok(Differenced {
        records: out,
        variance_factor: 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cycle: u64, slot: u8, pulses: Vec<f64>, atom_signal: f64) -> RunRecord {
        RunRecord {
            cycle_id: cycle,
            slot,
            is_reference: slot >= 4,
            pulses,
            atom_signal,
        }
    }

    #[test]
    fn single_pulse_blocks() {
        let r = run(0, 0, (1..=20).map(f64::from).collect(), 0.1);
        let pair = combine_pulses(&r, 1, 1.83e6).unwrap();
        let n = 2.0 * 1.83e6;
        assert_eq!(pair.n, n);
        assert_eq!(pair.phi1, 1.0 / n);
        assert_eq!(pair.phi2, 2.0 / n);
    }

    #[test]
    fn ten_pulse_blocks_use_all_pulses() {
        let r = run(0, 0, vec![1.0; 20], 0.1);
        let pair = combine_pulses(&r, 10, 1.83e6).unwrap();
        assert_eq!(pair.n, 2.0 * 10.0 * 1.83e6);
        assert_eq!(pair.phi1 * pair.n, 10.0);
        assert_eq!(pair.phi2 * pair.n, 10.0);
        assert!(combine_pulses(&r, 11, 1.83e6).is_err());
        assert!(combine_pulses(&r, 0, 1.83e6).is_err());
    }

    #[test]
    fn doubling_p_averages_blocks() {
        let pulses: Vec<f64> = (0..20).map(|i| ((i * 7919) % 113) as f64 - 50.0).collect();
        let r = run(0, 0, pulses, 0.0);
        let n_pulse = 1.0e6;
        for p in 1..=5 {
            let small = combine_pulses(&r, p, n_pulse).unwrap();
            let big = combine_pulses(&r, 2 * p, n_pulse).unwrap();
            // Sums of the two P-blocks make the first 2P-block.
            let sum_small = (small.phi1 + small.phi2) * small.n;
            assert!((big.phi1 * big.n - sum_small).abs() < 1e-9);
            // Normalized: φ₁(2P) is the mean of φ₁(P) and φ₂(P).
            assert!((big.phi1 - 0.5 * (small.phi1 + small.phi2)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_offset_cancels() {
        let records: Vec<RunRecord> = (0..3)
            .flat_map(|c| (0..7).map(move |s| run(c, s, vec![5.0 + s as f64; 4], 1.0)))
            .collect();
        let d = subtract_previous_cycle(&records).unwrap();
        assert_eq!(d.records.len(), 14);
        assert!(d.records.iter().all(|r| r.pulses.iter().all(|&p| p == 0.0)));
        assert_eq!(d.variance_factor, 2.0);
    }

    #[test]
    fn missing_predecessor_is_an_error() {
        let records = vec![run(0, 0, vec![1.0; 4], 1.0), run(1, 1, vec![1.0; 4], 1.0)];
        assert!(matches!(
            subtract_previous_cycle(&records),
            Err(Error::MissingPredecessor { cycle: 1, slot: 1 })
        ));
    }
}
