use serde::{Deserialize, Serialize};

use super::pulses::PulsePair;
use crate::error::{Error, Result};

pub const MIN_BINS: usize = 5;
pub const MAX_BINS: usize = 30;

/// Second-moment statistics of the pulse pairs sharing one atom-number bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomBin {
    pub size: usize,
    /// Mean atom number (abscissa units) of the bin.
    pub atom_number: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov: f64,
    pub se_var1: f64,
    pub se_var2: f64,
    pub se_cov: f64,
    /// Empirical `var(φ₂ − ζφ₁)` with the bin's own `ζ = cov/var₁`.
    pub conditional: f64,
    pub se_conditional: f64,
}

/// Unbiased sample mean, variances and covariance of two series.
pub(crate) fn moments(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    let d = m - 1.0;
    (saa / d, sbb / d, sab / d)
}

/// Sorts pairs by atom number (`scale * atom_signal`) into `n_bins`
/// equal-population bins. Variances are divided by `variance_factor`.
pub fn bin_by_atom_number(
    pairs: &[PulsePair],
    n_bins: usize,
    scale: f64,
    variance_factor: f64,
) -> Result<Vec<AtomBin>> {
    if !(MIN_BINS..=MAX_BINS).contains(&n_bins) {
        return Err(Error::BinCount(n_bins));
    }
    let mut sorted: Vec<&PulsePair> = pairs.iter().collect();
    sorted.sort_by(|a, b| a.atom_signal.total_cmp(&b.atom_signal));
    let total = sorted.len();

    (0..n_bins)
        .map(|i| {
            let members = &sorted[i * total / n_bins..(i + 1) * total / n_bins];
            let m = members.len();
            if m < 2 {
                return Err(Error::EmptyBin { index: i, size: m });
            }
            let phi1: Vec<f64> = members.iter().map(|p| p.phi1).collect();
            let phi2: Vec<f64> = members.iter().map(|p| p.phi2).collect();
            let (v1, v2, c) = moments(&phi1, &phi2);
            let (var1, var2, cov) = (v1 / variance_factor, v2 / variance_factor, c / variance_factor);
            let zeta = if var1 > 0.0 { cov / var1 } else { 0.0 };
            let residual: Vec<f64> = phi1.iter().zip(&phi2).map(|(a, b)| b - zeta * a).collect();
            let (vr, _, _) = moments(&residual, &residual);
            let conditional = vr / variance_factor;
            let rel = (2.0 / (m as f64 - 1.0)).sqrt();
            Ok(AtomBin {
                size: m,
                atom_number: scale * members.iter().map(|p| p.atom_signal).sum::<f64>() / m as f64,
                var1,
                var2,
                cov,
                se_var1: var1 * rel,
                se_var2: var2 * rel,
                se_cov: ((var1 * var2 + cov * cov) / (m as f64 - 1.0)).sqrt(),
                conditional,
                se_conditional: conditional * rel,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn pair(phi1: f64, phi2: f64, atom_signal: f64) -> PulsePair {
        PulsePair {
            phi1,
            phi2,
            n: 1.0,
            atom_signal,
            is_reference: false,
        }
    }

    #[test]
    fn identical_pairs_have_zero_variance() {
        let pairs: Vec<_> = (0..50).map(|i| pair(0.3, -0.1, i as f64)).collect();
        for b in bin_by_atom_number(&pairs, 5, 1.0, 1.0).unwrap() {
            assert_eq!(b.size, 10);
            assert!(b.var1.abs() < 1e-30 && b.var2.abs() < 1e-30 && b.cov.abs() < 1e-30);
        }
    }

    #[test]
    fn known_variance_is_recovered() {
        let sigma2: f64 = 2.5e-7;
        let normal = Normal::new(0.0, sigma2.sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<_> = (0..5000)
            .map(|i| pair(normal.sample(&mut rng), normal.sample(&mut rng), i as f64))
            .collect();
        for b in bin_by_atom_number(&pairs, 10, 1.0, 1.0).unwrap() {
            assert!((b.var1 - sigma2).abs() < 3.0 * b.se_var1);
            assert!((b.var2 - sigma2).abs() < 3.0 * b.se_var2);
            assert!(b.cov.abs() < 3.0 * b.se_cov);
        }
    }

    #[test]
    fn bin_count_and_population_checks() {
        let pairs: Vec<_> = (0..9).map(|i| pair(i as f64, 0.0, i as f64)).collect();
        assert!(matches!(bin_by_atom_number(&pairs, 4, 1.0, 1.0), Err(Error::BinCount(4))));
        assert!(matches!(bin_by_atom_number(&pairs, 31, 1.0, 1.0), Err(Error::BinCount(31))));
        assert!(matches!(
            bin_by_atom_number(&pairs, 5, 1.0, 1.0),
            Err(Error::EmptyBin { .. })
        ));
    }

    #[test]
    fn scale_and_factor_apply() {
        let pairs: Vec<_> = (0..20).map(|i| pair(i as f64, -(i as f64), 2.0)).collect();
        let a = bin_by_atom_number(&pairs, 5, 1.0, 1.0).unwrap();
        let b = bin_by_atom_number(&pairs, 5, 10.0, 2.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(y.atom_number, 10.0 * x.atom_number);
            assert_eq!(y.var1, 0.5 * x.var1);
            assert_eq!(y.cov, 0.5 * x.cov);
        }
    }
}
