//! Dichromatic QND measurement of `J_z`.
//!
//! A measurement returns `φ = δn/n + 2k J_z` with shot noise of variance
//! `1/n`. The state is updated by Gaussian (Kalman) conditioning on `φ`, after
//! which the probe's decoherence shrinks the coherent fraction. The true
//! `J_z` of a run is a latent variable drawn once and then held fixed.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::CollectiveSpinState;

/// Upper bound on the per-pulse partition noise, as a fraction of `N_A/4`.
pub const MAX_PARTITION_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndPulseSpec {
    /// Total detected photosignal `n` setting the `1/n` shot-noise variance.
    pub photons_total: f64,
    /// Coupling `k` of the normalized signal to `ΔN = 2 J_z`.
    pub coupling: f64,
    /// Decoherence inflicted by the pulse.
    pub eta_per_pulse: f64,
    /// Extra `var(J_z)` per pulse from sublevel partition noise, in units of `N_A/4`.
    pub partition_fraction: f64,
    /// Extra `var(J_x)` per pulse from a differential light shift, in units of `N_A/4`.
    pub antisqueeze_fraction: f64,
}

impl QndPulseSpec {
    pub fn new(photons_total: f64, coupling: f64, eta_per_pulse: f64) -> Result<Self> {
        let spec = Self {
            photons_total,
            coupling,
            eta_per_pulse,
            partition_fraction: 0.0,
            antisqueeze_fraction: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photons_total > 0.0) {
            return Err(Error::param("photons_total", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.eta_per_pulse) {
            return Err(Error::param("eta_per_pulse", "must lie in [0, 1)"));
        }
        if !(0.0..=MAX_PARTITION_FRACTION).contains(&self.partition_fraction) {
            return Err(Error::param(
                "partition_fraction",
                format!("must lie in [0, {MAX_PARTITION_FRACTION}]"),
            ));
        }
        if !(self.antisqueeze_fraction >= 0.0) {
            return Err(Error::param("antisqueeze_fraction", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub phi: f64,
    /// True `J_z` of the run after this pulse (it moves only through partition noise).
    pub latent_jz: f64,
    pub posterior: CollectiveSpinState,
}

/// `κ² = n k² N_A`.
pub fn measurement_strength(n: f64, k: f64, atom_count: f64) -> f64 {
    n * k * k * atom_count
}

/// `ζ = κ² / (1 + κ²)`.
pub fn optimal_gain(kappa2: f64) -> f64 {
    kappa2 / (1.0 + kappa2)
}

/// `var(φ₂ − ζφ₁) = 1/n₂ + k² N_A / (1 + κ²)` with `κ² = n₁ k² N_A`.
pub fn conditional_variance(n1: f64, n2: f64, k: f64, atom_count: f64) -> Result<f64> {
    if !(n1 > 0.0 && n2 > 0.0) {
        return Err(Error::param("n1/n2", "photon numbers must be positive"));
    }
    let kappa2 = measurement_strength(n1, k, atom_count);
    Ok(1.0 / n2 + k * k * atom_count / (1.0 + kappa2))
}

/// One QND pulse. Pass `latent_jz = None` on the first pulse of a run to draw
/// the true `J_z` from the state's marginal; pass the returned value afterwards.
pub fn sample_measurement<R: Rng + ?Sized>(
    state: &CollectiveSpinState,
    latent_jz: Option<f64>,
    pulse: &QndPulseSpec,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    pulse.validate()?;
    let jz = match latent_jz {
        Some(j) => j,
        None => {
            let z: f64 = rng.sample(StandardNormal);
            state.mean.z + state.var_z().max(0.0).sqrt() * z
        }
    };
    let n = pulse.photons_total;
    let two_k = 2.0 * pulse.coupling;
    let shot: f64 = rng.sample(StandardNormal);
    let phi = shot / n.sqrt() + two_k * jz;

    // Scalar-observation Kalman update with H = (0, 0, 2k), R = 1/n.
    let mut post = state.clone();
    let pz = state.cov.column(2).into_owned();
    let innovation_var = two_k * two_k * pz.z + 1.0 / n;
    let gain = pz * (two_k / innovation_var);
    post.mean += gain * (phi - two_k * state.mean.z);
    post.cov -= gain * pz.transpose() * two_k;
    post.cov = (post.cov + post.cov.transpose()) * 0.5;

    let quarter_n = state.atom_count / 4.0;
    let mut jz_after = jz;
    if pulse.partition_fraction > 0.0 {
        let kick_var = pulse.partition_fraction * quarter_n;
        let kick: f64 = rng.sample(StandardNormal);
        jz_after += kick_var.sqrt() * kick;
        post.cov[(2, 2)] += kick_var;
    }
    if pulse.antisqueeze_fraction > 0.0 {
        post.cov[(0, 0)] += pulse.antisqueeze_fraction * quarter_n;
    }
    let posterior = post.shrink_coherence(pulse.eta_per_pulse)?;
    Ok(MeasurementOutcome {
        phi,
        latent_jz: jz_after,
        posterior,
    })
}

/// `η = 1 − (1 − η_ref)^{n_P / n_ref}`.
pub fn eta_from_photons(n_p: f64, eta_ref: f64, n_ref: f64) -> Result<f64> {
    if !(n_p >= 0.0) {
        return Err(Error::param("n_p", "must be non-negative"));
    }
    if !(0.0..1.0).contains(&eta_ref) {
        return Err(Error::param("eta_ref", "must lie in [0, 1)"));
    }
    if !(n_ref > 0.0) {
        return Err(Error::param("n_ref", "must be positive"));
    }
    Ok(-((n_p / n_ref) * (-eta_ref).ln_1p()).exp_m1())
}

/// Linear trade-off `κ² = C d η` between measurement strength and decoherence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffModel {
    pub optical_depth: f64,
    pub kappa2_per_eta: f64,
}

impl TradeoffModel {
    pub fn strength(&self) -> f64 {
        self.optical_depth * self.kappa2_per_eta
    }
}

/// `ξ(η) = [1 / (1 + C d η)] / (1 − η)²`.
pub fn xi_vs_eta(model: &TradeoffModel, eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::param("eta", "must lie in [0, 1)"));
    }
    let keep = 1.0 - eta;
    Ok(1.0 / ((1.0 + model.strength() * eta) * keep * keep))
}

/// Minimizes [`xi_vs_eta`] over `η ∈ [0, 1)` by golden-section search.
/// Returns `(η*, ξ_min)`.
pub fn find_optimal_eta(model: &TradeoffModel) -> Result<(f64, f64)> {
    if !(model.strength() >= 0.0) {
        return Err(Error::param("optical_depth·kappa2_per_eta", "must be non-negative"));
    }
    let xi = |e: f64| xi_vs_eta(model, e).expect("eta kept inside [0, 1)");
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0 - 1e-9);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (xi(c), xi(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = xi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = xi(d);
        }
    }
    let mut eta = 0.5 * (a + b);
    if xi(0.0) <= xi(eta) {
        eta = 0.0;
    }
    Ok((eta, xi(eta)))
}

/// Least-squares slope of `ln ξ_min` against `ln d` over a log-spaced grid of
/// optical depths in `[d_lo, d_hi]`.
pub fn xi_min_scaling(kappa2_per_eta: f64, d_lo: f64, d_hi: f64, points: usize) -> Result<f64> {
    if !(d_lo > 0.0 && d_hi > d_lo) || points < 2 {
        return Err(Error::param("d range", "need 0 < d_lo < d_hi and at least 2 points"));
    }
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let d = d_lo * (d_hi / d_lo).powf(t);
        let (_, xi_min) = find_optimal_eta(&TradeoffModel {
            optical_depth: d,
            kappa2_per_eta,
        })?;
        xs.push(d.ln());
        ys.push(xi_min.ln());
    }
    let m = points as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
