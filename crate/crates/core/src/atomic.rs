//! Dispersive atom–light response of a probe color.
//!
//! Lengths are in meters, frequencies (linewidth and detunings) in MHz. Only
//! the ratio detuning/linewidth enters the polarizability, so any common
//! frequency unit works as long as it is used consistently.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// One optical transition reachable by a probe color.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    /// Clebsch–Gordan weight of the transition, in `[0, 1]`.
    pub cg_weight: f64,
    /// Detuning from line center, MHz.
    pub detuning: f64,
}

impl TransitionLine {
    pub fn new(cg_weight: f64, detuning: f64) -> Result<Self> {
        let line = Self {
            cg_weight,
            detuning,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cg_weight) {
            return Err(Error::param("cg_weight", format!("{} not in [0, 1]", self.cg_weight)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::param("detuning", "must be finite"));
        }
        Ok(())
    }
}

/// A probe color: its transition table plus the photon budget of one measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeColor {
    pub lines: Vec<TransitionLine>,
    /// Natural linewidth, MHz.
    pub gamma: f64,
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Probe-arm photons interacting with the atoms.
    pub n_p: f64,
    /// Detected reference-arm photons.
    pub n_r: f64,
}

impl ProbeColor {
    pub fn validate(&self) -> Result<()> {
        if self.lines.is_empty() {
            return Err(Error::param("lines", "at least one transition line is required"));
        }
        for line in &self.lines {
            line.validate()?;
        }
        if !(self.gamma > 0.0) {
            return Err(Error::param("gamma", "must be positive"));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::param("wavelength", "must be positive"));
        }
        if !(self.n_p >= 0.0 && self.n_r >= 0.0) {
            return Err(Error::param("photons", "photon counts must be non-negative"));
        }
        Ok(())
    }

    /// Returns a copy with every line detuning shifted by `offset` MHz.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        for line in &mut out.lines {
            line.detuning += offset;
        }
        out
    }

    /// The line with the largest weight; balancing keeps it on its side of resonance.
    fn lead_line(&self) -> TransitionLine {
        *self
            .lines
            .iter()
            .max_by(|a, b| a.cg_weight.total_cmp(&b.cg_weight))
            .expect("validated color has lines")
    }
}

/// Gaussian probe beam and detection geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Beam waist `w`, m.
    pub waist: f64,
    /// Probability that a photon which interacted with the atoms is detected.
    pub detection_efficiency: f64,
    /// Interaction length, m.
    pub interaction_length: f64,
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0) {
            return Err(Error::param("waist", "must be positive"));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(Error::param("detection_efficiency", "must lie in (0, 1]"));
        }
        if !(self.interaction_length > 0.0) {
            return Err(Error::param("interaction_length", "must be positive"));
        }
        Ok(())
    }

    /// Peak of the normalized intensity profile, `2 / (π w²)`.
    pub fn peak_intensity(&self) -> f64 {
        2.0 / (PI * self.waist * self.waist)
    }

    /// Normalized intensity profile `I_P(r)`; integrates to one over the plane.
    pub fn intensity(&self, r: f64) -> f64 {
        self.peak_intensity() * (-2.0 * r * r / (self.waist * self.waist)).exp()
    }

    /// Beam cross section `π w²`.
    pub fn area(&self) -> f64 {
        PI * self.waist * self.waist
    }
}

/// Complex polarizability `Q` (m²). Real part gives the phase shift, imaginary part absorption.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizabilityQ {
    pub re: f64,
    pub im: f64,
}

impl PolarizabilityQ {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for PolarizabilityQ {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

/// `Q = −(3λ²/4π) Σ ℘_l / (Δ_l/γ + i/2)`.
pub fn compute_q(color: &ProbeColor) -> PolarizabilityQ {
    let prefactor = -3.0 * color.wavelength * color.wavelength / (4.0 * PI);
    let sum: Complex64 = color
        .lines
        .iter()
        .map(|l| l.cg_weight / Complex64::new(l.detuning / color.gamma, 0.5))
        .sum();
    (sum * prefactor).into()
}

/// Search window for [`balance_detuning`], MHz.
#[derive(Clone, Copy, Debug)]
pub struct BalanceSearch {
    pub max_shift: f64,
    pub grid_points: usize,
}

impl Default for BalanceSearch {
    fn default() -> Self {
        Self {
            max_shift: 2000.0,
            grid_points: 4000,
        }
    }
}

/// Shift (MHz) to add to every detuning of `movable` so that `Re Q_movable = Re Q_fixed`.
pub fn balance_detuning(fixed: &ProbeColor, movable: &ProbeColor) -> Result<f64> {
    balance_detuning_within(fixed, movable, BalanceSearch::default())
}

pub fn balance_detuning_within(
    fixed: &ProbeColor,
    movable: &ProbeColor,
    search: BalanceSearch,
) -> Result<f64> {
    fixed.validate()?;
    movable.validate()?;
    let target = compute_q(fixed).re;
    let residual = |s: f64| compute_q(&movable.shifted(s)).re - target;

    let r0 = residual(0.0);
    if r0 == 0.0 {
        return Ok(0.0);
    }

    // Keep the lead line at least one linewidth away from resonance on its own side.
    let lead = movable.lead_line();
    let (mut lo, mut hi) = (-search.max_shift, search.max_shift);
    if lead.detuning > 0.0 {
        lo = lo.max(-lead.detuning + movable.gamma);
    } else if lead.detuning < 0.0 {
        hi = hi.min(-lead.detuning - movable.gamma);
    }
    if lo >= hi {
        return Err(Error::NoBracket { lo, hi });
    }

    // Scan outward from zero and take the sign change nearest the starting point.
    let step = (hi - lo) / search.grid_points as f64;
    let mut best: Option<(f64, f64)> = None;
    for dir in [1.0, -1.0] {
        let (mut a, mut fa) = (0.0_f64, r0);
        loop {
            let b = a + dir * step;
            if b > hi || b < lo {
                break;
            }
            let fb = residual(b);
            if fa.signum() != fb.signum() {
                if best.is_none_or(|(_, prev)| b.abs() < prev.abs()) {
                    best = Some((a, b));
                }
                break;
            }
            a = b;
            fa = fb;
        }
    }
    let (mut a, mut b) = best.ok_or(Error::NoBracket { lo, hi })?;
    let mut fa = residual(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let fm = residual(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Total photosignal `n = 2 (n_R + t n_P)`.
pub fn photon_normalization(geom: &BeamGeometry, n_p: f64, n_r: f64) -> f64 {
    2.0 * (n_r + geom.detection_efficiency * n_p)
}

/// Interferometer fringe amplitude `ñ = √(t n_R n_P)`.
pub fn fringe_amplitude(geom: &BeamGeometry, n_p: f64, n_r: f64) -> f64 {
    (geom.detection_efficiency * n_r * n_p).sqrt()
}

/// Per-atom coupling `k = ñ Re Q / (n π w²)` of the normalized differential signal.
pub fn coupling_constant(q: PolarizabilityQ, geom: &BeamGeometry, n_p: f64, n_r: f64) -> Result<f64> {
    let n = photon_normalization(geom, n_p, n_r);
    if n == 0.0 {
        return Err(Error::param("n", "total photosignal is zero"));
    }
    Ok(fringe_amplitude(geom, n_p, n_r) * q.re / (n * geom.area()))
}

/// Coupling under which the atom signal equals the single-pass probe phase,
/// `φ = N Re Q / (2π w²)`, the convention of the phase-based atom-number estimate.
pub fn phase_coupling(q: PolarizabilityQ, geom: &BeamGeometry) -> f64 {
    q.re / (2.0 * geom.area())
}

/// Phase shift `θ = ½ n_A Re Q`.
pub fn phase_shift(q: PolarizabilityQ, column_density: f64) -> f64 {
    0.5 * column_density * q.re
}

/// Absorption exponent `α = n_A Im Q`.
pub fn absorption(q: PolarizabilityQ, column_density: f64) -> f64 {
    column_density * q.im
}

/// Projection-noise variance of the differential photon number for a CSS,
/// `ñ² (Re Q)² n_A / (π w²)`.
pub fn css_signal_variance(q: PolarizabilityQ, geom: &BeamGeometry, column_density: f64, fringe: f64) -> f64 {
    fringe * fringe * q.re * q.re * column_density / geom.area()
}

/// Relative tolerance of the radial quadrature in [`predict_eta`].
pub const ETA_QUADRATURE_TOL: f64 = 1e-10;

/// Decoherence fraction after `total_photons` (= 2 n_P, both colors) pass the cloud.
///
/// The beam-profile-weighted fraction of atoms left in the superposition is
/// integrated radially; the angular integral is done analytically.
pub fn predict_eta(
    up: &ProbeColor,
    down: &ProbeColor,
    geom: &BeamGeometry,
    total_photons: f64,
) -> Result<f64> {
    if !(total_photons >= 0.0) {
        return Err(Error::param("total_photons", "must be non-negative"));
    }
    if total_photons == 0.0 {
        return Ok(0.0);
    }
    let rate = total_photons * (compute_q(up).im + compute_q(down).im) / 4.0;
    // ∫ I dA = 1, so η = ∫ I (1 − e^{−rate·I}) dA; expm1 keeps small η accurate.
    let integrand = |r: f64| {
        let i = geom.intensity(r);
        -2.0 * PI * r * i * (-rate * i).exp_m1()
    };
    // Beyond ten waists the profile is below e^{-200}.
    let eta = quadrature::integrate(integrand, 0.0, 10.0 * geom.waist, ETA_QUADRATURE_TOL).value;
    Ok(eta.clamp(0.0, 1.0))
}
