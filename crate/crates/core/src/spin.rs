//! Gaussian moment model of the collective pseudo-spin.
//!
//! A state is its mean Bloch vector, the 3×3 covariance of the fluctuations
//! and a coherent fraction `1 − η` that scales the mean spin length seen by a
//! Ramsey measurement. Covariances are transported as vectors on a flat
//! tangent space; curvature of the Bloch sphere is neglected.
//!
//! Rotation convention: `rotate(axis, θ)` maps the mean by the right-handed
//! rotation matrix `R_axis(θ)`, i.e. the Schrödinger-picture action of
//! `exp(−iθ J_axis)`. With this convention the clock sequence
//! `exp(−iπ/2 J_x) exp(−iφ J_z) exp(+iπ/2 J_y)` yields
//! `J_z → cos φ J_y − sin φ J_z`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn unit(self) -> Vector3<f64> {
        match self {
            Axis::X => Vector3::x(),
            Axis::Y => Vector3::y(),
            Axis::Z => Vector3::z(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveSpinState {
    pub atom_count: f64,
    /// `1 − η`: fraction of atoms still coherently in the superposition.
    pub coherent_fraction: f64,
    /// ⟨(J_x, J_y, J_z)⟩ in atom units.
    pub mean: Vector3<f64>,
    /// Covariance of (J_x, J_y, J_z), atom² units.
    pub cov: Matrix3<f64>,
}

const DIRECTION_TOL: f64 = 1e-12;

impl CollectiveSpinState {
    /// Coherent spin state of `atom_count` atoms pointing along `direction`.
    pub fn new_css(atom_count: f64, direction: Vector3<f64>) -> Result<Self> {
        if !(atom_count > 0.0) || !atom_count.is_finite() {
            return Err(Error::param("atom_count", "must be positive and finite"));
        }
        let norm = direction.norm();
        if (norm - 1.0).abs() > DIRECTION_TOL {
            return Err(Error::NonUnitDirection(norm));
        }
        let projector = Matrix3::identity() - direction * direction.transpose();
        Ok(Self {
            atom_count,
            coherent_fraction: 1.0,
            mean: direction * (atom_count / 2.0),
            cov: projector * (atom_count / 4.0),
        })
    }

    pub fn var_z(&self) -> f64 {
        self.cov[(2, 2)]
    }

    pub fn rotate(&self, axis: Axis, angle: f64) -> Self {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis.unit()), angle);
        let m = r.matrix();
        let cov = m * self.cov * m.transpose();
        Self {
            atom_count: self.atom_count,
            coherent_fraction: self.coherent_fraction,
            mean: m * self.mean,
            // Re-symmetrize against rounding.
            cov: (cov + cov.transpose()) * 0.5,
        }
    }

    /// π/2 about y (negative sense), φ about z, π/2 about x.
    pub fn clock_sequence(&self, phi: f64) -> Self {
        use std::f64::consts::FRAC_PI_2;
        self.rotate(Axis::Y, -FRAC_PI_2)
            .rotate(Axis::Z, phi)
            .rotate(Axis::X, FRAC_PI_2)
    }

    /// Expected final `J_z` of the clock sequence, with the fringe scaled by the coherent fraction.
    pub fn ramsey_fringe(&self, phi: f64) -> f64 {
        self.coherent_fraction * phi.cos() * self.mean.y
    }

    /// `ξ = (δJ_⊥)² N_A / |⟨J⟩_eff|²`, with `|⟨J⟩_eff| = (1 − η) |⟨J⟩|`.
    ///
    /// `δJ_⊥` is the fluctuation along the part of ẑ orthogonal to the mean
    /// spin. For an equatorial mean this is exactly `δJ_z`; off the equator it
    /// keeps ξ invariant under rotations of the state.
    pub fn squeezing_parameter(&self) -> Result<f64> {
        let length = self.mean.norm();
        if length == 0.0 {
            return Err(Error::ZeroMeanVector);
        }
        let effective = self.coherent_fraction * length;
        let unit = self.mean / length;
        let mut readout = Vector3::z() - unit * unit.z;
        if readout.norm() < 1e-9 {
            readout = Vector3::x() - unit * unit.x;
        }
        let readout = readout.normalize();
        let variance = (readout.transpose() * self.cov * readout)[(0, 0)];
        Ok(variance * self.atom_count / (effective * effective))
    }

    /// Shrinks the coherent fraction by `1 − eta_increment`. Mean and covariance are untouched.
    pub fn shrink_coherence(&self, eta_increment: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta_increment) {
            return Err(Error::param("eta_increment", "must lie in [0, 1]"));
        }
        let mut out = self.clone();
        out.coherent_fraction *= 1.0 - eta_increment;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn css_along_y() {
        let s = CollectiveSpinState::new_css(4.0, Vector3::y()).unwrap();
        assert_eq!(s.mean, Vector3::new(0.0, 2.0, 0.0));
        assert_eq!(s.cov[(2, 2)], 1.0);
        assert_eq!(s.cov[(0, 0)], 1.0);
        assert_eq!(s.cov[(1, 1)], 0.0);
        assert_eq!(s.cov[(2, 2)] * s.cov[(0, 0)], 0.25 * s.mean.y * s.mean.y);

        let big = CollectiveSpinState::new_css(1.2e5, Vector3::y()).unwrap();
        assert_eq!(big.var_z(), 3.0e4);
    }

    #[test]
    fn css_rejects_bad_input() {
        assert!(matches!(
            CollectiveSpinState::new_css(10.0, Vector3::new(0.0, 1.0 + 1e-9, 0.0)),
            Err(Error::NonUnitDirection(_))
        ));
        assert!(CollectiveSpinState::new_css(0.0, Vector3::y()).is_err());
    }

    #[test]
    fn quarter_turns_compose_to_identity() {
        let s = CollectiveSpinState::new_css(100.0, Vector3::new(0.6, 0.0, 0.8)).unwrap();
        assert_eq!(s.rotate(Axis::X, 0.0), s);
        let mut r = s.clone();
        for _ in 0..4 {
            r = r.rotate(Axis::Z, FRAC_PI_2);
        }
        assert!((r.mean - s.mean).norm() < 1e-12);
        assert!((r.cov - s.cov).norm() < 1e-12);
    }

    #[test]
    fn south_pole_to_equator() {
        let s = CollectiveSpinState::new_css(1000.0, -Vector3::z()).unwrap();
        let r = s.rotate(Axis::X, FRAC_PI_2);
        assert!(r.mean.z.abs() < 1e-12);
        assert!((r.mean.norm() - 500.0).abs() < 1e-12);
    }

    #[test]
    fn clock_sequence_limits() {
        let s = CollectiveSpinState::new_css(100.0, Vector3::y()).unwrap();
        assert!((s.clock_sequence(0.0).mean.z - s.mean.y).abs() < 1e-12);
        let inv = s.clock_sequence(-FRAC_PI_2);
        assert!((inv.mean.z - s.mean.z).abs() < 1e-12);
        assert!((inv.var_z() - s.var_z()).abs() < 1e-12);
    }

    #[test]
    fn ramsey_fringe_values() {
        let s = CollectiveSpinState::new_css(100.0, Vector3::y()).unwrap();
        assert_eq!(s.ramsey_fringe(0.0), 50.0);
        assert!(s.ramsey_fringe(FRAC_PI_2).abs() < 1e-12);
        let d = s.shrink_coherence(0.2).unwrap();
        assert!((d.ramsey_fringe(0.3) / s.ramsey_fringe(0.3) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn squeezing_parameter_cases() {
        let s = CollectiveSpinState::new_css(1.2e5, Vector3::y()).unwrap();
        assert!((s.squeezing_parameter().unwrap() - 1.0).abs() < 1e-15);

        let mut sq = s.clone();
        sq.cov[(2, 2)] /= 1.0 + 3.2;
        let sq = sq.shrink_coherence(0.2).unwrap();
        let xi = sq.squeezing_parameter().unwrap();
        assert!((xi - (1.0 / 4.2) / 0.64).abs() < 1e-12);
        assert!((10.0 * xi.log10() - (-4.29)).abs() < 0.01);

        let nearly_gone = s.shrink_coherence(1.0 - 1e-9).unwrap();
        assert!(nearly_gone.squeezing_parameter().unwrap() > 1e17);

        let mut zero = s.clone();
        zero.mean = Vector3::zeros();
        assert!(matches!(zero.squeezing_parameter(), Err(Error::ZeroMeanVector)));
    }

    #[test]
    fn coherence_shrinks_multiplicatively() {
        let s = CollectiveSpinState::new_css(10.0, Vector3::y()).unwrap();
        assert_eq!(s.shrink_coherence(0.0).unwrap(), s);
        let t = s.shrink_coherence(0.1).unwrap().shrink_coherence(0.1).unwrap();
        assert!((t.coherent_fraction - 0.81).abs() < 1e-15);
        let u = s.shrink_coherence(0.11).unwrap();
        assert!((u.coherent_fraction - 0.89).abs() < 1e-15);
        assert!(s.shrink_coherence(1.5).is_err());
    }

    #[test]
    fn half_turn_flips_mean() {
        let s = CollectiveSpinState::new_css(10.0, Vector3::y()).unwrap();
        let r = s.rotate(Axis::X, PI);
        assert!((r.mean.y + 5.0).abs() < 1e-12);
    }
}
