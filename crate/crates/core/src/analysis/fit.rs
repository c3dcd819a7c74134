use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest condition number accepted for the scaled normal matrix.
const MAX_CONDITION: f64 = 1e12;

/// Weighted quadratic `y = a₀ + a₁ x + a₂ x²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadFit {
    pub coeffs: [f64; 3],
    /// Covariance of the coefficients.
    pub covariance: [[f64; 3]; 3],
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub dof: usize,
}

impl QuadFit {
    pub fn eval(&self, x: f64) -> f64 {
        let [a0, a1, a2] = self.coeffs;
        a0 + x * (a1 + x * a2)
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }

    /// Identically zero curve.
    pub fn zero() -> Self {
        Self {
            coeffs: [0.0; 3],
            covariance: [[0.0; 3]; 3],
            rss: 0.0,
            dof: 0,
        }
    }
}

/// Weighted least squares through the normal equations, with the abscissa
/// scaled to unit magnitude before forming them.
///
/// The coefficient covariance is `(XᵀWX)⁻¹` scaled by the reduced weighted
/// χ² of the residuals when there are spare degrees of freedom.
pub fn fit_quadratic(x: &[f64], y: &[f64], weights: &[f64]) -> Result<QuadFit> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::param("fit", "x, y and weights must have equal length"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::param("weights", "must be positive and finite"));
    }
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "{} distinct abscissae, need at least 3",
            distinct.len()
        )));
    }

    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(weights) {
        let u = xi / scale;
        let row = Vector3::new(1.0, u, u * u);
        normal += row * row.transpose() * wi;
        rhs += row * (wi * yi);
    }

    let eig = normal.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::RankDeficient(format!("condition number {:.3e}", hi / lo)));
    }
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal matrix not positive definite".into()))?;
    let b = chol.solve(&rhs);
    let inv = chol.inverse();

    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((&xi, &yi), &wi)| {
            let u = xi / scale;
            let r = yi - (b[0] + u * (b[1] + u * b[2]));
            wi * r * r
        })
        .sum();
    let dof = x.len() - 3;
    let chi2_red = if dof > 0 { rss / dof as f64 } else { 1.0 };

    let unscale = Vector3::new(1.0, 1.0 / scale, 1.0 / (scale * scale));
    let coeffs = b.component_mul(&unscale);
    let d = Matrix3::from_diagonal(&unscale);
    let cov = d * inv * d * chi2_red;
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = cov[(i, j)];
        }
    }
    Ok(QuadFit {
        coeffs: [coeffs[0], coeffs[1], coeffs[2]],
        covariance,
        rss,
        dof,
    })
}

/// Weighted straight line `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_sigma: f64,
}

pub fn fit_line(x: &[f64], y: &[f64], weights: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::param("fit", "x, y and weights must have equal length"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::param("weights", "must be positive and finite"));
    }
    let sw: f64 = weights.iter().sum();
    let mx = x.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() / sw;
    let my = y.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(weights).map(|(a, w)| w * (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::RankDeficient("fewer than 2 distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).zip(weights).map(|((a, b), w)| w * (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((a, b), w)| {
            let r = b - intercept - slope * a;
            w * r * r
        })
        .sum();
    let dof = x.len().saturating_sub(2);
    let chi2_red = if dof > 0 { rss / dof as f64 } else { 1.0 };
    Ok(LineFit {
        intercept,
        slope,
        slope_sigma: (chi2_red / sxx).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_is_recovered() {
        let truth = [3.1e-8, 1.82e-12, 4.0e-19];
        let x: Vec<f64> = (1..=12).map(|i| i as f64 * 1.0e4).collect();
        let y: Vec<f64> = x.iter().map(|&v| truth[0] + truth[1] * v + truth[2] * v * v).collect();
        let w: Vec<f64> = y.iter().map(|v| 1.0 / (v * v)).collect();
        let fit = fit_quadratic(&x, &y, &w).unwrap();
        for (i, t) in truth.iter().enumerate() {
            assert!(((fit.coeffs[i] - t) / t).abs() < 1e-10, "{i}: {:?}", fit.coeffs);
        }
    }

    #[test]
    fn three_points_interpolate() {
        let fit = fit_quadratic(&[0.0, 1.0, 2.0], &[1.0, 2.0, 5.0], &[1.0; 3]).unwrap();
        assert!((fit.coeffs[0] - 1.0).abs() < 1e-12);
        assert!(fit.coeffs[1].abs() < 1e-12);
        assert!((fit.coeffs[2] - 1.0).abs() < 1e-12);
        assert_eq!(fit.dof, 0);
    }

    #[test]
    fn too_few_distinct_points() {
        let err = fit_quadratic(&[1.0, 1.0, 2.0, 2.0], &[1.0; 4], &[1.0; 4]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }

    #[test]
    fn line_through_points() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 2.0 * v).collect();
        let fit = fit_line(&x, &y, &[1.0; 4]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 0.5).abs() < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0], &[1.0; 2]).is_err());
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(fit_quadratic(&[0.0, 1.0, 2.0], &[1.0; 3], &[1.0, 0.0, 1.0]).is_err());
    }
}
