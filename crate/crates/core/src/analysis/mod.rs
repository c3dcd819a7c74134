//! Noise analysis of a campaign: pulse combining, previous-cycle
//! differencing, atom-number binning, quadratic fits of the variance `V(N)`
//! and covariance `C(N)`, the conditionally reduced variance `R(N)` and the
//! squeezing metric.

pub mod binning;
pub mod fit;
pub mod pulses;

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use binning::{bin_by_atom_number, AtomBin, MAX_BINS, MIN_BINS};
pub use fit::{fit_line, fit_quadratic, LineFit, QuadFit};
pub use pulses::{combine_pulses, subtract_previous_cycle, Differenced, PulsePair, MAX_COMBINED};

use crate::atomic::PolarizabilityQ;
use crate::error::{Error, Result};
use crate::qnd;
use crate::sim::RunRecord;

/// `R(N) = V(N) (1 − (C(N)/V(N))²)`.
pub fn conditional_reduced_curve(v: &QuadFit, c: &QuadFit, n: f64) -> Result<f64> {
    let vn = v.eval(n);
    if !(vn > 0.0) {
        return Err(Error::NonPositive(format!("V({n:.4e}) = {vn:.4e}")));
    }
    let r = c.eval(n) / vn;
    Ok(vn * (1.0 - r * r))
}

/// `10 log₁₀((R(N_max) − R(0))/(v₁ N_max) · (1 − η_se)^{−2 n_probe/n_se})`.
pub fn squeezing_metric(
    v: &QuadFit,
    c: &QuadFit,
    n_max: f64,
    n_probe: f64,
    eta_se: f64,
    n_se: f64,
) -> Result<f64> {
    let conditional = conditional_db(v, c, n_max)?;
    let eta = qnd::eta_from_photons(n_probe, eta_se, n_se)?;
    Ok(conditional + coherence_penalty_db(eta))
}

/// `10 log₁₀((R(N_max) − R(0))/(v₁ N_max))`.
pub fn conditional_db(v: &QuadFit, c: &QuadFit, n_max: f64) -> Result<f64> {
    let projection = v.coeffs[1] * n_max;
    if !(projection > 0.0) {
        return Err(Error::NonPositive(format!("v1·N_max = {projection:.4e}")));
    }
    let atomic = conditional_reduced_curve(v, c, n_max)? - conditional_reduced_curve(v, c, 0.0)?;
    if !(atomic > 0.0) {
        return Err(Error::NonPositive(format!("R(N_max) − R(0) = {atomic:.4e}")));
    }
    Ok(10.0 * (atomic / projection).log10())
}

/// `−20 log₁₀(1 − η)`.
fn coherence_penalty_db(eta: f64) -> f64 {
    -20.0 * (1.0 - eta).log10()
}

/// `N_max = φ_max / (d var / d φ)`.
pub fn atom_number_from_slope(var_slope: f64, phi_max: f64) -> Result<f64> {
    if !(var_slope > 0.0) {
        return Err(Error::NonPositive(format!("variance slope {var_slope:.4e}")));
    }
    Ok(phi_max / var_slope)
}

/// `N_max = φ_max · 2π w² / Re Q`.
pub fn atom_number_from_phase(phi_max: f64, q: PolarizabilityQ, waist: f64) -> Result<f64> {
    if q.re == 0.0 {
        return Err(Error::param("q.re", "Re Q must be non-zero"));
    }
    Ok(phi_max * 2.0 * PI * waist * waist / q.re)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub pulses_combined: usize,
    pub bins: usize,
    pub differencing: bool,
    pub photons_per_pulse_per_color: f64,
    /// Per-atom coupling of `atom_signal`. Without it the atom-number axis is
    /// calibrated from the projection-noise slope.
    pub coupling: Option<f64>,
    pub eta_se: f64,
    pub n_se: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pulses_combined: 4,
            bins: 10,
            differencing: true,
            photons_per_pulse_per_color: 1.83e6,
            coupling: None,
            eta_se: 0.11,
            n_se: 7.4e6,
        }
    }
}

/// How `atom_signal` is turned into an atom number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AtomScale {
    Known { coupling: f64 },
    /// Slope of the pooled variance against `atom_signal`.
    SelfCalibrated { slope: f64 },
    /// No usable slope; the axis stays in signal units.
    Signal,
}

impl AtomScale {
    pub fn factor(&self) -> f64 {
        match *self {
            AtomScale::Known { coupling } => 1.0 / coupling,
            AtomScale::SelfCalibrated { slope } => 1.0 / slope,
            AtomScale::Signal => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Detector noise `d₀` of one combined measurement, φ units.
    pub detector: f64,
    /// `v₀ − |c₀| − d₀`.
    pub light_shot: f64,
    pub projection_slope: f64,
    pub projection_slope_sigma: f64,
    pub classical_quadratic: f64,
    pub classical_quadratic_sigma: f64,
    pub v0: f64,
    pub c0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub pulses_combined: usize,
    pub bins: usize,
    /// Probe photons `2 P n_pulse` per measurement.
    pub n_probe: f64,
    pub eta: f64,
    pub kappa2: f64,
    pub zeta: f64,
    pub atom_number_max: f64,
    pub conditional_db: f64,
    pub xi_db: f64,
    pub conditional_db_mean: f64,
    pub conditional_db_std: f64,
    pub xi_db_mean: f64,
    pub xi_db_std: f64,
    /// Bin counts in `5..=30` that entered the mean and spread.
    pub bin_counts_used: usize,
}

/// Slope of the variance of runs without atoms against their atom signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSlope {
    pub slope: f64,
    pub sigma: f64,
    pub runs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomNumberCheck {
    /// Mean atom signal of the rightmost bin.
    pub phi_max: f64,
    /// Straight-line slope of the pooled variance against the atom signal.
    pub var_slope: f64,
    pub var_slope_sigma: f64,
    pub atom_number_from_slope: f64,
}

/// Atom number of the rightmost bin from the variance slope, with bins in
/// atom-signal units.
pub fn slope_estimate(bins: &[AtomBin]) -> Result<AtomNumberCheck> {
    let mut x = Vec::with_capacity(2 * bins.len());
    let mut y = Vec::with_capacity(2 * bins.len());
    let mut w = Vec::with_capacity(2 * bins.len());
    for b in bins {
        for (v, se) in [(b.var1, b.se_var1), (b.var2, b.se_var2)] {
            x.push(b.atom_number);
            y.push(v);
            w.push(1.0 / (se * se));
        }
    }
    let first = fit_line(&x, &y, &w)?;
    // Second pass with standard errors from the fitted line.
    for ((wi, &xi), b) in w.iter_mut().zip(&x).zip(bins.iter().flat_map(|b| [b, b])) {
        let v = first.intercept + first.slope * xi;
        if v > 0.0 {
            *wi = (b.size as f64 - 1.0) / (2.0 * v * v);
        }
    }
    let line = fit_line(&x, &y, &w)?;
    let phi_max = bins.last().map_or(0.0, |b| b.atom_number);
    Ok(AtomNumberCheck {
        phi_max,
        var_slope: line.slope,
        var_slope_sigma: line.slope_sigma,
        atom_number_from_slope: atom_number_from_slope(line.slope, phi_max)?,
    })
}

/// One fitted `(P, K)` analysis point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub pulses_combined: usize,
    pub bins: Vec<AtomBin>,
    pub v_fit: QuadFit,
    pub c_fit: QuadFit,
}

impl FitPoint {
    pub fn atom_number_max(&self) -> f64 {
        self.bins.last().map_or(0.0, |b| b.atom_number)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: AnalysisConfig,
    pub atom_runs: usize,
    pub reference_runs: usize,
    pub variance_factor: f64,
    pub atom_scale: AtomScale,
    pub noise_budget: NoiseBudget,
    pub fit: FitPoint,
    pub reference_slope: Option<ReferenceSlope>,
    pub atom_number_check: Option<AtomNumberCheck>,
    pub squeezing: Option<SqueezingReport>,
    pub sweep: Vec<SqueezingReport>,
    pub warnings: Vec<String>,
}

/// Campaign after differencing, split into atom and reference runs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub atom: Vec<RunRecord>,
    pub reference: Vec<RunRecord>,
    pub variance_factor: f64,
}

pub fn prepare(records: &[RunRecord], differencing: bool) -> Result<Prepared> {
    let (records, variance_factor) = if differencing {
        let d = subtract_previous_cycle(records)?;
        (d.records, d.variance_factor)
    } else {
        (records.to_vec(), 1.0)
    };
    let (reference, atom): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.is_reference);
    Ok(Prepared {
        atom,
        reference,
        variance_factor,
    })
}

fn combine_all(records: &[RunRecord], p: usize, n_pulse: f64) -> Result<Vec<PulsePair>> {
    records.iter().map(|r| combine_pulses(r, p, n_pulse)).collect()
}

fn fit_pass(bins: &[AtomBin], se: impl Fn(&AtomBin) -> (f64, f64, f64)) -> Result<(QuadFit, QuadFit)> {
    let mut x = Vec::with_capacity(2 * bins.len());
    let mut y = Vec::with_capacity(2 * bins.len());
    let mut w = Vec::with_capacity(2 * bins.len());
    let mut wc = Vec::with_capacity(bins.len());
    for b in bins {
        let (se1, se2, sec) = se(b);
        for (v, s) in [(b.var1, se1), (b.var2, se2)] {
            x.push(b.atom_number);
            y.push(v);
            w.push(1.0 / (s * s));
        }
        wc.push(1.0 / (sec * sec));
    }
    let v_fit = fit_quadratic(&x, &y, &w)?;
    let xc: Vec<f64> = bins.iter().map(|b| b.atom_number).collect();
    let yc: Vec<f64> = bins.iter().map(|b| b.cov).collect();
    let c_fit = fit_quadratic(&xc, &yc, &wc)?;
    Ok((v_fit, c_fit))
}

/// Fits `V` to the pooled `var(φ₁)`, `var(φ₂)` points and `C` to the covariances.
///
/// The first pass weights each bin by its own standard errors. Those favour
/// bins that fluctuated low, so a second pass recomputes the standard errors
/// from the fitted curves.
pub fn fit_bins(bins: &[AtomBin]) -> Result<(QuadFit, QuadFit)> {
    let (v0, c0) = fit_pass(bins, |b| (b.se_var1, b.se_var2, b.se_cov))?;
    if bins.iter().any(|b| !(v0.eval(b.atom_number) > 0.0)) {
        return Ok((v0, c0));
    }
    fit_pass(bins, |b| {
        let v = v0.eval(b.atom_number);
        let c = c0.eval(b.atom_number);
        let dof = b.size as f64 - 1.0;
        let se_v = v * (2.0 / dof).sqrt();
        (se_v, se_v, ((v * v + c * c) / dof).sqrt())
    })
}

pub fn fit_point(pairs: &[PulsePair], p: usize, n_bins: usize, scale: f64, factor: f64) -> Result<FitPoint> {
    let bins = bin_by_atom_number(pairs, n_bins, scale, factor)?;
    let (v_fit, c_fit) = fit_bins(&bins)?;
    Ok(FitPoint {
        pulses_combined: p,
        bins,
        v_fit,
        c_fit,
    })
}

/// Per-pulse detector variance from within-run differences of reference runs,
/// expressed for one measurement of `P` pulses in φ units.
pub fn estimate_detector_noise(reference: &[RunRecord], cfg: &AnalysisConfig, factor: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in reference {
        for pair in r.pulses.chunks_exact(2) {
            let d = pair[0] - pair[1];
            sum += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let shot = 2.0 * cfg.photons_per_pulse_per_color;
    let d0_pulse = sum / count as f64 / (2.0 * factor) - shot;
    let n = 2.0 * cfg.pulses_combined as f64 * cfg.photons_per_pulse_per_color;
    Some(cfg.pulses_combined as f64 * d0_pulse / (n * n))
}

fn squeezing_at(point: &FitPoint, cfg: &AnalysisConfig) -> Result<(f64, f64, f64, f64)> {
    let n_max = point.atom_number_max();
    let cond = conditional_db(&point.v_fit, &point.c_fit, n_max)?;
    let n_probe = 2.0 * point.pulses_combined as f64 * cfg.photons_per_pulse_per_color;
    let eta = qnd::eta_from_photons(n_probe, cfg.eta_se, cfg.n_se)?;
    let zeta = point.c_fit.eval(n_max) / point.v_fit.eval(n_max);
    Ok((cond, cond + coherence_penalty_db(eta), eta, zeta))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Squeezing at `P` pulses, with the spread over all bin counts `5..=30`.
pub fn squeezing_report(
    atom: &[RunRecord],
    p: usize,
    cfg: &AnalysisConfig,
    scale: f64,
    factor: f64,
) -> Result<SqueezingReport> {
    let pairs = combine_all(atom, p, cfg.photons_per_pulse_per_color)?;
    let primary = fit_point(&pairs, p, cfg.bins, scale, factor)?;
    let (cond, xi, eta, zeta) = squeezing_at(&primary, cfg)?;

    let mut conds = Vec::new();
    let mut xis = Vec::new();
    for k in MIN_BINS..=MAX_BINS {
        if pairs.len() < 2 * k {
            break;
        }
        // A bin count whose fit degenerates is left out of the spread.
        if let Ok((c, x, _, _)) = fit_point(&pairs, p, k, scale, factor).and_then(|pt| squeezing_at(&pt, cfg)) {
            conds.push(c);
            xis.push(x);
        }
    }
    let (conditional_db_mean, conditional_db_std) = mean_std(&conds);
    let (xi_db_mean, xi_db_std) = mean_std(&xis);
    Ok(SqueezingReport {
        pulses_combined: p,
        bins: cfg.bins,
        n_probe: 2.0 * p as f64 * cfg.photons_per_pulse_per_color,
        eta,
        kappa2: zeta / (1.0 - zeta),
        zeta,
        atom_number_max: primary.atom_number_max(),
        conditional_db: cond,
        xi_db: xi,
        conditional_db_mean,
        conditional_db_std,
        xi_db_mean,
        xi_db_std,
        bin_counts_used: xis.len(),
    })
}

/// Squeezing for every `P` in `p_values`, in order.
pub fn eta_sweep(
    prepared: &Prepared,
    p_values: &[usize],
    cfg: &AnalysisConfig,
    scale: f64,
) -> Vec<Result<SqueezingReport>> {
    p_values
        .par_iter()
        .map(|&p| squeezing_report(&prepared.atom, p, cfg, scale, prepared.variance_factor))
        .collect()
}

fn calibrate_scale(
    pairs: &[PulsePair],
    cfg: &AnalysisConfig,
    factor: f64,
    warnings: &mut Vec<String>,
) -> AtomScale {
    if let Some(coupling) = cfg.coupling {
        return AtomScale::Known { coupling };
    }
    match fit_point(pairs, cfg.pulses_combined, cfg.bins, 1.0, factor) {
        Ok(point) if point.v_fit.coeffs[1] > 0.0 => AtomScale::SelfCalibrated {
            slope: point.v_fit.coeffs[1],
        },
        Ok(_) => {
            warnings.push("variance slope not positive; atom-number axis left in signal units".into());
            AtomScale::Signal
        }
        Err(e) => {
            warnings.push(format!("slope calibration failed ({e}); axis left in signal units"));
            AtomScale::Signal
        }
    }
}

/// Full pipeline at the configured `P` and `K`, plus the sweep over all `P`.
pub fn analyze(records: &[RunRecord], cfg: &AnalysisConfig, seed: Option<u64>) -> Result<AnalysisReport> {
    if !(MIN_BINS..=MAX_BINS).contains(&cfg.bins) {
        return Err(Error::BinCount(cfg.bins));
    }
    let prepared = prepare(records, cfg.differencing)?;
    let factor = prepared.variance_factor;
    let mut warnings = Vec::new();

    // Without atom runs the reference runs are analyzed in their place.
    let primary_runs = if prepared.atom.is_empty() {
        warnings.push("campaign has no atom runs; reference runs analyzed instead".into());
        &prepared.reference
    } else {
        &prepared.atom
    };
    let pairs = combine_all(primary_runs, cfg.pulses_combined, cfg.photons_per_pulse_per_color)?;
    let scale = calibrate_scale(&pairs, cfg, factor, &mut warnings);
    let fit = fit_point(&pairs, cfg.pulses_combined, cfg.bins, scale.factor(), factor)?;

    let detector = estimate_detector_noise(&prepared.reference, cfg, factor).unwrap_or_else(|| {
        warnings.push("no reference runs; detector noise taken as 0".into());
        0.0
    });
    let v0 = fit.v_fit.coeffs[0];
    let c0 = fit.c_fit.coeffs[0];
    let noise_budget = NoiseBudget {
        detector,
        light_shot: v0 - c0.abs() - detector,
        projection_slope: fit.v_fit.coeffs[1],
        projection_slope_sigma: fit.v_fit.sigma(1),
        classical_quadratic: fit.v_fit.coeffs[2],
        classical_quadratic_sigma: fit.v_fit.sigma(2),
        v0,
        c0,
    };

    let reference_slope = if prepared.reference.len() >= 2 * cfg.bins {
        let ref_pairs = combine_all(&prepared.reference, cfg.pulses_combined, cfg.photons_per_pulse_per_color)?;
        match fit_point(&ref_pairs, cfg.pulses_combined, cfg.bins, scale.factor(), factor) {
            Ok(p) => Some(ReferenceSlope {
                slope: p.v_fit.coeffs[1],
                sigma: p.v_fit.sigma(1),
                runs: ref_pairs.len(),
            }),
            Err(e) => {
                warnings.push(format!("reference-run fit failed: {e}"));
                None
            }
        }
    } else {
        None
    };

    let atom_number_check = if prepared.atom.is_empty() {
        None
    } else {
        let bins = bin_by_atom_number(&pairs, cfg.bins, 1.0, factor)?;
        match slope_estimate(&bins) {
            Ok(check) => Some(check),
            Err(e) => {
                warnings.push(format!("slope atom-number estimate failed: {e}"));
                None
            }
        }
    };

    let mut squeezing = None;
    let mut sweep = Vec::new();
    if !prepared.atom.is_empty() {
        let max_p = MAX_COMBINED.min(prepared.atom[0].pulses.len() / 2);
        let p_values: Vec<usize> = (1..=max_p).collect();
        for (p, result) in p_values.iter().zip(eta_sweep(&prepared, &p_values, cfg, scale.factor())) {
            match result {
                Ok(report) => {
                    if *p == cfg.pulses_combined {
                        squeezing = Some(report);
                    }
                    sweep.push(report);
                }
                Err(e) => warnings.push(format!("P = {p}: {e}")),
            }
        }
        if cfg.pulses_combined > max_p {
            return Err(Error::PulsesOutOfRange {
                p: cfg.pulses_combined,
                max: max_p,
            });
        }
    }

    Ok(AnalysisReport {
        tool: "qndsim".into(),
        version: crate::VERSION.into(),
        seed,
        config: cfg.clone(),
        atom_runs: prepared.atom.len(),
        reference_runs: prepared.reference.len(),
        variance_factor: factor,
        atom_scale: scale,
        noise_budget,
        fit,
        reference_slope,
        atom_number_check,
        squeezing,
        sweep,
        warnings,
    })
}

/// Per-bin table for external plotting.
pub fn write_plot_csv<W: Write>(point: &FitPoint, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "atom_number",
        "var1",
        "var2",
        "cov",
        "conditional",
        "r_fit",
        "v_fit",
        "c_fit",
        "se_var1",
        "se_var2",
        "se_cov",
        "se_conditional",
        "size",
    ])?;
    for b in &point.bins {
        let r = conditional_reduced_curve(&point.v_fit, &point.c_fit, b.atom_number).unwrap_or(f64::NAN);
        let row = [
            b.atom_number,
            b.var1,
            b.var2,
            b.cov,
            b.conditional,
            r,
            point.v_fit.eval(b.atom_number),
            point.c_fit.eval(b.atom_number),
            b.se_var1,
            b.se_var2,
            b.se_cov,
            b.se_conditional,
        ];
        let mut fields: Vec<String> = row.iter().map(|&x| crate::io::format_float(x)).collect();
        fields.push(b.size.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(a: [f64; 3]) -> QuadFit {
        QuadFit {
            coeffs: a,
            ..QuadFit::zero()
        }
    }

    #[test]
    fn zero_covariance_leaves_variance() {
        let v = quad([1e-7, 2e-12, 0.0]);
        let c = QuadFit::zero();
        for n in [0.0, 1e4, 1.2e5] {
            assert_eq!(conditional_reduced_curve(&v, &c, n).unwrap(), v.eval(n));
        }
    }

    #[test]
    fn proportional_covariance() {
        let v = quad([1e-7, 2e-12, 1e-20]);
        let zeta = 0.7;
        let c = quad([zeta * 1e-7, zeta * 2e-12, zeta * 1e-20]);
        let n = 8e4;
        let r = conditional_reduced_curve(&v, &c, n).unwrap();
        assert!((r - v.eval(n) * (1.0 - zeta * zeta)).abs() < 1e-20);
    }

    #[test]
    fn gaussian_conditioning_cross_check() {
        // V = 1/n + k²N, C = k²N reproduces var(φ₂ − ζφ₁) of the QND channel.
        let (n, k, atoms) = (1.464e7, 1.3496272e-6, 1.2e5);
        let v = quad([1.0 / n, k * k, 0.0]);
        let c = quad([0.0, k * k, 0.0]);
        let r = conditional_reduced_curve(&v, &c, atoms).unwrap();
        let kappa2 = qnd::measurement_strength(n, k, atoms);
        let zeta = qnd::optimal_gain(kappa2);
        let direct = v.eval(atoms) - 2.0 * zeta * c.eval(atoms) + zeta * zeta * v.eval(atoms);
        assert!(((r - direct) / r).abs() < 1e-12);
        let eq5 = qnd::conditional_variance(n, n, k, atoms).unwrap();
        assert!(((r - eq5) / eq5).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_variance_rejected() {
        let v = quad([-1.0, 0.0, 0.0]);
        assert!(matches!(
            conditional_reduced_curve(&v, &QuadFit::zero(), 1.0),
            Err(Error::NonPositive(_))
        ));
    }

    #[test]
    fn metric_is_zero_without_conditioning_or_photons() {
        let v = quad([1e-7, 2e-12, 0.0]);
        let sq = squeezing_metric(&v, &QuadFit::zero(), 1.2e5, 0.0, 0.11, 7.4e6).unwrap();
        assert!(sq.abs() < 1e-12);
    }

    #[test]
    fn penalty_never_improves_metric() {
        let v = quad([1e-7, 2e-12, 0.0]);
        let c = quad([0.0, 1.5e-12, 0.0]);
        let cond = conditional_db(&v, &c, 1.2e5).unwrap();
        let sq = squeezing_metric(&v, &c, 1.2e5, 7.32e6, 0.11, 7.4e6).unwrap();
        assert!(sq >= cond);
    }

    #[test]
    fn estimators() {
        assert!((atom_number_from_slope(1.5e-6, 0.18).unwrap() - 1.2e5).abs() < 1e-6);
        let a = atom_number_from_slope(1.0e-6, 0.2).unwrap();
        let b = atom_number_from_slope(2.0e-6, 0.2).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-9);
        assert!(atom_number_from_slope(0.0, 0.2).is_err());
        let q = PolarizabilityQ { re: 4.7e-15, im: 1e-16 };
        assert_eq!(atom_number_from_phase(0.0, q, 27e-6).unwrap(), 0.0);
        assert!(atom_number_from_phase(0.18, PolarizabilityQ { re: 0.0, im: 1.0 }, 27e-6).is_err());
    }
}
