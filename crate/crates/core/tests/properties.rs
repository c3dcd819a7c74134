use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use qnd_core::analysis::{self, AnalysisConfig, QuadFit};
use qnd_core::atomic::{self, BeamGeometry, ProbeColor, TransitionLine};
use qnd_core::io;
use qnd_core::qnd::{self, TradeoffModel};
use qnd_core::sim::{self, CampaignConfig, RunRecord, SimPhysics};
use qnd_core::spin::CollectiveSpinState;

fn color(lines: &[(f64, f64)], n_p: f64) -> ProbeColor {
    ProbeColor {
        lines: lines
            .iter()
            .map(|&(w, d)| TransitionLine::new(w, d).unwrap())
            .collect(),
        gamma: 5.234,
        wavelength: 852.347e-9,
        n_p,
        n_r: 100.0 * n_p,
    }
}

fn beam(waist: f64) -> BeamGeometry {
    BeamGeometry {
        waist,
        detection_efficiency: 0.63,
        interaction_length: 1e-3,
    }
}

fn quad(c: [f64; 3]) -> QuadFit {
    QuadFit {
        coeffs: c,
        ..QuadFit::zero()
    }
}

prop_compose! {
    fn spin_state()(
        atoms in 1.0e3..2.0e5f64,
        dir in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        length in 0.05..1.0f64,
        a in proptest::array::uniform9(-1.0..1.0f64),
    ) -> CollectiveSpinState {
        let d = Vector3::new(dir.0, dir.1, dir.2 + 1e-3).normalize();
        let m = Matrix3::from_row_slice(&a);
        CollectiveSpinState {
            atom_count: atoms,
            coherent_fraction: 1.0,
            mean: d * (atoms / 2.0 * length),
            cov: (m * m.transpose() + Matrix3::identity() * 1e-3) * (atoms / 4.0),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn q_is_linear_in_line_strengths(
        w1 in 0.01..0.5f64, w2 in 0.01..0.5f64,
        d1 in -800.0..800.0f64, d2 in -800.0..800.0f64,
        scale in 0.1..2.0f64,
    ) {
        let one = atomic::compute_q(&color(&[(w1, d1), (w2, d2)], 1e6));
        let scaled = atomic::compute_q(&color(&[(w1 * scale, d1), (w2 * scale, d2)], 1e6));
        let sum = {
            let a = atomic::compute_q(&color(&[(w1, d1)], 1e6));
            let b = atomic::compute_q(&color(&[(w2, d2)], 1e6));
            (a.re + b.re, a.im + b.im)
        };
        let mag = one.re.hypot(one.im);
        prop_assert!((scaled.re - scale * one.re).abs() <= 1e-12 * scale * mag);
        prop_assert!((scaled.im - scale * one.im).abs() <= 1e-12 * scale * mag);
        prop_assert!((sum.0 - one.re).abs() <= 1e-12 * mag && (sum.1 - one.im).abs() <= 1e-12 * mag);
        // Absorption is positive for any detuning.
        prop_assert!(one.im > 0.0);
    }

    #[test]
    fn eta_grows_with_photons(n1 in 1.0e5..1.0e8f64, factor in 1.01..10.0f64, waist in 10e-6..60e-6f64) {
        let up = color(&[(5.0 / 9.0, -101.0), (1.0 / 9.0, 351.0)], 1e6);
        let down = color(&[(5.0 / 9.0, -111.0), (1.0 / 9.0, -563.0)], 1e6);
        let g = beam(waist);
        let a = atomic::predict_eta(&up, &down, &g, n1).unwrap();
        let b = atomic::predict_eta(&up, &down, &g, n1 * factor).unwrap();
        prop_assert!(a > 0.0 && a < b && b <= 1.0);
    }

    #[test]
    fn eta_from_photons_is_a_probability(n in 0.0..1.0e9f64, eta_ref in 0.0..0.99f64, n_ref in 1.0e5..1.0e8f64) {
        let eta = qnd::eta_from_photons(n, eta_ref, n_ref).unwrap();
        prop_assert!((0.0..=1.0).contains(&eta));
        let more = qnd::eta_from_photons(2.0 * n, eta_ref, n_ref).unwrap();
        prop_assert!(more >= eta);
        // Survival multiplies: (1 − η(2n)) = (1 − η(n))².
        prop_assert!(((1.0 - more) - (1.0 - eta).powi(2)).abs() <= 1e-12);
    }

    #[test]
    fn coupling_scales_with_geometry(
        n_p in 1.0e5..1.0e8f64, ratio in 1.0..1000.0f64, waist in 10e-6..100e-6f64, s in 0.5..2.0f64,
    ) {
        let q = atomic::compute_q(&color(&[(5.0 / 9.0, -101.0)], n_p));
        let k1 = atomic::coupling_constant(q, &beam(waist), n_p, ratio * n_p).unwrap();
        let k2 = atomic::coupling_constant(q, &beam(waist * s), n_p, ratio * n_p).unwrap();
        // k ∝ 1/w² at fixed photon numbers.
        prop_assert!((k2 * s * s / k1 - 1.0).abs() <= 1e-12);
        // Photon numbers enter only through their ratio.
        let k3 = atomic::coupling_constant(q, &beam(waist), s * n_p, s * ratio * n_p).unwrap();
        prop_assert!((k3 / k1 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn conditioning_never_raises_variance(
        v in (1e-8..1e-6f64, 0.0..1e-11f64, 0.0..1e-17f64),
        c in (-1e-8..1e-8f64, -1e-11..1e-11f64, -1e-17..1e-17f64),
        n in 0.0..2.0e5f64,
    ) {
        let vf = quad([v.0, v.1, v.2]);
        let cf = quad([c.0, c.1, c.2]);
        let r = analysis::conditional_reduced_curve(&vf, &cf, n).unwrap();
        prop_assert!(r <= vf.eval(n));
        let r0 = analysis::conditional_reduced_curve(&vf, &quad([0.0; 3]), n).unwrap();
        prop_assert_eq!(r0, vf.eval(n));
    }

    #[test]
    fn decoherence_only_costs(
        v1 in 1e-13..1e-11f64, c1 in 0.0..1e-11f64, n_probe in 0.0..5e7f64,
    ) {
        let vf = quad([1e-7, v1, 0.0]);
        let cf = quad([0.0, c1.min(0.9 * v1), 0.0]);
        let cond = analysis::conditional_db(&vf, &cf, 1.2e5);
        prop_assume!(cond.is_ok());
        let xi = analysis::squeezing_metric(&vf, &cf, 1.2e5, n_probe, 0.11, 7.4e6).unwrap();
        prop_assert!(xi >= cond.unwrap());
    }

    #[test]
    fn tradeoff_optimum_is_a_minimum(d in 0.5..1.0e6f64, eta in 0.0..0.99f64) {
        let model = TradeoffModel { optical_depth: d, kappa2_per_eta: 1.0 };
        let (best, xi_min) = qnd::find_optimal_eta(&model).unwrap();
        prop_assert!(qnd::xi_vs_eta(&model, eta).unwrap() >= xi_min * (1.0 - 1e-9));
        prop_assert!(best < 1.0 / 3.0 + 1e-6);
    }

    #[test]
    fn clock_sequence_keeps_jz_marginal(s in spin_state()) {
        let out = s.clock_sequence(-FRAC_PI_2);
        let n = s.atom_count;
        prop_assert!((out.mean.z - s.mean.z).abs() <= 1e-12 * n);
        prop_assert!((out.var_z() - s.var_z()).abs() <= 1e-12 * n * n);
    }

    #[test]
    fn clock_sequence_maps_jy_into_jz(s in spin_state(), phi in -PI..PI) {
        let jz = s.clock_sequence(phi).mean.z;
        let expected = phi.cos() * s.mean.y - phi.sin() * s.mean.z;
        prop_assert!((jz - expected).abs() <= 1e-12 * s.atom_count);
    }

    #[test]
    fn rotations_preserve_squeezing(s in spin_state(), angle in -PI..PI) {
        use qnd_core::spin::Axis;
        let xi = s.squeezing_parameter().unwrap();
        let turned = s.rotate(Axis::Z, angle).squeezing_parameter().unwrap();
        prop_assert!((turned / xi - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn csv_round_trip(
        rows in proptest::collection::vec(
            (any::<bool>(), proptest::collection::vec(-1.0e7..1.0e7f64, 2), -1.0..1.0f64), 1..30),
    ) {
        let records: Vec<RunRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, (is_reference, pulses, atom_signal))| RunRecord {
                cycle_id: i as u64,
                slot: (i % 7) as u8,
                is_reference: *is_reference,
                pulses: pulses.clone(),
                atom_signal: *atom_signal,
            })
            .collect();
        let text = io::campaign_csv_string(&records).unwrap();
        prop_assert_eq!(io::read_campaign_csv(text.as_bytes()).unwrap(), records);
    }
}

fn small_campaign(seed: u64) -> Vec<RunRecord> {
    let k = 1.35e-6;
    let config = CampaignConfig {
        runs_per_campaign: 400,
        detector_noise_var: 2.5e5,
        seed,
        ..CampaignConfig::default()
    };
    let physics = SimPhysics {
        coupling: k,
        eta_per_pulse: 0.01,
        ..SimPhysics::default()
    };
    sim::simulate_campaign(&config, &physics).unwrap().records()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn squeezing_ignores_global_signal_scale(seed in 0u64..1000, factor in 0.1..10.0f64) {
        let records = small_campaign(seed);
        let scaled: Vec<RunRecord> = records
            .iter()
            .map(|r| RunRecord {
                pulses: r.pulses.iter().map(|p| p * factor).collect(),
                ..r.clone()
            })
            .collect();
        let cfg = AnalysisConfig { coupling: Some(1.35e-6), ..AnalysisConfig::default() };
        let a = analysis::analyze(&records, &cfg, None).unwrap();
        let b = analysis::analyze(&scaled, &cfg, None).unwrap();
        prop_assume!(a.squeezing.is_some());
        let (sa, sb) = (a.squeezing.unwrap(), b.squeezing.unwrap());
        prop_assert!((sa.conditional_db - sb.conditional_db).abs() <= 1e-10);
        prop_assert!((sa.xi_db - sb.xi_db).abs() <= 1e-10);
    }
}
