use proptest::prelude::*;

use recovery_core::calibration::{
    filter_scenarios, fit_probit, fit_structural, BinPoint, CalibrationWindow, StructuralFitMode,
};
use recovery_core::csvio;
use recovery_core::gaussmath::{shifted_lognormal_params, std_normal_cdf, std_normal_quantile};
use recovery_core::portfolio::ScenarioRecord;
use recovery_core::recovery::{
    probit_recovery, structural_expected_loss, structural_recovery, RecoveryModel,
};
use recovery_core::risk::{expected_tail_loss, value_at_risk};

fn records_strategy() -> impl Strategy<Value = Vec<ScenarioRecord>> {
    prop::collection::vec((-0.6f64..0.4, 0usize..=50, 0.0f64..1.0), 1..80).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (x_m, n_defaults, rec))| {
                let p_d = n_defaults as f64 / 50.0;
                let mean_recovery = (n_defaults > 0).then_some(rec);
                ScenarioRecord {
                    scenario_id: i as u64,
                    x_m,
                    n_defaults,
                    p_d,
                    mean_recovery,
                    mean_loss: mean_recovery.map_or(0.0, |r| p_d * (1.0 - r)),
                }
            })
            .collect()
    })
}

/// A loss sample large enough for `alpha`.
fn losses_strategy() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (0.5f64..0.995).prop_flat_map(|alpha| {
        let min = (1.0 / (1.0 - alpha)).ceil() as usize;
        (
            prop::collection::vec(0.0f64..1.0, min..min + 400),
            Just(alpha),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn cdf_quantile_roundtrip(p in 1e-12f64..(1.0 - 1e-12)) {
        let z = std_normal_quantile(p).unwrap();
        prop_assert!((std_normal_cdf(z) - p).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn cdf_is_monotone(a in -40.0f64..40.0, b in -40.0f64..40.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(std_normal_cdf(lo) <= std_normal_cdf(hi));
        let v = std_normal_cdf(a);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn cdf_is_strictly_inside_unit_interval_on_moderate_range(x in -8.0f64..8.0) {
        let v = std_normal_cdf(x);
        prop_assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn lognormal_moment_roundtrip(mean in 0.01f64..10.0, ratio in 1e-6f64..10.0) {
        let sd = mean * ratio;
        let jp = shifted_lognormal_params(mean, sd).unwrap();
        let s2 = jp.sigma_log * jp.sigma_log;
        let mean_back = (jp.mu_log + s2 / 2.0).exp();
        let sd_back = (s2.exp_m1() * (2.0 * jp.mu_log + s2).exp()).sqrt();
        prop_assert!(((mean_back - mean) / mean).abs() <= 1e-10);
        prop_assert!(((sd_back - sd) / sd).abs() <= 1e-10);
    }

    #[test]
    fn loss_recovery_identity(p in 1e-9f64..(1.0 - 1e-9), b in 0.01f64..2.0) {
        let r = structural_recovery(p, b).unwrap();
        let l = structural_expected_loss(p, b).unwrap();
        prop_assert!((l - p * (1.0 - r)).abs() <= 1e-12);
    }

    #[test]
    fn structural_monotone_in_pd(b in 0.01f64..1.0, p1 in 1e-6f64..(1.0 - 1e-6), p2 in 1e-6f64..(1.0 - 1e-6)) {
        prop_assume!((p1 - p2).abs() > 1e-9);
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(structural_recovery(lo, b).unwrap() > structural_recovery(hi, b).unwrap());
        prop_assert!(structural_expected_loss(lo, b).unwrap() < structural_expected_loss(hi, b).unwrap());
    }

    #[test]
    fn structural_monotone_in_b(p in 1e-6f64..(1.0 - 1e-6), b1 in 0.01f64..1.0, b2 in 0.01f64..1.0) {
        prop_assume!((b1 - b2).abs() > 1e-6);
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(structural_recovery(p, lo).unwrap() > structural_recovery(p, hi).unwrap());
    }

    #[test]
    fn structural_recovery_in_open_unit_interval(p in 1e-12f64..(1.0 - 1e-12), b in 0.01f64..1.0) {
        let r = structural_recovery(p, b).unwrap();
        prop_assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn probit_decreasing_in_market_return(x1 in -1.0f64..1.0, x2 in -1.0f64..1.0, gamma in 0.01f64..5.0, delta in -2.0f64..2.0) {
        prop_assume!((x1 - x2).abs() > 1e-3);
        let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        prop_assert!(probit_recovery(lo, gamma, delta) > probit_recovery(hi, gamma, delta));
    }

    #[test]
    fn etl_dominates_var((losses, alpha) in losses_strategy()) {
        prop_assert!(expected_tail_loss(&losses, alpha).unwrap() >= value_at_risk(&losses, alpha).unwrap());
    }

    #[test]
    fn risk_measures_are_homogeneous_and_translate(
        (losses, alpha) in losses_strategy(),
        scale in 0.01f64..100.0,
        shift in -1.0f64..1.0,
    ) {
        let var = value_at_risk(&losses, alpha).unwrap();
        let etl = expected_tail_loss(&losses, alpha).unwrap();
        let scaled: Vec<f64> = losses.iter().map(|l| l * scale).collect();
        prop_assert!((value_at_risk(&scaled, alpha).unwrap() - scale * var).abs() <= 1e-12 * scale);
        prop_assert!((expected_tail_loss(&scaled, alpha).unwrap() - scale * etl).abs() <= 1e-12 * scale);
        let shifted: Vec<f64> = losses.iter().map(|l| l + shift).collect();
        prop_assert!((value_at_risk(&shifted, alpha).unwrap() - (var + shift)).abs() <= 1e-12);
        prop_assert!((expected_tail_loss(&shifted, alpha).unwrap() - (etl + shift)).abs() <= 1e-12);
    }

    #[test]
    fn risk_measures_ignore_order((mut losses, alpha) in losses_strategy(), seed in any::<u64>()) {
        let var = value_at_risk(&losses, alpha).unwrap();
        let etl = expected_tail_loss(&losses, alpha).unwrap();
        // Deterministic Fisher-Yates driven by a simple LCG.
        let mut state = seed | 1;
        for i in (1..losses.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            losses.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(value_at_risk(&losses, alpha).unwrap(), var);
        prop_assert_eq!(expected_tail_loss(&losses, alpha).unwrap().to_bits(), etl.to_bits());
    }

    #[test]
    fn wider_tail_has_larger_etl(losses in prop::collection::vec(0.0f64..1.0, 100..600)) {
        prop_assert!(expected_tail_loss(&losses, 0.99).unwrap() >= expected_tail_loss(&losses, 0.95).unwrap());
    }

    #[test]
    fn probit_fit_is_shift_equivariant(
        points in prop::collection::vec((-0.4f64..0.0, -2.0f64..2.0), 2..20),
        shift in -0.5f64..0.5,
    ) {
        let bins: Vec<BinPoint> = points
            .iter()
            .map(|&(x, b)| BinPoint {
                x_center: x,
                mean_recovery: std_normal_cdf(b),
                mean_p_d: 0.1,
                mean_loss: 0.0,
                b_value: b,
                count: 5,
            })
            .collect();
        let xs: Vec<f64> = bins.iter().map(|b| b.x_center).collect();
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 0.02);
        let Ok(RecoveryModel::Probit { gamma, delta }) = fit_probit(&bins) else { return Err(TestCaseError::fail("fit")) };
        let moved: Vec<BinPoint> = bins.iter().map(|b| BinPoint { x_center: b.x_center + shift, ..*b }).collect();
        let Ok(RecoveryModel::Probit { gamma: g2, delta: d2 }) = fit_probit(&moved) else { return Err(TestCaseError::fail("fit")) };
        prop_assert!((g2 - gamma).abs() <= 1e-8 * gamma.abs().max(1.0));
        prop_assert!((d2 - (delta - gamma * shift)).abs() <= 1e-8 * (delta.abs() + gamma.abs()).max(1.0));
    }

    #[test]
    fn noiseless_probit_fit_recovers_line(gamma in -5.0f64..5.0, delta in -2.0f64..2.0, n in 2usize..30) {
        let bins: Vec<BinPoint> = (0..n)
            .map(|i| {
                let x = -0.35 + 0.01 * i as f64 + 0.005;
                let b = -gamma * x - delta;
                BinPoint { x_center: x, mean_recovery: std_normal_cdf(b), mean_p_d: 0.1, mean_loss: 0.0, b_value: b, count: 5 }
            })
            .collect();
        let Ok(RecoveryModel::Probit { gamma: g, delta: d }) = fit_probit(&bins) else { return Err(TestCaseError::fail("fit")) };
        prop_assert!((g - gamma).abs() <= 1e-6);
        prop_assert!((d - delta).abs() <= 1e-6);
    }

    #[test]
    fn window_growth_only_adds_records(
        records in records_strategy(),
        lower in -0.6f64..0.0,
        upper in 0.0f64..0.4,
        grow_low in 0.0f64..0.3,
        grow_high in 0.0f64..0.3,
    ) {
        let small = CalibrationWindow { lower, upper: upper + 1e-3, ..CalibrationWindow::default() };
        let large = CalibrationWindow { lower: lower - grow_low, upper: upper + 1e-3 + grow_high, ..small };
        let a = filter_scenarios(&records, &small);
        let b = filter_scenarios(&records, &large);
        prop_assert!(a.iter().all(|r| b.contains(r)));
        prop_assert!(a.iter().all(|r| r.n_defaults > 0 && small.contains(r.x_m)));
    }

    #[test]
    fn scenario_csv_roundtrip(records in records_strategy()) {
        let mut buf = Vec::new();
        csvio::write_scenarios(&mut buf, &records).unwrap();
        let back: Vec<ScenarioRecord> = csvio::read_scenarios(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn model_csv_roundtrip(a in -10.0f64..10.0, b in -10.0f64..10.0, r in 0.0f64..=1.0, s in 1e-4f64..5.0) {
        for model in [
            RecoveryModel::constant(r).unwrap(),
            RecoveryModel::probit(a, b).unwrap(),
            RecoveryModel::structural(s).unwrap(),
        ] {
            let mut buf = Vec::new();
            csvio::write_model(&mut buf, &model).unwrap();
            prop_assert_eq!(csvio::read_models::<f64, _>(buf.as_slice()).unwrap(), vec![model]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_structural_fit_agrees_across_residual_spaces(b_true in 0.02f64..2.0, n in 5u64..60) {
        let records: Vec<ScenarioRecord> = (1..=n)
            .map(|i| {
                let p_d = i as f64 / (n + 1) as f64;
                let rec = structural_recovery(p_d, b_true).unwrap();
                ScenarioRecord {
                    scenario_id: i,
                    x_m: -0.1,
                    n_defaults: i as usize,
                    p_d,
                    mean_recovery: Some(rec),
                    mean_loss: structural_expected_loss(p_d, b_true).unwrap(),
                }
            })
            .collect();
        let Ok(RecoveryModel::Structural { b: loss_b }) = fit_structural(&records, StructuralFitMode::LossSpace) else {
            return Err(TestCaseError::fail("loss-space fit"));
        };
        let Ok(RecoveryModel::Structural { b: rec_b }) = fit_structural(&records, StructuralFitMode::RecoverySpace) else {
            return Err(TestCaseError::fail("recovery-space fit"));
        };
        prop_assert!((loss_b - b_true).abs() <= 1e-6, "loss space {loss_b} vs {b_true}");
        prop_assert!((rec_b - b_true).abs() <= 1e-6, "recovery space {rec_b} vs {b_true}");
        prop_assert!((loss_b - rec_b).abs() <= 1e-6);
    }
}
