//! Value at Risk and Expected Tail Loss on per-scenario loss samples, and
//! the threshold sweep comparing calibrated models against the simulation.

use std::cmp::Ordering;

use crate::calibration::{calibrate, Calibration, CalibrationWindow, StructuralFitMode};
use crate::error::{Error, Result};
use crate::num::{ordered_sum, Real};
use crate::portfolio::ScenarioRecord;
use crate::recovery::{model_recovery, ModelKind, RecoveryModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport<T: Real = f64> {
    pub alpha: T,
    pub var: T,
    pub etl: T,
    /// Model VaR over the empirical VaR; absent for the empirical baseline.
    pub var_ratio: Option<T>,
    pub etl_ratio: Option<T>,
}

/// Portfolio loss per scenario, `p_d (1 - R)`, with `p_d` taken from the simulation.
pub fn model_losses<T: Real>(records: &[ScenarioRecord<T>], model: &RecoveryModel<T>) -> Vec<T> {
    records
        .iter()
        .map(|r| r.p_d * (T::one() - model_recovery(model, r)))
        .collect()
}

/// Simulated portfolio loss per scenario.
pub fn empirical_losses<T: Real>(records: &[ScenarioRecord<T>]) -> Vec<T> {
    records.iter().map(|r| r.mean_loss).collect()
}

/// `ceil(x)`, treating values within rounding noise of an integer as that integer.
fn ceil_count(x: f64) -> usize {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

fn sorted_sample<T: Real>(losses: &[T], alpha: T) -> Result<Vec<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Domain(format!(
            "confidence level must lie in (0, 1), got {alpha}"
        )));
    }
    let tail = (T::one() - alpha).as_f64() * losses.len() as f64;
    if losses.is_empty() || tail < 1.0 - 1e-9 {
        return Err(Error::Domain(format!(
            "{} scenarios are too few for alpha = {alpha}",
            losses.len()
        )));
    }
    if losses.iter().any(|l| l.is_nan()) {
        return Err(Error::Domain("loss sample contains NaN".into()));
    }
    let mut sorted = losses.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(sorted)
}

/// The `ceil(alpha M)`-th smallest loss.
pub fn value_at_risk<T: Real>(losses: &[T], alpha: T) -> Result<T> {
    let sorted = sorted_sample(losses, alpha)?;
    Ok(var_of_sorted(&sorted, alpha))
}

/// Mean of the `ceil((1 - alpha) M)` largest losses.
pub fn expected_tail_loss<T: Real>(losses: &[T], alpha: T) -> Result<T> {
    let sorted = sorted_sample(losses, alpha)?;
    Ok(etl_of_sorted(&sorted, alpha))
}

fn var_of_sorted<T: Real>(sorted: &[T], alpha: T) -> T {
    let k = ceil_count(alpha.as_f64() * sorted.len() as f64).clamp(1, sorted.len());
    sorted[k - 1]
}

fn etl_of_sorted<T: Real>(sorted: &[T], alpha: T) -> T {
    let n = ceil_count((T::one() - alpha).as_f64() * sorted.len() as f64).clamp(1, sorted.len());
    let tail = &sorted[sorted.len() - n..];
    ordered_sum(tail.iter().copied()) / T::from_count(n)
}

/// VaR and ETL of a loss sample, optionally normalised by a baseline report.
pub fn risk_report<T: Real>(
    losses: &[T],
    alpha: T,
    baseline: Option<&RiskReport<T>>,
) -> Result<RiskReport<T>> {
    let sorted = sorted_sample(losses, alpha)?;
    let var = var_of_sorted(&sorted, alpha);
    let etl = etl_of_sorted(&sorted, alpha);
    let ratio = |value: T, base: T| (base > T::zero()).then(|| value / base);
    Ok(RiskReport {
        alpha,
        var,
        etl,
        var_ratio: baseline.and_then(|b| ratio(var, b.var)),
        etl_ratio: baseline.and_then(|b| ratio(etl, b.etl)),
    })
}

/// Empirical benchmark computed from the simulated losses of all scenarios.
pub fn empirical_report<T: Real>(records: &[ScenarioRecord<T>], alpha: T) -> Result<RiskReport<T>> {
    risk_report(&empirical_losses(records), alpha, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<T: Real = f64> {
    pub alpha: T,
    /// Upper bound, bin width and bin occupancy; `lower` is replaced per threshold.
    pub window: CalibrationWindow<T>,
    pub lower_thresholds: Vec<T>,
    pub models: Vec<ModelKind>,
    pub structural_mode: StructuralFitMode,
}

impl<T: Real> Default for SweepConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.99),
            window: CalibrationWindow::default(),
            lower_thresholds: default_thresholds(),
            models: ModelKind::ALL.to_vec(),
            structural_mode: StructuralFitMode::LossSpace,
        }
    }
}

pub fn default_thresholds<T: Real>() -> Vec<T> {
    [-0.35, -0.30, -0.25, -0.20, -0.15, -0.10, -0.05]
        .into_iter()
        .map(T::lit)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    CalibrationError(String),
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::CalibrationError(_) => "calibration_error",
        }
    }
}

/// One line of a sweep: the empirical baseline (`model == None`) or one
/// model calibrated at one lower threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T: Real = f64> {
    pub model: Option<ModelKind>,
    pub lower_threshold: Option<T>,
    pub alpha: T,
    pub report: Option<RiskReport<T>>,
    pub calibration: Option<Calibration<T>>,
    pub status: RowStatus,
}

/// Calibrates every requested model for every lower threshold and reports
/// VaR and ETL normalised to the empirical values of the whole set.
///
/// Only a failing baseline is an error; failed cells are recorded in their row.
pub fn risk_sweep<T: Real>(
    records: &[ScenarioRecord<T>],
    config: &SweepConfig<T>,
) -> Result<Vec<SweepRow<T>>> {
    let baseline = empirical_report(records, config.alpha)?;
    if !(baseline.var > T::zero()) {
        return Err(Error::Data(
            "empirical VaR is zero; cannot normalise".into(),
        ));
    }
    for &lower in &config.lower_thresholds {
        if !(lower < config.window.upper) {
            return Err(Error::constraint(
                "thresholds",
                format!(
                    "lower threshold {lower} is not below the upper bound {}",
                    config.window.upper
                ),
            ));
        }
    }
    let mut rows = vec![SweepRow {
        model: None,
        lower_threshold: None,
        alpha: config.alpha,
        report: Some(baseline),
        calibration: None,
        status: RowStatus::Ok,
    }];
    for &lower in &config.lower_thresholds {
        let window = config.window.with_lower(lower);
        for &kind in &config.models {
            let outcome =
                calibrate(records, &window, kind, config.structural_mode).and_then(|cal| {
                    let losses = model_losses(records, &cal.model);
                    Ok((risk_report(&losses, config.alpha, Some(&baseline))?, cal))
                });
            let row = match outcome {
                Ok((report, cal)) => SweepRow {
                    model: Some(kind),
                    lower_threshold: Some(lower),
                    alpha: config.alpha,
                    report: Some(report),
                    calibration: Some(cal),
                    status: RowStatus::Ok,
                },
                Err(e) => SweepRow {
                    model: Some(kind),
                    lower_threshold: Some(lower),
                    alpha: config.alpha,
                    report: None,
                    calibration: None,
                    status: RowStatus::CalibrationError(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Vec<f64> {
        (1..=1000).map(|i| 0.001 * i as f64).collect()
    }

    #[test]
    fn hand_examples() {
        let losses = ramp();
        assert_eq!(value_at_risk(&losses, 0.99).unwrap(), 0.001 * 990.0);
        let etl = expected_tail_loss(&losses, 0.99).unwrap();
        assert!((etl - 0.9955).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sample() {
        let losses = vec![0.042; 500];
        assert_eq!(value_at_risk(&losses, 0.99).unwrap(), 0.042);
        assert_eq!(expected_tail_loss(&losses, 0.99).unwrap(), 0.042);
    }

    #[test]
    fn too_few_scenarios() {
        let losses = vec![0.1; 50];
        assert!(value_at_risk(&losses, 0.99).is_err());
        assert!(value_at_risk(&[0.1; 100], 0.99).is_ok());
        assert!(expected_tail_loss(&losses, 1.0).is_err());
        assert!(expected_tail_loss::<f64>(&[], 0.5).is_err());
    }

    #[test]
    fn scaling() {
        let losses = ramp();
        let scaled: Vec<f64> = losses.iter().map(|l| 3.0 * l).collect();
        let v = value_at_risk(&losses, 0.95).unwrap();
        assert!((value_at_risk(&scaled, 0.95).unwrap() - 3.0 * v).abs() < 1e-12);
    }

    #[test]
    fn self_normalisation_is_exact() {
        let losses = ramp();
        let base = risk_report(&losses, 0.99, None).unwrap();
        let again = risk_report(&losses, 0.99, Some(&base)).unwrap();
        assert_eq!(again.var_ratio, Some(1.0));
        assert_eq!(again.etl_ratio, Some(1.0));
        assert_eq!(base.var_ratio, None);
    }

    #[test]
    fn ceil_count_absorbs_rounding() {
        assert_eq!(ceil_count(0.99 * 100_000.0), 99_000);
        assert_eq!(ceil_count((1.0 - 0.99) * 100_000.0), 1000);
        assert_eq!(ceil_count(12.2), 13);
    }

    fn record(id: u64, x_m: f64, n: usize, r: f64) -> ScenarioRecord {
        let p = n as f64 / 100.0;
        ScenarioRecord {
            scenario_id: id,
            x_m,
            n_defaults: n,
            p_d: p,
            mean_recovery: (n > 0).then_some(r),
            mean_loss: p * (1.0 - r),
        }
    }

    #[test]
    fn model_loss_cases() {
        let records = vec![record(0, -0.2, 10, 0.6), record(1, 0.1, 0, 0.0)];
        let full = model_losses(&records, &RecoveryModel::constant(1.0).unwrap());
        assert_eq!(full, vec![0.0, 0.0]);
        let none = model_losses(&records, &RecoveryModel::constant(0.0).unwrap());
        assert_eq!(none, vec![0.1, 0.0]);
        let structural = model_losses(&records, &RecoveryModel::structural(0.1).unwrap());
        assert_eq!(structural[1], 0.0);
    }

    #[test]
    fn zero_recovery_upper_bounds_empirical() {
        let records: Vec<_> = (0..400)
            .map(|i| {
                record(
                    i,
                    -0.001 * i as f64,
                    (i % 37) as usize,
                    0.3 + 0.001 * (i % 300) as f64,
                )
            })
            .collect();
        let base = empirical_report(&records, 0.99).unwrap();
        let worst = risk_report(
            &model_losses(&records, &RecoveryModel::constant(0.0).unwrap()),
            0.99,
            Some(&base),
        )
        .unwrap();
        assert!(worst.var_ratio.unwrap() >= 1.0);
        assert!(worst.etl_ratio.unwrap() >= 1.0);
    }

    #[test]
    fn sweep_shape_and_failed_cells() {
        let records: Vec<_> = (0..1000)
            .map(|i| {
                let x = -0.4 + 0.0005 * i as f64;
                let n = ((0.0 - x).max(0.0) * 100.0) as usize;
                record(i, x, n, (0.9 + x).clamp(0.05, 0.95))
            })
            .collect();
        let config = SweepConfig {
            window: CalibrationWindow {
                min_bin_count: 1,
                ..CalibrationWindow::default()
            },
            // -0.0001 leaves a window with no defaulted scenarios.
            lower_thresholds: vec![-0.3, -0.0001],
            ..SweepConfig::default()
        };
        let rows = risk_sweep(&records, &config).unwrap();
        assert_eq!(rows.len(), 1 + 2 * 3);
        assert!(rows[0].model.is_none());
        assert!(rows[1..4].iter().all(|r| r.status == RowStatus::Ok));
        assert!(rows[4..]
            .iter()
            .all(|r| r.status.as_str() == "calibration_error" && r.report.is_none()));
    }
}
