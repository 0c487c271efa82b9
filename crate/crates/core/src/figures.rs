//! Plot-ready tables: regression data `b(x_m)`, loss against default
//! probability, and the normalised VaR/ETL threshold sweeps.

use crate::calibration::{bin_scenarios, calibrate, filter_scenarios, BinPoint, CalibrationWindow};
use crate::error::{Error, Result};
use crate::gaussmath::std_normal_quantile;
use crate::num::Real;
use crate::portfolio::ScenarioRecord;
use crate::recovery::{clamp_pd, structural_expected_loss, ModelKind, RecoveryModel};
use crate::risk::{risk_sweep, SweepConfig, SweepRow};

/// Per-scenario `b = Φ⁻¹(R)` scatter plus bin averages over the whole observed range.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData<T: Real = f64> {
    /// `(x_m, b)` for scenarios whose mean recovery lies strictly inside (0, 1).
    pub scatter: Vec<(T, T)>,
    pub bins: Vec<BinPoint<T>>,
}

pub fn regression_data<T: Real>(
    records: &[ScenarioRecord<T>],
    template: &CalibrationWindow<T>,
) -> Result<RegressionData<T>> {
    let mut scatter = Vec::new();
    for r in records {
        if let Some(rec) = r.mean_recovery {
            if rec > T::zero() && rec < T::one() {
                scatter.push((r.x_m, std_normal_quantile(rec)?));
            }
        }
    }
    let defaulted: Vec<_> = records
        .iter()
        .filter(|r| r.n_defaults > 0)
        .copied()
        .collect();
    let (lo, hi) = defaulted
        .iter()
        .fold(None, |acc: Option<(T, T)>, r| match acc {
            None => Some((r.x_m, r.x_m)),
            Some((lo, hi)) => Some((lo.min(r.x_m), hi.max(r.x_m))),
        })
        .ok_or_else(|| Error::Data("no scenario with defaults".into()))?;
    let w = template.bin_width;
    let window = CalibrationWindow {
        lower: (lo / w).floor() * w,
        upper: ((hi / w).floor() + T::one()) * w,
        ..*template
    };
    let filtered = filter_scenarios(&defaulted, &window);
    let bins = bin_scenarios(&filtered, &window).unwrap_or_default();
    Ok(RegressionData { scatter, bins })
}

/// `(p_d, mean_loss, fitted structural loss)` for every scenario with defaults.
pub fn loss_vs_pd<T: Real>(
    records: &[ScenarioRecord<T>],
    model: &RecoveryModel<T>,
) -> Result<Vec<(T, T, T)>> {
    let RecoveryModel::Structural { b } = *model else {
        return Err(Error::Data("loss curve needs a structural model".into()));
    };
    records
        .iter()
        .filter(|r| r.n_defaults > 0)
        .map(|r| {
            Ok((
                r.p_d,
                r.mean_loss,
                structural_expected_loss(clamp_pd(r.p_d), b)?,
            ))
        })
        .collect()
}

/// One row of a sweep figure: threshold, then one ratio per model in `ModelKind::ALL` order.
pub type SweepFigureRow<T> = (T, [Option<T>; 3]);

#[derive(Debug, Clone, PartialEq)]
pub struct FigureData<T: Real = f64> {
    pub regression: RegressionData<T>,
    pub loss_curve: Vec<(T, T, T)>,
    pub var_sweep: Vec<SweepFigureRow<T>>,
    pub etl_sweep: Vec<SweepFigureRow<T>>,
}

fn pivot<T: Real>(
    rows: &[SweepRow<T>],
    thresholds: &[T],
    pick: impl Fn(&SweepRow<T>) -> Option<T>,
) -> Vec<SweepFigureRow<T>> {
    thresholds
        .iter()
        .map(|&t| {
            let mut ratios = [None; 3];
            for (slot, kind) in ratios.iter_mut().zip(ModelKind::ALL) {
                *slot = rows
                    .iter()
                    .find(|r| r.model == Some(kind) && r.lower_threshold == Some(t))
                    .and_then(&pick);
            }
            (t, ratios)
        })
        .collect()
}

/// Builds every figure table from one scenario set.
pub fn figure_data<T: Real>(
    records: &[ScenarioRecord<T>],
    config: &SweepConfig<T>,
) -> Result<FigureData<T>> {
    if records.is_empty() {
        return Err(Error::Data("no scenarios".into()));
    }
    let regression = regression_data(records, &config.window)?;
    let fitted = calibrate(
        records,
        &config.window,
        ModelKind::Structural,
        config.structural_mode,
    )?;
    let loss_curve = loss_vs_pd(records, &fitted.model)?;
    let config = SweepConfig {
        models: ModelKind::ALL.to_vec(),
        ..config.clone()
    };
    let rows = risk_sweep(records, &config)?;
    let var_sweep = pivot(&rows, &config.lower_thresholds, |r| {
        r.report.and_then(|x| x.var_ratio)
    });
    let etl_sweep = pivot(&rows, &config.lower_thresholds, |r| {
        r.report.and_then(|x| x.etl_ratio)
    });
    Ok(FigureData {
        regression,
        loss_curve,
        var_sweep,
        etl_sweep,
    })
}
