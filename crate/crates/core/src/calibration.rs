//! Fitting recovery models to a window of simulated scenarios.
//!
//! Scenarios are filtered to `lower <= x_m < upper` with at least one
//! default. The constant and structural models are fitted to the filtered
//! records directly; the probit model is fitted to bin averages so every
//! market-return interval carries the same weight.

use crate::error::{Error, Result};
use crate::gaussmath::std_normal_quantile;
use crate::num::{ordered_sum, Real};
use crate::portfolio::ScenarioRecord;
use crate::recovery::{clamp_pd, recovered_mass, ModelKind, RecoveryModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationWindow<T: Real = f64> {
    /// Inclusive lower bound on `x_m`.
    pub lower: T,
    /// Exclusive upper bound on `x_m`.
    pub upper: T,
    pub bin_width: T,
    /// Minimum number of defaulted scenarios in a usable bin.
    pub min_bin_count: usize,
}

impl<T: Real> Default for CalibrationWindow<T> {
    fn default() -> Self {
        Self {
            lower: T::lit(-0.35),
            upper: T::zero(),
            bin_width: T::lit(0.01),
            min_bin_count: 5,
        }
    }
}

impl<T: Real> CalibrationWindow<T> {
    pub fn with_lower(self, lower: T) -> Self {
        Self { lower, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() || !(self.lower < self.upper) {
            return Err(Error::constraint(
                "window",
                format!(
                    "need finite lower < upper, got [{}, {})",
                    self.lower, self.upper
                ),
            ));
        }
        if !(self.bin_width > T::zero()) || !self.bin_width.is_finite() {
            return Err(Error::constraint("bin_width", "must be > 0"));
        }
        if self.min_bin_count == 0 {
            return Err(Error::constraint("min_bin_count", "must be >= 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, x_m: T) -> bool {
        x_m >= self.lower && x_m < self.upper
    }
}

/// Averages over the defaulted scenarios of one market-return bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinPoint<T: Real = f64> {
    pub x_center: T,
    pub mean_recovery: T,
    pub mean_p_d: T,
    pub mean_loss: T,
    /// `Φ⁻¹(mean_recovery)`.
    pub b_value: T,
    pub count: usize,
}

/// Residual space for the structural fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StructuralFitMode {
    /// Mean recovery against `R(p_d)`.
    RecoverySpace,
    /// Mean loss against `p_d (1 - R(p_d))`; damps the noisy small-`p_d` recoveries.
    #[default]
    LossSpace,
}

impl StructuralFitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StructuralFitMode::RecoverySpace => "recovery_space",
            StructuralFitMode::LossSpace => "loss_space",
        }
    }
}

impl std::str::FromStr for StructuralFitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recovery_space" => Ok(StructuralFitMode::RecoverySpace),
            "loss_space" => Ok(StructuralFitMode::LossSpace),
            other => Err(Error::constraint(
                "mode",
                format!("expected recovery_space or loss_space, got `{other}`"),
            )),
        }
    }
}

/// Records inside the window that have at least one default, in input order.
pub fn filter_scenarios<T: Real>(
    records: &[ScenarioRecord<T>],
    window: &CalibrationWindow<T>,
) -> Vec<ScenarioRecord<T>> {
    records
        .iter()
        .filter(|r| r.n_defaults > 0 && r.mean_recovery.is_some() && window.contains(r.x_m))
        .copied()
        .collect()
}

fn recovery_of<T: Real>(r: &ScenarioRecord<T>) -> Result<T> {
    r.mean_recovery
        .ok_or_else(|| Error::Calibration(format!("scenario {} has no defaults", r.scenario_id)))
}

fn empty_window() -> Error {
    Error::Calibration("empty calibration window".into())
}

/// Number of bins tiling `[lower, upper)`.
fn bin_count<T: Real>(window: &CalibrationWindow<T>) -> usize {
    let span = (window.upper - window.lower) / window.bin_width;
    // Guard against span = 35.000000000000004 style rounding.
    let n = (span - T::lit(1e-9)).ceil();
    n.to_usize().unwrap_or(1).max(1)
}

/// Unweighted per-bin averages, keeping bins with enough members and a mean
/// recovery strictly inside (0, 1).
pub fn bin_scenarios<T: Real>(
    filtered: &[ScenarioRecord<T>],
    window: &CalibrationWindow<T>,
) -> Result<Vec<BinPoint<T>>> {
    window.validate()?;
    if filtered.is_empty() {
        return Err(empty_window());
    }
    let n = bin_count(window);
    #[derive(Clone, Copy, Default)]
    struct Acc<T> {
        recovery: T,
        p_d: T,
        loss: T,
        count: usize,
    }
    let mut acc = vec![Acc::<T>::default(); n];
    for r in filtered {
        if !window.contains(r.x_m) {
            continue;
        }
        let idx = ((r.x_m - window.lower) / window.bin_width)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(n - 1);
        let a = &mut acc[idx];
        a.recovery = a.recovery + recovery_of(r)?;
        a.p_d = a.p_d + r.p_d;
        a.loss = a.loss + r.mean_loss;
        a.count += 1;
    }
    let mut bins = Vec::new();
    for (i, a) in acc.iter().enumerate() {
        if a.count < window.min_bin_count {
            continue;
        }
        let count = T::from_count(a.count);
        let mean_recovery = a.recovery / count;
        if !(mean_recovery > T::zero() && mean_recovery < T::one()) {
            continue;
        }
        let left = window.lower + T::from_count(i) * window.bin_width;
        let right = (left + window.bin_width).min(window.upper);
        bins.push(BinPoint {
            x_center: (left + right) / T::lit(2.0),
            mean_recovery,
            mean_p_d: a.p_d / count,
            mean_loss: a.loss / count,
            b_value: std_normal_quantile(mean_recovery)?,
            count: a.count,
        });
    }
    if bins.is_empty() {
        return Err(Error::Calibration(
            "no bin has enough defaulted scenarios".into(),
        ));
    }
    Ok(bins)
}

/// Least-squares line `b = -gamma x - delta` through the bin points, equal weights.
pub fn fit_probit<T: Real>(bins: &[BinPoint<T>]) -> Result<RecoveryModel<T>> {
    let (slope, intercept) = ols_line(bins.iter().map(|b| (b.x_center, b.b_value)))?;
    RecoveryModel::probit(-slope, -intercept)
}

fn ols_line<T: Real>(points: impl Iterator<Item = (T, T)> + Clone) -> Result<(T, T)> {
    let n = points.clone().count();
    if n < 2 {
        return Err(Error::Calibration(format!(
            "probit fit needs at least 2 bins, got {n}"
        )));
    }
    let count = T::from_count(n);
    let x_mean = ordered_sum(points.clone().map(|(x, _)| x)) / count;
    let y_mean = ordered_sum(points.clone().map(|(_, y)| y)) / count;
    let sxx = ordered_sum(points.clone().map(|(x, _)| (x - x_mean) * (x - x_mean)));
    let sxy = ordered_sum(points.map(|(x, y)| (x - x_mean) * (y - y_mean)));
    let scale = x_mean.abs().max(T::one());
    if !(sxx > T::epsilon() * scale * scale * count) {
        return Err(Error::Calibration(
            "probit fit needs at least 2 distinct bin centres".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, y_mean - slope * x_mean))
}

/// Mean of the per-scenario mean recoveries.
pub fn fit_constant<T: Real>(filtered: &[ScenarioRecord<T>]) -> Result<RecoveryModel<T>> {
    if filtered.is_empty() {
        return Err(empty_window());
    }
    let recoveries = filtered
        .iter()
        .map(recovery_of)
        .collect::<Result<Vec<_>>>()?;
    let r_bar = ordered_sum(recoveries.iter().copied()) / T::from_count(recoveries.len());
    RecoveryModel::constant(r_bar.max(T::zero()).min(T::one()))
}

/// Search interval for `B`.
pub const STRUCTURAL_B_RANGE: (f64, f64) = (1e-4, 5.0);
const COARSE_GRID: usize = 64;
const B_TOLERANCE: f64 = 1e-8;

struct StructuralObjective<T: Real> {
    quantiles: Vec<T>,
    p_d: Vec<T>,
    targets: Vec<T>,
    mode: StructuralFitMode,
}

impl<T: Real> StructuralObjective<T> {
    fn new(filtered: &[ScenarioRecord<T>], mode: StructuralFitMode) -> Result<Self> {
        let mut quantiles = Vec::with_capacity(filtered.len());
        let mut p_d = Vec::with_capacity(filtered.len());
        let mut targets = Vec::with_capacity(filtered.len());
        for r in filtered {
            let p = clamp_pd(r.p_d);
            quantiles.push(std_normal_quantile(p)?);
            p_d.push(p);
            targets.push(match mode {
                StructuralFitMode::RecoverySpace => recovery_of(r)?,
                StructuralFitMode::LossSpace => r.mean_loss,
            });
        }
        Ok(Self {
            quantiles,
            p_d,
            targets,
            mode,
        })
    }

    fn sse(&self, b: T) -> T {
        let residuals =
            self.quantiles
                .iter()
                .zip(&self.p_d)
                .zip(&self.targets)
                .map(|((&q, &p), &y)| {
                    let mass = recovered_mass(q, b);
                    let model = match self.mode {
                        StructuralFitMode::RecoverySpace => mass / p,
                        StructuralFitMode::LossSpace => p - mass,
                    };
                    (y - model) * (y - model)
                });
        ordered_sum(residuals)
    }
}

/// Golden-section search for the minimum of `f` on `[a, b]`, stopping when the
/// bracket is narrower than `tol`. Returns `(x_min, f_min)`.
pub fn golden_section_minimize<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Least-squares `B` of the structural model, with the residual space set by `mode`.
pub fn fit_structural<T: Real>(
    filtered: &[ScenarioRecord<T>],
    mode: StructuralFitMode,
) -> Result<RecoveryModel<T>> {
    fit_structural_with_sse(filtered, mode).map(|(model, _)| model)
}

fn fit_structural_with_sse<T: Real>(
    filtered: &[ScenarioRecord<T>],
    mode: StructuralFitMode,
) -> Result<(RecoveryModel<T>, T)> {
    if filtered.is_empty() {
        return Err(empty_window());
    }
    let objective = StructuralObjective::new(filtered, mode)?;
    let (lo, hi) = (T::lit(STRUCTURAL_B_RANGE.0), T::lit(STRUCTURAL_B_RANGE.1));
    let grid: Vec<T> = (0..COARSE_GRID)
        .map(|i| {
            let t = T::from_count(i) / T::from_count(COARSE_GRID - 1);
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        })
        .collect();
    let values: Vec<T> = grid.iter().map(|&b| objective.sse(b)).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .ok_or_else(|| {
            Error::Calibration("structural objective is not finite on the search grid".into())
        })?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(COARSE_GRID - 1)];
    let (b_fit, sse) = golden_section_minimize(|x| objective.sse(x), a, b, T::lit(B_TOLERANCE));
    if !sse.is_finite() || !b_fit.is_finite() {
        return Err(Error::Calibration("structural fit did not converge".into()));
    }
    Ok((RecoveryModel::structural(b_fit)?, sse))
}

/// A fitted model with the bookkeeping persisted alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration<T: Real = f64> {
    pub model: RecoveryModel<T>,
    pub window: CalibrationWindow<T>,
    pub n_records: usize,
    /// Bins used by the probit fit; `None` for models fitted per record.
    pub n_bins: Option<usize>,
    /// Residual sum of squares in the space the model was fitted in.
    pub sse: T,
}

/// Filters `records` to the window and fits one model kind.
pub fn calibrate<T: Real>(
    records: &[ScenarioRecord<T>],
    window: &CalibrationWindow<T>,
    kind: ModelKind,
    mode: StructuralFitMode,
) -> Result<Calibration<T>> {
    window.validate()?;
    let filtered = filter_scenarios(records, window);
    if filtered.is_empty() {
        return Err(empty_window());
    }
    let (model, n_bins, sse) = match kind {
        ModelKind::Constant => {
            let model = fit_constant(&filtered)?;
            let RecoveryModel::Constant { r_bar } = model else {
                unreachable!()
            };
            let sse = ordered_sum(filtered.iter().map(|r| {
                let d = r.mean_recovery.unwrap_or(r_bar) - r_bar;
                d * d
            }));
            (model, None, sse)
        }
        ModelKind::Probit => {
            let bins = bin_scenarios(&filtered, window)?;
            let model = fit_probit(&bins)?;
            let RecoveryModel::Probit { gamma, delta } = model else {
                unreachable!()
            };
            let sse = ordered_sum(bins.iter().map(|b| {
                let d = b.b_value + gamma * b.x_center + delta;
                d * d
            }));
            (model, Some(bins.len()), sse)
        }
        ModelKind::Structural => {
            let (model, sse) = fit_structural_with_sse(&filtered, mode)?;
            (model, None, sse)
        }
    };
    Ok(Calibration {
        model,
        window: *window,
        n_records: filtered.len(),
        n_bins,
        sse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::{structural_expected_loss, structural_recovery};

    fn rec(id: u64, x_m: f64, n_defaults: usize, recovery: f64) -> ScenarioRecord {
        let p_d = n_defaults as f64 / 500.0;
        ScenarioRecord {
            scenario_id: id,
            x_m,
            n_defaults,
            p_d,
            mean_recovery: (n_defaults > 0).then_some(recovery),
            mean_loss: p_d * (1.0 - recovery),
        }
    }

    fn window(lower: f64, upper: f64) -> CalibrationWindow {
        CalibrationWindow {
            lower,
            upper,
            ..CalibrationWindow::default()
        }
    }

    fn bin(x: f64, b: f64) -> BinPoint {
        BinPoint {
            x_center: x,
            mean_recovery: 0.5,
            mean_p_d: 0.1,
            mean_loss: 0.05,
            b_value: b,
            count: 5,
        }
    }

    #[test]
    fn filter_threshold_semantics() {
        let records = [
            rec(0, -0.5, 3, 0.6),
            rec(1, 0.1, 3, 0.6),
            rec(2, -0.3, 0, 0.0),
        ];
        let kept = filter_scenarios(&records, &window(-1.0, 0.0));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].x_m, -0.5);

        let boundary = [rec(0, -0.2, 2, 0.7), rec(1, 0.0, 2, 0.7)];
        let kept = filter_scenarios(&boundary, &window(-0.2, 0.0));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].x_m, -0.2);
    }

    #[test]
    fn bins_average_and_transform() {
        let w = CalibrationWindow {
            min_bin_count: 2,
            ..window(-0.1, 0.0)
        };
        let records = [rec(0, -0.055, 4, 0.4), rec(1, -0.052, 4, 0.6)];
        let bins = bin_scenarios(&records, &w).unwrap();
        assert_eq!(bins.len(), 1);
        assert!((bins[0].mean_recovery - 0.5).abs() < 1e-15);
        assert!(bins[0].b_value.abs() < 1e-15);
        assert!((bins[0].x_center + 0.055).abs() < 1e-12);
        assert_eq!(bins[0].count, 2);
    }

    #[test]
    fn bins_drop_full_recovery_and_sparse() {
        let w = CalibrationWindow {
            min_bin_count: 2,
            ..window(-0.1, 0.0)
        };
        let full = [rec(0, -0.055, 1, 1.0), rec(1, -0.052, 1, 1.0)];
        assert!(bin_scenarios(&full, &w).is_err());

        let sparse = [
            rec(0, -0.055, 3, 0.5),
            rec(1, -0.052, 3, 0.5),
            rec(2, -0.051, 3, 0.5),
        ];
        let w5 = CalibrationWindow {
            min_bin_count: 5,
            ..w
        };
        assert!(matches!(
            bin_scenarios(&sparse, &w5),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn bin_count_tolerates_rounding() {
        assert_eq!(bin_count(&window(-0.35, 0.0)), 35);
        assert_eq!(bin_count(&window(-0.355, 0.0)), 36);
    }

    #[test]
    fn probit_noiseless_line() {
        let bins: Vec<_> = [-0.3, -0.2, -0.1]
            .iter()
            .map(|&x| bin(x, -2.0 * x - 0.5))
            .collect();
        let RecoveryModel::Probit { gamma, delta } = fit_probit(&bins).unwrap() else {
            panic!()
        };
        assert!((gamma - 2.0).abs() < 1e-9);
        assert!((delta - 0.5).abs() < 1e-9);
    }

    #[test]
    fn probit_flat_and_duplicates() {
        let flat: Vec<_> = [-0.3, -0.2, -0.1].iter().map(|&x| bin(x, 0.8)).collect();
        let RecoveryModel::Probit { gamma, delta } = fit_probit(&flat).unwrap() else {
            panic!()
        };
        assert!(gamma.abs() < 1e-12);
        assert!((delta + 0.8).abs() < 1e-12);

        let e = 0.03;
        let line = |x: f64| -2.0 * x - 0.5;
        let noisy = vec![
            bin(-0.3, line(-0.3) + e),
            bin(-0.3, line(-0.3) - e),
            bin(-0.1, line(-0.1) + e),
            bin(-0.1, line(-0.1) - e),
        ];
        let RecoveryModel::Probit { gamma, delta } = fit_probit(&noisy).unwrap() else {
            panic!()
        };
        assert!((gamma - 2.0).abs() < 1e-9);
        assert!((delta - 0.5).abs() < 1e-9);
    }

    #[test]
    fn probit_needs_two_distinct_bins() {
        assert!(fit_probit(&[bin(-0.1, 0.3)]).is_err());
        assert!(fit_probit(&[bin(-0.1, 0.3), bin(-0.1, 0.4)]).is_err());
    }

    #[test]
    fn constant_is_plain_mean() {
        let records = [
            rec(0, -0.1, 1, 0.2),
            rec(1, -0.1, 1, 0.4),
            rec(2, -0.1, 1, 0.9),
        ];
        assert_eq!(
            fit_constant(&records).unwrap(),
            RecoveryModel::Constant { r_bar: 0.5 }
        );
        let single = [rec(0, -0.1, 1, 0.73)];
        assert_eq!(
            fit_constant(&single).unwrap(),
            RecoveryModel::Constant { r_bar: 0.73 }
        );
        assert!(fit_constant::<f64>(&[]).is_err());
    }

    fn structural_records(b: f64) -> Vec<ScenarioRecord> {
        (1..200)
            .map(|i| {
                let p_d = i as f64 / 200.0;
                ScenarioRecord {
                    scenario_id: i,
                    x_m: -0.001 * i as f64,
                    n_defaults: i as usize,
                    p_d,
                    mean_recovery: Some(structural_recovery(p_d, b).unwrap()),
                    mean_loss: structural_expected_loss(p_d, b).unwrap(),
                }
            })
            .collect()
    }

    #[test]
    fn structural_noiseless_recovers_b() {
        let records = structural_records(0.15);
        for mode in [
            StructuralFitMode::RecoverySpace,
            StructuralFitMode::LossSpace,
        ] {
            let RecoveryModel::Structural { b } = fit_structural(&records, mode).unwrap() else {
                panic!()
            };
            assert!((b - 0.15).abs() < 1e-6, "{mode:?}: {b}");
        }
    }

    #[test]
    fn structural_handles_saturated_pd() {
        let mut records = structural_records(0.2);
        records.push(ScenarioRecord {
            scenario_id: 999,
            x_m: -0.6,
            n_defaults: 500,
            p_d: 1.0 - 1e-15,
            mean_recovery: Some(0.5),
            mean_loss: 0.5,
        });
        let RecoveryModel::Structural { b } =
            fit_structural(&records, StructuralFitMode::LossSpace).unwrap()
        else {
            panic!()
        };
        assert!(b.is_finite() && b > 0.0);
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section_minimize(|x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_reports_empty_window() {
        let records = [rec(0, 0.2, 3, 0.5)];
        let err = calibrate(
            &records,
            &window(-0.35, 0.0),
            ModelKind::Constant,
            StructuralFitMode::LossSpace,
        );
        match err {
            Err(Error::Calibration(msg)) => assert_eq!(msg, "empty calibration window"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn window_validation() {
        assert!(window(0.0, 0.0).validate().is_err());
        assert!(window(0.1, 0.0).validate().is_err());
        let w = CalibrationWindow {
            bin_width: 0.0,
            ..window(-0.3, 0.0)
        };
        assert!(w.validate().is_err());
    }
}
