//! Recovery-rate models: constant, probit in the market return, and the
//! structural one-parameter relation between recovery and default probability.

use std::fmt;

use crate::error::{Error, Result};
use crate::gaussmath::{std_normal_cdf, std_normal_quantile};
use crate::num::Real;
use crate::portfolio::ScenarioRecord;

/// Default probabilities are clamped to `[PD_CLAMP, 1 - PD_CLAMP]` before the
/// structural formulas are evaluated.
pub const PD_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Constant,
    Probit,
    Structural,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Constant,
        ModelKind::Probit,
        ModelKind::Structural,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Constant => "constant",
            ModelKind::Probit => "probit",
            ModelKind::Structural => "structural",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ModelKind::Constant),
            "probit" => Ok(ModelKind::Probit),
            "structural" => Ok(ModelKind::Structural),
            other => Err(Error::constraint(
                "model",
                format!("expected constant, probit or structural, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecoveryModel<T: Real = f64> {
    Constant {
        r_bar: T,
    },
    /// `R = Φ(-gamma * x_m - delta)`.
    Probit {
        gamma: T,
        delta: T,
    },
    Structural {
        b: T,
    },
}

impl<T: Real> RecoveryModel<T> {
    pub fn constant(r_bar: T) -> Result<Self> {
        if !(r_bar >= T::zero() && r_bar <= T::one()) {
            return Err(Error::Domain(format!(
                "constant recovery must lie in [0, 1], got {r_bar}"
            )));
        }
        Ok(RecoveryModel::Constant { r_bar })
    }

    pub fn probit(gamma: T, delta: T) -> Result<Self> {
        if !gamma.is_finite() || !delta.is_finite() {
            return Err(Error::Domain("probit parameters must be finite".into()));
        }
        Ok(RecoveryModel::Probit { gamma, delta })
    }

    pub fn structural(b: T) -> Result<Self> {
        if !(b > T::zero()) || !b.is_finite() {
            return Err(Error::Domain(format!(
                "structural B must be positive, got {b}"
            )));
        }
        Ok(RecoveryModel::Structural { b })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            RecoveryModel::Constant { .. } => ModelKind::Constant,
            RecoveryModel::Probit { .. } => ModelKind::Probit,
            RecoveryModel::Structural { .. } => ModelKind::Structural,
        }
    }

    /// `(param1, param2)` as persisted in model and calibration files.
    pub fn params(&self) -> (T, Option<T>) {
        match *self {
            RecoveryModel::Constant { r_bar } => (r_bar, None),
            RecoveryModel::Probit { gamma, delta } => (gamma, Some(delta)),
            RecoveryModel::Structural { b } => (b, None),
        }
    }

    pub fn from_params(kind: ModelKind, param1: T, param2: Option<T>) -> Result<Self> {
        match (kind, param2) {
            (ModelKind::Constant, None) => Self::constant(param1),
            (ModelKind::Probit, Some(delta)) => Self::probit(param1, delta),
            (ModelKind::Structural, None) => Self::structural(param1),
            (kind, _) => Err(Error::Data(format!(
                "wrong parameter count for {kind} model"
            ))),
        }
    }
}

/// Probit recovery `Φ(-gamma * x_m - delta)`.
#[inline]
pub fn probit_recovery<T: Real>(x_m: T, gamma: T, delta: T) -> T {
    std_normal_cdf(-gamma * x_m - delta)
}

fn check_structural_args<T: Real>(p_d: T, b: T) -> Result<()> {
    if !(p_d > T::zero() && p_d < T::one()) {
        return Err(Error::Domain(format!(
            "default probability must lie in (0, 1), got {p_d}"
        )));
    }
    if !(b > T::zero()) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "structural B must be positive, got {b}"
        )));
    }
    Ok(())
}

/// `exp(-B q + B²/2) Φ(q - B)` with `q = Φ⁻¹(p_d)`: the expected recovered
/// amount per unit of portfolio, `p_d * R(p_d)`.
#[inline]
pub(crate) fn recovered_mass<T: Real>(q: T, b: T) -> T {
    (-b * q + b * b / T::lit(2.0)).exp() * std_normal_cdf(q - b)
}

/// Structural recovery rate as a function of the default probability.
pub fn structural_recovery<T: Real>(p_d: T, b: T) -> Result<T> {
    check_structural_args(p_d, b)?;
    let q = std_normal_quantile(p_d)?;
    Ok(recovered_mass(q, b) / p_d)
}

/// Expected portfolio loss implied by the structural recovery, `p_d (1 - R(p_d))`.
pub fn structural_expected_loss<T: Real>(p_d: T, b: T) -> Result<T> {
    check_structural_args(p_d, b)?;
    let q = std_normal_quantile(p_d)?;
    Ok(p_d - recovered_mass(q, b))
}

/// Clamps a default probability into the range where the structural formulas are finite.
#[inline]
pub fn clamp_pd<T: Real>(p_d: T) -> T {
    let eps = T::lit(PD_CLAMP);
    p_d.max(eps).min(T::one() - eps)
}

/// Recovery the model predicts for one scenario.
pub fn model_recovery<T: Real>(model: &RecoveryModel<T>, record: &ScenarioRecord<T>) -> T {
    match *model {
        RecoveryModel::Constant { r_bar } => r_bar,
        RecoveryModel::Probit { gamma, delta } => probit_recovery(record.x_m, gamma, delta),
        RecoveryModel::Structural { b } => {
            if record.p_d <= T::zero() {
                return T::one();
            }
            // Clamped arguments are always inside the domain.
            structural_recovery(clamp_pd(record.p_d), b).unwrap_or_else(|_| T::one())
        }
    }
}
