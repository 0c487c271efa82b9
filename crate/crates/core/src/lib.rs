//! Portfolio credit simulation with recovery-rate modelling.
//!
//! A one-factor structural model of firm values (optionally with correlated
//! jumps) produces scenario-level default statistics. Three recovery models
//! are calibrated on those scenarios and compared through portfolio VaR and
//! expected tail loss.
//!
//! Everything numeric is generic over [`num::Real`] (`f32` or `f64`). The
//! plain type names at the crate root are the `f64` instantiations; the
//! `…F32` aliases select single precision.

// `!(a < b)` is used on purpose so NaN fails every validity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod calibration;
pub mod config;
pub mod csvio;
pub mod error;
pub mod figures;
pub mod gaussmath;
pub mod num;
pub mod portfolio;
pub mod process;
pub mod recovery;
pub mod risk;
pub mod rng;

pub use calibration::StructuralFitMode;
pub use error::{Error, Result};
pub use num::Real;
pub use process::ProcessKind;
pub use recovery::ModelKind;
pub use risk::RowStatus;

pub type ModelParams = process::ModelParams<f64>;
pub type JumpSizeParams = gaussmath::JumpSizeParams<f64>;
pub type ScenarioRecord = portfolio::ScenarioRecord<f64>;
pub type ScenarioSet = portfolio::ScenarioSet<f64>;
pub type RecoveryModel = recovery::RecoveryModel<f64>;
pub type CalibrationWindow = calibration::CalibrationWindow<f64>;
pub type Calibration = calibration::Calibration<f64>;
pub type RiskReport = risk::RiskReport<f64>;
pub type SweepConfig = risk::SweepConfig<f64>;
pub type SweepRow = risk::SweepRow<f64>;
pub type RunConfig = config::RunConfig<f64>;
pub type FigureData = figures::FigureData<f64>;

pub type ModelParamsF32 = process::ModelParams<f32>;
pub type JumpSizeParamsF32 = gaussmath::JumpSizeParams<f32>;
pub type ScenarioRecordF32 = portfolio::ScenarioRecord<f32>;
pub type ScenarioSetF32 = portfolio::ScenarioSet<f32>;
pub type RecoveryModelF32 = recovery::RecoveryModel<f32>;
pub type CalibrationWindowF32 = calibration::CalibrationWindow<f32>;
pub type CalibrationF32 = calibration::Calibration<f32>;
pub type RiskReportF32 = risk::RiskReport<f32>;
pub type SweepConfigF32 = risk::SweepConfig<f32>;
pub type SweepRowF32 = risk::SweepRow<f32>;
pub type RunConfigF32 = config::RunConfig<f32>;
pub type FigureDataF32 = figures::FigureData<f32>;
