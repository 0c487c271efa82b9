//! Inner and outer Monte Carlo loops: one market path per scenario, `K`
//! firms per path, summarised into a [`ScenarioRecord`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{ordered_sum, Real};
use crate::process::{draw_market_path, FirmStepper, ModelParams};
use crate::rng::{ScenarioKey, MARKET_LANE};

/// Summary statistics of one outer-loop realisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioRecord<T: Real = f64> {
    pub scenario_id: u64,
    /// Cross-firm mean terminal return.
    pub x_m: T,
    pub n_defaults: usize,
    /// Default fraction `n_defaults / K`.
    pub p_d: T,
    /// Mean recovery of the defaulted firms; `None` without defaults.
    pub mean_recovery: Option<T>,
    /// Portfolio loss, the mean of the per-firm losses.
    pub mean_loss: T,
}

impl<T: Real> ScenarioRecord<T> {
    /// Summarises a set of firm terminal values sharing `v0` and `face`.
    pub fn from_terminal_values(scenario_id: u64, values: &[T], v0: T, face: T) -> Self {
        assert!(!values.is_empty(), "a scenario needs at least one firm");
        let k = T::from_count(values.len());
        let x_m = ordered_sum(values.iter().map(|&v| v / v0 - T::one())) / k;
        let n_defaults = values.iter().filter(|&&v| v < face).count();
        let mean_loss = ordered_sum(values.iter().map(|&v| firm_loss(v, face))) / k;
        let mean_recovery =
            (n_defaults > 0).then(|| T::one() - k * mean_loss / T::from_count(n_defaults));
        Self {
            scenario_id,
            x_m,
            n_defaults,
            p_d: T::from_count(n_defaults) / k,
            mean_recovery,
            mean_loss,
        }
    }
}

/// Loss of one firm as a fraction of face value: `(1 - v/F)` when `v < F`, else 0.
#[inline]
pub fn firm_loss<T: Real>(v_terminal: T, face: T) -> T {
    let shortfall = T::one() - v_terminal / face;
    if shortfall > T::zero() {
        shortfall
    } else {
        T::zero()
    }
}

/// All scenario records of a run, in scenario order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet<T: Real = f64> {
    pub params: ModelParams<T>,
    pub records: Vec<ScenarioRecord<T>>,
}

impl<T: Real> ScenarioSet<T> {
    /// Checks the dense-id and per-record invariants.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.scenario_id != i as u64 {
                return Err(Error::Data(format!(
                    "scenario ids must be dense: row {i} has id {}",
                    r.scenario_id
                )));
            }
            let p = r.p_d;
            if !(p >= T::zero() && p <= T::one()) || !r.x_m.is_finite() {
                return Err(Error::Data(format!("scenario {i}: values out of range")));
            }
            match r.mean_recovery {
                None if r.n_defaults > 0 => {
                    return Err(Error::Data(format!(
                        "scenario {i}: defaults without recovery"
                    )))
                }
                Some(_) if r.n_defaults == 0 => {
                    return Err(Error::Data(format!(
                        "scenario {i}: recovery without defaults"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Execution knobs that do not change results.
#[derive(Debug, Clone)]
pub struct SimulationOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Upper bound on `M * K * N` Euler steps.
    pub step_budget: u128,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            workers: None,
            step_budget: 1_000_000_000_000,
        }
    }
}

/// Simulates scenario `scenario_id` from its own substreams of `master_seed`.
pub fn run_scenario<T: Real>(
    params: &ModelParams<T>,
    scenario_id: u64,
    master_seed: u64,
) -> Result<ScenarioRecord<T>> {
    let key = ScenarioKey::new(master_seed, scenario_id);
    let market = draw_market_path(params, &mut key.stream(MARKET_LANE));
    let mut stepper = FirmStepper::new(params, &market)?;
    let values: Vec<T> = (0..params.firms as u64)
        .map(|firm| stepper.terminal_value(&mut key.stream(firm)))
        .collect();
    Ok(ScenarioRecord::from_terminal_values(
        scenario_id,
        &values,
        params.v0,
        params.face,
    ))
}

pub fn run_simulation<T: Real>(params: &ModelParams<T>) -> Result<ScenarioSet<T>> {
    run_simulation_with(params, &SimulationOptions::default())
}

/// Runs all `M` scenarios in parallel. Output is identical for any worker count.
pub fn run_simulation_with<T: Real>(
    params: &ModelParams<T>,
    options: &SimulationOptions,
) -> Result<ScenarioSet<T>> {
    params.validate()?;
    let work = params.scenarios as u128 * params.firms as u128 * params.steps as u128;
    if work > options.step_budget {
        return Err(Error::Budget {
            work,
            budget: options.step_budget,
        });
    }
    let simulate = || {
        (0..params.scenarios as u64)
            .into_par_iter()
            .map(|id| run_scenario(params, id, params.seed))
            .collect::<Result<Vec<_>>>()
    };
    let records = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Data(format!("cannot start worker pool: {e}")))?
            .install(simulate)?,
        None => simulate()?,
    };
    Ok(ScenarioSet {
        params: params.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessKind;
    type Params = ModelParams<f64>;

    #[test]
    fn firm_loss_cases() {
        assert_eq!(firm_loss(90.0, 75.0), 0.0);
        assert!((firm_loss(60.0_f64, 75.0) - 0.2).abs() < 1e-15);
        assert_eq!(firm_loss(0.0, 75.0), 1.0);
        assert_eq!(firm_loss(75.0, 75.0), 0.0);
    }

    #[test]
    fn two_firm_hand_example() {
        let r = ScenarioRecord::from_terminal_values(0, &[60.0_f64, 90.0], 100.0, 75.0);
        assert!((r.x_m + 0.25).abs() < 1e-15);
        assert_eq!(r.n_defaults, 1);
        assert_eq!(r.p_d, 0.5);
        assert!((r.mean_loss - 0.1).abs() < 1e-15);
        assert!((r.mean_recovery.unwrap() - 0.8).abs() < 1e-15);
    }

    fn flat(mu: f64) -> Params {
        Params {
            mu,
            sigma: 0.0,
            lambda: 0.0,
            steps: 1,
            firms: 20,
            scenarios: 3,
            ..Params::default()
        }
    }

    #[test]
    fn deterministic_no_default() {
        let r = run_scenario(&flat(0.05), 0, 1).unwrap();
        assert_eq!(r.n_defaults, 0);
        assert_eq!(r.mean_loss, 0.0);
        assert_eq!(r.mean_recovery, None);
    }

    #[test]
    fn deterministic_full_default() {
        let r = run_scenario(&flat(-0.5), 0, 1).unwrap();
        assert_eq!(r.p_d, 1.0);
        assert!((r.mean_recovery.unwrap() - 50.0 / 75.0).abs() < 1e-12);
        assert!((r.x_m + 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_scenario_run_matches_run_scenario() {
        let params = Params {
            scenarios: 1,
            firms: 50,
            steps: 20,
            seed: 11,
            ..Params::default()
        };
        let set = run_simulation(&params).unwrap();
        assert_eq!(set.records, vec![run_scenario(&params, 0, 11).unwrap()]);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let params = Params {
            scenarios: 40,
            firms: 30,
            steps: 25,
            process_kind: ProcessKind::JumpDiffusion,
            lambda: 2.0,
            ..Params::default()
        };
        let one = run_simulation_with(
            &params,
            &SimulationOptions {
                workers: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let eight = run_simulation_with(
            &params,
            &SimulationOptions {
                workers: Some(8),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one, eight);
        one.validate().unwrap();
    }

    #[test]
    fn budget_is_enforced() {
        let params = ModelParams::<f64>::default();
        let options = SimulationOptions {
            step_budget: 1000,
            ..Default::default()
        };
        assert!(matches!(
            run_simulation_with(&params, &options),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn higher_face_never_reduces_defaults() {
        let base = Params {
            scenarios: 1,
            firms: 200,
            steps: 50,
            ..Params::default()
        };
        for id in 0..10 {
            let mut prev = 0;
            for face in [60.0, 75.0, 90.0, 105.0] {
                let params = Params {
                    face,
                    ..base.clone()
                };
                let r = run_scenario(&params, id, 3).unwrap();
                assert!(r.n_defaults >= prev);
                prev = r.n_defaults;
            }
        }
    }
}
