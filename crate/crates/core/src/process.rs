//! Correlated jump-diffusion for firm asset values, discretised with a
//! multiplicative Euler scheme.
//!
//! Over one step of length `dt` a firm's value is multiplied by
//!
//! ```text
//! 1 + mu*dt + sqrt(c)*sigma*eta*sqrt(dt) + dJ_m + sqrt(1-c)*sigma*eps*sqrt(dt) + dJ_k
//! ```
//!
//! where `eta`, `dJ_m` are shared by every firm of a scenario (the market
//! path) and `eps`, `dJ_k` are firm specific. A factor at or below zero
//! wipes the firm out for good.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussmath::{shifted_lognormal_params, JumpSizeParams};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProcessKind {
    #[default]
    Diffusion,
    JumpDiffusion,
}

impl ProcessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessKind::Diffusion => "diffusion",
            ProcessKind::JumpDiffusion => "jump_diffusion",
        }
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffusion" => Ok(ProcessKind::Diffusion),
            "jump_diffusion" => Ok(ProcessKind::JumpDiffusion),
            other => Err(Error::constraint(
                "process",
                format!("expected `diffusion` or `jump_diffusion`, got `{other}`"),
            )),
        }
    }
}

/// Process, portfolio and Monte Carlo constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T: Real = f64> {
    /// Drift per unit time.
    pub mu: T,
    /// Total volatility per square-root time.
    pub sigma: T,
    /// Weight of the market factor in the variance, in [0, 1].
    pub c: T,
    /// Jump intensity per unit time, shared by market and idiosyncratic jumps.
    pub lambda: T,
    pub jump: JumpSizeParams<T>,
    /// Initial asset value of every firm.
    pub v0: T,
    /// Face value of the zero-coupon debt.
    pub face: T,
    pub maturity: T,
    pub steps: usize,
    pub firms: usize,
    pub scenarios: usize,
    pub seed: u64,
    pub process_kind: ProcessKind,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            mu: T::lit(0.05),
            sigma: T::lit(0.15),
            c: T::lit(0.5),
            lambda: T::lit(0.005),
            jump: shifted_lognormal_params(T::lit(0.4), T::lit(0.3))
                .expect("default jump moments are valid"),
            v0: T::lit(100.0),
            face: T::lit(75.0),
            maturity: T::one(),
            steps: 250,
            firms: 500,
            scenarios: 100_000,
            seed: 42,
            process_kind: ProcessKind::Diffusion,
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::constraint(key, "must be finite"))
            }
        };
        finite("mu", self.mu)?;
        finite("sigma", self.sigma)?;
        finite("c", self.c)?;
        finite("lambda", self.lambda)?;
        finite("v0", self.v0)?;
        finite("face", self.face)?;
        finite("maturity", self.maturity)?;
        if self.sigma < T::zero() {
            return Err(Error::constraint("sigma", "must be >= 0"));
        }
        if self.c < T::zero() || self.c > T::one() {
            return Err(Error::constraint("c", "must lie in [0, 1]"));
        }
        if self.lambda < T::zero() {
            return Err(Error::constraint("lambda", "must be >= 0"));
        }
        if self.v0 <= T::zero() {
            return Err(Error::constraint("v0", "must be > 0"));
        }
        if self.face <= T::zero() {
            return Err(Error::constraint("face", "must be > 0"));
        }
        if self.maturity <= T::zero() {
            return Err(Error::constraint("maturity", "must be > 0"));
        }
        if self.steps == 0 {
            return Err(Error::constraint("steps", "must be >= 1"));
        }
        if self.firms == 0 {
            return Err(Error::constraint("firms", "must be >= 1"));
        }
        if self.scenarios == 0 {
            return Err(Error::constraint("scenarios", "must be >= 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.maturity / T::from_count(self.steps)
    }

    /// Intensity actually used by the simulator: zero for pure diffusion.
    #[inline]
    pub fn effective_lambda(&self) -> T {
        match self.process_kind {
            ProcessKind::Diffusion => T::zero(),
            ProcessKind::JumpDiffusion => self.lambda,
        }
    }

    #[inline]
    pub fn jumps_enabled(&self) -> bool {
        self.effective_lambda() > T::zero()
    }

    /// Idiosyncratic log-volatility over the horizon, `sqrt((1-c) sigma² T)`.
    pub fn structural_b(&self) -> T {
        ((T::one() - self.c) * self.sigma * self.sigma * self.maturity).sqrt()
    }
}

/// Market-factor draws of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath<T: Real = f64> {
    pub market_shocks: Vec<T>,
    pub market_jumps: Vec<T>,
}

impl<T: Real> MarketPath<T> {
    /// A path with all shocks and jumps zero.
    pub fn quiet(steps: usize) -> Self {
        Self {
            market_shocks: vec![T::zero(); steps],
            market_jumps: vec![T::zero(); steps],
        }
    }

    pub fn len(&self) -> usize {
        self.market_shocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.market_shocks.is_empty()
    }
}

#[inline]
fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(StandardNormal.sample(rng))
}

/// Number of jumps in an interval of length `dt`, Poisson with mean `lambda * dt`.
pub fn sample_jump_count<T: Real, R: Rng + ?Sized>(lambda: T, dt: T, rng: &mut R) -> u64 {
    let mean = (lambda * dt).as_f64();
    if !(mean > 0.0) {
        return 0;
    }
    if mean > 30.0 {
        // Inversion gets slow and loses precision for large means.
        return Poisson::new(mean)
            .map(|d| d.sample(rng) as u64)
            .unwrap_or(0);
    }
    let u: f64 = rng.random();
    let mut term = (-mean).exp();
    let mut cdf = term;
    let mut n = 0u64;
    while u > cdf && term > 0.0 {
        n += 1;
        term *= mean / n as f64;
        cdf += term;
    }
    n
}

/// One jump size `Λ`, with `Λ + 1` lognormal so `Λ >= -1`.
#[inline]
fn sample_jump_size<T: Real, R: Rng + ?Sized>(params: &JumpSizeParams<T>, rng: &mut R) -> T {
    if params.sigma_log == T::zero() {
        return params.mean_shifted - T::one();
    }
    let z: T = standard_normal(rng);
    (params.mu_log + params.sigma_log * z).exp() - T::one()
}

/// Sum of `count` independent jump sizes; zero when `count == 0`.
pub fn sample_jump_increment<T: Real, R: Rng + ?Sized>(
    params: &JumpSizeParams<T>,
    count: u64,
    rng: &mut R,
) -> T {
    (0..count).fold(T::zero(), |acc, _| acc + sample_jump_size(params, rng))
}

/// Draws the shared market shocks and jump increments for one scenario.
pub fn draw_market_path<T: Real, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    rng: &mut R,
) -> MarketPath<T> {
    let dt = params.dt();
    let lambda = params.effective_lambda();
    let jumps = params.jumps_enabled();
    let mut path = MarketPath {
        market_shocks: Vec::with_capacity(params.steps),
        market_jumps: Vec::with_capacity(params.steps),
    };
    for _ in 0..params.steps {
        path.market_shocks.push(standard_normal(rng));
        let increment = if jumps {
            let count = sample_jump_count(lambda, dt, rng);
            sample_jump_increment(&params.jump, count, rng)
        } else {
            T::zero()
        };
        path.market_jumps.push(increment);
    }
    path
}

/// Per-scenario precomputation shared by all firms on one market path.
#[derive(Debug, Clone)]
pub struct FirmStepper<T: Real = f64> {
    /// `1 + mu dt + sqrt(c) sigma eta_t sqrt(dt) + dJ_m,t` for each step.
    base: Vec<T>,
    idio_scale: T,
    v0: T,
    dt: T,
    lambda: T,
    jump: JumpSizeParams<T>,
    jumps: bool,
    scratch: Vec<(usize, T)>,
}

impl<T: Real> FirmStepper<T> {
    pub fn new(params: &ModelParams<T>, market: &MarketPath<T>) -> Result<Self> {
        if market.market_shocks.len() != params.steps || market.market_jumps.len() != params.steps {
            return Err(Error::Domain(format!(
                "market path has {} steps, parameters need {}",
                market.len(),
                params.steps
            )));
        }
        let dt = params.dt();
        let sqrt_dt = dt.sqrt();
        let drift = T::one() + params.mu * dt;
        let market_scale = params.c.sqrt() * params.sigma * sqrt_dt;
        let jumps = params.jumps_enabled();
        let base = market
            .market_shocks
            .iter()
            .zip(&market.market_jumps)
            .map(|(&eta, &dj)| {
                let b = drift + market_scale * eta;
                if jumps {
                    b + dj
                } else {
                    b
                }
            })
            .collect();
        Ok(Self {
            base,
            idio_scale: (T::one() - params.c).sqrt() * params.sigma * sqrt_dt,
            v0: params.v0,
            dt,
            lambda: params.effective_lambda(),
            jump: params.jump,
            jumps,
            scratch: Vec::new(),
        })
    }

    /// Terminal asset value of one firm whose idiosyncratic draws come from `rng`.
    ///
    /// Idiosyncratic jumps are placed by exponential inter-arrival times and
    /// binned into steps, which gives the same independent Poisson step
    /// counts as drawing a count per step. Arrivals are drawn before the
    /// diffusion shocks, and nothing is drawn for them when jumps are off.
    pub fn terminal_value<R: Rng + ?Sized>(&mut self, rng: &mut R) -> T {
        self.scratch.clear();
        if self.jumps {
            let horizon = self.dt * T::from_count(self.base.len());
            let last = self.base.len() - 1;
            let mut t = T::zero();
            loop {
                let wait: f64 = Exp1.sample(rng);
                t = t + T::lit(wait) / self.lambda;
                if t >= horizon {
                    break;
                }
                let step = (t / self.dt).to_usize().unwrap_or(last).min(last);
                let size = sample_jump_size(&self.jump, rng);
                match self.scratch.last_mut() {
                    Some((s, acc)) if *s == step => *acc = *acc + size,
                    _ => self.scratch.push((step, size)),
                }
            }
        }

        let mut value = self.v0;
        let mut pending = self.scratch.iter().peekable();
        for (step, &base) in self.base.iter().enumerate() {
            let eps: T = standard_normal(rng);
            let mut factor = base + self.idio_scale * eps;
            if let Some(&&(s, dj)) = pending.peek() {
                if s == step {
                    factor = factor + dj;
                    pending.next();
                }
            }
            if factor <= T::zero() {
                return T::zero();
            }
            value = value * factor;
        }
        value
    }
}

/// Terminal value `V_k(T)` of a single firm on the given market path.
pub fn simulate_firm_terminal<T: Real, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    market: &MarketPath<T>,
    rng: &mut R,
) -> Result<T> {
    Ok(FirmStepper::new(params, market)?.terminal_value(rng))
}
