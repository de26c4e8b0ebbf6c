//! Inverse-CDF samplers for the component laws.

use rand::Rng;

use super::{hurwitz_zeta, ExpMode, ExpParams, ParetoParams};
use crate::error::{Result, TailmixError};
use crate::rng::{open01, stream_rng};

/// Cumulative mass at which the lookup table stops growing.
const TABLE_MASS: f64 = 1.0 - 1e-12;
/// Hard cap on table length; heavy tails (α near 1) never reach `TABLE_MASS`.
const MAX_TABLE: usize = 1 << 20;

/// Discrete Pareto sampler.
///
/// Keeps a lazily extended table of cumulative probabilities and binary-searches
/// it. Uniforms landing beyond the table are drawn from a continuous Pareto on
/// `[X + ½, ∞)` and rounded, where `X` is the last tabled value.
#[derive(Debug, Clone)]
pub struct ParetoSampler {
    params: ParetoParams,
    inv_norm: f64,
    cdf: Vec<f64>,
    // No further growth: mass cap or length cap reached.
    sealed: bool,
}

impl ParetoSampler {
    pub fn new(params: ParetoParams) -> Result<Self> {
        params.validate()?;
        let inv_norm = 1.0 / hurwitz_zeta(params.alpha, params.x_min)?;
        Ok(Self { params, inv_norm, cdf: Vec::new(), sealed: false })
    }

    pub fn params(&self) -> &ParetoParams {
        &self.params
    }

    fn extend(&mut self) {
        let old = self.cdf.len();
        let target = (old * 2).max(64).min(MAX_TABLE);
        let mut acc = self.cdf.last().copied().unwrap_or(0.0);
        for i in old..target {
            let x = (self.params.x_min + i as u64) as f64;
            acc += (-self.params.alpha * x.ln()).exp() * self.inv_norm;
            self.cdf.push(acc);
            if acc >= TABLE_MASS {
                self.sealed = true;
                break;
            }
        }
        if self.cdf.len() >= MAX_TABLE {
            self.sealed = true;
        }
    }

    fn tail_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let last = self.params.x_min + self.cdf.len() as u64 - 1;
        let lo = last as f64 + 0.5;
        let v = open01(rng);
        let y = lo * v.powf(-1.0 / (self.params.alpha - 1.0));
        // `as` saturates at u64::MAX for astronomically large draws.
        (y.round() as u64).max(last + 1)
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        loop {
            if let Some(&top) = self.cdf.last() {
                if u < top {
                    let idx = self.cdf.partition_point(|&c| c <= u);
                    return self.params.x_min + idx as u64;
                }
            }
            if self.sealed {
                return self.tail_draw(rng);
            }
            self.extend();
        }
    }
}

/// Geometric sampler for the discrete exponential component.
#[derive(Debug, Clone, Copy)]
pub struct ExpSampler {
    lambda: f64,
    x_min: u64,
}

impl ExpSampler {
    pub fn new(params: ExpParams, x_min: u64) -> Result<Self> {
        params.validate()?;
        if params.mode != ExpMode::Discrete {
            return Err(TailmixError::Unsupported(
                "cannot sample the literal exponential density: it is not a pmf on the integers".into(),
            ));
        }
        if x_min == 0 {
            return Err(TailmixError::Domain("x_min must be at least 1".into()));
        }
        Ok(Self { lambda: params.lambda, x_min })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = open01(rng);
        self.x_min + (-u.ln() / self.lambda).floor() as u64
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(TailmixError::Contract("sample size must be at least 1".into()));
    }
    Ok(())
}

/// `n` i.i.d. discrete Pareto draws, determined by `seed`.
pub fn sample_pareto(params: &ParetoParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    check_n(n)?;
    let mut sampler = ParetoSampler::new(*params)?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

/// `n` i.i.d. geometric draws on `{x_min, ...}`, determined by `seed`.
pub fn sample_exp(params: &ExpParams, x_min: u64, n: usize, seed: u64) -> Result<Vec<u64>> {
    check_n(n)?;
    let sampler = ExpSampler::new(*params, x_min)?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}
