//! Discrete densities on the positive integers: the discrete Pareto (Zeta) law
//! normalized by the Hurwitz zeta function, and the exponential component in
//! either its geometric (properly normalized) form or the literal continuous
//! density evaluated at integers.

mod sample;
mod zeta;

pub use sample::{sample_exp, sample_pareto, ExpSampler, ParetoSampler};
pub use zeta::{hurwitz_zeta, zeta_deriv_s, MAX_DIRECT_TERMS, MIN_EXPONENT};
pub(crate) use zeta::zeta_and_deriv;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TailmixError};

/// How the exponential component is turned into a density on integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExpMode {
    /// `(1 − e^{−λ}) e^{−λ(x − x_min)}`: a geometric pmf on `{x_min, x_min+1, ...}`.
    #[default]
    Discrete,
    /// `λ e^{−λx}` evaluated at integer `x`. Not normalized; kept for comparison
    /// with the continuous formula only.
    PaperLiteral,
}

impl ExpMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpMode::Discrete => "discrete",
            ExpMode::PaperLiteral => "paper-literal",
        }
    }
}

impl std::str::FromStr for ExpMode {
    type Err = TailmixError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" | "discrete-normalized" => Ok(ExpMode::Discrete),
            "paper-literal" | "literal" => Ok(ExpMode::PaperLiteral),
            other => Err(TailmixError::Contract(format!(
                "unknown exponential mode {other:?} (expected discrete or paper-literal)"
            ))),
        }
    }
}

impl std::fmt::Display for ExpMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the discrete Pareto law `f(x) = x^{−α} / ζ(α, x_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub alpha: f64,
    pub x_min: u64,
}

impl ParetoParams {
    pub fn new(alpha: f64, x_min: u64) -> Result<Self> {
        let p = Self { alpha, x_min };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= MIN_EXPONENT {
            return Err(domain(format!("pareto exponent must exceed 1, got {}", self.alpha)));
        }
        if self.x_min == 0 {
            return Err(domain("x_min must be at least 1"));
        }
        Ok(())
    }

    /// `ln ζ(α, x_min)`.
    pub fn ln_normalizer(&self) -> Result<f64> {
        Ok(hurwitz_zeta(self.alpha, self.x_min)?.ln())
    }
}

/// Parameters of one exponential component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpParams {
    pub lambda: f64,
    #[serde(default)]
    pub mode: ExpMode,
}

impl ExpParams {
    pub fn new(lambda: f64, mode: ExpMode) -> Result<Self> {
        let p = Self { lambda, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(domain(format!("exponential rate must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

fn check_support(x: u64, x_min: u64) -> Result<()> {
    if x < x_min {
        return Err(domain(format!("observation {x} is below the support minimum {x_min}")));
    }
    Ok(())
}

/// `ln f(x)` for the discrete Pareto given a precomputed `ln ζ(α, x_min)`.
#[inline]
pub(crate) fn pareto_ln_pmf_unchecked(x: u64, alpha: f64, ln_norm: f64) -> f64 {
    -alpha * (x as f64).ln() - ln_norm
}

/// `ln f(x)` for an exponential component. No domain checks.
#[inline]
pub(crate) fn exp_ln_pmf_unchecked(x: u64, lambda: f64, mode: ExpMode, x_min: u64) -> f64 {
    match mode {
        ExpMode::Discrete => (-(-lambda).exp_m1()).ln() - lambda * (x - x_min) as f64,
        ExpMode::PaperLiteral => lambda.ln() - lambda * x as f64,
    }
}

/// `∂ ln f(x) / ∂λ` for an exponential component.
#[inline]
pub(crate) fn exp_dln_pmf_dlambda(x: u64, lambda: f64, mode: ExpMode, x_min: u64) -> f64 {
    match mode {
        ExpMode::Discrete => 1.0 / lambda.exp_m1() - (x - x_min) as f64,
        ExpMode::PaperLiteral => 1.0 / lambda - x as f64,
    }
}

pub fn pareto_ln_pmf(x: u64, p: &ParetoParams) -> Result<f64> {
    p.validate()?;
    check_support(x, p.x_min)?;
    Ok(pareto_ln_pmf_unchecked(x, p.alpha, p.ln_normalizer()?))
}

/// Discrete Pareto probability `x^{−α} / ζ(α, x_min)`.
pub fn pareto_pmf(x: u64, p: &ParetoParams) -> Result<f64> {
    pareto_ln_pmf(x, p).map(f64::exp)
}

/// Survival function `P(X > x) = ζ(α, x+1) / ζ(α, x_min)`; equals 1 below the support.
pub fn pareto_sf(x: u64, p: &ParetoParams) -> Result<f64> {
    p.validate()?;
    if x < p.x_min {
        return Ok(1.0);
    }
    Ok(hurwitz_zeta(p.alpha, x + 1)? / hurwitz_zeta(p.alpha, p.x_min)?)
}

pub fn pareto_cdf(x: u64, p: &ParetoParams) -> Result<f64> {
    pareto_sf(x, p).map(|s| 1.0 - s)
}

pub fn exp_ln_pmf(x: u64, p: &ExpParams, x_min: u64) -> Result<f64> {
    p.validate()?;
    if x_min == 0 {
        return Err(domain("x_min must be at least 1"));
    }
    check_support(x, x_min)?;
    Ok(exp_ln_pmf_unchecked(x, p.lambda, p.mode, x_min))
}

/// Exponential component density at integer `x` (see [`ExpMode`]).
pub fn exp_pmf(x: u64, p: &ExpParams, x_min: u64) -> Result<f64> {
    exp_ln_pmf(x, p, x_min).map(f64::exp)
}

/// `P(X > x)` for the geometric form. Only meaningful in discrete mode.
pub fn exp_sf(x: u64, p: &ExpParams, x_min: u64) -> Result<f64> {
    p.validate()?;
    if p.mode != ExpMode::Discrete {
        return Err(TailmixError::Unsupported(
            "the literal exponential density has no distribution function on the integers".into(),
        ));
    }
    if x < x_min {
        return Ok(1.0);
    }
    Ok((-p.lambda * (x - x_min + 1) as f64).exp())
}
