//! Constrained maximum-likelihood fitting.
//!
//! Each restart starts from a random interior point and solves a sequence of
//! barrier problems `max l(θ) + c_t · Σ ln g_j(θ)` with decreasing `c_t`, each
//! warm-started from the previous stage. The barrier covers every constraint:
//! positive weights and remainder, `1 < α < alpha_max`, `0 < λ_i < lambda_max`
//! and, for two exponentials, `λ_1 > λ_2`. Restarts run in parallel and the
//! best raw log-likelihood wins, ties going to the lowest restart index.

mod bfgs;
mod objective;

pub use objective::{penalized_objective, Bounds, Objective};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TailmixError};
use crate::mixture::{BinnedSeries, MixtureParams, ModelKind, ModelSpec};
use crate::rng::{open01, stream_rng};
use crate::select::bic;
use bfgs::{minimize, BfgsOptions};
use objective::{from_free, to_free};

/// Decreasing barrier weights, one per continuation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BarrierSchedule {
    weights: Vec<f64>,
}

impl BarrierSchedule {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(TailmixError::Contract("barrier schedule is empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(TailmixError::Contract(format!("barrier weights must be positive: {weights:?}")));
        }
        if weights.windows(2).any(|w| w[1] >= w[0]) {
            return Err(TailmixError::Contract(format!("barrier weights must decrease: {weights:?}")));
        }
        Ok(Self { weights })
    }

    /// `steps` weights spaced geometrically from `first` down to `last`.
    pub fn geometric(first: f64, last: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Self::new(vec![first]);
        }
        let ratio = (last / first).powf(1.0 / (steps - 1) as f64);
        let mut w: Vec<f64> = (0..steps).map(|i| first * ratio.powi(i as i32)).collect();
        w[steps - 1] = last;
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn last(&self) -> f64 {
        *self.weights.last().expect("nonempty")
    }
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self { weights: vec![1e-2, 1e-5, 1e-8] }
    }
}

impl TryFrom<Vec<f64>> for BarrierSchedule {
    type Error = TailmixError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BarrierSchedule> for Vec<f64> {
    fn from(s: BarrierSchedule) -> Self {
        s.weights
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub restarts: usize,
    pub alpha_max: f64,
    pub lambda_max: f64,
    /// Stop an inner solve when the gradient norm of the per-observation
    /// objective falls below this.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    pub schedule: BarrierSchedule,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            alpha_max: 4.0,
            lambda_max: 3.5,
            inner_tol: 1e-6,
            max_inner_iters: 500,
            schedule: BarrierSchedule::default(),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn bounds(&self) -> Bounds {
        Bounds { alpha_max: self.alpha_max, lambda_max: self.lambda_max }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(TailmixError::Contract("at least one restart is required".into()));
        }
        if !(self.alpha_max > 1.0) || !self.alpha_max.is_finite() {
            return Err(TailmixError::Contract(format!("alpha_max must exceed 1, got {}", self.alpha_max)));
        }
        if !(self.lambda_max > 0.0) || !self.lambda_max.is_finite() {
            return Err(TailmixError::Contract(format!("lambda_max must be positive, got {}", self.lambda_max)));
        }
        if !(self.inner_tol > 0.0) || self.max_inner_iters == 0 {
            return Err(TailmixError::Contract("inner solver needs a positive tolerance and iteration cap".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub restart_index_of_best: usize,
    /// Every stage of the winning restart met the gradient tolerance.
    pub converged: bool,
    pub final_grad_norm: f64,
    /// `c_last · Σ ln g_j(θ̂)` at the returned point.
    pub barrier_residual: f64,
    pub restarts_run: usize,
    pub restarts_failed: usize,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: MixtureParams,
    pub loglik: f64,
    pub bic: f64,
    pub n: usize,
    /// [`BinnedSeries::digest`] of the data the model was fitted on.
    pub series_digest: u64,
    pub diagnostics: FitDiagnostics,
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random strictly feasible starting point for restart `restart` of a fit seeded with `seed`.
///
/// Weights are uniform on the simplex, clipped to `[0.02, 0.98]`; rates uniform on
/// `[0.05, 3.0]`; the exponent uniform on `[1.1, 3.5]`. Ranges shrink to stay inside
/// tighter configured bounds.
pub fn random_init(spec: &ModelSpec, cfg: &FitConfig, restart: usize) -> MixtureParams {
    let mut rng = stream_rng(cfg.seed, restart as u64);
    let k = spec.n_exp;

    let mut weights: Vec<f64> = (0..=k).map(|_| -open01(&mut rng).ln()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w = (*w / total).clamp(0.02, 0.98));
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    if k == 0 {
        weights = vec![1.0];
    }

    let l_hi = 3.0f64.min(0.95 * cfg.lambda_max);
    let l_lo = 0.05f64.min(0.5 * l_hi);
    let mut lambdas: Vec<f64> = (0..k).map(|_| uniform(&mut rng, l_lo, l_hi)).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    if k == 2 && lambdas[0] - lambdas[1] < 1e-6 {
        lambdas[1] *= 0.9;
    }

    let a_hi = 3.5f64.min(cfg.alpha_max - 0.05 * (cfg.alpha_max - 1.0));
    let a_lo = 1.1f64.min(1.0 + 0.5 * (a_hi - 1.0));
    let alpha = uniform(&mut rng, a_lo, a_hi);

    MixtureParams { weights, lambdas, alpha }
}

/// Starting points for `target` built from a fit of the next smaller model, so
/// the larger fit can reach at least the smaller model's likelihood.
pub fn nested_starts(smaller: &MixtureParams, target: &ModelSpec, cfg: &FitConfig) -> Vec<MixtureParams> {
    let k_small = smaller.lambdas.len();
    if target.n_exp != k_small + 1 {
        return Vec::new();
    }
    let lmax = 0.95 * cfg.lambda_max;
    let clamp_l = |l: f64| l.clamp(1e-3, lmax);
    let new_weight = 0.02;
    let scaled: Vec<f64> = smaller.weights.iter().map(|w| w * (1.0 - new_weight)).collect();

    let mut candidates: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut push = |new_l: f64| {
        let mut weights = vec![new_weight];
        weights.extend_from_slice(&scaled);
        let mut lambdas = vec![clamp_l(new_l)];
        lambdas.extend_from_slice(&smaller.lambdas);
        candidates.push((weights, lambdas));
    };
    match smaller.lambdas.first() {
        None => {
            push(0.3);
            push(1.5);
        }
        Some(&l) => {
            push(l * 3.0);
            push(l / 3.0);
        }
    }
    if let Some(&l) = smaller.lambdas.first() {
        // Split the existing exponential in two around its rate.
        let m = smaller.weights[0];
        let mut weights = vec![m / 2.0, m / 2.0];
        weights.extend_from_slice(&smaller.weights[1..]);
        candidates.push((weights, vec![clamp_l(l * 1.25), clamp_l(l / 1.25)]));
    }

    candidates
        .into_iter()
        .map(|(weights, lambdas)| MixtureParams { weights, lambdas, alpha: smaller.alpha }.canonicalized())
        .filter(|p| p.validate_strict(target).is_ok() && p.lambdas.windows(2).all(|w| w[0] > w[1]))
        .collect()
}

struct RestartOutcome {
    params: MixtureParams,
    free: Vec<f64>,
    loglik: f64,
    converged: bool,
    grad_norm: f64,
    iterations: usize,
}

fn run_continuation(obj: &Objective, start: &MixtureParams, cfg: &FitConfig) -> Option<RestartOutcome> {
    let k = obj.dim() / 2;
    let mut free = to_free(start, k);
    if !obj.is_feasible(&free) {
        return None;
    }
    let scale = 1.0 / obj.n() as f64;
    let opts = BfgsOptions { grad_tol: cfg.inner_tol, max_iters: cfg.max_inner_iters, max_step: 0.5 };
    let mut converged = true;
    let mut grad_norm = f64::NAN;
    let mut iterations = 0;
    for &c in cfg.schedule.weights() {
        let out = minimize(
            |x| {
                let (v, g) = obj.evaluate(x, c);
                if v.is_finite() {
                    (-v * scale, g.into_iter().map(|gi| -gi * scale).collect())
                } else {
                    (f64::INFINITY, g)
                }
            },
            &free,
            &opts,
        );
        if !out.value.is_finite() || !obj.is_feasible(&out.x) {
            return None;
        }
        converged &= out.converged;
        grad_norm = out.grad_norm;
        iterations += out.iterations;
        free = out.x;
    }
    let loglik = obj.log_likelihood(&free);
    if !loglik.is_finite() {
        return None;
    }
    Some(RestartOutcome {
        params: from_free(&free, k).canonicalized(),
        free,
        loglik,
        converged,
        grad_norm,
        iterations,
    })
}

/// Maximum-likelihood fit of `spec` to `series`.
pub fn fit_mle(series: &BinnedSeries, spec: &ModelSpec, cfg: &FitConfig) -> Result<FittedModel> {
    fit_mle_with_starts(series, spec, cfg, &[])
}

/// [`fit_mle`] with extra deterministic starting points run after the random restarts.
/// Starts that are not strictly feasible for `spec` are skipped.
pub fn fit_mle_with_starts(
    series: &BinnedSeries,
    spec: &ModelSpec,
    cfg: &FitConfig,
    extra_starts: &[MixtureParams],
) -> Result<FittedModel> {
    cfg.validate()?;
    spec.validate()?;
    let d = spec.dof();
    if series.n() < d + 1 {
        return Err(TailmixError::Data(format!(
            "{} needs at least {} observations, series {:?} has {}",
            spec.kind(),
            d + 1,
            series.source_id,
            series.n()
        )));
    }
    let obj = Objective::new(series, spec, cfg.bounds())?;

    let mut starts: Vec<MixtureParams> = (0..cfg.restarts).map(|r| random_init(spec, cfg, r)).collect();
    starts.extend(extra_starts.iter().filter(|p| p.validate_strict(spec).is_ok()).cloned());

    let outcomes: Vec<Option<RestartOutcome>> =
        starts.par_iter().map(|s| run_continuation(&obj, s, cfg)).collect();

    let mut best: Option<(usize, &RestartOutcome)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Some(o) = o {
            if best.map_or(true, |(_, b)| o.loglik > b.loglik) {
                best = Some((i, o));
            }
        }
    }
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    let (index, winner) = best.ok_or_else(|| TailmixError::FitFailure {
        model: spec.kind().to_string(),
        message: format!("all {} restarts diverged or left the feasible region", starts.len()),
    })?;

    let n = obj.n();
    Ok(FittedModel {
        spec: *spec,
        params: winner.params.clone(),
        loglik: winner.loglik,
        bic: bic(winner.loglik, n, d),
        n,
        series_digest: series.digest(),
        diagnostics: FitDiagnostics {
            restart_index_of_best: index,
            converged: winner.converged,
            final_grad_norm: winner.grad_norm,
            barrier_residual: cfg.schedule.last() * obj.barrier(&winner.free),
            restarts_run: starts.len(),
            restarts_failed: failed,
            inner_iterations: winner.iterations,
        },
    })
}
