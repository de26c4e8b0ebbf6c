//! Log-likelihood plus log-barrier terms, with analytic gradient.
//!
//! Free parameters are laid out as `[m_1..m_k, λ_1..λ_k, α]`: the exponential
//! mixing weights (the Pareto weight is the remainder `1 − Σ m`), the rates and
//! the tail exponent.

use crate::dists::{exp_dln_pmf_dlambda, zeta_and_deriv, ExpMode, MIN_EXPONENT};
use crate::error::{Result, TailmixError};
use crate::mixture::{log_sum_exp, BinnedSeries, CountTable, MixtureParams, ModelSpec};

/// Bounds that receive barrier terms besides positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub alpha_max: f64,
    pub lambda_max: f64,
}

pub(crate) fn to_free(params: &MixtureParams, n_exp: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * n_exp + 1);
    v.extend_from_slice(&params.weights[..n_exp]);
    v.extend_from_slice(&params.lambdas);
    v.push(params.alpha);
    v
}

pub(crate) fn from_free(free: &[f64], n_exp: usize) -> MixtureParams {
    let mut weights = free[..n_exp].to_vec();
    weights.push(1.0 - weights.iter().sum::<f64>());
    MixtureParams { weights, lambdas: free[n_exp..2 * n_exp].to_vec(), alpha: free[2 * n_exp] }
}

/// Penalized log-likelihood on one series.
pub struct Objective {
    spec: ModelSpec,
    bounds: Bounds,
    raw: Vec<u64>,
    values: Vec<f64>,
    ln_values: Vec<f64>,
    offsets: Vec<f64>,
    mults: Vec<f64>,
    n: usize,
}

impl Objective {
    pub fn new(series: &BinnedSeries, spec: &ModelSpec, bounds: Bounds) -> Result<Self> {
        spec.validate()?;
        series.check_support(spec.x_min)?;
        if !(bounds.alpha_max > 1.0) || !(bounds.lambda_max > 0.0) {
            return Err(TailmixError::Contract(format!("invalid bounds {bounds:?}")));
        }
        let table = CountTable::from_counts(&series.counts);
        let values: Vec<f64> = table.values().iter().map(|&x| x as f64).collect();
        Ok(Self {
            spec: *spec,
            bounds,
            ln_values: values.iter().map(|x| x.ln()).collect(),
            offsets: table.values().iter().map(|&x| (x - spec.x_min) as f64).collect(),
            values,
            raw: table.values().to_vec(),
            mults: table.multiplicities().to_vec(),
            n: table.total(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.spec.n_exp + 1
    }

    /// Every argument of a barrier logarithm, in a fixed order.
    fn barrier_args<'a>(&'a self, free: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let k = self.spec.n_exp;
        let weights = free[..k].iter().copied();
        let remainder = std::iter::once(1.0 - free[..k].iter().sum::<f64>());
        let lambdas = free[k..2 * k].iter().flat_map(move |&l| [l, self.bounds.lambda_max - l]);
        let alpha = free[2 * k];
        let alphas = [alpha - 1.0, self.bounds.alpha_max - alpha].into_iter();
        let order = (k == 2).then(|| free[k] - free[k + 1]).into_iter();
        weights.chain(remainder).chain(lambdas).chain(alphas).chain(order)
    }

    pub fn is_feasible(&self, free: &[f64]) -> bool {
        free.len() == self.dim()
            && free.iter().all(|v| v.is_finite())
            && free[2 * self.spec.n_exp] > MIN_EXPONENT
            && self.barrier_args(free).all(|a| a > 0.0)
    }

    /// Sum of barrier logarithms (without the weight `c`).
    pub fn barrier(&self, free: &[f64]) -> f64 {
        if !self.is_feasible(free) {
            return f64::NEG_INFINITY;
        }
        self.barrier_args(free).map(f64::ln).sum()
    }

    /// Raw log-likelihood; `-∞` outside the feasible region.
    pub fn log_likelihood(&self, free: &[f64]) -> f64 {
        self.evaluate_with(free, 0.0, false).0
    }

    /// Value and gradient of `l(θ) + c · Σ ln(barrier args)`.
    /// Outside the feasible region the value is `-∞` and the gradient is zero.
    pub fn evaluate(&self, free: &[f64], c: f64) -> (f64, Vec<f64>) {
        self.evaluate_with(free, c, true)
    }

    fn evaluate_with(&self, free: &[f64], c: f64, want_grad: bool) -> (f64, Vec<f64>) {
        let dim = self.dim();
        let k = self.spec.n_exp;
        let mut grad = vec![0.0; dim];
        if !self.is_feasible(free) {
            return (f64::NEG_INFINITY, grad);
        }
        let p = from_free(free, k);
        let alpha = p.alpha;
        let mode = self.spec.exp_mode;
        let (z, dz) = zeta_and_deriv(alpha, self.spec.x_min);
        let ln_norm = z.ln();
        let dln_norm = dz / z;

        let ln_w: Vec<f64> = p.weights.iter().map(|w| w.ln()).collect();
        // Per-component constant part of ln f_i.
        let exp_consts: Vec<f64> = p
            .lambdas
            .iter()
            .map(|&l| match mode {
                ExpMode::Discrete => (-(-l).exp_m1()).ln(),
                ExpMode::PaperLiteral => l.ln(),
            })
            .collect();

        let mut ll = 0.0;
        let mut terms = [0.0f64; 3];
        for j in 0..self.values.len() {
            let t = &mut terms[..k + 1];
            for i in 0..k {
                let shift = match mode {
                    ExpMode::Discrete => self.offsets[j],
                    ExpMode::PaperLiteral => self.values[j],
                };
                t[i] = ln_w[i] + exp_consts[i] - p.lambdas[i] * shift;
            }
            t[k] = ln_w[k] - alpha * self.ln_values[j] - ln_norm;
            let lse = log_sum_exp(t);
            let mult = self.mults[j];
            ll += mult * lse;
            if !want_grad {
                continue;
            }
            let r_p = (t[k] - lse).exp();
            for i in 0..k {
                let r_i = (t[i] - lse).exp();
                grad[i] += mult * (r_i / p.weights[i] - r_p / p.weights[k]);
                grad[k + i] += mult * r_i * exp_dln_pmf_dlambda(self.raw[j], p.lambdas[i], mode, self.spec.x_min);
            }
            grad[2 * k] += mult * r_p * (-self.ln_values[j] - dln_norm);
        }

        if c == 0.0 {
            return (ll, grad);
        }

        let value = ll + c * self.barrier(free);
        if want_grad {
            let rem = 1.0 - free[..k].iter().sum::<f64>();
            for i in 0..k {
                grad[i] += c * (1.0 / free[i] - 1.0 / rem);
                let l = free[k + i];
                grad[k + i] += c * (1.0 / l - 1.0 / (self.bounds.lambda_max - l));
            }
            if k == 2 {
                let gap = free[k] - free[k + 1];
                grad[k] += c / gap;
                grad[k + 1] -= c / gap;
            }
            let a = free[2 * k];
            grad[2 * k] += c * (1.0 / (a - 1.0) - 1.0 / (self.bounds.alpha_max - a));
        }
        (value, grad)
    }
}

/// Penalized objective `l(θ) + c · barrier(θ)` and its gradient at `free`.
pub fn penalized_objective(
    series: &BinnedSeries,
    spec: &ModelSpec,
    free: &[f64],
    c: f64,
    bounds: Bounds,
) -> Result<(f64, Vec<f64>)> {
    let obj = Objective::new(series, spec, bounds)?;
    if free.len() != obj.dim() {
        return Err(TailmixError::Contract(format!(
            "{} has {} free parameters, got {}",
            spec.kind(),
            obj.dim(),
            free.len()
        )));
    }
    Ok(obj.evaluate(free, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{log_likelihood, ModelKind};

    const BOUNDS: Bounds = Bounds { alpha_max: 4.0, lambda_max: 3.5 };

    fn series() -> BinnedSeries {
        BinnedSeries::from_samples(vec![1, 1, 1, 2, 2, 3, 4, 7, 9, 15, 40, 120, 1, 2, 5], "t")
    }

    #[test]
    fn zero_weight_is_log_likelihood() {
        let s = series();
        for (kind, free) in [
            (ModelKind::P, vec![1.8]),
            (ModelKind::EP, vec![0.4, 0.7, 1.6]),
            (ModelKind::EEP, vec![0.3, 0.2, 1.4, 0.2, 2.1]),
        ] {
            let spec = ModelSpec::of(kind);
            let (v, _) = penalized_objective(&s, &spec, &free, 0.0, BOUNDS).unwrap();
            let direct = log_likelihood(&s, &spec, &from_free(&free, spec.n_exp)).unwrap();
            assert!((v - direct).abs() < 1e-10, "{kind}: {v} vs {direct}");
        }
    }

    #[test]
    fn blows_up_near_alpha_one() {
        let s = series();
        let spec = ModelSpec::of(ModelKind::EP);
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let (v, _) = penalized_objective(&s, &spec, &[0.4, 0.7, 1.0 + eps], 0.01, BOUNDS).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let (v, _) = penalized_objective(&s, &spec, &[0.4, 0.7, 1.0], 0.01, BOUNDS).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn infeasible_points_are_minus_infinity() {
        let s = series();
        let spec = ModelSpec::of(ModelKind::EEP);
        for free in [
            vec![0.6, 0.5, 1.0, 0.5, 2.0],  // weights exceed 1
            vec![0.2, 0.2, 0.5, 1.0, 2.0],  // λ_1 < λ_2
            vec![0.2, 0.2, 3.6, 1.0, 2.0],  // λ above cap
            vec![0.2, 0.2, 1.0, 0.5, 4.0],  // α at cap
            vec![0.0, 0.2, 1.0, 0.5, 2.0],  // zero weight
        ] {
            let (v, _) = penalized_objective(&s, &spec, &free, 1e-3, BOUNDS).unwrap();
            assert_eq!(v, f64::NEG_INFINITY, "{free:?}");
        }
    }

    #[test]
    fn wrong_dimension_is_contract_error() {
        let spec = ModelSpec::of(ModelKind::EP);
        assert!(penalized_objective(&series(), &spec, &[1.5], 0.0, BOUNDS).is_err());
    }

    #[test]
    fn literal_mode_gradient() {
        let s = series();
        let spec = ModelSpec::new(ModelKind::EP, 1, ExpMode::PaperLiteral).unwrap();
        let free = [0.4, 0.7, 1.6];
        let (_, g) = penalized_objective(&s, &spec, &free, 1e-2, BOUNDS).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = free;
            let mut dn = free;
            up[i] += h;
            dn[i] -= h;
            let fd = (penalized_objective(&s, &spec, &up, 1e-2, BOUNDS).unwrap().0
                - penalized_objective(&s, &spec, &dn, 1e-2, BOUNDS).unwrap().0)
                / (2.0 * h);
            assert!((g[i] - fd).abs() <= 1e-5 * g[i].abs().max(1.0), "{i}: {} vs {fd}", g[i]);
        }
    }
}
