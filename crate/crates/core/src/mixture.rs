//! The nested family P ⊂ EP ⊂ EEP: a discrete Pareto tail mixed with zero, one
//! or two exponential components.
//!
//! Component order everywhere is `[exp_1, ..., exp_k, pareto]`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dists::{
    exp_ln_pmf_unchecked, hurwitz_zeta, pareto_ln_pmf_unchecked, ExpMode, ExpParams, ExpSampler,
    ParetoParams, ParetoSampler, MIN_EXPONENT,
};
use crate::error::{Result, TailmixError};
use crate::rng::stream_rng;

/// Labels of the three nested models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    P,
    EP,
    EEP,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::P, ModelKind::EP, ModelKind::EEP];

    pub fn n_exp(self) -> usize {
        match self {
            ModelKind::P => 0,
            ModelKind::EP => 1,
            ModelKind::EEP => 2,
        }
    }

    pub fn from_n_exp(n_exp: usize) -> Result<Self> {
        match n_exp {
            0 => Ok(ModelKind::P),
            1 => Ok(ModelKind::EP),
            2 => Ok(ModelKind::EEP),
            n => Err(TailmixError::Contract(format!("at most two exponential components, got {n}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::P => "P",
            ModelKind::EP => "EP",
            ModelKind::EEP => "EEP",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = TailmixError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P" => Ok(ModelKind::P),
            "EP" => Ok(ModelKind::EP),
            "EEP" => Ok(ModelKind::EEP),
            _ => Err(TailmixError::Contract(format!("unknown model {s:?} (expected P, EP or EEP)"))),
        }
    }
}

/// Which components a model has, its support minimum and exponential mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_exp: usize,
    pub has_pareto: bool,
    pub x_min: u64,
    pub exp_mode: ExpMode,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, x_min: u64, exp_mode: ExpMode) -> Result<Self> {
        let spec = Self { n_exp: kind.n_exp(), has_pareto: true, x_min, exp_mode };
        spec.validate()?;
        Ok(spec)
    }

    /// Discrete-mode spec with `x_min = 1`.
    pub fn of(kind: ModelKind) -> Self {
        Self { n_exp: kind.n_exp(), has_pareto: true, x_min: 1, exp_mode: ExpMode::Discrete }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.has_pareto {
            return Err(TailmixError::Contract("every model in the family has a pareto component".into()));
        }
        ModelKind::from_n_exp(self.n_exp)?;
        if self.x_min == 0 {
            return Err(TailmixError::Contract("x_min must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::from_n_exp(self.n_exp).expect("validated spec")
    }

    pub fn n_components(&self) -> usize {
        self.n_exp + 1
    }

    /// Free parameters: `n_exp + 1` weights less one for the simplex, `n_exp` rates, one exponent.
    pub fn dof(&self) -> usize {
        (self.n_exp + 1) + self.n_exp
    }

    pub fn with_kind(&self, kind: ModelKind) -> Self {
        Self { n_exp: kind.n_exp(), ..*self }
    }
}

/// Mixing weights, exponential rates and the tail exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// `[m_exp_1, ..., m_exp_k, m_pareto]`.
    pub weights: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub alpha: f64,
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl MixtureParams {
    pub fn pareto(alpha: f64) -> Self {
        Self { weights: vec![1.0], lambdas: vec![], alpha }
    }

    pub fn pareto_weight(&self) -> f64 {
        *self.weights.last().unwrap_or(&0.0)
    }

    /// Checks shapes and parameter domains. Zero weights are accepted here so
    /// that degenerate mixtures can be evaluated and sampled; fitted parameters
    /// additionally satisfy [`MixtureParams::validate_strict`].
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        spec.validate()?;
        if self.weights.len() != spec.n_components() || self.lambdas.len() != spec.n_exp {
            return Err(TailmixError::Contract(format!(
                "{} expects {} weights and {} rates, got {} and {}",
                spec.kind(),
                spec.n_components(),
                spec.n_exp,
                self.weights.len(),
                self.lambdas.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TailmixError::Domain(format!("mixing weights must be nonnegative: {:?}", self.weights)));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(TailmixError::Domain(format!("mixing weights sum to {total}, not 1")));
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(TailmixError::Domain(format!("rates must be positive: {:?}", self.lambdas)));
        }
        if !self.alpha.is_finite() || self.alpha <= MIN_EXPONENT {
            return Err(TailmixError::Domain(format!("tail exponent must exceed 1, got {}", self.alpha)));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus strictly positive weights and `λ_1 ≥ λ_2`.
    pub fn validate_strict(&self, spec: &ModelSpec) -> Result<()> {
        self.validate(spec)?;
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(TailmixError::Domain("mixing weights must be strictly positive".into()));
        }
        if self.lambdas.windows(2).any(|w| w[0] < w[1]) {
            return Err(TailmixError::Domain("rates must be ordered λ_1 ≥ λ_2".into()));
        }
        Ok(())
    }

    /// Sorts exponential components by decreasing rate, carrying their weights.
    pub fn canonicalize(&mut self) {
        let k = self.lambdas.len();
        let mut pairs: Vec<(f64, f64)> =
            self.lambdas.iter().copied().zip(self.weights[..k].iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
        for (i, (l, w)) in pairs.into_iter().enumerate() {
            self.lambdas[i] = l;
            self.weights[i] = w;
        }
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }
}

/// Flow counts per fixed time window.
///
/// Binning with zero-dropping disabled can produce zero counts; those are kept
/// here and rejected when a likelihood is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries {
    pub counts: Vec<u64>,
    pub bin_seconds: f64,
    pub source_id: String,
}

impl BinnedSeries {
    pub fn new(counts: Vec<u64>, bin_seconds: f64, source_id: impl Into<String>) -> Self {
        Self { counts, bin_seconds, source_id: source_id.into() }
    }

    /// Wraps raw samples (e.g. simulated data) with no time base.
    pub fn from_samples(counts: Vec<u64>, source_id: impl Into<String>) -> Self {
        Self::new(counts, 0.0, source_id)
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Fails with the first index whose count is below `x_min`.
    pub fn check_support(&self, x_min: u64) -> Result<()> {
        if self.counts.is_empty() {
            return Err(TailmixError::Data(format!("series {:?} is empty", self.source_id)));
        }
        if let Some((i, &x)) = self.counts.iter().enumerate().find(|(_, &x)| x < x_min) {
            return Err(TailmixError::Data(format!(
                "series {:?}: count {x} at index {i} is below x_min = {x_min}",
                self.source_id
            )));
        }
        Ok(())
    }

    /// Order-independent FNV-1a digest of the multiset of counts, used to check
    /// that two fits saw the same data.
    pub fn digest(&self) -> u64 {
        let table = CountTable::from_counts(&self.counts);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (v, c) in table.entries() {
            for b in v.to_le_bytes().into_iter().chain(c.to_le_bytes()) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Distinct values with multiplicities; likelihoods are sums over these.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    values: Vec<u64>,
    weights: Vec<f64>,
    total: usize,
}

impl CountTable {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        for &x in counts {
            *map.entry(x).or_insert(0) += 1;
        }
        let (values, mult): (Vec<u64>, Vec<u64>) = map.into_iter().unzip();
        Self { values, weights: mult.iter().map(|&m| m as f64).collect(), total: counts.len() }
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.values.iter().copied().zip(self.weights.iter().map(|&w| w as u64))
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn multiplicities(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn min_value(&self) -> Option<u64> {
        self.values.first().copied()
    }
}

/// Per-component `ln(m_i f_i(x))` with the Pareto normalizer computed once.
pub(crate) struct ComponentLogs<'a> {
    spec: &'a ModelSpec,
    params: &'a MixtureParams,
    ln_weights: Vec<f64>,
    ln_norm: f64,
}

impl<'a> ComponentLogs<'a> {
    pub(crate) fn new(spec: &'a ModelSpec, params: &'a MixtureParams) -> Result<Self> {
        params.validate(spec)?;
        let ln_norm = hurwitz_zeta(params.alpha, spec.x_min)?.ln();
        let ln_weights = params.weights.iter().map(|w| w.ln()).collect();
        Ok(Self { spec, params, ln_weights, ln_norm })
    }

    pub(crate) fn fill(&self, x: u64, out: &mut [f64]) {
        let k = self.spec.n_exp;
        for i in 0..k {
            out[i] = self.ln_weights[i]
                + exp_ln_pmf_unchecked(x, self.params.lambdas[i], self.spec.exp_mode, self.spec.x_min);
        }
        out[k] = self.ln_weights[k] + pareto_ln_pmf_unchecked(x, self.params.alpha, self.ln_norm);
    }

    pub(crate) fn ln_pmf(&self, x: u64) -> f64 {
        let mut buf = [0.0; 3];
        let buf = &mut buf[..self.spec.n_components()];
        self.fill(x, buf);
        log_sum_exp(buf)
    }
}

/// `ln Σ e^{v_i}` with max shift. All `-∞` gives `-∞`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

fn check_x(x: u64, spec: &ModelSpec) -> Result<()> {
    if x < spec.x_min {
        return Err(TailmixError::Domain(format!("observation {x} is below x_min = {}", spec.x_min)));
    }
    Ok(())
}

pub fn mixture_ln_pmf(x: u64, spec: &ModelSpec, params: &MixtureParams) -> Result<f64> {
    check_x(x, spec)?;
    Ok(ComponentLogs::new(spec, params)?.ln_pmf(x))
}

/// `Σ m_i f_i(x)`.
pub fn mixture_pmf(x: u64, spec: &ModelSpec, params: &MixtureParams) -> Result<f64> {
    mixture_ln_pmf(x, spec, params).map(f64::exp)
}

/// `Σ_j ln f(x_j)` over the series.
pub fn log_likelihood(series: &BinnedSeries, spec: &ModelSpec, params: &MixtureParams) -> Result<f64> {
    series.check_support(spec.x_min)?;
    let logs = ComponentLogs::new(spec, params)?;
    let table = CountTable::from_counts(&series.counts);
    Ok(table.values().iter().zip(table.multiplicities()).map(|(&x, &m)| m * logs.ln_pmf(x)).sum())
}

/// Posterior component probabilities `m_i f_i(x) / Σ_j m_j f_j(x)`.
pub fn responsibilities(x: u64, spec: &ModelSpec, params: &MixtureParams) -> Result<Vec<f64>> {
    check_x(x, spec)?;
    let logs = ComponentLogs::new(spec, params)?;
    let mut buf = vec![0.0; spec.n_components()];
    logs.fill(x, &mut buf);
    let total = log_sum_exp(&buf);
    Ok(buf.iter().map(|&t| (t - total).exp()).collect())
}

/// Start of the tail: the smallest `x ≥ x_min` from which the Pareto
/// component's responsibility stays at or above ½.
///
/// Responsibility need not be monotone in `x` (a heavy Pareto can also win
/// at the smallest counts), so this is the last crossing into the Pareto
/// regime. When responsibility is monotone it is simply the first `x` with
/// responsibility ≥ ½.
pub fn tail_threshold(spec: &ModelSpec, params: &MixtureParams) -> Result<u64> {
    if spec.n_exp == 0 {
        return Err(TailmixError::Unsupported("a pareto-only model has no exponential regime".into()));
    }
    let logs = ComponentLogs::new(spec, params)?;
    if params.pareto_weight() <= 0.0 {
        return Err(TailmixError::Domain("pareto weight is zero; the tail never dominates".into()));
    }
    let k = spec.n_exp;
    let mut buf = [0.0; 3];
    let mut tail_wins = |x: u64| {
        let b = &mut buf[..k + 1];
        logs.fill(x, b);
        b[k] >= log_sum_exp(&b[..k])
    };

    // The log-ratio of Pareto to exponential mass has slope at least
    // −α/x + min λ, so it is nondecreasing from `turn` on.
    let lambda_min = params.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let turn = ((params.alpha / lambda_min).ceil().min(MAX_THRESHOLD as f64) as u64).max(spec.x_min);

    if !tail_wins(turn) {
        // The last loss is at or beyond `turn`: bracket the first win by
        // doubling, then bisect.
        let mut lo = turn;
        let mut hi = turn.max(1).saturating_mul(2);
        while !tail_wins(hi) {
            if hi >= MAX_THRESHOLD {
                return Err(TailmixError::Domain("tail threshold exceeds 2^62".into()));
            }
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail_wins(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok(hi);
    }
    if k == 1 {
        // One exponential: the log-ratio is unimodal with its minimum at α/λ,
        // so winning at both neighbouring integers means winning everywhere.
        let below = turn.saturating_sub(1).max(spec.x_min);
        if tail_wins(below) {
            return Ok(spec.x_min);
        }
        return Ok(turn);
    }
    let mut x = turn;
    while x > spec.x_min {
        if turn - x > MAX_BACKWARD_SCAN {
            return Err(TailmixError::Domain("tail threshold search exceeded its scan budget".into()));
        }
        if !tail_wins(x - 1) {
            return Ok(x);
        }
        x -= 1;
    }
    Ok(spec.x_min)
}

const MAX_THRESHOLD: u64 = 1 << 62;
const MAX_BACKWARD_SCAN: u64 = 1 << 24;

/// Draws from the mixture: a component by its weight, then a value from it.
pub fn sample_mixture(spec: &ModelSpec, params: &MixtureParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    params.validate(spec)?;
    if spec.exp_mode != ExpMode::Discrete {
        return Err(TailmixError::Unsupported(
            "sampling requires the discrete exponential mode; the literal density is not a pmf".into(),
        ));
    }
    if n == 0 {
        return Err(TailmixError::Contract("sample size must be at least 1".into()));
    }
    let exps: Vec<ExpSampler> = params
        .lambdas
        .iter()
        .map(|&l| ExpSampler::new(ExpParams { lambda: l, mode: ExpMode::Discrete }, spec.x_min))
        .collect::<Result<_>>()?;
    let mut pareto = ParetoSampler::new(ParetoParams::new(params.alpha, spec.x_min)?)?;
    let mut cumulative = Vec::with_capacity(params.weights.len());
    let mut acc = 0.0;
    for &w in &params.weights {
        acc += w;
        cumulative.push(acc);
    }

    let mut rng = stream_rng(seed, 0);
    let k = spec.n_exp;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        // First component whose cumulative weight exceeds u; zero-weight
        // components are never chosen.
        let c = cumulative.iter().position(|&c| u < c).unwrap_or(k);
        out.push(if c < k { exps[c].sample(&mut rng) } else { pareto.sample(&mut rng) });
    }
    Ok(out)
}
