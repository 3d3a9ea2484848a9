//! The DMR objective and its gradient, stochastic-EM training, and the
//! LDA baseline with Dirichlet hyperparameter optimization.
//!
//! Training alternates Gibbs sweeps over topic assignments with numerical
//! maximization of the collapsed log likelihood of the assignments in the
//! feature weights `lambda`:
//!
//! ```text
//! L(lambda) = Σ_d [ lnΓ(A_d) - lnΓ(A_d + n_d) + Σ_t lnΓ(α_dt + n_t|d) - lnΓ(α_dt) ]
//!             - Σ_{t,k} λ_tk² / (2 σ²_k)
//! α_dt = exp(x_d . λ_t),   A_d = Σ_t α_dt
//! ```
//!
//! The Gaussian normalizing constant is omitted; it does not depend on λ.

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FeatureDictionary, FeatureVector, Vocabulary};
use crate::eval::dm_marginal_log_likelihood;
use crate::numeric::{ln_gamma, minimize, psi, OptimizerConfig, Termination};
use crate::sampler::{
    compute_alpha_capped, estimate_phi, gibbs_sweep, init_assignments, DirichletPrior, Phi,
    TopicState, TopicWordCounts,
};
use crate::{Error, Result};

/// Dot products `x_d . λ_t` are capped here before exponentiation.
pub const LOG_ALPHA_CAP: f64 = 300.0;

/// A line-search stall with gradient norm within this factor of the
/// optimizer tolerance is reported as convergence rather than a warning.
const STALL_GRADIENT_FACTOR: f64 = 100.0;

/// Documents per parallel work unit when evaluating the objective. Partial
/// sums are combined in chunk order, so results do not depend on the
/// number of threads.
const OBJECTIVE_CHUNK: usize = 128;

/// Per-topic feature weights, row-major `|T| x K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMatrix {
    num_topics: usize,
    num_features: usize,
    values: Vec<f64>,
}

impl LambdaMatrix {
    pub fn zeros(num_topics: usize, num_features: usize) -> Self {
        Self {
            num_topics,
            num_features,
            values: vec![0.0; num_topics * num_features],
        }
    }

    pub fn from_values(num_topics: usize, num_features: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_topics * num_features {
            return Err(Error::Dimension(format!(
                "{} values for a {num_topics} x {num_features} lambda matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("lambda entries must be finite".into()));
        }
        Ok(Self {
            num_topics,
            num_features,
            values,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn row(&self, topic: usize) -> &[f64] {
        &self.values[topic * self.num_features..(topic + 1) * self.num_features]
    }

    pub fn get(&self, topic: usize, feature: usize) -> f64 {
        self.values[topic * self.num_features + feature]
    }

    pub fn set(&mut self, topic: usize, feature: usize, value: f64) {
        self.values[topic * self.num_features + feature] = value;
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.num_topics).map(|t| self.get(t, feature)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dmr,
    Lda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_topics: usize,
    /// Topic-word smoothing.
    pub beta: f64,
    /// Prior variance of the intercept weights.
    pub sigma2_default: f64,
    /// Prior variance of every other feature weight.
    pub sigma2_other: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub optimize_interval: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_topics: 100,
            beta: 0.01,
            sigma2_default: 10.0,
            sigma2_other: 0.5,
            iterations: 1000,
            burn_in: 250,
            optimize_interval: 50,
            seed: 1,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_topics == 0 {
            return fail("number of topics must be >= 1");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail("beta must be > 0");
        }
        if !(self.sigma2_default > 0.0 && self.sigma2_other > 0.0) {
            return fail("prior variances must be > 0");
        }
        if self.burn_in >= self.iterations {
            return fail("burn-in must be smaller than the number of iterations");
        }
        if self.optimize_interval == 0 {
            return fail("optimize interval must be >= 1");
        }
        self.optimizer.validate()
    }

    /// `σ²_k` for each of `num_features` features; index 0 is the intercept.
    pub fn feature_variances(&self, num_features: usize) -> Vec<f64> {
        (0..num_features)
            .map(|k| {
                if k == 0 {
                    self.sigma2_default
                } else {
                    self.sigma2_other
                }
            })
            .collect()
    }

    /// Whether the M-step runs after sweep `iteration` (1-based).
    pub fn optimizes_after(&self, iteration: usize) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in) % self.optimize_interval == 0
    }
}

/// One M-step: objective before and after, at the sweep it followed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub iteration: usize,
    pub before: f64,
    pub after: f64,
    pub optimizer_iterations: usize,
    pub termination: Termination,
}

/// Everything needed to evaluate a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub vocabulary: Vocabulary,
    pub features: FeatureDictionary,
    pub lambda: LambdaMatrix,
    pub topic_word: TopicWordCounts,
    /// M-step log, in training order.
    pub trace: Vec<OptimizationRecord>,
}

impl ModelSnapshot {
    pub fn num_topics(&self) -> usize {
        self.lambda.num_topics()
    }

    pub fn phi(&self) -> Phi {
        estimate_phi(&self.topic_word, self.config.beta)
    }

    /// Checks that λ, the count table, the vocabulary and the dictionary agree.
    pub fn validate(&self) -> Result<()> {
        let t = self.lambda.num_topics();
        if self.topic_word.num_topics() != t || self.config.num_topics != t {
            return Err(Error::Dimension(format!(
                "lambda has {t} topics, counts {}, config {}",
                self.topic_word.num_topics(),
                self.config.num_topics
            )));
        }
        if self.lambda.num_features() != self.features.len() {
            return Err(Error::Dimension(format!(
                "lambda has {} features, dictionary {}",
                self.lambda.num_features(),
                self.features.len()
            )));
        }
        if self.topic_word.vocab_size() != self.vocabulary.len() {
            return Err(Error::Dimension(format!(
                "count table covers {} words, vocabulary {}",
                self.topic_word.vocab_size(),
                self.vocabulary.len()
            )));
        }
        Ok(())
    }
}

/// `exp(min(dot, cap))` floored at the smallest positive normal, and
/// whether `dot` sat above the cap (where `dα/dλ` is zero).
#[inline]
pub(crate) fn capped_exp(dot: f64) -> (f64, bool) {
    let capped = dot > LOG_ALPHA_CAP;
    (dot.min(LOG_ALPHA_CAP).exp().max(f64::MIN_POSITIVE), capped)
}

struct DocTerm<'a> {
    features: &'a FeatureVector,
    counts: &'a [u32],
    len: usize,
}

/// Collapsed DMR objective over a fixed assignment state.
struct Objective<'a> {
    docs: Vec<DocTerm<'a>>,
    num_topics: usize,
    num_features: usize,
    variances: &'a [f64],
}

impl<'a> Objective<'a> {
    fn new(
        state: &'a TopicState,
        corpus: &'a Corpus,
        num_features: usize,
        variances: &'a [f64],
    ) -> Result<Self> {
        if state.num_docs() != corpus.documents.len() {
            return Err(Error::Dimension(format!(
                "state has {} documents, corpus {}",
                state.num_docs(),
                corpus.documents.len()
            )));
        }
        if variances.len() != num_features {
            return Err(Error::Dimension(format!(
                "{} variances for {num_features} features",
                variances.len()
            )));
        }
        let mut docs = Vec::new();
        for (d, doc) in corpus.documents.iter().enumerate() {
            if doc.features.max_index() >= num_features {
                return Err(Error::UnknownFeature(doc.features.max_index()));
            }
            let len = state.doc_len(d);
            if len > 0 {
                docs.push(DocTerm {
                    features: &doc.features,
                    counts: state.doc_topic_counts(d),
                    len,
                });
            }
        }
        Ok(Self {
            docs,
            num_topics: state.num_topics(),
            num_features,
            variances,
        })
    }

    /// Log likelihood at `lambda`; accumulates the gradient into `grad`
    /// when given (which must be zeroed by the caller).
    fn evaluate(&self, lambda: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let t_count = self.num_topics;
        let k_count = self.num_features;
        let want_grad = grad.is_some();
        let partials: Vec<(f64, Vec<f64>)> = self
            .docs
            .par_chunks(OBJECTIVE_CHUNK)
            .map(|chunk| {
                let mut ll = 0.0;
                let mut g = if want_grad {
                    vec![0.0; t_count * k_count]
                } else {
                    Vec::new()
                };
                let mut alpha = vec![0.0; t_count];
                let mut capped = vec![false; t_count];
                for doc in chunk {
                    let mut sum = 0.0;
                    for t in 0..t_count {
                        let dot = doc.features.dot(&lambda[t * k_count..(t + 1) * k_count]);
                        (alpha[t], capped[t]) = capped_exp(dot);
                        sum += alpha[t];
                    }
                    let n = doc.len as f64;
                    ll += ln_gamma(sum) - ln_gamma(sum + n);
                    let common = if want_grad {
                        psi(sum) - psi(sum + n)
                    } else {
                        0.0
                    };
                    for t in 0..t_count {
                        let c = f64::from(doc.counts[t]);
                        let a = alpha[t];
                        if c > 0.0 {
                            ll += ln_gamma(a + c) - ln_gamma(a);
                        }
                        if want_grad && !capped[t] {
                            let mut inner = common;
                            if c > 0.0 {
                                inner += psi(a + c) - psi(a);
                            }
                            let gt = a * inner;
                            let row = &mut g[t * k_count..(t + 1) * k_count];
                            for &(k, x) in doc.features.entries() {
                                row[k] += x * gt;
                            }
                        }
                    }
                }
                (ll, g)
            })
            .collect();

        let mut ll = 0.0;
        let mut grad = grad;
        for (part_ll, part_g) in partials {
            ll += part_ll;
            if let Some(g) = grad.as_deref_mut() {
                for (gi, pi) in g.iter_mut().zip(&part_g) {
                    *gi += pi;
                }
            }
        }
        for t in 0..t_count {
            for k in 0..k_count {
                let v = lambda[t * k_count + k];
                let s2 = self.variances[k];
                ll -= v * v / (2.0 * s2);
                if let Some(g) = grad.as_deref_mut() {
                    g[t * k_count + k] -= v / s2;
                }
            }
        }
        ll
    }
}

fn check_lambda(lambda: &LambdaMatrix, state: &TopicState) -> Result<()> {
    if lambda.num_topics() != state.num_topics() {
        return Err(Error::Dimension(format!(
            "lambda has {} topics, state {}",
            lambda.num_topics(),
            state.num_topics()
        )));
    }
    Ok(())
}

/// Collapsed log likelihood of the current assignments plus the Gaussian
/// log prior on `lambda` (without its normalizing constant).
pub fn dmr_log_likelihood(
    state: &TopicState,
    lambda: &LambdaMatrix,
    corpus: &Corpus,
    variances: &[f64],
) -> Result<f64> {
    check_lambda(lambda, state)?;
    let obj = Objective::new(state, corpus, lambda.num_features(), variances)?;
    Ok(obj.evaluate(lambda.values(), None))
}

/// Gradient of [`dmr_log_likelihood`] with respect to every `λ_tk`.
pub fn dmr_gradient(
    state: &TopicState,
    lambda: &LambdaMatrix,
    corpus: &Corpus,
    variances: &[f64],
) -> Result<LambdaMatrix> {
    check_lambda(lambda, state)?;
    let obj = Objective::new(state, corpus, lambda.num_features(), variances)?;
    let mut g = vec![0.0; lambda.values().len()];
    obj.evaluate(lambda.values(), Some(&mut g));
    LambdaMatrix::from_values(lambda.num_topics(), lambda.num_features(), g)
}

/// M-step: maximizes [`dmr_log_likelihood`] in `lambda` with L-BFGS on the
/// negated objective, starting from the given `lambda`.
pub fn optimize_lambda(
    state: &TopicState,
    lambda: &LambdaMatrix,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<(LambdaMatrix, OptimizationRecord)> {
    check_lambda(lambda, state)?;
    let variances = config.feature_variances(lambda.num_features());
    let obj = Objective::new(state, corpus, lambda.num_features(), &variances)?;
    let before = obj.evaluate(lambda.values(), None);
    let result = minimize(
        |x, g| {
            g.fill(0.0);
            let v = obj.evaluate(x, Some(g));
            for gi in g.iter_mut() {
                *gi = -*gi;
            }
            -v
        },
        lambda.values(),
        &config.optimizer,
    )?;
    // Close to a stationary point the objective cannot decrease measurably
    // in floating point, so a stall there is the expected way to stop.
    if result.termination == Termination::LineSearchFailed
        && result.gradient_norm <= STALL_GRADIENT_FACTOR * config.optimizer.tolerance
    {
        debug!(
            "lambda line search reached floating-point resolution after {} iterations (gradient norm {:.3e})",
            result.iterations, result.gradient_norm
        );
    } else if result.termination == Termination::LineSearchFailed {
        warn!(
            "lambda line search stalled after {} iterations (gradient norm {:.3e})",
            result.iterations, result.gradient_norm
        );
    }
    let after = -result.value;
    let (optimized, after) = if after >= before {
        (
            LambdaMatrix::from_values(lambda.num_topics(), lambda.num_features(), result.x)?,
            after,
        )
    } else {
        (lambda.clone(), before)
    };
    Ok((
        optimized,
        OptimizationRecord {
            iteration: 0,
            before,
            after,
            optimizer_iterations: result.iterations,
            termination: result.termination,
        },
    ))
}

/// Per-document priors `exp(x_d . λ_t)` with the overflow cap applied.
pub fn compute_priors(corpus: &Corpus, lambda: &LambdaMatrix) -> Result<Vec<DirichletPrior>> {
    let mut capped_total = 0;
    let priors = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            let (prior, capped) =
                compute_alpha_capped(&doc.features, lambda).map_err(|e| e.at_doc(d))?;
            capped_total += capped;
            Ok(prior)
        })
        .collect::<Result<Vec<_>>>()?;
    if capped_total > 0 {
        warn!("{capped_total} prior entries capped at exp({LOG_ALPHA_CAP})");
    }
    Ok(priors)
}

fn check_training_input(corpus: &Corpus, config: &TrainConfig) -> Result<()> {
    config.validate()?;
    if corpus.num_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

/// Trains a DMR topic model by stochastic EM.
///
/// Runs `config.iterations` Gibbs sweeps; after burn-in, every
/// `optimize_interval` sweeps λ is re-optimized and every document prior is
/// recomputed. If the last sweep is not an optimization point, a final
/// M-step follows it.
pub fn train_dmr(corpus: &Corpus, config: &TrainConfig) -> Result<ModelSnapshot> {
    check_training_input(corpus, config)?;
    let num_features = corpus.features.len();
    let mut lambda = LambdaMatrix::zeros(config.num_topics, num_features);
    let mut state = init_assignments(corpus, config.num_topics, config.seed)?;
    let mut priors = compute_priors(corpus, &lambda)?;
    let mut trace = Vec::new();

    let mut m_step = |state: &TopicState,
                      lambda: &mut LambdaMatrix,
                      iteration: usize|
     -> Result<Vec<DirichletPrior>> {
        let (optimized, mut record) = optimize_lambda(state, lambda, corpus, config)?;
        record.iteration = iteration;
        info!(
            "iteration {iteration}: log likelihood {:.4} -> {:.4} ({} optimizer steps)",
            record.before, record.after, record.optimizer_iterations
        );
        trace.push(record);
        *lambda = optimized;
        compute_priors(corpus, lambda)
    };

    for iteration in 1..=config.iterations {
        gibbs_sweep(&mut state, &priors, config.beta);
        if config.optimizes_after(iteration) {
            priors = m_step(&state, &mut lambda, iteration)?;
        }
    }
    if !config.optimizes_after(config.iterations) {
        info!("final M-step after the last sweep");
        m_step(&state, &mut lambda, config.iterations)?;
    }

    let mut features = corpus.features.clone();
    features.set_prior_variances(config.sigma2_default, config.sigma2_other)?;
    Ok(ModelSnapshot {
        kind: ModelKind::Dmr,
        config: config.clone(),
        vocabulary: corpus.vocabulary.clone(),
        features,
        lambda,
        topic_word: state.topic_word().clone(),
        trace,
    })
}

/// Rounds of the Dirichlet fixed-point update per M-step.
const LDA_ALPHA_ROUNDS: usize = 100;
const LDA_ALPHA_TOLERANCE: f64 = 1e-6;
const LDA_ALPHA_FLOOR: f64 = 1e-10;

/// Maximizes the Dirichlet-multinomial likelihood of the current
/// document-topic counts in a shared asymmetric `alpha`.
///
/// Uses the digamma fixed-point update
/// `α_t <- α_t Σ_d [Ψ(α_t + n_t|d) - Ψ(α_t)] / Σ_d [Ψ(A + n_d) - Ψ(A)]`,
/// with the digamma differences evaluated from count histograms as
/// `Ψ(a + n) - Ψ(a) = Σ_{j<n} 1/(a + j)`. Returns `alpha` unchanged when
/// no document has tokens.
pub fn optimize_lda_alpha(state: &TopicState, alpha: &[f64]) -> Vec<f64> {
    let t_count = state.num_topics();
    assert_eq!(alpha.len(), t_count, "one alpha per topic");
    let max_len = (0..state.num_docs())
        .map(|d| state.doc_len(d))
        .max()
        .unwrap_or(0);
    if max_len == 0 {
        return alpha.to_vec();
    }
    // length_hist[n] = #docs of length n; topic_hist[t][c] = #docs with n_t|d = c
    let mut length_hist = vec![0u64; max_len + 1];
    let mut topic_hist = vec![vec![0u64; max_len + 1]; t_count];
    for d in 0..state.num_docs() {
        length_hist[state.doc_len(d)] += 1;
        for (t, &c) in state.doc_topic_counts(d).iter().enumerate() {
            topic_hist[t][c as usize] += 1;
        }
    }
    let harmonic = |a: f64, hist: &[u64]| -> f64 {
        let mut acc = 0.0;
        let mut total = 0.0;
        for (n, &h) in hist.iter().enumerate().skip(1) {
            acc += 1.0 / (a + (n - 1) as f64);
            total += h as f64 * acc;
        }
        total
    };

    let mut alpha = alpha.to_vec();
    for _ in 0..LDA_ALPHA_ROUNDS {
        let sum: f64 = alpha.iter().sum();
        let denom = harmonic(sum, &length_hist);
        let mut max_change: f64 = 0.0;
        for (a, hist) in alpha.iter_mut().zip(&topic_hist) {
            let updated = (*a * harmonic(*a, hist) / denom).max(LDA_ALPHA_FLOOR.min(*a));
            max_change = max_change.max((updated - *a).abs() / *a);
            *a = updated;
        }
        if max_change < LDA_ALPHA_TOLERANCE {
            break;
        }
    }
    alpha
}

/// Σ_d of the Dirichlet-multinomial log likelihood of `n_{·|d}` under `alpha`.
pub fn lda_log_likelihood(state: &TopicState, alpha: &[f64]) -> Result<f64> {
    let mut counts = vec![0u64; state.num_topics()];
    let mut total = 0.0;
    for d in 0..state.num_docs() {
        for (c, &n) in counts.iter_mut().zip(state.doc_topic_counts(d)) {
            *c = u64::from(n);
        }
        total += dm_marginal_log_likelihood(alpha, &counts)?;
    }
    Ok(total)
}

/// Trains LDA with the same sweep and optimization schedule as
/// [`train_dmr`], optimizing a corpus-wide `alpha` instead of λ. Document
/// features are ignored; the snapshot stores `λ_t0 = ln α_t` over an
/// intercept-only dictionary.
pub fn train_lda(corpus: &Corpus, config: &TrainConfig) -> Result<ModelSnapshot> {
    check_training_input(corpus, config)?;
    let t_count = config.num_topics;
    let mut alpha = vec![1.0; t_count];
    let mut state = init_assignments(corpus, t_count, config.seed)?;
    let mut priors = vec![DirichletPrior::new(alpha.clone())?; corpus.documents.len()];
    let mut trace = Vec::new();

    let mut m_step = |state: &TopicState,
                      alpha: &mut Vec<f64>,
                      iteration: usize|
     -> Result<Vec<DirichletPrior>> {
        let before = lda_log_likelihood(state, alpha)?;
        let updated = optimize_lda_alpha(state, alpha);
        let after = lda_log_likelihood(state, &updated)?;
        info!("iteration {iteration}: alpha log likelihood {before:.4} -> {after:.4}");
        trace.push(OptimizationRecord {
            iteration,
            before,
            after,
            optimizer_iterations: 0,
            termination: Termination::Converged,
        });
        *alpha = updated;
        Ok(vec![DirichletPrior::new(alpha.clone())?; state.num_docs()])
    };

    for iteration in 1..=config.iterations {
        gibbs_sweep(&mut state, &priors, config.beta);
        if config.optimizes_after(iteration) {
            priors = m_step(&state, &mut alpha, iteration)?;
        }
    }
    if !config.optimizes_after(config.iterations) {
        info!("final alpha update after the last sweep");
        m_step(&state, &mut alpha, config.iterations)?;
    }

    let mut features = FeatureDictionary::new();
    features.set_prior_variances(config.sigma2_default, config.sigma2_other)?;
    Ok(ModelSnapshot {
        kind: ModelKind::Lda,
        config: config.clone(),
        vocabulary: corpus.vocabulary.clone(),
        features,
        lambda: LambdaMatrix::from_values(t_count, 1, alpha.iter().map(|a| a.ln()).collect())?,
        topic_word: state.topic_word().clone(),
        trace,
    })
}
