//! Held-out evaluation and metadata prediction.
//!
//! - Empirical likelihood: draw `θ_s ~ Dir(α_d)` from the document's prior
//!   and average `Π_i Σ_t θ_st φ_{t,w_i}` over samples (in log space).
//! - Perplexity: sample topics for the first half of each document with
//!   the topic-word table held fixed, then score the remaining tokens under
//!   the resulting topic proportions.
//! - Candidate ranking: sample topic assignments for a document under the
//!   no-feature prior, pool the topic counts, and score each candidate by
//!   the Dirichlet-multinomial likelihood of the pooled counts under that
//!   candidate's prior.
//!
//! Every stochastic routine takes a `stream` index; together with the
//! configured seed it selects an independent ChaCha8 stream, so results do
//! not depend on evaluation order or thread count.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, FeatureDictionary, FeatureVector, Vocabulary};
use crate::numeric::{ln_gamma, log_sum_exp};
use crate::sampler::{
    compute_alpha_capped, draw_cumulative, sample_dirichlet, DirichletPrior, Phi,
};
use crate::trainer::{capped_exp, LambdaMatrix, ModelKind, ModelSnapshot};
use crate::{Error, Result};

/// Words listed per topic in the prior reports.
pub const REPORT_WORDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Dirichlet draws per document for empirical likelihood.
    pub el_samples: usize,
    /// Post-burn-in sweeps over the conditioning half for perplexity.
    pub conditioning_sweeps: usize,
    pub conditioning_burn_in: usize,
    /// Independent assignment sequences per document for candidate ranking.
    pub prediction_samples: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            el_samples: 1000,
            conditioning_sweeps: 200,
            conditioning_burn_in: 50,
            prediction_samples: 100,
            seed: 1,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.el_samples == 0 || self.conditioning_sweeps == 0 || self.prediction_samples == 0 {
            return Err(Error::InvalidConfig(
                "sample and sweep counts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Purpose {
    EmpiricalLikelihood = 1,
    Perplexity = 2,
    Prediction = 3,
}

fn stream_rng(seed: u64, purpose: Purpose, stream: u64) -> ChaCha8Rng {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}

/// Log probability of the scored half of a document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfScore {
    pub log_prob: f64,
    pub tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentEval {
    pub id: String,
    pub tokens: usize,
    pub empirical_ll: Option<f64>,
    pub heldout: Option<HalfScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub documents: Vec<DocumentEval>,
    /// `exp(-Σ log p / Σ scored tokens)` over documents with a scored half.
    pub perplexity: Option<f64>,
    /// Sum of per-document empirical log likelihoods.
    pub empirical_ll: Option<f64>,
    /// Documents with fewer than two tokens, left out of perplexity.
    pub excluded_docs: usize,
}

impl EvalReport {
    pub fn mean_empirical_ll(&self) -> Option<f64> {
        let n = self
            .documents
            .iter()
            .filter(|d| d.empirical_ll.is_some())
            .count();
        self.empirical_ll.map(|s| s / n.max(1) as f64)
    }
}

/// Which held-out metrics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub perplexity: bool,
    pub empirical_likelihood: bool,
}

impl Metrics {
    pub const ALL: Metrics = Metrics {
        perplexity: true,
        empirical_likelihood: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub feature: usize,
    pub score: f64,
}

/// One row of a topic report: a topic's prior weight and its top words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRow {
    pub topic: usize,
    pub weight: f64,
    pub top_words: Vec<String>,
}

/// A trained model prepared for evaluation: λ, `φ`, and the dictionaries.
#[derive(Debug, Clone)]
pub struct EvalModel {
    pub kind: ModelKind,
    pub lambda: LambdaMatrix,
    pub phi: Phi,
    pub features: FeatureDictionary,
    pub vocabulary: Vocabulary,
}

impl EvalModel {
    pub fn from_snapshot(snapshot: &ModelSnapshot) -> Result<Self> {
        snapshot.validate()?;
        Ok(Self {
            kind: snapshot.kind,
            lambda: snapshot.lambda.clone(),
            phi: snapshot.phi(),
            features: snapshot.features.clone(),
            vocabulary: snapshot.vocabulary.clone(),
        })
    }

    /// Builds a model from explicit parameters, e.g. a generator's ground truth.
    pub fn from_parts(
        lambda: LambdaMatrix,
        phi: Phi,
        features: FeatureDictionary,
        vocabulary: Vocabulary,
    ) -> Result<Self> {
        if lambda.num_topics() != phi.num_topics()
            || lambda.num_features() != features.len()
            || phi.vocab_size() != vocabulary.len()
        {
            return Err(Error::Dimension(
                "lambda, phi and dictionaries disagree".into(),
            ));
        }
        Ok(Self {
            kind: ModelKind::Dmr,
            lambda,
            phi,
            features,
            vocabulary,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.lambda.num_topics()
    }

    /// The document's Dirichlet prior; features the model does not know are dropped.
    pub fn prior(&self, features: &FeatureVector) -> Result<DirichletPrior> {
        let k = self.lambda.num_features();
        let known;
        let x = if features.max_index() < k {
            features
        } else {
            known =
                FeatureVector::from_pairs(features.entries().iter().copied().filter(|e| e.0 < k))?;
            &known
        };
        Ok(compute_alpha_capped(x, &self.lambda)?.0)
    }

    /// `log (1/S) Σ_s Π_i Σ_t θ_st φ_{t,w_i}` with `θ_s ~ Dir(α_d)`.
    pub fn empirical_likelihood(
        &self,
        doc: &Document,
        config: &EvalConfig,
        stream: u64,
    ) -> Result<f64> {
        if doc.is_empty() {
            return Ok(0.0);
        }
        let prior = self.prior(&doc.features)?;
        let words = word_counts(&doc.tokens);
        let mut rng = stream_rng(config.seed, Purpose::EmpiricalLikelihood, stream);
        let t_count = self.num_topics();
        let samples: Vec<f64> = (0..config.el_samples)
            .map(|_| {
                let theta = if t_count == 1 {
                    vec![1.0]
                } else {
                    sample_dirichlet(prior.alpha(), &mut rng)
                };
                words
                    .iter()
                    .map(|&(w, c)| {
                        let p: f64 = (0..t_count).map(|t| theta[t] * self.phi.prob(t, w)).sum();
                        c as f64 * p.ln()
                    })
                    .sum()
            })
            .collect();
        Ok(log_sum_exp(&samples)? - (config.el_samples as f64).ln())
    }

    /// Samples topics for the first `⌈n/2⌉` tokens with `φ` fixed and scores
    /// the rest under the averaged post-burn-in estimate of
    /// `θ̂_t = (n_t|half + α_t) / (n_half + A)`. Returns `None` for documents
    /// with nothing left to score.
    pub fn held_out_half_score(
        &self,
        doc: &Document,
        config: &EvalConfig,
        stream: u64,
    ) -> Result<Option<HalfScore>> {
        let n = doc.len();
        let split = n.div_ceil(2);
        if split == n {
            return Ok(None);
        }
        let prior = self.prior(&doc.features)?;
        let alpha = prior.alpha();
        let t_count = self.num_topics();
        let (head, tail) = doc.tokens.split_at(split);
        let mut rng = stream_rng(config.seed, Purpose::Perplexity, stream);

        let mut z: Vec<usize> = Vec::with_capacity(head.len());
        let mut counts = vec![0u32; t_count];
        let mut weights = vec![0.0; t_count];
        // sequential initialization from the predictive
        for &w in head {
            let t = sample_token(&counts, alpha, &self.phi, w, &mut weights, &mut rng);
            counts[t] += 1;
            z.push(t);
        }
        let mut theta_sum = vec![0.0; t_count];
        let denom = split as f64 + prior.sum();
        for sweep in 0..config.conditioning_burn_in + config.conditioning_sweeps {
            for (zi, &w) in z.iter_mut().zip(head) {
                counts[*zi] -= 1;
                let t = sample_token(&counts, alpha, &self.phi, w, &mut weights, &mut rng);
                counts[t] += 1;
                *zi = t;
            }
            if sweep >= config.conditioning_burn_in {
                for t in 0..t_count {
                    theta_sum[t] += (f64::from(counts[t]) + alpha[t]) / denom;
                }
            }
        }
        let theta: Vec<f64> = theta_sum
            .iter()
            .map(|s| s / config.conditioning_sweeps as f64)
            .collect();
        Ok(Some(HalfScore {
            log_prob: self.mixture_log_prob(&theta, tail),
            tokens: tail.len(),
        }))
    }

    /// `Σ_i ln Σ_t θ_t φ_{t,w_i}`.
    pub fn mixture_log_prob(&self, theta: &[f64], tokens: &[usize]) -> f64 {
        tokens
            .iter()
            .map(|&w| {
                (0..self.num_topics())
                    .map(|t| theta[t] * self.phi.prob(t, w))
                    .sum::<f64>()
                    .ln()
            })
            .sum()
    }

    /// Held-out perplexity over `docs`; documents with fewer than two tokens
    /// are excluded with a warning.
    pub fn perplexity(&self, docs: &[Document], config: &EvalConfig) -> Result<f64> {
        let report = self.evaluate(
            docs,
            config,
            Metrics {
                perplexity: true,
                empirical_likelihood: false,
            },
        )?;
        report.perplexity.ok_or(Error::EmptyInput("perplexity"))
    }

    /// Per-document and aggregate held-out metrics. Document `i` uses
    /// stream `i` for every metric.
    pub fn evaluate(
        &self,
        docs: &[Document],
        config: &EvalConfig,
        metrics: Metrics,
    ) -> Result<EvalReport> {
        config.validate()?;
        let documents = docs
            .par_iter()
            .enumerate()
            .map(|(i, doc)| {
                let empirical_ll = if metrics.empirical_likelihood {
                    Some(self.empirical_likelihood(doc, config, i as u64)?)
                } else {
                    None
                };
                let heldout = if metrics.perplexity {
                    self.held_out_half_score(doc, config, i as u64)?
                } else {
                    None
                };
                Ok(DocumentEval {
                    id: doc.id.clone(),
                    tokens: doc.len(),
                    empirical_ll,
                    heldout,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(summarize(documents, metrics))
    }

    /// Pooled topic counts of `samples` independent left-to-right assignment
    /// sequences for `doc`, each token drawn from
    /// `p(z_i = t) ∝ (n_t|<i + α_t) φ_{t,w_i}`.
    pub fn sample_topic_counts(
        &self,
        doc: &Document,
        prior: &DirichletPrior,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<u64> {
        let t_count = self.num_topics();
        let mut pooled = vec![0u64; t_count];
        let mut counts = vec![0u32; t_count];
        let mut weights = vec![0.0; t_count];
        for _ in 0..samples {
            counts.fill(0);
            for &w in &doc.tokens {
                let t = sample_token(&counts, prior.alpha(), &self.phi, w, &mut weights, rng);
                counts[t] += 1;
            }
            for (p, &c) in pooled.iter_mut().zip(&counts) {
                *p += u64::from(c);
            }
        }
        pooled
    }

    /// Ranks candidate features (e.g. authors) for a document. Scores are
    /// Dirichlet-multinomial log likelihoods of the pooled topic counts under
    /// `exp(λ_t0 + λ_ta)`; ties are broken by ascending feature index.
    pub fn rank_candidates(
        &self,
        doc: &Document,
        candidates: &[usize],
        config: &EvalConfig,
        stream: u64,
    ) -> Result<Vec<RankedCandidate>> {
        if candidates.is_empty() {
            return Err(Error::EmptyInput("rank_candidates"));
        }
        if let Some(&bad) = candidates
            .iter()
            .find(|&&a| a >= self.lambda.num_features())
        {
            return Err(Error::UnknownFeature(bad));
        }
        let base = self.prior(&FeatureVector::intercept())?;
        let mut rng = stream_rng(config.seed, Purpose::Prediction, stream);
        let counts = self.sample_topic_counts(doc, &base, config.prediction_samples, &mut rng);
        let mut ranked = candidates
            .iter()
            .map(|&a| {
                let alpha = self.candidate_weights(a);
                Ok(RankedCandidate {
                    feature: a,
                    score: dm_marginal_log_likelihood(&alpha, &counts)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ranked.sort_by(|x, y| y.score.total_cmp(&x.score).then(x.feature.cmp(&y.feature)));
        Ok(ranked)
    }

    /// `exp(λ_t0 + λ_tk)` per topic (just `exp(λ_t0)` for the intercept).
    fn candidate_weights(&self, feature: usize) -> Vec<f64> {
        (0..self.num_topics())
            .map(|t| {
                let extra = if feature == 0 {
                    0.0
                } else {
                    self.lambda.get(t, feature)
                };
                capped_exp(self.lambda.get(t, 0) + extra).0
            })
            .collect()
    }

    /// Topics sorted by prior weight for a feature vector, with top words.
    pub fn topic_prior_report(
        &self,
        features: &FeatureVector,
        top_n: usize,
    ) -> Result<Vec<TopicRow>> {
        let prior = self.prior(features)?;
        Ok(self.rows(prior.alpha(), top_n))
    }

    /// Topics sorted by `exp(λ_t0 + λ_tk)` for a single feature, with top words.
    pub fn ranked_topics_for_feature(&self, feature: usize, top_n: usize) -> Result<Vec<TopicRow>> {
        if feature >= self.lambda.num_features() {
            return Err(Error::UnknownFeature(feature));
        }
        Ok(self.rows(&self.candidate_weights(feature), top_n))
    }

    fn rows(&self, weights: &[f64], top_n: usize) -> Vec<TopicRow> {
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(top_n)
            .map(|t| TopicRow {
                topic: t,
                weight: weights[t],
                top_words: self
                    .phi
                    .top_words(t, REPORT_WORDS)
                    .into_iter()
                    .map(|w| self.vocabulary.word(w).unwrap_or("?").to_string())
                    .collect(),
            })
            .collect()
    }
}

fn summarize(documents: Vec<DocumentEval>, metrics: Metrics) -> EvalReport {
    let mut excluded = 0;
    let (mut log_prob, mut scored) = (0.0, 0usize);
    for d in &documents {
        match d.heldout {
            Some(h) => {
                log_prob += h.log_prob;
                scored += h.tokens;
            }
            None if metrics.perplexity => excluded += 1,
            None => {}
        }
    }
    if excluded > 0 {
        warn!("{excluded} documents too short to score were excluded from perplexity");
    }
    let perplexity = (metrics.perplexity && scored > 0).then(|| (-log_prob / scored as f64).exp());
    let empirical_ll = metrics
        .empirical_likelihood
        .then(|| documents.iter().filter_map(|d| d.empirical_ll).sum());
    EvalReport {
        documents,
        perplexity,
        empirical_ll,
        excluded_docs: excluded,
    }
}

/// Recomputes aggregates from per-document entries.
pub fn recompute_aggregates(documents: Vec<DocumentEval>, metrics: Metrics) -> EvalReport {
    summarize(documents, metrics)
}

#[inline]
fn sample_token(
    counts: &[u32],
    alpha: &[f64],
    phi: &Phi,
    word: usize,
    weights: &mut [f64],
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut total = 0.0;
    for (t, w) in weights.iter_mut().enumerate() {
        total += (f64::from(counts[t]) + alpha[t]) * phi.prob(t, word);
        *w = total;
    }
    draw_cumulative(weights, total, rng)
}

fn word_counts(tokens: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = tokens.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for w in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == w => *c += 1,
            _ => out.push((w, 1)),
        }
    }
    out
}

/// Log probability of one fixed token sequence with topic counts `counts`
/// under a Dirichlet-multinomial with parameters `alpha`:
/// `lnΓ(A) - lnΓ(A + N) + Σ_t lnΓ(α_t + n_t) - lnΓ(α_t)`.
pub fn dm_marginal_log_likelihood(alpha: &[f64], counts: &[u64]) -> Result<f64> {
    if alpha.len() != counts.len() {
        return Err(Error::Dimension(format!(
            "{} parameters for {} counts",
            alpha.len(),
            counts.len()
        )));
    }
    if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidConfig(
            "Dirichlet parameters must be positive".into(),
        ));
    }
    let sum: f64 = alpha.iter().sum();
    let n: u64 = counts.iter().sum();
    let mut ll = ln_gamma(sum) - ln_gamma(sum + n as f64);
    for (&a, &c) in alpha.iter().zip(counts) {
        if c > 0 {
            ll += ln_gamma(a + c as f64) - ln_gamma(a);
        }
    }
    Ok(ll)
}

/// `1 / rank` of the best-ranked true candidate, or `None` if no true
/// candidate appears in the ranking.
pub fn reciprocal_rank(ranking: &[RankedCandidate], truth: &[usize]) -> Option<f64> {
    ranking
        .iter()
        .position(|c| truth.contains(&c.feature))
        .map(|p| 1.0 / (p + 1) as f64)
}

/// Fraction of documents whose best true candidate is ranked at or above
/// each position `1..=max_rank`.
pub fn rank_curve(ranks: &[usize], max_rank: usize) -> Vec<f64> {
    let n = ranks.len().max(1) as f64;
    (1..=max_rank)
        .map(|r| ranks.iter().filter(|&&k| k <= r).count() as f64 / n)
        .collect()
}
