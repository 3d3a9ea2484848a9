//! Collapsed Gibbs sampling of topic assignments under per-document
//! Dirichlet priors.
//!
//! The sampler is shared by DMR and LDA: both supply one [`DirichletPrior`]
//! per document, DMR from `exp(x_d . lambda_t)` and LDA from a single
//! corpus-wide vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FeatureVector};
use crate::numeric::log_sum_exp;
use crate::trainer::{capped_exp, LambdaMatrix};
use crate::{Error, Result};

/// Largest `x . lambda_t` accepted by [`compute_alpha`] before `exp` overflows.
pub const MAX_EXP_ARG: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletPrior {
    alpha: Vec<f64>,
    sum: f64,
}

impl DirichletPrior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::EmptyInput("DirichletPrior"));
        }
        if let Some(bad) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Dirichlet parameters must be positive and finite, got {bad}"
            )));
        }
        let sum = alpha.iter().sum();
        Ok(Self { alpha, sum })
    }

    pub fn symmetric(num_topics: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; num_topics])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// `alpha_t = exp(x . lambda_t)` for every topic.
///
/// Fails when a dot product is non-finite or exceeds [`MAX_EXP_ARG`].
pub fn compute_alpha(x: &FeatureVector, lambda: &LambdaMatrix) -> Result<DirichletPrior> {
    check_feature_range(x, lambda)?;
    let alpha = (0..lambda.num_topics())
        .map(|t| {
            let dot = x.dot(lambda.row(t));
            if !dot.is_finite() || dot > MAX_EXP_ARG {
                Err(Error::AlphaOverflow {
                    doc: None,
                    topic: t,
                    dot,
                })
            } else {
                Ok(dot.exp())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DirichletPrior::new(alpha)
}

/// Like [`compute_alpha`] but caps each dot product at [`LOG_ALPHA_CAP`](crate::trainer::LOG_ALPHA_CAP),
/// returning the number of capped entries alongside the prior.
pub fn compute_alpha_capped(
    x: &FeatureVector,
    lambda: &LambdaMatrix,
) -> Result<(DirichletPrior, usize)> {
    check_feature_range(x, lambda)?;
    let mut capped = 0;
    let mut alpha = Vec::with_capacity(lambda.num_topics());
    for t in 0..lambda.num_topics() {
        let dot = x.dot(lambda.row(t));
        if dot.is_nan() {
            return Err(Error::AlphaOverflow {
                doc: None,
                topic: t,
                dot,
            });
        }
        let (value, was_capped) = capped_exp(dot);
        capped += usize::from(was_capped);
        alpha.push(value);
    }
    Ok((DirichletPrior::new(alpha)?, capped))
}

fn check_feature_range(x: &FeatureVector, lambda: &LambdaMatrix) -> Result<()> {
    if x.max_index() >= lambda.num_features() {
        return Err(Error::UnknownFeature(x.max_index()));
    }
    Ok(())
}

/// Topic-word count table `n_{w|t}` with row totals `n_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWordCounts {
    num_topics: usize,
    vocab_size: usize,
    counts: Vec<u32>,
    totals: Vec<u64>,
}

impl TopicWordCounts {
    pub fn new(num_topics: usize, vocab_size: usize) -> Self {
        Self {
            num_topics,
            vocab_size,
            counts: vec![0; num_topics * vocab_size],
            totals: vec![0; num_topics],
        }
    }

    /// Builds a table from a row-major `T x V` count array.
    pub fn from_counts(num_topics: usize, vocab_size: usize, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != num_topics * vocab_size {
            return Err(Error::Dimension(format!(
                "{} counts for a {num_topics} x {vocab_size} table",
                counts.len()
            )));
        }
        let totals = counts
            .chunks(vocab_size.max(1))
            .take(num_topics)
            .map(|row| row.iter().map(|&c| u64::from(c)).sum())
            .collect::<Vec<u64>>();
        let totals = if vocab_size == 0 {
            vec![0; num_topics]
        } else {
            totals
        };
        Ok(Self {
            num_topics,
            vocab_size,
            counts,
            totals,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn count(&self, topic: usize, word: usize) -> u32 {
        self.counts[topic * self.vocab_size + word]
    }

    pub fn total(&self, topic: usize) -> u64 {
        self.totals[topic]
    }

    pub fn row(&self, topic: usize) -> &[u32] {
        &self.counts[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    #[inline]
    fn add(&mut self, topic: usize, word: usize) {
        self.counts[topic * self.vocab_size + word] += 1;
        self.totals[topic] += 1;
    }

    #[inline]
    fn remove(&mut self, topic: usize, word: usize) {
        self.counts[topic * self.vocab_size + word] -= 1;
        self.totals[topic] -= 1;
    }
}

/// Point estimate of the topic-word distributions, row-major `T x V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    num_topics: usize,
    vocab_size: usize,
    probs: Vec<f64>,
}

impl Phi {
    /// Wraps an explicit table; each row must be a probability vector.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_topics = rows.len();
        let vocab_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != vocab_size) {
            return Err(Error::Dimension("ragged topic-word rows".into()));
        }
        Ok(Self {
            num_topics,
            vocab_size,
            probs: rows.into_iter().flatten().collect(),
        })
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn prob(&self, topic: usize, word: usize) -> f64 {
        self.probs[topic * self.vocab_size + word]
    }

    pub fn row(&self, topic: usize) -> &[f64] {
        &self.probs[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    /// Word ids of the `n` most probable words of a topic; ties go to the
    /// lower word id.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<usize> {
        let row = self.row(topic);
        let mut ids: Vec<usize> = (0..self.vocab_size).collect();
        ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }
}

/// Denominator used when smoothing topic-word counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingDenominator {
    /// `n_t + V beta`: rows are proper distributions.
    #[default]
    Vocabulary,
    /// `n_t + |T| beta`, as some published formulas print it; rows need not
    /// sum to one.
    TopicCount,
}

/// `phi[t][w] = (n_{w|t} + beta) / (n_t + V beta)`.
pub fn estimate_phi(counts: &TopicWordCounts, beta: f64) -> Phi {
    estimate_phi_with(counts, beta, SmoothingDenominator::Vocabulary)
}

pub fn estimate_phi_with(
    counts: &TopicWordCounts,
    beta: f64,
    denominator: SmoothingDenominator,
) -> Phi {
    let v = counts.vocab_size;
    let scale = match denominator {
        SmoothingDenominator::Vocabulary => v as f64,
        SmoothingDenominator::TopicCount => counts.num_topics as f64,
    };
    let mut probs = Vec::with_capacity(counts.num_topics * v);
    for t in 0..counts.num_topics {
        let denom = counts.totals[t] as f64 + scale * beta;
        probs.extend(counts.row(t).iter().map(|&c| (f64::from(c) + beta) / denom));
    }
    Phi {
        num_topics: counts.num_topics,
        vocab_size: v,
        probs,
    }
}

/// Topic assignments plus the count tables of the collapsed sampler.
#[derive(Debug, Clone)]
pub struct TopicState {
    num_topics: usize,
    tokens: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<u32>,
    topic_word: TopicWordCounts,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

/// Random initial assignments for every token of `corpus`.
pub fn init_assignments(corpus: &Corpus, num_topics: usize, seed: u64) -> Result<TopicState> {
    TopicState::new(
        corpus.documents.iter().map(|d| d.tokens.clone()).collect(),
        corpus.vocabulary.len(),
        num_topics,
        seed,
    )
}

impl TopicState {
    /// Assigns each token a uniformly random topic using a ChaCha8 stream
    /// seeded from `seed`.
    pub fn new(
        tokens: Vec<Vec<usize>>,
        vocab_size: usize,
        num_topics: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_topics == 0 {
            return Err(Error::InvalidConfig("number of topics must be >= 1".into()));
        }
        if let Some(&w) = tokens.iter().flatten().find(|&&w| w >= vocab_size) {
            return Err(Error::Dimension(format!(
                "token id {w} outside vocabulary of size {vocab_size}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let assignments: Vec<Vec<usize>> = tokens
            .iter()
            .map(|doc| {
                doc.iter()
                    .map(|_| rng.random_range(0..num_topics))
                    .collect()
            })
            .collect();
        Self::with_assignments(tokens, assignments, vocab_size, num_topics, rng)
    }

    /// Builds a state from explicit assignments.
    pub fn from_assignments(
        tokens: Vec<Vec<usize>>,
        assignments: Vec<Vec<usize>>,
        vocab_size: usize,
        num_topics: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_topics == 0 {
            return Err(Error::InvalidConfig("number of topics must be >= 1".into()));
        }
        if tokens.len() != assignments.len()
            || tokens
                .iter()
                .zip(&assignments)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::Dimension("assignments do not match tokens".into()));
        }
        if assignments.iter().flatten().any(|&z| z >= num_topics)
            || tokens.iter().flatten().any(|&w| w >= vocab_size)
        {
            return Err(Error::Dimension("topic or word id out of range".into()));
        }
        Self::with_assignments(
            tokens,
            assignments,
            vocab_size,
            num_topics,
            ChaCha8Rng::seed_from_u64(seed),
        )
    }

    fn with_assignments(
        tokens: Vec<Vec<usize>>,
        assignments: Vec<Vec<usize>>,
        vocab_size: usize,
        num_topics: usize,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let mut doc_topic = vec![0u32; tokens.len() * num_topics];
        let mut topic_word = TopicWordCounts::new(num_topics, vocab_size);
        for (d, (doc, z)) in tokens.iter().zip(&assignments).enumerate() {
            for (&w, &t) in doc.iter().zip(z) {
                doc_topic[d * num_topics + t] += 1;
                topic_word.add(t, w);
            }
        }
        Ok(Self {
            num_topics,
            tokens,
            assignments,
            doc_topic,
            topic_word,
            rng,
            weights: vec![0.0; num_topics],
        })
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_docs(&self) -> usize {
        self.tokens.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.topic_word.vocab_size
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.tokens[d].len()
    }

    pub fn tokens(&self, d: usize) -> &[usize] {
        &self.tokens[d]
    }

    pub fn assignments(&self, d: usize) -> &[usize] {
        &self.assignments[d]
    }

    /// `n_{t|d}` for one document.
    pub fn doc_topic_counts(&self, d: usize) -> &[u32] {
        &self.doc_topic[d * self.num_topics..(d + 1) * self.num_topics]
    }

    /// Row-major `D x T` document-topic counts.
    pub fn doc_topic(&self) -> &[u32] {
        &self.doc_topic
    }

    pub fn topic_word(&self) -> &TopicWordCounts {
        &self.topic_word
    }

    pub fn total_tokens(&self) -> usize {
        self.tokens.iter().map(Vec::len).sum()
    }

    /// Verifies that every count table agrees with the assignments.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let t_count = self.num_topics;
        let mut doc_topic = vec![0u32; self.doc_topic.len()];
        let mut topic_word = vec![0u32; self.topic_word.counts.len()];
        for (d, (doc, z)) in self.tokens.iter().zip(&self.assignments).enumerate() {
            for (&w, &t) in doc.iter().zip(z) {
                if t >= t_count {
                    return Err(format!("doc {d}: topic {t} out of range"));
                }
                doc_topic[d * t_count + t] += 1;
                topic_word[t * self.vocab_size() + w] += 1;
            }
            let row_sum: u64 = self.doc_topic_counts(d).iter().map(|&c| u64::from(c)).sum();
            if row_sum != doc.len() as u64 {
                return Err(format!(
                    "doc {d}: sum_t n_t|d = {row_sum} != n_d = {}",
                    doc.len()
                ));
            }
        }
        if doc_topic != self.doc_topic {
            return Err("doc-topic counts disagree with assignments".into());
        }
        if topic_word != self.topic_word.counts {
            return Err("topic-word counts disagree with assignments".into());
        }
        for t in 0..t_count {
            let s: u64 = self.topic_word.row(t).iter().map(|&c| u64::from(c)).sum();
            if s != self.topic_word.totals[t] {
                return Err(format!("topic {t}: sum_w n_w|t = {s} != n_t"));
            }
        }
        let total: u64 = self.topic_word.totals.iter().sum();
        if total != self.total_tokens() as u64 {
            return Err("topic totals do not sum to the token count".into());
        }
        Ok(())
    }
}

/// Normalized conditional `p(z_{d,i} = t | z_{-i}, w)` with token `(d, i)`
/// excluded from every count.
///
/// `p(t) ∝ (n_{t|d} + alpha_t) (n_{w|t} + beta) / (n_t + V beta)`.
pub fn conditional_distribution(
    state: &TopicState,
    d: usize,
    i: usize,
    prior: &DirichletPrior,
    beta: f64,
) -> Vec<f64> {
    let w = state.tokens[d][i];
    let current = state.assignments[d][i];
    let vbeta = state.vocab_size() as f64 * beta;
    let doc = state.doc_topic_counts(d);
    let mut p: Vec<f64> = (0..state.num_topics)
        .map(|t| {
            let own = u32::from(t == current);
            let ndt = f64::from(doc[t] - own);
            let nwt = f64::from(state.topic_word.count(t, w) - own);
            let nt = (state.topic_word.total(t) - u64::from(own)) as f64;
            (ndt + prior.alpha[t]) * (nwt + beta) / (nt + vbeta)
        })
        .collect();
    let z: f64 = p.iter().sum();
    for v in &mut p {
        *v /= z;
    }
    p
}

/// Resamples every token once, documents in order and tokens by position.
pub fn gibbs_sweep(state: &mut TopicState, priors: &[DirichletPrior], beta: f64) {
    assert_eq!(priors.len(), state.num_docs(), "one prior per document");
    let num_topics = state.num_topics;
    let vbeta = state.vocab_size() as f64 * beta;
    let TopicState {
        tokens,
        assignments,
        doc_topic,
        topic_word,
        rng,
        weights,
        ..
    } = state;
    for (d, (doc, z)) in tokens.iter().zip(assignments.iter_mut()).enumerate() {
        let alpha = &priors[d].alpha;
        let counts = &mut doc_topic[d * num_topics..(d + 1) * num_topics];
        for (&w, zi) in doc.iter().zip(z.iter_mut()) {
            let old = *zi;
            counts[old] -= 1;
            topic_word.remove(old, w);

            let mut total = 0.0;
            for t in 0..num_topics {
                total += (f64::from(counts[t]) + alpha[t])
                    * (f64::from(topic_word.count(t, w)) + beta)
                    / (topic_word.totals[t] as f64 + vbeta);
                weights[t] = total;
            }
            let new = draw_cumulative(weights, total, rng);

            *zi = new;
            counts[new] += 1;
            topic_word.add(new, w);
        }
    }
}

/// Index of the first cumulative weight exceeding `u * total`.
#[inline]
pub(crate) fn draw_cumulative(cumulative: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let u = rng.random::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Draws `theta ~ Dirichlet(alpha)`.
///
/// Gamma variates are formed in log space (`Gamma(a) = Gamma(a + 1) U^{1/a}`)
/// so that very small concentrations do not underflow to an all-zero draw.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let log_g: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let boosted = Gamma::new(a + 1.0, 1.0).expect("positive shape");
            let g: f64 = boosted.sample(rng);
            let u: f64 = rng.random::<f64>();
            // 1 - u lies in (0, 1]
            g.ln() + (1.0 - u).ln() / a
        })
        .collect();
    let norm = log_sum_exp(&log_g).expect("nonempty alpha");
    log_g.iter().map(|l| (l - norm).exp()).collect()
}
