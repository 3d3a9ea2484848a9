//! Synthetic corpora drawn from the DMR generative process with known
//! parameters.
//!
//! - `authors` mode: one author per document (round robin). Author `j`
//!   favours topic `j mod T` with weight `+strength` and disfavours every
//!   other topic with `-strength`; the intercept is zero.
//! - `dates` mode: each topic peaks at a point `m_t = (t + 1/2) / T` of the
//!   date range. With `x_d = (1, ln p_d, ln(1 - p_d))` and
//!   `λ_t = (λ_t0, c m_t, c (1 - m_t))`, `α_dt` is maximal at `p_d = m_t`;
//!   `λ_t0` is chosen so that the peak value is exactly 1.
//!
//! Feature names and date scaling match what the corpus encoders produce
//! for the written file, so `α*` can be recomputed from the truth file.

use std::fs;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use dmr::corpus::{
    DateScale, DocumentRecord, FeatureDictionary, FeatureVector, AUTHOR_PREFIX,
    DEFAULT_DATE_EPSILON,
};
use dmr::sampler::{compute_alpha, sample_dirichlet};
use dmr::trainer::LambdaMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::args::{SynthCmd, SynthMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentTruth {
    pub id: String,
    pub alpha: Vec<f64>,
}

/// Generator parameters: feature names index the columns of `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub mode: SynthMode,
    pub features: FeatureDictionary,
    pub lambda: LambdaMatrix,
    /// Topic-word distributions, one row per topic.
    pub phi: Vec<Vec<f64>>,
    pub vocabulary: Vec<String>,
    pub documents: Vec<DocumentTruth>,
}

/// Truth file written next to a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub manifest_digest: String,
    pub truth: Truth,
}

impl TruthFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn word_name(w: usize) -> String {
    format!("w{w:04}")
}

pub fn author_name(a: usize) -> String {
    format!("a{a}")
}

pub fn generate(cmd: &SynthCmd) -> Result<(Vec<DocumentRecord>, Truth)> {
    ensure!(
        cmd.docs > 0 && cmd.topics > 0 && cmd.vocab > 0 && cmd.doc_len > 0,
        "sizes must be positive"
    );
    ensure!(
        cmd.word_concentration > 0.0,
        "word concentration must be positive"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cmd.seed);
    let t_count = cmd.topics;

    let phi: Vec<Vec<f64>> = (0..t_count)
        .map(|_| sample_dirichlet(&vec![cmd.word_concentration; cmd.vocab], &mut rng))
        .collect();

    let mut features = FeatureDictionary::new();
    let scale = DateScale {
        min: cmd.date_start,
        max: cmd.date_end,
        epsilon: DEFAULT_DATE_EPSILON,
    };
    let (lambda, labels) = match cmd.mode {
        SynthMode::Authors => {
            ensure!(cmd.authors > 0, "authors mode needs at least one author");
            let mut lambda = LambdaMatrix::zeros(t_count, 1 + cmd.authors);
            for a in 0..cmd.authors {
                let k = features.insert(&format!("{AUTHOR_PREFIX}{}", author_name(a)));
                for t in 0..t_count {
                    let w = if t == a % t_count {
                        cmd.strength
                    } else {
                        -cmd.strength
                    };
                    lambda.set(t, k, w);
                }
            }
            let labels: Vec<Label> = (0..cmd.docs)
                .map(|d| Label::Author(d % cmd.authors))
                .collect();
            (lambda, labels)
        }
        SynthMode::Dates => {
            ensure!(
                cmd.date_end > cmd.date_start,
                "date range must contain two distinct years"
            );
            let (kp, kq) = features.add_date_features(scale);
            let c = cmd.date_concentration;
            let mut lambda = LambdaMatrix::zeros(t_count, 3);
            for t in 0..t_count {
                let m = (t as f64 + 0.5) / t_count as f64;
                lambda.set(t, 0, -c * (m * m.ln() + (1.0 - m) * (1.0 - m).ln()));
                lambda.set(t, kp, c * m);
                lambda.set(t, kq, c * (1.0 - m));
            }
            // the range endpoints are pinned so the encoder's scale matches
            let labels = (0..cmd.docs)
                .map(|d| match d {
                    0 => Label::Date(cmd.date_start),
                    1 => Label::Date(cmd.date_end),
                    _ => Label::Date(rng.random_range(cmd.date_start..=cmd.date_end)),
                })
                .collect();
            (lambda, labels)
        }
    };
    let lambda = if cmd.zero_lambda {
        LambdaMatrix::zeros(t_count, lambda.num_features())
    } else {
        lambda
    };

    let vocabulary: Vec<String> = (0..cmd.vocab).map(word_name).collect();
    let mut records = Vec::with_capacity(cmd.docs);
    let mut documents = Vec::with_capacity(cmd.docs);
    for (d, label) in labels.into_iter().enumerate() {
        let x = match label {
            Label::Author(a) => FeatureVector::from_pairs([(1 + a, 1.0)])?,
            Label::Date(year) => {
                let (lp, lq) = scale.features(year);
                FeatureVector::from_pairs([(1, lp), (2, lq)])?
            }
        };
        let alpha = compute_alpha(&x, &lambda)?;
        let theta = sample_dirichlet(alpha.alpha(), &mut rng);
        let words: Vec<&str> = (0..cmd.doc_len)
            .map(|_| {
                let t = draw(&theta, &mut rng);
                vocabulary[draw(&phi[t], &mut rng)].as_str()
            })
            .collect();
        let id = format!("doc{d:05}");
        let (authors, date) = match label {
            Label::Author(a) => (vec![author_name(a)], None),
            Label::Date(year) => (Vec::new(), Some(year)),
        };
        records.push(DocumentRecord {
            id: id.clone(),
            text: words.join(" "),
            authors,
            citations: Vec::new(),
            date,
        });
        documents.push(DocumentTruth {
            id,
            alpha: alpha.alpha().to_vec(),
        });
    }
    Ok((
        records,
        Truth {
            mode: cmd.mode,
            features,
            lambda,
            phi,
            vocabulary,
            documents,
        },
    ))
}

#[derive(Clone, Copy)]
enum Label {
    Author(usize),
    Date(i64),
}

fn draw(p: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}
