//! Shared corpus preparation, training dispatch and fold construction.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::path::Path;

use anyhow::{Context, Result};
use dmr::corpus::{
    encode_author_features, encode_citation_features, encode_date_features, read_records, Corpus,
    DocumentRecord, IngestOptions,
};
use dmr::numeric::OptimizerConfig;
use dmr::trainer::{train_dmr, train_lda, ModelSnapshot, TrainConfig};
use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{CorpusArgs, FeatureKind, ModelChoice, Requirement, TrainingArgs};
use crate::UsageError;

pub fn read_corpus_file(path: &Path) -> Result<Vec<DocumentRecord>> {
    let file = File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    read_records(file).with_context(|| format!("reading corpus {}", path.display()))
}

pub fn ingest_options(args: &CorpusArgs) -> Result<IngestOptions> {
    let mut options = IngestOptions::new();
    options.lowercase = !args.keep_case;
    if let Some(path) = &args.stopwords {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading stopwords {}", path.display()))?;
        options.stopwords = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                if options.lowercase {
                    l.to_lowercase()
                } else {
                    l.to_string()
                }
            })
            .collect();
    }
    Ok(options)
}

/// Selected feature families; `none` may not be combined with others.
pub fn feature_families(args: &CorpusArgs) -> Result<BTreeSet<FeatureKind>> {
    let set: BTreeSet<FeatureKind> = args.features.iter().copied().collect();
    if set.contains(&FeatureKind::None) && set.len() > 1 {
        return Err(UsageError::new(
            "--features none cannot be combined with other feature families",
        )
        .into());
    }
    Ok(set
        .into_iter()
        .filter(|f| *f != FeatureKind::None)
        .collect())
}

pub fn check_model_features(model: ModelChoice, args: &CorpusArgs) -> Result<()> {
    if model == ModelChoice::Lda && !feature_families(args)?.is_empty() {
        return Err(
            UsageError::new("--model lda does not use document features; drop --features").into(),
        );
    }
    Ok(())
}

/// Date and metadata-presence filters, applied to records before
/// tokenization so training and held-out documents are treated alike.
pub fn keep_record(record: &DocumentRecord, args: &CorpusArgs) -> bool {
    if let (Some(min), Some(date)) = (args.min_date, record.date) {
        if date < min {
            return false;
        }
    }
    args.require_feature.iter().all(|r| match r {
        Requirement::Authors => !record.authors.is_empty(),
        Requirement::Citations => !record.citations.is_empty(),
        Requirement::Dates => record.date.is_some(),
    })
}

/// Builds a training corpus: filters, drops empty documents, then encodes
/// the selected feature families (in the order authors, citations, dates).
pub fn training_corpus(
    records: &[DocumentRecord],
    args: &CorpusArgs,
    encode: bool,
) -> Result<Corpus> {
    let kept: Vec<DocumentRecord> = records
        .iter()
        .filter(|r| keep_record(r, args))
        .cloned()
        .collect();
    if kept.len() < records.len() {
        info!(
            "{} of {} documents removed by filters",
            records.len() - kept.len(),
            records.len()
        );
    }
    let mut corpus = Corpus::from_records(&kept, &ingest_options(args)?);
    let before = corpus.documents.len();
    corpus.documents.retain(|d| !d.is_empty());
    if corpus.documents.len() < before {
        warn!(
            "{} empty documents excluded from training",
            before - corpus.documents.len()
        );
    }
    if !encode {
        return Ok(corpus);
    }
    for family in feature_families(args)? {
        corpus = match family {
            FeatureKind::Authors => encode_author_features(corpus, args.min_author_docs),
            FeatureKind::Citations => encode_citation_features(corpus, args.min_citations),
            FeatureKind::Dates => encode_date_features(corpus, args.date_epsilon)?,
            FeatureKind::None => corpus,
        };
    }
    info!(
        "{} documents, {} word types, {} tokens, {} features",
        corpus.documents.len(),
        corpus.vocabulary.len(),
        corpus.num_tokens(),
        corpus.features.len()
    );
    Ok(corpus)
}

pub fn train_config(args: &TrainingArgs, seed: u64) -> Result<TrainConfig> {
    let config = TrainConfig {
        num_topics: args.topics,
        beta: args.beta,
        sigma2_default: args.sigma_default,
        sigma2_other: args.sigma,
        iterations: args.iterations,
        burn_in: args.burn_in,
        optimize_interval: args.optimize_interval,
        seed,
        optimizer: OptimizerConfig {
            memory: args.optimizer_memory,
            tolerance: args.optimizer_tolerance,
            max_iterations: args.optimizer_max_iterations,
            ..OptimizerConfig::default()
        },
    };
    config
        .validate()
        .map_err(|e| UsageError::new(e.to_string()))?;
    Ok(config)
}

pub fn train(corpus: &Corpus, model: ModelChoice, config: &TrainConfig) -> Result<ModelSnapshot> {
    Ok(match model {
        ModelChoice::Dmr => train_dmr(corpus, config)?,
        ModelChoice::Lda => train_lda(corpus, config)?,
    })
}

/// Fold index of each of `n` documents: a seeded Fisher–Yates shuffle of
/// `0..n` split into `folds` contiguous, near-equal blocks.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(UsageError::new("--folds must be at least 2").into());
    }
    if folds > n {
        return Err(UsageError::new(format!("{folds} folds requested for {n} documents")).into());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (position, &doc) in order.iter().enumerate() {
        fold_of[doc] = position * folds / n;
    }
    Ok(fold_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_documents() {
        let f = fold_assignment(23, 4, 9).unwrap();
        let mut sizes = [0; 4];
        for &k in &f {
            sizes[k] += 1;
        }
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        assert!(sizes.iter().all(|&s| s == 5 || s == 6));
        assert_eq!(f, fold_assignment(23, 4, 9).unwrap());
        assert_ne!(f, fold_assignment(23, 4, 10).unwrap());
    }

    #[test]
    fn too_many_folds_is_an_error() {
        assert!(fold_assignment(3, 4, 1).is_err());
        assert!(fold_assignment(3, 1, 1).is_err());
    }
}
