//! Command-line surface. Every flag can also come from a config file whose
//! keys mirror the long flag names (see [`crate::config`]).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "dmr",
    version,
    about = "Dirichlet-multinomial regression topic models",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file of default flag values; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Log filter, e.g. `info` or `dmr=debug`.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Train a DMR or LDA model and write a snapshot.
    Train(TrainCmd),
    /// Held-out perplexity and empirical likelihood.
    Eval(EvalCmd),
    /// Rank candidate authors or citations for held-out documents.
    Predict(PredictCmd),
    /// Topic prior tables for a feature set or a single feature.
    Report(ReportCmd),
    /// K-fold cross-validation over several seeds.
    Cv(CvCmd),
    /// Generate a synthetic corpus with known parameters.
    Synth(SynthCmd),
    /// Re-run the command recorded in a manifest after checking its inputs.
    Rerun(RerunCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Dmr,
    Lda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Authors,
    Citations,
    Dates,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Requirement {
    Authors,
    Citations,
    Dates,
}

/// How documents are read and which metadata become features.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Metadata families encoded as features.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "none")]
    pub features: Vec<FeatureKind>,

    /// Authors on fewer documents than this get no feature.
    #[arg(long, default_value_t = 5)]
    pub min_author_docs: usize,

    /// Cited works referenced by fewer documents than this get no feature.
    #[arg(long, default_value_t = 10)]
    pub min_citations: usize,

    /// Drop documents dated before this year (undated documents are kept).
    #[arg(long)]
    pub min_date: Option<i64>,

    /// Clamp for the date proportion, in (0, 0.5).
    #[arg(long, default_value_t = dmr::corpus::DEFAULT_DATE_EPSILON)]
    pub date_epsilon: f64,

    /// Keep only documents that carry these metadata.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub require_feature: Vec<Requirement>,

    /// File with one stopword per line.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,

    /// Do not lowercase tokens.
    #[arg(long)]
    pub keep_case: bool,
}

/// Sampler and M-step settings.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 100)]
    pub topics: usize,

    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,

    /// Prior variance of the intercept weights.
    #[arg(long, default_value_t = 10.0)]
    pub sigma_default: f64,

    /// Prior variance of every other feature weight.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,

    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,

    #[arg(long, default_value_t = 250)]
    pub burn_in: usize,

    #[arg(long, default_value_t = 50)]
    pub optimize_interval: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value_t = 5)]
    pub optimizer_memory: usize,

    #[arg(long, default_value_t = 1e-5)]
    pub optimizer_tolerance: f64,

    #[arg(long, default_value_t = 200)]
    pub optimizer_max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Perplexity,
    El,
    All,
}

/// Held-out evaluation settings.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub metric: Metric,

    /// Dirichlet draws per document for empirical likelihood.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,

    /// Post-burn-in Gibbs sweeps over each document's first half.
    #[arg(long, default_value_t = 200)]
    pub conditioning_sweeps: usize,

    #[arg(long, default_value_t = 50)]
    pub conditioning_burn_in: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainCmd {
    #[arg(long)]
    pub corpus: PathBuf,

    /// Snapshot path; the manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value = "dmr")]
    pub model: ModelChoice,

    #[command(flatten)]
    pub corpus_args: CorpusArgs,

    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalCmd {
    #[arg(long)]
    pub snapshot: PathBuf,

    /// Held-out corpus file.
    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads (defaults to DMR_JOBS, then the number of cores).
    #[arg(long, env = "DMR_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Authors,
    Citations,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictCmd {
    #[arg(long)]
    pub snapshot: PathBuf,

    #[arg(long)]
    pub corpus: PathBuf,

    /// Ranking file; a summary is written to `<out>.summary.tsv`.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value = "authors")]
    pub kind: CandidateKind,

    /// Independent topic-assignment sequences per document.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, env = "DMR_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportCmd {
    #[arg(long)]
    pub snapshot: PathBuf,

    /// Topic prior for the feature set given by `--set`.
    #[arg(long, requires = "set", conflicts_with = "feature")]
    pub prior: bool,

    /// Comma-separated feature names; `date:YEAR` (or `year:YEAR`) sets the date features.
    #[arg(long)]
    pub set: Option<String>,

    /// Topics ranked by `exp(λ_t0 + λ_tk)` for one named feature.
    #[arg(long)]
    pub feature: Option<String>,

    #[arg(long, default_value_t = 10)]
    pub top: usize,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvCmd {
    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Random initializations per fold; run `i` uses seed `--seed + i`.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,

    /// Models trained on every fold.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dmr,lda")]
    pub models: Vec<ModelChoice>,

    /// Seed of the fold shuffle.
    #[arg(long, default_value_t = 1)]
    pub fold_seed: u64,

    #[command(flatten)]
    pub corpus_args: CorpusArgs,

    #[command(flatten)]
    pub training: TrainingArgs,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[arg(long, env = "DMR_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Authors,
    Dates,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthCmd {
    #[arg(long, default_value_t = 200)]
    pub docs: usize,

    #[arg(long, default_value_t = 5)]
    pub topics: usize,

    #[arg(long, default_value_t = 50)]
    pub vocab: usize,

    #[arg(long, default_value_t = 4)]
    pub authors: usize,

    #[arg(long, default_value_t = 60)]
    pub doc_len: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, value_enum, default_value = "authors")]
    pub mode: SynthMode,

    /// Magnitude of the author weights (authors mode).
    #[arg(long, default_value_t = 2.0)]
    pub strength: f64,

    /// Peak sharpness of the date weights (dates mode).
    #[arg(long, default_value_t = 4.0)]
    pub date_concentration: f64,

    #[arg(long, default_value_t = 1987)]
    pub date_start: i64,

    #[arg(long, default_value_t = 2007)]
    pub date_end: i64,

    /// Concentration of the symmetric Dirichlet the topic-word rows are drawn
    /// from. Small values give nearly disjoint topics, whose words alone
    /// identify a document's topic and leave little for metadata to explain.
    #[arg(long, default_value_t = 1.0)]
    pub word_concentration: f64,

    /// Set every feature weight to zero (a symmetric LDA prior).
    #[arg(long)]
    pub zero_lambda: bool,

    /// Corpus file (JSON Lines).
    #[arg(long)]
    pub out: PathBuf,

    /// Ground-truth file; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RerunCmd {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
