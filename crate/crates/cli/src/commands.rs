//! Command implementations.
//!
//! Each command records a manifest (command line, resolved settings, input
//! digests, seed) before doing any work, stamps the manifest digest into
//! every output it writes, and writes the manifest itself last.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dmr::corpus::{
    held_out, FeatureVector, AUTHOR_PREFIX, CITATION_PREFIX, DATE_LOG_1MP, DATE_LOG_P,
};
use dmr::eval::{rank_curve, reciprocal_rank, EvalConfig, EvalModel, EvalReport, Metrics};
use dmr::numeric::log_gamma;
use log::{info, warn};
use rayon::prelude::*;

use crate::args::{
    CandidateKind, Cli, Command, CvCmd, EvalArgs, EvalCmd, Metric, ModelChoice, PredictCmd,
    ReportCmd, RerunCmd, SynthCmd, TrainCmd,
};
use crate::manifest::{manifest_path_for, FoldAssignment, RunManifest};
use crate::pipeline::{
    check_model_features, feature_families, fold_assignment, ingest_options, keep_record,
    read_corpus_file, train_config, training_corpus,
};
use crate::snapshot::SnapshotFile;
use crate::synth::{generate, TruthFile};
use crate::tsv::Table;
use crate::UsageError;

/// Longest rank curve written to prediction summaries.
const MAX_CURVE_RANK: usize = 100;

/// Runs one parsed command. `args` is the resolved command line, recorded
/// in the manifest so the run can be repeated with `dmr rerun`.
pub fn execute(command: Command, mut args: Vec<String>) -> Result<()> {
    if let Some(first) = args.first_mut() {
        *first = "dmr".to_string();
    }
    let settings = serde_json::to_value(&command)?;
    match command {
        Command::Train(cmd) => train(&cmd, args, settings),
        Command::Eval(cmd) => eval(&cmd, args, settings),
        Command::Predict(cmd) => predict(&cmd, args, settings),
        Command::Report(cmd) => report(&cmd, args, settings),
        Command::Cv(cmd) => cv(&cmd, args, settings),
        Command::Synth(cmd) => synth(&cmd, args, settings),
        Command::Rerun(cmd) => rerun(&cmd),
    }
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    if jobs == Some(0) {
        return Err(UsageError::new("--jobs must be at least 1").into());
    }
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?)
}

fn train(cmd: &TrainCmd, args: Vec<String>, settings: serde_json::Value) -> Result<()> {
    check_model_features(cmd.model, &cmd.corpus_args)?;
    let config = train_config(&cmd.training, cmd.training.seed)?;
    let records = read_corpus_file(&cmd.corpus)?;
    let corpus = training_corpus(&records, &cmd.corpus_args, cmd.model == ModelChoice::Dmr)?;
    if corpus.documents.is_empty() {
        bail!("no documents left to train on");
    }

    let mut manifest = RunManifest::new("train", args, settings, config.seed);
    manifest.add_input("corpus", &cmd.corpus)?;
    manifest.outputs.push(cmd.out.clone());
    let digest = manifest.seal().to_string();

    let model = crate::pipeline::train(&corpus, cmd.model, &config)?;
    SnapshotFile::new(model, ingest_options(&cmd.corpus_args)?, &digest)?.save(&cmd.out)?;
    manifest.write(&manifest_path_for(&cmd.out))?;
    info!("wrote snapshot {}", cmd.out.display());
    Ok(())
}

fn metrics(metric: Metric) -> Metrics {
    Metrics {
        perplexity: matches!(metric, Metric::Perplexity | Metric::All),
        empirical_likelihood: matches!(metric, Metric::El | Metric::All),
    }
}

fn eval_config(args: &EvalArgs, seed: u64) -> Result<EvalConfig> {
    let config = EvalConfig {
        el_samples: args.samples,
        conditioning_sweeps: args.conditioning_sweeps,
        conditioning_burn_in: args.conditioning_burn_in,
        seed,
        ..EvalConfig::default()
    };
    config
        .validate()
        .map_err(|e| UsageError::new(e.to_string()))?;
    Ok(config)
}

fn eval(cmd: &EvalCmd, args: Vec<String>, settings: serde_json::Value) -> Result<()> {
    let config = eval_config(&cmd.eval, cmd.seed)?;
    let pool = thread_pool(cmd.jobs)?;
    let snapshot = SnapshotFile::load(&cmd.snapshot)?;
    let model = EvalModel::from_snapshot(&snapshot.model)?;
    let records = read_corpus_file(&cmd.corpus)?;
    let held = held_out(
        &snapshot.model.vocabulary,
        &snapshot.model.features,
        &records,
        &snapshot.ingest,
    );
    if held.unseen_tokens > 0 {
        warn!(
            "{} held-out tokens are not in the model vocabulary and were skipped",
            held.unseen_tokens
        );
    }

    let mut manifest = RunManifest::new("eval", args, settings, cmd.seed);
    manifest.add_input("snapshot", &cmd.snapshot)?;
    manifest.add_input("corpus", &cmd.corpus)?;
    manifest.outputs.push(cmd.out.clone());
    let digest = manifest.seal().to_string();

    let wanted = metrics(cmd.eval.metric);
    let report = pool.install(|| model.evaluate(&held.documents, &config, wanted))?;
    if wanted.perplexity && report.perplexity.is_none() {
        bail!("no held-out document has at least two known tokens; perplexity is undefined");
    }
    eval_table(&digest, &report, held.unseen_tokens).write(&cmd.out)?;
    manifest.write(&manifest_path_for(&cmd.out))?;
    if let Some(p) = report.perplexity {
        info!("perplexity {p:.4}");
    }
    if let Some(el) = report.mean_empirical_ll() {
        info!("mean empirical log likelihood {el:.4}");
    }
    Ok(())
}

/// Long-format evaluation table: one row per (document or aggregate, metric).
pub fn eval_table(digest: &str, report: &EvalReport, unseen_tokens: usize) -> Table {
    let mut table = Table::new(&["manifest_digest", "scope", "id", "metric", "value"]);
    for doc in &report.documents {
        table.row(&[&digest, &"document", &doc.id, &"tokens", &doc.tokens]);
        if let Some(h) = doc.heldout {
            table.row(&[
                &digest,
                &"document",
                &doc.id,
                &"heldout_log_prob",
                &h.log_prob,
            ]);
            table.row(&[&digest, &"document", &doc.id, &"heldout_tokens", &h.tokens]);
        }
        if let Some(el) = doc.empirical_ll {
            table.row(&[&digest, &"document", &doc.id, &"empirical_ll", &el]);
        }
    }
    let mut aggregate = |metric: &str, value: &dyn std::fmt::Display| {
        table.row(&[&digest, &"aggregate", &"*", &metric, value]);
    };
    aggregate("documents", &report.documents.len());
    if let Some(p) = report.perplexity {
        let scored: usize = report
            .documents
            .iter()
            .filter_map(|d| d.heldout)
            .map(|h| h.tokens)
            .sum();
        aggregate("perplexity", &p);
        aggregate("scored_tokens", &scored);
        aggregate("excluded_docs", &report.excluded_docs);
    }
    if let (Some(total), Some(mean)) = (report.empirical_ll, report.mean_empirical_ll()) {
        aggregate("empirical_ll", &total);
        aggregate("mean_empirical_ll", &mean);
    }
    aggregate("unseen_tokens", &unseen_tokens);
    table
}

/// Expected reciprocal rank of the best of `truths` true candidates among
/// `candidates` under a uniformly random ranking.
pub fn random_ranking_mrr(candidates: usize, truths: usize) -> f64 {
    let ln_choose = |n: usize, k: usize| {
        log_gamma(n as f64 + 1.0).unwrap()
            - log_gamma(k as f64 + 1.0).unwrap()
            - log_gamma((n - k) as f64 + 1.0).unwrap()
    };
    let total = ln_choose(candidates, truths);
    (1..=candidates + 1 - truths)
        .map(|r| (ln_choose(candidates - r, truths - 1) - total).exp() / r as f64)
        .sum()
}

fn predict(cmd: &PredictCmd, args: Vec<String>, settings: serde_json::Value) -> Result<()> {
    if cmd.samples == 0 {
        return Err(UsageError::new("--samples must be at least 1").into());
    }
    let pool = thread_pool(cmd.jobs)?;
    let snapshot = SnapshotFile::load(&cmd.snapshot)?;
    let features = &snapshot.model.features;
    let (prefix, family) = match cmd.kind {
        CandidateKind::Authors => (AUTHOR_PREFIX, "author"),
        CandidateKind::Citations => (CITATION_PREFIX, "citation"),
    };
    let candidates = features.family(prefix);
    if candidates.is_empty() {
        bail!(
            "snapshot {} has no {family} features to rank",
            cmd.snapshot.display()
        );
    }
    let model = EvalModel::from_snapshot(&snapshot.model)?;
    let records = read_corpus_file(&cmd.corpus)?;
    let held = held_out(
        &snapshot.model.vocabulary,
        features,
        &records,
        &snapshot.ingest,
    );

    let mut manifest = RunManifest::new("predict", args, settings, cmd.seed);
    manifest.add_input("snapshot", &cmd.snapshot)?;
    manifest.add_input("corpus", &cmd.corpus)?;
    let summary_path = suffixed(&cmd.out, ".summary.tsv");
    manifest
        .outputs
        .extend([cmd.out.clone(), summary_path.clone()]);
    let digest = manifest.seal().to_string();

    let (mut unknown_label, mut empty) = (0usize, 0usize);
    let mut eligible = Vec::new();
    for (i, doc) in held.documents.iter().enumerate() {
        let labels = match cmd.kind {
            CandidateKind::Authors => &doc.authors,
            CandidateKind::Citations => &doc.citations,
        };
        let truth: BTreeSet<usize> = labels
            .iter()
            .filter_map(|l| features.id(&format!("{prefix}{l}")))
            .collect();
        if truth.is_empty() {
            unknown_label += 1;
        } else if doc.is_empty() {
            empty += 1;
        } else {
            eligible.push((i, truth.into_iter().collect::<Vec<_>>()));
        }
    }
    if unknown_label > 0 {
        warn!("{unknown_label} documents have no {family} known to the model and were excluded");
    }
    let config = EvalConfig {
        prediction_samples: cmd.samples,
        seed: cmd.seed,
        ..EvalConfig::default()
    };
    let rankings = pool.install(|| {
        eligible
            .par_iter()
            .map(|(i, _)| {
                model.rank_candidates(&held.documents[*i], &candidates, &config, *i as u64)
            })
            .collect::<dmr::Result<Vec<_>>>()
    })?;

    let mut table = Table::new(&[
        "manifest_digest",
        "doc",
        "rank",
        "candidate",
        "score",
        "is_true",
    ]);
    let mut best_ranks = Vec::with_capacity(eligible.len());
    let (mut rr_sum, mut random_sum) = (0.0, 0.0);
    for ((i, truth), ranking) in eligible.iter().zip(&rankings) {
        let id = &held.documents[*i].id;
        for (r, c) in ranking.iter().enumerate() {
            let name = features.name(c.feature).unwrap_or("?");
            let label = name.strip_prefix(prefix).unwrap_or(name);
            table.row(&[
                &digest,
                id,
                &(r + 1),
                &label,
                &c.score,
                &truth.contains(&c.feature),
            ]);
        }
        let rr = reciprocal_rank(ranking, truth).expect("true candidates are ranked");
        rr_sum += rr;
        best_ranks.push((1.0 / rr).round() as usize);
        random_sum += random_ranking_mrr(candidates.len(), truth.len());
    }
    table.write(&cmd.out)?;

    let ranked = eligible.len();
    let mut summary = Table::new(&["manifest_digest", "metric", "value"]);
    let mut put =
        |metric: &str, value: &dyn std::fmt::Display| summary.row(&[&digest, &metric, value]);
    put("documents_ranked", &ranked);
    put("excluded_unknown_label", &unknown_label);
    put("excluded_empty", &empty);
    put("candidates", &candidates.len());
    if ranked > 0 {
        put("mrr", &(rr_sum / ranked as f64));
        put("random_ranking_mrr", &(random_sum / ranked as f64));
        put("inverse_candidate_count", &(1.0 / candidates.len() as f64));
        for (r, v) in rank_curve(&best_ranks, candidates.len().min(MAX_CURVE_RANK))
            .iter()
            .enumerate()
        {
            put(&format!("fraction_within_rank_{}", r + 1), v);
        }
        info!(
            "mean reciprocal rank {:.4} over {ranked} documents",
            rr_sum / ranked as f64
        );
    }
    summary.write(&summary_path)?;
    manifest.write(&manifest_path_for(&cmd.out))?;
    Ok(())
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Feature index for `name`, or an error listing similar names.
fn resolve_feature(model: &EvalModel, name: &str) -> Result<usize> {
    model.features.id(name).ok_or_else(|| {
        let mut scored: Vec<(f64, &str)> = model
            .features
            .names()
            .iter()
            .map(|n| (strsim::jaro_winkler(name, n), n.as_str()))
            .filter(|(s, _)| *s >= 0.7)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        let near: Vec<&str> = scored.iter().take(5).map(|s| s.1).collect();
        if near.is_empty() {
            anyhow::anyhow!("unknown feature `{name}`")
        } else {
            anyhow::anyhow!(
                "unknown feature `{name}`; near matches: {}",
                near.join(", ")
            )
        }
    })
}

/// Feature vector for a comma-separated list of feature names, where
/// `date:YEAR` or `year:YEAR` sets the two date features.
fn parse_feature_set(model: &EvalModel, set: &str) -> Result<FeatureVector> {
    let mut x = FeatureVector::intercept();
    for item in set.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if model.features.id(item).is_none() {
            let year = item
                .strip_prefix("date:")
                .or_else(|| item.strip_prefix("year:"))
                .and_then(|y| y.parse::<i64>().ok());
            if let Some(year) = year {
                let scale = model
                    .features
                    .date_scale()
                    .context("the model has no date features")?;
                let (lp, lq) = scale.features(year);
                x.set(resolve_feature(model, DATE_LOG_P)?, lp)?;
                x.set(resolve_feature(model, DATE_LOG_1MP)?, lq)?;
                continue;
            }
        }
        let k = resolve_feature(model, item)?;
        if k != 0 {
            x.set(k, 1.0)?;
        }
    }
    Ok(x)
}

fn report(cmd: &ReportCmd, args: Vec<String>, settings: serde_json::Value) -> Result<()> {
    let snapshot = SnapshotFile::load(&cmd.snapshot)?;
    let model = EvalModel::from_snapshot(&snapshot.model)?;
    let rows = match (&cmd.feature, cmd.prior, &cmd.set) {
        (Some(name), false, _) => {
            model.ranked_topics_for_feature(resolve_feature(&model, name)?, cmd.top)?
        }
        (None, true, Some(set)) => {
            model.topic_prior_report(&parse_feature_set(&model, set)?, cmd.top)?
        }
        _ => {
            return Err(
                UsageError::new("choose either --prior --set LIST or --feature NAME").into(),
            )
        }
    };

    let mut manifest = RunManifest::new("report", args, settings, 0);
    manifest.add_input("snapshot", &cmd.snapshot)?;
    manifest.outputs.extend(cmd.out.clone());
    let digest = manifest.seal().to_string();

    let mut table = Table::new(&["manifest_digest", "rank", "topic", "weight", "top_words"]);
    for (r, row) in rows.iter().enumerate() {
        table.row(&[
            &digest,
            &(r + 1),
            &row.topic,
            &row.weight,
            &row.top_words.join(" "),
        ]);
    }
    match &cmd.out {
        Some(path) => {
            table.write(path)?;
            manifest.write(&manifest_path_for(path))?;
        }
        None => print!("{}", table.as_str()),
    }
    Ok(())
}

/// One (fold, seed, model) training and evaluation run.
#[derive(Debug, Clone, Copy)]
struct Job {
    fold: usize,
    seed: u64,
    model: ModelChoice,
}

impl Job {
    fn model_name(&self) -> &'static str {
        match self.model {
            ModelChoice::Dmr => "dmr",
            ModelChoice::Lda => "lda",
        }
    }

    fn file_name(&self) -> String {
        format!(
            "fold{}-seed{}-{}.tsv",
            self.fold,
            self.seed,
            self.model_name()
        )
    }
}

const POINT_HEADER: [&str; 6] = [
    "manifest_digest",
    "fold",
    "seed",
    "model",
    "metric",
    "value",
];

fn cv(cmd: &CvCmd, args: Vec<String>, settings: serde_json::Value) -> Result<()> {
    let mut models: Vec<ModelChoice> = Vec::new();
    for m in &cmd.models {
        if !models.contains(m) {
            models.push(*m);
        }
    }
    if models.is_empty() {
        return Err(UsageError::new("--models must name at least one model").into());
    }
    if cmd.seeds == 0 {
        return Err(UsageError::new("--seeds must be at least 1").into());
    }
    let encode = !feature_families(&cmd.corpus_args)?.is_empty();
    train_config(&cmd.training, cmd.training.seed)?;
    let eval_cfg = eval_config(&cmd.eval, cmd.training.seed)?;
    let wanted = metrics(cmd.eval.metric);
    let pool = thread_pool(cmd.jobs)?;
    let options = ingest_options(&cmd.corpus_args)?;

    let records: Vec<_> = read_corpus_file(&cmd.corpus)?
        .into_iter()
        .filter(|r| keep_record(r, &cmd.corpus_args))
        .collect();
    let fold_of = fold_assignment(records.len(), cmd.folds, cmd.fold_seed)?;

    let mut manifest = RunManifest::new("cv", args, settings, cmd.training.seed);
    manifest.add_input("corpus", &cmd.corpus)?;
    manifest.folds = (0..cmd.folds)
        .map(|f| FoldAssignment {
            fold: f,
            documents: records
                .iter()
                .zip(&fold_of)
                .filter(|(_, &k)| k == f)
                .map(|(r, _)| r.id.clone())
                .collect(),
        })
        .collect();
    let jobs_dir = cmd.out_dir.join("jobs");
    let outputs = ["points.tsv", "fold_means.tsv", "summary.tsv", "folds.tsv"];
    manifest.outputs = outputs.iter().map(|o| cmd.out_dir.join(o)).collect();
    manifest.outputs.push(jobs_dir.clone());
    let digest = manifest.seal().to_string();
    fs::create_dir_all(&jobs_dir).with_context(|| format!("creating {}", jobs_dir.display()))?;

    let mut fold_table = Table::new(&["manifest_digest", "doc", "fold"]);
    for (r, f) in records.iter().zip(&fold_of) {
        fold_table.row(&[&digest, &r.id, f]);
    }
    fold_table.write(&cmd.out_dir.join("folds.tsv"))?;

    let splits: Vec<_> = (0..cmd.folds)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) =
                records.iter().zip(&fold_of).partition(|(_, &k)| k == f);
            let train: Vec<_> = train.into_iter().map(|(r, _)| r.clone()).collect();
            let test: Vec<_> = test.into_iter().map(|(r, _)| r.clone()).collect();
            training_corpus(&train, &cmd.corpus_args, encode).map(|c| (c, test))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<Job> = (0..cmd.folds)
        .flat_map(|fold| {
            let models = &models;
            (0..cmd.seeds as u64).flat_map(move |i| {
                models.iter().map(move |&model| Job {
                    fold,
                    seed: cmd.training.seed + i,
                    model,
                })
            })
        })
        .collect();

    let run_job = |job: &Job| -> Result<()> {
        let (corpus, test) = &splits[job.fold];
        let config = train_config(&cmd.training, job.seed)?;
        let snapshot = crate::pipeline::train(corpus, job.model, &config)?;
        let model = EvalModel::from_snapshot(&snapshot)?;
        let held = held_out(&snapshot.vocabulary, &snapshot.features, test, &options);
        let report = model.evaluate(
            &held.documents,
            &EvalConfig {
                seed: job.seed,
                ..eval_cfg.clone()
            },
            wanted,
        )?;
        let mut table = Table::new(&POINT_HEADER);
        let mut point = |metric: &str, value: &dyn std::fmt::Display| {
            table.row(&[
                &digest,
                &job.fold,
                &job.seed,
                &job.model_name(),
                &metric,
                value,
            ]);
        };
        if let Some(p) = report.perplexity {
            point("perplexity", &p);
            point("excluded_docs", &report.excluded_docs);
        }
        if let (Some(total), Some(mean)) = (report.empirical_ll, report.mean_empirical_ll()) {
            point("empirical_ll", &total);
            point("mean_empirical_ll", &mean);
        }
        point("unseen_tokens", &held.unseen_tokens);
        if let Some(last) = snapshot.trace.last() {
            point("train_log_likelihood", &last.after);
        }
        table.write(&jobs_dir.join(job.file_name()))?;
        info!(
            "fold {} seed {} {} done",
            job.fold,
            job.seed,
            job.model_name()
        );
        Ok(())
    };
    pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<()>>>())?;

    // merge per-job files in job order
    let mut points = POINT_HEADER.join("\t");
    points.push('\n');
    let mut values: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
    for job in &jobs {
        let path = jobs_dir.join(job.file_name());
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines().skip(1) {
            points.push_str(line);
            points.push('\n');
            let cols: Vec<&str> = line.split('\t').collect();
            let value: f64 = cols[5]
                .parse()
                .with_context(|| format!("bad value in {}", path.display()))?;
            values
                .entry((cols[3].to_string(), cols[4].to_string()))
                .or_default()
                .push((job.fold, value));
        }
    }
    fs::write(cmd.out_dir.join("points.tsv"), points)?;

    let mut fold_means = Table::new(&["manifest_digest", "fold", "model", "metric", "mean"]);
    let mut summary = Table::new(&[
        "manifest_digest",
        "model",
        "metric",
        "mean",
        "min",
        "max",
        "runs",
    ]);
    for model in &models {
        let name = Job {
            fold: 0,
            seed: 0,
            model: *model,
        }
        .model_name();
        for ((m, metric), vals) in values.iter().filter(|((m, _), _)| m == name) {
            for f in 0..cmd.folds {
                let in_fold: Vec<f64> = vals.iter().filter(|v| v.0 == f).map(|v| v.1).collect();
                if !in_fold.is_empty() {
                    fold_means.row(&[&digest, &f, m, metric, &mean(&in_fold)]);
                }
            }
            let all: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            summary.row(&[&digest, m, metric, &mean(&all), &lo, &hi, &all.len()]);
        }
    }
    fold_means.write(&cmd.out_dir.join("fold_means.tsv"))?;
    summary.write(&cmd.out_dir.join("summary.tsv"))?;
    manifest.write(&cmd.out_dir.join("manifest.json"))?;
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn synth(cmd: &SynthCmd, args: Vec<String>, settings: serde_json::Value) -> Result<()> {
    let truth_path = cmd
        .truth
        .clone()
        .unwrap_or_else(|| suffixed(&cmd.out, ".truth.json"));
    let mut manifest = RunManifest::new("synth", args, settings, cmd.seed);
    manifest
        .outputs
        .extend([cmd.out.clone(), truth_path.clone()]);
    let digest = manifest.seal().to_string();

    let (records, truth) = generate(cmd).map_err(|e| UsageError::new(e.to_string()))?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(&cmd.out, text).with_context(|| format!("writing {}", cmd.out.display()))?;
    TruthFile {
        manifest_digest: digest,
        truth,
    }
    .save(&truth_path)?;
    manifest.write(&manifest_path_for(&cmd.out))?;
    info!("wrote {} documents to {}", records.len(), cmd.out.display());
    Ok(())
}

fn rerun(cmd: &RerunCmd) -> Result<()> {
    let manifest = RunManifest::read(&cmd.manifest)?;
    manifest.verify_inputs()?;
    let cli = <Cli as clap::Parser>::try_parse_from(&manifest.args)
        .map_err(|e| UsageError::new(format!("manifest arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        bail!("a manifest cannot record a rerun");
    }
    info!(
        "re-running `{}` from {}",
        manifest.command,
        cmd.manifest.display()
    );
    execute(cli.command, manifest.args.clone())
}
