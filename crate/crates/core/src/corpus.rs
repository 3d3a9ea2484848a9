//! Corpus ingestion, vocabulary and feature dictionaries, metadata encoders.
//!
//! The on-disk format is JSON Lines, one document per line:
//!
//! ```text
//! {"id": "doc-1", "text": "topic models", "authors": ["A"], "citations": ["p7"], "date": 1999}
//! ```
//!
//! `authors`, `citations` and `date` are optional; any other field is an
//! error. Every encoded feature vector carries the intercept at index 0.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";
pub const AUTHOR_PREFIX: &str = "author:";
pub const CITATION_PREFIX: &str = "cite:";
pub const DATE_LOG_P: &str = "date:log_p";
pub const DATE_LOG_1MP: &str = "date:log_1mp";

pub const DEFAULT_INTERCEPT_VARIANCE: f64 = 10.0;
pub const DEFAULT_FEATURE_VARIANCE: f64 = 0.5;
pub const DEFAULT_DATE_EPSILON: f64 = 1e-3;

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
}

impl IngestOptions {
    pub fn new() -> Self {
        Self {
            lowercase: true,
            stopwords: BTreeSet::new(),
        }
    }

    pub fn tokenize<'a>(&'a self, text: &'a str) -> impl Iterator<Item = String> + 'a {
        text.split_whitespace()
            .map(move |t| {
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                }
            })
            .filter(move |t| !self.stopwords.contains(t))
    }
}

/// Dense string <-> index map for word types.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self { words, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn insert(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len();
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), i);
        i
    }
}

/// Sparse feature vector with the intercept at index 0.
///
/// Entries are kept sorted by index with no duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl Default for FeatureVector {
    fn default() -> Self {
        Self::intercept()
    }
}

impl FeatureVector {
    pub fn intercept() -> Self {
        Self {
            entries: vec![(0, 1.0)],
        }
    }

    /// Builds a vector from arbitrary `(index, value)` pairs. The intercept
    /// is added; later duplicates overwrite earlier ones.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut v = Self::intercept();
        for (k, x) in pairs {
            if k == 0 {
                continue;
            }
            v.set(k, x)?;
        }
        Ok(v)
    }

    pub fn set(&mut self, index: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "feature {index} has non-finite value {value}"
            )));
        }
        if index == 0 {
            return Err(Error::InvalidConfig(
                "the intercept value is fixed at 1".into(),
            ));
        }
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1 = value,
            Err(pos) => self.entries.insert(pos, (index, value)),
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .ok()
            .map(|p| self.entries[p].1)
    }

    pub fn max_index(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0)
    }

    /// `Σ_k x_k w[k]`; entries at or beyond `w.len()` are ignored.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries
            .iter()
            .filter(|(k, _)| *k < w.len())
            .map(|(k, x)| x * w[*k])
            .sum()
    }

    /// Checks intercept-first, strictly increasing indices and finiteness.
    pub fn is_well_formed(&self) -> bool {
        self.entries.first() == Some(&(0, 1.0))
            && self.entries.windows(2).all(|w| w[0].0 < w[1].0)
            && self.entries.iter().all(|e| e.1.is_finite())
    }
}

/// Min/max dates and clamp used to turn a year into `(ln p, ln(1 - p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DateScale {
    pub min: i64,
    pub max: i64,
    pub epsilon: f64,
}

impl DateScale {
    pub fn proportion(&self, date: i64) -> f64 {
        let p = (date - self.min) as f64 / (self.max - self.min) as f64;
        p.clamp(self.epsilon, 1.0 - self.epsilon)
    }

    pub fn features(&self, date: i64) -> (f64, f64) {
        let p = self.proportion(date);
        (p.ln(), (1.0 - p).ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "DictionaryRepr", into = "DictionaryRepr")]
pub struct FeatureDictionary {
    names: Vec<String>,
    variances: Vec<f64>,
    date_scale: Option<DateScale>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryRepr {
    names: Vec<String>,
    variances: Vec<f64>,
    date_scale: Option<DateScale>,
}

impl From<DictionaryRepr> for FeatureDictionary {
    fn from(r: DictionaryRepr) -> Self {
        let index = r
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self {
            names: r.names,
            variances: r.variances,
            date_scale: r.date_scale,
            index,
        }
    }
}

impl From<FeatureDictionary> for DictionaryRepr {
    fn from(d: FeatureDictionary) -> Self {
        Self {
            names: d.names,
            variances: d.variances,
            date_scale: d.date_scale,
        }
    }
}

impl Default for FeatureDictionary {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureDictionary {
    /// Intercept-only dictionary.
    pub fn new() -> Self {
        let mut d = Self {
            names: Vec::new(),
            variances: Vec::new(),
            date_scale: None,
            index: HashMap::new(),
        };
        d.insert(INTERCEPT);
        d.variances[0] = DEFAULT_INTERCEPT_VARIANCE;
        d
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn date_scale(&self) -> Option<DateScale> {
        self.date_scale
    }

    /// Sets the intercept variance and a shared variance for all other features.
    pub fn set_prior_variances(&mut self, intercept: f64, other: f64) -> Result<()> {
        if !(intercept > 0.0 && other > 0.0) {
            return Err(Error::InvalidConfig("prior variances must be > 0".into()));
        }
        for (k, v) in self.variances.iter_mut().enumerate() {
            *v = if k == 0 { intercept } else { other };
        }
        Ok(())
    }

    pub fn insert(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.variances.push(DEFAULT_FEATURE_VARIANCE);
        self.index.insert(name.to_string(), i);
        i
    }

    /// Registers the two date features and the scale used to compute them;
    /// returns their indices.
    pub fn add_date_features(&mut self, scale: DateScale) -> (usize, usize) {
        self.date_scale = Some(scale);
        (self.insert(DATE_LOG_P), self.insert(DATE_LOG_1MP))
    }

    /// Indices of features whose name starts with `prefix`, in index order.
    pub fn family(&self, prefix: &str) -> Vec<usize> {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.starts_with(prefix))
            .map(|(i, _)| i)
            .collect()
    }

    /// Encodes a document's metadata with the features this dictionary
    /// knows; unknown authors and citations are dropped.
    pub fn encode(
        &self,
        authors: &[String],
        citations: &[String],
        date: Option<i64>,
    ) -> FeatureVector {
        let mut v = FeatureVector::intercept();
        for a in authors {
            if let Some(k) = self.id(&format!("{AUTHOR_PREFIX}{a}")) {
                v.set(k, 1.0).expect("finite indicator");
            }
        }
        for c in citations {
            if let Some(k) = self.id(&format!("{CITATION_PREFIX}{c}")) {
                v.set(k, 1.0).expect("finite indicator");
            }
        }
        if let (Some(scale), Some(date)) = (self.date_scale, date) {
            let (lp, lq) = scale.features(date);
            if let (Some(kp), Some(kq)) = (self.id(DATE_LOG_P), self.id(DATE_LOG_1MP)) {
                v.set(kp, lp).expect("finite date feature");
                v.set(kq, lq).expect("finite date feature");
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<usize>,
    pub features: FeatureVector,
    pub authors: Vec<String>,
    pub citations: Vec<String>,
    pub date: Option<i64>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Metadata modality used by the document filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Authors,
    Citations,
    Dates,
}

impl Modality {
    pub fn present(self, doc: &Document) -> bool {
        match self {
            Modality::Authors => !doc.authors.is_empty(),
            Modality::Citations => !doc.citations.is_empty(),
            Modality::Dates => doc.date.is_some(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub features: FeatureDictionary,
}

/// Held-out documents mapped onto an existing vocabulary and dictionary.
#[derive(Debug, Clone)]
pub struct HeldOut {
    pub documents: Vec<Document>,
    /// Tokens dropped because the vocabulary does not contain them.
    pub unseen_tokens: usize,
}

/// Reads a corpus file and builds vocabulary and an intercept-only
/// feature dictionary. Documents keep file order.
pub fn ingest(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Corpus> {
    let records = read_records(File::open(path)?)?;
    Ok(Corpus::from_records(&records, options))
}

pub fn read_records(reader: impl Read) -> Result<Vec<DocumentRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

impl Corpus {
    pub fn from_records(records: &[DocumentRecord], options: &IngestOptions) -> Self {
        let mut vocabulary = Vocabulary::default();
        let documents = records
            .iter()
            .map(|r| Document {
                id: r.id.clone(),
                tokens: options
                    .tokenize(&r.text)
                    .map(|t| vocabulary.insert(&t))
                    .collect(),
                features: FeatureVector::intercept(),
                authors: r.authors.clone(),
                citations: r.citations.clone(),
                date: r.date,
            })
            .collect();
        Self {
            documents,
            vocabulary,
            features: FeatureDictionary::new(),
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    /// Tokenizes records against this corpus's vocabulary and encodes their
    /// metadata with its feature dictionary.
    pub fn held_out(&self, records: &[DocumentRecord], options: &IngestOptions) -> HeldOut {
        held_out(&self.vocabulary, &self.features, records, options)
    }

    /// Re-encodes every document from its metadata with the current dictionary.
    fn reencode(&mut self) {
        for doc in &mut self.documents {
            doc.features = self.features.encode(&doc.authors, &doc.citations, doc.date);
        }
    }

    pub fn retain_with(mut self, modality: Modality) -> Self {
        self.documents.retain(|d| modality.present(d));
        self
    }
}

pub fn held_out(
    vocabulary: &Vocabulary,
    features: &FeatureDictionary,
    records: &[DocumentRecord],
    options: &IngestOptions,
) -> HeldOut {
    let mut unseen_tokens = 0;
    let documents = records
        .iter()
        .map(|r| {
            let tokens = options
                .tokenize(&r.text)
                .filter_map(|t| {
                    let id = vocabulary.id(&t);
                    if id.is_none() {
                        unseen_tokens += 1;
                    }
                    id
                })
                .collect();
            Document {
                id: r.id.clone(),
                tokens,
                features: features.encode(&r.authors, &r.citations, r.date),
                authors: r.authors.clone(),
                citations: r.citations.clone(),
                date: r.date,
            }
        })
        .collect();
    HeldOut {
        documents,
        unseen_tokens,
    }
}

/// Labels appearing on at least `min_docs` documents, in first-seen order.
fn frequent_labels<'a>(labels: impl Iterator<Item = &'a [String]>, min_docs: usize) -> Vec<String> {
    let mut order = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc_labels in labels {
        let mut seen = BTreeSet::new();
        for l in doc_labels {
            if !seen.insert(l.as_str()) {
                continue;
            }
            let c = counts.entry(l.as_str()).or_insert(0);
            if *c == 0 {
                order.push(l.as_str());
            }
            *c += 1;
        }
    }
    order
        .into_iter()
        .filter(|l| counts[l] >= min_docs)
        .map(str::to_string)
        .collect()
}

/// Adds one indicator feature per author listed on at least `min_documents`
/// documents.
pub fn encode_author_features(mut corpus: Corpus, min_documents: usize) -> Corpus {
    let retained = frequent_labels(
        corpus.documents.iter().map(|d| d.authors.as_slice()),
        min_documents,
    );
    for a in &retained {
        corpus.features.insert(&format!("{AUTHOR_PREFIX}{a}"));
    }
    corpus.reencode();
    corpus
}

/// Adds one indicator feature per cited work referenced by at least `min_citations`
/// documents.
pub fn encode_citation_features(mut corpus: Corpus, min_citations: usize) -> Corpus {
    let retained = frequent_labels(
        corpus.documents.iter().map(|d| d.citations.as_slice()),
        min_citations,
    );
    for c in &retained {
        corpus.features.insert(&format!("{CITATION_PREFIX}{c}"));
    }
    corpus.reencode();
    corpus
}

/// Adds the two date features `ln p_d` and `ln(1 - p_d)`, where `p_d` is the
/// document's position within the corpus date range clamped to
/// `[epsilon, 1 - epsilon]`. Undated documents keep their other features.
pub fn encode_date_features(mut corpus: Corpus, epsilon: f64) -> Result<Corpus> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "date epsilon must lie in (0, 0.5), got {epsilon}"
        )));
    }
    let dates = corpus.documents.iter().filter_map(|d| d.date);
    let (min, max) = dates.fold((i64::MAX, i64::MIN), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if min > max {
        return Err(Error::InvalidConfig(
            "date features requested but no document has a date".into(),
        ));
    }
    if min == max {
        return Err(Error::DegenerateDates(min));
    }
    corpus
        .features
        .add_date_features(DateScale { min, max, epsilon });
    corpus.reencode();
    Ok(corpus)
}

/// Drops documents dated before `min_date`; undated documents are kept.
pub fn filter_by_date(mut corpus: Corpus, min_date: i64) -> Corpus {
    corpus
        .documents
        .retain(|d| d.date.is_none_or(|y| y >= min_date));
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, text: &str) -> DocumentRecord {
        DocumentRecord {
            id: id.into(),
            text: text.into(),
            authors: vec![],
            citations: vec![],
            date: None,
        }
    }

    fn with_authors(id: &str, authors: &[&str]) -> DocumentRecord {
        DocumentRecord {
            authors: authors.iter().map(|s| s.to_string()).collect(),
            ..rec(id, "w")
        }
    }

    fn dated(id: &str, date: i64) -> DocumentRecord {
        DocumentRecord {
            date: Some(date),
            ..rec(id, "w")
        }
    }

    fn build(records: &[DocumentRecord]) -> Corpus {
        Corpus::from_records(records, &IngestOptions::new())
    }

    #[test]
    fn ingest_two_lines() {
        let input = "{\"id\":\"1\",\"text\":\"a b\"}\n{\"id\":\"2\",\"text\":\"b c\"}\n";
        let records = read_records(input.as_bytes()).unwrap();
        let c = build(&records);
        assert_eq!(c.vocabulary.len(), 3);
        assert_eq!(c.documents.len(), 2);
        assert!(c.documents.iter().all(|d| d.len() == 2));
        assert_eq!(c.documents[0].id, "1");
    }

    #[test]
    fn ingest_empty() {
        let c = build(&read_records("".as_bytes()).unwrap());
        assert!(c.documents.is_empty());
        assert_eq!(c.vocabulary.len(), 0);
    }

    #[test]
    fn no_metadata_means_intercept_only() {
        let c = build(&read_records("{\"id\":\"x\",\"text\":\"a\"}".as_bytes()).unwrap());
        assert_eq!(c.documents[0].features.entries(), &[(0, 1.0)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"id\":\"1\",\"text\":\"a\"}\n{not json}\n";
        match read_records(input.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let input = "{\"id\":\"1\",\"text\":\"a\",\"venue\":\"X\"}\n";
        match read_records(input.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("venue"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tokenizer_lowercases_and_drops_stopwords() {
        let mut opts = IngestOptions::new();
        opts.stopwords.insert("the".into());
        let toks: Vec<_> = opts.tokenize("The  Topic\tmodel the").collect();
        assert_eq!(toks, vec!["topic", "model"]);
    }

    #[test]
    fn author_threshold_boundary() {
        let docs: Vec<_> = (0..5)
            .map(|i| with_authors(&i.to_string(), &["A"]))
            .collect();
        let c = encode_author_features(build(&docs), 5);
        let k = c.features.id("author:A").expect("retained");
        assert!(c.documents.iter().all(|d| d.features.get(k) == Some(1.0)));

        let c = encode_author_features(build(&docs[..4]), 5);
        assert_eq!(c.features.id("author:A"), None);
        assert!(c
            .documents
            .iter()
            .all(|d| d.features.entries() == [(0, 1.0)]));
    }

    #[test]
    fn two_authors_two_indicators() {
        let docs = vec![with_authors("0", &["A", "B"]), with_authors("1", &["B"])];
        let c = encode_author_features(build(&docs), 1);
        assert_eq!(c.documents[0].features.entries().len(), 3);
        assert_eq!(c.features.names()[1..], ["author:A", "author:B"]);
    }

    #[test]
    fn author_encoding_is_idempotent() {
        let docs = vec![
            with_authors("0", &["A", "B"]),
            with_authors("1", &["B", "A"]),
        ];
        let once = encode_author_features(build(&docs), 1);
        let twice = encode_author_features(once.clone(), 1);
        assert_eq!(once.features, twice.features);
        assert_eq!(once.documents, twice.documents);
    }

    #[test]
    fn repeated_label_counts_once_per_document() {
        let docs = vec![with_authors("0", &["A", "A"])];
        let c = encode_author_features(build(&docs), 2);
        assert_eq!(c.features.len(), 1);
    }

    #[test]
    fn citation_threshold() {
        let mk = |n: usize| -> Vec<DocumentRecord> {
            (0..n)
                .map(|i| DocumentRecord {
                    citations: vec!["P".into()],
                    ..rec(&i.to_string(), "w")
                })
                .chain(std::iter::once(rec("none", "w")))
                .collect()
        };
        let c = encode_citation_features(build(&mk(10)), 10);
        assert!(c.features.id("cite:P").is_some());
        assert_eq!(c.documents.last().unwrap().features.entries(), &[(0, 1.0)]);
        let c = encode_citation_features(build(&mk(9)), 10);
        assert!(c.features.id("cite:P").is_none());
    }

    #[test]
    fn date_features() {
        let docs = vec![
            dated("a", 1987),
            dated("b", 1997),
            dated("c", 1992),
            dated("d", 2007),
        ];
        let c = encode_date_features(build(&docs), 1e-3).unwrap();
        let kp = c.features.id(DATE_LOG_P).unwrap();
        let kq = c.features.id(DATE_LOG_1MP).unwrap();
        let pair = |i: usize| {
            let f = &c.documents[i].features;
            (f.get(kp).unwrap(), f.get(kq).unwrap())
        };
        assert_eq!(pair(1), (0.5f64.ln(), 0.5f64.ln()));
        assert_eq!(pair(0), (1e-3f64.ln(), 0.999f64.ln()));
        let (p, q) = pair(2);
        assert!((p - 0.25f64.ln()).abs() < 1e-15 && (q - 0.75f64.ln()).abs() < 1e-15);
        assert!(c.documents.iter().all(|d| d.features.is_well_formed()));
    }

    #[test]
    fn equal_dates_are_an_error() {
        let docs = vec![dated("a", 2000), dated("b", 2000)];
        assert!(matches!(
            encode_date_features(build(&docs), 1e-3),
            Err(Error::DegenerateDates(2000))
        ));
    }

    #[test]
    fn date_filter() {
        let docs = vec![dated("a", 1985), dated("b", 1987), dated("c", 1990)];
        assert_eq!(filter_by_date(build(&docs), 1987).documents.len(), 2);
        assert_eq!(filter_by_date(build(&docs), 1900).documents.len(), 3);
        assert!(filter_by_date(build(&docs), 2000).documents.is_empty());
    }

    #[test]
    fn held_out_uses_training_dictionaries() {
        let train = encode_author_features(build(&[with_authors("0", &["A"])]), 1);
        let test = vec![DocumentRecord {
            authors: vec!["A".into(), "Z".into()],
            ..rec("t", "w unseen W")
        }];
        let h = train.held_out(&test, &IngestOptions::new());
        assert_eq!(h.unseen_tokens, 1);
        assert_eq!(h.documents[0].tokens, vec![0, 0]);
        assert_eq!(h.documents[0].features.entries(), &[(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn require_modality_filter() {
        let docs = vec![with_authors("0", &["A"]), rec("1", "w")];
        assert_eq!(
            build(&docs).retain_with(Modality::Authors).documents.len(),
            1
        );
    }

    #[test]
    fn dictionary_serde_round_trip_restores_lookup() {
        let c = encode_author_features(build(&[with_authors("0", &["A"])]), 1);
        let json = serde_json::to_string(&c.features).unwrap();
        let back: FeatureDictionary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c.features);
        assert_eq!(back.id("author:A"), Some(1));
    }
}
