#![allow(dead_code)]

use dmr::corpus::{Corpus, Document, FeatureDictionary, FeatureVector, Vocabulary};
use dmr::numeric::log_gamma;

/// Corpus over words `0..vocab_size` with `num_features` features
/// (index 0 is the intercept) from `(tokens, non-intercept features)` pairs.
pub fn corpus(
    docs: Vec<(Vec<usize>, Vec<(usize, f64)>)>,
    vocab_size: usize,
    num_features: usize,
) -> Corpus {
    let mut features = FeatureDictionary::new();
    for k in 1..num_features {
        features.insert(&format!("f{k}"));
    }
    let vocabulary: Vocabulary = (0..vocab_size)
        .map(|w| format!("w{w}"))
        .collect::<Vec<_>>()
        .into();
    let documents = docs
        .into_iter()
        .enumerate()
        .map(|(d, (tokens, x))| Document {
            id: format!("d{d}"),
            tokens,
            features: FeatureVector::from_pairs(x).unwrap(),
            authors: vec![],
            citations: vec![],
            date: None,
        })
        .collect();
    Corpus {
        documents,
        vocabulary,
        features,
    }
}

/// Every assignment vector over `n` tokens with `t` topics, in lexicographic order.
pub fn all_assignments(n: usize, t: usize) -> Vec<Vec<usize>> {
    let total = t.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut z = vec![0; n];
            for zi in z.iter_mut().rev() {
                *zi = code % t;
                code /= t;
            }
            z
        })
        .collect()
}

/// Dirichlet-multinomial log probability of one sequence with the given counts.
pub fn dm_log_prob(alpha: &[f64], counts: &[usize]) -> f64 {
    let a: f64 = alpha.iter().sum();
    let n: usize = counts.iter().sum();
    let mut lp = log_gamma(a).unwrap() - log_gamma(a + n as f64).unwrap();
    for (&al, &c) in alpha.iter().zip(counts) {
        lp += log_gamma(al + c as f64).unwrap() - log_gamma(al).unwrap();
    }
    lp
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Composite Simpson's rule on `[a, b]` with `intervals` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
