mod common;

use common::{all_assignments, dm_log_prob, total_variation};
use dmr::numeric::log_sum_exp;
use dmr::sampler::{conditional_distribution, gibbs_sweep, DirichletPrior, TopicState};
use proptest::prelude::*;

/// Collapsed joint `ln p(z, w)` up to a constant independent of `z`.
fn collapsed_log_joint(
    tokens: &[Vec<usize>],
    z: &[usize],
    priors: &[DirichletPrior],
    vocab: usize,
    topics: usize,
    beta: f64,
) -> f64 {
    let mut lp = 0.0;
    let mut topic_word = vec![vec![0usize; vocab]; topics];
    let mut pos = 0;
    for (d, doc) in tokens.iter().enumerate() {
        let mut counts = vec![0usize; topics];
        for &w in doc {
            counts[z[pos]] += 1;
            topic_word[z[pos]][w] += 1;
            pos += 1;
        }
        lp += dm_log_prob(priors[d].alpha(), &counts);
    }
    let symmetric = vec![beta; vocab];
    for row in &topic_word {
        lp += dm_log_prob(&symmetric, row);
    }
    lp
}

fn flatten(state: &TopicState) -> Vec<usize> {
    (0..state.num_docs())
        .flat_map(|d| state.assignments(d).to_vec())
        .collect()
}

fn index_of(z: &[usize], topics: usize) -> usize {
    z.iter().fold(0, |acc, &t| acc * topics + t)
}

fn empirical(
    tokens: &[Vec<usize>],
    priors: &[DirichletPrior],
    vocab: usize,
    topics: usize,
    beta: f64,
    seed: u64,
    sweeps: usize,
    relabel: &dyn Fn(usize) -> usize,
) -> Vec<f64> {
    let n: usize = tokens.iter().map(Vec::len).sum();
    let mut state = TopicState::new(tokens.to_vec(), vocab, topics, seed).unwrap();
    for _ in 0..1000 {
        gibbs_sweep(&mut state, priors, beta);
    }
    let mut hist = vec![0.0; topics.pow(n as u32)];
    for _ in 0..sweeps {
        gibbs_sweep(&mut state, priors, beta);
        let z: Vec<usize> = flatten(&state).into_iter().map(relabel).collect();
        hist[index_of(&z, topics)] += 1.0;
    }
    hist.iter().map(|c| c / sweeps as f64).collect()
}

#[test]
fn sweeps_match_enumerated_posterior() {
    let tokens = vec![vec![0, 1], vec![0]];
    let (vocab, topics, beta) = (2, 2, 0.5);
    let priors = vec![
        DirichletPrior::new(vec![0.5, 1.5]).unwrap(),
        DirichletPrior::new(vec![2.0, 0.7]).unwrap(),
    ];
    let logs: Vec<f64> = all_assignments(3, topics)
        .iter()
        .map(|z| collapsed_log_joint(&tokens, z, &priors, vocab, topics, beta))
        .collect();
    let norm = log_sum_exp(&logs).unwrap();
    let exact: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();

    let got = empirical(&tokens, &priors, vocab, topics, beta, 17, 50_000, &|t| t);
    let tv = total_variation(&exact, &got);
    assert!(tv < 0.02, "TV {tv}: exact {exact:?}, empirical {got:?}");
}

#[test]
fn larger_enumeration_with_small_beta() {
    // 3 topics, 6 tokens: 729 states
    let tokens = vec![vec![0, 1, 2], vec![2, 2], vec![1]];
    let (vocab, topics, beta) = (3, 3, 0.1);
    let priors = vec![
        DirichletPrior::new(vec![0.3, 0.3, 0.3]).unwrap(),
        DirichletPrior::new(vec![1.0, 0.2, 2.0]).unwrap(),
        DirichletPrior::new(vec![0.5, 0.5, 0.5]).unwrap(),
    ];
    let logs: Vec<f64> = all_assignments(6, topics)
        .iter()
        .map(|z| collapsed_log_joint(&tokens, z, &priors, vocab, topics, beta))
        .collect();
    let norm = log_sum_exp(&logs).unwrap();
    let exact: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
    let got = empirical(&tokens, &priors, vocab, topics, beta, 5, 200_000, &|t| t);
    let tv = total_variation(&exact, &got);
    assert!(tv < 0.03, "TV {tv}");
}

#[test]
fn topic_labels_are_exchangeable_under_symmetric_priors() {
    let tokens = vec![vec![0, 1], vec![1]];
    let (vocab, topics, beta) = (2, 2, 0.3);
    let priors = vec![DirichletPrior::symmetric(2, 0.8).unwrap(); 2];
    let swap = |t: usize| 1 - t;
    for seed in 0..3 {
        let plain = empirical(&tokens, &priors, vocab, topics, beta, seed, 30_000, &|t| t);
        let swapped = empirical(&tokens, &priors, vocab, topics, beta, seed, 30_000, &swap);
        let tv = total_variation(&plain, &swapped);
        assert!(tv < 0.03, "seed {seed}: TV {tv}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_stay_consistent(
        docs in prop::collection::vec(prop::collection::vec(0usize..6, 0..12), 1..6),
        topics in 1usize..5,
        seed in any::<u64>(),
        alpha in 0.01f64..5.0,
        beta in 0.001f64..2.0,
    ) {
        let total: usize = docs.iter().map(Vec::len).sum();
        let mut state = TopicState::new(docs.clone(), 6, topics, seed).unwrap();
        prop_assert_eq!(state.check_consistency(), Ok(()));
        let priors = vec![DirichletPrior::symmetric(topics, alpha).unwrap(); docs.len()];
        for _ in 0..5 {
            gibbs_sweep(&mut state, &priors, beta);
            prop_assert_eq!(state.check_consistency(), Ok(()));
            prop_assert_eq!(state.total_tokens(), total);
            for d in 0..docs.len() {
                prop_assert_eq!(state.tokens(d), docs[d].as_slice());
            }
        }
    }

    #[test]
    fn conditionals_are_distributions(
        docs in prop::collection::vec(prop::collection::vec(0usize..4, 1..8), 1..4),
        topics in 1usize..6,
        seed in any::<u64>(),
        alpha in prop::collection::vec(0.01f64..10.0, 6),
        beta in 0.001f64..1.0,
    ) {
        let state = TopicState::new(docs.clone(), 4, topics, seed).unwrap();
        let prior = DirichletPrior::new(alpha[..topics].to_vec()).unwrap();
        for (d, doc) in docs.iter().enumerate() {
            for i in 0..doc.len() {
                let p = conditional_distribution(&state, d, i, &prior, beta);
                prop_assert!(p.iter().all(|v| *v >= 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
