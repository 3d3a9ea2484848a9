mod common;

use common::{corpus, dm_log_prob};
use dmr::corpus::Corpus;
use dmr::sampler::{compute_alpha, TopicState};
use dmr::trainer::{
    compute_priors, dmr_gradient, dmr_log_likelihood, lda_log_likelihood, optimize_lambda,
    optimize_lda_alpha, train_dmr, train_lda, LambdaMatrix, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    corpus: Corpus,
    state: TopicState,
    lambda: LambdaMatrix,
    variances: Vec<f64>,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let docs = rng.random_range(1..=5);
    let topics = rng.random_range(1..=4);
    let features = rng.random_range(1..=3);
    let vocab = 4;
    let mut tokens = Vec::new();
    let mut z = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..docs {
        let n = rng.random_range(0..=8);
        let doc: Vec<usize> = (0..n).map(|_| rng.random_range(0..vocab)).collect();
        z.push(
            (0..n)
                .map(|_| rng.random_range(0..topics))
                .collect::<Vec<_>>(),
        );
        let mut x = Vec::new();
        for k in 1..features {
            if rng.random_bool(0.7) {
                x.push((k, rng.random_range(-1.5..1.5)));
            }
        }
        rows.push((doc.clone(), x));
        tokens.push(doc);
    }
    let corpus = corpus(rows, vocab, features);
    let state = TopicState::from_assignments(tokens, z, vocab, topics, 0).unwrap();
    let values = (0..topics * features)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let lambda = LambdaMatrix::from_values(topics, features, values).unwrap();
    let variances = (0..features)
        .map(|k| {
            if k == 0 {
                10.0
            } else {
                rng.random_range(0.2..2.0)
            }
        })
        .collect();
    Instance {
        corpus,
        state,
        lambda,
        variances,
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    for case in 0..50 {
        let inst = random_instance(&mut rng);
        let grad = dmr_gradient(&inst.state, &inst.lambda, &inst.corpus, &inst.variances).unwrap();
        for t in 0..inst.lambda.num_topics() {
            for k in 0..inst.lambda.num_features() {
                let mut plus = inst.lambda.clone();
                plus.set(t, k, inst.lambda.get(t, k) + h);
                let mut minus = inst.lambda.clone();
                minus.set(t, k, inst.lambda.get(t, k) - h);
                let fd = (dmr_log_likelihood(&inst.state, &plus, &inst.corpus, &inst.variances)
                    .unwrap()
                    - dmr_log_likelihood(&inst.state, &minus, &inst.corpus, &inst.variances)
                        .unwrap())
                    / (2.0 * h);
                let g = grad.get(t, k);
                let tol = (1e-5 * g.abs().max(fd.abs())).max(1e-8);
                assert!(
                    (g - fd).abs() <= tol,
                    "case {case} ({t},{k}): analytic {g}, numeric {fd}"
                );
            }
        }
    }
}

#[test]
fn objective_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let mut expected = 0.0;
        for (d, doc) in inst.corpus.documents.iter().enumerate() {
            let alpha = compute_alpha(&doc.features, &inst.lambda).unwrap();
            let counts: Vec<usize> = inst
                .state
                .doc_topic_counts(d)
                .iter()
                .map(|&c| c as usize)
                .collect();
            expected += dm_log_prob(alpha.alpha(), &counts);
        }
        for t in 0..inst.lambda.num_topics() {
            for k in 0..inst.lambda.num_features() {
                expected -= inst.lambda.get(t, k).powi(2) / (2.0 * inst.variances[k]);
            }
        }
        let got =
            dmr_log_likelihood(&inst.state, &inst.lambda, &inst.corpus, &inst.variances).unwrap();
        assert!((got - expected).abs() < 1e-9 * (1.0 + expected.abs()));
    }
}

#[test]
fn optimize_lambda_never_decreases_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let config = TrainConfig::default();
    for _ in 0..30 {
        let inst = random_instance(&mut rng);
        let variances = config.feature_variances(inst.lambda.num_features());
        let before =
            dmr_log_likelihood(&inst.state, &inst.lambda, &inst.corpus, &variances).unwrap();
        let (lambda, record) =
            optimize_lambda(&inst.state, &inst.lambda, &inst.corpus, &config).unwrap();
        let after = dmr_log_likelihood(&inst.state, &lambda, &inst.corpus, &variances).unwrap();
        assert!(after >= before);
        assert_eq!(record.after, after);
    }
}

/// Two of four documents carry feature 1, and all their tokens sit on topic 0.
fn shrinkage_instance() -> (Corpus, TopicState) {
    let docs: Vec<(Vec<usize>, Vec<(usize, f64)>)> = vec![
        (vec![0, 1, 0, 1, 0], vec![(1, 1.0)]),
        (vec![1, 1, 0], vec![(1, 1.0)]),
        (vec![0, 0, 1, 1], vec![]),
        (vec![2, 2, 3], vec![]),
    ];
    let tokens: Vec<Vec<usize>> = docs.iter().map(|d| d.0.clone()).collect();
    let z = vec![vec![0; 5], vec![0; 3], vec![1, 1, 0, 1], vec![1, 1, 1]];
    let c = corpus(docs, 4, 2);
    (c, TopicState::from_assignments(tokens, z, 4, 2, 0).unwrap())
}

#[test]
fn smaller_variance_shrinks_feature_weights() {
    let (corpus, state) = shrinkage_instance();
    let mut norms = Vec::new();
    for sigma2 in [0.1, 0.5, 10.0] {
        let mut config = TrainConfig {
            sigma2_other: sigma2,
            ..TrainConfig::default()
        };
        config.optimizer.tolerance = 1e-9;
        config.optimizer.max_iterations = 1000;
        let (lambda, _) =
            optimize_lambda(&state, &LambdaMatrix::zeros(2, 2), &corpus, &config).unwrap();
        norms.push(lambda.column(1).iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    assert!(norms[0] < norms[1] && norms[1] < norms[2], "{norms:?}");
}

#[test]
fn optimum_is_stationary() {
    let (corpus, state) = shrinkage_instance();
    let config = TrainConfig::default();
    let (lambda, _) =
        optimize_lambda(&state, &LambdaMatrix::zeros(2, 2), &corpus, &config).unwrap();
    let g = dmr_gradient(&state, &lambda, &corpus, &config.feature_variances(2)).unwrap();
    assert!(
        g.values().iter().all(|v| v.abs() <= 1e-5),
        "{:?}",
        g.values()
    );
}

/// Documents generated with one strong feature per topic; the true
/// assignments are kept fixed and λ is re-estimated.
#[test]
fn recovers_feature_orderings_from_true_assignments() {
    let topics = 3;
    let features = 4; // intercept + 3 indicator features
    let mut truth = LambdaMatrix::zeros(topics, features);
    for t in 0..topics {
        for k in 1..features {
            truth.set(
                t,
                k,
                if k - 1 == t {
                    2.5
                } else {
                    -1.0 - 0.5 * k as f64
                },
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rows = Vec::new();
    let mut tokens = Vec::new();
    let mut z = Vec::new();
    for d in 0..300 {
        let k = 1 + d % 3;
        let x = vec![(k, 1.0)];
        let alpha = compute_alpha(
            &dmr::corpus::FeatureVector::from_pairs(x.clone()).unwrap(),
            &truth,
        )
        .unwrap();
        let theta = dmr::sampler::sample_dirichlet(alpha.alpha(), &mut rng);
        let mut doc_z = Vec::new();
        for _ in 0..40 {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let t = theta.iter().position(|p| {
                acc += p;
                u < acc
            });
            doc_z.push(t.unwrap_or(topics - 1));
        }
        let doc: Vec<usize> = doc_z.clone();
        rows.push((doc.clone(), x));
        tokens.push(doc);
        z.push(doc_z);
    }
    let corpus = corpus(rows, topics, features);
    let state = TopicState::from_assignments(tokens, z, topics, topics, 0).unwrap();
    let (lambda, _) = optimize_lambda(
        &state,
        &LambdaMatrix::zeros(topics, features),
        &corpus,
        &TrainConfig::default(),
    )
    .unwrap();
    for t in 0..topics {
        let order = |m: &LambdaMatrix| {
            let mut ks: Vec<usize> = (1..features).collect();
            ks.sort_by(|&a, &b| m.get(t, b).total_cmp(&m.get(t, a)));
            ks
        };
        assert_eq!(
            order(&lambda),
            order(&truth),
            "topic {t}: {:?}",
            lambda.row(t)
        );
    }
}

#[test]
fn lda_alpha_matches_grid_search() {
    // two topics, document-topic counts fixed through assignments
    let counts = [(5, 1), (0, 4), (3, 3), (6, 0), (2, 1), (1, 7)];
    let mut tokens = Vec::new();
    let mut z = Vec::new();
    for &(a, b) in &counts {
        tokens.push(vec![0; a + b]);
        let mut doc = vec![0; a];
        doc.extend(vec![1; b]);
        z.push(doc);
    }
    let state = TopicState::from_assignments(tokens, z, 1, 2, 0).unwrap();
    let mut alpha = vec![1.0, 1.0];
    for _ in 0..50 {
        alpha = optimize_lda_alpha(&state, &alpha);
    }

    // coarse-to-fine grid over (ln α0, ln α1)
    let ll = |a: f64, b: f64| lda_log_likelihood(&state, &[a.exp(), b.exp()]).unwrap();
    let (mut ca, mut cb, mut width) = (0.0f64, 0.0f64, 4.0f64);
    for _ in 0..40 {
        let mut best = (f64::NEG_INFINITY, ca, cb);
        for i in -10..=10 {
            for j in -10..=10 {
                let (a, b) = (ca + width * i as f64 / 10.0, cb + width * j as f64 / 10.0);
                let v = ll(a, b);
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        ca = best.1;
        cb = best.2;
        width /= 3.0;
    }
    assert!(
        (alpha[0].ln() - ca).abs() < 1e-4,
        "{alpha:?} vs {}",
        ca.exp()
    );
    assert!(
        (alpha[1].ln() - cb).abs() < 1e-4,
        "{alpha:?} vs {}",
        cb.exp()
    );
}

#[test]
fn lda_alpha_update_never_decreases_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let t = inst.state.num_topics();
        let alpha: Vec<f64> = (0..t).map(|_| rng.random_range(0.05..5.0)).collect();
        let updated = optimize_lda_alpha(&inst.state, &alpha);
        assert!(
            lda_log_likelihood(&inst.state, &updated).unwrap()
                >= lda_log_likelihood(&inst.state, &alpha).unwrap() - 1e-9
        );
    }
}

fn small_training_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = (0..30)
        .map(|d| {
            let tokens = (0..20).map(|_| rng.random_range(0..12)).collect();
            (tokens, if d % 2 == 0 { vec![(1, 1.0)] } else { vec![] })
        })
        .collect();
    corpus(rows, 12, 2)
}

fn short_config(topics: usize) -> TrainConfig {
    TrainConfig {
        num_topics: topics,
        iterations: 60,
        burn_in: 20,
        optimize_interval: 10,
        seed: 4,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_and_monotone_per_m_step() {
    let corpus = small_training_corpus();
    let a = train_dmr(&corpus, &short_config(3)).unwrap();
    let b = train_dmr(&corpus, &short_config(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trace.len(), 4);
    for r in &a.trace {
        assert!(r.before.is_finite() && r.after.is_finite());
        assert!(r.after >= r.before);
    }
    let lda_a = train_lda(&corpus, &short_config(3)).unwrap();
    assert_eq!(lda_a, train_lda(&corpus, &short_config(3)).unwrap());
    assert_eq!(lda_a.lambda.num_features(), 1);
}

#[test]
fn single_topic_training() {
    let corpus = small_training_corpus();
    for snap in [
        train_dmr(&corpus, &short_config(1)).unwrap(),
        train_lda(&corpus, &short_config(1)).unwrap(),
    ] {
        assert!(snap.lambda.values().iter().all(|v| v.is_finite()));
        assert_eq!(snap.topic_word.total(0) as usize, corpus.num_tokens());
    }
}

#[test]
fn intercept_only_priors_are_shared() {
    let corpus = small_training_corpus();
    let mut intercept_only = corpus.clone();
    intercept_only.features = dmr::corpus::FeatureDictionary::new();
    for doc in &mut intercept_only.documents {
        doc.features = dmr::corpus::FeatureVector::intercept();
    }
    let snap = train_dmr(&intercept_only, &short_config(3)).unwrap();
    let priors = compute_priors(&intercept_only, &snap.lambda).unwrap();
    for p in &priors {
        assert_eq!(p.alpha(), priors[0].alpha());
        for t in 0..3 {
            assert_eq!(p.alpha()[t], snap.lambda.get(t, 0).exp());
        }
    }
}
