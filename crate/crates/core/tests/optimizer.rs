use dmr::numeric::{minimize, OptimizerConfig, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight() -> OptimizerConfig {
    OptimizerConfig {
        tolerance: 1e-10,
        max_iterations: 1000,
        ..OptimizerConfig::default()
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn quadratic_matches_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 5, 10, 20] {
        // A = MᵀM + nI is positive definite; f(x) = xᵀAx - 2bᵀx has ∇f = 2(Ax - b).
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>()
                            + if i == j { 0.5 } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let expected = solve(a.clone(), b.clone());
        let result = minimize(
            |x, g| {
                let ax: Vec<f64> = a
                    .iter()
                    .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
                    .collect();
                for i in 0..n {
                    g[i] = 2.0 * (ax[i] - b[i]);
                }
                x.iter().zip(&ax).map(|(xi, axi)| xi * axi).sum::<f64>()
                    - 2.0 * x.iter().zip(&b).map(|(xi, bi)| xi * bi).sum::<f64>()
            },
            &vec![0.0; n],
            &tight(),
        )
        .unwrap();
        for (got, want) in result.x.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-7, "n={n}: {got} vs {want}");
        }
    }
}

fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
    g[1] = 200.0 * (b - a * a);
    (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
}

#[test]
fn rosenbrock_reaches_minimizer() {
    let result = minimize(rosenbrock, &[-1.2, 1.0], &tight()).unwrap();
    assert!((result.x[0] - 1.0).abs() < 1e-6, "{:?}", result);
    assert!((result.x[1] - 1.0).abs() < 1e-6, "{:?}", result);
}

#[test]
fn default_config_parabola() {
    let result = minimize(
        |x, g| {
            g[0] = 2.0 * (x[0] - 3.0);
            (x[0] - 3.0).powi(2)
        },
        &[0.0],
        &OptimizerConfig::default(),
    )
    .unwrap();
    assert!((result.x[0] - 3.0).abs() < 1e-8);
    assert_eq!(result.termination, Termination::Converged);
}

#[test]
fn deterministic() {
    let a = minimize(rosenbrock, &[-1.2, 1.0], &OptimizerConfig::default()).unwrap();
    let b = minimize(rosenbrock, &[-1.2, 1.0], &OptimizerConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn max_iterations_returns_improved_iterate() {
    let config = OptimizerConfig {
        max_iterations: 3,
        ..OptimizerConfig::default()
    };
    let mut g = [0.0; 2];
    let start = rosenbrock(&[-1.2, 1.0], &mut g);
    let result = minimize(rosenbrock, &[-1.2, 1.0], &config).unwrap();
    assert_eq!(result.termination, Termination::MaxIterations);
    assert!(result.value <= start);
}
