use dmr::numeric::{digamma, log_gamma, log_sum_exp};
use proptest::prelude::*;

const ORACLE: &str = include_str!("data/special_functions.tsv");

/// `(x, ln Γ(x), Ψ(x))` computed at 50 significant digits.
fn oracle() -> Vec<(f64, f64, f64)> {
    ORACLE
        .lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<f64> = line.split('\t').map(|c| c.parse().unwrap()).collect();
            (cols[0], cols[1], cols[2])
        })
        .collect()
}

/// `10⁻¹⁰` absolute, relaxed to a few ulps where `|ln Γ(x)|` is so large
/// that `10⁻¹⁰` is below the spacing of doubles.
fn log_gamma_tolerance(value: f64) -> f64 {
    1e-10_f64.max(4.0 * f64::EPSILON * value.abs())
}

#[test]
fn log_gamma_matches_oracle_grid() {
    let grid = oracle();
    assert_eq!(grid.len(), 1000);
    assert!(grid[0].0 <= 1e-3 && grid[999].0 >= 1e6);
    for (x, expected, _) in grid {
        let got = log_gamma(x).unwrap();
        assert!(
            (got - expected).abs() <= log_gamma_tolerance(expected),
            "ln Γ({x}) = {got}, oracle {expected}"
        );
    }
}

#[test]
fn digamma_matches_oracle_grid() {
    for (x, _, expected) in oracle() {
        let got = digamma(x).unwrap();
        assert!(
            (got - expected).abs() <= 1e-9,
            "Ψ({x}) = {got}, oracle {expected}"
        );
    }
}

#[test]
fn known_values() {
    assert!(log_gamma(1.0).unwrap().abs() < 1e-12);
    assert!((log_gamma(5.0).unwrap() - 3.178_053_83).abs() < 1e-8);
    assert!((log_gamma(0.5).unwrap() - 0.572_364_94).abs() < 1e-8);
    assert!((digamma(1.0).unwrap() + 0.577_215_664_9).abs() < 1e-10);
    assert!((digamma(2.0).unwrap() - 0.422_784_335_1).abs() < 1e-10);
    assert!((digamma(0.5).unwrap() + 1.963_510_026_0).abs() < 1e-10);
}

#[test]
fn recurrences() {
    for x in [0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
        let lg = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap() - x.ln();
        assert!(lg.abs() <= 1e-10, "ln Γ recurrence at {x}: {lg}");
        let dg = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
        assert!(dg.abs() <= 1e-9, "Ψ recurrence at {x}: {dg}");
    }
}

#[test]
fn digamma_is_log_gamma_derivative() {
    let h = 1e-4;
    for x in [0.5, 1.0, 2.0, 10.0, 100.0] {
        let fd = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
        assert!((fd - digamma(x).unwrap()).abs() <= 1e-6, "x = {x}");
    }
}

#[test]
fn log_sum_exp_handles_extremes() {
    let v = log_sum_exp(&[1e6, 1e6]).unwrap();
    assert!((v - (1e6 + 2f64.ln())).abs() < 1e-9);
    let v = log_sum_exp(&[-1e6, -1e6 + 1.0]).unwrap();
    assert!(v.is_finite() && v > -1e6 + 1.0);
}

proptest! {
    #[test]
    fn log_sum_exp_shift_invariance(
        v in prop::collection::vec(-50.0f64..50.0, 1..20),
        c in -1e3f64..1e3,
    ) {
        let base = log_sum_exp(&v).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let moved = log_sum_exp(&shifted).unwrap();
        prop_assert!((moved - (base + c)).abs() <= 1e-9 * (1.0 + c.abs()));
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(base >= max);
    }

    #[test]
    fn log_gamma_recurrence_holds(x in 1e-3f64..1e4) {
        let lg = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap() - x.ln();
        prop_assert!(lg.abs() <= log_gamma_tolerance(log_gamma(x + 1.0).unwrap()).max(1e-10));
    }

    #[test]
    fn digamma_is_increasing(x in 1e-3f64..1e5, dx in 1e-3f64..10.0) {
        prop_assert!(digamma(x + dx).unwrap() > digamma(x).unwrap());
    }
}
