//! Special functions and the quasi-Newton minimizer used by the trainer.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Arguments below this are shifted upward by recurrence before the
/// asymptotic series is applied.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "log_gamma",
            x,
        });
    }
    Ok(ln_gamma(x))
}

/// Digamma (derivative of `ln Γ`) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "digamma",
            x,
        });
    }
    Ok(psi(x))
}

/// Unchecked `ln Γ(x)`; callers guarantee `x > 0`.
pub(crate) fn ln_gamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma({x})");
    // ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1))
    let mut shift = 1.0;
    while x < ASYMPTOTIC_THRESHOLD {
        shift *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Stirling series, Bernoulli coefficients B_2k / (2k (2k - 1)).
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    let value = (x - 0.5) * x.ln() - x + HALF_LN_2PI + series;
    if shift == 1.0 {
        value
    } else {
        value - shift.ln()
    }
}

/// Unchecked digamma; callers guarantee `x > 0`.
pub(crate) fn psi(mut x: f64) -> f64 {
    debug_assert!(x > 0.0, "psi({x})");
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// `ln Σ exp(v)`, stable for large magnitudes.
///
/// Returns `-inf` when every input is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    let max = values
        .iter()
        .copied()
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .ok_or(Error::EmptyInput("log_sum_exp"))?;
    if max == f64::NEG_INFINITY || max.is_nan() || max == f64::INFINITY {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of correction pairs kept by the two-loop recursion.
    pub memory: usize,
    /// Convergence threshold on the gradient infinity-norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Armijo constant.
    pub sufficient_decrease: f64,
    /// Weak Wolfe curvature constant.
    pub curvature: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            memory: 5,
            tolerance: 1e-5,
            max_iterations: 200,
            sufficient_decrease: 1e-4,
            curvature: 0.9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::InvalidConfig("optimizer memory must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "optimizer tolerance must be > 0".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "optimizer max iterations must be >= 1".into(),
            ));
        }
        let c1 = self.sufficient_decrease;
        let c2 = self.curvature;
        if !(c1 > 0.0 && c1 < 1.0 && c2 > 0.0 && c2 < 1.0 && c1 < c2) {
            return Err(Error::InvalidConfig(
                "line-search constants must satisfy 0 < c1 < c2 < 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step satisfying the line-search conditions was found; the best
    /// iterate seen so far is returned.
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

const MAX_LINE_SEARCH_STEPS: usize = 60;

/// Minimizes `objective` with limited-memory BFGS.
///
/// `objective(x, grad)` returns `f(x)` and writes `∇f(x)` into `grad`.
/// The line search enforces sufficient decrease and the weak Wolfe
/// curvature condition by bisection/expansion, so the returned value never
/// exceeds `f(x0)`.
pub fn minimize<F>(mut objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    config.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStart);
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);
    let mut direction = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_g = vec![0.0; n];
    let mut alpha_buf = vec![0.0; config.memory];

    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    loop {
        if inf_norm(&g) <= config.tolerance {
            termination = Termination::Converged;
            break;
        }
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;

        two_loop(&g, &history, &mut alpha_buf, &mut direction);
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            history.clear();
            for (d, gi) in direction.iter_mut().zip(&g) {
                *d = -gi;
            }
            slope = -dot(&g, &g);
        }
        let initial_step = if history.is_empty() {
            (1.0 / l2_norm(&g)).min(1.0)
        } else {
            1.0
        };

        // Weak Wolfe line search by bracketing.
        let mut step = initial_step;
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let mut accepted = None;
        let mut best_armijo: Option<(f64, f64)> = None;
        for _ in 0..MAX_LINE_SEARCH_STEPS {
            for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&direction) {
                *t = xi + step * di;
            }
            let ft = objective(&trial, &mut trial_g);
            evaluations += 1;
            let finite = ft.is_finite() && trial_g.iter().all(|v| v.is_finite());
            if !finite || ft > f + config.sufficient_decrease * step * slope {
                hi = step;
            } else {
                if best_armijo.is_none_or(|(_, fb)| ft < fb) {
                    best_armijo = Some((step, ft));
                }
                if dot(&trial_g, &direction) < config.curvature * slope {
                    lo = step;
                } else {
                    accepted = Some(ft);
                    break;
                }
            }
            step = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * lo
            };
            if hi.is_finite() && hi - lo <= f64::EPSILON * hi.max(1e-300) {
                break;
            }
        }

        let new_f = match accepted {
            Some(ft) => ft,
            None => match best_armijo {
                // Sufficient decrease without curvature: still progress.
                Some((s, fb)) if fb < f => {
                    for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&direction) {
                        *t = xi + s * di;
                    }
                    objective(&trial, &mut trial_g);
                    evaluations += 1;
                    fb
                }
                _ => {
                    termination = Termination::LineSearchFailed;
                    break;
                }
            },
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        x.copy_from_slice(&trial);
        g.copy_from_slice(&trial_g);
        f = new_f;
        if sy > 1e-12 * l2_norm(&s) * l2_norm(&y) && sy > 0.0 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
    }

    Ok(Minimum {
        gradient_norm: inf_norm(&g),
        x,
        value: f,
        iterations,
        evaluations,
        termination,
    })
}

/// Computes `-H g` with the two-loop recursion over the stored pairs.
fn two_loop(
    g: &[f64],
    history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    alpha: &mut [f64],
    out: &mut [f64],
) {
    out.copy_from_slice(g);
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        let a = rho * dot(s, out);
        alpha[i] = a;
        for (o, yi) in out.iter_mut().zip(y) {
            *o -= a * yi;
        }
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for o in out.iter_mut() {
            *o *= gamma;
        }
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let b = rho * dot(y, out);
        for (o, si) in out.iter_mut().zip(s) {
            *o += (alpha[i] - b) * si;
        }
    }
    for o in out.iter_mut() {
        *o = -*o;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
