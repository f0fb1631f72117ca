//! Comparison objectives over categorical posteriors: first order (Gibbs
//! risk), second order (tandem loss), Binomial, and the C-bound.

use crate::bounds::{kl_inverse_with_grad, seeger_log_term};
use crate::dirichlet::SimplexPoint;
use crate::error::{Error, Result};
use crate::specfun::ln_gamma_raw;
use crate::voters::ErrorMatrix;

/// Default number of voters drawn by the Binomial objective.
pub const DEFAULT_BINOMIAL_DRAWS: usize = 100;

/// KL(C(θ) ‖ C(π)) with 0·ln 0 = 0.
pub fn kl_categorical(theta: &SimplexPoint, prior: &SimplexPoint) -> Result<f64> {
    if theta.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            got: theta.len(),
        });
    }
    let mut kl = 0.0;
    for (&t, &p) in theta.weights().iter().zip(prior.weights()) {
        if t == 0.0 {
            continue;
        }
        if p == 0.0 {
            return Err(Error::domain("kl_categorical", "posterior mass where the prior has none"));
        }
        kl += t * (t / p).ln();
    }
    Ok(kl.max(0.0))
}

fn kl_categorical_grad(theta: &SimplexPoint, prior: &SimplexPoint) -> Vec<f64> {
    theta
        .weights()
        .iter()
        .zip(prior.weights())
        .map(|(&t, &p)| if t > 0.0 { (t / p).ln() + 1.0 } else { 0.0 })
        .collect()
}

fn wrong_mass_per_pattern(theta: &SimplexPoint, errs: &ErrorMatrix) -> Result<Vec<f64>> {
    if theta.len() != errs.n_voters() {
        return Err(Error::DimensionMismatch {
            expected: errs.n_voters(),
            got: theta.len(),
        });
    }
    let t = theta.weights();
    Ok(errs.patterns().iter().map(|p| p.wrong.iter().map(|&j| t[j]).sum()).collect())
}

/// Empirical mean of φ(W_θ) and its θ-gradient, for a loss φ of the wrong mass.
fn mean_of_wrong_mass(theta: &SimplexPoint, errs: &ErrorMatrix, weights: &[f64], phi: impl Fn(f64) -> (f64, f64)) -> Result<(f64, Vec<f64>)> {
    let w = wrong_mass_per_pattern(theta, errs)?;
    let mut value = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for (p, pat) in errs.patterns().iter().enumerate() {
        if weights[p] == 0.0 {
            continue;
        }
        let (v, d) = phi(w[p]);
        value += weights[p] * v;
        for &j in &pat.wrong {
            grad[j] += weights[p] * d;
        }
    }
    Ok((value, grad))
}

/// Gibbs risk R̂₁ = mean of W_θ.
pub fn gibbs_risk(theta: &SimplexPoint, errs: &ErrorMatrix) -> Result<f64> {
    Ok(mean_of_wrong_mass(theta, errs, &errs.pattern_weights(None)?, |w| (w, 1.0))?.0)
}

/// Tandem loss R̂₂ = mean of W_θ².
pub fn tandem_risk(theta: &SimplexPoint, errs: &ErrorMatrix) -> Result<f64> {
    Ok(mean_of_wrong_mass(theta, errs, &errs.pattern_weights(None)?, |w| (w * w, 2.0 * w))?.0)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma_raw(n as f64 + 1.0) - ln_gamma_raw(k as f64 + 1.0) - ln_gamma_raw((n - k) as f64 + 1.0)
}

fn check_draws(n_draws: usize) -> Result<()> {
    if n_draws == 0 || n_draws % 2 != 0 {
        return Err(Error::domain("binomial_loss", format!("N = {n_draws} must be even and positive")));
    }
    Ok(())
}

/// P(at least N/2 of N voters drawn from C(θ) err) given wrong mass `w`:
/// Σ_{k=N/2}^{N} C(N,k) w^k (1−w)^{N−k}, summed in log space.
pub fn binomial_loss(w: f64, n_draws: usize) -> Result<f64> {
    check_draws(n_draws)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::domain("binomial_loss", format!("W = {w} outside [0, 1]")));
    }
    Ok(binomial_loss_raw(w, n_draws))
}

fn binomial_loss_raw(w: f64, n: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w >= 1.0 {
        return 1.0;
    }
    let (lw, l1w) = (w.ln(), (-w).ln_1p());
    let log_sum = |ks: std::ops::Range<usize>| {
        let terms: Vec<f64> = ks.map(|k| ln_choose(n, k) + k as f64 * lw + (n - k) as f64 * l1w).collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).exp()
    };
    // sum whichever tail is the smaller one
    if w <= 0.5 {
        log_sum(n / 2..n + 1).min(1.0)
    } else {
        (1.0 - log_sum(0..n / 2)).max(0.0)
    }
}

/// d/dW of [`binomial_loss`]: N·C(N−1, N/2−1) W^{N/2−1} (1−W)^{N/2}.
fn binomial_loss_deriv(w: f64, n: usize) -> f64 {
    let k = n / 2;
    if w <= 0.0 {
        return if k == 1 { n as f64 } else { 0.0 };
    }
    if w >= 1.0 {
        return 0.0;
    }
    ((n as f64).ln() + ln_choose(n - 1, k - 1) + (k - 1) as f64 * w.ln() + (n - k) as f64 * (-w).ln_1p()).exp()
}

/// Mean Binomial loss over examples.
pub fn binomial_risk(theta: &SimplexPoint, errs: &ErrorMatrix, n_draws: usize) -> Result<f64> {
    check_draws(n_draws)?;
    Ok(mean_of_wrong_mass(theta, errs, &errs.pattern_weights(None)?, |w| (binomial_loss_raw(w, n_draws), 0.0))?.0)
}

/// C-bound (R̂₂ − R̂₁²)/(R̂₂ − R̂₁ + 1/4). Evaluation only.
pub fn c_bound_value(theta: &SimplexPoint, errs: &ErrorMatrix) -> Result<f64> {
    let r1 = gibbs_risk(theta, errs)?;
    let r2 = tandem_risk(theta, errs)?;
    let den = r2 - r1 + 0.25;
    if !(den > 1e-15) {
        return Err(Error::Numeric(format!("degenerate C-bound denominator {den}")));
    }
    Ok((r2 - r1 * r1) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    FirstOrder,
    SecondOrder,
    Binomial { n_draws: usize },
}

impl Baseline {
    /// (multiplier on kl⁻¹, multiplier on the KL inside the radicand)
    fn factors(self) -> (f64, f64) {
        match self {
            Baseline::FirstOrder => (2.0, 1.0),
            Baseline::SecondOrder => (4.0, 2.0),
            Baseline::Binomial { n_draws } => (2.0, n_draws as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineValue {
    /// Equal to the certificate; minimized directly.
    pub objective: f64,
    /// Gradient with respect to θ, treating its coordinates as free.
    pub gradient: Vec<f64>,
    pub certificate: f64,
    pub empirical: f64,
    pub kl: f64,
}

/// factor · kl⁻¹(R̂, (c·KL + ln(2√n/δ))/n) for the chosen baseline. `weights`
/// selects a batch; `n` is the full training size.
pub fn baseline_objective(
    kind: Baseline,
    theta: &SimplexPoint,
    prior: &SimplexPoint,
    errs: &ErrorMatrix,
    weights: Option<&[f64]>,
    n: usize,
    delta: f64,
) -> Result<BaselineValue> {
    if n == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("baseline_objective", "need n > 0 and delta in (0, 1)"));
    }
    let full;
    let weights = match weights {
        Some(w) => w,
        None => {
            full = errs.pattern_weights(None)?;
            &full
        }
    };
    let (emp, g_emp) = match kind {
        Baseline::FirstOrder => mean_of_wrong_mass(theta, errs, weights, |w| (w, 1.0))?,
        Baseline::SecondOrder => mean_of_wrong_mass(theta, errs, weights, |w| (w * w, 2.0 * w))?,
        Baseline::Binomial { n_draws } => {
            check_draws(n_draws)?;
            mean_of_wrong_mass(theta, errs, weights, |w| (binomial_loss_raw(w, n_draws), binomial_loss_deriv(w, n_draws)))?
        }
    };
    let kl = kl_categorical(theta, prior)?;
    let g_kl = kl_categorical_grad(theta, prior);
    let (factor, kl_mult) = kind.factors();
    let nf = n as f64;
    let (p, dq, deps) = kl_inverse_with_grad(emp.clamp(0.0, 1.0), (kl_mult * kl + seeger_log_term(n, delta)) / nf)?;
    let gradient = g_emp
        .iter()
        .zip(&g_kl)
        .map(|(ge, gk)| factor * (dq * ge + deps * kl_mult * gk / nf))
        .collect();
    Ok(BaselineValue {
        objective: factor * p,
        gradient,
        certificate: factor * p,
        empirical: emp,
        kl,
    })
}

pub fn first_order_objective(theta: &SimplexPoint, prior: &SimplexPoint, errs: &ErrorMatrix, n: usize, delta: f64) -> Result<BaselineValue> {
    baseline_objective(Baseline::FirstOrder, theta, prior, errs, None, n, delta)
}

pub fn second_order_objective(theta: &SimplexPoint, prior: &SimplexPoint, errs: &ErrorMatrix, n: usize, delta: f64) -> Result<BaselineValue> {
    baseline_objective(Baseline::SecondOrder, theta, prior, errs, None, n, delta)
}

pub fn binomial_objective(theta: &SimplexPoint, prior: &SimplexPoint, errs: &ErrorMatrix, n_draws: usize, n: usize, delta: f64) -> Result<BaselineValue> {
    baseline_objective(Baseline::Binomial { n_draws }, theta, prior, errs, None, n, delta)
}

/// Chains a θ-gradient through θ = softmax(logits).
pub fn softmax_backward(theta: &[f64], grad_theta: &[f64]) -> Vec<f64> {
    let dot: f64 = theta.iter().zip(grad_theta).map(|(t, g)| t * g).sum();
    theta.iter().zip(grad_theta).map(|(t, g)| t * (g - dot)).collect()
}
