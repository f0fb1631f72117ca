//! Stochastic majority-vote risk under a Dirichlet posterior: the closed form
//! based on I_{0.5}, the Monte-Carlo sigmoid relaxation, and deterministic
//! majority-vote risks.

use rand::Rng;
use rayon::prelude::*;

use crate::dirichlet::{sample_log_gammas, softmax, DirichletParams, SimplexPoint};
use crate::error::{Error, Result};
use crate::specfun::{inc_beta_grad_raw, ln_gamma_raw, ln_reg_lower_gamma, reg_inc_beta_raw};
use crate::voters::ErrorMatrix;

/// Default slope of the tempered sigmoid.
pub const DEFAULT_SLOPE: f64 = 100.0;
/// Default number of posterior draws per evaluation.
pub const DEFAULT_DRAWS: usize = 10;

/// Patterns below this count are evaluated on the calling thread.
const PAR_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RiskValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

fn check_alpha(alpha: &DirichletParams, errs: &ErrorMatrix) -> Result<()> {
    if alpha.len() != errs.n_voters() {
        return Err(Error::DimensionMismatch {
            expected: errs.n_voters(),
            got: alpha.len(),
        });
    }
    Ok(())
}

/// I_{0.5}(c, w) with I(0, w) = 1 and I(c, 0) = 0.
fn half_loss(c: f64, w: f64) -> Result<f64> {
    if w == 0.0 {
        Ok(0.0)
    } else if c == 0.0 {
        Ok(1.0)
    } else {
        reg_inc_beta_raw(0.5, c, w)
    }
}

/// Probability that the posterior weight on the wrong voters reaches 1/2.
pub fn exact_expected_loss(alpha: &DirichletParams, wrong: &[usize], correct: &[usize]) -> Result<f64> {
    let m = alpha.len();
    let mut seen = vec![false; m];
    for &j in wrong.iter().chain(correct) {
        if j >= m {
            return Err(Error::IndexSet(format!("index {j} out of range for {m} voters")));
        }
        if seen[j] {
            return Err(Error::IndexSet(format!("index {j} appears twice")));
        }
        seen[j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::IndexSet("wrong and correct sets do not cover all voters".into()));
    }
    let a = alpha.alpha();
    let w: f64 = wrong.iter().map(|&j| a[j]).sum();
    let c: f64 = correct.iter().map(|&j| a[j]).sum();
    half_loss(c, w)
}

fn map_patterns<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if n < PAR_THRESHOLD {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Exact risk over the rows selected by `weights` (per-pattern weights as
/// returned by [`ErrorMatrix::pattern_weights`]).
pub fn exact_risk_weighted(alpha: &DirichletParams, errs: &ErrorMatrix, weights: &[f64], with_grad: bool) -> Result<RiskValue> {
    check_alpha(alpha, errs)?;
    let a = alpha.alpha();
    let patterns = errs.patterns();
    let per = map_patterns(patterns.len(), |p| {
        if weights[p] == 0.0 {
            return Ok((0.0, 0.0, 0.0));
        }
        let pat = &patterns[p];
        let w: f64 = pat.wrong.iter().map(|&j| a[j]).sum();
        let c: f64 = pat.correct.iter().map(|&j| a[j]).sum();
        let loss = half_loss(c, w)?;
        let (ga, gb) = if with_grad && c > 0.0 && w > 0.0 {
            inc_beta_grad_raw(0.5, c, w)?
        } else {
            (0.0, 0.0)
        };
        Ok((loss, ga, gb))
    })?;
    let mut value = 0.0;
    for (p, &(loss, _, _)) in per.iter().enumerate() {
        value += weights[p] * loss;
    }
    let gradient = with_grad.then(|| {
        // dI/dα_j is ga for correct voters and gb for wrong ones
        let mut base = 0.0;
        let mut g = vec![0.0; a.len()];
        for (p, &(_, ga, gb)) in per.iter().enumerate() {
            let wt = weights[p];
            if wt == 0.0 {
                continue;
            }
            base += wt * ga;
            for &j in &patterns[p].wrong {
                g[j] += wt * (gb - ga);
            }
        }
        g.iter_mut().for_each(|v| *v += base);
        g
    });
    Ok(RiskValue {
        value: value.clamp(0.0, 1.0),
        gradient,
    })
}

/// Mean exact loss over all examples, with the gradient in α on request.
pub fn exact_empirical_risk(alpha: &DirichletParams, errs: &ErrorMatrix, with_grad: bool) -> Result<RiskValue> {
    exact_risk_weighted(alpha, errs, &errs.pattern_weights(None)?, with_grad)
}

/// Tempered-sigmoid relaxation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub draws: usize,
    pub slope: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            draws: DEFAULT_DRAWS,
            slope: DEFAULT_SLOPE,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// d ln γ / dα for ln γ drawn from Gamma(α, 1) by inversion of the CDF P(α, γ):
/// -(∂P/∂α) / (γ f(γ; α)), with ∂ln P/∂α from central differences.
pub fn ln_gamma_sample_grad(alpha: f64, ln_gamma: f64) -> Result<f64> {
    let x = ln_gamma.exp();
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Numeric(format!("gamma draw {x} cannot be differentiated")));
    }
    let h = (1e-4 * alpha.max(1.0)).min(0.5 * alpha);
    let lp = ln_reg_lower_gamma(alpha, x)?;
    let dlp = (ln_reg_lower_gamma(alpha + h, x)? - ln_reg_lower_gamma(alpha - h, x)?) / (2.0 * h);
    // ln(γ f(γ)) = α ln γ − γ − ln Γ(α)
    let ln_xf = alpha * ln_gamma - x - ln_gamma_raw(alpha);
    Ok(-(lp - ln_xf).exp() * dlp)
}

/// Relaxed risk for a fixed set of draws (`ln_gammas[t][j]` = ln γ_j of draw t).
pub fn mc_relaxed_risk_from_draws(
    alpha: &DirichletParams,
    errs: &ErrorMatrix,
    weights: &[f64],
    slope: f64,
    ln_gammas: &[Vec<f64>],
    with_grad: bool,
) -> Result<RiskValue> {
    check_alpha(alpha, errs)?;
    if ln_gammas.is_empty() {
        return Err(Error::Empty("draws"));
    }
    if !(slope > 0.0) {
        return Err(Error::domain("mc_relaxed_risk", "slope must be positive"));
    }
    let m = alpha.len();
    let patterns = errs.patterns();
    let t_count = ln_gammas.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; m];
    for lg in ln_gammas {
        if lg.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: lg.len() });
        }
        let theta = softmax(lg);
        let mut risk = 0.0;
        // dL/dθ_j
        let mut g_theta = vec![0.0; m];
        for (p, pat) in patterns.iter().enumerate() {
            let wt = weights[p];
            if wt == 0.0 {
                continue;
            }
            let w: f64 = pat.wrong.iter().map(|&j| theta[j]).sum();
            let s = sigmoid(slope * (w - 0.5));
            risk += wt * s;
            if with_grad {
                let d = wt * slope * s * (1.0 - s);
                for &j in &pat.wrong {
                    g_theta[j] += d;
                }
            }
        }
        total += risk;
        if with_grad {
            let dot: f64 = g_theta.iter().zip(&theta).map(|(g, t)| g * t).sum();
            for j in 0..m {
                let d_lg = theta[j] * (g_theta[j] - dot);
                if d_lg != 0.0 {
                    grad[j] += d_lg * ln_gamma_sample_grad(alpha.alpha()[j], lg[j])?;
                }
            }
        }
    }
    let value = total / t_count;
    let gradient = with_grad.then(|| grad.into_iter().map(|g| g / t_count).collect());
    Ok(RiskValue { value, gradient })
}

/// Monte-Carlo estimate of the sigmoid-relaxed risk; the gradient follows
/// each draw pathwise through the Gamma reparameterization.
pub fn mc_relaxed_risk<R: Rng + ?Sized>(alpha: &DirichletParams, errs: &ErrorMatrix, cfg: McConfig, rng: &mut R, with_grad: bool) -> Result<RiskValue> {
    mc_relaxed_risk_weighted(alpha, errs, &errs.pattern_weights(None)?, cfg, rng, with_grad)
}

pub fn mc_relaxed_risk_weighted<R: Rng + ?Sized>(
    alpha: &DirichletParams,
    errs: &ErrorMatrix,
    weights: &[f64],
    cfg: McConfig,
    rng: &mut R,
    with_grad: bool,
) -> Result<RiskValue> {
    if cfg.draws == 0 {
        return Err(Error::domain("mc_relaxed_risk", "need at least one draw"));
    }
    let draws: Vec<Vec<f64>> = (0..cfg.draws).map(|_| sample_log_gammas(alpha.alpha(), rng)).collect();
    mc_relaxed_risk_from_draws(alpha, errs, weights, cfg.slope, &draws, with_grad)
}

/// Posterior weight on the erring voters, per example.
pub fn wrong_mass(theta: &SimplexPoint, errs: &ErrorMatrix) -> Result<Vec<f64>> {
    if theta.len() != errs.n_voters() {
        return Err(Error::DimensionMismatch {
            expected: errs.n_voters(),
            got: theta.len(),
        });
    }
    let t = theta.weights();
    let per: Vec<f64> = errs.patterns().iter().map(|p| p.wrong.iter().map(|&j| t[j]).sum()).collect();
    Ok((0..errs.n_examples()).map(|i| per[errs.pattern_of(i)]).collect())
}

/// Fraction of examples with W_θ ≥ 1/2.
pub fn deterministic_mv_risk(theta: &SimplexPoint, errs: &ErrorMatrix) -> Result<f64> {
    let w = wrong_mass(theta, errs)?;
    Ok(w.iter().filter(|&&v| v >= 0.5).count() as f64 / w.len() as f64)
}

/// Risk of the majority vote at the posterior mean, and twice the expected
/// risk, which upper-bounds it.
pub fn expected_mv_certificate(alpha: &DirichletParams, errs: &ErrorMatrix) -> Result<(f64, f64)> {
    let det = deterministic_mv_risk(&alpha.mean(), errs)?;
    let proxy = 2.0 * exact_empirical_risk(alpha, errs, false)?.value;
    if det > proxy + 1e-12 {
        return Err(Error::Numeric(format!("mean-vote risk {det} exceeds twice the expected risk {proxy}")));
    }
    Ok((det, proxy))
}
