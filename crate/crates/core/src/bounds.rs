//! Seeger-type PAC-Bayes certificates and the differentiable objectives
//! built on them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{kl_dirichlet, kl_dirichlet_grad, DirichletParams};
use crate::error::{Error, Result};
use crate::risk::{exact_risk_weighted, mc_relaxed_risk_weighted, McConfig};
use crate::specfun::{kl_inverse, kl_inverse_grad_at};
use crate::voters::ErrorMatrix;

pub const DEFAULT_DELTA: f64 = 0.05;

/// Training objective / certificate family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Exact,
    Mc,
    RiskOnly,
    FirstOrder,
    SecondOrder,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    Uninformed,
    Informed,
}

/// A certificate with every input echoed for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub objective: ObjectiveName,
    pub family: BoundFamily,
    /// Empirical quantity fed to kl⁻¹ (expected risk, Gibbs risk, tandem loss, ...).
    pub empirical_risk: f64,
    /// KL term as it enters the bound's radicand (before division by n).
    pub kl_term: f64,
    pub n: usize,
    pub m: Option<usize>,
    pub p: Option<f64>,
    pub delta: f64,
    /// Multiplier applied to kl⁻¹ (1 for the Dirichlet bounds, 2 or 4 for the baselines).
    pub factor: f64,
    pub certificate: f64,
    pub seed: Option<u64>,
}

fn check_n_delta(n: usize, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("seeger_bound", "n must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("seeger_bound", format!("delta = {delta} outside (0, 1)")));
    }
    Ok(())
}

/// ln(2√n/δ).
pub fn seeger_log_term(n: usize, delta: f64) -> f64 {
    (2.0 * (n as f64).sqrt() / delta).ln()
}

/// ln(4√(m(n−m))/δ).
pub fn informed_log_term(n: usize, m: usize, delta: f64) -> f64 {
    (4.0 * ((m * (n - m)) as f64).sqrt() / delta).ln()
}

/// kl⁻¹(emp_risk, (kl + ln(2√n/δ))/n).
pub fn seeger_bound(emp_risk: f64, kl: f64, n: usize, delta: f64) -> Result<f64> {
    check_n_delta(n, delta)?;
    if !(0.0..=1.0).contains(&emp_risk) {
        return Err(Error::domain("seeger_bound", format!("empirical risk {emp_risk} outside [0, 1]")));
    }
    if !(kl >= 0.0) {
        return Err(Error::domain("seeger_bound", format!("negative KL {kl}")));
    }
    Ok(kl_inverse(emp_risk, (kl + seeger_log_term(n, delta)) / n as f64))
}

/// Inputs of the informed-prior bound. `risk_first` is the risk of the
/// posterior over the voters trained on the second half, measured on the
/// first `m` points; `risk_second` the converse on the last `n − m` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformedInputs {
    pub risk_first: f64,
    pub risk_second: f64,
    /// KL of the posterior over the second-half voters (enters with 1/m).
    pub kl_gt: f64,
    /// KL of the posterior over the first-half voters (enters with 1/(n−m)).
    pub kl_le: f64,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub delta: f64,
}

impl InformedInputs {
    fn validate(&self) -> Result<()> {
        check_n_delta(self.n, self.delta)?;
        if self.m == 0 || self.m >= self.n {
            return Err(Error::domain("informed_seeger_bound", "need 0 < m < n"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::domain("informed_seeger_bound", "p outside (0, 1]"));
        }
        for r in [self.risk_first, self.risk_second] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::domain("informed_seeger_bound", "empirical risk outside [0, 1]"));
            }
        }
        if !(self.kl_gt >= 0.0 && self.kl_le >= 0.0) {
            return Err(Error::domain("informed_seeger_bound", "negative KL"));
        }
        Ok(())
    }

    pub fn mixture_risk(&self) -> f64 {
        self.p * self.risk_first + (1.0 - self.p) * self.risk_second
    }

    /// Radicand ε of the mixture bound.
    pub fn radicand(&self) -> f64 {
        let (n, m) = (self.n as f64, self.m as f64);
        self.p * self.kl_gt / m + (1.0 - self.p) * self.kl_le / (n - m) + informed_log_term(self.n, self.m, self.delta) / n
    }
}

pub fn informed_seeger_bound(inp: &InformedInputs) -> Result<f64> {
    inp.validate()?;
    Ok(kl_inverse(inp.mixture_risk(), inp.radicand()))
}

/// kl⁻¹(q, ε) with its partial derivatives; flat where the bound is vacuous.
pub(crate) fn kl_inverse_with_grad(q: f64, eps: f64) -> Result<(f64, f64, f64)> {
    let p = kl_inverse(q, eps);
    if !p.is_finite() {
        return Err(Error::Numeric(format!("kl inverse of ({q}, {eps}) is not finite")));
    }
    if p >= 1.0 {
        return Ok((p, 0.0, 0.0));
    }
    // the q-derivative blows up as q -> 0; every risk gradient vanishes there anyway
    let (dq, deps) = kl_inverse_grad_at(q.max(f64::MIN_POSITIVE), p)?;
    Ok((p, dq, deps))
}

/// How the empirical risk inside the bound is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskMode {
    Exact,
    Mc(McConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub risk: f64,
    pub kl: f64,
}

/// Empirical risk (exact or relaxed) with its α-gradient.
pub fn risk_with_grad<R: Rng + ?Sized>(alpha: &DirichletParams, errs: &ErrorMatrix, weights: &[f64], mode: RiskMode, rng: &mut R) -> Result<(f64, Vec<f64>)> {
    let r = match mode {
        RiskMode::Exact => exact_risk_weighted(alpha, errs, weights, true)?,
        RiskMode::Mc(cfg) => mc_relaxed_risk_weighted(alpha, errs, weights, cfg, rng, true)?,
    };
    Ok((r.value, r.gradient.expect("gradient requested")))
}

/// Seeger bound of a Dirichlet posterior and its gradient over α. `weights`
/// selects a batch (see [`ErrorMatrix::pattern_weights`]); `n` is always the
/// full training size.
#[allow(clippy::too_many_arguments)]
pub fn bound_objective<R: Rng + ?Sized>(
    alpha: &DirichletParams,
    prior: &DirichletParams,
    errs: &ErrorMatrix,
    weights: Option<&[f64]>,
    n: usize,
    delta: f64,
    mode: RiskMode,
    rng: &mut R,
) -> Result<ObjectiveValue> {
    check_n_delta(n, delta)?;
    let full;
    let weights = match weights {
        Some(w) => w,
        None => {
            full = errs.pattern_weights(None)?;
            &full
        }
    };
    let (risk, g_risk) = risk_with_grad(alpha, errs, weights, mode, rng)?;
    let kl = kl_dirichlet(alpha, prior)?;
    let g_kl = kl_dirichlet_grad(alpha, prior)?;
    let nf = n as f64;
    let (value, dq, deps) = kl_inverse_with_grad(risk.clamp(0.0, 1.0), (kl + seeger_log_term(n, delta)) / nf)?;
    let gradient = g_risk.iter().zip(&g_kl).map(|(gr, gk)| dq * gr + deps * gk / nf).collect();
    Ok(ObjectiveValue {
        value,
        gradient,
        risk,
        kl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn closed_forms_at_zero_risk() {
        let b = seeger_bound(0.0, 0.0, 1000, 0.05).unwrap();
        let expect = 1.0 - (-(2.0 * 1000f64.sqrt() / 0.05).ln() / 1000.0).exp();
        assert!((b - expect).abs() < 1e-12);
        assert!((b - 0.007117).abs() < 5e-7);
        let inf = InformedInputs {
            risk_first: 0.0,
            risk_second: 0.0,
            kl_gt: 0.0,
            kl_le: 0.0,
            n: 1000,
            m: 500,
            p: 0.5,
            delta: 0.05,
        };
        let b = informed_seeger_bound(&inf).unwrap();
        let expect = 1.0 - (-(4.0 * 500.0 / 0.05f64).ln() / 1000.0).exp();
        assert!((b - expect).abs() < 1e-12);
        assert!((b - 0.010540).abs() < 1e-6);
    }

    #[test]
    fn vacuous_and_monotone() {
        assert!(seeger_bound(0.1, 1e9, 100, 0.05).unwrap() > 1.0 - 1e-9);
        let mut last = 0.0;
        for k in 0..50 {
            let b = seeger_bound(0.2, k as f64, 500, 0.05).unwrap();
            assert!(b >= last);
            last = b;
        }
        let mut last = 0.0;
        for k in 0..=50 {
            let b = seeger_bound(k as f64 / 50.0, 3.0, 500, 0.05).unwrap();
            assert!(b >= last && b >= k as f64 / 50.0);
            last = b;
        }
    }

    #[test]
    fn informed_log_term_formula() {
        for (n, m) in [(1000, 500), (37, 5), (2, 1)] {
            let direct = (4.0 * ((m as f64) * ((n - m) as f64)).sqrt() / 0.05).ln();
            assert_eq!(informed_log_term(n, m, 0.05), direct);
        }
    }

    #[test]
    fn objective_at_prior_with_zero_risk() {
        let errs = ErrorMatrix::from_rows(&vec![vec![false; 3]; 4]).unwrap();
        let prior = DirichletParams::uniform(3, 1.0).unwrap();
        let o = bound_objective(&prior, &prior, &errs, None, 4, 0.05, RiskMode::Exact, &mut rng::stream(0)).unwrap();
        assert!((o.value - seeger_bound(0.0, 0.0, 4, 0.05).unwrap()).abs() < 1e-15);
        assert!(o.gradient.iter().all(|g| g.is_finite()));
    }
}
