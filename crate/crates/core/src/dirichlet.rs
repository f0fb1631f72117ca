//! Dirichlet distributions over the voter-weight simplex.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{digamma_raw, ln_gamma_raw, ln_multivariate_beta_raw, trigamma_raw};

/// Concentration vector α of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::domain("DirichletParams", "need at least two components"));
        }
        if let Some(bad) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::domain(
                "DirichletParams",
                format!("concentrations must be positive and finite, got {bad}"),
            ));
        }
        Ok(Self { alpha })
    }

    /// All components equal to `beta`.
    pub fn uniform(m: usize, beta: f64) -> Result<Self> {
        Self::new(vec![beta; m])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// α₀ = Σ α_j.
    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.alpha.iter().map(|a| a * s).collect())
    }

    /// Mean weighting α / α₀.
    pub fn mean(&self) -> SimplexPoint {
        let total = self.total();
        SimplexPoint {
            theta: self.alpha.iter().map(|a| a / total).collect(),
        }
    }

    pub fn log_density(&self, theta: &SimplexPoint) -> Result<f64> {
        check_dims(self.len(), theta.len())?;
        let mut acc = -ln_multivariate_beta_raw(&self.alpha);
        for (&a, &t) in self.alpha.iter().zip(theta.weights()) {
            if a == 1.0 {
                continue;
            }
            if t <= 0.0 {
                if a < 1.0 {
                    return Err(Error::domain(
                        "log_density",
                        "boundary point has infinite density when some alpha < 1",
                    ));
                }
                return Ok(f64::NEG_INFINITY);
            }
            acc += (a - 1.0) * t.ln();
        }
        Ok(acc)
    }

    /// Draws `count` i.i.d. points from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<SimplexPoint> {
        (0..count)
            .map(|_| {
                let logs = sample_log_gammas(&self.alpha, rng);
                SimplexPoint {
                    theta: softmax(&logs),
                }
            })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(p: DirichletParams) -> Self {
        p.alpha
    }
}

/// A point θ of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    theta: Vec<f64>,
}

impl SimplexPoint {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Empty("simplex point"));
        }
        if theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::domain("SimplexPoint", "weights must be finite and non-negative"));
        }
        let s: f64 = theta.iter().sum();
        if (s - 1.0).abs() > Self::SUM_TOL * theta.len().max(1) as f64 {
            return Err(Error::domain("SimplexPoint", format!("weights sum to {s}")));
        }
        Ok(Self { theta })
    }

    /// Normalizes non-negative weights onto the simplex.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0 && s.is_finite()) || w.iter().any(|x| *x < 0.0) {
            return Err(Error::domain("SimplexPoint", "weights must be non-negative with positive sum"));
        }
        Ok(Self {
            theta: w.iter().map(|x| x / s).collect(),
        })
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            theta: vec![1.0 / m as f64; m],
        }
    }

    /// Vertex e_j of the simplex.
    pub fn vertex(m: usize, j: usize) -> Self {
        let mut theta = vec![0.0; m];
        theta[j] = 1.0;
        Self { theta }
    }

    pub fn weights(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .theta
            .iter()
            .filter(|t| **t > 0.0)
            .map(|t| t * t.ln())
            .sum::<f64>()
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.theta
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// KL(Dir(α) ‖ Dir(β)).
pub fn kl_dirichlet(post: &DirichletParams, prior: &DirichletParams) -> Result<f64> {
    check_dims(post.len(), prior.len())?;
    let a0 = post.total();
    let b0 = prior.total();
    let psi_a0 = digamma_raw(a0);
    let mut kl = ln_gamma_raw(a0) - ln_gamma_raw(b0);
    for (&a, &b) in post.alpha().iter().zip(prior.alpha()) {
        kl += ln_gamma_raw(b) - ln_gamma_raw(a) + (a - b) * (digamma_raw(a) - psi_a0);
    }
    Ok(kl.max(0.0))
}

/// Gradient of [`kl_dirichlet`] with respect to the posterior concentrations:
/// (α_j − β_j) ψ′(α_j) − (α₀ − β₀) ψ′(α₀).
pub fn kl_dirichlet_grad(post: &DirichletParams, prior: &DirichletParams) -> Result<Vec<f64>> {
    check_dims(post.len(), prior.len())?;
    let a0 = post.total();
    let cross = (a0 - prior.total()) * trigamma_raw(a0);
    Ok(post
        .alpha()
        .iter()
        .zip(prior.alpha())
        .map(|(&a, &b)| (a - b) * trigamma_raw(a) - cross)
        .collect())
}

/// ln of a Gamma(shape, 1) variate.
///
/// Marsaglia–Tsang for shape ≥ 1; smaller shapes are boosted to shape + 1
/// and corrected with U^{1/shape}, all in log space so that tiny shapes do
/// not underflow to an all-zero draw.
pub fn sample_ln_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return sample_ln_gamma(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = 1.0 - rng.random::<f64>();
        if u.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
            return (d * v).ln();
        }
    }
}

pub(crate) fn sample_log_gammas<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    alpha.iter().map(|&a| sample_ln_gamma(a, rng)).collect()
}

pub fn softmax(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn dir(v: &[f64]) -> DirichletParams {
        DirichletParams::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(DirichletParams::new(vec![1.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
        let json = serde_json::to_string(&dir(&[1.0, 2.0])).unwrap();
        assert_eq!(json, "[1.0,2.0]");
        assert!(serde_json::from_str::<DirichletParams>("[1.0,-2.0]").is_err());
    }

    #[test]
    fn log_density_examples() {
        let th = SimplexPoint::new(vec![0.3, 0.7]).unwrap();
        assert!(dir(&[1.0, 1.0]).log_density(&th).unwrap().abs() < 1e-14);
        let th3 = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((dir(&[1.0, 1.0, 1.0]).log_density(&th3).unwrap() - 2f64.ln()).abs() < 1e-14);
        let half = SimplexPoint::uniform(2);
        assert!((dir(&[2.0, 2.0]).log_density(&half).unwrap() - 1.5f64.ln()).abs() < 1e-13);
        let edge = SimplexPoint::vertex(2, 1);
        assert!(dir(&[0.5, 2.0]).log_density(&edge).is_err());
        assert_eq!(dir(&[0.5, 2.0]).log_density(&SimplexPoint::vertex(2, 0)).unwrap(), f64::NEG_INFINITY);
        assert!(dir(&[1.0, 1.0, 1.0]).log_density(&th).is_err());
    }

    #[test]
    fn kl_examples() {
        let a = dir(&[2.0, 1.0]);
        let b = dir(&[1.0, 1.0]);
        assert!(kl_dirichlet(&a, &a).unwrap().abs() < 1e-14);
        let expected = 2f64.ln() - 0.5;
        assert!((kl_dirichlet(&a, &b).unwrap() - expected).abs() < 1e-13);
        assert!((expected - 0.193_147_2).abs() < 1e-7);
        assert!(kl_dirichlet(&a, &dir(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn kl_is_nonnegative_on_random_pairs() {
        let mut r = rng::stream(3);
        for _ in 0..100 {
            let m = r.random_range(2..7);
            let a: Vec<f64> = (0..m).map(|_| r.random_range(0.05..5.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| r.random_range(0.05..5.0)).collect();
            assert!(kl_dirichlet(&dir(&a), &dir(&b)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kl_grad_matches_finite_differences() {
        let cases: [(&[f64], &[f64]); 3] = [
            (&[2.0, 1.0], &[1.0, 1.0]),
            (&[0.3, 4.0, 1.2], &[1.0, 0.1, 2.0]),
            (&[7.0, 0.05, 0.8, 2.2], &[0.1, 0.1, 0.1, 0.1]),
        ];
        for (a, b) in cases {
            let post = dir(a);
            let prior = dir(b);
            let g = kl_dirichlet_grad(&post, &prior).unwrap();
            for j in 0..a.len() {
                let h = 1e-6 * a[j].max(1.0);
                let mut up = a.to_vec();
                up[j] += h;
                let mut dn = a.to_vec();
                dn[j] -= h;
                let fd = (kl_dirichlet(&dir(&up), &prior).unwrap() - kl_dirichlet(&dir(&dn), &prior).unwrap())
                    / (2.0 * h);
                assert!((g[j] - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{j}: {} vs {fd}", g[j]);
            }
        }
    }

    #[test]
    fn kl_grad_special_cases() {
        let a = dir(&[1.5, 0.2, 3.0]);
        assert!(kl_dirichlet_grad(&a, &a).unwrap().iter().all(|g| g.abs() < 1e-14));
        let g = kl_dirichlet_grad(&dir(&[3.0, 3.0]), &dir(&[1.0, 1.0])).unwrap();
        assert_eq!(g[0], g[1]);
    }

    #[test]
    fn mean_examples() {
        let m = dir(&[1.0, 1.0, 1.0]).mean();
        assert!(m.weights().iter().all(|t| (t - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(dir(&[2.0, 1.0]).mean().weights(), &[2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(dir(&[0.5, 1.5]).mean().weights(), &[0.25, 0.75]);
    }

    #[test]
    fn sample_means_and_determinism() {
        for (alpha, target) in [([1.0, 1.0], 0.5), ([2.0, 1.0], 2.0 / 3.0)] {
            let p = dir(&alpha);
            let draws = p.sample(100_000, &mut rng::stream(11));
            let xs: Vec<f64> = draws.iter().map(|d| d.weights()[0]).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((mean - target).abs() < 3.0 * (var / n).sqrt(), "{mean} vs {target}");
        }
        let p = dir(&[0.3, 2.0, 0.01]);
        assert_eq!(p.sample(50, &mut rng::stream(5)), p.sample(50, &mut rng::stream(5)));
        for d in p.sample(1000, &mut rng::stream(6)) {
            let s: f64 = d.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-12 && d.weights().iter().all(|t| t.is_finite()));
        }
    }

    #[test]
    fn tiny_shapes_do_not_collapse() {
        let mut r = rng::stream(9);
        for _ in 0..1000 {
            let l = sample_ln_gamma(1e-3, &mut r);
            assert!(l.is_finite());
        }
    }
}
