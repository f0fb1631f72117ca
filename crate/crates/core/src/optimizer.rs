//! First-order minimization over unconstrained parameters: full-batch
//! descent for a fixed number of steps, or shuffled minibatches with a
//! plateau scheduler and early stopping.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One evaluation of a training objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub risk: f64,
    pub kl: f64,
    /// Norm of the model parameters (‖α‖₂ or ‖θ‖₂) for the trace.
    pub model_norm: f64,
}

/// A differentiable objective over `dim()` unconstrained parameters,
/// optionally restricted to a batch of training rows.
pub trait Objective {
    fn dim(&self) -> usize;
    fn n_examples(&self) -> usize;
    fn evaluate(&mut self, params: &[f64], batch: Option<&[usize]>) -> Result<Evaluation>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Full-batch steps for `iterations` steps; returns the last iterate.
    Batch,
    /// Shuffled minibatches per epoch; returns the best epoch's iterate.
    Minibatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub regime: Regime,
    pub rule: UpdateRule,
    pub learning_rate: f64,
    pub iterations: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub betas: (f64, f64),
    pub adam_eps: f64,
    /// Learning-rate divisor applied on a plateau (10 means lr / 10).
    pub scheduler_factor: f64,
    pub scheduler_patience: usize,
    pub early_stop_patience: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            regime: Regime::Batch,
            rule: UpdateRule::Adam,
            learning_rate: 0.1,
            iterations: 1000,
            epochs: 100,
            batch_size: 1024,
            betas: (0.9, 0.999),
            adam_eps: 1e-8,
            scheduler_factor: 10.0,
            scheduler_patience: 2,
            early_stop_patience: 25,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(format!("optimizer.{field}"), msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.betas.0) || !(0.0..1.0).contains(&self.betas.1) {
            return bad("betas", "must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps", "must be positive");
        }
        if !(self.scheduler_factor >= 1.0) {
            return bad("scheduler_factor", "must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub objective: f64,
    pub risk: f64,
    pub kl: f64,
    pub grad_norm: f64,
    pub alpha_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub points: Vec<TracePoint>,
}

impl TrainingTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(self.to_csv_string()?.as_bytes())?;
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_finite(e: &Evaluation, params: &[f64], step: usize) -> Result<()> {
    if !e.value.is_finite() || e.gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite objective or gradient at step {step}: value = {}, |u| = {:.6e}",
            e.value,
            norm(params)
        )));
    }
    Ok(())
}

struct Stepper {
    rule: UpdateRule,
    betas: (f64, f64),
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Stepper {
    fn new(cfg: &OptimizerConfig, dim: usize) -> Self {
        Self {
            rule: cfg.rule,
            betas: cfg.betas,
            eps: cfg.adam_eps,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self.rule {
            UpdateRule::Sgd => {
                for (u, g) in params.iter_mut().zip(grad) {
                    *u -= lr * g;
                }
            }
            UpdateRule::Adam => {
                self.t += 1;
                let (b1, b2) = self.betas;
                let c1 = 1.0 - b1.powi(self.t);
                let c2 = 1.0 - b2.powi(self.t);
                for k in 0..params.len() {
                    self.m[k] = b1 * self.m[k] + (1.0 - b1) * grad[k];
                    self.v[k] = b2 * self.v[k] + (1.0 - b2) * grad[k] * grad[k];
                    let mh = self.m[k] / c1;
                    let vh = self.v[k] / c2;
                    params[k] -= lr * mh / (vh.sqrt() + self.eps);
                }
            }
        }
    }
}

fn point(step: usize, e: &Evaluation) -> TracePoint {
    TracePoint {
        step,
        objective: e.value,
        risk: e.risk,
        kl: e.kl,
        grad_norm: norm(&e.gradient),
        alpha_norm: e.model_norm,
    }
}

/// Minimizes `objective` from `init`. `seed` drives minibatch shuffling.
pub fn minimize(objective: &mut dyn Objective, init: Vec<f64>, cfg: &OptimizerConfig, seed: u64) -> Result<(Vec<f64>, TrainingTrace)> {
    cfg.validate()?;
    if init.len() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: init.len(),
        });
    }
    match cfg.regime {
        Regime::Batch => minimize_batch(objective, init, cfg),
        Regime::Minibatch => minimize_minibatch(objective, init, cfg, seed),
    }
}

fn minimize_batch(objective: &mut dyn Objective, mut params: Vec<f64>, cfg: &OptimizerConfig) -> Result<(Vec<f64>, TrainingTrace)> {
    let mut stepper = Stepper::new(cfg, params.len());
    let mut trace = TrainingTrace::default();
    for step in 0..cfg.iterations {
        let e = objective.evaluate(&params, None)?;
        check_finite(&e, &params, step)?;
        trace.points.push(point(step, &e));
        stepper.step(&mut params, &e.gradient, cfg.learning_rate);
    }
    let e = objective.evaluate(&params, None)?;
    check_finite(&e, &params, cfg.iterations)?;
    trace.points.push(point(cfg.iterations, &e));
    Ok((params, trace))
}

fn minimize_minibatch(objective: &mut dyn Objective, mut params: Vec<f64>, cfg: &OptimizerConfig, seed: u64) -> Result<(Vec<f64>, TrainingTrace)> {
    let n = objective.n_examples();
    if n == 0 {
        return Err(Error::Empty("training rows"));
    }
    let mut stepper = Stepper::new(cfg, params.len());
    let mut trace = TrainingTrace::default();
    let mut lr = cfg.learning_rate;

    let first = objective.evaluate(&params, None)?;
    check_finite(&first, &params, 0)?;
    trace.points.push(point(0, &first));
    let mut best = (first.value, params.clone());
    let mut plateau_best = first.value;
    let mut bad_epochs = 0;
    let mut since_best = 0;

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        let mut shuffle = rng::child(seed, epoch as u64);
        order.shuffle(&mut shuffle);
        for batch in order.chunks(cfg.batch_size) {
            let e = objective.evaluate(&params, Some(batch))?;
            check_finite(&e, &params, epoch)?;
            stepper.step(&mut params, &e.gradient, lr);
        }
        let e = objective.evaluate(&params, None)?;
        check_finite(&e, &params, epoch + 1)?;
        trace.points.push(point(epoch + 1, &e));

        if e.value < best.0 {
            best = (e.value, params.clone());
            since_best = 0;
        } else {
            since_best += 1;
        }
        if e.value < plateau_best {
            plateau_best = e.value;
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs > cfg.scheduler_patience {
                lr /= cfg.scheduler_factor;
                bad_epochs = 0;
            }
        }
        if since_best > cfg.early_stop_patience {
            break;
        }
    }
    Ok((best.1, trace))
}

/// α_j ~ U(0.01, 2) i.i.d.
pub fn init_posterior<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::domain("init_posterior", "need at least two voters"));
    }
    Ok((0..m).map(|_| rng.random_range(0.01..2.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bowl {
        target: Vec<f64>,
        n: usize,
    }

    impl Objective for Bowl {
        fn dim(&self) -> usize {
            self.target.len()
        }
        fn n_examples(&self) -> usize {
            self.n
        }
        fn evaluate(&mut self, u: &[f64], _batch: Option<&[usize]>) -> Result<Evaluation> {
            let d: Vec<f64> = u.iter().zip(&self.target).map(|(a, b)| a - b).collect();
            Ok(Evaluation {
                value: d.iter().map(|x| x * x).sum(),
                gradient: d.iter().map(|x| 2.0 * x).collect(),
                risk: 0.0,
                kl: 0.0,
                model_norm: norm(u),
            })
        }
    }

    fn bowl() -> Bowl {
        Bowl {
            target: vec![1.0, -2.0, 0.5],
            n: 10,
        }
    }

    #[test]
    fn adam_reaches_bowl_minimum() {
        let (u, trace) = minimize(&mut bowl(), vec![0.0; 3], &OptimizerConfig::default(), 0).unwrap();
        let dist = u.iter().zip(&bowl().target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(dist < 1e-3, "{dist}");
        assert_eq!(trace.points.len(), 1001);
        assert!(trace.points.windows(2).all(|w| w[1].step == w[0].step + 1));
    }

    #[test]
    fn small_step_gd_is_monotone() {
        let cfg = OptimizerConfig {
            rule: UpdateRule::Sgd,
            learning_rate: 0.01,
            iterations: 200,
            ..Default::default()
        };
        let (_, trace) = minimize(&mut bowl(), vec![3.0; 3], &cfg, 0).unwrap();
        assert!(trace.points.windows(2).all(|w| w[1].objective < w[0].objective));
    }

    #[test]
    fn full_minibatch_matches_batch() {
        let batch = OptimizerConfig {
            rule: UpdateRule::Sgd,
            learning_rate: 0.01,
            iterations: 30,
            ..Default::default()
        };
        let mini = OptimizerConfig {
            regime: Regime::Minibatch,
            rule: UpdateRule::Sgd,
            learning_rate: 0.01,
            epochs: 30,
            batch_size: 10,
            early_stop_patience: 1000,
            scheduler_patience: 1000,
            ..Default::default()
        };
        let (ub, tb) = minimize(&mut bowl(), vec![0.0; 3], &batch, 1).unwrap();
        let (um, tm) = minimize(&mut bowl(), vec![0.0; 3], &mini, 1).unwrap();
        assert_eq!(ub, um);
        assert_eq!(tb.points, tm.points);
    }

    #[test]
    fn rejects_bad_config_and_non_finite() {
        let cfg = OptimizerConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(matches!(minimize(&mut bowl(), vec![0.0; 3], &cfg, 0), Err(Error::Config { .. })));
        let mut b = bowl();
        let res = minimize(&mut b, vec![f64::NAN; 3], &OptimizerConfig::default(), 0);
        assert!(matches!(res, Err(Error::Numeric(_))));
    }

    #[test]
    fn init_range_and_mean() {
        let a = init_posterior(100_000, &mut rng::stream(3)).unwrap();
        assert!(a.iter().all(|&x| (0.01..=2.0).contains(&x)));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        let se = (1.99f64.powi(2) / 12.0 / a.len() as f64).sqrt();
        assert!((mean - 1.005).abs() < 3.0 * se);
        assert_eq!(a[..5], init_posterior(5, &mut rng::stream(3)).unwrap()[..]);
    }
}
