//! End-to-end runs: data, voters, posterior training and certificates,
//! plus the run-directory artifacts.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_objective, c_bound_value, softmax_backward, Baseline};
use crate::bounds::{
    bound_objective, informed_log_term, informed_seeger_bound, kl_inverse_with_grad, risk_with_grad, seeger_bound, BoundFamily, BoundReport,
    InformedInputs, ObjectiveName, RiskMode,
};
use crate::config::{DatasetKind, Method, RunConfig, VoterKind};
use crate::data::{self, CsvOptions, Dataset, Split, TabularFormat};
use crate::dirichlet::{kl_dirichlet, kl_dirichlet_grad, softmax, DirichletParams, SimplexPoint};
use crate::error::{Error, Result};
use crate::optimizer::{init_posterior, minimize, Evaluation, Objective, TrainingTrace};
use crate::risk::{exact_empirical_risk, McConfig};
use crate::rng::{self, Stream};
use crate::voters::{self, deterministic_mv_predict, error_matrix, predict_all, ErrorMatrix, VotePredictionTensor, VoterSet};

// labels of the random streams derived from the run seed
const STREAM_TRAIN_DATA: u64 = 1;
const STREAM_TEST_DATA: u64 = 2;
const STREAM_TRAIN_NOISE: u64 = 3;
const STREAM_TEST_NOISE: u64 = 4;
const STREAM_SPLIT: u64 = 5;
const STREAM_HALVES: u64 = 6;
const STREAM_VOTERS: u64 = 7;
const STREAM_VOTERS_SECOND: u64 = 8;
const STREAM_INIT: u64 = 9;
const STREAM_OBJECTIVE: u64 = 10;
const STREAM_SHUFFLE: u64 = 11;

/// Default stump range for the synthetic datasets.
pub const SYNTHETIC_RANGE: (f64, f64) = (-2.0, 2.0);

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn alpha_from(u: &[f64]) -> Result<DirichletParams> {
    DirichletParams::new(u.iter().map(|x| x.exp()).collect()).map_err(|e| Error::Numeric(format!("concentrations left the positive range: {e}")))
}

/// Seeger bound (or plain empirical risk) over u = ln α.
pub struct DirichletObjective<'a> {
    pub errs: &'a ErrorMatrix,
    pub prior: DirichletParams,
    pub n: usize,
    pub delta: f64,
    pub mode: RiskMode,
    pub risk_only: bool,
    pub rng: Stream,
}

impl Objective for DirichletObjective<'_> {
    fn dim(&self) -> usize {
        self.prior.len()
    }

    fn n_examples(&self) -> usize {
        self.errs.n_examples()
    }

    fn evaluate(&mut self, u: &[f64], batch: Option<&[usize]>) -> Result<Evaluation> {
        let alpha = alpha_from(u)?;
        let weights = self.errs.pattern_weights(batch)?;
        let (value, grad, risk, kl) = if self.risk_only {
            let (risk, g) = risk_with_grad(&alpha, self.errs, &weights, self.mode, &mut self.rng)?;
            (risk, g, risk, kl_dirichlet(&alpha, &self.prior)?)
        } else {
            let o = bound_objective(&alpha, &self.prior, self.errs, Some(&weights), self.n, self.delta, self.mode, &mut self.rng)?;
            (o.value, o.gradient, o.risk, o.kl)
        };
        Ok(Evaluation {
            value,
            gradient: grad.iter().zip(alpha.alpha()).map(|(g, a)| g * a).collect(),
            risk,
            kl,
            model_norm: alpha.norm(),
        })
    }
}

/// Informed-prior mixture bound over [ln α_gt ; ln α_le]. Rows `0..m` of a
/// batch index the first half, rows `m..n` the second half.
pub struct InformedObjective<'a> {
    /// Second-half voters evaluated on the first half.
    pub errs_first: &'a ErrorMatrix,
    /// First-half voters evaluated on the second half.
    pub errs_second: &'a ErrorMatrix,
    pub prior_gt: DirichletParams,
    pub prior_le: DirichletParams,
    pub p: f64,
    pub delta: f64,
    pub mode: RiskMode,
    pub rng: Stream,
}

impl InformedObjective<'_> {
    fn m(&self) -> usize {
        self.errs_first.n_examples()
    }

    fn n(&self) -> usize {
        self.m() + self.errs_second.n_examples()
    }
}

impl Objective for InformedObjective<'_> {
    fn dim(&self) -> usize {
        self.prior_gt.len() + self.prior_le.len()
    }

    fn n_examples(&self) -> usize {
        self.n()
    }

    fn evaluate(&mut self, u: &[f64], batch: Option<&[usize]>) -> Result<Evaluation> {
        let (m, n) = (self.m(), self.n());
        let k = self.prior_gt.len();
        let a_gt = alpha_from(&u[..k])?;
        let a_le = alpha_from(&u[k..])?;
        let (rows1, rows2): (Vec<usize>, Vec<usize>) = match batch {
            Some(b) => {
                let (x, y): (Vec<usize>, Vec<usize>) = b.iter().partition(|&&i| i < m);
                (x, y.into_iter().map(|i| i - m).collect())
            }
            None => (Vec::new(), Vec::new()),
        };
        // a half absent from the batch falls back to all of its rows
        let w1 = self.errs_first.pattern_weights((!rows1.is_empty()).then_some(&rows1[..]))?;
        let w2 = self.errs_second.pattern_weights((!rows2.is_empty()).then_some(&rows2[..]))?;
        let (r1, g1) = risk_with_grad(&a_gt, self.errs_first, &w1, self.mode, &mut self.rng)?;
        let (r2, g2) = risk_with_grad(&a_le, self.errs_second, &w2, self.mode, &mut self.rng)?;
        let kl_gt = kl_dirichlet(&a_gt, &self.prior_gt)?;
        let kl_le = kl_dirichlet(&a_le, &self.prior_le)?;
        let inp = InformedInputs {
            risk_first: r1.clamp(0.0, 1.0),
            risk_second: r2.clamp(0.0, 1.0),
            kl_gt,
            kl_le,
            n,
            m,
            p: self.p,
            delta: self.delta,
        };
        let (value, dq, deps) = kl_inverse_with_grad(inp.mixture_risk(), inp.radicand())?;
        let (p, mf, rest) = (self.p, m as f64, (n - m) as f64);
        let gk_gt = kl_dirichlet_grad(&a_gt, &self.prior_gt)?;
        let gk_le = kl_dirichlet_grad(&a_le, &self.prior_le)?;
        let mut gradient = Vec::with_capacity(self.dim());
        for j in 0..k {
            gradient.push((dq * p * g1[j] + deps * p * gk_gt[j] / mf) * a_gt.alpha()[j]);
        }
        for j in 0..a_le.len() {
            gradient.push((dq * (1.0 - p) * g2[j] + deps * (1.0 - p) * gk_le[j] / rest) * a_le.alpha()[j]);
        }
        let all: Vec<f64> = a_gt.alpha().iter().chain(a_le.alpha()).copied().collect();
        Ok(Evaluation {
            value,
            gradient,
            risk: inp.mixture_risk(),
            kl: kl_gt + kl_le,
            model_norm: norm(&all),
        })
    }
}

/// Baseline certificate over softmax logits.
pub struct BaselineObjective<'a> {
    pub kind: Baseline,
    pub errs: &'a ErrorMatrix,
    pub prior: SimplexPoint,
    pub n: usize,
    pub delta: f64,
}

impl Objective for BaselineObjective<'_> {
    fn dim(&self) -> usize {
        self.prior.len()
    }

    fn n_examples(&self) -> usize {
        self.errs.n_examples()
    }

    fn evaluate(&mut self, logits: &[f64], batch: Option<&[usize]>) -> Result<Evaluation> {
        let theta = SimplexPoint::from_weights(&softmax(logits))?;
        let weights = self.errs.pattern_weights(batch)?;
        let v = baseline_objective(self.kind, &theta, &self.prior, self.errs, Some(&weights), self.n, self.delta)?;
        Ok(Evaluation {
            value: v.objective,
            gradient: softmax_backward(theta.weights(), &v.gradient),
            risk: v.empirical,
            kl: v.kl,
            model_norm: norm(theta.weights()),
        })
    }
}

/// Training and test splits of a run.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

/// Builds the train / test splits described by the config; deterministic in the seed.
pub fn prepare_data(cfg: &RunConfig) -> Result<Splits> {
    let d = &cfg.dataset;
    let seed = cfg.seed;
    let (mut train, mut test) = match d.kind {
        DatasetKind::TwoMoons => (
            data::gen_two_moons(d.n_train, d.noise, &mut rng::child(seed, STREAM_TRAIN_DATA))?,
            data::gen_two_moons(d.n_test, d.noise, &mut rng::child(seed, STREAM_TEST_DATA))?,
        ),
        DatasetKind::TwoGaussians => (
            data::gen_two_gaussians(d.n_train, &mut rng::child(seed, STREAM_TRAIN_DATA))?,
            data::gen_two_gaussians(d.n_test, &mut rng::child(seed, STREAM_TEST_DATA))?,
        ),
        DatasetKind::File => {
            let path = d.path.as_deref().ok_or_else(|| Error::config("dataset.path", "missing"))?;
            let opts = CsvOptions {
                has_header: d.has_header,
                label_column: d.label_column,
            };
            let (tr, te) = match (&d.test_path, d.format) {
                (Some(tp), TabularFormat::Csv) => {
                    let (tr, enc) = data::load_csv(path, &opts)?;
                    (tr, data::load_csv_with(tp, &opts, &enc)?)
                }
                (Some(tp), TabularFormat::Libsvm) => {
                    let tr = data::load_libsvm(path)?;
                    let te = data::load_libsvm(tp)?;
                    align_libsvm(tr, te)?
                }
                (None, fmt) => {
                    let all = data::load_tabular(path, fmt, &opts)?;
                    data::train_test_split(&all, d.train_fraction, &mut rng::child(seed, STREAM_SPLIT))?
                }
            };
            if d.standardize {
                let (a, b, _) = data::preprocess(&tr, &te)?;
                (a, b)
            } else {
                (tr, te)
            }
        }
    };
    if d.sigma2 > 0.0 {
        train = data::add_input_noise(&train, d.sigma2, &mut rng::child(seed, STREAM_TRAIN_NOISE))?;
        test = data::add_input_noise(&test, d.sigma2, &mut rng::child(seed, STREAM_TEST_NOISE))?;
    }
    train.provenance.split = Split::Train;
    test.provenance.split = Split::Test;
    train.provenance.seed = Some(seed);
    test.provenance.seed = Some(seed);
    Ok(Splits { train, test })
}

/// Pads two separately loaded LIBSVM files to a common width.
fn align_libsvm(tr: Dataset, te: Dataset) -> Result<(Dataset, Dataset)> {
    let d = tr.n_features().max(te.n_features());
    let k = tr.n_classes().max(te.n_classes());
    let widen = |x: &Dataset| -> Result<Dataset> {
        let mut f = Vec::with_capacity(x.len() * d);
        for r in x.rows() {
            f.extend_from_slice(r);
            f.extend(std::iter::repeat_n(0.0, d - r.len()));
        }
        Dataset::new(f, d, x.labels().to_vec(), k, x.provenance.clone())
    };
    Ok((widen(&tr)?, widen(&te)?))
}

/// The voters of a run: one set, or one set per data half for the informed bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum VoterSets {
    Single { set: VoterSet },
    Halves { first: VoterSet, second: VoterSet },
}

/// Row indices (into the training split) of the two halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSplit {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

pub fn half_split(n: usize, seed: u64) -> HalfSplit {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::child(seed, STREAM_HALVES));
    let second = idx.split_off(n / 2);
    HalfSplit { first: idx, second }
}

fn stump_ranges(cfg: &RunConfig, train: &Dataset) -> Vec<(f64, f64)> {
    let d = train.n_features();
    if let Some(r) = cfg.voters.range {
        return vec![r; d];
    }
    if cfg.dataset.kind != DatasetKind::File {
        return vec![SYNTHETIC_RANGE; d];
    }
    train
        .feature_ranges()
        .into_iter()
        .map(|(lo, hi)| if lo < hi { (lo, hi) } else { (lo - 1.0, lo + 1.0) })
        .collect()
}

fn train_voter_set(cfg: &RunConfig, data: &Dataset, ranges: &[(f64, f64)], label: u64) -> Result<VoterSet> {
    match cfg.voters.kind {
        VoterKind::Stumps => voters::build_stump_grid(ranges, cfg.voters.thresholds_per_feature),
        VoterKind::Forest => voters::train_bagged_forest(data, cfg.voters.n_trees, cfg.voters.max_depth, &mut rng::child(cfg.seed, label)),
    }
}

pub fn build_voters(cfg: &RunConfig, train: &Dataset) -> Result<(VoterSets, Option<HalfSplit>)> {
    let ranges = stump_ranges(cfg, train);
    match cfg.prior.bound {
        BoundFamily::Uninformed => Ok((
            VoterSets::Single {
                set: train_voter_set(cfg, train, &ranges, STREAM_VOTERS)?,
            },
            None,
        )),
        BoundFamily::Informed => {
            if train.len() < 4 {
                return Err(Error::config("dataset", "the informed bound needs at least 4 training points"));
            }
            let halves = half_split(train.len(), cfg.seed);
            let first = train_voter_set(cfg, &train.subset(&halves.first, Split::Train), &ranges, STREAM_VOTERS)?;
            let second = train_voter_set(cfg, &train.subset(&halves.second, Split::Train), &ranges, STREAM_VOTERS_SECOND)?;
            Ok((VoterSets::Halves { first, second }, Some(halves)))
        }
    }
}

/// Learned posterior (`posterior.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Posterior {
    Dirichlet {
        alpha: DirichletParams,
    },
    Categorical {
        theta: SimplexPoint,
    },
    /// `alpha_gt` weighs the second-half voters, `alpha_le` the first-half voters.
    InformedDirichlet {
        alpha_gt: DirichletParams,
        alpha_le: DirichletParams,
        p: f64,
    },
}

/// Which half trained which voter set, for informed-bound runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformedProvenance {
    pub m: usize,
    pub n: usize,
    pub p: f64,
    /// Seed of the stream that permuted the training rows before halving.
    pub split_seed: u64,
    pub first_half_rows: Vec<usize>,
    pub first_voters_trained_on: String,
    pub second_voters_trained_on: String,
    pub alpha_gt_evaluated_on: String,
    pub alpha_le_evaluated_on: String,
}

/// Summary of a run (`report.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub dataset: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_voters: usize,
    pub bound: BoundReport,
    /// Risk of the learned model: expected risk of the stochastic vote for
    /// Dirichlet posteriors, majority-vote error for categorical ones.
    pub train_error: f64,
    pub test_error: f64,
    /// Error of the majority vote weighted by the posterior mean.
    pub train_error_mean_vote: f64,
    pub test_error_mean_vote: f64,
    /// Expected test accuracy of a uniformly drawn voter.
    pub voter_strength: f64,
    /// Entropy of the (mean) voter weighting.
    pub posterior_entropy: f64,
    pub kl: f64,
    /// C-bound of the mean weighting on the training split.
    pub c_bound: Option<f64>,
    pub informed: Option<InformedProvenance>,
}

pub struct RunOutput {
    pub splits: Splits,
    pub voters: VoterSets,
    pub posterior: Posterior,
    pub trace: TrainingTrace,
    pub report: RunReport,
    pub train_seconds: f64,
}

fn baseline_kind(cfg: &RunConfig) -> Option<Baseline> {
    match cfg.method {
        Method::Fo => Some(Baseline::FirstOrder),
        Method::So => Some(Baseline::SecondOrder),
        Method::Bin => Some(Baseline::Binomial {
            n_draws: cfg.binomial.draws,
        }),
        _ => None,
    }
}

fn risk_mode(cfg: &RunConfig) -> RiskMode {
    match cfg.method {
        Method::Mc => RiskMode::Mc(McConfig {
            draws: cfg.mc.draws,
            slope: cfg.mc.slope,
        }),
        _ => RiskMode::Exact,
    }
}

fn objective_name(m: Method) -> ObjectiveName {
    match m {
        Method::Exact => ObjectiveName::Exact,
        Method::Mc => ObjectiveName::Mc,
        Method::RiskOnly => ObjectiveName::RiskOnly,
        Method::Fo => ObjectiveName::FirstOrder,
        Method::So => ObjectiveName::SecondOrder,
        Method::Bin => ObjectiveName::Binomial,
    }
}

/// Trains the posterior on precomputed training error matrices.
fn fit_posterior(cfg: &RunConfig, voters: &VoterSets, train_errs: &TrainErrors) -> Result<(Posterior, TrainingTrace)> {
    let init_rng = &mut rng::child(cfg.seed, STREAM_INIT);
    let obj_rng = rng::child(cfg.seed, STREAM_OBJECTIVE);
    let shuffle_seed = rng::derive_seed(cfg.seed, STREAM_SHUFFLE);
    let ln = |v: Vec<f64>| v.into_iter().map(f64::ln).collect::<Vec<_>>();
    match (voters, train_errs) {
        (VoterSets::Single { set }, TrainErrors::Single(errs)) => {
            let m = set.len();
            let init = ln(init_posterior(m, init_rng)?);
            if let Some(kind) = baseline_kind(cfg) {
                let mut obj = BaselineObjective {
                    kind,
                    errs,
                    prior: SimplexPoint::uniform(m),
                    n: errs.n_examples(),
                    delta: cfg.delta,
                };
                let (logits, trace) = minimize(&mut obj, init, &cfg.optimizer, shuffle_seed)?;
                let theta = SimplexPoint::from_weights(&softmax(&logits))?;
                Ok((Posterior::Categorical { theta }, trace))
            } else {
                let mut obj = DirichletObjective {
                    errs,
                    prior: DirichletParams::uniform(m, cfg.prior.beta)?,
                    n: errs.n_examples(),
                    delta: cfg.delta,
                    mode: risk_mode(cfg),
                    risk_only: cfg.method == Method::RiskOnly,
                    rng: obj_rng,
                };
                let (u, trace) = minimize(&mut obj, init, &cfg.optimizer, shuffle_seed)?;
                Ok((Posterior::Dirichlet { alpha: alpha_from(&u)? }, trace))
            }
        }
        (VoterSets::Halves { first, second }, TrainErrors::Halves { first_half, second_half }) => {
            let (k_gt, k_le) = (second.len(), first.len());
            let init = ln(init_posterior(k_gt + k_le, init_rng)?);
            let m = first_half.n_examples();
            let n = m + second_half.n_examples();
            let p = m as f64 / n as f64;
            let mut obj = InformedObjective {
                errs_first: first_half,
                errs_second: second_half,
                prior_gt: DirichletParams::uniform(k_gt, cfg.prior.beta)?,
                prior_le: DirichletParams::uniform(k_le, cfg.prior.beta)?,
                p,
                delta: cfg.delta,
                mode: risk_mode(cfg),
                rng: obj_rng,
            };
            let (u, trace) = minimize(&mut obj, init, &cfg.optimizer, shuffle_seed)?;
            Ok((
                Posterior::InformedDirichlet {
                    alpha_gt: alpha_from(&u[..k_gt])?,
                    alpha_le: alpha_from(&u[k_gt..])?,
                    p,
                },
                trace,
            ))
        }
        _ => Err(Error::config("prior.bound", "voter layout does not match the bound family")),
    }
}

enum TrainErrors {
    Single(ErrorMatrix),
    /// Second-half voters on the first half, first-half voters on the second half.
    Halves { first_half: ErrorMatrix, second_half: ErrorMatrix },
}

fn train_errors(voters: &VoterSets, train: &Dataset, halves: Option<&HalfSplit>) -> Result<TrainErrors> {
    match (voters, halves) {
        (VoterSets::Single { set }, _) => Ok(TrainErrors::Single(error_matrix(set, train)?)),
        (VoterSets::Halves { first, second }, Some(h)) => Ok(TrainErrors::Halves {
            first_half: error_matrix(second, &train.subset(&h.first, Split::Train))?,
            second_half: error_matrix(first, &train.subset(&h.second, Split::Train))?,
        }),
        (VoterSets::Halves { .. }, None) => Err(Error::config("prior.bound", "informed runs need the half split")),
    }
}

/// Certificate of a trained posterior on the full training split.
fn certificate(cfg: &RunConfig, posterior: &Posterior, errs: &TrainErrors) -> Result<BoundReport> {
    let objective = objective_name(cfg.method);
    match (posterior, errs) {
        (Posterior::Dirichlet { alpha }, TrainErrors::Single(e)) => {
            let risk = exact_empirical_risk(alpha, e, false)?.value;
            let kl = kl_dirichlet(alpha, &DirichletParams::uniform(alpha.len(), cfg.prior.beta)?)?;
            let n = e.n_examples();
            Ok(BoundReport {
                objective,
                family: BoundFamily::Uninformed,
                empirical_risk: risk,
                kl_term: kl,
                n,
                m: None,
                p: None,
                delta: cfg.delta,
                factor: 1.0,
                certificate: seeger_bound(risk, kl, n, cfg.delta)?,
                seed: Some(cfg.seed),
            })
        }
        (Posterior::Categorical { theta }, TrainErrors::Single(e)) => {
            let kind = baseline_kind(cfg).ok_or_else(|| Error::config("method", "categorical posterior needs a baseline method"))?;
            let v = baseline_objective(kind, theta, &SimplexPoint::uniform(theta.len()), e, None, e.n_examples(), cfg.delta)?;
            let (factor, kl_mult) = match kind {
                Baseline::FirstOrder => (2.0, 1.0),
                Baseline::SecondOrder => (4.0, 2.0),
                Baseline::Binomial { n_draws } => (2.0, n_draws as f64),
            };
            Ok(BoundReport {
                objective,
                family: BoundFamily::Uninformed,
                empirical_risk: v.empirical,
                kl_term: kl_mult * v.kl,
                n: e.n_examples(),
                m: None,
                p: None,
                delta: cfg.delta,
                factor,
                certificate: v.certificate,
                seed: Some(cfg.seed),
            })
        }
        (Posterior::InformedDirichlet { alpha_gt, alpha_le, p }, TrainErrors::Halves { first_half, second_half }) => {
            let m = first_half.n_examples();
            let n = m + second_half.n_examples();
            let inp = InformedInputs {
                risk_first: exact_empirical_risk(alpha_gt, first_half, false)?.value,
                risk_second: exact_empirical_risk(alpha_le, second_half, false)?.value,
                kl_gt: kl_dirichlet(alpha_gt, &DirichletParams::uniform(alpha_gt.len(), cfg.prior.beta)?)?,
                kl_le: kl_dirichlet(alpha_le, &DirichletParams::uniform(alpha_le.len(), cfg.prior.beta)?)?,
                n,
                m,
                p: *p,
                delta: cfg.delta,
            };
            debug_assert!(informed_log_term(n, m, cfg.delta).is_finite());
            Ok(BoundReport {
                objective,
                family: BoundFamily::Informed,
                empirical_risk: inp.mixture_risk(),
                kl_term: inp.p * inp.kl_gt + (1.0 - inp.p) * inp.kl_le,
                n,
                m: Some(m),
                p: Some(*p),
                delta: cfg.delta,
                factor: 1.0,
                certificate: informed_seeger_bound(&inp)?,
                seed: Some(cfg.seed),
            })
        }
        _ => Err(Error::config("posterior", "posterior does not match the voter layout")),
    }
}

/// Voter set and weights of the posterior-mean majority vote.
fn mean_vote(voters: &VoterSets, posterior: &Posterior) -> Result<(VoterSet, SimplexPoint)> {
    match (voters, posterior) {
        (VoterSets::Single { set }, Posterior::Dirichlet { alpha }) => Ok((set.clone(), alpha.mean())),
        (VoterSets::Single { set }, Posterior::Categorical { theta }) => Ok((set.clone(), theta.clone())),
        (VoterSets::Halves { first, second }, Posterior::InformedDirichlet { alpha_gt, alpha_le, p }) => {
            let mut all = second.clone();
            all.voters.extend(first.voters.iter().cloned());
            let w: Vec<f64> = alpha_gt
                .mean()
                .weights()
                .iter()
                .map(|t| p * t)
                .chain(alpha_le.mean().weights().iter().map(|t| (1.0 - p) * t))
                .collect();
            Ok((all, SimplexPoint::from_weights(&w)?))
        }
        _ => Err(Error::config("posterior", "posterior does not match the voter layout")),
    }
}

fn mv_error(preds: &VotePredictionTensor, theta: &SimplexPoint, labels: &[usize]) -> Result<f64> {
    let yhat = deterministic_mv_predict(theta, preds)?;
    Ok(yhat.iter().zip(labels).filter(|(a, b)| a != b).count() as f64 / labels.len() as f64)
}

/// Risk of the learned model on `data` (see [`RunReport::train_error`]).
fn model_risk(voters: &VoterSets, posterior: &Posterior, data: &Dataset) -> Result<f64> {
    match (voters, posterior) {
        (VoterSets::Single { set }, Posterior::Dirichlet { alpha }) => Ok(exact_empirical_risk(alpha, &error_matrix(set, data)?, false)?.value),
        (VoterSets::Single { set }, Posterior::Categorical { theta }) => mv_error(&predict_all(set, data)?, theta, data.labels()),
        (VoterSets::Halves { first, second }, Posterior::InformedDirichlet { alpha_gt, alpha_le, p }) => {
            let r_gt = exact_empirical_risk(alpha_gt, &error_matrix(second, data)?, false)?.value;
            let r_le = exact_empirical_risk(alpha_le, &error_matrix(first, data)?, false)?.value;
            Ok(p * r_gt + (1.0 - p) * r_le)
        }
        _ => Err(Error::config("posterior", "posterior does not match the voter layout")),
    }
}

fn informed_provenance(cfg: &RunConfig, halves: &HalfSplit, p: f64) -> InformedProvenance {
    InformedProvenance {
        m: halves.first.len(),
        n: halves.first.len() + halves.second.len(),
        p,
        split_seed: rng::derive_seed(cfg.seed, STREAM_HALVES),
        first_half_rows: halves.first.clone(),
        first_voters_trained_on: "first_half".into(),
        second_voters_trained_on: "second_half".into(),
        alpha_gt_evaluated_on: "first_half".into(),
        alpha_le_evaluated_on: "second_half".into(),
    }
}

/// Runs the whole pipeline in memory.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let splits = prepare_data(cfg)?;
    run_on(cfg, splits)
}

/// Runs the pipeline on given splits.
pub fn run_on(cfg: &RunConfig, splits: Splits) -> Result<RunOutput> {
    let (voters, halves) = build_voters(cfg, &splits.train)?;
    let errs = train_errors(&voters, &splits.train, halves.as_ref())?;
    let start = Instant::now();
    let (posterior, trace) = fit_posterior(cfg, &voters, &errs)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let report = build_report(cfg, &splits, &voters, &posterior, &errs, halves.as_ref())?;
    Ok(RunOutput {
        splits,
        voters,
        posterior,
        trace,
        report,
        train_seconds,
    })
}

fn build_report(cfg: &RunConfig, splits: &Splits, voters: &VoterSets, posterior: &Posterior, errs: &TrainErrors, halves: Option<&HalfSplit>) -> Result<RunReport> {
    let bound = certificate(cfg, posterior, errs)?;
    let (all_voters, theta_bar) = mean_vote(voters, posterior)?;
    let train_preds = predict_all(&all_voters, &splits.train)?;
    let test_preds = predict_all(&all_voters, &splits.test)?;
    let test_errs = voters::error_matrix_from_predictions(&test_preds, splits.test.labels())?;
    let train_errs_all = voters::error_matrix_from_predictions(&train_preds, splits.train.labels())?;
    let c_bound = c_bound_value(&theta_bar, &train_errs_all).ok();
    let informed = match (halves, posterior) {
        (Some(h), Posterior::InformedDirichlet { p, .. }) => Some(informed_provenance(cfg, h, *p)),
        _ => None,
    };
    Ok(RunReport {
        method: cfg.method,
        dataset: splits.train.provenance.source.clone(),
        seed: cfg.seed,
        n_train: splits.train.len(),
        n_test: splits.test.len(),
        n_voters: all_voters.len(),
        kl: bound.kl_term,
        bound,
        train_error: model_risk(voters, posterior, &splits.train)?,
        test_error: model_risk(voters, posterior, &splits.test)?,
        train_error_mean_vote: mv_error(&train_preds, &theta_bar, splits.train.labels())?,
        test_error_mean_vote: mv_error(&test_preds, &theta_bar, splits.test.labels())?,
        voter_strength: test_errs.voter_strength(),
        posterior_entropy: theta_bar.entropy(),
        c_bound,
        informed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_seconds: f64,
}

pub const CONFIG_FILE: &str = "config.toml";
pub const VOTERS_FILE: &str = "voters.json";
pub const POSTERIOR_FILE: &str = "posterior.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes the run artifacts. Wall time goes to a separate file so that
/// `report.json` is byte-identical across reruns.
pub fn write_artifacts(dir: &Path, cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_toml_string()?)?;
    write_json(&dir.join(VOTERS_FILE), &out.voters)?;
    write_json(&dir.join(POSTERIOR_FILE), &out.posterior)?;
    out.trace.write_csv(&dir.join(TRACE_FILE))?;
    write_json(&dir.join(REPORT_FILE), &out.report)?;
    write_json(
        &dir.join(TIMING_FILE),
        &Timing {
            train_seconds: out.train_seconds,
        },
    )
}

pub fn read_report(dir: &Path) -> Result<RunReport> {
    read_json(&dir.join(REPORT_FILE))
}

/// Recomputes the certificate of a stored run from its config, voters and posterior.
pub fn certify_dir(dir: &Path) -> Result<BoundReport> {
    let cfg_path = dir.join(CONFIG_FILE);
    if !cfg_path.exists() {
        return Err(Error::MissingArtifact(cfg_path));
    }
    let cfg = RunConfig::load(&cfg_path)?;
    let voters: VoterSets = read_json(&dir.join(VOTERS_FILE))?;
    let posterior: Posterior = read_json(&dir.join(POSTERIOR_FILE))?;
    let splits = prepare_data(&cfg)?;
    let halves = matches!(voters, VoterSets::Halves { .. }).then(|| half_split(splits.train.len(), cfg.seed));
    let errs = train_errors(&voters, &splits.train, halves.as_ref())?;
    certificate(&cfg, &posterior, &errs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Regime;

    fn small(method: Method) -> RunConfig {
        let mut cfg = RunConfig {
            method,
            ..Default::default()
        };
        cfg.dataset.n_train = 200;
        cfg.dataset.n_test = 200;
        cfg.voters.thresholds_per_feature = 4;
        cfg.optimizer.iterations = 100;
        cfg
    }

    #[test]
    fn every_method_runs() {
        for method in Method::ALL {
            let out = run(&small(method)).unwrap();
            let b = &out.report.bound;
            assert!(b.certificate >= b.empirical_risk, "{method:?}");
            assert!(out.report.test_error <= 1.0);
            assert_eq!(out.report.n_voters, 16);
            if method.is_dirichlet() {
                assert!(b.certificate < 1.0, "{method:?} {}", b.certificate);
            }
        }
    }

    #[test]
    fn informed_run_and_provenance() {
        let mut cfg = small(Method::Exact);
        cfg.voters.kind = VoterKind::Forest;
        cfg.voters.n_trees = 10;
        cfg.voters.max_depth = Some(3);
        cfg.prior.bound = BoundFamily::Informed;
        let out = run(&cfg).unwrap();
        let inf = out.report.informed.as_ref().unwrap();
        assert_eq!((inf.m, inf.n), (100, 200));
        assert_eq!(out.report.bound.m, Some(100));
        assert!(out.report.bound.certificate < 1.0);
        assert_eq!(out.report.n_voters, 20);
    }

    #[test]
    fn reruns_are_identical_and_certify_agrees() {
        let cfg = small(Method::Mc);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.posterior, b.posterior);
        let dir = tempfile::tempdir().unwrap();
        write_artifacts(dir.path(), &cfg, &a).unwrap();
        assert_eq!(certify_dir(dir.path()).unwrap(), a.report.bound);
        assert_eq!(read_report(dir.path()).unwrap(), a.report);
    }

    #[test]
    fn minibatch_regime_runs() {
        let mut cfg = small(Method::Exact);
        cfg.optimizer.regime = Regime::Minibatch;
        cfg.optimizer.batch_size = 64;
        cfg.optimizer.epochs = 5;
        let out = run(&cfg).unwrap();
        assert_eq!(out.trace.points.len(), 6);
    }
}
