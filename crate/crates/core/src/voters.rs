//! Base classifiers (stumps, bagged CART trees) and the error matrix they
//! induce on a dataset.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dirichlet::SimplexPoint;
use crate::error::{Error, Result};

/// Axis-aligned binary stump. Polarity `+1` predicts class 1 when
/// `x[feature] > threshold`, polarity `-1` predicts class 0 there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Go to `left` when `x[feature] <= threshold`, else to `right`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { label: usize },
}

/// Decision tree stored as a flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Voter {
    Stump(Stump),
    Tree(Tree),
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> usize {
        let above = x[self.feature] > self.threshold;
        usize::from(above == (self.polarity > 0))
    }
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

impl Voter {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Voter::Stump(s) => s.predict(x),
            Voter::Tree(t) => t.predict(x),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            Voter::Stump(s) => Some(s.feature),
            Voter::Tree(t) => t
                .nodes
                .iter()
                .filter_map(|n| match n {
                    Node::Split { feature, .. } => Some(*feature),
                    Node::Leaf { .. } => None,
                })
                .max(),
        }
    }
}

/// Serialized form of a voter set (`voters.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterSet {
    pub n_features: usize,
    pub n_classes: usize,
    pub voters: Vec<Voter>,
}

impl VoterSet {
    pub fn len(&self) -> usize {
        self.voters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voters.is_empty()
    }
}

/// Evenly spaced interior thresholds per feature, both polarities each.
pub fn build_stump_grid(feature_ranges: &[(f64, f64)], thresholds_per_feature: usize) -> Result<VoterSet> {
    if feature_ranges.is_empty() {
        return Err(Error::Empty("feature ranges"));
    }
    if thresholds_per_feature == 0 {
        return Err(Error::domain("build_stump_grid", "need at least one threshold per feature"));
    }
    let mut voters = Vec::with_capacity(2 * feature_ranges.len() * thresholds_per_feature);
    for (feature, &(lo, hi)) in feature_ranges.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain("build_stump_grid", format!("degenerate range [{lo}, {hi}] for feature {feature}")));
        }
        let step = (hi - lo) / (thresholds_per_feature + 1) as f64;
        for k in 0..thresholds_per_feature {
            let threshold = lo + (k + 1) as f64 * step;
            for polarity in [1, -1] {
                voters.push(Voter::Stump(Stump {
                    feature,
                    threshold,
                    polarity,
                }));
            }
        }
    }
    Ok(VoterSet {
        n_features: feature_ranges.len(),
        n_classes: 2,
        voters,
    })
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    // first maximum, i.e. the smallest label among ties
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct CartBuilder<'a, R: Rng + ?Sized> {
    data: &'a Dataset,
    max_depth: Option<usize>,
    n_try: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng + ?Sized> CartBuilder<'_, R> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.data.n_classes()];
        for &i in rows {
            c[self.data.labels()[i]] += 1;
        }
        c
    }

    /// Best Gini split of `rows` on `feature`: (weighted child impurity, threshold).
    fn best_split(&self, rows: &[usize], feature: usize) -> Option<(f64, f64)> {
        let k = self.data.n_classes();
        let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&i| (self.data.row(i)[feature], self.data.labels()[i])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = self.class_counts(rows);
        let mut left = vec![0; k];
        let n = sorted.len();
        let mut best: Option<(f64, f64)> = None;
        for s in 0..n - 1 {
            left[sorted[s].1] += 1;
            if sorted[s].0 == sorted[s + 1].0 {
                continue;
            }
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let nl = s + 1;
            let score = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
            if best.is_none_or(|(b, _)| score < b) {
                best = Some((score, 0.5 * (sorted[s].0 + sorted[s + 1].0)));
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { label: majority(&counts) });
        let impurity = gini(&counts, rows.len());
        if impurity == 0.0 || rows.len() < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let d = self.data.n_features();
        let features = sample(self.rng, d, self.n_try.min(d));
        let mut best: Option<(f64, usize, f64)> = None;
        for f in features.iter() {
            if let Some((score, thr)) = self.best_split(&rows, f) {
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, f, thr));
                }
            }
        }
        let Some((score, feature, threshold)) = best else {
            return id;
        };
        if score >= impurity - 1e-12 {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| self.data.row(i)[feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Bagged CART forest: each tree sees ⌊n/2⌋ points drawn with replacement and
/// ⌈√d⌉ candidate features per split, splitting on Gini impurity.
pub fn train_bagged_forest<R: Rng + ?Sized>(data: &Dataset, n_trees: usize, max_depth: Option<usize>, rng: &mut R) -> Result<VoterSet> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if n_trees == 0 {
        return Err(Error::domain("train_bagged_forest", "need at least one tree"));
    }
    if max_depth == Some(0) {
        return Err(Error::domain("train_bagged_forest", "max_depth must be positive"));
    }
    let n = data.len();
    let bag = (n / 2).max(1);
    let n_try = (data.n_features() as f64).sqrt().ceil() as usize;
    let mut voters = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let rows: Vec<usize> = (0..bag).map(|_| rng.random_range(0..n)).collect();
        let mut b = CartBuilder {
            data,
            max_depth,
            n_try,
            rng: &mut *rng,
            nodes: Vec::new(),
        };
        b.grow(rows, 0);
        voters.push(Voter::Tree(Tree { nodes: b.nodes }));
    }
    Ok(VoterSet {
        n_features: data.n_features(),
        n_classes: data.n_classes(),
        voters,
    })
}

/// Per-example, per-voter predicted labels (row-major n × M).
#[derive(Debug, Clone, PartialEq)]
pub struct VotePredictionTensor {
    n: usize,
    m: usize,
    n_classes: usize,
    labels: Vec<usize>,
}

impl VotePredictionTensor {
    pub fn new(n: usize, m: usize, n_classes: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                got: labels.len(),
            });
        }
        if labels.iter().any(|&y| y >= n_classes) {
            return Err(Error::domain("VotePredictionTensor", "label outside class set"));
        }
        Ok(Self { n, m, n_classes, labels })
    }

    pub fn n_examples(&self) -> usize {
        self.n
    }

    pub fn n_voters(&self) -> usize {
        self.m
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.labels[i * self.m..(i + 1) * self.m]
    }
}

fn check_dims(voters: &VoterSet, data: &Dataset) -> Result<()> {
    if voters.is_empty() {
        return Err(Error::Empty("voter set"));
    }
    let needed = voters.voters.iter().filter_map(Voter::max_feature).max().map_or(0, |f| f + 1);
    if data.n_features() != voters.n_features || needed > data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: voters.n_features,
            got: data.n_features(),
        });
    }
    Ok(())
}

pub fn predict_all(voters: &VoterSet, data: &Dataset) -> Result<VotePredictionTensor> {
    check_dims(voters, data)?;
    let m = voters.len();
    let rows: Vec<Vec<usize>> = (0..data.len())
        .into_par_iter()
        .map(|i| voters.voters.iter().map(|v| v.predict(data.row(i))).collect())
        .collect();
    let n_classes = voters.n_classes.max(data.n_classes());
    VotePredictionTensor::new(data.len(), m, n_classes, rows.concat())
}

/// Examples that share the same set of erring voters.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPattern {
    pub wrong: Vec<usize>,
    pub correct: Vec<usize>,
    pub count: usize,
}

/// n × M boolean matrix, entry (i, j) set iff voter j errs on example i.
/// Rows are also grouped into unique patterns, which is all the risk
/// computations need.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    n: usize,
    m: usize,
    words: usize,
    bits: Vec<u64>,
    patterns: Vec<ErrorPattern>,
    row_pattern: Vec<usize>,
}

impl ErrorMatrix {
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let m = rows.first().map(Vec::len).ok_or(Error::Empty("error matrix rows"))?;
        let mut flat = Vec::with_capacity(rows.len() * m);
        for r in rows {
            if r.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: r.len() });
            }
            flat.extend_from_slice(r);
        }
        Self::from_flat(rows.len(), m, &flat)
    }

    /// Row-major booleans.
    pub fn from_flat(n: usize, m: usize, entries: &[bool]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("error matrix rows"));
        }
        if m == 0 {
            return Err(Error::Empty("voter set"));
        }
        if entries.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                got: entries.len(),
            });
        }
        let words = m.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..m {
                if entries[i * m + j] {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        let mut index: HashMap<&[u64], usize> = HashMap::new();
        let mut patterns: Vec<ErrorPattern> = Vec::new();
        let mut row_pattern = Vec::with_capacity(n);
        for i in 0..n {
            let key = &bits[i * words..(i + 1) * words];
            let p = *index.entry(key).or_insert_with(|| {
                let (wrong, correct): (Vec<usize>, Vec<usize>) = (0..m).partition(|&j| entries[i * m + j]);
                patterns.push(ErrorPattern { wrong, correct, count: 0 });
                patterns.len() - 1
            });
            patterns[p].count += 1;
            row_pattern.push(p);
        }
        Ok(Self {
            n,
            m,
            words,
            bits,
            patterns,
            row_pattern,
        })
    }

    pub fn n_examples(&self) -> usize {
        self.n
    }

    pub fn n_voters(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn row(&self, i: usize) -> Vec<bool> {
        (0..self.m).map(|j| self.get(i, j)).collect()
    }

    /// Indices of the voters erring on example `i`.
    pub fn wrong_set(&self, i: usize) -> &[usize] {
        &self.patterns[self.row_pattern[i]].wrong
    }

    pub fn patterns(&self) -> &[ErrorPattern] {
        &self.patterns
    }

    pub fn pattern_of(&self, i: usize) -> usize {
        self.row_pattern[i]
    }

    /// Per-pattern weights (count / number of rows) over `rows`, or over all
    /// examples when `rows` is `None`.
    pub fn pattern_weights(&self, rows: Option<&[usize]>) -> Result<Vec<f64>> {
        match rows {
            None => {
                let n = self.n as f64;
                Ok(self.patterns.iter().map(|p| p.count as f64 / n).collect())
            }
            Some(rows) => {
                if rows.is_empty() {
                    return Err(Error::Empty("batch"));
                }
                let mut c = vec![0usize; self.patterns.len()];
                for &i in rows {
                    if i >= self.n {
                        return Err(Error::domain("pattern_weights", format!("row {i} out of range")));
                    }
                    c[self.row_pattern[i]] += 1;
                }
                let n = rows.len() as f64;
                Ok(c.into_iter().map(|k| k as f64 / n).collect())
            }
        }
    }

    /// Empirical error rate of every voter.
    pub fn voter_risks(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.m];
        for p in &self.patterns {
            for &j in &p.wrong {
                r[j] += p.count as f64;
            }
        }
        r.iter_mut().for_each(|v| *v /= self.n as f64);
        r
    }

    /// Expected accuracy of a voter drawn uniformly at random.
    pub fn voter_strength(&self) -> f64 {
        1.0 - self.voter_risks().iter().sum::<f64>() / self.m as f64
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let flat: Vec<bool> = rows.iter().flat_map(|&i| self.row(i)).collect();
        Self::from_flat(rows.len(), self.m, &flat)
    }
}

/// Error matrix from predictions and true labels.
pub fn error_matrix_from_predictions(preds: &VotePredictionTensor, labels: &[usize]) -> Result<ErrorMatrix> {
    if labels.len() != preds.n_examples() {
        return Err(Error::DimensionMismatch {
            expected: preds.n_examples(),
            got: labels.len(),
        });
    }
    let flat: Vec<bool> = (0..preds.n_examples())
        .flat_map(|i| preds.row(i).iter().map(move |&p| p != labels[i]))
        .collect();
    ErrorMatrix::from_flat(preds.n_examples(), preds.n_voters(), &flat)
}

pub fn error_matrix(voters: &VoterSet, data: &Dataset) -> Result<ErrorMatrix> {
    let preds = predict_all(voters, data)?;
    error_matrix_from_predictions(&preds, data.labels())
}

/// Weighted majority vote; ties go to the smallest label.
pub fn deterministic_mv_predict(theta: &SimplexPoint, preds: &VotePredictionTensor) -> Result<Vec<usize>> {
    if theta.len() != preds.n_voters() {
        return Err(Error::DimensionMismatch {
            expected: preds.n_voters(),
            got: theta.len(),
        });
    }
    let w = theta.weights();
    Ok((0..preds.n_examples())
        .map(|i| {
            let mut score = vec![0.0; preds.n_classes()];
            for (&y, &t) in preds.row(i).iter().zip(w) {
                score[y] += t;
            }
            let mut best = 0;
            for (k, &s) in score.iter().enumerate() {
                if s > score[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Provenance, Split};
    use crate::rng;

    fn dataset(features: Vec<f64>, d: usize, labels: Vec<usize>, k: usize) -> Dataset {
        Dataset::new(
            features,
            d,
            labels,
            k,
            Provenance {
                source: "test".into(),
                split: Split::Full,
                preprocessing: vec![],
                seed: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn stump_grid_counts_and_thresholds() {
        let g = build_stump_grid(&[(-2.0, 2.0), (-2.0, 2.0)], 10).unwrap();
        assert_eq!(g.len(), 40);
        let g = build_stump_grid(&[(-2.0, 2.0), (-2.0, 2.0)], 1).unwrap();
        assert_eq!(g.len(), 4);
        for v in &g.voters {
            match v {
                Voter::Stump(s) => assert_eq!(s.threshold, 0.0),
                _ => unreachable!(),
            }
        }
        assert_eq!(build_stump_grid(&[(-2.0, 2.0); 2], 4).unwrap().len(), 16);
        assert_eq!(build_stump_grid(&[(-2.0, 2.0); 2], 32).unwrap().len(), 128);
        for v in build_stump_grid(&[(-1.0, 3.0)], 7).unwrap().voters {
            let Voter::Stump(s) = v else { unreachable!() };
            assert!(s.threshold > -1.0 && s.threshold < 3.0);
        }
        assert!(build_stump_grid(&[(1.0, 1.0)], 3).is_err());
    }

    #[test]
    fn hand_built_error_matrix() {
        // x = (-1, 0.5, 2), y = (0, 1, 0)
        let data = dataset(vec![-1.0, 0.5, 2.0], 1, vec![0, 1, 0], 2);
        let voters = VoterSet {
            n_features: 1,
            n_classes: 2,
            voters: vec![
                Voter::Stump(Stump {
                    feature: 0,
                    threshold: 0.0,
                    polarity: 1,
                }),
                Voter::Stump(Stump {
                    feature: 0,
                    threshold: 1.0,
                    polarity: -1,
                }),
            ],
        };
        // stump 0 predicts (0, 1, 1); stump 1 predicts (1, 1, 0)
        let e = error_matrix(&voters, &data).unwrap();
        assert_eq!(e.row(0), vec![false, true]);
        assert_eq!(e.row(1), vec![false, false]);
        assert_eq!(e.row(2), vec![true, false]);
        assert_eq!(e.wrong_set(0), &[1]);
        assert_eq!(e.voter_risks(), vec![1.0 / 3.0, 1.0 / 3.0]);

        let flipped = data.map_labels(|y| 1 - y).unwrap();
        let f = error_matrix(&voters, &flipped).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(f.get(i, j), !e.get(i, j));
            }
        }
        let wrong_dim = dataset(vec![0.0, 0.0], 2, vec![0], 2);
        assert!(matches!(error_matrix(&voters, &wrong_dim), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn oracle_voter_has_zero_column() {
        let data = dataset(vec![-1.0, 1.0, -2.0, 3.0], 1, vec![0, 1, 0, 1], 2);
        let voters = build_stump_grid(&[(-1.0, 1.0)], 1).unwrap();
        let e = error_matrix(&voters, &data).unwrap();
        assert!((0..4).all(|i| !e.get(i, 0)));
        assert!((0..4).all(|i| e.get(i, 1)));
    }

    #[test]
    fn patterns_group_rows() {
        let rows = vec![
            vec![true, false, false],
            vec![false, false, false],
            vec![true, false, false],
            vec![true, true, true],
        ];
        let e = ErrorMatrix::from_rows(&rows).unwrap();
        assert_eq!(e.patterns().len(), 3);
        assert_eq!(e.patterns()[0].count, 2);
        assert_eq!(e.patterns()[0].correct, vec![1, 2]);
        assert_eq!(e.pattern_weights(None).unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(e.pattern_weights(Some(&[3, 3])).unwrap(), vec![0.0, 0.0, 1.0]);
        let wide = ErrorMatrix::from_flat(1, 130, &(0..130).map(|j| j % 3 == 0).collect::<Vec<_>>()).unwrap();
        assert!(wide.get(0, 129) && !wide.get(0, 128) && wide.get(0, 66));
    }

    #[test]
    fn forest_depth_one_is_perfect_stump() {
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        let mut r = rng::stream(1);
        for i in 0..100 {
            let u: f64 = r.random();
            if i % 2 == 0 {
                feats.push(-2.0 + u);
                labels.push(0);
            } else {
                feats.push(1.0 + u);
                labels.push(1);
            }
        }
        let data = dataset(feats, 1, labels, 2);
        let forest = train_bagged_forest(&data, 100, Some(1), &mut rng::stream(2)).unwrap();
        assert_eq!(forest.len(), 100);
        for v in &forest.voters {
            let Voter::Tree(t) = v else { unreachable!() };
            assert_eq!(t.depth(), 1);
        }
        let e = error_matrix(&forest, &data).unwrap();
        assert!(e.voter_risks().iter().all(|&r| r == 0.0));
        assert!(train_bagged_forest(&data, 0, None, &mut rng::stream(2)).is_err());
    }

    #[test]
    fn forest_is_deterministic_and_serializable() {
        let data = crate::data::gen_two_moons(200, 0.1, &mut rng::stream(3)).unwrap();
        let a = train_bagged_forest(&data, 5, None, &mut rng::stream(4)).unwrap();
        let b = train_bagged_forest(&data, 5, None, &mut rng::stream(4)).unwrap();
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        let back: VoterSet = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
        let stumps = build_stump_grid(&[(-2.0, 2.0); 2], 2).unwrap();
        let json = serde_json::to_string(&stumps.voters[0]).unwrap();
        assert_eq!(json, r#"{"kind":"stump","feature":0,"threshold":-0.6666666666666667,"polarity":1}"#);
    }

    #[test]
    fn mv_predict_examples() {
        let p = VotePredictionTensor::new(2, 2, 2, vec![0, 1, 1, 1]).unwrap();
        assert_eq!(deterministic_mv_predict(&SimplexPoint::vertex(2, 1), &p).unwrap(), vec![1, 1]);
        assert_eq!(deterministic_mv_predict(&SimplexPoint::vertex(2, 0), &p).unwrap(), vec![0, 1]);
        let agree = VotePredictionTensor::new(1, 2, 2, vec![1, 1]).unwrap();
        assert_eq!(deterministic_mv_predict(&SimplexPoint::uniform(2), &agree).unwrap(), vec![1]);
        let tie = VotePredictionTensor::new(1, 2, 3, vec![2, 0]).unwrap();
        assert_eq!(deterministic_mv_predict(&SimplexPoint::uniform(2), &tie).unwrap(), vec![0]);
    }
}
