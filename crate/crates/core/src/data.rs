//! Datasets: synthetic generators, CSV / LIBSVM ingestion, splitting and
//! train-statistics standardization.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which portion of a source a dataset holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Full,
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub split: Split,
    pub preprocessing: Vec<String>,
    pub seed: Option<u64>,
}

/// Dense feature matrix (row-major) with integer labels in `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<usize>, n_classes: usize, provenance: Provenance) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Empty("feature dimension"));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_features,
                got: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Dataset", "features must be finite"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::domain("Dataset", format!("label {bad} outside 0..{n_classes}")));
        }
        Ok(Self {
            features,
            n_features,
            labels,
            n_classes,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// Per-feature (min, max) over the rows.
    pub fn feature_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.n_features)
            .map(|j| {
                self.column(j)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .collect()
    }

    pub fn subset(&self, idx: &[usize], split: Split) -> Self {
        let mut features = Vec::with_capacity(idx.len() * self.n_features);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut provenance = self.provenance.clone();
        provenance.split = split;
        Self {
            features,
            n_features: self.n_features,
            labels,
            n_classes: self.n_classes,
            provenance,
        }
    }

    /// Same features with every label replaced by `f(label)`.
    pub fn map_labels(&self, f: impl Fn(usize) -> usize) -> Result<Self> {
        Self::new(
            self.features.clone(),
            self.n_features,
            self.labels.iter().map(|&y| f(y)).collect(),
            self.n_classes,
            self.provenance.clone(),
        )
    }

    /// Writes `f0,..,f{d-1},label` CSV with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.n_features).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, y) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn synthetic_provenance(source: &str, seed: Option<u64>) -> Provenance {
    Provenance {
        source: source.into(),
        split: Split::Full,
        preprocessing: Vec::new(),
        seed,
    }
}

/// Two interleaving half circles of radius 1, one per class, scaled into
/// [-2, 2] x [-1, 1] and perturbed by Gaussian noise of standard deviation
/// `noise_std`. Classes alternate so the counts differ by at most one.
pub fn gen_two_moons<R: Rng + ?Sized>(n: usize, noise_std: f64, rng: &mut R) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::domain("gen_two_moons", "need at least two points"));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::domain("gen_two_moons", "noise must be non-negative"));
    }
    let scale = 4.0 / 3.0;
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let t = rng.random::<f64>() * std::f64::consts::PI;
        let (x, y) = if label == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        // centre the union [-1, 2] x [-0.5, 1] on the origin
        let (mut x, mut y) = ((x - 0.5) * scale, (y - 0.25) * scale);
        if noise_std > 0.0 {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            x += noise_std * zx;
            y += noise_std * zy;
        }
        features.push(x);
        features.push(y);
        labels.push(label);
    }
    Dataset::new(features, 2, labels, 2, synthetic_provenance("two_moons", None))
}

/// Two Gaussians N([-1, 0], diag(0.1, 1)) (class 0) and N([1, 0], diag(0.1, 1)) (class 1).
pub fn gen_two_gaussians<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::domain("gen_two_gaussians", "need at least two points"));
    }
    let sd_x = 0.1_f64.sqrt();
    let mut features = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i < n / 2 { 0 } else { 1 };
        let mean_x = if label == 0 { -1.0 } else { 1.0 };
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        features.push(mean_x + sd_x * zx);
        features.push(zy);
        labels.push(label);
    }
    Dataset::new(features, 2, labels, 2, synthetic_provenance("two_gaussians", None))
}

/// Adds i.i.d. N(0, sigma2) noise to every input coordinate.
pub fn add_input_noise<R: Rng + ?Sized>(data: &Dataset, sigma2: f64, rng: &mut R) -> Result<Dataset> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::domain("add_input_noise", "variance must be non-negative"));
    }
    let mut out = data.clone();
    if sigma2 > 0.0 {
        let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::domain("add_input_noise", e.to_string()))?;
        for v in out.features.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    out.provenance.preprocessing.push(format!("input_noise(sigma2={sigma2})"));
    Ok(out)
}

/// Random partition into train / test of sizes ⌈train_frac·n⌉ and the rest.
pub fn train_test_split<R: Rng + ?Sized>(data: &Dataset, train_frac: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(Error::domain("train_test_split", "fraction outside [0, 1]"));
    }
    let n = data.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_train = ((train_frac * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let (tr, te) = idx.split_at(n_train.min(n));
    Ok((data.subset(tr, Split::Train), data.subset(te, Split::Test)))
}

/// Column means and standard deviations estimated on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub const MIN_STD: f64 = 1e-12;

    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training split"));
        }
        let n = train.len() as f64;
        let d = train.n_features();
        let mut mean = vec![0.0; d];
        for row in train.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in train.rows() {
            for j in 0..d {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    /// z-scores `data` with the fitted statistics.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: data.n_features(),
            });
        }
        let mut out = data.clone();
        let d = data.n_features();
        for (k, v) in out.features.iter_mut().enumerate() {
            let j = k % d;
            *v = (*v - self.mean[j]) / self.std[j].max(Self::MIN_STD);
        }
        out.provenance.preprocessing.push("zscore(train statistics)".into());
        Ok(out)
    }
}

/// Fits the standardizer on `train` and applies it to both splits.
pub fn preprocess(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, Standardizer)> {
    let s = Standardizer::fit(train)?;
    Ok((s.apply(train)?, s.apply(test)?, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TabularFormat {
    Csv,
    Libsvm,
}

/// CSV layout options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Label column; negative values count from the end (-1 is the last column).
    pub label_column: i64,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: false,
            label_column: -1,
        }
    }
}

/// Ordinal encoder for one categorical column. Unseen categories map to
/// [`OrdinalEncoder::UNSEEN`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrdinalEncoder {
    pub categories: Vec<String>,
}

impl OrdinalEncoder {
    pub const UNSEEN: f64 = -1.0;

    pub fn fit<'a>(values: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = values.into_iter().collect();
        Self {
            categories: set.into_iter().map(String::from).collect(),
        }
    }

    pub fn encode(&self, value: &str) -> f64 {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .map(|i| i as f64)
            .unwrap_or(Self::UNSEEN)
    }
}

/// Encoders learned from one table, reusable on another table with the same layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableEncoding {
    /// Per feature column: `Some` when the column is categorical.
    pub columns: Vec<Option<OrdinalEncoder>>,
    /// Sorted raw label values; the index is the class id.
    pub label_values: Vec<String>,
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn sort_labels(values: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().collect();
    // numeric labels sort numerically, anything else lexicographically
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    v
}

fn read_csv_records(path: &Path, opts: &CsvOptions) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, rec.iter().map(String::from).collect()));
    }
    Ok(out)
}

/// Loads a CSV file, learning the categorical and label encodings from it.
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<(Dataset, TableEncoding)> {
    let records = read_csv_records(path, opts)?;
    let width = records.first().map(|r| r.1.len()).ok_or(Error::Empty("csv file"))?;
    let label_col = resolve_label_column(opts.label_column, width).ok_or_else(|| parse_error(path, 1, "label column out of range"))?;
    let mut columns = Vec::new();
    for c in (0..width).filter(|&c| c != label_col) {
        let numeric = records.iter().all(|(_, r)| r.get(c).map(|v| v.parse::<f64>().is_ok()).unwrap_or(true));
        columns.push(if numeric {
            None
        } else {
            Some(OrdinalEncoder::fit(records.iter().filter_map(|(_, r)| r.get(c).map(String::as_str))))
        });
    }
    let labels: BTreeSet<String> = records.iter().filter_map(|(_, r)| r.get(label_col).cloned()).collect();
    let enc = TableEncoding {
        columns,
        label_values: sort_labels(labels),
    };
    let data = encode_csv_records(path, &records, width, label_col, &enc)?;
    Ok((data, enc))
}

/// Loads a CSV file with encodings learned elsewhere (e.g. on a training file).
pub fn load_csv_with(path: &Path, opts: &CsvOptions, enc: &TableEncoding) -> Result<Dataset> {
    let records = read_csv_records(path, opts)?;
    let width = enc.columns.len() + 1;
    let label_col = resolve_label_column(opts.label_column, width).ok_or_else(|| parse_error(path, 1, "label column out of range"))?;
    encode_csv_records(path, &records, width, label_col, enc)
}

fn resolve_label_column(col: i64, width: usize) -> Option<usize> {
    let c = if col < 0 { width as i64 + col } else { col };
    (0..width as i64).contains(&c).then_some(c as usize)
}

fn encode_csv_records(path: &Path, records: &[(usize, Vec<String>)], width: usize, label_col: usize, enc: &TableEncoding) -> Result<Dataset> {
    let d = width - 1;
    let mut features = Vec::with_capacity(records.len() * d);
    let mut labels = Vec::with_capacity(records.len());
    for (line, rec) in records {
        if rec.len() != width {
            return Err(parse_error(path, *line, format!("expected {width} fields, found {}", rec.len())));
        }
        let mut k = 0;
        for (c, field) in rec.iter().enumerate() {
            if c == label_col {
                let y = enc
                    .label_values
                    .iter()
                    .position(|l| l == field)
                    .ok_or_else(|| parse_error(path, *line, format!("unknown label `{field}`")))?;
                labels.push(y);
                continue;
            }
            let v = match &enc.columns[k] {
                Some(e) => e.encode(field),
                None => {
                    if field.is_empty() {
                        return Err(parse_error(path, *line, format!("missing value in column {c}")));
                    }
                    field
                        .parse::<f64>()
                        .map_err(|_| parse_error(path, *line, format!("non-numeric value `{field}` in column {c}")))?
                }
            };
            features.push(v);
            k += 1;
        }
    }
    if labels.is_empty() {
        return Err(Error::Empty("csv file"));
    }
    Dataset::new(
        features,
        d,
        labels,
        enc.label_values.len().max(2),
        Provenance {
            source: path.display().to_string(),
            split: Split::Full,
            preprocessing: if enc.columns.iter().any(Option::is_some) {
                vec!["ordinal_encode".into()]
            } else {
                Vec::new()
            },
            seed: None,
        },
    )
}

/// Loads a LIBSVM / SVMlight file (`label idx:value ...`, 1-based indices).
/// Absent indices are zeros.
pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0;
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label = parts.next().unwrap().to_string();
        if label.parse::<f64>().is_err() {
            return Err(parse_error(path, ln + 1, format!("invalid label `{label}`")));
        }
        let mut entries = Vec::new();
        for tok in parts {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(path, ln + 1, format!("expected index:value, found `{tok}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_error(path, ln + 1, format!("invalid index `{i}`")))?;
            if i == 0 {
                return Err(parse_error(path, ln + 1, "indices are 1-based"));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| parse_error(path, ln + 1, format!("invalid value `{v}`")))?;
            max_index = max_index.max(i);
            entries.push((i - 1, v));
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::Empty("libsvm file"));
    }
    let label_values = sort_labels(rows.iter().map(|r| r.0.clone()).collect());
    let map: BTreeMap<&str, usize> = label_values.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let d = max_index.max(1);
    let mut features = vec![0.0; rows.len() * d];
    let mut labels = Vec::with_capacity(rows.len());
    for (r, (label, entries)) in rows.iter().enumerate() {
        labels.push(map[label.as_str()]);
        for &(j, v) in entries {
            features[r * d + j] = v;
        }
    }
    Dataset::new(
        features,
        d,
        labels,
        label_values.len().max(2),
        Provenance {
            source: path.display().to_string(),
            split: Split::Full,
            preprocessing: Vec::new(),
            seed: None,
        },
    )
}

/// Loads a tabular file in either supported format.
pub fn load_tabular(path: &Path, format: TabularFormat, csv: &CsvOptions) -> Result<Dataset> {
    match format {
        TabularFormat::Csv => load_csv(path, csv).map(|(d, _)| d),
        TabularFormat::Libsvm => load_libsvm(path),
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use crate::rng;

    #[test]
    fn two_moons_shape_and_balance() {
        let d = gen_two_moons(101, 0.05, &mut rng::stream(1)).unwrap();
        assert_eq!(d.len(), 101);
        assert_eq!(d.n_features(), 2);
        let ones = d.labels().iter().filter(|&&y| y == 1).count();
        assert!((ones as i64 - 50).abs() <= 1);
    }

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let d = gen_two_moons(200, 0.0, &mut rng::stream(2)).unwrap();
        for (row, &y) in d.rows().zip(d.labels()) {
            let x = row[0] * 0.75 + 0.5;
            let z = row[1] * 0.75 + 0.25;
            let r = if y == 0 {
                (x * x + z * z).sqrt()
            } else {
                ((x - 1.0).powi(2) + (z - 0.5).powi(2)).sqrt()
            };
            assert!((r - 1.0).abs() < 1e-12);
            assert!(row[0].abs() <= 2.0 + 1e-12 && row[1].abs() <= 2.0);
        }
    }

    #[test]
    fn two_gaussians_moments() {
        let d = gen_two_gaussians(100_000, &mut rng::stream(3)).unwrap();
        let (mut sx, mut sy, mut k) = (0.0, 0.0, 0.0);
        let mut correct = 0;
        for (row, &y) in d.rows().zip(d.labels()) {
            if y == 0 {
                sx += row[0];
                sy += row[1];
                k += 1.0;
            }
            if (row[0] > 0.0) == (y == 1) {
                correct += 1;
            }
        }
        assert!((sx / k + 1.0).abs() < 0.01 && (sy / k).abs() < 0.02);
        assert!(correct as f64 / d.len() as f64 > 0.99);
        let again = gen_two_gaussians(10, &mut rng::stream(3)).unwrap();
        assert_eq!(again, gen_two_gaussians(10, &mut rng::stream(3)).unwrap());
    }

    #[test]
    fn input_noise_variance() {
        let base = Dataset::new(vec![0.0; 2 * 50_000], 2, vec![0; 50_000], 2, synthetic_provenance("zeros", None)).unwrap();
        let same = add_input_noise(&base, 0.0, &mut rng::stream(1)).unwrap();
        assert_eq!(same.rows().flatten().copied().collect::<Vec<_>>(), vec![0.0; 100_000]);
        let noisy = add_input_noise(&base, 0.3, &mut rng::stream(1)).unwrap();
        let xs: Vec<f64> = noisy.rows().flatten().copied().collect();
        let n = xs.len() as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
        // var of the sample variance of a Gaussian is 2 sigma^4 / n
        assert!((var - 0.3).abs() < 3.0 * (2.0 * 0.09 / n).sqrt());
    }

    #[test]
    fn split_is_partition() {
        let d = gen_two_moons(57, 0.1, &mut rng::stream(4)).unwrap();
        let (tr, te) = train_test_split(&d, 0.8, &mut rng::stream(5)).unwrap();
        assert_eq!(tr.len(), 46);
        assert_eq!(te.len(), 11);
        let mut all: Vec<Vec<u64>> = tr
            .rows()
            .chain(te.rows())
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut orig: Vec<Vec<u64>> = d.rows().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn zscore_uses_train_statistics() {
        let d = gen_two_gaussians(500, &mut rng::stream(6)).unwrap();
        let (tr, te) = train_test_split(&d, 0.8, &mut rng::stream(7)).unwrap();
        let (ztr, zte, _) = preprocess(&tr, &te).unwrap();
        for j in 0..2 {
            let xs: Vec<f64> = ztr.column(j).collect();
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            assert!(m.abs() < 1e-10 && (v - 1.0).abs() < 1e-10);
            let ts: Vec<f64> = zte.column(j).collect();
            let tm = ts.iter().sum::<f64>() / ts.len() as f64;
            assert!(tm.abs() > 1e-10);
        }
        let constant = Dataset::new(vec![3.0, 3.0], 1, vec![0, 1], 2, synthetic_provenance("c", None)).unwrap();
        let z = Standardizer::fit(&constant).unwrap().apply(&constant).unwrap();
        assert!(z.rows().all(|r| r[0] == 0.0));
    }

    #[test]
    fn libsvm_three_lines() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "+1 1:0.5 3:-2").unwrap();
        writeln!(f, "-1 2:1.25").unwrap();
        writeln!(f, "+1 1:1 2:2 3:3 # trailing comment").unwrap();
        let d = load_libsvm(f.path()).unwrap();
        assert_eq!(d.n_features(), 3);
        assert_eq!(d.labels(), &[1, 0, 1]);
        assert_eq!(d.row(0), &[0.5, 0.0, -2.0]);
        assert_eq!(d.row(1), &[0.0, 1.25, 0.0]);
        assert_eq!(d.row(2), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn libsvm_malformed_line_reports_line_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1 1:0.5").unwrap();
        writeln!(f, "0 1-0.5").unwrap();
        match load_libsvm(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_and_categoricals() {
        let d = gen_two_moons(20, 0.1, &mut rng::stream(8)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_tabular(
            f.path(),
            TabularFormat::Csv,
            &CsvOptions {
                has_header: true,
                label_column: -1,
            },
        )
        .unwrap();
        assert_eq!(back.rows().flatten().collect::<Vec<_>>(), d.rows().flatten().collect::<Vec<_>>());
        assert_eq!(back.labels(), d.labels());

        let mut train = tempfile::NamedTempFile::new().unwrap();
        writeln!(train, "red,1.5,yes").unwrap();
        writeln!(train, "blue,2.5,no").unwrap();
        writeln!(train, "red,0.5,no").unwrap();
        let opts = CsvOptions::default();
        let (tr, enc) = load_csv(train.path(), &opts).unwrap();
        assert_eq!(tr.row(0), &[1.0, 1.5]);
        assert_eq!(tr.row(1), &[0.0, 2.5]);
        assert_eq!(tr.labels(), &[1, 0, 0]);
        let mut test = tempfile::NamedTempFile::new().unwrap();
        writeln!(test, "green,1.0,yes").unwrap();
        let te = load_csv_with(test.path(), &opts, &enc).unwrap();
        assert_eq!(te.row(0), &[OrdinalEncoder::UNSEEN, 1.0]);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "1.0,2.0,0").unwrap();
        writeln!(bad, "1.0,0").unwrap();
        match load_csv(bad.path(), &opts) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
