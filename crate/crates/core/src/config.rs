//! Run configuration: one TOML file per run, every field defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundFamily, DEFAULT_DELTA};
use crate::data::TabularFormat;
use crate::error::{Error, Result};
use crate::optimizer::OptimizerConfig;
use crate::risk::{DEFAULT_DRAWS, DEFAULT_SLOPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mc,
    Fo,
    So,
    Bin,
    /// Empirical risk only, no KL term (ablation).
    RiskOnly,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Exact, Method::Mc, Method::Fo, Method::So, Method::Bin, Method::RiskOnly];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Mc => "mc",
            Method::Fo => "fo",
            Method::So => "so",
            Method::Bin => "bin",
            Method::RiskOnly => "risk_only",
        }
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, Method::Exact | Method::Mc | Method::RiskOnly)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    TwoMoons,
    TwoGaussians,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Synthetic training size.
    pub n_train: usize,
    /// Synthetic test size.
    pub n_test: usize,
    /// Two-moons coordinate noise (standard deviation).
    pub noise: f64,
    /// Extra N(0, sigma2) input noise on both splits.
    pub sigma2: f64,
    pub path: Option<PathBuf>,
    /// Separate test file; otherwise `path` is split randomly.
    pub test_path: Option<PathBuf>,
    pub format: TabularFormat,
    pub has_header: bool,
    pub label_column: i64,
    pub train_fraction: f64,
    pub standardize: bool,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            kind: DatasetKind::TwoMoons,
            n_train: 1000,
            n_test: 1000,
            noise: 0.05,
            sigma2: 0.0,
            path: None,
            test_path: None,
            format: TabularFormat::Csv,
            has_header: false,
            label_column: -1,
            train_fraction: 0.8,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoterKind {
    Stumps,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoterSpec {
    pub kind: VoterKind,
    pub thresholds_per_feature: usize,
    /// Stump range used for every feature. Defaults to [-2, 2] for synthetic
    /// data and to the training-split range of each feature for files.
    pub range: Option<(f64, f64)>,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
}

impl Default for VoterSpec {
    fn default() -> Self {
        Self {
            kind: VoterKind::Stumps,
            thresholds_per_feature: 10,
            range: None,
            n_trees: 100,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSpec {
    /// Concentration of the uniform Dirichlet prior.
    pub beta: f64,
    pub bound: BoundFamily,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            beta: 1.0,
            bound: BoundFamily::Uninformed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSpec {
    pub draws: usize,
    pub slope: f64,
}

impl Default for McSpec {
    fn default() -> Self {
        Self {
            draws: DEFAULT_DRAWS,
            slope: DEFAULT_SLOPE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinomialSpec {
    pub draws: usize,
}

impl Default for BinomialSpec {
    fn default() -> Self {
        Self { draws: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub method: Method,
    pub delta: f64,
    pub dataset: DatasetSpec,
    pub voters: VoterSpec,
    pub prior: PriorSpec,
    pub optimizer: OptimizerConfig,
    pub mc: McSpec,
    pub binomial: BinomialSpec,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            method: Method::Exact,
            delta: DEFAULT_DELTA,
            dataset: DatasetSpec::default(),
            voters: VoterSpec::default(),
            prior: PriorSpec::default(),
            optimizer: OptimizerConfig::default(),
            mc: McSpec::default(),
            binomial: BinomialSpec::default(),
            output: None,
        }
    }
}

fn toml_error(e: toml::de::Error) -> Error {
    let field = e.message().split('`').nth(1).map(String::from).unwrap_or_else(|| "<file>".into());
    Error::config(field, e.message().trim().to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_value(text.parse::<toml::Table>().map_err(toml_error)?)
    }

    pub fn from_toml_value(table: toml::Table) -> Result<Self> {
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Loads `path` (or the defaults) and applies `key.path=value` overrides.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::config("config", format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(toml_error)?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_toml_value(table)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(field, msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", "must lie in (0, 1)");
        }
        // TOML integers are signed 64-bit
        if i64::try_from(self.seed).is_err() {
            return bad("seed", "must fit in a signed 64-bit integer");
        }
        let d = &self.dataset;
        match d.kind {
            DatasetKind::TwoMoons | DatasetKind::TwoGaussians => {
                if d.n_train < 2 {
                    return bad("dataset.n_train", "need at least 2 points");
                }
                if d.n_test < 2 {
                    return bad("dataset.n_test", "need at least 2 points");
                }
            }
            DatasetKind::File => {
                let Some(p) = &d.path else {
                    return bad("dataset.path", "required when kind = \"file\"");
                };
                if !p.exists() {
                    return Err(Error::config("dataset.path", format!("{} does not exist", p.display())));
                }
                if let Some(t) = &d.test_path {
                    if !t.exists() {
                        return Err(Error::config("dataset.test_path", format!("{} does not exist", t.display())));
                    }
                }
                if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
                    return bad("dataset.train_fraction", "must lie in (0, 1)");
                }
            }
        }
        if !(d.noise >= 0.0) {
            return bad("dataset.noise", "must be non-negative");
        }
        if !(d.sigma2 >= 0.0) {
            return bad("dataset.sigma2", "must be non-negative");
        }
        let v = &self.voters;
        match v.kind {
            VoterKind::Stumps => {
                if v.thresholds_per_feature == 0 {
                    return bad("voters.thresholds_per_feature", "must be positive");
                }
                if let Some((lo, hi)) = v.range {
                    if !(lo < hi) {
                        return bad("voters.range", "need min < max");
                    }
                }
            }
            VoterKind::Forest => {
                if v.n_trees == 0 {
                    return bad("voters.n_trees", "must be positive");
                }
                if v.max_depth == Some(0) {
                    return bad("voters.max_depth", "must be positive");
                }
            }
        }
        if !(self.prior.beta > 0.0 && self.prior.beta.is_finite()) {
            return bad("prior.beta", "must be positive");
        }
        if self.prior.bound == BoundFamily::Informed {
            if v.kind != VoterKind::Forest {
                return bad("prior.bound", "the informed bound needs two voter sets trained on the data halves (voters.kind = \"forest\")");
            }
            if !matches!(self.method, Method::Exact | Method::Mc) {
                return bad("prior.bound", "the informed bound is available for the exact and mc methods");
            }
        }
        if self.mc.draws == 0 {
            return bad("mc.draws", "must be positive");
        }
        if !(self.mc.slope > 0.0) {
            return bad("mc.slope", "must be positive");
        }
        if self.binomial.draws == 0 || self.binomial.draws % 2 != 0 {
            return bad("binomial.draws", "must be even and positive");
        }
        self.optimizer.validate()
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // reuse the TOML grammar for numbers, booleans, arrays; fall back to a string
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key.path=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty key segment"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(RunConfig::from_toml_str("").unwrap(), cfg);
    }

    #[test]
    fn overrides_and_field_paths() {
        let cfg = RunConfig::load_with_overrides(
            None,
            &["method=fo".into(), "voters.thresholds_per_feature=4".into(), "optimizer.learning_rate=0.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.method, Method::Fo);
        assert_eq!(cfg.voters.thresholds_per_feature, 4);
        assert_eq!(cfg.optimizer.learning_rate, 0.5);
        match RunConfig::load_with_overrides(None, &["prior.beta=-1".into()]) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "prior.beta"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[voters]\nthresholds = 3\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "thresholds"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[prior]\nbound = \"informed\"\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "prior.bound"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[dataset]\nkind = \"file\"\npath = \"/does/not/exist\"\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "dataset.path"),
            other => panic!("{other:?}"),
        }
    }
}
