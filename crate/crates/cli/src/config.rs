//! Experiment configuration: a flat key/value document merged with CLI flag
//! overrides, validated per task before any computation starts. Unknown keys
//! are rejected outright so typos in sweep scripts surface immediately.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use hyperntf_core::embedding::ManifoldKind;
use hyperntf_core::hypergraph::WeightScheme;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Factorize,
    Unfold,
    ClusterEval,
    GenManifold,
    Convert,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Factorize => "factorize",
            Task::Unfold => "unfold",
            Task::ClusterEval => "cluster-eval",
            Task::GenManifold => "gen-manifold",
            Task::Convert => "convert",
        }
    }
}

impl FromStr for Task {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "factorize" => Ok(Task::Factorize),
            "unfold" => Ok(Task::Unfold),
            "cluster-eval" => Ok(Task::ClusterEval),
            "gen-manifold" => Ok(Task::GenManifold),
            "convert" => Ok(Task::Convert),
            other => Err(CliError::Config(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    HyperNtf,
    Ntf,
    Ntd,
    Hosvd,
    HypergraphLe,
    GraphLe,
    Lle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::HyperNtf => "hyperntf",
            Method::Ntf => "ntf",
            Method::Ntd => "ntd",
            Method::Hosvd => "hosvd",
            Method::HypergraphLe => "hypergraph-le",
            Method::GraphLe => "graph-le",
            Method::Lle => "lle",
        }
    }

    pub fn is_factorization(&self) -> bool {
        matches!(
            self,
            Method::HyperNtf | Method::Ntf | Method::Ntd | Method::Hosvd
        )
    }

    pub fn is_embedding(&self) -> bool {
        !self.is_factorization()
    }
}

impl FromStr for Method {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "hyperntf" => Ok(Method::HyperNtf),
            "ntf" => Ok(Method::Ntf),
            "ntd" => Ok(Method::Ntd),
            "hosvd" => Ok(Method::Hosvd),
            "hypergraph-le" => Ok(Method::HypergraphLe),
            "graph-le" => Ok(Method::GraphLe),
            "lle" => Ok(Method::Lle),
            other => Err(CliError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Every experiment field, all optional until task validation fills or
/// rejects them.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub method: Option<Method>,
    pub rank: Option<usize>,
    pub ranks: Option<Vec<usize>>,
    pub lambda: Option<f64>,
    pub knn: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol_obj: Option<f64>,
    pub tol_rse: Option<f64>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub output: Option<PathBuf>,
    pub kind: Option<ManifoldKind>,
    pub samples: Option<usize>,
    pub noise_sd: Option<f64>,
    pub weight_scheme: Option<WeightScheme>,
    pub limit: Option<usize>,
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Config(format!("bad value for `{key}`: {e}")))
}

impl ExperimentConfig {
    /// Parse the key/value config document. Lines are `key = value`; `#`
    /// starts a comment; unknown keys are errors.
    pub fn from_document(text: &str) -> Result<Self, CliError> {
        let mut config = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_document(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "task" => self.task = Some(value.parse()?),
            "input" => self.input = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "images" => self.images = Some(PathBuf::from(value)),
            "method" => self.method = Some(value.parse()?),
            "rank" => self.rank = Some(parse_field(key, value)?),
            "ranks" => {
                let ranks: Result<Vec<usize>, _> = value
                    .split(',')
                    .map(|s| parse_field::<usize>("ranks", s.trim()))
                    .collect();
                self.ranks = Some(ranks?);
            }
            "lambda" => self.lambda = Some(parse_field(key, value)?),
            "knn" => self.knn = Some(parse_field(key, value)?),
            "max_iter" => self.max_iter = Some(parse_field(key, value)?),
            "tol_obj" => self.tol_obj = Some(parse_field(key, value)?),
            "tol_rse" => self.tol_rse = Some(parse_field(key, value)?),
            "seed" => self.seed = Some(parse_field(key, value)?),
            "runs" => self.runs = Some(parse_field(key, value)?),
            "output" => self.output = Some(PathBuf::from(value)),
            "kind" => {
                self.kind = Some(
                    value
                        .parse::<ManifoldKind>()
                        .map_err(|e| CliError::Config(e.to_string()))?,
                )
            }
            "samples" => self.samples = Some(parse_field(key, value)?),
            "noise_sd" => self.noise_sd = Some(parse_field(key, value)?),
            "weight_scheme" => {
                self.weight_scheme = Some(
                    value
                        .parse::<WeightScheme>()
                        .map_err(|e| CliError::Config(e.to_string()))?,
                )
            }
            "limit" => self.limit = Some(parse_field(key, value)?),
            other => {
                return Err(CliError::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Overlay non-empty fields of `other` (CLI flags win over the file).
    pub fn merge_overrides(&mut self, other: ExperimentConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            task, input, labels, images, method, rank, ranks, lambda, knn, max_iter, tol_obj,
            tol_rse, seed, runs, output, kind, samples, noise_sd, weight_scheme, limit
        );
    }

    pub fn require<T: Clone>(field: &Option<T>, name: &str) -> Result<T, CliError> {
        field
            .clone()
            .ok_or_else(|| CliError::Config(format!("missing required field `{name}`")))
    }

    /// Range checks shared by every task; runs before any computation.
    pub fn validate_ranges(&self) -> Result<(), CliError> {
        if let Some(rank) = self.rank {
            if rank < 1 {
                return Err(CliError::Config("rank must be at least 1".into()));
            }
        }
        if let Some(ranks) = &self.ranks {
            if ranks.is_empty() || ranks.iter().any(|&r| r < 1) {
                return Err(CliError::Config("ranks must all be at least 1".into()));
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(CliError::Config("lambda must be nonnegative".into()));
            }
        }
        if let Some(k) = self.knn {
            if k < 1 {
                return Err(CliError::Config("knn must be at least 1".into()));
            }
        }
        if let Some(i) = self.max_iter {
            if i < 1 {
                return Err(CliError::Config("max_iter must be at least 1".into()));
            }
        }
        for (name, v) in [("tol_obj", self.tol_obj), ("tol_rse", self.tol_rse)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(CliError::Config(format!("{name} must be positive")));
                }
            }
        }
        if let Some(r) = self.runs {
            if r < 1 {
                return Err(CliError::Config("runs must be at least 1".into()));
            }
        }
        if let Some(n) = self.noise_sd {
            if !(n >= 0.0) {
                return Err(CliError::Config("noise_sd must be nonnegative".into()));
            }
        }
        if let Some(m) = self.samples {
            if m < 4 {
                return Err(CliError::Config("samples must be at least 4".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_document_and_rejects_unknown_keys() {
        let config = ExperimentConfig::from_document(
            "# comment\ntask = factorize\nmethod = hyperntf\nrank = 3\nlambda = 4\nranks = 2, 3, 4\n",
        )
        .unwrap();
        assert_eq!(config.task, Some(Task::Factorize));
        assert_eq!(config.method, Some(Method::HyperNtf));
        assert_eq!(config.rank, Some(3));
        assert_eq!(config.ranks, Some(vec![2, 3, 4]));

        let err = ExperimentConfig::from_document("rnak = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("rnak"));
    }

    #[test]
    fn overrides_win() {
        let mut base = ExperimentConfig::from_document("rank = 3\nseed = 1\n").unwrap();
        let over = ExperimentConfig::from_document("rank = 9\n").unwrap();
        base.merge_overrides(over);
        assert_eq!(base.rank, Some(9));
        assert_eq!(base.seed, Some(1));
    }

    #[test]
    fn range_validation() {
        let config = ExperimentConfig::from_document("rank = 0\n");
        assert!(config.is_ok());
        assert!(config.unwrap().validate_ranges().is_err());

        let config = ExperimentConfig::from_document("tol_obj = 0\n").unwrap();
        assert!(config.validate_ranges().is_err());

        let config = ExperimentConfig::from_document("lambda = -2\n").unwrap();
        assert!(config.validate_ranges().is_err());
    }
}
