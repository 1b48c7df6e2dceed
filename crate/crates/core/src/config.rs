//! Study configuration documents: a medium block plus one task and its
//! parameters. Validated in full before anything is solved.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bloch::Solver;
use crate::error::{Error, Result};
use crate::medium::{ContrastMedium, MediumSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spectrum,
    Limit,
    Dispersion,
    Converge,
    Validate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverSpec {
    #[default]
    Grid,
    Exact,
}

impl From<SolverSpec> for Solver {
    fn from(s: SolverSpec) -> Solver {
        match s {
            SolverSpec::Grid => Solver::Grid,
            SolverSpec::Exact => Solver::Exact,
        }
    }
}

fn default_lambda_max() -> f64 {
    200.0
}

fn default_count() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub medium: MediumSpec,
    pub task: Task,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Eigenpairs per spectrum / branches per k.
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    /// One Bloch vector per entry (scalars allowed in 1D).
    #[serde(default)]
    pub k_grid: Vec<KSpec>,
    #[serde(default)]
    pub refinements: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Eigenfunction sample count for exact 1D traces (0: none).
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl KSpec {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            KSpec::Scalar(k) => vec![*k],
            KSpec::Vector(v) => v.clone(),
        }
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn medium(&self) -> Result<ContrastMedium> {
        self.medium.build().map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })
    }

    pub fn k_vectors(&self) -> Vec<Vec<f64>> {
        self.k_grid.iter().map(KSpec::to_vec).collect()
    }

    /// Everything checkable without solving.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.medium()?;
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return bad(format!("lambda_max must be positive, got {}", self.lambda_max));
        }
        if self.count == 0 {
            return bad("count must be >= 1".into());
        }
        if self.eps_list.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("eps_list entries must be finite and >= 0".into());
        }
        if self.refinements.iter().any(|h| !(*h > 0.0)) {
            return bad("refinements must be positive grid spacings".into());
        }
        match self.task {
            Task::Dispersion => {
                if self.k_grid.is_empty() {
                    return bad("dispersion needs a nonempty k_grid".into());
                }
                if self.eps_list.is_empty() {
                    return bad("dispersion needs a nonempty eps_list".into());
                }
            }
            Task::Converge => {
                if self.eps_list.len() < 4 {
                    return bad("converge needs at least 4 epsilon values".into());
                }
                let mut eps = self.eps_list.clone();
                eps.sort_by(|a, b| b.total_cmp(a));
                crate::studies::check_geometric(&eps).map_err(|e| Error::Config(e.to_string()))?;
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_fields() {
        let ok = r#"{"medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.01, "epsilon": 0.001},
                     "task": "spectrum", "count": 3}"#;
        let cfg = StudyConfig::from_json(ok).unwrap();
        assert_eq!(cfg.task, Task::Spectrum);
        assert_eq!(cfg.lambda_max, 200.0);
        let bad = ok.replace("\"count\": 3", "\"cuont\": 3");
        assert!(matches!(StudyConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn converge_needs_four_points() {
        let s = r#"{"medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.01},
                    "task": "converge", "eps_list": [0.01, 0.005, 0.0025]}"#;
        assert!(StudyConfig::from_json(s).is_err());
    }
}
