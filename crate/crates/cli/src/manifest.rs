//! Experiment manifests: one TOML file per experiment.
//!
//! ```toml
//! kind = "baseline"        # baseline | weighted | sensitivity | seeding | convergence
//! iterations = 1000000
//! seed = 42
//! partitions = 8           # optional, default 8
//! scaling = 400.0          # optional, default 400
//! seeding = "seeded"       # optional: seeded | unseeded-random
//! season_weights = [0.1, 0.15, 0.2, 0.25, 0.3]   # optional
//! formats = ["pre-2018", "post-2018"]            # bundled names or TOML paths
//! scalings = [400.0, 600.0, 800.0]               # sensitivity only
//! checkpoints = [5000, 10000, 1000000]           # convergence only
//! gs_premium = 10.0        # million euros, optional
//! data = "data/fixtures"   # optional
//! out = "out/baseline"     # optional
//! ```
//!
//! Relative `data`, `out` and format paths are taken from the working
//! directory. Command-line flags override the matching keys.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qualsim::analysis::PrizeSchedule;
use qualsim::bracket::SeedingMode;
use qualsim::elo::Scaling;
use qualsim::mc::{RunConfig, SamplingPolicy, DEFAULT_CHECKPOINTS, RECENT_WEIGHTS};
use qualsim::model::FormatSpec;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PARTITIONS: u32 = 8;
pub const DEFAULT_SCALINGS: [f64; 3] = [400.0, 600.0, 800.0];
pub const DEFAULT_FORMATS: [&str; 2] = ["pre-2018", "post-2018"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Baseline,
    Weighted,
    Sensitivity,
    Seeding,
    Convergence,
}

impl ExperimentKind {
    /// Stem of the report files.
    pub fn stem(self) -> &'static str {
        match self {
            ExperimentKind::Baseline => "baseline",
            ExperimentKind::Weighted => "weighted",
            ExperimentKind::Sensitivity => "sensitivity",
            ExperimentKind::Seeding => "seeding",
            ExperimentKind::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub kind: ExperimentKind,
    pub iterations: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeding: Option<SeedingMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gs_premium: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestError(pub String);

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ManifestError {}

fn invalid(message: impl Into<String>) -> ManifestError {
    ManifestError(message.into())
}

impl FromStr for ExperimentManifest {
    type Err = ManifestError;

    fn from_str(text: &str) -> Result<Self, ManifestError> {
        let manifest: ExperimentManifest = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        manifest.check()?;
        Ok(manifest)
    }
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        text.parse().map_err(|e: ManifestError| invalid(format!("{}: {e}", path.display())))
    }

    /// The manifest re-serialized with keys in a fixed order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("manifests always serialize")
    }

    /// Rejects values that parse but cannot describe a run.
    pub fn check(&self) -> Result<(), ManifestError> {
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1"));
        }
        if self.partitions == Some(0) {
            return Err(invalid("partitions must be at least 1"));
        }
        if let Some(s) = self.scaling {
            Scaling::new(s).map_err(|e| invalid(e.to_string()))?;
        }
        for &s in self.scalings.iter().flatten() {
            Scaling::new(s).map_err(|e| invalid(format!("scalings: {e}")))?;
        }
        if self.scalings.as_ref().is_some_and(Vec::is_empty) {
            return Err(invalid("scalings must not be empty"));
        }
        if let Some(weights) = &self.season_weights {
            SamplingPolicy::weighted(weights.clone()).map_err(|e| invalid(format!("season_weights: {e}")))?;
        }
        if let Some(points) = &self.checkpoints {
            if points.is_empty() || points[0] == 0 || points.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("checkpoints must be positive and strictly ascending"));
            }
        }
        if let Some(g) = self.gs_premium {
            if !(g.is_finite() && g >= 0.0) {
                return Err(invalid("gs_premium must be a non-negative number"));
            }
        }
        if self.formats.as_ref().is_some_and(|f| f.len() < 2) {
            return Err(invalid("formats must list the old and the new format"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> PrizeSchedule {
        let mut schedule = PrizeSchedule::default();
        if let Some(g) = self.gs_premium {
            schedule.gs_premium = g;
        }
        schedule
    }

    pub fn scalings(&self) -> Vec<Scaling> {
        let values = self.scalings.clone().unwrap_or_else(|| DEFAULT_SCALINGS.to_vec());
        values.into_iter().map(|s| Scaling::new(s).expect("checked")).collect()
    }

    /// Checkpoints for a convergence run, ending at `iterations`.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut points: Vec<u64> = match &self.checkpoints {
            Some(points) => points.clone(),
            None => DEFAULT_CHECKPOINTS.to_vec(),
        };
        points.retain(|&p| p < self.iterations);
        points.push(self.iterations);
        points
    }

    pub fn run_config(&self) -> Result<RunConfig, ManifestError> {
        let names: Vec<String> = match &self.formats {
            Some(f) => f.clone(),
            None => DEFAULT_FORMATS.iter().map(|s| s.to_string()).collect(),
        };
        let formats = names
            .iter()
            .map(|name| match FormatSpec::builtin(name) {
                Some(f) => Ok(f),
                None => FormatSpec::from_path(Path::new(name)).map_err(|e| invalid(format!("format {name}: {e}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let weights = match (&self.season_weights, self.kind) {
            (Some(w), _) => w.clone(),
            (None, ExperimentKind::Weighted) => RECENT_WEIGHTS.to_vec(),
            (None, _) => SamplingPolicy::uniform(RECENT_WEIGHTS.len()).weights().to_vec(),
        };
        Ok(RunConfig {
            iterations: self.iterations,
            master_seed: self.seed,
            partitions: self.partitions.unwrap_or(DEFAULT_PARTITIONS),
            scaling: Scaling::new(self.scaling.unwrap_or(400.0)).map_err(|e| invalid(e.to_string()))?,
            seeding: self.seeding.unwrap_or_default(),
            policy: SamplingPolicy::weighted(weights).map_err(|e| invalid(e.to_string()))?,
            formats,
            checkpoints: Vec::new(),
        })
    }
}
