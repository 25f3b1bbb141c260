use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::CorrectorConfig;
use crate::metrics::Metric;
use crate::personalize::BankConfig;
use crate::pose::Representation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Every frame is fed to the predictors in order and state is carried
    /// across anchors.
    Streaming,
    /// Each anchor is an independent task that sees only its `M` frames.
    Legacy,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Streaming => "streaming",
            EvalMode::Legacy => "legacy",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "streaming" => Ok(EvalMode::Streaming),
            "legacy" => Ok(EvalMode::Legacy),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected streaming or legacy)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Default for Split {
    fn default() -> Self {
        let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            train: ids(&["1", "6", "7", "9"]),
            val: ids(&["11"]),
            test: ids(&["5"]),
        }
    }
}

impl Split {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (part, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for id in ids {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Config(format!(
                        "subject {id:?} appears in more than one split (again in {part})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Evaluation protocol settings, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub observe_frames: usize,
    pub predict_frames: usize,
    pub fps: f64,
    pub representation: Representation,
    pub split: Split,
    pub anchor_stride: usize,
    pub seed: u64,
    pub mode: EvalMode,
    /// Metrics to report; empty means the natural metric of the representation.
    pub metrics: Vec<Metric>,
    pub corrector: CorrectorConfig,
    pub bank: BankConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            observe_frames: 10,
            predict_frames: 25,
            fps: 25.0,
            representation: Representation::Expmap,
            split: Split::default(),
            anchor_stride: 1,
            seed: 0,
            mode: EvalMode::Streaming,
            metrics: Vec::new(),
            corrector: CorrectorConfig::default(),
            bank: BankConfig::default(),
        }
    }
}

/// The metric used for a representation when none is configured.
pub fn default_metric(representation: Representation) -> Metric {
    match representation {
        Representation::PositionsCm => Metric::Mpje,
        Representation::Expmap => Metric::Mea,
        Representation::Raw => Metric::Mse,
    }
}

impl ProtocolConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.observe_frames == 0 || self.predict_frames == 0 {
            return Err(Error::Config(format!(
                "observe_frames and predict_frames must be >= 1 (got {} and {})",
                self.observe_frames, self.predict_frames
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be > 0, got {}", self.fps)));
        }
        if self.anchor_stride == 0 {
            return Err(Error::Config("anchor_stride must be >= 1".into()));
        }
        let g = self.corrector.forgetting;
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::Config(format!(
                "corrector forgetting must be in (0, 1], got {g}"
            )));
        }
        if self.corrector.order == 0 {
            return Err(Error::Config("corrector order must be >= 1".into()));
        }
        self.split.validate()
    }

    /// Configured metrics, or the default for the representation.
    pub fn effective_metrics(&self) -> Vec<Metric> {
        if self.metrics.is_empty() {
            vec![default_metric(self.representation)]
        } else {
            self.metrics.clone()
        }
    }

    /// Number of anchors a sequence of `len` frames yields.
    pub fn anchor_count(&self, len: usize) -> usize {
        let need = self.observe_frames + self.predict_frames;
        if len < need {
            0
        } else {
            (len - need) / self.anchor_stride + 1
        }
    }
}
