//! Seeded synthetic individuals: a deterministic trend plus per-dimension
//! AR noise, with a manifest of the true parameters.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ingest::write_sequence;
use crate::ar::is_stable;
use crate::error::{Error, Result};
use crate::forecast::{write_predictions_jsonl, ForecastRecord, Source};
use crate::pose::{PoseSequence, Representation};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trend {
    #[default]
    None,
    /// `amplitude · sin(2π t / period)`, `t` in frames.
    Sinusoid {
        amplitude: f64,
        period: f64,
    },
    Linear {
        slope: f64,
    },
}

impl Trend {
    pub fn value(&self, t: usize) -> f64 {
        match *self {
            Trend::None => 0.0,
            Trend::Sinusoid { amplitude, period } => amplitude * (TAU * t as f64 / period).sin(),
            Trend::Linear { slope } => slope * t as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Trend::None => true,
            Trend::Sinusoid { amplitude, period } => amplitude.is_finite() && period.is_finite() && period > 0.0,
            Trend::Linear { slope } => slope.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid trend {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticIndividual {
    pub id: String,
    /// AR coefficients per dimension; an empty list is white noise.
    pub coefficients: Vec<Vec<f64>>,
    #[serde(default)]
    pub trend: Trend,
    /// Innovation standard deviation.
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub individuals: Vec<SyntheticIndividual>,
    pub length: usize,
    pub seed: u64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_sequences")]
    pub sequences_per_individual: usize,
    /// Permit AR polynomials with roots on or inside the unit circle.
    #[serde(default)]
    pub allow_unstable: bool,
}

fn default_fps() -> f64 {
    25.0
}

fn default_sequences() -> usize {
    1
}

/// True parameters written next to the generated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticManifest {
    pub spec: SyntheticSpec,
    pub sequences: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub individual: String,
    pub index: usize,
    pub frames: usize,
    pub dims: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSet {
    pub sequences: Vec<PoseSequence>,
    /// Trend component of each sequence (`T × D`), aligned with `sequences`.
    pub trends: Vec<DMatrix<f64>>,
    pub manifest: SyntheticManifest,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.individuals.is_empty() {
            return Err(Error::Config("synthetic spec has no individuals".into()));
        }
        if self.length == 0 || self.sequences_per_individual == 0 {
            return Err(Error::Config("length and sequences_per_individual must be >= 1".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be > 0, got {}", self.fps)));
        }
        let dims = self.individuals[0].coefficients.len();
        let mut ids = std::collections::BTreeSet::new();
        for ind in &self.individuals {
            if !ids.insert(ind.id.as_str()) {
                return Err(Error::Config(format!("duplicate individual id {:?}", ind.id)));
            }
            if ind.coefficients.is_empty() || ind.coefficients.len() != dims {
                return Err(Error::Config(format!(
                    "individual {}: {} dimensions, expected {dims} (at least 1)",
                    ind.id,
                    ind.coefficients.len()
                )));
            }
            if !(ind.sigma >= 0.0 && ind.sigma.is_finite()) {
                return Err(Error::Config(format!("individual {}: sigma must be >= 0", ind.id)));
            }
            ind.trend.validate()?;
            for (d, c) in ind.coefficients.iter().enumerate() {
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!(
                        "individual {} dim {d}: non-finite coefficient",
                        ind.id
                    )));
                }
                if !self.allow_unstable && !is_stable(c) {
                    return Err(Error::Config(format!(
                        "individual {} dim {d}: AR coefficients {c:?} are not stable (pass allow_unstable to override)",
                        ind.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read synthetic spec {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            _ => Self::from_json_str(&text),
        }
    }
}

/// Simulates `x_t = trend(t) + r_t`, `r_t = Σ a_k r_{t-k} + σ ε_t`, from a
/// zero initial state.
pub fn synth(spec: &SyntheticSpec) -> Result<SyntheticSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let t_len = spec.length;
    let mut sequences = Vec::new();
    let mut trends = Vec::new();
    let mut entries = Vec::new();
    for ind in &spec.individuals {
        let dims = ind.coefficients.len();
        for k in 0..spec.sequences_per_individual {
            let trend = DMatrix::from_fn(t_len, dims, |t, _| ind.trend.value(t));
            let mut noise = DMatrix::<f64>::zeros(t_len, dims);
            for t in 0..t_len {
                for (d, coeffs) in ind.coefficients.iter().enumerate() {
                    let mut v = ind.sigma * normal.sample(&mut rng);
                    for (j, a) in coeffs.iter().enumerate() {
                        if t > j {
                            v += a * noise[(t - j - 1, d)];
                        }
                    }
                    noise[(t, d)] = v;
                }
            }
            if !noise.iter().all(|v| v.is_finite()) {
                return Err(Error::Numerical(format!("individual {}: simulation diverged", ind.id)));
            }
            let frames = &trend + &noise;
            let action = format!("synthetic_{k}");
            let seq = PoseSequence::new(frames, Representation::Raw, spec.fps, ind.id.clone(), action, vec![])?;
            entries.push(ManifestEntry {
                file: format!("{}_{k}.csv", ind.id),
                individual: ind.id.clone(),
                index: k,
                frames: t_len,
                dims,
            });
            sequences.push(seq);
            trends.push(trend);
        }
    }
    Ok(SyntheticSet {
        sequences,
        trends,
        manifest: SyntheticManifest {
            spec: spec.clone(),
            sequences: entries,
        },
    })
}

/// Forecasts of the trend alone, one record per anchor `M-1..T-N-1`.
pub fn trend_predictions(trend: &DMatrix<f64>, observe: usize, horizon: usize) -> Result<Vec<ForecastRecord>> {
    let t_len = trend.nrows();
    if observe == 0 || horizon == 0 || t_len < observe + horizon {
        return Ok(Vec::new());
    }
    (observe - 1..t_len - horizon)
        .map(|a| ForecastRecord::new(a, trend.rows(a + 1, horizon).into_owned(), Source::Base))
        .collect()
}

impl SyntheticSet {
    /// Writes each sequence as CSV + sidecar and `manifest.json`; with
    /// `trend_horizon = Some((M, N))` also `<stem>.trend.jsonl` files.
    pub fn save(&self, dir: impl AsRef<Path>, trend_horizon: Option<(usize, usize)>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        let mut written = Vec::new();
        for ((seq, trend), entry) in self.sequences.iter().zip(&self.trends).zip(&self.manifest.sequences) {
            let stem = entry.file.trim_end_matches(".csv");
            written.push(write_sequence(dir, stem, seq)?);
            if let Some((m, n)) = trend_horizon {
                let path = dir.join(format!("{stem}.trend.jsonl"));
                write_predictions_jsonl(&path, &trend_predictions(trend, m, n)?)?;
                written.push(path);
            }
        }
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self.manifest)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(written)
    }
}
