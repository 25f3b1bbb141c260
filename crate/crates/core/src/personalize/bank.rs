use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ar::{bic_order_select, fit_ar_batch, ArModel, LaggedSeries, DEFAULT_RIDGE};
use crate::error::{Error, Result};
use crate::pose::Representation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankConfig {
    pub max_order: usize,
    pub forgetting: f64,
    /// Skip BIC and use this order for every channel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_order: Option<usize>,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            max_order: 5,
            forgetting: 1.0,
            fixed_order: None,
        }
    }
}

/// One AR model per dimension for each known individual.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBank {
    pub dims: usize,
    pub fps: f64,
    pub representation: Representation,
    pub individuals: BTreeMap<String, Vec<ArModel>>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    #[serde(rename = "D")]
    dims: usize,
    fps: f64,
    representation: Representation,
}

/// Training data for one individual: one or more `T × D` recordings.
pub type IndividualData = Vec<DMatrix<f64>>;

/// Fits an AR model to the mean-removed channel. With `order = None` the
/// order is chosen by BIC up to `config.max_order`. A constant channel gives
/// an order-0 model with zero variance.
pub fn fit_channel(series: &LaggedSeries, order: Option<usize>, config: &BankConfig) -> Result<ArModel> {
    let mean = series.mean();
    let centered = series.shifted(mean);
    let order = match order {
        Some(p) => p,
        None => bic_order_select(&centered, config.max_order, config.forgetting)?.order,
    };
    if order == 0 {
        let m = fit_ar_batch(&centered, 0, config.forgetting, 0.0)?;
        return Ok(ArModel::zero_order(m.innovation_variance, mean));
    }
    if centered.max_segment_len() <= order {
        return Err(Error::InvalidInput(format!(
            "sequence of {} frames is too short for order {order}",
            centered.max_segment_len()
        )));
    }
    Ok(fit_ar_batch(&centered, order, config.forgetting, DEFAULT_RIDGE)?.with_mean(mean))
}

fn channel(data: &IndividualData, d: usize) -> Result<LaggedSeries> {
    LaggedSeries::from_segments(data.iter().map(|m| m.column(d).iter().copied().collect()).collect())
}

/// BIC order selection (unless `config.fixed_order` is set) then a
/// closed-form fit, per individual and dimension.
pub fn train_bank(
    groups: &BTreeMap<String, IndividualData>,
    fps: f64,
    representation: Representation,
    config: &BankConfig,
) -> Result<ModelBank> {
    let dims = groups
        .values()
        .flat_map(|seqs| seqs.first())
        .map(|m| m.ncols())
        .next()
        .ok_or_else(|| Error::InvalidInput("model bank needs at least one individual with data".into()))?;
    for (id, seqs) in groups {
        if seqs.is_empty() {
            return Err(Error::InvalidInput(format!("individual {id} has no sequences")));
        }
        if let Some(m) = seqs.iter().find(|m| m.ncols() != dims) {
            return Err(Error::InvalidInput(format!(
                "individual {id}: sequence with {} dimensions, expected {dims}",
                m.ncols()
            )));
        }
    }
    let jobs: Vec<(&String, usize)> = groups.keys().flat_map(|id| (0..dims).map(move |d| (id, d))).collect();
    let fitted: Vec<ArModel> = jobs
        .par_iter()
        .map(|(id, d)| fit_channel(&channel(&groups[*id], *d)?, config.fixed_order, config))
        .collect::<Result<_>>()?;
    let mut individuals = BTreeMap::new();
    for (chunk, id) in fitted.chunks(dims).zip(groups.keys()) {
        individuals.insert(id.clone(), chunk.to_vec());
    }
    Ok(ModelBank {
        dims,
        fps,
        representation,
        individuals,
    })
}

impl ModelBank {
    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.individuals.keys()
    }

    pub fn get(&self, id: &str) -> Option<&[ArModel]> {
        self.individuals.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn parameter_count(&self) -> usize {
        self.individuals.values().flatten().map(|m| m.order).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.individuals.is_empty() {
            return Err(Error::Schema("model bank is empty".into()));
        }
        for (id, models) in &self.individuals {
            if models.len() != self.dims {
                return Err(Error::Schema(format!(
                    "individual {id} has {} models, bank has D = {}",
                    models.len(),
                    self.dims
                )));
            }
            for m in models {
                m.validate()?;
            }
        }
        Ok(())
    }

    /// Writes `<dir>/<id>/dim_<k>.json` and `<dir>/<id>/manifest.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (id, models) in &self.individuals {
            let sub = dir.join(id);
            std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            let manifest = Manifest {
                dims: self.dims,
                fps: self.fps,
                representation: self.representation,
            };
            let path = sub.join("manifest.json");
            std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
            for (k, m) in models.iter().enumerate() {
                m.save(sub.join(format!("dim_{k}.json")))?;
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.join("manifest.json").is_file())
            .collect();
        entries.sort();
        let mut bank: Option<ModelBank> = None;
        for sub in entries {
            let id = sub
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let path = sub.join("manifest.json");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let manifest: Manifest = serde_json::from_str(&text)?;
            let models = (0..manifest.dims)
                .map(|k| ArModel::load(sub.join(format!("dim_{k}.json"))))
                .collect::<Result<Vec<_>>>()?;
            let b = bank.get_or_insert_with(|| ModelBank {
                dims: manifest.dims,
                fps: manifest.fps,
                representation: manifest.representation,
                individuals: BTreeMap::new(),
            });
            if b.dims != manifest.dims || b.representation != manifest.representation {
                return Err(Error::Schema(format!(
                    "individual {id}: manifest disagrees with other bank entries"
                )));
            }
            b.individuals.insert(id, models);
        }
        let bank = bank.ok_or_else(|| Error::Schema(format!("no model bank entries in {}", dir.display())))?;
        bank.validate()?;
        Ok(bank)
    }
}
