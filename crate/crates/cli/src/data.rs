use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use poseadapt::bench::ingest;
use poseadapt::pose::PoseSequence;

/// An ingested sequence and the file it came from.
pub struct Loaded {
    pub path: PathBuf,
    pub seq: PoseSequence,
}

impl Loaded {
    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

/// CSV files under `path` (or `path` itself), sorted by name.
pub fn csv_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("cannot read data directory {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(poseadapt::Error::Config(format!("no .csv files in {}", path.display())));
    }
    Ok(files)
}

pub fn load_all(path: &Path) -> Result<Vec<Loaded>> {
    csv_files(path)?
        .into_iter()
        .map(|p| {
            let seq = ingest(&p, None)?;
            Ok(Loaded { path: p, seq })
        })
        .collect()
}

/// Keeps sequences whose subject is in `ids`; an empty list keeps all.
pub fn filter_subjects(data: Vec<Loaded>, ids: &[String]) -> Vec<Loaded> {
    if ids.is_empty() {
        return data;
    }
    data.into_iter().filter(|l| ids.contains(&l.seq.subject_id)).collect()
}

pub fn group_by_subject(data: &[Loaded]) -> BTreeMap<String, Vec<&PoseSequence>> {
    let mut groups: BTreeMap<String, Vec<&PoseSequence>> = BTreeMap::new();
    for l in data {
        groups.entry(l.seq.subject_id.clone()).or_default().push(&l.seq);
    }
    groups
}
