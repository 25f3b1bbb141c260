//! Windowed forecast evaluation over pose sequences.
//!
//! Anchor `a` is the index of the last observed frame. A sequence of `T`
//! frames yields anchors `M-1, M-1+s, …` up to `T-N-1`, i.e.
//! `⌊(T - M - N) / s⌋ + 1` of them. Predictions read frames only through a
//! [`FrameSource`]; scoring reads the ground truth separately.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::rc::Rc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EvalMode, ProtocolConfig};
use crate::error::{Error, Result};
use crate::forecast::{Predictor, ResidualCorrector};
use crate::metrics::{aggregate_objective, metric_space, per_step_errors, ErrorCurve, Metric};
use crate::pose::PoseSequence;

pub const BASE: &str = "base";
pub const CORRECTED: &str = "corrected";

/// Read access to frames for forming predictions.
pub trait FrameSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dims(&self) -> usize;

    fn frame(&self, t: usize) -> Vec<f64>;

    /// The `m` frames ending at `end` (inclusive).
    fn window(&self, end: usize, m: usize) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = (end + 1 - m..=end).map(|t| self.frame(t)).collect();
        DMatrix::from_fn(m, self.dims(), |r, c| rows[r][c])
    }

    /// Highest frame index read so far, when the source tracks it.
    fn max_read(&self) -> Option<usize> {
        None
    }
}

impl FrameSource for DMatrix<f64> {
    fn len(&self) -> usize {
        self.nrows()
    }

    fn dims(&self) -> usize {
        self.ncols()
    }

    fn frame(&self, t: usize) -> Vec<f64> {
        self.row(t).iter().copied().collect()
    }

    fn window(&self, end: usize, m: usize) -> DMatrix<f64> {
        self.rows(end + 1 - m, m).into_owned()
    }
}

/// Shared record of every frame index read through an [`InstrumentedSource`].
#[derive(Clone, Debug, Default)]
pub struct AccessLog(Rc<RefCell<Vec<usize>>>);

impl AccessLog {
    pub fn reads(&self) -> Vec<usize> {
        self.0.borrow().clone()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.borrow().iter().copied().max()
    }
}

/// A frame source that logs each access.
pub struct InstrumentedSource<'a> {
    inner: &'a DMatrix<f64>,
    log: AccessLog,
}

impl<'a> InstrumentedSource<'a> {
    pub fn new(inner: &'a DMatrix<f64>) -> Self {
        Self {
            inner,
            log: AccessLog::default(),
        }
    }

    pub fn log(&self) -> AccessLog {
        self.log.clone()
    }
}

impl FrameSource for InstrumentedSource<'_> {
    fn len(&self) -> usize {
        self.inner.nrows()
    }

    fn dims(&self) -> usize {
        self.inner.ncols()
    }

    fn frame(&self, t: usize) -> Vec<f64> {
        self.log.0.borrow_mut().push(t);
        self.inner.row(t).iter().copied().collect()
    }

    fn max_read(&self) -> Option<usize> {
        self.log.max()
    }
}

/// One scored anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorLogEntry {
    pub subject: String,
    pub action: String,
    pub anchor: usize,
    /// Highest frame read before this anchor's forecasts were formed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_frame_read: Option<usize>,
    /// variant → metric → per-step errors.
    pub errors: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub subject: String,
    pub action: String,
    pub frames: usize,
    pub anchors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedSequence {
    pub subject: String,
    pub action: String,
    pub frames: usize,
    pub reason: String,
}

/// Curves keyed by variant, then metric name.
pub type CurveTable = BTreeMap<String, BTreeMap<String, ErrorCurve>>;

#[derive(Clone, Debug)]
pub struct SequenceOutcome {
    pub summary: SequenceSummary,
    pub curves: CurveTable,
    pub log: Vec<AnchorLogEntry>,
}

#[derive(Clone, Debug, Default)]
pub struct ProtocolOutcome {
    /// Individuals weighted equally, anchors pooled within an individual.
    pub curves: CurveTable,
    /// variant → metric → mean over individuals of per-anchor mean error.
    pub objectives: BTreeMap<String, BTreeMap<String, f64>>,
    pub sequences: Vec<SequenceSummary>,
    pub skipped: Vec<SkippedSequence>,
    pub log: Vec<AnchorLogEntry>,
    pub parameter_counts: BTreeMap<String, usize>,
}

fn score(
    truth: &PoseSequence,
    anchor: usize,
    pred: &DMatrix<f64>,
    metrics: &[Metric],
) -> Result<BTreeMap<String, Vec<f64>>> {
    let n = pred.nrows();
    let gt = truth.frames.rows(anchor + 1, n).into_owned();
    let mut out = BTreeMap::new();
    for &m in metrics {
        let p = metric_space(pred, truth.representation, m)?;
        let g = metric_space(&gt, truth.representation, m)?;
        out.insert(m.to_string(), per_step_errors(&p, &g, m)?);
    }
    Ok(out)
}

fn check_prediction(pred: &DMatrix<f64>, n: usize, d: usize, who: &str, anchor: usize) -> Result<()> {
    if pred.shape() != (n, d) {
        return Err(Error::InvalidInput(format!(
            "{who} returned shape {:?} at anchor {anchor}, expected {:?}",
            pred.shape(),
            (n, d)
        )));
    }
    if !pred.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical(format!(
            "{who} produced non-finite values at anchor {anchor}"
        )));
    }
    Ok(())
}

/// Evaluates one sequence. `source` feeds the predictors; `truth` is used
/// only for scoring and must hold the same frames.
pub fn run_sequence(
    config: &ProtocolConfig,
    source: &dyn FrameSource,
    truth: &PoseSequence,
    predictor: &mut dyn Predictor,
    mut corrector: Option<&mut ResidualCorrector>,
) -> Result<SequenceOutcome> {
    let (m, n, stride) = (config.observe_frames, config.predict_frames, config.anchor_stride);
    let t_len = truth.len();
    let d = truth.dims();
    if source.len() != t_len || source.dims() != d {
        return Err(Error::InvalidInput(
            "frame source and ground truth differ in shape".into(),
        ));
    }
    let count = config.anchor_count(t_len);
    if count == 0 {
        return Err(Error::InvalidInput(format!(
            "sequence of {t_len} frames is shorter than M + N = {}",
            m + n
        )));
    }
    let metrics = config.effective_metrics();
    let first = m - 1;
    let last = first + (count - 1) * stride;
    let mut curves: CurveTable = BTreeMap::new();
    let mut log = Vec::with_capacity(count);
    predictor.reset();
    if let Some(c) = corrector.as_deref_mut() {
        c.reset();
    }

    for t in first..=last {
        let is_anchor = (t - first) % stride == 0;
        let streaming_corrector = config.mode == EvalMode::Streaming && corrector.is_some();
        if !is_anchor && !streaming_corrector {
            continue;
        }
        if config.mode == EvalMode::Legacy {
            predictor.reset();
            if let Some(c) = corrector.as_deref_mut() {
                c.reset();
            }
        }
        let window = source.window(t, m);
        predictor.observe(t, &window)?;
        let base = predictor.predict(n)?;
        check_prediction(&base, n, d, predictor.name(), t)?;
        let corrected = match corrector.as_deref_mut() {
            Some(c) => Some(c.step(&source.frame(t), &base)?.corrected()),
            None => None,
        };
        if !is_anchor {
            continue;
        }
        let max_frame_read = source.max_read();
        let mut errors = BTreeMap::new();
        errors.insert(BASE.to_string(), score(truth, t, &base, &metrics)?);
        if let Some(c) = &corrected {
            check_prediction(c, n, d, "corrector", t)?;
            errors.insert(CORRECTED.to_string(), score(truth, t, c, &metrics)?);
        }
        for (variant, per_metric) in &errors {
            for (metric, steps) in per_metric {
                curves
                    .entry(variant.clone())
                    .or_default()
                    .entry(metric.clone())
                    .or_insert_with(|| ErrorCurve::empty(metric.parse().expect("known metric"), truth.fps, n))
                    .add_anchor(steps);
            }
        }
        log.push(AnchorLogEntry {
            subject: truth.subject_id.clone(),
            action: truth.action.clone(),
            anchor: t,
            max_frame_read,
            errors,
        });
    }
    Ok(SequenceOutcome {
        summary: SequenceSummary {
            subject: truth.subject_id.clone(),
            action: truth.action.clone(),
            frames: t_len,
            anchors: log.len(),
        },
        curves,
        log,
    })
}

/// Builds a fresh base predictor for a sequence.
pub type PredictorFactory<'a> = dyn Fn(&PoseSequence) -> Result<Box<dyn Predictor>> + Sync + 'a;

/// Equal-weight mean of curves; counts are summed.
fn mean_curve(curves: &[&ErrorCurve]) -> ErrorCurve {
    let first = curves[0];
    let h = curves.iter().map(|c| c.horizon()).max().unwrap_or(0);
    let mut out = ErrorCurve::empty(first.metric, first.fps, h);
    for k in 0..h {
        let present: Vec<f64> = curves
            .iter()
            .filter(|c| k < c.horizon() && c.counts[k] > 0)
            .map(|c| c.values[k])
            .collect();
        out.counts[k] = curves.iter().filter(|c| k < c.horizon()).map(|c| c.counts[k]).sum();
        if !present.is_empty() {
            out.values[k] = present.iter().sum::<f64>() / present.len() as f64;
        }
    }
    out
}

/// Evaluates all sequences in parallel; sequences shorter than `M + N` are
/// skipped with a warning. With `with_corrector` each sequence also gets a
/// residual corrector configured from `config.corrector`.
pub fn run_protocol(
    config: &ProtocolConfig,
    sequences: &[PoseSequence],
    factory: &PredictorFactory<'_>,
    with_corrector: bool,
) -> Result<ProtocolOutcome> {
    config.validate()?;
    let need = config.observe_frames + config.predict_frames;
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for seq in sequences {
        if seq.len() < need {
            log::warn!(
                "skipping {}/{}: {} frames < M + N = {need}",
                seq.subject_id,
                seq.action,
                seq.len()
            );
            skipped.push(SkippedSequence {
                subject: seq.subject_id.clone(),
                action: seq.action.clone(),
                frames: seq.len(),
                reason: format!("shorter than M + N = {need} frames"),
            });
        } else {
            usable.push(seq);
        }
    }

    let results: Vec<(SequenceOutcome, BTreeMap<String, usize>)> = usable
        .par_iter()
        .map(|seq| {
            let mut predictor = factory(seq)?;
            let mut counts = BTreeMap::new();
            let mut corrector = if with_corrector {
                let c = ResidualCorrector::new(seq.dims(), config.corrector)?;
                counts.insert("corrector_coefficients".to_string(), c.parameter_count());
                counts.insert("corrector_state".to_string(), c.state_size());
                Some(c)
            } else {
                None
            };
            let outcome = run_sequence(config, &seq.frames, seq, predictor.as_mut(), corrector.as_mut())?;
            counts.insert(format!("base:{}", predictor.name()), predictor.parameter_count());
            Ok((outcome, counts))
        })
        .collect::<Result<_>>()?;

    let mut out = ProtocolOutcome {
        skipped,
        ..Default::default()
    };
    // subject → variant → metric → pooled curve / per-anchor means
    let mut by_subject: BTreeMap<String, CurveTable> = BTreeMap::new();
    let mut anchor_means: BTreeMap<(String, String), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for (outcome, counts) in results {
        for (k, v) in counts {
            let e = out.parameter_counts.entry(k).or_insert(0);
            *e = (*e).max(v);
        }
        let table = by_subject.entry(outcome.summary.subject.clone()).or_default();
        for (variant, per_metric) in outcome.curves {
            for (metric, curve) in per_metric {
                match table.entry(variant.clone()).or_default().entry(metric) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(curve);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => o.get_mut().merge(&curve)?,
                }
            }
        }
        for entry in &outcome.log {
            for (variant, per_metric) in &entry.errors {
                for (metric, steps) in per_metric {
                    anchor_means
                        .entry((variant.clone(), metric.clone()))
                        .or_default()
                        .entry(entry.subject.clone())
                        .or_default()
                        .push(steps.iter().sum::<f64>() / steps.len() as f64);
                }
            }
        }
        out.sequences.push(outcome.summary);
        out.log.extend(outcome.log);
    }

    let mut keys: Vec<(String, String)> = anchor_means.keys().cloned().collect();
    keys.sort();
    for (variant, metric) in keys {
        let per_subject: Vec<&ErrorCurve> = by_subject
            .values()
            .filter_map(|t| t.get(&variant).and_then(|m| m.get(&metric)))
            .collect();
        out.curves
            .entry(variant.clone())
            .or_default()
            .insert(metric.clone(), mean_curve(&per_subject));
        let lists: Vec<Vec<f64>> = anchor_means[&(variant.clone(), metric.clone())]
            .values()
            .cloned()
            .collect();
        out.objectives
            .entry(variant)
            .or_default()
            .insert(metric, aggregate_objective(&lists)?);
    }
    Ok(out)
}

/// Writes the per-anchor log as JSON lines.
pub fn write_anchor_log(path: impl AsRef<Path>, log: &[AnchorLogEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for entry in log {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
