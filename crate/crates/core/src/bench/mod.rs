//! Data ingestion, synthetic data, the evaluation protocol and reports.

mod config;
mod ingest;
mod protocol;
mod report;
mod synth;

pub use config::{default_metric, EvalMode, ProtocolConfig, Split};
pub use ingest::{ingest, sidecar_path_for, write_sequence, Sidecar};
pub use protocol::{
    run_protocol, run_sequence, write_anchor_log, AccessLog, AnchorLogEntry, CurveTable, FrameSource,
    InstrumentedSource, PredictorFactory, ProtocolOutcome, SequenceOutcome, SequenceSummary, SkippedSequence, BASE,
    CORRECTED,
};
pub use report::{CurveEntry, Report, REPORT_SCHEMA, REPORT_SCHEMA_VERSION};
pub use synth::{
    synth, trend_predictions, ManifestEntry, SyntheticIndividual, SyntheticManifest, SyntheticSet, SyntheticSpec, Trend,
};
