mod data;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use poseadapt::bench::{
    run_protocol, synth, write_anchor_log, EvalMode, PredictorFactory, ProtocolConfig, Report, SyntheticSpec,
};
use poseadapt::forecast::{ExternalPredictor, Predictor, ZeroVelocity};
use poseadapt::metrics::Metric;
use poseadapt::personalize::{
    candidate_errors, classifier_predict, classifier_train, model_errors, oracle_refit, train_bank, training_windows,
    ClassifierConfig, ModelBank, SelectionConfig,
};
use poseadapt::pose::PoseSequence;

use data::{filter_subjects, group_by_subject, load_all, Loaded};

#[derive(Parser)]
#[command(name = "poseadapt", version, about = "Personalized pose forecasting benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded synthetic individuals from a JSON or TOML spec.
    Synth(SynthArgs),
    /// Validate pose CSV files and their sidecars.
    IngestCheck(IngestArgs),
    /// Fit a per-individual AR model bank on training subjects.
    FitBank(FitBankArgs),
    /// Select bank models for test sequences (oracles and linear classifier).
    Classify(ClassifyArgs),
    /// Run the windowed evaluation protocol and write a report.
    Evaluate(EvaluateArgs),
    /// Verify a report and rewrite its curve CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct ProtocolArgs {
    /// Protocol settings (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    observe: Option<usize>,
    #[arg(long)]
    predict: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ProtocolArgs {
    fn resolve(&self) -> Result<ProtocolConfig> {
        let mut cfg = match &self.config {
            Some(p) => ProtocolConfig::load(p)?,
            None => ProtocolConfig::default(),
        };
        if let Some(m) = self.observe {
            cfg.observe_frames = m;
        }
        if let Some(n) = self.predict {
            cfg.predict_frames = n;
        }
        if let Some(s) = self.stride {
            cfg.anchor_stride = s;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Split ids apply only when a config file was given.
    fn split_ids<'a>(&self, ids: &'a [String]) -> &'a [String] {
        if self.config.is_some() {
            ids
        } else {
            &[]
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic spec (`.json` or `.toml`).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the seed given in the `--spec` file.
    #[arg(long)]
    seed: Option<u64>,
    /// Permit unstable AR coefficients.
    #[arg(long)]
    allow_unstable: bool,
    /// Also write trend-only forecasts as `<stem>.trend.jsonl`.
    #[arg(long)]
    export_trend: bool,
    #[arg(long, default_value_t = 10)]
    observe: usize,
    #[arg(long, default_value_t = 25)]
    predict: usize,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV files or directories.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Args)]
struct FitBankArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Highest order considered by BIC.
    #[arg(long)]
    bic_max: Option<usize>,
    /// Fixed AR order instead of BIC selection.
    #[arg(long)]
    order: Option<usize>,
    /// Forgetting factor of the weighted fit.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    bank: PathBuf,
    /// Test sequences.
    #[arg(long)]
    data: PathBuf,
    /// Training sequences for the linear classifier; omitted means oracles only.
    #[arg(long)]
    train: Option<PathBuf>,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Forgetting factor for the refit oracle.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Write `classification.json` here as well as printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long)]
    mode: Option<String>,
    /// Metric to report (repeatable).
    #[arg(long)]
    metric: Vec<String>,
    /// Corrector forgetting factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Corrector AR order.
    #[arg(long)]
    order: Option<usize>,
    /// External base forecasts: a JSON-lines file, or a directory holding
    /// `<stem>.jsonl` or `<stem>.trend.jsonl` per sequence.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Evaluate the base predictor only.
    #[arg(long)]
    no_correct: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A `report.json` file.
    input: PathBuf,
    /// Directory to rewrite the report and CSVs into.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0))
        .unwrap_or_else(chrono::Utc::now);
    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec = SyntheticSpec::load(&args.spec)?;
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.allow_unstable |= args.allow_unstable;
    let set = synth(&spec)?;
    let horizon = args.export_trend.then_some((args.observe, args.predict));
    let files = set.save(&args.out, horizon)?;
    println!(
        "wrote {} sequences ({} files) to {}",
        set.sequences.len(),
        files.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_ingest_check(args: &IngestArgs) -> Result<()> {
    let mut failed = None;
    for path in &args.paths {
        for file in data::csv_files(path)? {
            match poseadapt::bench::ingest(&file, None) {
                Ok(seq) => println!(
                    "ok {}: subject {} action {} T={} D={} {} @ {} fps",
                    file.display(),
                    seq.subject_id,
                    seq.action,
                    seq.len(),
                    seq.dims(),
                    seq.representation,
                    seq.fps
                ),
                Err(e) => {
                    eprintln!("error {}: {e}", file.display());
                    failed.get_or_insert(e);
                }
            }
        }
    }
    match failed {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_fit_bank(args: &FitBankArgs) -> Result<()> {
    let cfg = args.protocol.resolve()?;
    let mut bank_cfg = cfg.bank;
    if let Some(p) = args.bic_max {
        bank_cfg.max_order = p;
    }
    if let Some(g) = args.gamma {
        bank_cfg.forgetting = g;
    }
    if args.order.is_some() {
        bank_cfg.fixed_order = args.order;
    }
    let data = filter_subjects(load_all(&args.data)?, args.protocol.split_ids(&cfg.split.train));
    let Some(first) = data.first() else {
        bail!(poseadapt::Error::Config("no training sequences selected".into()));
    };
    let (fps, representation) = (first.seq.fps, first.seq.representation);
    let groups = group_by_subject(&data)
        .into_iter()
        .map(|(id, seqs)| (id, seqs.into_iter().map(|s| s.frames.clone()).collect()))
        .collect();
    let bank = train_bank(&groups, fps, representation, &bank_cfg)?;
    bank.save(&args.out)?;
    for (id, models) in &bank.individuals {
        let orders: Vec<String> = models.iter().map(|m| m.order.to_string()).collect();
        println!("{id}: orders [{}]", orders.join(", "));
    }
    println!(
        "saved bank of {} individuals, D={}, {} coefficients to {}",
        bank.len(),
        bank.dims,
        bank.parameter_count(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ClassifiedSequence {
    subject: String,
    action: String,
    oracle_person: String,
    oracle_per_dimension: Vec<String>,
    error_per_dimension_oracle: f64,
    error_person_oracle: f64,
    error_refit_oracle: f64,
    error_random: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    classifier_person: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_classifier: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Majority vote over non-overlapping windows; ties go to the smallest id.
fn vote(clf: &poseadapt::personalize::LinearClassifier, seq: &PoseSequence) -> Result<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for w in training_windows(&seq.frames, clf.window, clf.window) {
        *counts.entry(classifier_predict(clf, &w)?).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|(_, c)| *c == best && best > 0)
        .map(|(id, _)| id)
        .ok_or_else(|| {
            anyhow::anyhow!(poseadapt::Error::InvalidInput(format!(
                "{}/{}: shorter than one classifier window",
                seq.subject_id, seq.action
            )))
        })
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let cfg = args.protocol.resolve()?;
    let bank = ModelBank::load(&args.bank)?;
    let selection = SelectionConfig {
        horizon: args.protocol.predict.unwrap_or(1),
        stride: cfg.anchor_stride,
        ..Default::default()
    };
    let clf = match &args.train {
        Some(dir) => {
            let train = filter_subjects(load_all(dir)?, args.protocol.split_ids(&cfg.split.train));
            let clf_cfg = ClassifierConfig {
                window: cfg.observe_frames,
                seed: cfg.seed,
                ..Default::default()
            };
            let samples: Vec<_> = train
                .iter()
                .flat_map(|l| {
                    training_windows(&l.seq.frames, clf_cfg.window, clf_cfg.stride)
                        .into_iter()
                        .map(|w| (w, l.seq.subject_id.clone()))
                })
                .collect();
            Some(classifier_train(&samples, &clf_cfg)?)
        }
        None => None,
    };
    let tests = filter_subjects(load_all(&args.data)?, args.protocol.split_ids(&cfg.split.test));
    let warmup = bank.individuals.values().flatten().map(|m| m.order).max().unwrap_or(0);
    let mut out = Vec::new();
    for Loaded { seq, .. } in &tests {
        let errs = candidate_errors(&bank, &seq.frames, &selection)?;
        let (person, person_err) = errs.best_person();
        let (per_dim, per_dim_err) = errs.best_per_dimension();
        let refit = oracle_refit(&bank, person, &seq.frames, args.gamma)?;
        let refit_err = mean(&model_errors(&refit, &seq.frames, warmup, &selection)?);
        let (classifier_person, error_classifier) = match &clf {
            Some(c) => {
                let id = vote(c, seq)?;
                let models = bank
                    .get(&id)
                    .with_context(|| format!("classifier chose {id}, which is not in the bank"))?;
                let e = mean(&model_errors(models, &seq.frames, warmup, &selection)?);
                (Some(id), Some(e))
            }
            None => (None, None),
        };
        out.push(ClassifiedSequence {
            subject: seq.subject_id.clone(),
            action: seq.action.clone(),
            oracle_person: person.to_string(),
            oracle_per_dimension: per_dim.into_iter().map(String::from).collect(),
            error_per_dimension_oracle: per_dim_err,
            error_person_oracle: person_err,
            error_refit_oracle: refit_err,
            error_random: errs.random_selection_error(),
            classifier_person,
            error_classifier,
        });
    }
    let text = serde_json::to_string_pretty(&out)?;
    println!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let path = dir.join("classification.json");
        std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn prediction_file(root: &Path, stem: &str) -> Option<PathBuf> {
    [format!("{stem}.jsonl"), format!("{stem}.trend.jsonl")]
        .into_iter()
        .map(|f| root.join(f))
        .find(|p| p.is_file())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut cfg = args.protocol.resolve()?;
    if let Some(m) = &args.mode {
        cfg.mode = m.parse::<EvalMode>()?;
    }
    if !args.metric.is_empty() {
        cfg.metrics = args
            .metric
            .iter()
            .map(|m| m.parse::<Metric>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(g) = args.gamma {
        cfg.corrector.forgetting = g;
    }
    if let Some(p) = args.order {
        cfg.corrector.order = p;
    }
    let data = filter_subjects(load_all(&args.data)?, args.protocol.split_ids(&cfg.split.test));
    if data.is_empty() {
        bail!(poseadapt::Error::Config("no test sequences selected".into()));
    }
    if let Some(l) = data.iter().find(|l| l.seq.representation != cfg.representation) {
        log::info!(
            "{}: representation {} overrides configured {}",
            l.path.display(),
            l.seq.representation,
            cfg.representation
        );
        cfg.representation = l.seq.representation;
    }

    // (subject, action) → external prediction file
    let mut external: BTreeMap<(String, String), PathBuf> = BTreeMap::new();
    if let Some(p) = &args.predictions {
        for l in &data {
            let file = if p.is_dir() {
                prediction_file(p, &l.stem())
                    .with_context(|| format!("no predictions for {} in {}", l.stem(), p.display()))?
            } else if data.len() == 1 {
                p.clone()
            } else {
                bail!(poseadapt::Error::Config(
                    "--predictions must be a directory when evaluating several sequences".into()
                ));
            };
            external.insert((l.seq.subject_id.clone(), l.seq.action.clone()), file);
        }
    }
    let factory = |seq: &PoseSequence| -> poseadapt::Result<Box<dyn Predictor>> {
        match external.get(&(seq.subject_id.clone(), seq.action.clone())) {
            Some(file) => Ok(Box::new(ExternalPredictor::from_file(file)?)),
            None => Ok(Box::new(ZeroVelocity::new())),
        }
    };
    let factory: &PredictorFactory<'_> = &factory;
    let predictor = if external.is_empty() {
        "zero-velocity"
    } else {
        "external"
    };
    let sequences: Vec<PoseSequence> = data.into_iter().map(|l| l.seq).collect();
    let outcome = run_protocol(&cfg, &sequences, factory, !args.no_correct)?;
    if outcome.sequences.is_empty() {
        bail!(poseadapt::Error::InvalidInput(format!(
            "all {} sequences are shorter than M + N = {}",
            outcome.skipped.len(),
            cfg.observe_frames + cfg.predict_frames
        )));
    }
    let report = Report::new(&outcome, &cfg, predictor, timestamp());
    report.write(&args.out)?;
    write_anchor_log(args.out.join("anchors.jsonl"), &outcome.log)?;
    for (variant, per_metric) in &report.objectives {
        for (metric, v) in per_metric {
            println!("{variant} {metric}: {v}");
        }
    }
    println!(
        "{} anchors over {} sequences ({} skipped); report in {}",
        report.anchors_total,
        report.sequences.len(),
        report.skipped.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let report = Report::load(&args.input)?;
    println!("report {} ({})", report.determinism_hash, report.generated_at);
    for c in &report.curves {
        let last = c.values.last().copied().unwrap_or(f64::NAN);
        let first = c.values.first().copied().unwrap_or(f64::NAN);
        println!(
            "{} {}: {} horizons, first {first} {}, last {last} {}",
            c.variant,
            c.metric,
            c.values.len(),
            c.unit,
            c.unit
        );
    }
    if let Some(dir) = &args.out {
        report.write(dir)?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<poseadapt::Error>())
        .map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::IngestCheck(a) => cmd_ingest_check(a),
        Command::FitBank(a) => cmd_fit_bank(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
