use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use dvcseq::alignment::index_spans_to_segments;
use dvcseq::baselines::{random_partition, random_segmentation, BaselineConfig};
use dvcseq::codec::{self, DecodeWarning};
use dvcseq::corpus::{self, CorpusError, LoadOptions};
use dvcseq::metrics::{self, Aggregation, CaptionMetric, EvalConfig, IouBasis, VideoPrediction};
use dvcseq::{validate_annotation, CodecConfig, Formulation, Mode, Setting, VideoAnnotation64};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn invalid(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

fn write_failed(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(
    name = "dvcseq",
    version,
    about = "Target-string codecs and evaluation for dense video captioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serialize gold segments into target strings.
    Encode(EncodeArgs),
    /// Parse target strings back into predicted segments.
    Decode(DecodeArgs),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Emit random-baseline predictions for every gold video.
    Baseline(BaselineArgs),
    /// Drop inter-segment gaps so segments tile each video.
    TransformPartition(TransformArgs),
    /// Build pseudo-video annotations and targets from WikiHow articles.
    WikihowExtract(WikiHowArgs),
    /// Check an annotation file and report every violation.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormulationArg {
    Tagging,
    Length,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SettingArg {
    Partition,
    Original,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    SegOnly,
    SegCap,
}

#[derive(Debug, Clone, Args)]
struct CodecArgs {
    #[arg(long, value_enum)]
    formulation: FormulationArg,
    #[arg(long, value_enum)]
    setting: SettingArg,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, default_value = "<sep>")]
    sep_token: String,
    #[arg(long, default_value = "<pad>")]
    pad_token: String,
    #[arg(long, default_value = "<end>")]
    end_token: String,
}

impl CodecArgs {
    fn config(&self) -> Result<CodecConfig> {
        let mut cfg = CodecConfig::new(
            match self.formulation {
                FormulationArg::Tagging => Formulation::Tagging,
                FormulationArg::Length => Formulation::Length,
            },
            match self.setting {
                SettingArg::Partition => Setting::Partition,
                SettingArg::Original => Setting::Original,
            },
            match self.mode {
                ModeArg::SegOnly => Mode::SegOnly,
                ModeArg::SegCap => Mode::SegCap,
            },
        );
        cfg.sep_token = self.sep_token.clone();
        cfg.pad_token = self.pad_token.clone();
        cfg.end_token = self.end_token.clone();
        cfg.check().map_err(invalid)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    codec: CodecArgs,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    allow_overlap: bool,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// `video_id<TAB>target` lines.
    #[arg(long)]
    input: PathBuf,
    /// Annotations supplying each video's transcript.
    #[arg(long)]
    annotations: PathBuf,
    #[command(flatten)]
    codec: CodecArgs,
    #[arg(long)]
    output: PathBuf,
    /// One JSON line per decode warning.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    allow_overlap: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IouBasisArg {
    Timestamp,
    TokenIndex,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Macro,
    Micro,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "timestamp")]
    iou_basis: IouBasisArg,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.9")]
    thresholds: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "bleu4,rouge_l,cider_d,meteor_lite")]
    metrics: Vec<CaptionMetric>,
    #[arg(long, value_enum, default_value = "macro")]
    aggregation: AggregationArg,
    #[arg(long, default_value_t = 1.2)]
    rouge_beta: f64,
    #[arg(long, default_value_t = 6.0)]
    cider_sigma: f64,
    /// Full report as JSON, including per-video scores.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    allow_overlap: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineKind {
    Partition,
    Segmentation,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    kind: BaselineKind,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 15)]
    n_max: usize,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    allow_overlap: bool,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct WikiHowArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    codec: CodecArgs,
    /// Target strings, `article_id<TAB>target`.
    #[arg(long)]
    output: PathBuf,
    /// Pseudo-video annotations.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    allow_overlap: bool,
}

fn load_gold(path: &Path, allow_overlap: bool) -> Result<Vec<VideoAnnotation64>> {
    Ok(corpus::load_annotations(path, LoadOptions { allow_overlap })?)
}

fn encode(args: &EncodeArgs) -> Result<String> {
    let cfg = args.codec.config()?;
    let anns = load_gold(&args.input, args.allow_overlap)?;
    let rows = anns
        .iter()
        .map(|ann| {
            codec::encode(ann, &cfg)
                .map(|t| (ann.video_id.clone(), t))
                .map_err(|e| invalid(format!("{}: {e}", ann.video_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    corpus::save_targets(&args.output, &rows)?;
    Ok(format!("videos\t{}\n", rows.len()))
}

#[derive(Serialize)]
struct WarningLine<'a> {
    video_id: &'a str,
    #[serde(flatten)]
    warning: &'a DecodeWarning,
}

fn decode(args: &DecodeArgs) -> Result<String> {
    let cfg = args.codec.config()?;
    let anns = load_gold(&args.annotations, args.allow_overlap)?;
    let targets = corpus::load_targets(&args.input)?;
    let mut preds = Vec::with_capacity(targets.len());
    let mut lines = Vec::new();
    let mut num_warnings = 0;
    for (video_id, target) in &targets {
        let ann = anns
            .iter()
            .find(|a| &a.video_id == video_id)
            .ok_or_else(|| invalid(format!("{video_id}: no annotation supplies its transcript")))?;
        let report = codec::decode(target, &ann.transcript, &cfg).map_err(|e| invalid(format!("{video_id}: {e}")))?;
        for w in &report.warnings {
            log::warn!("{video_id}: {w}");
            lines.push(serde_json::to_string(&WarningLine { video_id, warning: w }).map_err(invalid)?);
        }
        num_warnings += report.warnings.len();
        let segments = index_spans_to_segments(&report.spans, &ann.transcript).map_err(invalid)?;
        preds.push(VideoPrediction {
            video_id: video_id.clone(),
            segments,
        });
    }
    corpus::save_predictions(&args.output, &preds)?;
    if let Some(path) = &args.report {
        let mut w = BufWriter::new(File::create(path).map_err(write_failed(path))?);
        for line in &lines {
            writeln!(w, "{line}").map_err(write_failed(path))?;
        }
        w.flush().map_err(write_failed(path))?;
    }
    Ok(format!("videos\t{}\nwarnings\t{num_warnings}\n", preds.len()))
}

fn eval(args: &EvalArgs) -> Result<String> {
    let cfg = EvalConfig {
        thresholds: args.thresholds.clone(),
        iou_basis: match args.iou_basis {
            IouBasisArg::Timestamp => IouBasis::Timestamp,
            IouBasisArg::TokenIndex => IouBasis::TokenIndex,
        },
        caption_metrics: args.metrics.clone(),
        rouge_beta: args.rouge_beta,
        cider_sigma: args.cider_sigma,
        aggregation: match args.aggregation {
            AggregationArg::Macro => Aggregation::Macro,
            AggregationArg::Micro => Aggregation::Micro,
        },
    };
    cfg.check().map_err(invalid)?;
    let gold = load_gold(&args.gold, args.allow_overlap)?;
    let preds = corpus::load_predictions::<f64>(&args.pred)?;
    let report = metrics::evaluate(&gold, &preds, &cfg).map_err(invalid)?;
    if let Some(path) = &args.output {
        let mut w = BufWriter::new(File::create(path).map_err(write_failed(path))?);
        serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writeln!(w).and_then(|_| w.flush()).map_err(write_failed(path))?;
    }
    Ok(report.to_text())
}

fn baseline(args: &BaselineArgs) -> Result<String> {
    let cfg = BaselineConfig {
        n_min: args.n_min,
        n_max: args.n_max,
        seed: args.seed,
    };
    cfg.check().map_err(invalid)?;
    let gold = load_gold(&args.gold, args.allow_overlap)?;
    let mut rng = cfg.rng();
    let mut preds = Vec::with_capacity(gold.len());
    for ann in &gold {
        let segments = match args.kind {
            BaselineKind::Partition if ann.transcript.is_empty() => {
                log::warn!("{}: empty transcript, no partition emitted", ann.video_id);
                Vec::new()
            }
            BaselineKind::Partition => {
                let spans = random_partition(ann.transcript.len(), &cfg, &mut rng).map_err(invalid)?;
                index_spans_to_segments(&spans, &ann.transcript).map_err(invalid)?
            }
            BaselineKind::Segmentation => random_segmentation(ann.duration, &cfg, &mut rng)
                .map_err(|e| invalid(format!("{}: {e}", ann.video_id)))?,
        };
        preds.push(VideoPrediction {
            video_id: ann.video_id.clone(),
            segments,
        });
    }
    corpus::save_predictions(&args.output, &preds)?;
    Ok(format!("videos\t{}\n", preds.len()))
}

fn transform_partition(args: &TransformArgs) -> Result<String> {
    let anns = load_gold(&args.input, false)?;
    let out = anns
        .iter()
        .map(|a| corpus::to_partition_setting(a).map_err(invalid))
        .collect::<Result<Vec<_>>>()?;
    corpus::save_annotations(&args.output, &out)?;
    Ok(format!("videos\t{}\n", out.len()))
}

fn wikihow_extract(args: &WikiHowArgs) -> Result<String> {
    let cfg = args.codec.config()?;
    let articles = corpus::load_wikihow(&args.input)?;
    let mut rows = Vec::with_capacity(articles.len());
    let mut anns = Vec::with_capacity(articles.len());
    let mut num_warnings = 0;
    for article in &articles {
        let x = corpus::extract_wikihow::<f64>(article, &cfg)?;
        num_warnings += x.warnings.len();
        rows.push((article.article_id.clone(), x.target));
        anns.push(x.annotation);
    }
    corpus::save_targets(&args.output, &rows)?;
    if let Some(path) = &args.annotations {
        corpus::save_annotations(path, &anns)?;
    }
    Ok(format!("articles\t{}\nwarnings\t{num_warnings}\n", rows.len()))
}

fn validate(args: &ValidateArgs) -> Result<String> {
    let file = File::open(&args.input).map_err(write_failed(&args.input))?;
    let records = corpus::read_jsonl::<VideoAnnotation64, _>(io::BufReader::new(file))?;
    let mut errors = 0;
    for (line, ann) in &records {
        for v in validate_annotation(ann) {
            let soft = args.allow_overlap && v.rule == dvcseq::types::Rule::SegmentsNonOverlapping;
            eprintln!(
                "line {line} ({}): {v}{}",
                ann.video_id,
                if soft { " (allowed)" } else { "" }
            );
            if !soft {
                errors += 1;
            }
        }
    }
    if errors > 0 {
        return Err(invalid(format!("{errors} violation(s) in {}", args.input.display())));
    }
    Ok(format!("videos\t{}\nviolations\t0\n", records.len()))
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Eval(a) => eval(a),
        Command::Baseline(a) => baseline(a),
        Command::TransformPartition(a) => transform_partition(a),
        Command::WikihowExtract(a) => wikihow_extract(a),
        Command::Validate(a) => validate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DVCSEQ_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
