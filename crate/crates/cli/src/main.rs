mod config;
mod plan;
mod schema;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use dqkit_core::engine::{render_report, ReportFormat};
use dqkit_core::{Clock, Dataset, DecisionFile, Engine, Error, Ledger, MetricId, RemediationOp};

use config::RunConfig;
use plan::Plan;

const LEDGER_FILE: &str = "ledger.jsonl";
const REMEDIATED_FILE: &str = "remediated.csv";
const SCHEMA_FILE: &str = "quality_result.schema.json";
const DEFAULT_FIXED_CLOCK: &str = "2000-01-01T00:00:00Z";

#[derive(Parser)]
#[command(name = "dqkit", about = "Assess and remediate the ML readiness of tabular data", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run quality metrics and record them in the ledger
    Assess(AssessArgs),
    /// Apply a remediation plan to a dataset
    Remediate(RemediateArgs),
    /// Render the Data Readiness Report from a ledger
    Report(ReportArgs),
    /// Print version information
    Version,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// CSV file to read
    #[arg(long)]
    input: Option<PathBuf>,
    /// Label column
    #[arg(long)]
    target: Option<String>,
    /// Output directory (results, ledger, reports)
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use a constant timestamp (RFC 3339) for reproducible output
    #[arg(long, num_args = 0..=1, default_missing_value = DEFAULT_FIXED_CLOCK, value_name = "TIME")]
    fixed_clock: Option<String>,
}

#[derive(Args)]
struct AssessArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated metric ids (default: all)
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
}

#[derive(Args)]
struct RemediateArgs {
    #[command(flatten)]
    common: Common,
    /// JSON plan: {"steps": [{"op": ..., "params": ..., "decisions": ...}]} or a bare list of steps
    #[arg(long, required_unless_present = "op")]
    plan: Option<PathBuf>,
    /// Single operation instead of a plan file
    #[arg(long, conflicts_with = "plan")]
    op: Option<String>,
    /// Decisions for steps that carry none of their own
    #[arg(long)]
    decisions: Option<PathBuf>,
    /// Allow operations no prior result recommended
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding the ledger; reports are written here too
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ledger path (default: <out>/ledger.jsonl)
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Comma-separated formats: json, md, html
    #[arg(long, value_delimiter = ',', default_value = "json")]
    format: Vec<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = DEFAULT_FIXED_CLOCK, value_name = "TIME")]
    fixed_clock: Option<String>,
}

/// Exit 1 for usage and IO problems, 2 for quality failures.
enum Failure {
    Usage(anyhow::Error),
    Quality(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Quality(_) => 2,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

/// Sorts a core error into the exit-code classes.
fn classify(e: Error) -> Failure {
    match e {
        Error::MissingFile(_) | Error::Io(_) | Error::Csv(_) | Error::RaggedRow { .. } | Error::EmptyDataset => {
            Failure::Usage(e.into())
        }
        Error::UnknownColumn(_) => Failure::Usage(e.into()),
        other => Failure::Quality(other.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Assess(a) => assess(a),
        Command::Remediate(r) => remediate(r),
        Command::Report(r) => report(r),
        Command::Version => {
            println!("dqkit {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Quality(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn clock(fixed: Option<&str>) -> Result<Clock, Failure> {
    match fixed {
        None => Ok(Clock::System),
        Some(s) => DateTime::parse_from_rfc3339(s)
            .map(|t| Clock::Fixed(t.with_timezone(&Utc)))
            .map_err(|e| Failure::Usage(anyhow!("--fixed-clock '{s}': {e}"))),
    }
}

/// Config file values with command-line flags applied on top.
fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if common.input.is_some() {
        cfg.input = common.input.clone();
    }
    if common.target.is_some() {
        cfg.target = common.target.clone();
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

fn load_input(cfg: &RunConfig) -> Result<Dataset, Failure> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Failure::Usage(anyhow!("no input: pass --input or set `input` in the config")))?;
    Dataset::load_csv(input, &cfg.load_options()).map_err(classify)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("dqkit-out"));
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok(out)
}

fn load_ledger(path: &Path) -> Result<Ledger, Failure> {
    Ledger::load_or_new(path).map_err(|e| Failure::Quality(anyhow!("{}: {e}", path.display())))
}

fn assess(args: AssessArgs) -> Result<(), Failure> {
    let mut cfg = resolve(&args.common)?;
    if args.metrics.is_some() {
        cfg.metrics = args.metrics.clone();
    }
    let metrics: Vec<MetricId> = match &cfg.metrics {
        None => MetricId::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.trim().parse::<MetricId>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Usage(e.into()))?,
    };
    let clock = clock(args.common.fixed_clock.as_deref())?;
    let ds = load_input(&cfg)?;
    let out = out_dir(&cfg)?;
    let ledger_path = out.join(LEDGER_FILE);
    let ledger = load_ledger(&ledger_path)?;
    let saved = ledger.len();
    let mut engine = Engine::new(cfg.engine_config(), clock).with_ledger(ledger);
    let summary = engine.run_all(&ds, &metrics).map_err(classify)?;

    for r in &summary.results {
        let path = out.join(format!("{}.json", r.metric_id));
        let mut text = r.to_json_pretty();
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{:<20} {:.4}", r.metric_id.as_str(), r.score);
    }
    fs::write(out.join(SCHEMA_FILE), schema::RESULT_SCHEMA).context("cannot write schema")?;
    engine
        .ledger()
        .append_to(&ledger_path, saved)
        .with_context(|| format!("cannot write {}", ledger_path.display()))?;
    for (_, msg) in &summary.skipped {
        eprintln!("warning: {msg}");
    }
    for (m, msg) in &summary.failures {
        eprintln!("error: {m} failed: {msg}");
    }
    if summary.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Quality(anyhow!("{} metric(s) failed", summary.failures.len())))
    }
}

/// Operations recommended by any successful assessment in the ledger.
fn recommended_ops(ledger: &Ledger) -> BTreeSet<RemediationOp> {
    ledger
        .entries()
        .iter()
        .filter_map(|e| e.result.as_ref())
        .flat_map(|r| r.recommendations.iter().filter_map(|rec| rec.remediation_op_id))
        .collect()
}

fn remediate(args: RemediateArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.common)?;
    let clock = clock(args.common.fixed_clock.as_deref())?;
    let plan = match (&args.plan, &args.op) {
        (Some(p), _) => Plan::load(p)?,
        (None, Some(op)) => Plan::single(op)?,
        (None, None) => return Err(Failure::Usage(anyhow!("pass --plan or --op"))),
    };
    let shared = match &args.decisions {
        Some(p) => Some(DecisionFile::load(p).map_err(classify)?),
        None => None,
    };
    let ds = load_input(&cfg)?;
    let out = out_dir(&cfg)?;
    let ledger_path = out.join(LEDGER_FILE);
    let ledger = load_ledger(&ledger_path)?;
    if !args.force {
        let allowed = recommended_ops(&ledger);
        if let Some(step) = plan.steps.iter().find(|s| !allowed.contains(&s.op)) {
            return Err(Failure::Usage(anyhow!(
                "{} was not recommended by any recorded result; assess first or pass --force",
                step.op
            )));
        }
    }
    let saved = ledger.len();
    let mut engine = Engine::new(cfg.engine_config(), clock).with_ledger(ledger);
    let mut current = ds;
    let mut failure = None;
    for step in &plan.steps {
        let decisions = step.decisions.as_ref().or(shared.as_ref());
        match engine.apply_remediation(&current, step.op, &step.params, decisions) {
            Ok(r) => {
                println!(
                    "{:<18} rows {:>5}  {} -> {}",
                    step.op.as_str(),
                    r.entry.rows_affected,
                    score_text(r.entry.score_before),
                    score_text(r.entry.score_after)
                );
                current = r.dataset;
            }
            Err(e) => {
                failure = Some(classify(e));
                break;
            }
        }
    }
    engine
        .ledger()
        .append_to(&ledger_path, saved)
        .with_context(|| format!("cannot write {}", ledger_path.display()))?;
    let csv_path = out.join(REMEDIATED_FILE);
    current
        .save_csv(&csv_path)
        .map_err(|e| Failure::Usage(anyhow!("cannot write {}: {e}", csv_path.display())))?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn score_text(s: Option<f64>) -> String {
    s.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("dqkit-out"));
    let ledger_path = args.ledger.clone().unwrap_or_else(|| out.join(LEDGER_FILE));
    if !ledger_path.is_file() {
        return Err(Failure::Usage(anyhow!("ledger not found: {}", ledger_path.display())));
    }
    let ledger = Ledger::load(&ledger_path).map_err(|e| Failure::Quality(anyhow!("{}: {e}", ledger_path.display())))?;
    let formats: Vec<ReportFormat> = args
        .format
        .iter()
        .map(|f| f.parse::<ReportFormat>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(e.into()))?;
    let generated_at = clock(args.fixed_clock.as_deref())?.now();
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    for f in formats {
        let text = render_report(&ledger, f, generated_at).map_err(classify)?;
        let path = out.join(format!("readiness_report.{}", f.extension()));
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(classify(Error::MissingFile("x".into())).code(), 1);
        assert_eq!(
            classify(Error::StaleDecisions {
                answers: "a".into(),
                current: "b".into()
            })
            .code(),
            2
        );
        assert_eq!(classify(Error::Invalid("corrupt ledger line 1".into())).code(), 2);
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from(["dqkit", "report", "--format", "json,html", "--fixed-clock"]).unwrap();
        let Command::Report(r) = cli.command else { panic!() };
        assert_eq!(r.format, vec!["json", "html"]);
        assert_eq!(r.fixed_clock.as_deref(), Some(DEFAULT_FIXED_CLOCK));
        assert!(Cli::try_parse_from(["dqkit", "remediate", "--input", "a.csv"]).is_err());
    }

    #[test]
    fn bail_is_usage() {
        let f: Failure = (|| -> anyhow::Result<()> { anyhow::bail!("nope") })().unwrap_err().into();
        assert_eq!(f.code(), 1);
    }
}
