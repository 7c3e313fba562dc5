//! `zsie`: annotate, evaluate, render and validate from the command line.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 I/O or parse
//! error, 3 zero-shot split violation.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use zeroshot_ie::evaluation::{format_report, load_dataset, ordered_split_names, validate_zero_shot_splits, Evaluator};
use zeroshot_ie::viz::Renderer;
use zeroshot_ie::{Document, Error, Pipeline, PipelineConfig, Registry};

const EXIT_CONFIG: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_OVERLAP: u8 = 3;

#[derive(Parser)]
#[command(name = "zsie", version, about = "Zero-shot information extraction pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate texts and write JSONL documents.
    Annotate {
        #[arg(long)]
        config: PathBuf,
        /// Inline text to annotate.
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        text: Option<String>,
        /// A `.jsonl` file of `{"text": ...}` lines, or a plain text file with one document per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output JSONL path; standard output if absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write empty timing maps so runs can be compared byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// Evaluate a pipeline on dataset splits and print the report table.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Splits to evaluate; defaults to every split present.
        #[arg(long, value_delimiter = ',')]
        splits: Vec<String>,
        /// Evaluate even when classes are shared between splits.
        #[arg(long)]
        allow_overlap: bool,
        /// Where to write the metrics JSON.
        #[arg(long, default_value = "metrics.json")]
        json: PathBuf,
        /// Column label in the report; defaults to the config file stem.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render annotated JSONL documents to one HTML file each.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Style::Ent)]
        style: Style,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Check that dataset splits share no classes.
    ValidateDataset {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Print registered components.
    ListComponents,
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Ent,
    Rel,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Io { .. }
            | Error::Json(_)
            | Error::Parse { .. }
            | Error::SpanOutOfBounds { .. }
            | Error::UnknownClass { .. }
            | Error::InvalidSpan { .. }
            | Error::OverlappingSpans { .. }
            | Error::DanglingRelation { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: err.to_string() }
    }
}

fn io_failure(path: &Path, err: io::Error) -> Failure {
    Failure { code: EXIT_IO, message: format!("{}: {err}", path.display()) }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            if !err.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !err.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(std::env::args().nth(1)));
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = match cli.command {
        Command::Annotate { config, text, input, output, batch_size, workers, no_timing } => {
            annotate(&config, text, input.as_deref(), output.as_deref(), batch_size, workers, no_timing)
        }
        Command::Evaluate { config, dataset, splits, allow_overlap, json, label, workers } => {
            evaluate(&config, &dataset, &splits, allow_overlap, &json, label, workers)
        }
        Command::Render { input, style, output_dir } => render(&input, style, &output_dir),
        Command::ValidateDataset { dataset } => validate_dataset(&dataset),
        Command::ListComponents => list_components(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn usage_for(subcommand: Option<String>) -> String {
    let mut root = Cli::command();
    let usage = match subcommand.as_deref().and_then(|name| root.find_subcommand_mut(name)) {
        Some(sub) => sub.render_usage(),
        None => root.render_usage(),
    };
    usage.to_string()
}

fn read_inputs(path: &Path) -> Result<Vec<Value>, Failure> {
    let content = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let jsonl = path.extension().is_some_and(|e| e == "jsonl");
    if !jsonl {
        return Ok(content.lines().map(|l| Value::String(l.to_string())).collect());
    }
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Failure { code: EXIT_IO, message: format!("{}:{}: {e}", path.display(), i + 1) })
        })
        .collect()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn annotate(
    config: &Path,
    text: Option<String>,
    input: Option<&Path>,
    output: Option<&Path>,
    batch_size: Option<usize>,
    workers: usize,
    no_timing: bool,
) -> CmdResult {
    let pipeline = Pipeline::new(PipelineConfig::load(config)?)?.with_workers(workers);
    let inputs = match (text, input) {
        (Some(t), _) => vec![Value::String(t)],
        (None, Some(path)) => read_inputs(path)?,
        (None, None) => unreachable!("clap requires --text or --input"),
    };
    let out = pipeline.annotate_values(&inputs, batch_size)?;
    let target = output.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut writer = open_output(output)?;
    for doc in out.documents {
        let doc = if no_timing { doc.without_timing() } else { doc };
        let line = serde_json::to_string(&doc).map_err(Error::from)?;
        writeln!(writer, "{line}").map_err(|e| io_failure(&target, e))?;
    }
    writer.flush().map_err(|e| io_failure(&target, e))
}

fn evaluate(
    config_path: &Path,
    dataset_dir: &Path,
    splits: &[String],
    allow_overlap: bool,
    json: &Path,
    label: Option<String>,
    workers: Option<usize>,
) -> CmdResult {
    let config = PipelineConfig::load(config_path)?;
    let dataset = load_dataset(dataset_dir)?;
    let report = validate_zero_shot_splits(&dataset);
    if !report.ok {
        for v in &report.violations {
            eprintln!("{v}");
        }
        if !allow_overlap {
            return Err(Failure {
                code: EXIT_OVERLAP,
                message: format!(
                    "{} class(es) shared between splits; pass --allow-overlap to evaluate anyway",
                    report.violations.len()
                ),
            });
        }
    }
    let names: Vec<String> = if splits.is_empty() {
        ordered_split_names(dataset.keys()).into_iter().cloned().collect()
    } else {
        splits.to_vec()
    };
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let evaluator = Evaluator::new(config).with_workers(workers.unwrap_or(1));
    let results = evaluator.evaluate(&dataset, &names)?;

    let label = label.unwrap_or_else(|| {
        config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "pipeline".into())
    });
    let all = BTreeMap::from([(label, results)]);
    print!("{}", format_report(&all));
    let body = serde_json::to_string_pretty(&all).map_err(Error::from)?;
    fs::write(json, body + "\n").map_err(|e| io_failure(json, e))
}

fn render(input: &Path, style: Style, output_dir: &Path) -> CmdResult {
    let content = fs::read_to_string(input).map_err(|e| io_failure(input, e))?;
    let docs: Vec<Document> = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Failure { code: EXIT_IO, message: format!("{}:{}: {e}", input.display(), i + 1) })
        })
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(output_dir).map_err(|e| io_failure(output_dir, e))?;
    let renderer = Renderer::default();
    for (i, doc) in docs.iter().enumerate() {
        let html = match style {
            Style::Ent => renderer.render_entities(doc)?,
            Style::Rel => renderer.render_relations(doc)?,
        };
        let path = output_dir.join(format!("doc-{i:04}.html"));
        fs::write(&path, html).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn validate_dataset(dir: &Path) -> CmdResult {
    let dataset = load_dataset(dir)?;
    let report = validate_zero_shot_splits(&dataset);
    if report.ok {
        println!("ok: {} split(s), no shared classes", dataset.len());
        return Ok(());
    }
    for v in &report.violations {
        println!("{v}");
    }
    Err(Failure { code: EXIT_OVERLAP, message: format!("{} violation(s)", report.violations.len()) })
}

fn list_components() -> CmdResult {
    let mut out = io::stdout().lock();
    for d in Registry::builtin().descriptors() {
        let e2e = match d.is_end_to_end {
            Some(true) => "end-to-end",
            Some(false) => "needs-mentions",
            None if d.kind.as_str() == "linker" => "follows-members",
            None => "-",
        };
        writeln!(out, "{:<20} {:<20} {e2e}", d.key, d.kind).map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    }
    Ok(())
}
