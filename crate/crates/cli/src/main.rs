use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sopstruct_core::harness::{
    evaluate, ingest, render_report, score_precomputed, EvalOptions, Evaluation, HarnessConfig, MetricReport,
    ReportFormat,
};
use sopstruct_core::llm::{
    segment, structure_document, ChatClient, HttpClient, LlmTranscript, MockClient, RecordingClient,
};
use sopstruct_core::pddl::{emit_domain, emit_problem, generate_problem, ground};
use sopstruct_core::planner::{
    parse_plan_file, solve_with, structured_plan_score, validate_plan, PlanOutcome, Strategy,
};
use sopstruct_core::sop::random::DagGenerator;
use sopstruct_core::sop::{parse_sop_unchecked, serialize_sop_pretty, SopDocument, StructuredSop};
use sopstruct_core::validators::{deterministic_scores, findings_to_jsonl, structural_preflight};

const EXIT_ROW_ERRORS: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "sopstruct", version, about = "Structure, validate and evaluate standard operating procedures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a procedure document into segments.
    Segment(DocArgs),
    /// Turn a procedure document into a structured graph.
    Structure(DocArgs),
    /// Run the deterministic checks on a graph.
    Validate(GraphArgs),
    /// Decide whether a plan traverses a graph, or check a given plan.
    Plan {
        #[command(flatten)]
        graph: GraphArgs,
        /// Validate this plan (one action per line) instead of searching.
        #[arg(long)]
        plan_file: Option<PathBuf>,
        /// Search strategy; `bfs` is exhaustive and only for small graphs.
        #[arg(long, value_parser = ["fixpoint", "bfs"], default_value = "fixpoint")]
        search: String,
        /// State budget for `--search bfs`.
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
    },
    /// Write the planning domain and the graph's problem.
    EmitPddl {
        #[command(flatten)]
        graph: GraphArgs,
        /// Directory for domain.pddl and problem.pddl; prints the problem
        /// when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate and score every document of the configured datasets.
    Evaluate(RunArgs),
    /// Score graphs produced elsewhere against the configured datasets.
    Score {
        #[command(flatten)]
        run: RunArgs,
        /// Directory of `<doc_id>.json` graphs.
        #[arg(long)]
        dags: PathBuf,
    },
    /// Re-render a JSON report.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

#[derive(Args)]
struct ClientArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replay model answers from this transcript instead of calling a model.
    #[arg(long)]
    mock_transcript: Option<PathBuf>,
}

#[derive(Args)]
struct DocArgs {
    document: PathBuf,
    #[command(flatten)]
    client: ClientArgs,
}

#[derive(Args)]
struct GraphArgs {
    /// Structured graph JSON file.
    #[arg(required_unless_present = "random")]
    sop: Option<PathBuf>,
    /// Use a generated graph instead of a file.
    #[arg(long, conflicts_with = "sop")]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    client: ClientArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report formats to write; all three by default.
    #[arg(long, value_delimiter = ',')]
    format: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

/// The error chain, skipping causes whose text a wrapper already includes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Segment(args) => {
            let (cfg, client) = setup(&args.client)?;
            let client = client.context("segmenting needs a model; pass --mock-transcript or configure a client")?;
            let doc = read_document(&args.document)?;
            let segments = segment(&doc, client.as_ref(), &cfg.pipeline_config().map_err(anyhow::Error::msg)?)?;
            println!("{}", serde_json::to_string_pretty(&segments)?);
            Ok(0)
        }
        Command::Structure(args) => {
            let (cfg, client) = setup(&args.client)?;
            let client = client.context("structuring needs a model; pass --mock-transcript or configure a client")?;
            let doc = read_document(&args.document)?;
            let pipeline = cfg.pipeline_config().map_err(anyhow::Error::msg)?;
            let (_, sop) = structure_document(&doc, client.as_ref(), &pipeline)?;
            println!("{}", serialize_sop_pretty(&sop));
            Ok(0)
        }
        Command::Validate(graph) => {
            let sop = load_graph(&graph)?;
            let det = deterministic_scores(&sop);
            let plan = structured_plan_score(&sop);
            let mut findings = structural_preflight(&sop);
            findings.extend(det.findings.iter().cloned());
            let summary = serde_json::json!({
                "structured_plan_score": plan.score,
                "dependency_score": det.dependency_score,
                "input_from_dependency_score": det.input_from_dependency_score,
                "blocked_subtasks": plan.blocked_subtasks,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            eprint!("{}", findings_to_jsonl(&findings));
            let clean = plan.score == 1 && det.dependency_score == 1.0 && det.input_from_dependency_score == 1.0;
            Ok(if clean { 0 } else { EXIT_ROW_ERRORS })
        }
        Command::Plan {
            graph,
            plan_file,
            search,
            max_states,
        } => {
            let sop = load_graph(&graph)?;
            let (problem, _) = generate_problem(&sop)?;
            let task = ground(&problem);
            if let Some(path) = plan_file {
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let v = validate_plan(&task, &parse_plan_file(&text));
                println!("{}", v.diagnostic);
                return Ok(if v.valid { 0 } else { EXIT_ROW_ERRORS });
            }
            let strategy = match search.as_str() {
                "bfs" => Strategy::BreadthFirst { max_states },
                _ => Strategy::Fixpoint,
            };
            match solve_with(&task, strategy) {
                None => bail!("breadth-first search exceeded {max_states} states"),
                Some(PlanOutcome::Solved(plan)) => {
                    print!("{}", plan.to_text());
                    Ok(0)
                }
                Some(PlanOutcome::Unsolvable(u)) => {
                    println!("{}", serde_json::to_string_pretty(&u)?);
                    Ok(EXIT_ROW_ERRORS)
                }
            }
        }
        Command::EmitPddl { graph, out } => {
            let sop = load_graph(&graph)?;
            let (problem, _) = generate_problem(&sop)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("domain.pddl"), emit_domain())?;
                    std::fs::write(dir.join("problem.pddl"), emit_problem(&problem))?;
                }
                None => print!("{}", emit_problem(&problem)),
            }
            Ok(0)
        }
        Command::Evaluate(args) => run_batch(&args, None),
        Command::Score { run, dags } => run_batch(&run, Some(&dags)),
        Command::Report { report, format } => {
            let fmt = ReportFormat::parse(&format).with_context(|| format!("unknown format `{format}`"))?;
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let report: MetricReport = serde_json::from_str(&text).context("parsing report")?;
            print!("{}", render_report(&report, fmt));
            Ok(0)
        }
    }
}

type SharedClient = Box<dyn ChatClient>;

/// Loads the configuration and picks a client: a replayed transcript, else
/// the configured endpoint, else none.
fn setup(args: &ClientArgs) -> Result<(HarnessConfig, Option<SharedClient>)> {
    let cfg = match &args.config {
        Some(path) => HarnessConfig::load(path).map_err(anyhow::Error::msg)?,
        None => HarnessConfig::default(),
    };
    let client: Option<SharedClient> = if let Some(path) = &args.mock_transcript {
        let t = LlmTranscript::load(path).with_context(|| format!("loading transcript {}", path.display()))?;
        Some(Box::new(MockClient::replay(&t)))
    } else {
        let spec = cfg.client.clone().unwrap_or_default();
        match spec.resolved_endpoint() {
            Some(_) => Some(Box::new(HttpClient::from_spec(&spec)?)),
            None => None,
        }
    };
    let client = match (client, &cfg.transcript_path) {
        (Some(c), Some(path)) => Some(Box::new(RecordingClient::new(c).with_sink(path.clone())) as SharedClient),
        (c, _) => c,
    };
    Ok((cfg, client))
}

fn read_document(path: &Path) -> Result<SopDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "document".into());
    Ok(SopDocument::new(id, text)?)
}

fn load_graph(args: &GraphArgs) -> Result<StructuredSop> {
    if args.random {
        return Ok(DagGenerator::default().generate_seeded(args.seed));
    }
    let path = args.sop.as_ref().expect("clap requires a graph");
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_sop_unchecked(&text)?)
}

fn formats(names: &[String]) -> Result<Vec<ReportFormat>> {
    if names.is_empty() {
        return Ok(vec![ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json]);
    }
    names
        .iter()
        .map(|n| ReportFormat::parse(n).with_context(|| format!("unknown format `{n}`")))
        .collect()
}

fn run_batch(args: &RunArgs, dags: Option<&Path>) -> Result<u8> {
    let formats = formats(&args.format)?;
    let (cfg, client) = setup(&args.client)?;
    if cfg.datasets.is_empty() {
        bail!("the configuration lists no datasets");
    }
    if dags.is_none() && client.is_none() {
        bail!("evaluation needs a model; pass --mock-transcript or configure a client endpoint");
    }
    let mut code = 0;
    for spec in &cfg.datasets {
        let docs = ingest(spec)?;
        let mut opts = EvalOptions::from_config(&cfg, &spec.name).map_err(anyhow::Error::msg)?;
        if args.client.mock_transcript.is_some() {
            opts.pipeline.model = "mock".into();
        }
        let client = client.as_deref();
        let eval = match dags {
            None => evaluate(&docs, client, &opts),
            Some(dir) => score_precomputed(&read_dags(dir, &docs)?, &docs, client, &opts),
        };
        let out = if cfg.datasets.len() == 1 {
            args.out.clone()
        } else {
            args.out.join(&spec.name)
        };
        write_outputs(&out, &eval, &formats)?;
        if eval.report.errored_rows() > 0 {
            code = EXIT_ROW_ERRORS;
        }
    }
    Ok(code)
}

/// Graphs named after documents, in document order; a document without a
/// graph gets an empty entry that scores 0.
fn read_dags(dir: &Path, docs: &[SopDocument]) -> Result<Vec<(String, String)>> {
    docs.iter()
        .map(|d| {
            let path = dir.join(format!("{}.json", d.doc_id));
            let text = if path.exists() {
                std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?
            } else {
                String::new()
            };
            Ok((d.doc_id.clone(), text))
        })
        .collect()
}

fn write_outputs(out: &Path, eval: &Evaluation, formats: &[ReportFormat]) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for f in formats {
        let path = out.join(format!("report.{}", f.extension()));
        std::fs::write(&path, render_report(&eval.report, *f))?;
    }
    std::fs::write(out.join("domain.pddl"), emit_domain())?;
    for art in &eval.artifacts {
        let dir = out.join("docs").join(&art.doc_id);
        std::fs::create_dir_all(&dir)?;
        if let Some(sop) = &art.sop {
            std::fs::write(dir.join("sop.json"), serialize_sop_pretty(sop) + "\n")?;
        }
        if !art.segments.is_empty() {
            std::fs::write(dir.join("segments.json"), serde_json::to_string_pretty(&art.segments)? + "\n")?;
        }
        if let Some(pddl) = &art.problem_pddl {
            std::fs::write(dir.join("problem.pddl"), pddl)?;
        }
        if let Some(plan) = &art.plan {
            std::fs::write(dir.join("plan.json"), serde_json::to_string_pretty(plan)? + "\n")?;
            if let Some(PlanOutcome::Solved(p)) = &plan.outcome {
                std::fs::write(dir.join("plan.txt"), p.to_text())?;
            }
        }
        std::fs::write(dir.join("findings.jsonl"), findings_to_jsonl(&art.findings))?;
        if !art.transcript.is_empty() {
            std::fs::write(dir.join("transcript.jsonl"), art.transcript.to_jsonl())?;
        }
        if !art.verdicts.is_empty() {
            std::fs::write(dir.join("verdicts.json"), serde_json::to_string_pretty(&art.verdicts)? + "\n")?;
        }
    }
    print!("{}", render_report(&eval.report, ReportFormat::Markdown));
    Ok(())
}
