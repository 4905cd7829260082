//! Command-line interface of the `fgs` binary.
//!
//! Exit codes: 0 success, 1 no plan or failed episode, 2 usage or
//! configuration error, 3 I/O error.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    emit_report, load_problem, problem_path, domain_path, render_report, run_experiment_in, write_traces, BenchError,
    ExperimentConfig, ExperimentKind, ReportFormat, ScenarioSource,
};
use crate::episode::{run_episode, write_trace, EpisodeConfig, EpisodeError, TrustPolicy};
use crate::feature::{FeatureScorer, ScoreParams};
use crate::heuristics::HeuristicKind;
use crate::pddl::GroundProblem;
use crate::perception::{
    data_dir, generate_adaptability, generate_benchmark, load_library, load_scenario, sense, Scenario, ScenarioError,
    TaskType,
};
use crate::search::{Algorithm, NoFeatures, Scorer, SearchConfig, SearchEngine, SearchStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fgs", version, about = "Task planning with feature guided tool construction")]
pub struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and ground a domain/problem pair and check a scenario file.
    Validate(ValidateArgs),
    /// Run a single search and print the plan, one action per line.
    Plan(PlanArgs),
    /// Run a full construction episode with replanning.
    Episode(EpisodeArgs),
    /// Run an experiment and write a metrics report.
    Bench(BenchArgs),
    /// Generate scenario files from the object library.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrustArg {
    Fixed,
    Switchable,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value = "astar")]
    pub algorithm: String,
    #[arg(long, default_value = "landmarks")]
    pub heuristic: String,
    #[arg(long, value_enum, default_value = "on")]
    pub features: OnOff,
    #[arg(long, default_value_t = 5.0)]
    pub weight: f64,
    /// Maximum nodes one search may expand.
    #[arg(long)]
    pub node_budget: Option<u64>,
    /// Apply the scenario's sensor noise.
    #[arg(long)]
    pub noise: bool,
    /// Overrides the scenario's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub files: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub files: ProblemArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Plan with material and attachment predictions ignored.
    #[arg(long)]
    pub no_trust: bool,
}

#[derive(Debug, Args)]
pub struct EpisodeArgs {
    #[command(flatten)]
    pub files: ProblemArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_enum, default_value = "fixed")]
    pub trust: TrustArg,
    /// Maximum failed construction attempts.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Write the episode trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the episode summary here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "baselines")]
    pub experiment: String,
    /// Experiment config file; overrides --experiment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use generated instead of bundled scenarios.
    #[arg(long)]
    pub generated: bool,
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long, value_enum)]
    pub trust: Option<TrustArg>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Number of scenarios given a ground-truth sensor false negative.
    #[arg(long)]
    pub false_negatives: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Write all episode traces as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub task: String,
    /// Tool to generate single-tool cases for; omit for two-tool cases.
    #[arg(long)]
    pub tool: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub cases: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Failed(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match &e {
            BenchError::Io { .. } => CliError::Io(e.to_string()),
            BenchError::Scenario(s) => CliError::from_scenario(s, e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let msg = e.to_string();
        CliError::from_scenario(&e, msg)
    }
}

impl From<EpisodeError> for CliError {
    fn from(e: EpisodeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    fn from_scenario(e: &ScenarioError, msg: String) -> Self {
        match e {
            ScenarioError::Io { .. } => CliError::Io(msg),
            _ => CliError::Usage(msg),
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a, stdout),
        Command::Plan(a) => cmd_plan(a, stdout, stderr),
        Command::Episode(a) => cmd_episode(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
        Command::Generate(a) => cmd_generate(a, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

struct Loaded {
    gp: GroundProblem,
    scenario: Option<Scenario>,
}

/// Resolves domain and problem, falling back to the bundled files matching
/// the scenario's task and tools.
fn load(files: &ProblemArgs, seed: Option<u64>) -> Result<Loaded, CliError> {
    let mut scenario = match &files.scenario {
        Some(p) => Some(load_scenario(p)?),
        None => None,
    };
    if let (Some(s), Some(seed)) = (scenario.as_mut(), seed) {
        s.noise.seed = seed;
    }
    let root = data_dir();
    let (domain, problem) = match (&files.domain, &files.problem, &scenario) {
        (Some(d), Some(p), _) => (d.clone(), p.clone()),
        (None, None, Some(s)) => {
            let tool = (s.tool_specs.len() == 1).then(|| s.gt().tool.as_str());
            (domain_path(&root, s.task), problem_path(&root, s.task, tool))
        }
        _ => return Err(CliError::Usage("give --domain and --problem, or a --scenario to pick bundled ones".into())),
    };
    let gp = load_problem(&domain, &problem)?;
    Ok(Loaded { gp, scenario })
}

fn search_config(a: &SearchArgs) -> Result<SearchConfig, CliError> {
    let algorithm: Algorithm = a.algorithm.parse().map_err(CliError::Usage)?;
    let heuristic: HeuristicKind = a.heuristic.parse().map_err(CliError::Usage)?;
    let cfg = SearchConfig {
        algorithm,
        heuristic,
        use_feature_score: a.features == OnOff::On,
        weight: a.weight,
        node_budget: a.node_budget,
        ..SearchConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load(&a.files, None)?;
    let gp = &loaded.gp;
    let tools = gp.actions.iter().filter(|x| x.is_tool_action()).count();
    writeln!(out, "atoms {}", gp.num_atoms()).map_err(io(Path::new("stdout")))?;
    writeln!(out, "actions {} ({} tool)", gp.actions.len(), tools).map_err(io(Path::new("stdout")))?;
    if let Some(s) = &loaded.scenario {
        let reg = s.registry()?;
        reg.check_alignment(gp).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(out, "scenario {} ({} objects)", s.id, s.objects.len()).map_err(io(Path::new("stdout")))?;
    }
    Ok(())
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = search_config(&a.search)?;
    let loaded = load(&a.files, a.search.seed)?;
    let gp = &loaded.gp;
    let scorer: Box<dyn Scorer> = match (&loaded.scenario, cfg.use_feature_score) {
        (Some(s), true) => {
            let fs = FeatureScorer::new(gp, s.registry()?, sense(s, a.search.noise), ScoreParams::default())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Box::new(fs)
        }
        (None, true) => return Err(CliError::Usage("--features on needs a --scenario".into())),
        (_, false) => Box::new(NoFeatures),
    };
    let engine = SearchEngine::new(gp, cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let r = engine.run(scorer.as_ref(), !a.no_trust, &HashSet::new()).map_err(|e| CliError::Failed(e.to_string()))?;
    let _ = writeln!(err, "nodes expanded: {}", r.nodes_expanded);
    match &r.plan {
        Some(plan) => {
            let stdout = Path::new("stdout");
            for &i in plan {
                writeln!(out, "{}", gp.actions[i]).map_err(io(stdout))?;
            }
            Ok(())
        }
        None => Err(CliError::Failed(match r.status {
            SearchStatus::BudgetExhausted => "node budget reached without a plan".into(),
            _ => "no plan found".into(),
        })),
    }
}

fn cmd_episode(a: &EpisodeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = search_config(&a.search)?;
    let loaded = load(&a.files, a.search.seed)?;
    let scenario = loaded.scenario.as_ref().ok_or_else(|| CliError::Usage("episode needs --scenario".into()))?;
    let mut ec = EpisodeConfig::new(cfg);
    ec.trust = match a.trust {
        TrustArg::Fixed => TrustPolicy::Fixed,
        TrustArg::Switchable => TrustPolicy::Switchable,
    };
    ec.budget = a.budget;
    ec.noise = a.search.noise;
    let res = run_episode(&loaded.gp, scenario, &ec)?;
    if let Some(path) = &a.trace {
        let mut f = fs::File::create(path).map_err(io(path))?;
        write_trace(&mut f, &res.trace).map_err(io(path))?;
    }
    let summary = serde_json::json!({
        "scenario": res.scenario,
        "success": res.success,
        "end": res.end,
        "failed_attempts": res.failed_attempts,
        "searches": res.searches(),
        "nodes_total": res.nodes_total,
        "plan_length": res.plan_length,
        "trust_trace": res.trust_trace,
        "attempts": res.attempts.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "plan": res.accepted_plan(),
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&summary).expect("json"));
    match &a.out {
        Some(p) => fs::write(p, text).map_err(io(p))?,
        None => out.write_all(text.as_bytes()).map_err(io(Path::new("stdout")))?,
    }
    if res.success {
        Ok(())
    } else {
        Err(CliError::Failed(format!("episode ended without a tool: {:?}", res.end)))
    }
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let kind: ExperimentKind = a.experiment.parse().map_err(CliError::Usage)?;
            ExperimentConfig::for_kind(kind, a.seed)
        }
    };
    if a.config.is_none() || a.seed != 0 {
        cfg.seed = a.seed;
    }
    if a.generated {
        cfg.source = ScenarioSource::Generated;
    }
    if let Some(c) = a.cases {
        cfg.cases_per_tool = c;
    }
    if let Some(t) = a.trust {
        cfg.trust = match t {
            TrustArg::Fixed => TrustPolicy::Fixed,
            TrustArg::Switchable => TrustPolicy::Switchable,
        };
    }
    if a.budget.is_some() {
        cfg.budget = a.budget;
    }
    if let Some(k) = a.false_negatives {
        cfg.false_negatives = k;
    }
    let run = run_experiment_in(&cfg, &data_dir())?;
    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Markdown => ReportFormat::Markdown,
    };
    if let Some(p) = &a.trace {
        write_traces(&run, p)?;
    }
    match &a.out {
        Some(p) => {
            emit_report(&run.table, format, p)?;
        }
        None => {
            for (_, text) in render_report(&run.table, format)? {
                out.write_all(text.as_bytes()).map_err(io(Path::new("stdout")))?;
            }
        }
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let task: TaskType = a.task.parse().map_err(CliError::Usage)?;
    let lib = load_library()?;
    let scenarios = match &a.tool {
        Some(tool) => generate_benchmark(task, tool, a.cases, a.seed, &lib),
        None => generate_adaptability(task, a.cases, a.seed, &lib),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&a.out_dir).map_err(io(&a.out_dir))?;
    for s in &scenarios {
        let p = a.out_dir.join(format!("{}.toml", s.id));
        fs::write(&p, s.to_toml()).map_err(io(&p))?;
    }
    let _ = writeln!(err, "wrote {} scenarios to {}", scenarios.len(), a.out_dir.display());
    Ok(())
}
