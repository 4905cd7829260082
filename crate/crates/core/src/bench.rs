//! Experiment runner: episodes over a scenario set for several search
//! configurations, aggregated into per-tool metrics, budget curves and
//! tool-choice accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{run_adaptability_episode, run_episode, EpisodeConfig, EpisodeError, EpisodeResult, TrustPolicy};
use crate::feature::ScoreParams;
use crate::heuristics::HeuristicKind;
use crate::pddl::{ground, parse_domain, parse_problem, GroundProblem, GroundingOptions, PddlError};
use crate::perception::{
    data_dir, generate_adaptability, generate_benchmark, load_library, load_scenario_dir, Scenario, ScenarioError,
    TaskType,
};
use crate::search::{Algorithm, SearchConfig};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Pddl { path: PathBuf, source: PddlError },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("report: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

/// Reads and grounds a domain/problem pair.
pub fn load_problem(domain: &Path, problem: &Path) -> Result<GroundProblem, BenchError> {
    let dtext = fs::read_to_string(domain).map_err(io_err(domain))?;
    let ptext = fs::read_to_string(problem).map_err(io_err(problem))?;
    let d = parse_domain(&dtext).map_err(|source| BenchError::Pddl { path: domain.to_path_buf(), source })?;
    let p = parse_problem(&ptext, &d).map_err(|source| BenchError::Pddl { path: problem.to_path_buf(), source })?;
    ground(&d, &p, &GroundingOptions::default()).map_err(|source| BenchError::Pddl { path: problem.to_path_buf(), source })
}

pub fn domain_path(root: &Path, task: TaskType) -> PathBuf {
    root.join("domains").join(format!("{task}.pddl"))
}

/// Problem file for one tool, or for the two-tool variant when `tool` is None.
pub fn problem_path(root: &Path, task: TaskType, tool: Option<&str>) -> PathBuf {
    root.join("problems").join(format!("{task}_{}.pddl", tool.unwrap_or("adapt")))
}

/// Grounded problems keyed by (task, tool or "adapt").
#[derive(Debug, Default)]
pub struct Assets {
    root: PathBuf,
    problems: BTreeMap<(TaskType, String), GroundProblem>,
}

impl Assets {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Assets { root: root.into(), problems: BTreeMap::new() }
    }

    pub fn bundled() -> Self {
        Assets::new(data_dir())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn key(s: &Scenario) -> (TaskType, String) {
        let name = if s.tool_specs.len() > 1 { "adapt".to_string() } else { s.gt().tool.clone() };
        (s.task, name)
    }

    pub fn prepare(&mut self, scenarios: &[Scenario]) -> Result<(), BenchError> {
        for s in scenarios {
            let key = Assets::key(s);
            if !self.problems.contains_key(&key) {
                let tool = (key.1 != "adapt").then_some(key.1.as_str());
                let gp = load_problem(&domain_path(&self.root, s.task), &problem_path(&self.root, s.task, tool))?;
                self.problems.insert(key, gp);
            }
        }
        Ok(())
    }

    pub fn problem_for(&self, s: &Scenario) -> Option<&GroundProblem> {
        self.problems.get(&Assets::key(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Baselines,
    Algorithms,
    Adaptability,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Baselines => "baselines",
            ExperimentKind::Algorithms => "algorithms",
            ExperimentKind::Adaptability => "adaptability",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baselines" => Ok(ExperimentKind::Baselines),
            "algorithms" => Ok(ExperimentKind::Algorithms),
            "adaptability" => Ok(ExperimentKind::Adaptability),
            other => Err(format!("unknown experiment '{other}' (expected baselines, algorithms, adaptability)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioSource {
    /// Fixed scenario files shipped with the repository.
    #[default]
    Bundled,
    /// Freshly generated from the object library with the experiment seed.
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub search: SearchConfig,
}

impl NamedConfig {
    pub fn new(name: &str, algorithm: Algorithm, heuristic: HeuristicKind, features: bool) -> Self {
        NamedConfig { name: name.to_string(), search: SearchConfig::new(algorithm, heuristic, features) }
    }
}

/// Feature score with heuristic, heuristic only, feature score with uniform
/// cost, plain uniform cost.
pub fn baseline_configs() -> Vec<NamedConfig> {
    vec![
        NamedConfig::new("FS+H", Algorithm::Astar, HeuristicKind::Landmarks, true),
        NamedConfig::new("H", Algorithm::Astar, HeuristicKind::Landmarks, false),
        NamedConfig::new("FS", Algorithm::Ucs, HeuristicKind::Zero, true),
        NamedConfig::new("UCS", Algorithm::Ucs, HeuristicKind::Zero, false),
    ]
}

pub fn algorithm_configs() -> Vec<NamedConfig> {
    vec![
        NamedConfig::new("A*+LM", Algorithm::Astar, HeuristicKind::Landmarks, true),
        NamedConfig::new("wA*+FF", Algorithm::WeightedAstar, HeuristicKind::Ff, true),
        NamedConfig::new("EHC+FF", Algorithm::Ehc, HeuristicKind::Ff, true),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub source: ScenarioSource,
    /// Empty means every task type.
    #[serde(default)]
    pub tasks: Vec<TaskType>,
    /// Empty means every tool of the selected tasks.
    #[serde(default)]
    pub tools: Vec<String>,
    pub cases_per_tool: usize,
    pub configs: Vec<NamedConfig>,
    pub trust: TrustPolicy,
    #[serde(default)]
    pub budget: Option<usize>,
    /// Budgets at which cumulative success is reported.
    #[serde(default)]
    pub budgets: Vec<usize>,
    /// Number of scenarios whose ground truth gets a sensor false negative.
    #[serde(default)]
    pub false_negatives: usize,
    /// Shape jitter applied to every scenario when noise is on.
    #[serde(default)]
    pub shape_jitter: f64,
    pub seed: u64,
    #[serde(default)]
    pub params: ScoreParams,
}

pub const DEFAULT_CASES: usize = 10;
/// Seed the bundled scenario sets were generated with.
pub const BUNDLED_SEED: u64 = 1;

impl ExperimentConfig {
    pub fn baselines(seed: u64) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Baselines,
            source: ScenarioSource::Bundled,
            tasks: Vec::new(),
            tools: Vec::new(),
            cases_per_tool: DEFAULT_CASES,
            configs: baseline_configs(),
            trust: TrustPolicy::Fixed,
            budget: None,
            budgets: (0..=90).collect(),
            false_negatives: 0,
            shape_jitter: 0.0,
            seed,
            params: ScoreParams::default(),
        }
    }

    pub fn algorithms(seed: u64) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Algorithms,
            configs: algorithm_configs(),
            budgets: Vec::new(),
            ..ExperimentConfig::baselines(seed)
        }
    }

    /// Noiseless and noisy tool choice on the two-tool scenarios.
    pub fn adaptability(seed: u64) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Adaptability,
            configs: vec![baseline_configs().remove(0)],
            budgets: Vec::new(),
            false_negatives: 3,
            shape_jitter: 0.05,
            ..ExperimentConfig::baselines(seed)
        }
    }

    pub fn for_kind(kind: ExperimentKind, seed: u64) -> Self {
        match kind {
            ExperimentKind::Baselines => ExperimentConfig::baselines(seed),
            ExperimentKind::Algorithms => ExperimentConfig::algorithms(seed),
            ExperimentKind::Adaptability => ExperimentConfig::adaptability(seed),
        }
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.configs.is_empty() {
            return Err(BenchError::Config("no search configs".into()));
        }
        if self.cases_per_tool == 0 {
            return Err(BenchError::Config("cases_per_tool must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.configs {
            if !names.insert(&c.name) {
                return Err(BenchError::Config(format!("config name '{}' used twice", c.name)));
            }
            c.search.validate().map_err(|e| BenchError::Config(format!("{}: {e}", c.name)))?;
        }
        for t in &self.tools {
            if TaskType::of_tool(t).is_none() {
                return Err(BenchError::Config(format!("unknown tool '{t}'")));
            }
        }
        self.params.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }

    fn task_list(&self) -> Vec<TaskType> {
        if self.tasks.is_empty() {
            TaskType::ALL.to_vec()
        } else {
            self.tasks.clone()
        }
    }

    fn wants_tool(&self, tool: &str) -> bool {
        self.tools.is_empty() || self.tools.iter().any(|t| t == tool)
    }
}

/// The scenario set an experiment runs on, in a fixed order.
pub fn experiment_scenarios(cfg: &ExperimentConfig, root: &Path) -> Result<Vec<Scenario>, BenchError> {
    let tasks = cfg.task_list();
    let mut out = Vec::new();
    match (cfg.experiment, cfg.source) {
        (ExperimentKind::Adaptability, ScenarioSource::Bundled) => {
            for s in load_scenario_dir(&root.join("adaptability"))? {
                if tasks.contains(&s.task) {
                    out.push(s);
                }
            }
        }
        (ExperimentKind::Adaptability, ScenarioSource::Generated) => {
            let lib = load_library()?;
            for t in tasks {
                out.extend(generate_adaptability(t, cfg.cases_per_tool, cfg.seed, &lib)?);
            }
        }
        (_, ScenarioSource::Bundled) => {
            for s in load_scenario_dir(&root.join("benchmarks"))? {
                if tasks.contains(&s.task) && cfg.wants_tool(&s.gt().tool) {
                    out.push(s);
                }
            }
        }
        (_, ScenarioSource::Generated) => {
            let lib = load_library()?;
            for t in tasks {
                for tool in t.tools() {
                    if cfg.wants_tool(tool) {
                        out.extend(generate_benchmark(t, tool, cfg.cases_per_tool, cfg.seed, &lib)?);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Gives exactly `k` scenarios, picked by a seeded shuffle, a ground-truth
/// false negative, alternating material and attachment. Returns their ids.
pub fn inject_false_negatives(scenarios: &mut [Scenario], k: usize, seed: u64) -> Vec<String> {
    let mut idx: Vec<usize> = (0..scenarios.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_fa15e));
    let mut picked: Vec<usize> = idx.into_iter().take(k).collect();
    picked.sort_unstable();
    let mut ids = Vec::new();
    for (n, &i) in picked.iter().enumerate() {
        let s = &mut scenarios[i];
        if n % 2 == 0 {
            s.noise.material_fn_rate = 1.0;
        } else {
            s.noise.attach_fn_rate = 1.0;
        }
        ids.push(s.id.clone());
    }
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub task: String,
    pub tool: String,
    pub config: String,
    pub cases: usize,
    /// Mean nodes per search, averaged over successful episodes.
    pub nodes_mean: f64,
    /// Over successful episodes only.
    pub failed_attempts_mean: f64,
    pub success: usize,
    pub plan_length_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub config: String,
    pub budget: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptRow {
    pub task: String,
    pub condition: String,
    pub cases: usize,
    pub correct: usize,
    pub random_correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub scenario: String,
    pub task: String,
    pub tool: String,
    pub config: String,
    pub condition: String,
    pub success: bool,
    pub failed_attempts: usize,
    pub searches: usize,
    pub nodes_total: u64,
    pub plan_length: Option<usize>,
    pub trust_switched: bool,
    pub chosen_tool: Option<String>,
    pub task_action: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub budget_curves: Vec<BudgetPoint>,
    pub adaptability: Vec<AdaptRow>,
    pub episodes: Vec<EpisodeSummary>,
}

impl MetricsTable {
    pub fn row(&self, task: &str, tool: &str, config: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.task == task && r.tool == tool && r.config == config)
    }

    /// Benchmark-wide row of a config.
    pub fn overall(&self, config: &str) -> Option<&MetricsRow> {
        self.row(ALL, ALL, config)
    }

    pub fn curve(&self, config: &str) -> Vec<&BudgetPoint> {
        self.budget_curves.iter().filter(|p| p.config == config).collect()
    }
}

pub const ALL: &str = "all";

/// Full output of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub table: MetricsTable,
    pub episodes: Vec<(String, String, EpisodeResult)>,
    pub injected: Vec<String>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut s) = (0usize, 0.0);
    for x in xs {
        n += 1;
        s += x;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn aggregate(task: &str, tool: &str, config: &str, eps: &[&EpisodeResult]) -> MetricsRow {
    let ok: Vec<&&EpisodeResult> = eps.iter().filter(|e| e.success).collect();
    MetricsRow {
        task: task.to_string(),
        tool: tool.to_string(),
        config: config.to_string(),
        cases: eps.len(),
        nodes_mean: mean(ok.iter().map(|e| e.mean_search_nodes())),
        failed_attempts_mean: mean(ok.iter().map(|e| e.failed_attempts as f64)),
        success: ok.len(),
        plan_length_mean: mean(ok.iter().filter_map(|e| e.plan_length).map(|l| l as f64)),
    }
}

/// Success within a budget, derived from an unbudgeted episode: no search
/// is launched once `budget` attempts have failed.
pub fn succeeds_within(e: &EpisodeResult, budget: usize) -> bool {
    e.success && e.failed_attempts < budget
}

struct Job<'a> {
    scenario: &'a Scenario,
    config: &'a NamedConfig,
    condition: &'static str,
    noise: bool,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun, BenchError> {
    run_experiment_in(cfg, &data_dir())
}

pub fn run_experiment_in(cfg: &ExperimentConfig, root: &Path) -> Result<ExperimentRun, BenchError> {
    cfg.validate()?;
    let base = experiment_scenarios(cfg, root)?;
    let mut noisy = base.clone();
    let injected = inject_false_negatives(&mut noisy, cfg.false_negatives, cfg.seed);
    for s in &mut noisy {
        s.noise.shape_jitter = cfg.shape_jitter;
    }
    let mut assets = Assets::new(root);
    assets.prepare(&base)?;

    let adapt = cfg.experiment == ExperimentKind::Adaptability;
    let noise_on = cfg.false_negatives > 0 || cfg.shape_jitter > 0.0;
    let mut jobs: Vec<Job<'_>> = Vec::new();
    let sets: Vec<(&'static str, &[Scenario], bool)> = if adapt {
        vec![("noiseless", &base, false), ("noisy", &noisy, true)]
    } else if noise_on {
        vec![("noisy", &noisy, true)]
    } else {
        vec![("noiseless", &base, false)]
    };
    for (condition, set, noise) in &sets {
        for s in set.iter() {
            for c in &cfg.configs {
                jobs.push(Job { scenario: s, config: c, condition, noise: *noise });
            }
        }
    }

    type Adapt = (Option<String>, Option<String>);
    let results: Vec<Result<(EpisodeResult, Adapt), EpisodeError>> = jobs
        .par_iter()
        .map(|job| {
            let gp = assets.problem_for(job.scenario).expect("problems prepared");
            let mut ec = EpisodeConfig::new(job.config.search.clone());
            ec.trust = cfg.trust;
            ec.budget = cfg.budget;
            ec.noise = job.noise;
            ec.params = cfg.params;
            if adapt {
                run_adaptability_episode(gp, job.scenario, &ec).map(|o| (o.episode, (o.chosen_tool, o.task_action)))
            } else {
                run_episode(gp, job.scenario, &ec).map(|e| (e, (None, None)))
            }
        })
        .collect();

    let mut table = MetricsTable::default();
    let mut episodes = Vec::with_capacity(jobs.len());
    for (job, r) in jobs.iter().zip(results) {
        let (ep, (chosen, task_action)) = r?;
        let s = job.scenario;
        table.episodes.push(EpisodeSummary {
            scenario: s.id.clone(),
            task: s.task.to_string(),
            tool: s.gt().tool.clone(),
            config: job.config.name.clone(),
            condition: job.condition.to_string(),
            success: ep.success,
            failed_attempts: ep.failed_attempts,
            searches: ep.searches(),
            nodes_total: ep.nodes_total,
            plan_length: ep.plan_length,
            trust_switched: ep.used_trust_switch(),
            chosen_tool: chosen,
            task_action,
        });
        episodes.push((job.config.name.clone(), job.condition.to_string(), ep));
    }

    if adapt {
        table.adaptability = adaptability_rows(cfg, &table.episodes, &base);
    } else {
        let by = |pred: &dyn Fn(&EpisodeSummary) -> bool, config: &str| -> Vec<&EpisodeResult> {
            table
                .episodes
                .iter()
                .zip(&episodes)
                .filter(|(sum, _)| sum.config == config && pred(sum))
                .map(|(_, (_, _, e))| e)
                .collect()
        };
        let mut groups: Vec<(String, String)> =
            table.episodes.iter().map(|e| (e.task.clone(), e.tool.clone())).collect::<BTreeSet<_>>().into_iter().collect();
        groups.sort();
        let mut rows = Vec::new();
        for (task, tool) in &groups {
            for c in &cfg.configs {
                let eps = by(&|e| &e.task == task && &e.tool == tool, &c.name);
                rows.push(aggregate(task, tool, &c.name, &eps));
            }
        }
        let mut curves = Vec::new();
        for c in &cfg.configs {
            let eps = by(&|_| true, &c.name);
            rows.push(aggregate(ALL, ALL, &c.name, &eps));
            for &b in &cfg.budgets {
                let n = eps.iter().filter(|e| succeeds_within(e, b)).count();
                let rate = if eps.is_empty() { 0.0 } else { n as f64 / eps.len() as f64 };
                curves.push(BudgetPoint { config: c.name.clone(), budget: b, success_rate: rate });
            }
        }
        table.rows = rows;
        table.budget_curves = curves;
    }
    Ok(ExperimentRun { table, episodes, injected })
}

fn adaptability_rows(cfg: &ExperimentConfig, eps: &[EpisodeSummary], scenarios: &[Scenario]) -> Vec<AdaptRow> {
    // one coin flip per scenario, shared by both conditions
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random: BTreeMap<&str, bool> = scenarios
        .iter()
        .map(|s| {
            let tools = s.tools();
            let pick = tools[rng.gen_range(0..tools.len())];
            (s.id.as_str(), pick == s.gt().tool)
        })
        .collect();
    let config = &cfg.configs[0].name;
    let mut rows = Vec::new();
    for condition in ["noiseless", "noisy"] {
        let mut tasks: Vec<String> = scenarios.iter().map(|s| s.task.to_string()).collect::<BTreeSet<_>>().into_iter().collect();
        tasks.push(ALL.to_string());
        for task in tasks {
            let sel: Vec<&EpisodeSummary> = eps
                .iter()
                .filter(|e| e.condition == condition && &e.config == config && (task == ALL || e.task == task))
                .collect();
            let correct = sel
                .iter()
                .filter(|e| {
                    let task = TaskType::of_tool(&e.tool);
                    e.success
                        && e.chosen_tool.as_deref() == Some(e.tool.as_str())
                        && e.task_action.as_deref() == task.and_then(|t| t.task_action(&e.tool))
                })
                .count();
            let random_correct = sel.iter().filter(|e| random[e.scenario.as_str()]).count();
            rows.push(AdaptRow { task, condition: condition.to_string(), cases: sel.len(), correct, random_correct });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown format '{other}' (expected csv, json, markdown)")),
        }
    }
}

pub const METRICS_HEADER: [&str; 7] =
    ["task", "tool", "config", "nodes_mean", "failed_attempts_mean", "success", "plan_length_mean"];
const BUDGET_HEADER: [&str; 3] = ["config", "budget", "success_rate"];
const ADAPT_HEADER: [&str; 5] = ["task", "condition", "cases", "correct", "random_correct"];

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.3}")
    }
}

fn metric_cells(r: &MetricsRow) -> Vec<String> {
    vec![
        r.task.clone(),
        r.tool.clone(),
        r.config.clone(),
        num(r.nodes_mean),
        num(r.failed_attempts_mean),
        r.success.to_string(),
        num(r.plan_length_mean),
    ]
}

fn budget_cells(p: &BudgetPoint) -> Vec<String> {
    vec![p.config.clone(), p.budget.to_string(), num(p.success_rate)]
}

fn adapt_cells(r: &AdaptRow) -> Vec<String> {
    vec![r.task.clone(), r.condition.clone(), r.cases.to_string(), r.correct.to_string(), r.random_correct.to_string()]
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| BenchError::Report(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| BenchError::Report(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Report(e.to_string()))
}

fn markdown_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    s.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

/// Renders the report. CSV and markdown produce the metrics table plus
/// optional budget-curve and adaptability sections, each as its own
/// document keyed by a file suffix ("" for the main table).
pub fn render_report(table: &MetricsTable, format: ReportFormat) -> Result<Vec<(&'static str, String)>, BenchError> {
    let metrics: Vec<Vec<String>> = table.rows.iter().map(metric_cells).collect();
    let budget: Vec<Vec<String>> = table.budget_curves.iter().map(budget_cells).collect();
    let adapt: Vec<Vec<String>> = table.adaptability.iter().map(adapt_cells).collect();
    let mut out = Vec::new();
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(table).map_err(|e| BenchError::Report(e.to_string()))?;
            s.push('\n');
            out.push(("", s));
        }
        ReportFormat::Csv | ReportFormat::Markdown => {
            let render = |h: &[&str], rows: &[Vec<String>]| -> Result<String, BenchError> {
                match format {
                    ReportFormat::Csv => csv_string(h, rows),
                    _ => Ok(markdown_string(h, rows)),
                }
            };
            out.push(("", render(&METRICS_HEADER, &metrics)?));
            if !budget.is_empty() {
                out.push(("_budget", render(&BUDGET_HEADER, &budget)?));
            }
            if !adapt.is_empty() {
                out.push(("_adaptability", render(&ADAPT_HEADER, &adapt)?));
            }
        }
    }
    Ok(out)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

/// Writes the report to `path`; extra sections go to sibling files named
/// with a suffix before the extension. Returns the files written.
pub fn emit_report(table: &MetricsTable, format: ReportFormat, path: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let mut written = Vec::new();
    for (suffix, text) in render_report(table, format)? {
        let p = sibling(path, suffix);
        fs::write(&p, text).map_err(io_err(&p))?;
        written.push(p);
    }
    Ok(written)
}

/// Writes every episode's trace records as JSON lines.
pub fn write_traces(run: &ExperimentRun, path: &Path) -> Result<(), BenchError> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(f);
    for (config, condition, ep) in &run.episodes {
        for r in &ep.trace {
            let mut v = serde_json::to_value(r).map_err(|e| BenchError::Report(e.to_string()))?;
            if let Some(obj) = v.as_object_mut() {
                obj.insert("config".into(), config.clone().into());
                obj.insert("condition".into(), condition.clone().into());
            }
            serde_json::to_writer(&mut w, &v).map_err(|e| BenchError::Report(e.to_string()))?;
            w.write_all(b"\n").map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}
