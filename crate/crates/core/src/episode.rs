//! The construction episode: plan, try to build the planned tool, and on
//! failure replan without the attempted combination. When planning fails
//! while trusting every sensor, the episode can retry with material and
//! attachment predictions ignored for the combinations they ruled out.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::{Combination, FeatureError, FeatureScorer, RejectSet, ScoreParams};
use crate::pddl::GroundProblem;
use crate::perception::{sense, Scenario, ScenarioError};
use crate::search::{NoFeatures, Scorer, SearchConfig, SearchEngine, SearchError, SearchStatus};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustPolicy {
    /// Always trust material and attachment predictions.
    #[default]
    Fixed,
    /// Fall back to shape-only scoring of rejected combinations.
    Switchable,
}

impl fmt::Display for TrustPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrustPolicy::Fixed => "fixed",
            TrustPolicy::Switchable => "switchable",
        })
    }
}

impl FromStr for TrustPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(TrustPolicy::Fixed),
            "switchable" => Ok(TrustPolicy::Switchable),
            other => Err(format!("unknown trust policy '{other}' (expected fixed, switchable)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub search: SearchConfig,
    pub trust: TrustPolicy,
    /// Maximum failed construction attempts.
    pub budget: Option<usize>,
    pub noise: bool,
    pub params: ScoreParams,
}

impl EpisodeConfig {
    pub fn new(search: SearchConfig) -> Self {
        EpisodeConfig { search, trust: TrustPolicy::Fixed, budget: None, noise: false, params: ScoreParams::default() }
    }
}

/// Judges a construction by its object pair alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionOracle {
    accepted: Combination,
}

impl ExecutionOracle {
    pub fn new(scenario: &Scenario) -> Self {
        let gt = scenario.gt();
        ExecutionOracle { accepted: Combination::new(gt.join_action(), &gt.pair()) }
    }

    pub fn accepts(&self, combination: &Combination) -> bool {
        *combination == self.accepted
    }

    pub fn combination(&self) -> &Combination {
        &self.accepted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Accepted,
    /// No further plan exists.
    Exhausted,
    /// The failed-attempt budget was used up.
    BudgetReached,
    /// A search hit its node budget.
    NodeBudget,
    /// A plan was found that builds no tool.
    NoConstruction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceRecord {
    Search {
        scenario: String,
        index: usize,
        trust: bool,
        status: SearchStatus,
        nodes: u64,
        plan_length: Option<usize>,
        rejected: usize,
    },
    Attempt {
        scenario: String,
        index: usize,
        trust: bool,
        action: String,
        objects: Vec<String>,
        accepted: bool,
    },
    End {
        scenario: String,
        reason: EndReason,
        success: bool,
        failed_attempts: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: String,
    pub success: bool,
    pub end: EndReason,
    pub failed_attempts: usize,
    pub nodes_total: u64,
    /// Nodes expanded by each search, in launch order.
    pub search_nodes: Vec<u64>,
    /// Every plan that was executed, as action strings.
    pub plans: Vec<Vec<String>>,
    pub attempts: Vec<Combination>,
    /// Trust mode of each search.
    pub trust_trace: Vec<bool>,
    /// Combinations rejected by material or attachment while trusting.
    pub reject_final: RejectSet,
    /// Whitelist used once trust was dropped.
    pub phase2_whitelist: Option<RejectSet>,
    pub plan_length: Option<usize>,
    pub trace: Vec<TraceRecord>,
}

impl EpisodeResult {
    pub fn searches(&self) -> usize {
        self.search_nodes.len()
    }

    pub fn mean_search_nodes(&self) -> f64 {
        if self.search_nodes.is_empty() {
            0.0
        } else {
            self.nodes_total as f64 / self.search_nodes.len() as f64
        }
    }

    pub fn accepted_plan(&self) -> Option<&[String]> {
        if self.success {
            self.plans.last().map(Vec::as_slice)
        } else {
            None
        }
    }

    pub fn used_trust_switch(&self) -> bool {
        self.phase2_whitelist.is_some()
    }
}

/// Runs one episode on a grounded problem whose tool actions match the
/// scenario's tool specs.
pub fn run_episode(gp: &GroundProblem, scenario: &Scenario, cfg: &EpisodeConfig) -> Result<EpisodeResult, EpisodeError> {
    let registry = scenario.registry()?;
    let profiles = sense(scenario, cfg.noise);
    let base = FeatureScorer::new(gp, registry, profiles, cfg.params)?;
    let engine = SearchEngine::new(gp, cfg.search.clone())?;
    let oracle = ExecutionOracle::new(scenario);
    let id = scenario.id.clone();

    let mut res = EpisodeResult {
        scenario: id.clone(),
        success: false,
        end: EndReason::Exhausted,
        failed_attempts: 0,
        nodes_total: 0,
        search_nodes: Vec::new(),
        plans: Vec::new(),
        attempts: Vec::new(),
        trust_trace: Vec::new(),
        reject_final: RejectSet::default(),
        phase2_whitelist: None,
        plan_length: None,
        trace: Vec::new(),
    };
    let mut attempted: HashSet<Combination> = HashSet::new();
    let mut trust = true;
    let mut untrusted: Option<FeatureScorer> = None;

    let end = loop {
        if cfg.budget.is_some_and(|b| res.failed_attempts >= b) {
            break EndReason::BudgetReached;
        }
        let scorer: &dyn Scorer = match (&untrusted, cfg.search.use_feature_score) {
            (_, false) => &NoFeatures,
            (Some(s), true) => s,
            (None, true) => &base,
        };
        let r = engine.run(scorer, trust, &attempted)?;
        if trust {
            res.reject_final.extend(&r.reject_set_out);
        }
        res.nodes_total += r.nodes_expanded;
        res.search_nodes.push(r.nodes_expanded);
        res.trust_trace.push(trust);
        res.trace.push(TraceRecord::Search {
            scenario: id.clone(),
            index: res.search_nodes.len() - 1,
            trust,
            status: r.status,
            nodes: r.nodes_expanded,
            plan_length: r.plan.as_ref().map(Vec::len),
            rejected: r.reject_set_out.len(),
        });

        let Some(plan) = &r.plan else {
            if r.status == SearchStatus::BudgetExhausted {
                break EndReason::NodeBudget;
            }
            if trust && cfg.trust == TrustPolicy::Switchable && !res.reject_final.is_empty() {
                trust = false;
                let whitelist = res.reject_final.clone();
                untrusted = Some(base.clone().with_whitelist(whitelist.clone()));
                res.phase2_whitelist = Some(whitelist);
                continue;
            }
            break EndReason::Exhausted;
        };
        res.plans.push(plan.iter().map(|&i| gp.actions[i].to_string()).collect());
        let Some(combo) = r.first_tool_action(gp).and_then(|i| Combination::of(&gp.actions[i])) else {
            break EndReason::NoConstruction;
        };
        let accepted = oracle.accepts(&combo);
        res.trace.push(TraceRecord::Attempt {
            scenario: id.clone(),
            index: res.attempts.len(),
            trust,
            action: combo.action.clone(),
            objects: combo.objects.clone(),
            accepted,
        });
        debug_assert!(!attempted.contains(&combo), "combination {combo} attempted twice");
        attempted.insert(combo.clone());
        res.attempts.push(combo);
        if accepted {
            res.plan_length = Some(plan.len());
            break EndReason::Accepted;
        }
        res.failed_attempts += 1;
    };
    res.success = end == EndReason::Accepted;
    res.end = end;
    res.trace.push(TraceRecord::End {
        scenario: id,
        reason: end,
        success: res.success,
        failed_attempts: res.failed_attempts,
    });
    log::debug!(
        "episode {}: {:?} after {} failed attempts, {} searches",
        res.scenario,
        end,
        res.failed_attempts,
        res.searches()
    );
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptOutcome {
    pub chosen_tool: Option<String>,
    pub task_action: Option<String>,
    pub correct: bool,
    pub episode: EpisodeResult,
}

/// Runs an episode where either of two tools could solve the task and
/// reports which tool the accepted plan builds and how it is used.
pub fn run_adaptability_episode(
    gp: &GroundProblem,
    scenario: &Scenario,
    cfg: &EpisodeConfig,
) -> Result<AdaptOutcome, EpisodeError> {
    let episode = run_episode(gp, scenario, cfg)?;
    let (mut chosen_tool, mut task_action) = (None, None);
    if let Some(plan) = episode.accepted_plan() {
        for step in plan {
            let name = step.split(' ').next().unwrap_or_default();
            if let Some(tool) = name.strip_prefix(crate::pddl::JOIN_PREFIX) {
                chosen_tool.get_or_insert_with(|| tool.to_string());
            } else if scenario.tools().iter().any(|t| scenario.task.task_action(t) == Some(name)) {
                task_action.get_or_insert_with(|| name.to_string());
            }
        }
    }
    let gt_tool = &scenario.gt().tool;
    let correct = chosen_tool.as_deref() == Some(gt_tool.as_str())
        && task_action.as_deref() == scenario.task.task_action(gt_tool);
    Ok(AdaptOutcome { chosen_tool, task_action, correct, episode })
}

/// Writes trace records as one JSON object per line.
pub fn write_trace<W: Write>(out: &mut W, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
