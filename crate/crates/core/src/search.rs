//! Best-first search over a grounded model with an optional feature score
//! on tool-construction edges, plus enforced hill-climbing.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::{Combination, RejectSet};
use crate::heuristics::{HeuristicEvaluator, HeuristicKind, PathMemo};
use crate::pddl::{GroundAction, GroundProblem, PlanError, State};

/// Scores the transition taking `action` out of `state`. Results are cached
/// per action within one search, so a scorer must give the same value for an
/// action regardless of the state it is applied in.
pub trait Scorer {
    fn score(&self, state: &State, action: &GroundAction, trust: bool) -> f64;
}

/// Scores every transition 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFeatures;

impl Scorer for NoFeatures {
    fn score(&self, _state: &State, _action: &GroundAction, _trust: bool) -> f64 {
        0.0
    }
}

impl<F: Fn(&GroundAction, bool) -> f64> Scorer for F {
    fn score(&self, _state: &State, action: &GroundAction, trust: bool) -> f64 {
        self(action, trust)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Astar,
    Ucs,
    #[serde(rename = "wastar")]
    WeightedAstar,
    Ehc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Astar => "astar",
            Algorithm::Ucs => "ucs",
            Algorithm::WeightedAstar => "wastar",
            Algorithm::Ehc => "ehc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "astar" => Ok(Algorithm::Astar),
            "ucs" => Ok(Algorithm::Ucs),
            "wastar" => Ok(Algorithm::WeightedAstar),
            "ehc" => Ok(Algorithm::Ehc),
            other => Err(format!("unknown algorithm '{other}' (expected astar, wastar, ehc, ucs)")),
        }
    }
}

/// Ordering among open nodes with equal f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Lower h first, then earlier insertion.
    #[default]
    LowHFifo,
    /// Earlier insertion only.
    Fifo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub heuristic: HeuristicKind,
    pub use_feature_score: bool,
    pub weight: f64,
    pub tie_break: TieBreak,
    pub node_budget: Option<u64>,
    /// Keep the final g of every closed state in the result.
    #[serde(skip)]
    pub record_closed: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Astar,
            heuristic: HeuristicKind::Landmarks,
            use_feature_score: true,
            weight: 5.0,
            tie_break: TieBreak::default(),
            node_budget: None,
            record_closed: false,
        }
    }
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm, heuristic: HeuristicKind, use_feature_score: bool) -> Self {
        SearchConfig { algorithm, heuristic, use_feature_score, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.weight >= 1.0 && self.weight.is_finite()) {
            return Err(SearchError::InvalidConfig(format!("weight {} must be a finite number >= 1", self.weight)));
        }
        Ok(())
    }

    /// The heuristic actually consulted; uniform cost search ignores it.
    pub fn effective_heuristic(&self) -> HeuristicKind {
        match self.algorithm {
            Algorithm::Ucs => HeuristicKind::Zero,
            _ => self.heuristic,
        }
    }

    fn priority(&self, g: f64, h: f64, phi: f64) -> f64 {
        let f = match (self.algorithm, self.use_feature_score) {
            (Algorithm::Astar, _) => g + h - phi,
            (Algorithm::Ucs, true) => g + (2.0 - phi),
            (Algorithm::Ucs, false) => g,
            (Algorithm::WeightedAstar, _) => g + self.weight * (h - phi),
            (Algorithm::Ehc, _) => h - phi,
        };
        if self.algorithm == Algorithm::Ehc {
            f
        } else {
            f.max(0.0)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("internal error: extracted plan is invalid: {0}")]
    InvalidPlan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Solved,
    Exhausted,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// Action indices into the grounded problem.
    pub plan: Option<Vec<usize>>,
    pub status: SearchStatus,
    pub nodes_expanded: u64,
    pub reject_set_out: RejectSet,
    pub trust_used: bool,
    /// Tool actions in the order their successor states were first expanded.
    pub tool_expansion_order: Vec<usize>,
    /// Closed states with their final g, when requested.
    pub closed: Vec<(State, f64)>,
}

impl PlanResult {
    pub fn solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }

    pub fn plan_actions<'a>(&self, gp: &'a GroundProblem) -> Vec<&'a GroundAction> {
        self.plan.iter().flatten().map(|&i| &gp.actions[i]).collect()
    }

    /// The first tool action of the plan, if any.
    pub fn first_tool_action(&self, gp: &GroundProblem) -> Option<usize> {
        self.plan.as_ref()?.iter().copied().find(|&i| gp.actions[i].is_tool_action())
    }
}

#[derive(Debug, Clone)]
struct Node {
    state: State,
    g: f64,
    h: f64,
    parent: Option<(usize, usize)>,
    memo: PathMemo,
    closed_at: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    f: f64,
    h: f64,
    seq: u64,
    node: usize,
    g: f64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed so the max-heap pops the smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Per-search feature bookkeeping: cached scores, exclusions and the reject
/// set being built.
struct EdgeScores<'s> {
    scorer: &'s dyn Scorer,
    enabled: bool,
    trust: bool,
    excluded: Vec<bool>,
    cache: Vec<Option<f64>>,
    reject: RejectSet,
}

impl<'s> EdgeScores<'s> {
    fn new(gp: &GroundProblem, scorer: &'s dyn Scorer, enabled: bool, trust: bool, exclusions: &HashSet<Combination>) -> Self {
        let excluded = gp
            .actions
            .iter()
            .map(|a| Combination::of(a).is_some_and(|c| exclusions.contains(&c)))
            .collect();
        EdgeScores {
            scorer,
            enabled,
            trust,
            excluded,
            cache: vec![None; gp.actions.len()],
            reject: RejectSet::default(),
        }
    }

    /// φ of the edge, or None when the successor must be skipped.
    fn phi(&mut self, gp: &GroundProblem, state: &State, ai: usize) -> Option<f64> {
        if self.excluded[ai] {
            return None;
        }
        if !self.enabled {
            return Some(0.0);
        }
        let action = &gp.actions[ai];
        let phi = *self.cache[ai].get_or_insert_with(|| self.scorer.score(state, action, self.trust));
        if phi == f64::NEG_INFINITY {
            if self.trust {
                if let Some(c) = Combination::of(action) {
                    self.reject.insert(c);
                }
            }
            return None;
        }
        Some(phi)
    }
}

/// Search engine bound to one grounded problem and configuration. The
/// heuristic tables are built once and reused across runs.
pub struct SearchEngine<'a> {
    gp: &'a GroundProblem,
    cfg: SearchConfig,
    eval: HeuristicEvaluator,
}

impl<'a> SearchEngine<'a> {
    pub fn new(gp: &'a GroundProblem, cfg: SearchConfig) -> Result<Self, SearchError> {
        cfg.validate()?;
        let eval = HeuristicEvaluator::new(cfg.effective_heuristic(), gp);
        Ok(SearchEngine { gp, cfg, eval })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.cfg
    }

    pub fn run(
        &self,
        scorer: &dyn Scorer,
        trust: bool,
        exclusions: &HashSet<Combination>,
    ) -> Result<PlanResult, SearchError> {
        let scores = EdgeScores::new(self.gp, scorer, self.cfg.use_feature_score, trust, exclusions);
        match self.cfg.algorithm {
            Algorithm::Ehc => self.run_ehc(scores),
            _ => self.run_best_first(scores),
        }
    }

    fn over_budget(&self, expanded: u64) -> bool {
        self.cfg.node_budget.is_some_and(|b| expanded >= b)
    }

    fn finish(
        &self,
        plan: Option<Vec<usize>>,
        status: SearchStatus,
        nodes_expanded: u64,
        scores: EdgeScores<'_>,
        tool_expansion_order: Vec<usize>,
        closed: Vec<(State, f64)>,
    ) -> Result<PlanResult, SearchError> {
        if let Some(p) = &plan {
            self.gp.validate_plan(p)?;
        }
        Ok(PlanResult {
            plan,
            status,
            nodes_expanded,
            reject_set_out: scores.reject,
            trust_used: scores.trust,
            tool_expansion_order,
            closed,
        })
    }

    fn run_best_first(&self, mut scores: EdgeScores<'_>) -> Result<PlanResult, SearchError> {
        let gp = self.gp;
        let mut nodes: Vec<Node> = Vec::new();
        let mut index: HashMap<State, usize> = HashMap::new();
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        let mut expanded = 0u64;
        let mut tool_order = Vec::new();
        let mut tool_seen = HashSet::new();

        let root_memo = self.eval.root_memo(&gp.init);
        let h0 = self.eval.estimate(gp, &gp.init, &root_memo);
        nodes.push(Node { state: gp.init.clone(), g: 0.0, h: h0, parent: None, memo: root_memo, closed_at: None });
        index.insert(gp.init.clone(), 0);
        if h0.is_finite() {
            open.push(self.entry(0.0, h0, 0.0, &mut seq, 0));
        }

        while let Some(e) = open.pop() {
            let n = &nodes[e.node];
            if e.g > n.g || n.closed_at == Some(n.g) {
                continue;
            }
            if gp.goal_satisfied(&n.state) {
                let plan = extract_plan(&nodes_parents(&nodes), e.node);
                let closed = self.closed_list(&nodes);
                return self.finish(Some(plan), SearchStatus::Solved, expanded, scores, tool_order, closed);
            }
            if self.over_budget(expanded) {
                let closed = self.closed_list(&nodes);
                return self.finish(None, SearchStatus::BudgetExhausted, expanded, scores, tool_order, closed);
            }
            expanded += 1;
            nodes[e.node].closed_at = Some(e.g);
            if let Some((_, ai)) = nodes[e.node].parent {
                if gp.actions[ai].is_tool_action() && tool_seen.insert(ai) {
                    tool_order.push(ai);
                }
            }

            let state = nodes[e.node].state.clone();
            let g = nodes[e.node].g;
            for ai in gp.applicable_actions(&state) {
                let action = &gp.actions[ai];
                let next = action.apply(&state);
                let g2 = g + action.base_cost;
                let known = index.get(&next).copied();
                if known.is_some_and(|j| g2 >= nodes[j].g) {
                    continue;
                }
                // c(s) is only lowered for successors that survive scoring
                let Some(phi) = scores.phi(gp, &state, ai) else {
                    continue;
                };
                let memo = self.eval.child_memo(&nodes[e.node].memo, &next);
                let h = match known {
                    Some(j) if self.eval.kind() != HeuristicKind::Landmarks => nodes[j].h,
                    _ => self.eval.estimate(gp, &next, &memo),
                };
                if !h.is_finite() {
                    continue;
                }
                let j = match known {
                    Some(j) => {
                        let n = &mut nodes[j];
                        n.g = g2;
                        n.h = h;
                        n.parent = Some((e.node, ai));
                        n.memo = memo;
                        j
                    }
                    None => {
                        nodes.push(Node { state: next.clone(), g: g2, h, parent: Some((e.node, ai)), memo, closed_at: None });
                        index.insert(next, nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                let entry = self.entry(g2, h, phi, &mut seq, j);
                open.push(entry);
            }
        }
        let closed = self.closed_list(&nodes);
        self.finish(None, SearchStatus::Exhausted, expanded, scores, tool_order, closed)
    }

    fn entry(&self, g: f64, h: f64, phi: f64, seq: &mut u64, node: usize) -> Entry {
        let f = self.cfg.priority(g, h, phi);
        let h_key = match self.cfg.tie_break {
            TieBreak::LowHFifo => h,
            TieBreak::Fifo => 0.0,
        };
        *seq += 1;
        Entry { f, h: h_key, seq: *seq, node, g }
    }

    fn closed_list(&self, nodes: &[Node]) -> Vec<(State, f64)> {
        if !self.cfg.record_closed {
            return Vec::new();
        }
        nodes.iter().filter(|n| n.closed_at.is_some()).map(|n| (n.state.clone(), n.g)).collect()
    }

    fn run_ehc(&self, mut scores: EdgeScores<'_>) -> Result<PlanResult, SearchError> {
        let gp = self.gp;
        let mut expanded = 0u64;
        let mut plan: Vec<usize> = Vec::new();
        let mut tool_order = Vec::new();
        let mut state = gp.init.clone();
        let mut memo = self.eval.root_memo(&state);
        let h0 = self.eval.estimate(gp, &state, &memo);
        if !h0.is_finite() && !gp.goal_satisfied(&state) {
            return self.finish(None, SearchStatus::Exhausted, 0, scores, tool_order, Vec::new());
        }
        let mut current_f = self.cfg.priority(0.0, h0, 0.0);

        struct Local {
            state: State,
            parent: Option<(usize, usize)>,
            memo: PathMemo,
        }

        while !gp.goal_satisfied(&state) {
            // breadth-first probe for a strictly better state
            let mut local = vec![Local { state: state.clone(), parent: None, memo: memo.clone() }];
            let mut seen: HashSet<State> = HashSet::from([state.clone()]);
            let mut queue = VecDeque::from([0usize]);
            let mut found: Option<(usize, f64)> = None;
            while let Some(li) = queue.pop_front() {
                if self.over_budget(expanded) {
                    return self.finish(None, SearchStatus::BudgetExhausted, expanded, scores, tool_order, Vec::new());
                }
                expanded += 1;
                let from = local[li].state.clone();
                // (goal, f, h, order) of the best improving child
                let mut best: Option<(bool, f64, f64, usize)> = None;
                let mut children = Vec::new();
                for ai in gp.applicable_actions(&from) {
                    let next = gp.actions[ai].apply(&from);
                    if seen.contains(&next) {
                        continue;
                    }
                    let Some(phi) = scores.phi(gp, &from, ai) else {
                        continue;
                    };
                    let child_memo = self.eval.child_memo(&local[li].memo, &next);
                    let h = self.eval.estimate(gp, &next, &child_memo);
                    if !h.is_finite() {
                        continue;
                    }
                    seen.insert(next.clone());
                    let f = self.cfg.priority(0.0, h, phi);
                    let goal = gp.goal_satisfied(&next);
                    local.push(Local { state: next, parent: Some((li, ai)), memo: child_memo });
                    let id = local.len() - 1;
                    children.push(id);
                    if goal || f < current_f {
                        let cand = (goal, f, h, id);
                        let better = match best {
                            None => true,
                            Some((bg, bf, bh, _)) => {
                                (goal && !bg) || (goal == bg && (f.total_cmp(&bf).then(h.total_cmp(&bh)) == Ordering::Less))
                            }
                        };
                        if better {
                            best = Some(cand);
                        }
                    }
                }
                if let Some((_, f, _, id)) = best {
                    found = Some((id, f));
                    break;
                }
                queue.extend(children);
            }
            let Some((id, f)) = found else {
                return self.finish(None, SearchStatus::Exhausted, expanded, scores, tool_order, Vec::new());
            };
            let parents: Vec<Option<(usize, usize)>> = local.iter().map(|l| l.parent).collect();
            let segment = extract_plan(&parents, id);
            for &ai in &segment {
                if gp.actions[ai].is_tool_action() && !tool_order.contains(&ai) {
                    tool_order.push(ai);
                }
            }
            plan.extend(segment);
            let chosen = local.swap_remove(id);
            state = chosen.state;
            memo = chosen.memo;
            current_f = f;
        }
        self.finish(Some(plan), SearchStatus::Solved, expanded, scores, tool_order, Vec::new())
    }
}

fn nodes_parents(nodes: &[Node]) -> Vec<Option<(usize, usize)>> {
    nodes.iter().map(|n| n.parent).collect()
}

/// Follows parent links `(parent node, action)` from `goal` to the root and
/// returns the actions in execution order.
pub fn extract_plan(parents: &[Option<(usize, usize)>], goal: usize) -> Vec<usize> {
    let mut plan = Vec::new();
    let mut cur = goal;
    let mut steps = 0;
    while let Some((p, a)) = parents[cur] {
        plan.push(a);
        cur = p;
        steps += 1;
        assert!(steps <= parents.len(), "cycle in parent chain");
    }
    plan.reverse();
    plan
}

/// One search with a fresh engine.
pub fn search(
    gp: &GroundProblem,
    cfg: &SearchConfig,
    scorer: &dyn Scorer,
    trust: bool,
    exclusions: &HashSet<Combination>,
) -> Result<PlanResult, SearchError> {
    SearchEngine::new(gp, cfg.clone())?.run(scorer, trust, exclusions)
}

/// Enforced hill-climbing regardless of the configured algorithm.
pub fn search_ehc(
    gp: &GroundProblem,
    cfg: &SearchConfig,
    scorer: &dyn Scorer,
    trust: bool,
    exclusions: &HashSet<Combination>,
) -> Result<PlanResult, SearchError> {
    let cfg = SearchConfig { algorithm: Algorithm::Ehc, ..cfg.clone() };
    search(gp, &cfg, scorer, trust, exclusions)
}
