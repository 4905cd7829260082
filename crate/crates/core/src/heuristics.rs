//! Delete-relaxation heuristics over a grounded model.
//!
//! All estimates assume unit action costs. `f64::INFINITY` signals that the
//! goal is unreachable even when delete effects are ignored.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use crate::pddl::{GroundProblem, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    Ff,
    #[serde(rename = "hadd")]
    Add,
    #[serde(rename = "hmax")]
    Max,
    Landmarks,
    Zero,
}

impl HeuristicKind {
    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Ff => "ff",
            HeuristicKind::Add => "hadd",
            HeuristicKind::Max => "hmax",
            HeuristicKind::Landmarks => "landmarks",
            HeuristicKind::Zero => "zero",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ff" => Ok(HeuristicKind::Ff),
            "hadd" => Ok(HeuristicKind::Add),
            "hmax" => Ok(HeuristicKind::Max),
            "landmarks" => Ok(HeuristicKind::Landmarks),
            "zero" => Ok(HeuristicKind::Zero),
            other => Err(format!("unknown heuristic '{other}' (expected ff, hadd, hmax, landmarks, zero)")),
        }
    }
}

/// Precondition index shared by all relaxation-based estimates.
#[derive(Debug, Clone)]
pub struct RelaxedTables {
    /// atom -> actions having it as a positive precondition
    precond_of: Vec<Vec<usize>>,
    /// actions with no positive preconditions
    free_actions: Vec<usize>,
    /// atom -> actions adding it
    achievers: Vec<Vec<usize>>,
}

impl RelaxedTables {
    pub fn new(gp: &GroundProblem) -> Self {
        let n = gp.num_atoms();
        let mut precond_of = vec![Vec::new(); n];
        let mut achievers = vec![Vec::new(); n];
        let mut free_actions = Vec::new();
        for (ai, a) in gp.actions.iter().enumerate() {
            if a.pre_pos.is_empty() {
                free_actions.push(ai);
            }
            for &p in &a.pre_pos {
                precond_of[p].push(ai);
            }
            for &q in &a.adds {
                achievers[q].push(ai);
            }
        }
        RelaxedTables { precond_of, free_actions, achievers }
    }

    pub fn achievers(&self, atom: usize) -> &[usize] {
        &self.achievers[atom]
    }
}

#[derive(Clone, Copy)]
enum Combine {
    Sum,
    Max,
}

const UNREACHED: u64 = u64::MAX;

/// Cost propagation to fixpoint. Returns per-atom costs.
fn propagate(gp: &GroundProblem, tables: &RelaxedTables, state: &State, combine: Combine) -> Vec<u64> {
    let n = gp.num_atoms();
    let mut cost = vec![UNREACHED; n];
    let mut remaining: Vec<usize> = gp.actions.iter().map(|a| a.pre_pos.len()).collect();
    let mut acc = vec![0u64; gp.actions.len()];
    let mut heap = BinaryHeap::new();
    for p in state.iter() {
        cost[p] = 0;
        heap.push(Reverse((0u64, p)));
    }
    let fire = |ai: usize, base: u64, cost: &mut Vec<u64>, heap: &mut BinaryHeap<Reverse<(u64, usize)>>| {
        let a = &gp.actions[ai];
        let c = base + a.base_cost as u64;
        for &q in &a.adds {
            if c < cost[q] {
                cost[q] = c;
                heap.push(Reverse((c, q)));
            }
        }
    };
    for &ai in &tables.free_actions {
        fire(ai, 0, &mut cost, &mut heap);
    }
    while let Some(Reverse((c, p))) = heap.pop() {
        if c > cost[p] {
            continue;
        }
        for &ai in &tables.precond_of[p] {
            acc[ai] = match combine {
                Combine::Sum => acc[ai] + c,
                Combine::Max => acc[ai].max(c),
            };
            remaining[ai] -= 1;
            if remaining[ai] == 0 {
                fire(ai, acc[ai], &mut cost, &mut heap);
            }
        }
    }
    cost
}

fn goal_cost(gp: &GroundProblem, cost: &[u64], combine: Combine) -> f64 {
    let mut total = 0u64;
    for &g in &gp.goal.pos {
        if cost[g] == UNREACHED {
            return f64::INFINITY;
        }
        total = match combine {
            Combine::Sum => total + cost[g],
            Combine::Max => total.max(cost[g]),
        };
    }
    total as f64
}

pub fn h_add_with(gp: &GroundProblem, tables: &RelaxedTables, state: &State) -> f64 {
    goal_cost(gp, &propagate(gp, tables, state, Combine::Sum), Combine::Sum)
}

pub fn h_max_with(gp: &GroundProblem, tables: &RelaxedTables, state: &State) -> f64 {
    goal_cost(gp, &propagate(gp, tables, state, Combine::Max), Combine::Max)
}

pub fn h_add(state: &State, gp: &GroundProblem) -> f64 {
    h_add_with(gp, &RelaxedTables::new(gp), state)
}

pub fn h_max(state: &State, gp: &GroundProblem) -> f64 {
    h_max_with(gp, &RelaxedTables::new(gp), state)
}

pub fn h_zero(_state: &State, _gp: &GroundProblem) -> f64 {
    0.0
}

/// Layered delete-relaxed reachability from one state.
#[derive(Debug, Clone)]
pub struct RelaxedPlanningGraph {
    pub fact_layers: Vec<Vec<usize>>,
    pub action_layers: Vec<Vec<usize>>,
    pub fact_level: Vec<Option<usize>>,
    pub action_level: Vec<Option<usize>>,
    pub goal_reached: bool,
}

impl RelaxedPlanningGraph {
    /// Builds layers until every positive goal is reached or nothing new
    /// can be added. Layer `i` lists only the facts first reached at `i`.
    pub fn build(gp: &GroundProblem, tables: &RelaxedTables, state: &State) -> Self {
        let mut fact_level = vec![None; gp.num_atoms()];
        let mut action_level = vec![None; gp.actions.len()];
        let mut remaining: Vec<usize> = gp.actions.iter().map(|a| a.pre_pos.len()).collect();
        let layer0: Vec<usize> = state.iter().collect();
        for &p in &layer0 {
            fact_level[p] = Some(0);
        }
        let mut fact_layers = vec![layer0];
        let mut action_layers = Vec::new();
        let mut ready: BTreeSet<usize> = tables.free_actions.iter().copied().collect();
        let goals_in = |fl: &[Option<usize>]| gp.goal.pos.iter().all(|&g| fl[g].is_some());

        let mut level = 0;
        loop {
            if goals_in(&fact_level) {
                break;
            }
            for &p in &fact_layers[level] {
                for &ai in &tables.precond_of[p] {
                    remaining[ai] -= 1;
                    if remaining[ai] == 0 {
                        ready.insert(ai);
                    }
                }
            }
            let layer: Vec<usize> = std::mem::take(&mut ready).into_iter().collect();
            let mut new_facts = BTreeSet::new();
            for &ai in &layer {
                action_level[ai] = Some(level);
                for &q in &gp.actions[ai].adds {
                    if fact_level[q].is_none() {
                        new_facts.insert(q);
                    }
                }
            }
            action_layers.push(layer);
            if new_facts.is_empty() {
                break;
            }
            for &q in &new_facts {
                fact_level[q] = Some(level + 1);
            }
            fact_layers.push(new_facts.into_iter().collect());
            level += 1;
        }
        let goal_reached = goals_in(&fact_level);
        RelaxedPlanningGraph { fact_layers, action_layers, fact_level, action_level, goal_reached }
    }

    /// Backward greedy extraction. Achievers are taken from the earliest
    /// possible layer, lowest action index first; subgoals are processed by
    /// descending level, then ascending atom index.
    pub fn extract_relaxed_plan(&self, gp: &GroundProblem, tables: &RelaxedTables) -> Option<BTreeSet<usize>> {
        if !self.goal_reached {
            return None;
        }
        let top = self.fact_layers.len();
        let mut goals: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); top];
        for &g in &gp.goal.pos {
            let l = self.fact_level[g]?;
            goals[l].insert(g);
        }
        // marked[level] holds facts made true at that level by chosen actions;
        // marking them one level earlier too would make the plan relaxed-invalid
        let mut marked: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); top];
        let mut chosen = BTreeSet::new();
        for level in (1..top).rev() {
            let subgoals: Vec<usize> = goals[level].iter().copied().collect();
            for g in subgoals {
                if marked[level].contains(&g) {
                    continue;
                }
                let achiever = tables.achievers[g]
                    .iter()
                    .copied()
                    .filter(|&a| self.action_level[a] == Some(level - 1))
                    .min()?;
                chosen.insert(achiever);
                for &p in &gp.actions[achiever].pre_pos {
                    let pl = self.fact_level[p]?;
                    if pl > 0 && !marked[level - 1].contains(&p) {
                        goals[pl].insert(p);
                    }
                }
                for &q in &gp.actions[achiever].adds {
                    marked[level].insert(q);
                }
            }
        }
        Some(chosen)
    }
}

pub fn h_ff_with(gp: &GroundProblem, tables: &RelaxedTables, state: &State) -> f64 {
    let rpg = RelaxedPlanningGraph::build(gp, tables, state);
    match rpg.extract_relaxed_plan(gp, tables) {
        Some(plan) => plan.len() as f64,
        None => f64::INFINITY,
    }
}

pub fn h_ff(state: &State, gp: &GroundProblem) -> f64 {
    h_ff_with(gp, &RelaxedTables::new(gp), state)
}

/// Relaxed reachability with the achievers of `banned` removed.
fn relaxed_reachable(gp: &GroundProblem, tables: &RelaxedTables, from: &State, banned: Option<usize>) -> Vec<bool> {
    let mut reached = vec![false; gp.num_atoms()];
    let mut remaining: Vec<usize> = gp.actions.iter().map(|a| a.pre_pos.len()).collect();
    let mut stack: Vec<usize> = from.iter().collect();
    for &p in &stack {
        reached[p] = true;
    }
    let fire = |ai: usize, reached: &mut Vec<bool>, stack: &mut Vec<usize>| {
        for &q in &gp.actions[ai].adds {
            if Some(q) != banned && !reached[q] {
                reached[q] = true;
                stack.push(q);
            }
        }
    };
    for &ai in &tables.free_actions {
        if banned.is_none_or(|b| !gp.actions[ai].adds.contains(&b)) {
            fire(ai, &mut reached, &mut stack);
        }
    }
    while let Some(p) = stack.pop() {
        for &ai in &tables.precond_of[p] {
            remaining[ai] -= 1;
            if remaining[ai] == 0 && banned.is_none_or(|b| !gp.actions[ai].adds.contains(&b)) {
                fire(ai, &mut reached, &mut stack);
            }
        }
    }
    reached
}

/// Returns true when the positive goal is relaxed-unreachable from the
/// initial state once every achiever of `atom` is removed.
pub fn is_relaxed_landmark(gp: &GroundProblem, tables: &RelaxedTables, atom: usize) -> bool {
    if gp.init.contains(atom) {
        return true;
    }
    let reached = relaxed_reachable(gp, tables, &gp.init, Some(atom));
    !gp.goal.pos.iter().all(|&g| reached[g])
}

/// Fact landmarks of the delete relaxation. Candidates are found by
/// backchaining from the goal through achiever preconditions; each candidate
/// is kept only if removing its achievers makes the goal relaxed-unreachable.
#[derive(Debug, Clone)]
pub struct LandmarkSet {
    pub landmarks: Vec<usize>,
    goal_mask: Vec<bool>,
}

/// Landmarks already achieved along the path to a node.
pub type Accepted = Vec<bool>;

impl LandmarkSet {
    pub fn compute(gp: &GroundProblem, tables: &RelaxedTables) -> Self {
        let full = relaxed_reachable(gp, tables, &gp.init, None);
        let goals: BTreeSet<usize> = gp.goal.pos.iter().copied().collect();
        let mut landmarks = BTreeSet::new();
        if gp.goal.pos.iter().all(|&g| full[g]) {
            let mut relevant = BTreeSet::new();
            let mut queue: Vec<usize> = gp.goal.pos.clone();
            while let Some(p) = queue.pop() {
                if !relevant.insert(p) || gp.init.contains(p) {
                    continue;
                }
                for &ai in tables.achievers(p) {
                    let a = &gp.actions[ai];
                    if a.pre_pos.iter().all(|&q| full[q]) {
                        queue.extend(a.pre_pos.iter().copied().filter(|q| !relevant.contains(q)));
                    }
                }
            }
            for p in relevant {
                // init facts only matter when they are goals (required again)
                if gp.init.contains(p) {
                    if goals.contains(&p) {
                        landmarks.insert(p);
                    }
                } else if is_relaxed_landmark(gp, tables, p) {
                    landmarks.insert(p);
                }
            }
        } else {
            landmarks.extend(goals.iter().copied());
        }
        let landmarks: Vec<usize> = landmarks.into_iter().collect();
        let goal_mask = landmarks.iter().map(|l| goals.contains(l)).collect();
        LandmarkSet { landmarks, goal_mask }
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn accepted_at_root(&self, state: &State) -> Accepted {
        self.landmarks.iter().map(|&l| state.contains(l)).collect()
    }

    pub fn accepted_after(&self, parent: &Accepted, state: &State) -> Accepted {
        self.landmarks.iter().zip(parent).map(|(&l, &acc)| acc || state.contains(l)).collect()
    }

    /// Unaccepted landmarks plus accepted goal landmarks that are false again.
    pub fn count(&self, gp: &GroundProblem, state: &State, accepted: &Accepted) -> f64 {
        if gp.goal_satisfied(state) {
            return 0.0;
        }
        let mut h = 0usize;
        for (i, &l) in self.landmarks.iter().enumerate() {
            if !accepted[i] || (self.goal_mask[i] && !state.contains(l)) {
                h += 1;
            }
        }
        h as f64
    }
}

pub fn h_landmark_count(state: &State, gp: &GroundProblem, lms: &LandmarkSet, accepted: &Accepted) -> f64 {
    lms.count(gp, state, accepted)
}

/// Per-node path information some heuristics carry along.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum PathMemo {
    #[default]
    None,
    Landmarks(Accepted),
}

/// A heuristic bound to one grounded problem.
#[derive(Debug, Clone)]
pub struct HeuristicEvaluator {
    kind: HeuristicKind,
    tables: RelaxedTables,
    landmarks: Option<LandmarkSet>,
}

impl HeuristicEvaluator {
    pub fn new(kind: HeuristicKind, gp: &GroundProblem) -> Self {
        let tables = RelaxedTables::new(gp);
        let landmarks = (kind == HeuristicKind::Landmarks).then(|| LandmarkSet::compute(gp, &tables));
        HeuristicEvaluator { kind, tables, landmarks }
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    pub fn landmarks(&self) -> Option<&LandmarkSet> {
        self.landmarks.as_ref()
    }

    pub fn root_memo(&self, state: &State) -> PathMemo {
        match &self.landmarks {
            Some(lms) => PathMemo::Landmarks(lms.accepted_at_root(state)),
            None => PathMemo::None,
        }
    }

    pub fn child_memo(&self, parent: &PathMemo, state: &State) -> PathMemo {
        match (&self.landmarks, parent) {
            (Some(lms), PathMemo::Landmarks(acc)) => PathMemo::Landmarks(lms.accepted_after(acc, state)),
            (Some(lms), PathMemo::None) => PathMemo::Landmarks(lms.accepted_at_root(state)),
            _ => PathMemo::None,
        }
    }

    pub fn estimate(&self, gp: &GroundProblem, state: &State, memo: &PathMemo) -> f64 {
        match self.kind {
            HeuristicKind::Ff => h_ff_with(gp, &self.tables, state),
            HeuristicKind::Add => h_add_with(gp, &self.tables, state),
            HeuristicKind::Max => h_max_with(gp, &self.tables, state),
            HeuristicKind::Zero => 0.0,
            HeuristicKind::Landmarks => {
                let lms = self.landmarks.as_ref().expect("landmarks computed for landmark heuristic");
                let reached = relaxed_reachable(gp, &self.tables, state, None);
                if !gp.goal.pos.iter().all(|&g| reached[g]) {
                    return f64::INFINITY;
                }
                match memo {
                    PathMemo::Landmarks(acc) => lms.count(gp, state, acc),
                    PathMemo::None => lms.count(gp, state, &lms.accepted_at_root(state)),
                }
            }
        }
    }
}
