use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::model::{ActionSchema, AtomTemplate, DomainDef, ProblemDef, TypedName};
use super::{PddlError, State};

#[derive(Debug, Clone)]
pub struct GroundingOptions {
    /// Maximum number of ground actions before grounding is aborted.
    pub max_actions: usize,
    /// Drop bindings whose static preconditions can never hold.
    pub prune_static: bool,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions { max_actions: 200_000, prune_static: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub schema: String,
    /// Full binding, in schema parameter order.
    pub args: Vec<String>,
    /// The ordered object combination (empty for non-tool actions).
    pub o_a: Vec<String>,
    pub pre_pos: Vec<usize>,
    pub pre_neg: Vec<usize>,
    pub adds: Vec<usize>,
    pub dels: Vec<usize>,
    pub base_cost: f64,
}

impl GroundAction {
    #[inline]
    pub fn applicable(&self, state: &State) -> bool {
        state.contains_all(&self.pre_pos) && state.contains_none(&self.pre_neg)
    }

    /// Successor state. Calling this on a state where the action is not
    /// applicable is a contract violation.
    pub fn apply(&self, state: &State) -> State {
        debug_assert!(self.applicable(state), "applied inapplicable action {self}");
        let mut next = state.clone();
        for &d in &self.dels {
            next.remove(d);
        }
        for &a in &self.adds {
            next.insert(a);
        }
        next
    }

    pub fn is_tool_action(&self) -> bool {
        !self.o_a.is_empty()
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Conjunction of ground literals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoalSpec {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl GoalSpec {
    pub fn is_satisfied(&self, state: &State) -> bool {
        state.contains_all(&self.pos) && state.contains_none(&self.neg)
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("step {step} ('{action}') is not applicable")]
    NotApplicable { step: usize, action: String },
    #[error("plan ends in a state that does not satisfy the goal")]
    GoalNotReached,
}

/// Grounded STRIPS model. Atoms are indexed in lexicographic order of their
/// printed form, so indices are reproducible across runs.
#[derive(Debug, Clone)]
pub struct GroundProblem {
    atoms: Vec<String>,
    atom_index: HashMap<String, usize>,
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal: GoalSpec,
    pub objects: Vec<TypedName>,
}

impl GroundProblem {
    /// Builds a model from named atoms and actions given as atom-name lists.
    /// The atom universe is re-sorted; indices in the inputs are by name.
    /// Actions named `join-*` take all their arguments as the object combination.
    pub fn from_parts(
        atom_names: impl IntoIterator<Item = String>,
        actions: Vec<(String, Vec<String>, [Vec<String>; 4])>,
        init: &[String],
        goal_pos: &[String],
        goal_neg: &[String],
    ) -> Self {
        let mut names: BTreeSet<String> = atom_names.into_iter().collect();
        for (_, _, lists) in &actions {
            for l in lists {
                names.extend(l.iter().cloned());
            }
        }
        names.extend(init.iter().cloned());
        names.extend(goal_pos.iter().cloned());
        names.extend(goal_neg.iter().cloned());
        let atoms: Vec<String> = names.into_iter().collect();
        let atom_index: HashMap<String, usize> = atoms.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let idx = |l: &[String]| -> Vec<usize> {
            let mut v: Vec<usize> = l.iter().map(|a| atom_index[a]).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let actions = actions
            .into_iter()
            .map(|(schema, args, [pp, pn, ad, de])| {
                let adds = idx(&ad);
                let dels: Vec<usize> = idx(&de).into_iter().filter(|d| !adds.contains(d)).collect();
                let o_a = if schema.starts_with(super::JOIN_PREFIX) { args.clone() } else { Vec::new() };
                GroundAction {
                    schema,
                    args,
                    o_a,
                    pre_pos: idx(&pp),
                    pre_neg: idx(&pn),
                    adds,
                    dels,
                    base_cost: 1.0,
                }
            })
            .collect();
        let n = atoms.len();
        let init = State::from_atoms(n, idx(init));
        let goal = GoalSpec { pos: idx(goal_pos), neg: idx(goal_neg) };
        GroundProblem { atoms, atom_index, actions, init, goal, objects: Vec::new() }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_name(&self, idx: usize) -> &str {
        &self.atoms[idx]
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom_id(&self, name: &str) -> Option<usize> {
        self.atom_index.get(name).copied()
    }

    pub fn goal_satisfied(&self, state: &State) -> bool {
        self.goal.is_satisfied(state)
    }

    pub fn state_from_names<S: AsRef<str>>(&self, names: &[S]) -> Option<State> {
        let mut s = State::empty(self.num_atoms());
        for n in names {
            s.insert(self.atom_id(n.as_ref())?);
        }
        Some(s)
    }

    pub fn state_names(&self, state: &State) -> Vec<&str> {
        state.iter().map(|i| self.atom_name(i)).collect()
    }

    /// Simulates a plan from the initial state, checking every step.
    pub fn simulate(&self, plan: &[usize]) -> Result<State, PlanError> {
        let mut s = self.init.clone();
        for (step, &ai) in plan.iter().enumerate() {
            let a = &self.actions[ai];
            if !a.applicable(&s) {
                return Err(PlanError::NotApplicable { step, action: a.to_string() });
            }
            s = a.apply(&s);
        }
        Ok(s)
    }

    pub fn validate_plan(&self, plan: &[usize]) -> Result<(), PlanError> {
        let s = self.simulate(plan)?;
        if self.goal_satisfied(&s) {
            Ok(())
        } else {
            Err(PlanError::GoalNotReached)
        }
    }

    /// Indices of actions applicable in `state`, ascending.
    pub fn applicable_actions<'a>(&'a self, state: &'a State) -> impl Iterator<Item = usize> + 'a {
        self.actions.iter().enumerate().filter(move |(_, a)| a.applicable(state)).map(|(i, _)| i)
    }
}

fn instantiate(t: &AtomTemplate, binding: &HashMap<&str, &str>) -> String {
    let mut s = format!("({}", t.predicate);
    for a in &t.args {
        s.push(' ');
        s.push_str(binding.get(a.as_str()).copied().unwrap_or(a.as_str()));
    }
    s.push(')');
    s
}

struct RawAction {
    schema: String,
    args: Vec<String>,
    o_a: Vec<String>,
    pre_pos: Vec<String>,
    pre_neg: Vec<String>,
    adds: Vec<String>,
    dels: Vec<String>,
}

struct Grounder<'a> {
    schema: &'a ActionSchema,
    candidates: Vec<Vec<&'a str>>,
    static_preds: &'a HashSet<&'a str>,
    init: &'a HashSet<String>,
    prune: bool,
    out: Vec<RawAction>,
    cap_left: usize,
}

impl<'a> Grounder<'a> {
    fn static_ok(&self, binding: &HashMap<&str, &str>, bound: usize) -> bool {
        if !self.prune {
            return true;
        }
        let bound_vars: HashSet<&str> = self.schema.params[..bound].iter().map(|p| p.name.as_str()).collect();
        self.schema.precondition.iter().all(|lit| {
            if !self.static_preds.contains(lit.atom.predicate.as_str()) {
                return true;
            }
            let ready = lit.atom.args.iter().all(|a| !a.starts_with('?') || bound_vars.contains(a.as_str()));
            if !ready {
                return true;
            }
            self.init.contains(&instantiate(&lit.atom, binding)) == lit.positive
        })
    }

    fn recurse(&mut self, depth: usize, binding: &mut HashMap<&'a str, &'a str>, chosen: &mut Vec<&'a str>) -> bool {
        if depth == self.schema.params.len() {
            if !self.static_ok(binding, depth) {
                return true;
            }
            if self.cap_left == 0 {
                return false;
            }
            self.cap_left -= 1;
            self.emit(binding, chosen);
            return true;
        }
        let param = &self.schema.params[depth];
        let is_obj = self.schema.object_param_indices.contains(&depth);
        for ci in 0..self.candidates[depth].len() {
            let obj = self.candidates[depth][ci];
            if is_obj
                && self
                    .schema
                    .object_param_indices
                    .iter()
                    .any(|&j| j < depth && chosen[j] == obj)
            {
                continue;
            }
            binding.insert(param.name.as_str(), obj);
            chosen.push(obj);
            if self.static_ok(binding, depth + 1) && !self.recurse(depth + 1, binding, chosen) {
                return false;
            }
            chosen.pop();
            binding.remove(param.name.as_str());
        }
        true
    }

    fn emit(&mut self, binding: &HashMap<&str, &str>, chosen: &[&str]) {
        let s = self.schema;
        let mut pre_pos = Vec::new();
        let mut pre_neg = Vec::new();
        for lit in &s.precondition {
            let a = instantiate(&lit.atom, binding);
            if lit.positive {
                pre_pos.push(a)
            } else {
                pre_neg.push(a)
            }
        }
        let adds: Vec<String> = s.add_effects.iter().map(|e| instantiate(e, binding)).collect();
        let dels: Vec<String> = s
            .del_effects
            .iter()
            .map(|e| instantiate(e, binding))
            .filter(|d| !adds.contains(d))
            .collect();
        self.out.push(RawAction {
            schema: s.name.clone(),
            args: chosen.iter().map(|c| c.to_string()).collect(),
            o_a: s.object_param_indices.iter().map(|&i| chosen[i].to_string()).collect(),
            pre_pos,
            pre_neg,
            adds,
            dels,
        });
    }
}

/// Enumerates all type-consistent ground actions. Tool-part parameters of a
/// single action always bind pairwise distinct objects.
pub fn ground(domain: &DomainDef, problem: &ProblemDef, opts: &GroundingOptions) -> Result<GroundProblem, PddlError> {
    if problem.domain_name != domain.name {
        return Err(PddlError::DomainMismatch { expected: domain.name.clone(), found: problem.domain_name.clone() });
    }
    let mut objects: Vec<TypedName> = domain.constants.iter().chain(&problem.objects).cloned().collect();
    objects.sort();
    let of_type = |ty: &str| -> Vec<&str> {
        objects.iter().filter(|o| ty == "object" || o.ty == ty).map(|o| o.name.as_str()).collect()
    };

    let mut static_preds: HashSet<&str> = domain.predicates.iter().map(|p| p.name.as_str()).collect();
    for a in &domain.actions {
        for e in a.add_effects.iter().chain(&a.del_effects) {
            static_preds.remove(e.predicate.as_str());
        }
    }
    let empty = HashMap::new();
    let init: HashSet<String> = problem.init.iter().map(|a| instantiate(a, &empty)).collect();

    let mut raw = Vec::new();
    let mut cap_left = opts.max_actions;
    for schema in &domain.actions {
        let candidates: Vec<Vec<&str>> = schema.params.iter().map(|p| of_type(&p.ty)).collect();
        let mut g = Grounder {
            schema,
            candidates,
            static_preds: &static_preds,
            init: &init,
            prune: opts.prune_static,
            out: Vec::new(),
            cap_left,
        };
        let complete = g.recurse(0, &mut HashMap::new(), &mut Vec::new());
        if !complete {
            let worst = domain
                .actions
                .iter()
                .map(|s| {
                    let est = s.params.iter().map(|p| of_type(&p.ty).len() as u128).product::<u128>();
                    (est, s.name.clone())
                })
                .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
                .unwrap_or((0, schema.name.clone()));
            return Err(PddlError::GroundingExplosion { schema: worst.1, estimate: worst.0, cap: opts.max_actions });
        }
        cap_left = g.cap_left;
        raw.extend(g.out);
    }

    let mut names: BTreeSet<String> = init.iter().cloned().collect();
    for r in &raw {
        for l in [&r.pre_pos, &r.pre_neg, &r.adds, &r.dels] {
            names.extend(l.iter().cloned());
        }
    }
    let goal_atoms: Vec<(bool, String)> =
        problem.goal.iter().map(|l| (l.positive, instantiate(&l.atom, &empty))).collect();
    names.extend(goal_atoms.iter().map(|(_, a)| a.clone()));

    let atoms: Vec<String> = names.into_iter().collect();
    let atom_index: HashMap<String, usize> = atoms.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    let idx = |l: &[String]| -> Vec<usize> {
        let mut v: Vec<usize> = l.iter().map(|a| atom_index[a]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let actions = raw
        .into_iter()
        .map(|r| GroundAction {
            pre_pos: idx(&r.pre_pos),
            pre_neg: idx(&r.pre_neg),
            adds: idx(&r.adds),
            dels: idx(&r.dels),
            schema: r.schema,
            args: r.args,
            o_a: r.o_a,
            base_cost: 1.0,
        })
        .collect();
    let n = atoms.len();
    let init_state = State::from_atoms(n, init.iter().map(|a| atom_index[a]));
    let mut goal = GoalSpec::default();
    for (positive, a) in goal_atoms {
        if positive {
            goal.pos.push(atom_index[&a]);
        } else {
            goal.neg.push(atom_index[&a]);
        }
    }
    goal.pos.sort_unstable();
    goal.neg.sort_unstable();
    Ok(GroundProblem { atoms, atom_index, actions, init: init_state, goal, objects })
}
