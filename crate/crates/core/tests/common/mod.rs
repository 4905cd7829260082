#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use fgs_core::pddl::{GroundProblem, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod score;

pub type ActionSpec = (String, Vec<String>, [Vec<String>; 4]);

fn atom(i: usize) -> String {
    format!("p{i}")
}

fn pick(rng: &mut ChaCha8Rng, n: usize, lo: usize, hi: usize) -> Vec<String> {
    let k = rng.gen_range(lo..=hi);
    let mut v: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
    v.sort_unstable();
    v.dedup();
    v.into_iter().map(atom).collect()
}

/// A random propositional model over `atoms` facts (so at most 2^atoms
/// states) with `actions` actions.
pub fn random_model(seed: u64, atoms: usize, actions: usize, delete_free: bool) -> GroundProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs: Vec<ActionSpec> = Vec::new();
    for i in 0..actions {
        let pre = pick(&mut rng, atoms, 0, 2);
        let neg = if delete_free || rng.gen_bool(0.7) { vec![] } else { pick(&mut rng, atoms, 1, 1) };
        let add = pick(&mut rng, atoms, 1, 2);
        let del = if delete_free { vec![] } else { pick(&mut rng, atoms, 0, 2) };
        specs.push((format!("a{i}"), vec![], [pre, neg, add, del]));
    }
    let init = pick(&mut rng, atoms, 1, 3);
    let goal = pick(&mut rng, atoms, 1, 3);
    GroundProblem::from_parts((0..atoms).map(atom), specs, &init, &goal, &[])
}

/// A model where each action makes the next fact true: p0 -> p1 -> ... -> pn.
pub fn chain_model(n: usize) -> GroundProblem {
    let specs = (0..n)
        .map(|i| (format!("step{i}"), vec![], [vec![atom(i)], vec![], vec![atom(i + 1)], vec![atom(i)]]))
        .collect();
    GroundProblem::from_parts((0..=n).map(atom), specs, &[atom(0)], &[atom(n)], &[])
}

pub fn successors(gp: &GroundProblem, s: &State) -> Vec<(usize, State)> {
    gp.applicable_actions(s).map(|a| (a, gp.actions[a].apply(s))).collect()
}

/// Breadth-first distances from `from` to every reachable state.
pub fn bfs_distances(gp: &GroundProblem, from: &State) -> HashMap<State, usize> {
    let mut dist = HashMap::from([(from.clone(), 0usize)]);
    let mut q = VecDeque::from([from.clone()]);
    while let Some(s) = q.pop_front() {
        let d = dist[&s];
        for (_, t) in successors(gp, &s) {
            if !dist.contains_key(&t) {
                dist.insert(t.clone(), d + 1);
                q.push_back(t);
            }
        }
    }
    dist
}

/// Length of a shortest plan from `from`, if any.
pub fn bfs_optimal(gp: &GroundProblem, from: &State) -> Option<usize> {
    bfs_distances(gp, from).into_iter().filter(|(s, _)| gp.goal_satisfied(s)).map(|(_, d)| d).min()
}

/// Shortest path costs from the initial state by Dijkstra over action costs.
pub fn dijkstra(gp: &GroundProblem) -> HashMap<State, f64> {
    let mut best: HashMap<State, f64> = HashMap::from([(gp.init.clone(), 0.0)]);
    let mut ids: HashMap<State, usize> = HashMap::new();
    let mut states = vec![gp.init.clone()];
    ids.insert(gp.init.clone(), 0);
    // costs are small multiples of 1, so scaling to integers is exact
    let mut heap = BinaryHeap::from([Reverse((0u64, 0usize))]);
    while let Some(Reverse((c, i))) = heap.pop() {
        let s = states[i].clone();
        if (c as f64) > best[&s] {
            continue;
        }
        for (a, t) in successors(gp, &s) {
            let nc = c as f64 + gp.actions[a].base_cost;
            if best.get(&t).is_none_or(|&b| nc < b) {
                best.insert(t.clone(), nc);
                let j = *ids.entry(t.clone()).or_insert_with(|| {
                    states.push(t.clone());
                    states.len() - 1
                });
                heap.push(Reverse((nc as u64, j)));
            }
        }
    }
    best
}

/// Every state reachable from the initial state.
pub fn reachable_states(gp: &GroundProblem) -> Vec<State> {
    let mut v: Vec<State> = bfs_distances(gp, &gp.init).into_keys().collect();
    v.sort();
    v
}

pub fn data_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}
