mod common;

use std::collections::HashSet;

use fgs_core::bench::{load_problem, Assets};
use fgs_core::episode::{run_episode, EpisodeConfig};
use fgs_core::feature::{Combination, FeatureScorer, ScoreParams};
use fgs_core::heuristics::HeuristicKind;
use fgs_core::pddl::{GroundAction, GroundProblem};
use fgs_core::perception::{load_scenario, pair_score, GroundTruth};
use fgs_core::search::{search, Algorithm, NoFeatures, Scorer, SearchConfig, SearchStatus};
use proptest::prelude::*;

use common::*;

fn none() -> HashSet<Combination> {
    HashSet::new()
}

const ALGORITHMS: [Algorithm; 4] = [Algorithm::Astar, Algorithm::Ucs, Algorithm::WeightedAstar, Algorithm::Ehc];

#[test]
fn astar_is_optimal_without_features() {
    let mut solvable = 0;
    for seed in 0..80 {
        let gp = random_model(seed, 6 + (seed as usize % 5), 10 + (seed as usize % 12), false);
        let expected = bfs_optimal(&gp, &gp.init);
        for h in [HeuristicKind::Max, HeuristicKind::Zero] {
            let r = search(&gp, &SearchConfig::new(Algorithm::Astar, h, false), &NoFeatures, true, &none()).unwrap();
            assert_eq!(r.plan.as_ref().map(Vec::len), expected, "seed {seed} heuristic {h}");
            if let Some(p) = &r.plan {
                assert!(gp.goal_satisfied(&gp.simulate(p).unwrap()));
            } else {
                assert_eq!(r.status, SearchStatus::Exhausted);
            }
        }
        solvable += expected.is_some() as usize;
    }
    assert!(solvable >= 30, "too few solvable models ({solvable}) to be meaningful");
}

#[test]
fn closed_g_equals_shortest_distance() {
    for seed in 100..160 {
        let gp = random_model(seed, 8, 16, false);
        let truth = dijkstra(&gp);
        for (alg, h) in [(Algorithm::Ucs, HeuristicKind::Zero), (Algorithm::Astar, HeuristicKind::Max)] {
            let cfg = SearchConfig { record_closed: true, ..SearchConfig::new(alg, h, false) };
            let r = search(&gp, &cfg, &NoFeatures, true, &none()).unwrap();
            for (s, g) in &r.closed {
                assert_eq!(*g, truth[s], "seed {seed} {alg}");
            }
        }
    }
}

#[test]
fn every_returned_plan_is_valid() {
    for seed in 200..240 {
        let gp = random_model(seed, 7, 14, false);
        for alg in ALGORITHMS {
            for h in [HeuristicKind::Ff, HeuristicKind::Add, HeuristicKind::Max, HeuristicKind::Landmarks, HeuristicKind::Zero] {
                let r = search(&gp, &SearchConfig::new(alg, h, false), &NoFeatures, true, &none()).unwrap();
                if let Some(p) = &r.plan {
                    assert!(gp.goal_satisfied(&gp.simulate(p).unwrap()), "seed {seed} {alg} {h}");
                }
                if alg != Algorithm::Ehc {
                    // complete searches find a plan whenever one exists
                    assert_eq!(r.plan.is_some(), bfs_optimal(&gp, &gp.init).is_some(), "seed {seed} {alg} {h}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn node_budget_is_never_exceeded(seed in 0u64..10_000, budget in 0u64..20, alg in 0usize..4) {
        let gp = random_model(seed, 8, 14, false);
        let cfg = SearchConfig { node_budget: Some(budget), ..SearchConfig::new(ALGORITHMS[alg], HeuristicKind::Ff, false) };
        let r = search(&gp, &cfg, &NoFeatures, true, &none()).unwrap();
        prop_assert!(r.nodes_expanded <= budget);
        if r.status == SearchStatus::BudgetExhausted {
            prop_assert_eq!(r.nodes_expanded, budget);
        }
    }

    #[test]
    fn search_is_deterministic(seed in 0u64..10_000, alg in 0usize..4) {
        let gp = random_model(seed, 8, 14, false);
        let cfg = SearchConfig::new(ALGORITHMS[alg], HeuristicKind::Landmarks, false);
        let a = search(&gp, &cfg, &NoFeatures, true, &none()).unwrap();
        let b = search(&gp, &cfg, &NoFeatures, true, &none()).unwrap();
        prop_assert_eq!(a, b);
    }
}

/// Five tool actions from one state, none of which leads to the goal.
fn dead_end_joins() -> GroundProblem {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut actions = Vec::new();
    for i in 0..5 {
        let built = format!("built{i}");
        actions.push((
            "join-rake".to_string(),
            vec![format!("o{i}"), format!("h{i}")],
            [s(&["ready"]), vec![], vec![built, "tool".into()], s(&["ready"])],
        ));
    }
    GroundProblem::from_parts(Vec::<String>::new(), actions, &s(&["ready"]), &s(&["never"]), &[])
}

fn phi_by_index(a: &GroundAction, _trust: bool) -> f64 {
    match a.o_a[0].as_str() {
        "o0" => 0.2,
        "o1" => 0.95,
        "o2" => 0.5,
        "o3" => f64::NEG_INFINITY,
        _ => 0.7,
    }
}

#[test]
fn tool_successors_expand_in_feature_order() {
    let gp = dead_end_joins();
    for alg in [Algorithm::Astar, Algorithm::Ucs, Algorithm::WeightedAstar] {
        // blind, since any relaxed heuristic already proves the goal unreachable;
        // scores stay below g and weight is 1 so no priority is clamped at zero
        let cfg = SearchConfig { weight: 1.0, ..SearchConfig::new(alg, HeuristicKind::Zero, true) };
        let r = search(&gp, &cfg, &phi_by_index, true, &none()).unwrap();
        assert_eq!(r.status, SearchStatus::Exhausted);
        let firsts: Vec<&str> = r.tool_expansion_order.iter().map(|&i| gp.actions[i].o_a[0].as_str()).collect();
        assert_eq!(firsts, vec!["o1", "o4", "o2", "o0"], "{alg}");
        assert_eq!(r.reject_set_out.iter().map(|c| c.objects[0].as_str()).collect::<Vec<_>>(), vec!["o3"]);
    }
}

#[test]
fn ehc_takes_greedy_path_on_monotone_chain() {
    let gp = chain_model(6);
    let r = search(&gp, &SearchConfig::new(Algorithm::Ehc, HeuristicKind::Ff, false), &NoFeatures, true, &none()).unwrap();
    assert_eq!(r.plan.as_ref().map(Vec::len), Some(6));
    // one expansion per committed step
    assert_eq!(r.nodes_expanded, 6);
}

#[test]
fn ehc_commits_feature_boosted_successor() {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    // two joins with equal h afterwards; only the feature score separates them
    let gp = GroundProblem::from_parts(
        Vec::<String>::new(),
        vec![
            ("join-rake".into(), s(&["o0", "o1"]), [s(&["ready"]), vec![], s(&["a", "tool"]), s(&["ready"])]),
            ("join-rake".into(), s(&["o2", "o3"]), [s(&["ready"]), vec![], s(&["b", "tool"]), s(&["ready"])]),
            ("use".into(), vec![], [s(&["tool"]), vec![], s(&["done"]), vec![]]),
        ],
        &s(&["ready"]),
        &s(&["done"]),
        &[],
    );
    let boost = |a: &GroundAction, _t: bool| if a.o_a.first().map(String::as_str) == Some("o2") { 1.5 } else { 0.1 };
    let r = search(&gp, &SearchConfig::new(Algorithm::Ehc, HeuristicKind::Ff, true), &boost, true, &none()).unwrap();
    assert_eq!(r.plan, Some(vec![1, 2]));
}

/// With an oracle that accepts nothing, trusted replanning walks through
/// every finite-score combination in non-increasing score order.
#[test]
fn attempts_follow_feature_score_order_on_benchmark() {
    let root = data_root();
    let mut assets = Assets::new(&root);
    for id in ["woodworking_hammer_03", "cooking_ladle_05", "cleaning_squeegee_01"] {
        let mut s = load_scenario(&root.join(format!("benchmarks/{id}.toml"))).unwrap();
        assets.prepare(std::slice::from_ref(&s)).unwrap();
        let gp = assets.problem_for(&s).unwrap();
        let spec = s.tool_specs[0].clone();
        let profiles = s.profiles();
        let finite = s
            .objects
            .iter()
            .flat_map(|a| s.objects.iter().map(move |g| (a, g)))
            .filter(|(a, g)| a.id != g.id && pair_score(&profiles, &spec, &a.id, &g.id).is_finite())
            .count();
        s.ground_truth = vec![GroundTruth { tool: spec.tool.clone(), action_part: "none".into(), grasp_part: "none".into() }];
        let ep = run_episode(gp, &s, &EpisodeConfig::new(SearchConfig::default())).unwrap();
        assert!(!ep.success);
        assert_eq!(ep.attempts.len(), finite, "{id}");
        let scores: Vec<f64> =
            ep.attempts.iter().map(|c| pair_score(&profiles, &spec, &c.objects[0], &c.objects[1])).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]), "{id}: {scores:?}");
    }
}

#[test]
fn feature_scorer_rejects_misaligned_registry() {
    let root = data_root();
    let gp = load_problem(&root.join("domains/cooking.pddl"), &root.join("problems/cooking_adapt.pddl")).unwrap();
    let s = load_scenario(&root.join("benchmarks/cooking_ladle_01.toml")).unwrap();
    // the two-tool problem also grounds join-spatula, which the scenario does not describe
    let err = FeatureScorer::new(&gp, s.registry().unwrap(), s.profiles(), ScoreParams::default()).unwrap_err();
    assert!(err.to_string().contains("join-spatula"), "{err}");
    let scorer: &dyn Scorer = &NoFeatures;
    assert_eq!(scorer.score(&gp.init, &gp.actions[0], true), 0.0);
}
