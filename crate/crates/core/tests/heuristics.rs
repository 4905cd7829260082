mod common;

use std::collections::{HashSet, VecDeque};

use fgs_core::heuristics::{
    h_add, h_ff, h_landmark_count, h_max, HeuristicEvaluator, HeuristicKind, LandmarkSet, RelaxedTables,
};
use fgs_core::pddl::{GroundProblem, State};
use proptest::prelude::*;

use common::*;

/// True when some plan reaches the goal without ever making `atom` true.
fn goal_reachable_avoiding(gp: &GroundProblem, atom: usize) -> bool {
    if gp.init.contains(atom) {
        return false;
    }
    let mut seen = HashSet::from([gp.init.clone()]);
    let mut q = VecDeque::from([gp.init.clone()]);
    while let Some(s) = q.pop_front() {
        if gp.goal_satisfied(&s) {
            return true;
        }
        for (_, t) in successors(gp, &s) {
            if !t.contains(atom) && seen.insert(t.clone()) {
                q.push_back(t);
            }
        }
    }
    false
}

fn check_model(gp: &GroundProblem, delete_free: bool) -> Result<(), TestCaseError> {
    let dist = bfs_distances(gp, &gp.init);
    let mut states: Vec<&State> = dist.keys().collect();
    states.sort();
    for s in states.into_iter().take(100) {
        let opt = bfs_optimal(gp, s);
        let (hm, ha, hf) = (h_max(s, gp), h_add(s, gp), h_ff(s, gp));
        match opt {
            Some(d) => prop_assert!(hm <= d as f64, "h_max {hm} exceeds optimal {d}"),
            None => {}
        }
        prop_assert!(hf >= hm, "h_ff {hf} below h_max {hm}");
        prop_assert!(ha >= hm, "h_add {ha} below h_max {hm}");
        prop_assert_eq!(hm.is_infinite(), hf.is_infinite());
        prop_assert_eq!(hm.is_infinite(), ha.is_infinite());
        if hm.is_infinite() {
            prop_assert!(opt.is_none(), "relaxed-unreachable state has a plan");
        }
        prop_assert_eq!(hm == 0.0, gp.goal_satisfied(s));
        if delete_free {
            prop_assert_eq!(hf == 0.0, gp.goal_satisfied(s));
            // a relaxed plan is a real plan when nothing is deleted
            if let Some(d) = opt {
                prop_assert!(hf >= d as f64, "h_ff {hf} below optimal {d} on delete-free model");
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn relaxation_bounds_hold(seed in 0u64..100_000, atoms in 4usize..9, actions in 4usize..16) {
        check_model(&random_model(seed, atoms, actions, false), false)?;
    }

    #[test]
    fn delete_free_bounds_hold(seed in 0u64..100_000, atoms in 4usize..9, actions in 4usize..16) {
        check_model(&random_model(seed, atoms, actions, true), true)?;
    }

    #[test]
    fn landmarks_are_sound(seed in 0u64..100_000, atoms in 4usize..9, actions in 4usize..16) {
        let gp = random_model(seed, atoms, actions, false);
        let lms = LandmarkSet::compute(&gp, &RelaxedTables::new(&gp));
        for &l in &lms.landmarks {
            prop_assert!(!goal_reachable_avoiding(&gp, l), "{} is not a landmark", gp.atom_name(l));
        }
    }
}

#[test]
fn chain_estimates_count_remaining_steps() {
    let n = 5;
    let gp = chain_model(n);
    let lms = LandmarkSet::compute(&gp, &RelaxedTables::new(&gp));
    // p0 holds initially and is not a goal
    assert_eq!(lms.len(), n);
    let mut s = gp.init.clone();
    let mut acc = lms.accepted_at_root(&s);
    for i in 0..=n {
        let left = (n - i) as f64;
        assert_eq!(h_ff(&s, &gp), left);
        assert_eq!(h_add(&s, &gp), left);
        assert_eq!(h_max(&s, &gp), left);
        assert_eq!(h_landmark_count(&s, &gp, &lms, &acc), left);
        if i < n {
            s = gp.actions[i].apply(&s);
            acc = lms.accepted_after(&acc, &s);
        }
    }
}

#[test]
fn additive_and_max_differ_on_independent_goals() {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let gp = GroundProblem::from_parts(
        Vec::<String>::new(),
        vec![
            ("a".into(), vec![], [vec![], vec![], s(&["x"]), vec![]]),
            ("b".into(), vec![], [vec![], vec![], s(&["y"]), vec![]]),
        ],
        &[],
        &s(&["x", "y"]),
        &[],
    );
    assert_eq!(h_max(&gp.init, &gp), 1.0);
    assert_eq!(h_add(&gp.init, &gp), 2.0);
    assert_eq!(h_ff(&gp.init, &gp), 2.0);
}

#[test]
fn unreachable_goal_is_infinite_for_every_estimate() {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let gp = GroundProblem::from_parts(
        s(&["never"]),
        vec![("a".into(), vec![], [vec![], vec![], s(&["x"]), vec![]])],
        &[],
        &s(&["x", "never"]),
        &[],
    );
    for kind in [HeuristicKind::Ff, HeuristicKind::Add, HeuristicKind::Max, HeuristicKind::Landmarks] {
        let ev = HeuristicEvaluator::new(kind, &gp);
        let memo = ev.root_memo(&gp.init);
        assert_eq!(ev.estimate(&gp, &gp.init, &memo), f64::INFINITY, "{kind}");
    }
    let ev = HeuristicEvaluator::new(HeuristicKind::Zero, &gp);
    assert_eq!(ev.estimate(&gp, &gp.init, &ev.root_memo(&gp.init)), 0.0);
}

#[test]
fn landmark_goal_deleted_again_is_counted() {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    // x is needed as a goal, but making y deletes it
    let gp = GroundProblem::from_parts(
        Vec::<String>::new(),
        vec![
            ("mk-x".into(), vec![], [vec![], vec![], s(&["x"]), vec![]]),
            ("mk-y".into(), vec![], [vec![], vec![], s(&["y"]), s(&["x"])]),
        ],
        &[],
        &s(&["x", "y"]),
        &[],
    );
    let lms = LandmarkSet::compute(&gp, &RelaxedTables::new(&gp));
    let root = gp.init.clone();
    let acc0 = lms.accepted_at_root(&root);
    assert_eq!(h_landmark_count(&root, &gp, &lms, &acc0), 2.0);
    let sx = gp.actions[0].apply(&root);
    let acc1 = lms.accepted_after(&acc0, &sx);
    assert_eq!(h_landmark_count(&sx, &gp, &lms, &acc1), 1.0);
    let sy = gp.actions[1].apply(&sx);
    let acc2 = lms.accepted_after(&acc1, &sy);
    assert_eq!(h_landmark_count(&sy, &gp, &lms, &acc2), 1.0);
}

#[test]
fn bundled_problems_have_finite_admissible_root_estimates() {
    let root = data_root();
    for (task, tool) in [("woodworking", "hammer"), ("cooking", "spatula"), ("cleaning", "rake")] {
        let gp = fgs_core::bench::load_problem(
            &root.join(format!("domains/{task}.pddl")),
            &root.join(format!("problems/{task}_{tool}.pddl")),
        )
        .unwrap();
        let hm = h_max(&gp.init, &gp);
        let hf = h_ff(&gp.init, &gp);
        assert!(hm.is_finite() && hm > 0.0, "{task}");
        assert!(hf >= hm, "{task}");
    }
}
