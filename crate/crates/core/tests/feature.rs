mod common;

use fgs_core::feature::{
    can_attach, feature_score, profile_set, AttachmentKind, Combination, Material, ObjectProfile, ProfileSet, RejectSet,
    ScoreParams, ToolRegistry,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::score::*;
use Material::*;

#[test]
fn scores_match_hand_computed_fixtures() {
    let profiles = fixtures();
    let registry = ToolRegistry::standard();
    let cases = cases();
    assert!(cases.len() >= 20);
    for c in &cases {
        let action = join(c.tool, c.a, c.g);
        let reject: RejectSet = if c.rejected { [Combination::of(&action).unwrap()].into_iter().collect() } else { RejectSet::default() };
        let params = ScoreParams { lambda_shape: c.params.0, lambda_material: c.params.1, threshold: c.params.2 };
        let got = feature_score(&action, c.trust, &reject, &registry, &profiles, &params).unwrap();
        let label = format!("{}({},{}) trust={} rejected={}", c.tool, c.a, c.g, c.trust, c.rejected);
        if c.expected == NEG {
            assert_eq!(got, NEG, "{label}");
        } else {
            assert!((got - c.expected).abs() <= 1e-12, "{label}: {got} vs {}", c.expected);
        }
    }
}

#[test]
fn attachment_kinds_are_checked_in_order() {
    let profiles = fixtures();
    let reg = ToolRegistry::standard();
    let hammer = reg.by_tool("hammer").unwrap();
    let squeegee = reg.by_tool("squeegee").unwrap();
    assert_eq!(can_attach(&["m1", "w1"], hammer, &profiles), Some(AttachmentKind::Pierce));
    assert_eq!(can_attach(&["m1", "p1"], hammer, &profiles), Some(AttachmentKind::Grasp));
    assert_eq!(can_attach(&["m1", "m2"], hammer, &profiles), Some(AttachmentKind::Magnetic));
    assert_eq!(can_attach(&["p1", "m1"], hammer, &profiles), None);
    // the sponge is also graspable by the clamp, but piercing is checked first
    assert_eq!(can_attach(&["f1", "p1"], squeegee, &profiles), Some(AttachmentKind::Pierce));
}

#[test]
fn non_tool_actions_score_zero() {
    let mut a = join("hammer", "m1", "w1");
    a.schema = "move".into();
    a.o_a.clear();
    let s = feature_score(&a, true, &RejectSet::default(), &ToolRegistry::standard(), &fixtures(), &ScoreParams::default());
    assert_eq!(s, Ok(0.0));
}

#[test]
fn random_profiles_score_within_range_and_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfea7);
    let reg = ToolRegistry::standard();
    let params = ScoreParams::default();
    let mut finite = 0;
    for i in 0..100_000 {
        let a = random_profile(&mut rng, "a");
        let g = random_profile(&mut rng, "g");
        let profiles = profile_set([a.clone(), g.clone()]);
        let tool = ["hammer", "squeegee", "rake"][i % 3];
        let spec = reg.by_tool(tool).unwrap();
        let allowed: Vec<Material> = spec.allowed_materials.iter().copied().collect();
        let action = join(tool, "a", "g");
        let trust = i % 4 != 0;
        let listed = rng.gen_bool(0.5);
        let reject: RejectSet =
            if listed { [Combination::of(&action).unwrap()].into_iter().collect() } else { RejectSet::default() };
        let got = feature_score(&action, trust, &reject, &reg, &profiles, &params).unwrap();
        let want = oracle(&a, &g, &format!("{tool}_head"), &allowed, trust, listed, &params);
        if want == NEG {
            assert_eq!(got, NEG, "case {i}");
        } else {
            finite += 1;
            assert!((got - want).abs() <= 1e-12, "case {i}: {got} vs {want}");
            let hi = if trust { params.lambda_shape + params.lambda_material } else { 1.0 };
            assert!((0.0..=hi).contains(&got), "case {i}: {got}");
        }
    }
    assert!(finite > 10_000, "only {finite} finite scores");
}

fn two(a: ObjectProfile, g: ObjectProfile) -> ProfileSet {
    profile_set([a, g])
}

fn profile_strategy(id: &'static str) -> impl Strategy<Value = ObjectProfile> {
    any::<u64>().prop_map(move |seed| random_profile(&mut ChaCha8Rng::seed_from_u64(seed), id))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn raising_a_confidence_never_lowers_the_score(
        a in profile_strategy("a"),
        g in profile_strategy("g"),
        bump in 0.0f64..1.0,
        which in 0usize..3,
    ) {
        let reg = ToolRegistry::standard();
        let params = ScoreParams::default();
        let action = join("rake", "a", "g");
        let none = RejectSet::default();
        let before = feature_score(&action, true, &none, &reg, &two(a.clone(), g.clone()), &params).unwrap();
        let (mut a2, mut g2) = (a.clone(), g.clone());
        match which {
            0 => { let v = a2.shape_conf.get_mut("rake_head").unwrap(); *v = (*v + bump).min(1.0); }
            1 => { let v = g2.shape_conf.get_mut("handle").unwrap(); *v = (*v + bump).min(1.0); }
            _ => {
                // move mass from other classes into an allowed one
                let total: f64 = a2.material_conf.values().sum();
                let wood = a2.material_conf.get(&Wood).copied().unwrap_or(0.0);
                a2.material_conf.insert(Wood, (wood + bump).min(wood + 1.0 - total).max(wood));
            }
        }
        let after = feature_score(&action, true, &none, &reg, &two(a2, g2), &params).unwrap();
        prop_assert!(after >= before, "{before} -> {after}");
    }

    #[test]
    fn combination_order_matters(a in profile_strategy("a"), g in profile_strategy("g")) {
        let reg = ToolRegistry::standard();
        let params = ScoreParams::default();
        let profiles = two(a.clone(), g.clone());
        let none = RejectSet::default();
        let ag = feature_score(&join("rake", "a", "g"), true, &none, &reg, &profiles, &params).unwrap();
        let ga = feature_score(&join("rake", "g", "a"), true, &none, &reg, &profiles, &params).unwrap();
        let spec: Vec<Material> = reg.by_tool("rake").unwrap().allowed_materials.iter().copied().collect();
        prop_assert_eq!(ag, oracle(&a, &g, "rake_head", &spec, true, false, &params));
        prop_assert_eq!(ga, oracle(&g, &a, "rake_head", &spec, true, false, &params));
    }

    #[test]
    fn untrusted_scores_are_finite_exactly_on_the_whitelist(a in profile_strategy("a"), g in profile_strategy("g")) {
        let reg = ToolRegistry::standard();
        let params = ScoreParams::default();
        let profiles = two(a, g);
        let listed = join("rake", "a", "g");
        let other = join("rake", "g", "a");
        let wl: RejectSet = [Combination::of(&listed).unwrap()].into_iter().collect();
        let s1 = feature_score(&listed, false, &wl, &reg, &profiles, &params).unwrap();
        let s2 = feature_score(&other, false, &wl, &reg, &profiles, &params).unwrap();
        prop_assert!(s1.is_finite() && (0.0..=1.0).contains(&s1));
        prop_assert_eq!(s2, NEG);
    }
}
