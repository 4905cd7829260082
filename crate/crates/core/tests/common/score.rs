#![allow(dead_code)]

//! Hand-computed feature-score fixtures and an independent restatement of
//! the scoring rule.

use std::collections::BTreeMap;

use fgs_core::feature::{profile_set, Material, ObjectProfile, ProfileSet, ScoreParams};
use fgs_core::pddl::GroundAction;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use Material::*;

pub struct Flags {
    pub pierce: bool,
    pub grasps: bool,
    pub graspable: bool,
    pub magnet: bool,
}

pub fn obj(id: &str, head: &[(&str, f64)], handle: f64, mats: &[(Material, f64)], f: Flags) -> ObjectProfile {
    let mut shape_conf: BTreeMap<String, f64> = head.iter().map(|(r, p)| (r.to_string(), *p)).collect();
    shape_conf.insert("handle".into(), handle);
    ObjectProfile {
        id: id.into(),
        shape_conf,
        material_conf: mats.iter().copied().collect(),
        pierceable: f.pierce,
        can_grasp_others: f.grasps,
        can_be_grasped: f.graspable,
        has_magnet: f.magnet,
        ..Default::default()
    }
}

pub fn fixtures() -> ProfileSet {
    let t = true;
    let f = false;
    profile_set([
        obj("m1", &[("hammer_head", 0.9), ("squeegee_head", 0.1)], 0.2, &[(Metal, 0.85), (Wood, 0.05)], Flags { pierce: f, grasps: f, graspable: t, magnet: t }),
        obj("w1", &[("hammer_head", 0.3), ("squeegee_head", 0.05)], 0.95, &[(Wood, 0.9)], Flags { pierce: t, grasps: f, graspable: f, magnet: f }),
        obj("p1", &[("hammer_head", 0.1), ("squeegee_head", 0.2)], 0.6, &[(Plastic, 0.7), (Metal, 0.2)], Flags { pierce: f, grasps: t, graspable: f, magnet: f }),
        obj("f1", &[("hammer_head", 0.05), ("squeegee_head", 0.8)], 0.1, &[(Foam, 0.65), (Plastic, 0.3)], Flags { pierce: t, grasps: f, graspable: t, magnet: f }),
        obj("m2", &[("hammer_head", 0.6), ("squeegee_head", 0.0)], 0.5, &[(Metal, 0.55), (Plastic, 0.4)], Flags { pierce: f, grasps: f, graspable: f, magnet: t }),
        obj("f2", &[("hammer_head", 0.0), ("squeegee_head", 0.9)], 0.3, &[(Foam, 0.5), (Plastic, 0.5)], Flags { pierce: t, grasps: f, graspable: f, magnet: f }),
    ])
}

pub fn join(tool: &str, a: &str, g: &str) -> GroundAction {
    GroundAction {
        schema: format!("join-{tool}"),
        args: vec![a.into(), g.into()],
        o_a: vec![a.into(), g.into()],
        pre_pos: vec![],
        pre_neg: vec![],
        adds: vec![],
        dels: vec![],
        base_cost: 1.0,
    }
}

pub const NEG: f64 = f64::NEG_INFINITY;

pub struct Case {
    pub tool: &'static str,
    pub a: &'static str,
    pub g: &'static str,
    pub trust: bool,
    pub rejected: bool,
    pub params: (f64, f64, f64),
    pub expected: f64,
}

pub fn case(tool: &'static str, a: &'static str, g: &'static str, trust: bool, rejected: bool, expected: f64) -> Case {
    Case { tool, a, g, trust, rejected, params: (1.0, 1.0, 0.6), expected }
}


/// Fixture cases over `fixtures()`, with expected scores worked out by hand.
pub fn cases() -> Vec<Case> {
    vec![
        case("hammer", "m1", "w1", true, false, 0.9 * 0.95 + 0.85),
        case("hammer", "w1", "m1", true, false, 0.3 * 0.2 + 0.9),
        case("hammer", "m1", "p1", true, false, 0.9 * 0.6 + 0.85),
        case("hammer", "m1", "m2", true, false, 0.9 * 0.5 + 0.85),
        // magnets attach, but metal at 0.55 is under the threshold
        case("hammer", "m2", "m1", true, false, NEG),
        // no attachment mechanism
        case("hammer", "p1", "m1", true, false, NEG),
        case("hammer", "p1", "w1", true, false, NEG),
        case("squeegee", "f1", "w1", true, false, NEG),
        case("squeegee", "f1", "p1", true, false, 0.8 * 0.6 + 0.65),
        case("squeegee", "f2", "p1", true, false, NEG),
        case("squeegee", "f2", "p1", false, true, 0.9 * 0.6),
        case("squeegee", "f2", "p1", false, false, NEG),
        case("hammer", "m2", "m1", false, true, 0.6 * 0.2),
        case("hammer", "m1", "w1", false, false, NEG),
        case("hammer", "m1", "w1", false, true, 0.9 * 0.95),
        case("squeegee", "f1", "m1", true, false, 0.8 * 0.2 + 0.65),
        case("hammer", "w1", "p1", true, false, 0.3 * 0.6 + 0.9),
        Case { params: (2.0, 0.5, 0.6), ..case("hammer", "m1", "w1", true, false, 2.0 * 0.9 * 0.95 + 0.5 * 0.85) },
        Case { params: (1.0, 1.0, 0.9), ..case("hammer", "m1", "w1", true, false, NEG) },
        Case { params: (1.0, 1.0, 0.5), ..case("hammer", "m2", "p1", true, false, NEG) },
        Case { params: (1.0, 1.0, 0.5), ..case("hammer", "m2", "w1", true, false, 0.6 * 0.95 + 0.55) },
        case("squeegee", "f1", "f2", true, false, NEG),
        case("hammer", "p1", "f1", true, false, NEG),
        // the threshold is inclusive
        Case { params: (1.0, 1.0, 0.85), ..case("hammer", "m1", "w1", true, false, 0.9 * 0.95 + 0.85) },
    ]
}

/// Straightforward restatement of the scoring rule for two-part tools.
pub fn oracle(a: &ObjectProfile, g: &ObjectProfile, head: &str, allowed: &[Material], trust: bool, listed: bool, p: &ScoreParams) -> f64 {
    let shape = a.shape_conf[head] * g.shape_conf["handle"];
    if !trust {
        return if listed { shape } else { NEG };
    }
    let attach = (a.pierceable ^ g.pierceable)
        || (g.can_grasp_others && a.can_be_grasped)
        || (a.has_magnet && g.has_magnet);
    let mat = allowed.iter().map(|m| a.material_conf.get(m).copied().unwrap_or(0.0)).fold(0.0, f64::max);
    if !attach || mat < p.threshold {
        NEG
    } else {
        p.lambda_shape * shape + p.lambda_material * mat
    }
}

pub fn random_profile(rng: &mut ChaCha8Rng, id: &str) -> ObjectProfile {
    let mut left = 1.0;
    let mut material_conf = BTreeMap::new();
    for m in Material::ALL {
        if rng.gen_bool(0.6) {
            let p: f64 = rng.gen_range(0.0..=left);
            left -= p;
            material_conf.insert(m, p);
        }
    }
    let shape_conf = ["hammer_head", "squeegee_head", "rake_head", "handle"]
        .iter()
        .map(|r| (r.to_string(), rng.gen_range(0.0..=1.0)))
        .collect();
    ObjectProfile {
        id: id.into(),
        shape_conf,
        material_conf,
        pierceable: rng.gen(),
        can_grasp_others: rng.gen(),
        can_be_grasped: rng.gen(),
        has_magnet: rng.gen(),
        ..Default::default()
    }
}

