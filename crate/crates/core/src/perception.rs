//! Scenario files and simulated perception.
//!
//! A scenario lists the candidate objects of one test case with the
//! confidences the shape, material and attachment predictors would report,
//! the single correct object pair, and the sensor noise to apply.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::{
    can_attach, material_fit, profile_set, shape_fit, AttachmentKind, Material, ObjectProfile, ProfileSet,
    ScoreParams, ToolRegistry, ToolSpec, HANDLE_ROLE,
};

pub const FORMAT_VERSION: u32 = 1;
pub const OBJECTS_PER_CASE: usize = 10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("scenario '{id}': {field}: {msg}")]
    Invalid { id: String, field: String, msg: String },
    #[error("cannot generate scenario: {0}")]
    Generation(String),
}

fn invalid(id: &str, field: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { id: id.to_string(), field: field.into(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskType {
    Woodworking,
    Cooking,
    Cleaning,
}

impl TaskType {
    pub const ALL: [TaskType; 3] = [TaskType::Woodworking, TaskType::Cooking, TaskType::Cleaning];

    pub fn name(self) -> &'static str {
        match self {
            TaskType::Woodworking => "woodworking",
            TaskType::Cooking => "cooking",
            TaskType::Cleaning => "cleaning",
        }
    }

    pub fn tools(self) -> [&'static str; 2] {
        match self {
            TaskType::Woodworking => ["hammer", "screwdriver"],
            TaskType::Cooking => ["ladle", "spatula"],
            TaskType::Cleaning => ["rake", "squeegee"],
        }
    }

    /// The domain action that uses a constructed tool.
    pub fn task_action(self, tool: &str) -> Option<&'static str> {
        Some(match (self, tool) {
            (TaskType::Woodworking, "hammer") => "hit",
            (TaskType::Woodworking, "screwdriver") => "tighten",
            (TaskType::Cooking, "spatula") => "flip",
            (TaskType::Cooking, "ladle") => "scoop",
            (TaskType::Cleaning, "rake") => "reach",
            (TaskType::Cleaning, "squeegee") => "collect",
            _ => return None,
        })
    }

    pub fn of_tool(tool: &str) -> Option<TaskType> {
        TaskType::ALL.into_iter().find(|t| t.tools().contains(&tool))
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task type '{s}' (expected woodworking, cooking, cleaning)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tool: String,
    pub action_part: String,
    pub grasp_part: String,
}

impl GroundTruth {
    pub fn join_action(&self) -> String {
        format!("{}{}", crate::pddl::JOIN_PREFIX, self.tool)
    }

    pub fn pair(&self) -> [&str; 2] {
        [&self.action_part, &self.grasp_part]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub seed: u64,
    #[serde(default)]
    pub material_fn_rate: f64,
    #[serde(default)]
    pub attach_fn_rate: f64,
    #[serde(default)]
    pub shape_jitter: f64,
}

impl NoiseSpec {
    pub fn is_silent(&self) -> bool {
        self.material_fn_rate == 0.0 && self.attach_fn_rate == 0.0 && self.shape_jitter == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub id: String,
    pub task: TaskType,
    pub ground_truth: Vec<GroundTruth>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub tool_specs: Vec<ToolSpec>,
    pub objects: Vec<ObjectProfile>,
}

impl Scenario {
    /// The single ground-truth combination. Only valid after `validate`.
    pub fn gt(&self) -> &GroundTruth {
        &self.ground_truth[0]
    }

    pub fn registry(&self) -> Result<ToolRegistry, ScenarioError> {
        ToolRegistry::new(self.tool_specs.iter().cloned()).map_err(|e| invalid(&self.id, "tool_specs", e.to_string()))
    }

    pub fn profiles(&self) -> ProfileSet {
        profile_set(self.objects.iter().cloned())
    }

    pub fn object_ids(&self) -> Vec<&str> {
        self.objects.iter().map(|o| o.id.as_str()).collect()
    }

    pub fn tools(&self) -> Vec<&str> {
        self.tool_specs.iter().map(|s| s.tool.as_str()).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let id = &self.id;
        if self.format_version != FORMAT_VERSION {
            return Err(invalid(id, "format_version", format!("unsupported version {}", self.format_version)));
        }
        if self.ground_truth.len() != 1 {
            return Err(invalid(
                id,
                "ground_truth",
                format!("expected exactly one ground-truth combination, found {}", self.ground_truth.len()),
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            if !seen.insert(o.id.as_str()) {
                return Err(invalid(id, format!("objects[{i}].id"), format!("duplicate object id '{}'", o.id)));
            }
            o.validate().map_err(|e| invalid(id, format!("objects[{i}]"), e.to_string()))?;
        }
        let n = &self.noise;
        for (name, v) in [("material_fn_rate", n.material_fn_rate), ("attach_fn_rate", n.attach_fn_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(id, format!("noise.{name}"), format!("{v} not in [0,1]")));
            }
        }
        if !(0.0..=0.5).contains(&n.shape_jitter) {
            return Err(invalid(id, "noise.shape_jitter", format!("{} not in [0,0.5]", n.shape_jitter)));
        }
        let registry = self.registry()?;
        for (i, spec) in self.tool_specs.iter().enumerate() {
            if spec.parts() != 2 {
                return Err(invalid(id, format!("tool_specs[{i}]"), "only two-part tools are supported"));
            }
        }
        let gt = self.gt();
        let spec = registry
            .by_tool(&gt.tool)
            .ok_or_else(|| invalid(id, "ground_truth[0].tool", format!("no tool spec for '{}'", gt.tool)))?;
        for (field, obj) in [("action_part", &gt.action_part), ("grasp_part", &gt.grasp_part)] {
            if !seen.contains(obj.as_str()) {
                return Err(invalid(id, format!("ground_truth[0].{field}"), format!("unknown object '{obj}'")));
            }
        }
        if gt.action_part == gt.grasp_part {
            return Err(invalid(id, "ground_truth[0]", "action and grasp part are the same object"));
        }
        let profiles = self.profiles();
        if can_attach(&gt.pair(), spec, &profiles).is_none() {
            return Err(invalid(id, "ground_truth[0]", "ground-truth pair cannot be attached"));
        }
        if material_fit(&gt.pair(), spec, &profiles, &ScoreParams::default()) == f64::NEG_INFINITY {
            return Err(invalid(id, "ground_truth[0]", "ground-truth action part fails the material threshold"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario =
        toml::from_str(text).map_err(|e| ScenarioError::Parse { path: origin.to_string(), msg: e.to_string() })?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text, &path.display().to_string())
}

/// All scenario files in a directory, sorted by file name.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>, ScenarioError> {
    let rd = std::fs::read_dir(dir).map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::new();
    for entry in rd {
        let p = entry.map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?.path();
        if p.extension().is_some_and(|e| e == "toml") {
            paths.push(p);
        }
    }
    paths.sort();
    paths.iter().map(|p| load_scenario(p)).collect()
}

/// Effective profiles as the robot would perceive them.
pub fn sense(scenario: &Scenario, noise_on: bool) -> ProfileSet {
    let mut profiles = scenario.profiles();
    if !noise_on {
        return profiles;
    }
    let noise = scenario.noise;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    // fixed draw order so the same seed always yields the same profiles
    let material_roll: f64 = rng.gen();
    let attach_roll: f64 = rng.gen();
    let gt = scenario.gt();
    let params = ScoreParams::default();

    if material_roll < noise.material_fn_rate {
        if let (Some(spec), Some(p)) =
            (scenario.tool_specs.iter().find(|s| s.tool == gt.tool), profiles.get_mut(&gt.action_part))
        {
            let best = spec.allowed_materials.iter().map(|&m| p.material_p(m)).fold(0.0, f64::max);
            if best > 0.0 {
                let scale = 0.5 * params.threshold / best;
                for m in &spec.allowed_materials {
                    if let Some(c) = p.material_conf.get_mut(m) {
                        *c *= scale;
                    }
                }
            }
        }
    }
    if attach_roll < noise.attach_fn_rate {
        for id in gt.pair() {
            if let Some(p) = profiles.get_mut(id) {
                p.pierceable = false;
                p.has_magnet = false;
            }
        }
        if let Some(p) = profiles.get_mut(&gt.grasp_part) {
            p.can_grasp_others = false;
        }
        if let Some(p) = profiles.get_mut(&gt.action_part) {
            p.can_be_grasped = false;
        }
    }
    for p in profiles.values_mut() {
        for c in p.shape_conf.values_mut() {
            let d: f64 = rng.gen_range(-1.0..=1.0);
            *c = (*c + d * noise.shape_jitter).clamp(0.0, 1.0);
        }
    }
    profiles
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryObject {
    pub name: String,
    pub material: Material,
    #[serde(default)]
    pub affords: Vec<String>,
    #[serde(default)]
    pub pierceable: bool,
    #[serde(default)]
    pub can_grasp_others: bool,
    #[serde(default)]
    pub can_be_grasped: bool,
    #[serde(default)]
    pub has_magnet: bool,
}

impl LibraryObject {
    fn affords(&self, role: &str) -> bool {
        self.affords.iter().any(|r| r == role)
    }

    fn as_profile(&self) -> ObjectProfile {
        ObjectProfile {
            id: self.name.clone(),
            name: self.name.clone(),
            material: Some(self.material),
            affords: self.affords.clone(),
            pierceable: self.pierceable,
            can_grasp_others: self.can_grasp_others,
            can_be_grasped: self.can_be_grasped,
            has_magnet: self.has_magnet,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Library {
    pub objects: Vec<LibraryObject>,
}

impl Library {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| ScenarioError::Parse { path: path.display().to_string(), msg: e.to_string() })
    }

    pub fn material_counts(&self) -> BTreeMap<Material, usize> {
        let mut counts = BTreeMap::new();
        for o in &self.objects {
            *counts.entry(o.material).or_insert(0) += 1;
        }
        counts
    }
}

/// Bundled asset root: `FGS_DATA_DIR` if set, else the repository's `data/`.
pub fn data_dir() -> PathBuf {
    match std::env::var_os("FGS_DATA_DIR") {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

pub fn load_library() -> Result<Library, ScenarioError> {
    Library::load(&data_dir().join("library/objects.toml"))
}

/// Whether an ordered pair really forms the tool, judged from annotations
/// rather than confidences.
pub fn semantically_valid(head: &ObjectProfile, grasp: &ObjectProfile, spec: &ToolSpec) -> bool {
    let role = &spec.action_part_roles[0];
    let head_ok = head.affords.iter().any(|r| r == role)
        && head.material.is_some_and(|m| spec.allowed_materials.contains(&m));
    let grasp_ok = grasp.affords.iter().any(|r| r == &spec.grasp_part_role);
    let ps = profile_set([head.clone(), grasp.clone()]);
    head_ok && grasp_ok && can_attach(&[&head.id, &grasp.id], spec, &ps).is_some()
}

/// Every ordered pair of distinct objects that really forms one of the tools.
pub fn valid_pairs(scenario: &Scenario) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    for spec in &scenario.tool_specs {
        for a in &scenario.objects {
            for g in &scenario.objects {
                if a.id != g.id && semantically_valid(a, g, spec) {
                    out.push((spec.tool.clone(), a.id.clone(), g.id.clone()));
                }
            }
        }
    }
    out
}

/// Noiseless trust-mode score of an ordered pair, `-inf` if rejected.
pub fn pair_score(profiles: &ProfileSet, spec: &ToolSpec, head: &str, grasp: &str) -> f64 {
    let params = ScoreParams::default();
    let pair = [head, grasp];
    if can_attach(&pair, spec, profiles).is_none() {
        return f64::NEG_INFINITY;
    }
    let m = material_fit(&pair, spec, profiles, &params);
    if m == f64::NEG_INFINITY {
        return m;
    }
    params.lambda_shape * shape_fit(&pair, spec, profiles) + params.lambda_material * m
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

const ROLES: [&str; 7] =
    ["hammer_head", "screwdriver_head", "ladle_head", "spatula_head", "rake_head", "squeegee_head", HANDLE_ROLE];

/// Confidences for a library object: afforded roles high, others low, true
/// material dominant.
fn sample_confidences(rng: &mut ChaCha8Rng, obj: &LibraryObject, p: &mut ObjectProfile) {
    for role in ROLES {
        let c = if obj.affords(role) { rng.gen_range(0.7..0.95) } else { rng.gen_range(0.0..0.5) };
        p.shape_conf.insert(role.to_string(), round3(c));
    }
    let main = round3(rng.gen_range(0.75..0.95));
    p.material_conf.insert(obj.material, main);
    let others: Vec<Material> = Material::ALL.into_iter().filter(|&m| m != obj.material).collect();
    let weights: Vec<f64> = others.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum::<f64>().max(1e-9);
    for (m, w) in others.iter().zip(&weights) {
        // floor so the confidences never sum past 1
        let c = ((1.0 - main) * w / total * 1000.0).floor() / 1000.0;
        p.material_conf.insert(*m, c);
    }
}

fn case_seed(seed: u64, salt: u64, case: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(salt.wrapping_mul(10_007)).wrapping_add(case as u64)
}

fn tool_salt(tool: &str) -> u64 {
    tool.bytes().fold(17u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64))
}

/// Picks a ground-truth pair and distractors so that the ground truth is the
/// only pair that really forms any of `specs`.
fn draw_case(
    rng: &mut ChaCha8Rng,
    library: &Library,
    specs: &[ToolSpec],
    target: &ToolSpec,
) -> Result<(Vec<ObjectProfile>, GroundTruth), ScenarioError> {
    let profiles: Vec<ObjectProfile> = library.objects.iter().map(LibraryObject::as_profile).collect();
    let mut pairs = Vec::new();
    for (i, a) in profiles.iter().enumerate() {
        for (j, g) in profiles.iter().enumerate() {
            if i != j && semantically_valid(a, g, target) {
                pairs.push((i, j));
            }
        }
    }
    let &(hi, gi) = pairs
        .choose(rng)
        .ok_or_else(|| ScenarioError::Generation(format!("library has no valid pair for '{}'", target.tool)))?;
    let mut chosen = vec![hi, gi];
    let mut pool: Vec<usize> = (0..profiles.len()).filter(|i| !chosen.contains(i)).collect();
    pool.shuffle(rng);
    for cand in pool {
        if chosen.len() == OBJECTS_PER_CASE {
            break;
        }
        let clash = chosen.iter().any(|&c| {
            specs.iter().any(|s| {
                semantically_valid(&profiles[cand], &profiles[c], s) || semantically_valid(&profiles[c], &profiles[cand], s)
            })
        });
        if !clash {
            chosen.push(cand);
        }
    }
    if chosen.len() < OBJECTS_PER_CASE {
        return Err(ScenarioError::Generation(format!(
            "library too small to build a unique '{}' case with {} objects",
            target.tool, OBJECTS_PER_CASE
        )));
    }
    let mut slots: Vec<usize> = (0..OBJECTS_PER_CASE).collect();
    slots.shuffle(rng);
    let mut objects = vec![ObjectProfile::default(); OBJECTS_PER_CASE];
    let mut gt = GroundTruth { tool: target.tool.clone(), action_part: String::new(), grasp_part: String::new() };
    for (k, &li) in chosen.iter().enumerate() {
        let id = format!("obj{}", slots[k]);
        let mut p = profiles[li].clone();
        p.id = id.clone();
        sample_confidences(rng, &library.objects[li], &mut p);
        match k {
            0 => gt.action_part = id,
            1 => gt.grasp_part = id,
            _ => {}
        }
        objects[slots[k]] = p;
    }
    Ok((objects, gt))
}

fn make_scenario(id: String, task: TaskType, specs: Vec<ToolSpec>, objects: Vec<ObjectProfile>, gt: GroundTruth, seed: u64) -> Scenario {
    Scenario {
        format_version: FORMAT_VERSION,
        id,
        task,
        ground_truth: vec![gt],
        noise: NoiseSpec { seed, ..Default::default() },
        tool_specs: specs,
        objects,
    }
}

/// Single-tool test cases for `tool`, each with exactly one valid pair.
pub fn generate_benchmark(
    task: TaskType,
    tool: &str,
    cases: usize,
    seed: u64,
    library: &Library,
) -> Result<Vec<Scenario>, ScenarioError> {
    if !task.tools().contains(&tool) {
        return Err(ScenarioError::Generation(format!("tool '{tool}' is not used in {task} tasks")));
    }
    let spec = ToolRegistry::standard().by_tool(tool).cloned().expect("standard registry covers all task tools");
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let cs = case_seed(seed, tool_salt(tool), case);
        let mut rng = ChaCha8Rng::seed_from_u64(cs);
        let (objects, gt) = draw_case(&mut rng, library, std::slice::from_ref(&spec), &spec)?;
        let s = make_scenario(format!("{task}_{tool}_{:02}", case + 1), task, vec![spec.clone()], objects, gt, cs);
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

const ADAPT_RETRIES: usize = 200;

/// Two-tool test cases: either tool could solve the task but only one
/// pair of objects really forms a tool, and that pair scores best.
pub fn generate_adaptability(
    task: TaskType,
    cases: usize,
    seed: u64,
    library: &Library,
) -> Result<Vec<Scenario>, ScenarioError> {
    let reg = ToolRegistry::standard();
    let specs: Vec<ToolSpec> = task.tools().iter().map(|t| reg.by_tool(t).cloned().expect("task tool")).collect();
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let target = &specs[case % 2];
        let mut attempt = 0;
        let scenario = loop {
            let cs = case_seed(seed, tool_salt(task.name()) + attempt as u64 * 7919, case);
            let mut rng = ChaCha8Rng::seed_from_u64(cs);
            let (objects, gt) = draw_case(&mut rng, library, &specs, target)?;
            let s = make_scenario(format!("{task}_adapt_{:02}", case + 1), task, specs.clone(), objects, gt, cs);
            if gt_scores_best(&s) {
                break s;
            }
            attempt += 1;
            if attempt == ADAPT_RETRIES {
                return Err(ScenarioError::Generation(format!("no separable {task} case after {ADAPT_RETRIES} draws")));
            }
        };
        scenario.validate()?;
        out.push(scenario);
    }
    Ok(out)
}

/// Whether the ground truth strictly outscores every other pair for every tool.
pub fn gt_scores_best(s: &Scenario) -> bool {
    let profiles = s.profiles();
    let gt = s.gt();
    let Some(gt_spec) = s.tool_specs.iter().find(|t| t.tool == gt.tool) else {
        return false;
    };
    let best = pair_score(&profiles, gt_spec, &gt.action_part, &gt.grasp_part);
    s.tool_specs.iter().all(|spec| {
        s.objects.iter().all(|a| {
            s.objects.iter().all(|g| {
                a.id == g.id
                    || (spec.tool == gt.tool && a.id == gt.action_part && g.id == gt.grasp_part)
                    || pair_score(&profiles, spec, &a.id, &g.id) < best
            })
        })
    })
}

/// Attachment kind of the ground-truth pair under the file's profiles.
pub fn gt_attachment(s: &Scenario) -> Option<AttachmentKind> {
    let spec = s.tool_specs.iter().find(|t| t.tool == s.gt().tool)?;
    can_attach(&s.gt().pair(), spec, &s.profiles())
}
