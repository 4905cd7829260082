//! Object-fitness scoring for tool-construction actions.
//!
//! A tool action is parameterized by an ordered object combination: the
//! leading objects fill the action-part roles, the last one is the grasp
//! part. Under full sensor trust the score is a weighted sum of a shape
//! score and a thresholded material score, gated by attachment feasibility.
//! Without trust only combinations previously rejected by those hard
//! constraints are admitted, and they are ranked by shape alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{GroundAction, GroundProblem, State};
use crate::search::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Metal,
    Wood,
    Plastic,
    Paper,
    Foam,
}

impl Material {
    pub const ALL: [Material; 5] = [Material::Metal, Material::Wood, Material::Plastic, Material::Paper, Material::Foam];

    pub fn name(self) -> &'static str {
        match self {
            Material::Metal => "metal",
            Material::Wood => "wood",
            Material::Plastic => "plastic",
            Material::Paper => "paper",
            Material::Foam => "foam",
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const HANDLE_ROLE: &str = "handle";

/// Sensed properties of one object, as the perception models would report
/// them: per-role shape confidences, material class confidences and the
/// attachment capabilities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectProfile {
    pub id: String,
    #[serde(default)]
    pub name: String,
    /// Annotated true material, if known. Never read by scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<Material>,
    /// Annotated part roles the object really affords. Never read by scoring.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affords: Vec<String>,
    pub shape_conf: BTreeMap<String, f64>,
    pub material_conf: BTreeMap<Material, f64>,
    pub pierceable: bool,
    pub can_grasp_others: bool,
    pub can_be_grasped: bool,
    pub has_magnet: bool,
}

impl ObjectProfile {
    pub fn shape(&self, role: &str) -> f64 {
        match self.shape_conf.get(role) {
            Some(&p) => p,
            None => {
                log::warn!("object '{}' has no shape confidence for role '{}'; using 0", self.id, role);
                0.0
            }
        }
    }

    pub fn material_p(&self, m: Material) -> f64 {
        self.material_conf.get(&m).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |what: String| FeatureError::InvalidProfile { object: self.id.clone(), reason: what };
        for (role, &p) in &self.shape_conf {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("shape confidence for '{role}' is {p}, outside [0,1]")));
            }
        }
        let mut total = 0.0;
        for (m, &p) in &self.material_conf {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("material confidence for '{m}' is {p}, outside [0,1]")));
            }
            total += p;
        }
        if total > 1.0 + 1e-9 {
            return Err(bad(format!("material confidences sum to {total} > 1")));
        }
        Ok(())
    }
}

pub type ProfileSet = BTreeMap<String, ObjectProfile>;

pub fn profile_set(profiles: impl IntoIterator<Item = ObjectProfile>) -> ProfileSet {
    profiles.into_iter().map(|p| (p.id.clone(), p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub join_action: String,
    pub tool: String,
    pub action_part_roles: Vec<String>,
    #[serde(default = "default_handle")]
    pub grasp_part_role: String,
    pub allowed_materials: BTreeSet<Material>,
}

fn default_handle() -> String {
    HANDLE_ROLE.to_string()
}

impl ToolSpec {
    /// A two-part tool: one action part plus a handle.
    pub fn two_part(tool: &str, allowed: &[Material]) -> Self {
        ToolSpec {
            join_action: format!("join-{tool}"),
            tool: tool.to_string(),
            action_part_roles: vec![format!("{tool}_head")],
            grasp_part_role: HANDLE_ROLE.to_string(),
            allowed_materials: allowed.iter().copied().collect(),
        }
    }

    pub fn parts(&self) -> usize {
        self.action_part_roles.len() + 1
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.allowed_materials.is_empty() {
            return Err(FeatureError::InvalidToolSpec {
                action: self.join_action.clone(),
                reason: "allowed_materials is empty".into(),
            });
        }
        if self.action_part_roles.is_empty() {
            return Err(FeatureError::InvalidToolSpec {
                action: self.join_action.clone(),
                reason: "no action-part role".into(),
            });
        }
        Ok(())
    }
}

/// Tool specifications keyed by join action name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolRegistry {
    specs: BTreeMap<String, ToolSpec>,
}

impl ToolRegistry {
    pub fn new(specs: impl IntoIterator<Item = ToolSpec>) -> Result<Self, FeatureError> {
        let mut map = BTreeMap::new();
        for s in specs {
            s.validate()?;
            if map.insert(s.join_action.clone(), s.clone()).is_some() {
                return Err(FeatureError::InvalidToolSpec { action: s.join_action, reason: "declared twice".into() });
            }
        }
        Ok(ToolRegistry { specs: map })
    }

    /// Appropriate action-part materials per tool.
    pub fn standard() -> Self {
        use Material::*;
        ToolRegistry::new([
            ToolSpec::two_part("hammer", &[Metal, Wood]),
            ToolSpec::two_part("screwdriver", &[Plastic, Metal]),
            ToolSpec::two_part("ladle", &[Plastic, Wood, Metal]),
            ToolSpec::two_part("spatula", &[Plastic, Wood, Metal]),
            ToolSpec::two_part("rake", &[Plastic, Wood, Metal]),
            ToolSpec::two_part("squeegee", &[Foam]),
        ])
        .expect("standard tool specs are valid")
    }

    pub fn get(&self, join_action: &str) -> Option<&ToolSpec> {
        self.specs.get(join_action)
    }

    pub fn by_tool(&self, tool: &str) -> Option<&ToolSpec> {
        self.specs.values().find(|s| s.tool == tool)
    }

    pub fn specs(&self) -> impl Iterator<Item = &ToolSpec> {
        self.specs.values()
    }

    /// Checks every tool action of a grounded problem has a spec whose part
    /// count matches the action's object combination.
    pub fn check_alignment(&self, gp: &GroundProblem) -> Result<(), FeatureError> {
        for a in gp.actions.iter().filter(|a| a.is_tool_action()) {
            let spec = self.get(&a.schema).ok_or_else(|| FeatureError::MissingToolSpec(a.schema.clone()))?;
            if spec.parts() != a.o_a.len() {
                return Err(FeatureError::InvalidToolSpec {
                    action: a.schema.clone(),
                    reason: format!("spec has {} parts but the action binds {} objects", spec.parts(), a.o_a.len()),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreParams {
    pub lambda_shape: f64,
    pub lambda_material: f64,
    /// Material confidence threshold.
    pub threshold: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams { lambda_shape: 1.0, lambda_material: 1.0, threshold: 0.6 }
    }
}

impl ScoreParams {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.lambda_shape < 0.0 || self.lambda_material < 0.0 {
            return Err(FeatureError::InvalidParams("weights must be non-negative".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(FeatureError::InvalidParams(format!("threshold {} not in (0,1)", self.threshold)));
        }
        Ok(())
    }
}

/// An ordered object combination for one tool action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Combination {
    pub action: String,
    pub objects: Vec<String>,
}

impl Combination {
    pub fn new(action: impl Into<String>, objects: &[impl AsRef<str>]) -> Self {
        Combination { action: action.into(), objects: objects.iter().map(|o| o.as_ref().to_string()).collect() }
    }

    pub fn of(action: &GroundAction) -> Option<Self> {
        action.is_tool_action().then(|| Combination { action: action.schema.clone(), objects: action.o_a.clone() })
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.action, self.objects.join(","))
    }
}

/// Combinations rejected by material or attachment predictions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectSet {
    entries: BTreeSet<Combination>,
}

impl RejectSet {
    pub fn insert(&mut self, c: Combination) -> bool {
        self.entries.insert(c)
    }

    pub fn contains(&self, c: &Combination) -> bool {
        self.entries.contains(c)
    }

    pub fn extend(&mut self, other: &RejectSet) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Combination> {
        self.entries.iter()
    }
}

impl FromIterator<Combination> for RejectSet {
    fn from_iter<T: IntoIterator<Item = Combination>>(iter: T) -> Self {
        RejectSet { entries: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttachmentKind {
    Pierce,
    Grasp,
    Magnetic,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("tool action '{0}' has no registered tool spec")]
    MissingToolSpec(String),
    #[error("invalid tool spec for '{action}': {reason}")]
    InvalidToolSpec { action: String, reason: String },
    #[error("invalid profile for '{object}': {reason}")]
    InvalidProfile { object: String, reason: String },
    #[error("invalid score parameters: {0}")]
    InvalidParams(String),
}

fn lookup<'a>(profiles: &'a ProfileSet, id: &str) -> Option<&'a ObjectProfile> {
    let p = profiles.get(id);
    if p.is_none() {
        log::warn!("no profile for object '{id}'; treating its confidences as 0");
    }
    p
}

fn split<'a, S: AsRef<str>>(o_a: &'a [S], spec: &ToolSpec) -> (&'a [S], &'a [S]) {
    let k = spec.action_part_roles.len().min(o_a.len());
    o_a.split_at(k)
}

/// Product of action-part confidences (per role, in order) and handle
/// confidences of the remaining objects.
pub fn shape_fit<S: AsRef<str>>(o_a: &[S], spec: &ToolSpec, profiles: &ProfileSet) -> f64 {
    let (action_parts, grasp_parts) = split(o_a, spec);
    let mut score = 1.0;
    for (o, role) in action_parts.iter().zip(&spec.action_part_roles) {
        score *= lookup(profiles, o.as_ref()).map_or(0.0, |p| p.shape(role));
    }
    for o in grasp_parts {
        score *= lookup(profiles, o.as_ref()).map_or(0.0, |p| p.shape(&spec.grasp_part_role));
    }
    score
}

/// Product over action parts of the best allowed-material confidence;
/// `-inf` when that product is below the threshold.
pub fn material_fit<S: AsRef<str>>(o_a: &[S], spec: &ToolSpec, profiles: &ProfileSet, params: &ScoreParams) -> f64 {
    let (action_parts, _) = split(o_a, spec);
    let mut z = 1.0;
    for o in action_parts {
        let best = lookup(profiles, o.as_ref()).map_or(0.0, |p| {
            spec.allowed_materials.iter().map(|&m| p.material_p(m)).fold(0.0, f64::max)
        });
        z *= best;
    }
    if z >= params.threshold {
        z
    } else {
        f64::NEG_INFINITY
    }
}

fn attach_pair(part: &ObjectProfile, grasp: &ObjectProfile) -> Option<AttachmentKind> {
    if part.pierceable != grasp.pierceable {
        Some(AttachmentKind::Pierce)
    } else if grasp.can_grasp_others && part.can_be_grasped {
        Some(AttachmentKind::Grasp)
    } else if part.has_magnet && grasp.has_magnet {
        Some(AttachmentKind::Magnetic)
    } else {
        None
    }
}

/// Whether every action part can be attached to the grasp part. Returns the
/// attachment kind of the first action part, checked pierce, grasp, magnetic.
pub fn can_attach<S: AsRef<str>>(o_a: &[S], spec: &ToolSpec, profiles: &ProfileSet) -> Option<AttachmentKind> {
    let (action_parts, grasp_parts) = split(o_a, spec);
    let grasp = lookup(profiles, grasp_parts.first()?.as_ref())?;
    let mut first = None;
    for o in action_parts {
        let kind = attach_pair(lookup(profiles, o.as_ref())?, grasp)?;
        first.get_or_insert(kind);
    }
    first
}

/// Feature score of a transition. Non-tool actions score 0.
pub fn feature_score(
    action: &GroundAction,
    trust: bool,
    reject: &RejectSet,
    registry: &ToolRegistry,
    profiles: &ProfileSet,
    params: &ScoreParams,
) -> Result<f64, FeatureError> {
    let Some(combo) = Combination::of(action) else {
        return Ok(0.0);
    };
    let spec = registry.get(&action.schema).ok_or_else(|| FeatureError::MissingToolSpec(action.schema.clone()))?;
    let o_a = &action.o_a;
    if trust {
        if can_attach(o_a, spec, profiles).is_none() {
            return Ok(f64::NEG_INFINITY);
        }
        let shape = shape_fit(o_a, spec, profiles);
        let material = material_fit(o_a, spec, profiles, params);
        if material == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(params.lambda_shape * shape + params.lambda_material * material)
    } else if reject.contains(&combo) {
        Ok(shape_fit(o_a, spec, profiles))
    } else {
        Ok(f64::NEG_INFINITY)
    }
}

/// Scorer over a fixed set of sensed profiles. In no-trust mode the
/// whitelist is the reject set accumulated while trusting the sensors.
#[derive(Debug, Clone)]
pub struct FeatureScorer {
    registry: ToolRegistry,
    profiles: ProfileSet,
    params: ScoreParams,
    whitelist: RejectSet,
}

impl FeatureScorer {
    pub fn new(
        gp: &GroundProblem,
        registry: ToolRegistry,
        profiles: ProfileSet,
        params: ScoreParams,
    ) -> Result<Self, FeatureError> {
        registry.check_alignment(gp)?;
        params.validate()?;
        for p in profiles.values() {
            p.validate()?;
        }
        Ok(FeatureScorer { registry, profiles, params, whitelist: RejectSet::default() })
    }

    pub fn with_whitelist(mut self, whitelist: RejectSet) -> Self {
        self.whitelist = whitelist;
        self
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    pub fn profiles(&self) -> &ProfileSet {
        &self.profiles
    }

    pub fn params(&self) -> &ScoreParams {
        &self.params
    }
}

impl Scorer for FeatureScorer {
    fn score(&self, _state: &State, action: &GroundAction, trust: bool) -> f64 {
        // alignment was checked at construction
        feature_score(action, trust, &self.whitelist, &self.registry, &self.profiles, &self.params)
            .unwrap_or(f64::NEG_INFINITY)
    }
}
