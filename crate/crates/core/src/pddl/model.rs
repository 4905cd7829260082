use std::fmt;

/// A name with its declared type. Untyped names carry `object`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName { name: name.into(), ty: ty.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

/// A predicate applied to terms; variables start with `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<String>,
}

impl AtomTemplate {
    pub fn new(predicate: impl Into<String>, args: Vec<String>) -> Self {
        AtomTemplate { predicate: predicate.into(), args }
    }
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: AtomTemplate,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add_effects: Vec<AtomTemplate>,
    pub del_effects: Vec<AtomTemplate>,
    /// Parameter positions that form the ordered object combination, in
    /// declaration order (action part first, then grasp part).
    pub object_param_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<String>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl DomainDef {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == "object" || self.types.iter().any(|t| t == ty)
    }

    /// Marks additional schemas as tool actions: their `tool-part` parameters
    /// become the object combination. Unknown names are ignored.
    pub fn designate_tool_actions<S: AsRef<str>>(&mut self, names: &[S]) {
        for schema in &mut self.actions {
            if names.iter().any(|n| n.as_ref() == schema.name) && schema.object_param_indices.is_empty() {
                schema.object_param_indices = tool_part_indices(&schema.params);
            }
        }
    }
}

pub(crate) fn tool_part_indices(params: &[TypedName]) -> Vec<usize> {
    params
        .iter()
        .enumerate()
        .filter(|(_, p)| p.ty == super::TOOL_PART_TYPE)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<AtomTemplate>,
    pub goal: Vec<Literal>,
}

fn write_typed(f: &mut fmt::Formatter<'_>, names: &[TypedName]) -> fmt::Result {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{} - {}", n.name, n.ty)?;
    }
    Ok(())
}

fn write_conjunction<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    write!(f, "(and")?;
    for it in items {
        write!(f, " {it}")?;
    }
    write!(f, ")")
}

impl fmt::Display for DomainDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            writeln!(f, "  (:types {})", self.types.join(" "))?;
        }
        if !self.constants.is_empty() {
            write!(f, "  (:constants ")?;
            write_typed(f, &self.constants)?;
            writeln!(f, ")")?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, "    ({}", p.name)?;
            if !p.params.is_empty() {
                write!(f, " ")?;
                write_typed(f, &p.params)?;
            }
            writeln!(f, ")")?;
        }
        writeln!(f, "  )")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            write!(f, "    :parameters (")?;
            write_typed(f, &a.params)?;
            writeln!(f, ")")?;
            write!(f, "    :precondition ")?;
            write_conjunction(f, &a.precondition)?;
            writeln!(f)?;
            write!(f, "    :effect (and")?;
            for e in &a.add_effects {
                write!(f, " {e}")?;
            }
            for e in &a.del_effects {
                write!(f, " (not {e})")?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        write!(f, "  (:objects ")?;
        write_typed(f, &self.objects)?;
        writeln!(f, ")")?;
        write!(f, "  (:init")?;
        for a in &self.init {
            write!(f, " {a}")?;
        }
        writeln!(f, ")")?;
        write!(f, "  (:goal ")?;
        write_conjunction(f, &self.goal)?;
        writeln!(f, ")")?;
        writeln!(f, ")")
    }
}
