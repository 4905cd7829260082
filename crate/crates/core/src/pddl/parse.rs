use std::collections::{BTreeMap, HashMap, HashSet};

use super::model::{tool_part_indices, ActionSchema, AtomTemplate, DomainDef, Literal, PredicateDecl, ProblemDef, TypedName};
use super::sexpr::{self, Pos, SExpr};
use super::{PddlError, JOIN_PREFIX};

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":negative-preconditions"];

/// Connectives and sections that belong to richer PDDL fragments.
const UNSUPPORTED_FORMS: &[&str] = &[
    "or", "forall", "exists", "imply", "when", "=", "increase", "decrease", "assign", "scale-up",
    "scale-down", ">", "<", ">=", "<=",
];

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], PddlError> {
    e.as_list().ok_or_else(|| PddlError::syntax(e.pos(), format!("expected list for {what}")))
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom().ok_or_else(|| PddlError::syntax(e.pos(), format!("expected symbol for {what}")))
}

/// Parses `a b - t c` style lists. Names without a type get `object`.
fn parse_typed_list(items: &[SExpr]) -> Result<Vec<(TypedName, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = expect_atom(&items[i], "typed list entry")?;
        if sym == "-" {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(items[i].pos(), "missing type after '-'"))?;
            if ty_expr.head_keyword().as_deref() == Some("either") {
                return Err(PddlError::unsupported(ty_expr.pos(), "either types"));
            }
            let ty = expect_atom(ty_expr, "type name")?;
            if pending.is_empty() {
                return Err(PddlError::syntax(items[i].pos(), "type annotation without names"));
            }
            for (n, p) in pending.drain(..) {
                out.push((TypedName::new(n, ty), p));
            }
            i += 2;
        } else {
            pending.push((sym.to_string(), items[i].pos()));
            i += 1;
        }
    }
    for (n, p) in pending {
        out.push((TypedName::new(n, "object"), p));
    }
    Ok(out)
}

/// Ensures `(define ...)` shape and returns the sections after the header.
fn define_sections<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = expect_list(root, "define")?;
    if !items.first().is_some_and(|h| h.is_keyword("define")) {
        return Err(PddlError::syntax(root.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(root.pos(), format!("missing ({kind} <name>)")))?;
    let h = expect_list(header, kind)?;
    if h.len() != 2 || !h[0].is_keyword(kind) {
        return Err(PddlError::syntax(header.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((expect_atom(&h[1], "name")?.to_string(), &items[2..]))
}

fn parse_atom(e: &SExpr) -> Result<(AtomTemplate, Pos), PddlError> {
    let items = expect_list(e, "atom")?;
    let head = items.first().ok_or_else(|| PddlError::syntax(e.pos(), "empty atom"))?;
    let name = expect_atom(head, "predicate name")?;
    let lname = name.to_ascii_lowercase();
    if UNSUPPORTED_FORMS.contains(&lname.as_str()) {
        return Err(PddlError::unsupported(e.pos(), format!("'{lname}' expressions")));
    }
    if lname == "and" || lname == "not" {
        return Err(PddlError::syntax(e.pos(), format!("unexpected '{lname}' where an atom is required")));
    }
    let args = items[1..]
        .iter()
        .map(|a| expect_atom(a, "argument").map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((AtomTemplate::new(name, args), e.pos()))
}

fn parse_literal(e: &SExpr) -> Result<(Literal, Pos), PddlError> {
    if e.head_keyword().as_deref() == Some("not") {
        let items = expect_list(e, "negation")?;
        if items.len() != 2 {
            return Err(PddlError::syntax(e.pos(), "'not' takes exactly one argument"));
        }
        let (atom, pos) = parse_atom(&items[1])?;
        return Ok((Literal { positive: false, atom }, pos));
    }
    let (atom, pos) = parse_atom(e)?;
    Ok((Literal { positive: true, atom }, pos))
}

/// Flattens `(and ...)` (possibly nested) or a single literal; `()` is empty.
fn parse_conjunction(e: &SExpr) -> Result<Vec<(Literal, Pos)>, PddlError> {
    match e.head_keyword().as_deref() {
        None if e.as_list().is_some_and(<[SExpr]>::is_empty) => Ok(Vec::new()),
        Some("and") => {
            let mut out = Vec::new();
            for item in &expect_list(e, "conjunction")?[1..] {
                out.extend(parse_conjunction(item)?);
            }
            Ok(out)
        }
        _ => Ok(vec![parse_literal(e)?]),
    }
}

struct Scope<'a> {
    predicates: &'a [PredicateDecl],
    /// term name -> type, for variables and constants in scope.
    terms: HashMap<&'a str, &'a str>,
}

impl Scope<'_> {
    fn check_atom(&self, atom: &AtomTemplate, pos: Pos) -> Result<(), PddlError> {
        let decl = self
            .predicates
            .iter()
            .find(|p| p.name == atom.predicate)
            .ok_or_else(|| PddlError::UndeclaredPredicate {
                name: atom.predicate.clone(),
                line: pos.line,
                col: pos.col,
            })?;
        if decl.params.len() != atom.args.len() {
            return Err(PddlError::Arity {
                name: atom.predicate.clone(),
                expected: decl.params.len(),
                found: atom.args.len(),
                line: pos.line,
                col: pos.col,
            });
        }
        for (arg, param) in atom.args.iter().zip(&decl.params) {
            let ty = self.terms.get(arg.as_str()).ok_or_else(|| PddlError::UnknownTerm {
                name: arg.clone(),
                line: pos.line,
                col: pos.col,
            })?;
            if param.ty != "object" && *ty != param.ty {
                return Err(PddlError::TypeMismatch {
                    term: arg.clone(),
                    found: ty.to_string(),
                    expected: param.ty.clone(),
                    line: pos.line,
                    col: pos.col,
                });
            }
        }
        Ok(())
    }
}

fn check_declared_type(types: &[String], ty: &str, pos: Pos) -> Result<(), PddlError> {
    if ty == "object" || types.iter().any(|t| t == ty) {
        Ok(())
    } else {
        Err(PddlError::UndeclaredType { name: ty.to_string(), line: pos.line, col: pos.col })
    }
}

/// Parses a domain file in the supported STRIPS subset.
pub fn parse_domain(text: &str) -> Result<DomainDef, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_sections(&root, "domain")?;
    let mut domain = DomainDef {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut raw_actions = Vec::new();

    for section in sections {
        let items = expect_list(section, "domain section")?;
        let key = section
            .head_keyword()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected section keyword"))?;
        match key.as_str() {
            ":requirements" => {
                for r in &items[1..] {
                    let req = expect_atom(r, "requirement")?.to_ascii_lowercase();
                    if !SUPPORTED_REQUIREMENTS.contains(&req.as_str()) {
                        return Err(PddlError::unsupported(r.pos(), format!("requirement {req}")));
                    }
                    domain.requirements.push(req);
                }
            }
            ":types" => {
                for (t, pos) in parse_typed_list(&items[1..])? {
                    if t.ty != "object" {
                        return Err(PddlError::unsupported(pos, format!("type hierarchy ({} - {})", t.name, t.ty)));
                    }
                    if domain.types.contains(&t.name) {
                        return Err(PddlError::Duplicate { name: t.name });
                    }
                    domain.types.push(t.name);
                }
            }
            ":constants" => {
                for (c, pos) in parse_typed_list(&items[1..])? {
                    check_declared_type(&domain.types, &c.ty, pos)?;
                    domain.constants.push(c);
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let pi = expect_list(p, "predicate declaration")?;
                    let pname = pi
                        .first()
                        .ok_or_else(|| PddlError::syntax(p.pos(), "empty predicate declaration"))?;
                    let pname = expect_atom(pname, "predicate name")?.to_string();
                    let mut params = Vec::new();
                    for (tn, pos) in parse_typed_list(&pi[1..])? {
                        check_declared_type(&domain.types, &tn.ty, pos)?;
                        params.push(tn);
                    }
                    if domain.predicate(&pname).is_some() {
                        return Err(PddlError::Duplicate { name: pname });
                    }
                    domain.predicates.push(PredicateDecl { name: pname, params });
                }
            }
            ":action" => raw_actions.push(section),
            ":functions" => return Err(PddlError::unsupported(section.pos(), "numeric fluents (:functions)")),
            ":durative-action" => return Err(PddlError::unsupported(section.pos(), "durative actions")),
            ":derived" => return Err(PddlError::unsupported(section.pos(), "derived predicates")),
            ":axiom" => return Err(PddlError::unsupported(section.pos(), "axioms")),
            other => return Err(PddlError::syntax(section.pos(), format!("unknown domain section '{other}'"))),
        }
    }

    for section in raw_actions {
        let schema = parse_action(section, &domain)?;
        if domain.schema(&schema.name).is_some() {
            return Err(PddlError::Duplicate { name: schema.name });
        }
        domain.actions.push(schema);
    }
    Ok(domain)
}

fn parse_action(section: &SExpr, domain: &DomainDef) -> Result<ActionSchema, PddlError> {
    let items = expect_list(section, "action")?;
    let name = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(section.pos(), "action without name"))?;
    let name = expect_atom(name, "action name")?.to_string();

    let mut fields: BTreeMap<String, &SExpr> = BTreeMap::new();
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action field")?.to_ascii_lowercase();
        let value = items
            .get(i + 1)
            .ok_or_else(|| PddlError::syntax(items[i].pos(), format!("missing value for {key}")))?;
        match key.as_str() {
            ":parameters" | ":precondition" | ":effect" => {}
            other => return Err(PddlError::unsupported(items[i].pos(), format!("action field {other}"))),
        }
        fields.insert(key, value);
        i += 2;
    }

    let mut params = Vec::new();
    if let Some(p) = fields.get(":parameters") {
        for (tn, pos) in parse_typed_list(expect_list(p, "parameters")?)? {
            if !tn.name.starts_with('?') {
                return Err(PddlError::syntax(pos, format!("parameter '{}' must start with '?'", tn.name)));
            }
            check_declared_type(&domain.types, &tn.ty, pos)?;
            if params.iter().any(|q: &TypedName| q.name == tn.name) {
                return Err(PddlError::Duplicate { name: tn.name });
            }
            params.push(tn);
        }
    }

    let mut scope = Scope { predicates: &domain.predicates, terms: HashMap::new() };
    for c in &domain.constants {
        scope.terms.insert(&c.name, &c.ty);
    }
    for p in &params {
        scope.terms.insert(&p.name, &p.ty);
    }

    let mut precondition = Vec::new();
    if let Some(pre) = fields.get(":precondition") {
        for (lit, pos) in parse_conjunction(pre)? {
            scope.check_atom(&lit.atom, pos)?;
            precondition.push(lit);
        }
    }
    let mut add_effects = Vec::new();
    let mut del_effects = Vec::new();
    if let Some(eff) = fields.get(":effect") {
        for (lit, pos) in parse_conjunction(eff)? {
            scope.check_atom(&lit.atom, pos)?;
            if lit.positive {
                add_effects.push(lit.atom);
            } else {
                del_effects.push(lit.atom);
            }
        }
    }

    let object_param_indices = if name.starts_with(JOIN_PREFIX) { tool_part_indices(&params) } else { Vec::new() };
    Ok(ActionSchema { name, params, precondition, add_effects, del_effects, object_param_indices })
}

/// Parses a problem file against an already parsed domain.
pub fn parse_problem(text: &str, domain: &DomainDef) -> Result<ProblemDef, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_sections(&root, "problem")?;
    let mut problem =
        ProblemDef { name, domain_name: String::new(), objects: Vec::new(), init: Vec::new(), goal: Vec::new() };
    let mut init_raw = None;
    let mut goal_raw = None;

    for section in sections {
        let items = expect_list(section, "problem section")?;
        let key = section
            .head_keyword()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected section keyword"))?;
        match key.as_str() {
            ":domain" => {
                let d = items.get(1).ok_or_else(|| PddlError::syntax(section.pos(), "missing domain name"))?;
                problem.domain_name = expect_atom(d, "domain name")?.to_string();
            }
            ":requirements" => {
                for r in &items[1..] {
                    let req = expect_atom(r, "requirement")?.to_ascii_lowercase();
                    if !SUPPORTED_REQUIREMENTS.contains(&req.as_str()) {
                        return Err(PddlError::unsupported(r.pos(), format!("requirement {req}")));
                    }
                }
            }
            ":objects" => {
                let mut seen: HashSet<String> = domain.constants.iter().map(|c| c.name.clone()).collect();
                for (o, pos) in parse_typed_list(&items[1..])? {
                    check_declared_type(&domain.types, &o.ty, pos)?;
                    if !seen.insert(o.name.clone()) {
                        return Err(PddlError::Duplicate { name: o.name });
                    }
                    problem.objects.push(o);
                }
            }
            ":init" => init_raw = Some(&items[1..]),
            ":goal" => {
                if items.len() != 2 {
                    return Err(PddlError::syntax(section.pos(), ":goal takes exactly one formula"));
                }
                goal_raw = Some(&items[1]);
            }
            ":metric" => return Err(PddlError::unsupported(section.pos(), "plan metrics")),
            other => return Err(PddlError::syntax(section.pos(), format!("unknown problem section '{other}'"))),
        }
    }

    if problem.domain_name != domain.name {
        return Err(PddlError::DomainMismatch { expected: domain.name.clone(), found: problem.domain_name });
    }

    let mut scope = Scope { predicates: &domain.predicates, terms: HashMap::new() };
    for c in domain.constants.iter().chain(&problem.objects) {
        scope.terms.insert(&c.name, &c.ty);
    }
    let mut init = Vec::new();
    for e in init_raw.unwrap_or(&[]) {
        if e.head_keyword().as_deref() == Some("not") {
            return Err(PddlError::syntax(e.pos(), "negative literals are not allowed in :init"));
        }
        let (atom, pos) = parse_atom(e)?;
        scope.check_atom(&atom, pos)?;
        if !init.contains(&atom) {
            init.push(atom);
        }
    }
    let mut goal = Vec::new();
    if let Some(g) = goal_raw {
        for (lit, pos) in parse_conjunction(g)? {
            scope.check_atom(&lit.atom, pos)?;
            goal.push(lit);
        }
    }
    problem.init = init;
    problem.goal = goal;
    Ok(problem)
}
