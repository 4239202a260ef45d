use std::collections::{HashMap, HashSet};

use num_rational::Rational64;

use super::*;
use crate::sexpr::{self, Sexpr};

type Result<T> = std::result::Result<T, PddlError>;

fn err<T>(span: Span, kind: PddlErrorKind) -> Result<T> {
    Err(PddlError::new(span, kind))
}

fn syntax<T>(span: Span, msg: impl Into<String>) -> Result<T> {
    err(span, PddlErrorKind::Syntax(msg.into()))
}

fn expect_atom(e: &Sexpr, what: &str) -> Result<String> {
    match e {
        Sexpr::Atom(a, _) => Ok(a.clone()),
        Sexpr::List(_, span) => syntax(*span, format!("expected {what}, found a list")),
    }
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr]> {
    match e {
        Sexpr::List(items, _) => Ok(items),
        Sexpr::Atom(a, span) => syntax(*span, format!("expected {what}, found `{a}`")),
    }
}

/// Splits `(define (<kind> name) sections...)` into the name and the sections.
fn split_define<'a>(top: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr])> {
    let items = expect_list(top, "`(define ...)`")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return syntax(top.span(), "expected `(define ...)`");
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::new(top.span(), PddlErrorKind::Syntax(format!("missing `({kind} <name>)`"))))?;
    let h = expect_list(header, "header")?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return syntax(header.span(), format!("expected `({kind} <name>)`"));
    }
    Ok((expect_atom(&h[1], "name")?, &items[2..]))
}

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    span: Span,
    ty: String,
    ty_span: Span,
}

/// Parses `a b - t c - u d` style lists. Untyped trailing names get `object`.
fn typed_list(items: &[Sexpr], variables: bool) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Span)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        let tok = expect_atom(item, "name")?;
        if tok == "-" {
            let ty_item = items
                .get(i + 1)
                .ok_or_else(|| PddlError::new(item.span(), PddlErrorKind::Syntax("missing type after `-`".into())))?;
            if ty_item.head() == Some("either") {
                return err(ty_item.span(), PddlErrorKind::Unsupported("`either` types".into()));
            }
            let ty = expect_atom(ty_item, "type name")?;
            if ty.starts_with(['?', ':']) || ty == "-" {
                return syntax(ty_item.span(), format!("expected type name, found `{ty}`"));
            }
            if pending.is_empty() {
                return syntax(item.span(), "type annotation without names");
            }
            for (name, span) in pending.drain(..) {
                out.push(Entry { name, span, ty: ty.clone(), ty_span: ty_item.span() });
            }
            i += 2;
            continue;
        }
        let name = if variables {
            match tok.strip_prefix('?') {
                Some(v) if !v.is_empty() => v.to_string(),
                _ => return syntax(item.span(), format!("expected variable, found `{tok}`")),
            }
        } else {
            if tok.starts_with('?') || tok.starts_with(':') {
                return syntax(item.span(), format!("expected name, found `{tok}`"));
            }
            tok
        };
        pending.push((name, item.span()));
        i += 1;
    }
    for (name, span) in pending {
        out.push(Entry { name, span, ty: OBJECT_TYPE.to_string(), ty_span: span });
    }
    Ok(out)
}

fn parse_number(tok: &str, span: Span) -> Result<Rational64> {
    let bad = || PddlError::new(span, PddlErrorKind::BadNumber(tok.to_string()));
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: String = int_part.chars().chain(frac_part.chars()).collect();
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let denom = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
    let v = Rational64::new(numer, denom);
    Ok(if neg { -v } else { v })
}

fn looks_numeric(tok: &str) -> bool {
    let body = tok.strip_prefix('-').unwrap_or(tok);
    body.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

/// Names that atoms may refer to, with their types.
struct Scope<'a> {
    domain: &'a LiftedDomain,
    vars: HashMap<&'a str, &'a str>,
    objects: HashMap<&'a str, &'a str>,
}

impl<'a> Scope<'a> {
    fn term(&self, e: &Sexpr) -> Result<(Term, String)> {
        let tok = expect_atom(e, "term")?;
        if let Some(v) = tok.strip_prefix('?') {
            match self.vars.get(v) {
                Some(ty) => Ok((Term::Var(v.to_string()), ty.to_string())),
                None => err(e.span(), PddlErrorKind::UnknownVariable(v.to_string())),
            }
        } else {
            match self.objects.get(tok.as_str()) {
                Some(ty) => Ok((Term::Object(tok), ty.to_string())),
                None => err(e.span(), PddlErrorKind::UnknownObject(tok)),
            }
        }
    }

    fn args(&self, decl: &SymbolDecl, items: &[Sexpr], span: Span) -> Result<Vec<Term>> {
        if items.len() != decl.arity() {
            return err(
                span,
                PddlErrorKind::ArityMismatch { symbol: decl.name.clone(), expected: decl.arity(), found: items.len() },
            );
        }
        let mut out = Vec::with_capacity(items.len());
        for (item, param) in items.iter().zip(&decl.params) {
            let (term, ty) = self.term(item)?;
            let compatible = match term {
                // Variables may be declared more generally or more specifically than the slot.
                Term::Var(_) => self.domain.is_subtype(&ty, &param.ty) || self.domain.is_subtype(&param.ty, &ty),
                Term::Object(_) => self.domain.is_subtype(&ty, &param.ty),
            };
            if !compatible {
                let shown = match &term {
                    Term::Var(v) => format!("?{v}"),
                    Term::Object(o) => o.clone(),
                };
                return err(
                    item.span(),
                    PddlErrorKind::TypeMismatch { object: shown, expected: param.ty.clone(), found: ty },
                );
            }
            out.push(term);
        }
        Ok(out)
    }

    fn predicate_atom(&self, e: &Sexpr) -> Result<Atom> {
        let items = expect_list(e, "atom")?;
        let Some(head) = items.first() else {
            return syntax(e.span(), "empty atom");
        };
        let symbol = expect_atom(head, "predicate name")?;
        let decl = self
            .domain
            .predicate(&symbol)
            .ok_or_else(|| PddlError::new(head.span(), PddlErrorKind::UnknownPredicate(symbol.clone())))?;
        let args = self.args(decl, &items[1..], e.span())?;
        Ok(Atom { symbol, args })
    }

    fn fluent_atom(&self, e: &Sexpr) -> Result<Atom> {
        let items = expect_list(e, "fluent")?;
        let Some(head) = items.first() else {
            return syntax(e.span(), "empty fluent");
        };
        let symbol = expect_atom(head, "function name")?;
        let decl = self
            .domain
            .function(&symbol)
            .ok_or_else(|| PddlError::new(head.span(), PddlErrorKind::UnknownFunction(symbol.clone())))?;
        let args = self.args(decl, &items[1..], e.span())?;
        Ok(Atom { symbol, args })
    }

    fn expr(&self, e: &Sexpr) -> Result<ArithExpr> {
        match e {
            Sexpr::Atom(tok, span) => {
                if looks_numeric(tok) {
                    Ok(ArithExpr::Const(parse_number(tok, *span)?))
                } else {
                    syntax(*span, format!("expected number or fluent, found `{tok}`"))
                }
            }
            Sexpr::List(items, span) => {
                let op = match items.first().and_then(Sexpr::as_atom) {
                    Some("+") => Some(BinOp::Add),
                    Some("-") => Some(BinOp::Sub),
                    Some("*") => Some(BinOp::Mul),
                    Some("/") => Some(BinOp::Div),
                    _ => None,
                };
                let Some(op) = op else {
                    return Ok(ArithExpr::Fluent(self.fluent_atom(e)?));
                };
                let operands = &items[1..];
                match (op, operands.len()) {
                    (BinOp::Sub, 1) => Ok(ArithExpr::Neg(Box::new(self.expr(&operands[0])?))),
                    (BinOp::Add | BinOp::Mul, n) if n >= 2 => {
                        let mut acc = self.expr(&operands[0])?;
                        for o in &operands[1..] {
                            acc = ArithExpr::Binary(op, Box::new(acc), Box::new(self.expr(o)?));
                        }
                        Ok(acc)
                    }
                    (_, 2) => Ok(ArithExpr::Binary(
                        op,
                        Box::new(self.expr(&operands[0])?),
                        Box::new(self.expr(&operands[1])?),
                    )),
                    _ => syntax(*span, format!("wrong operand count for `{}`", op.symbol())),
                }
            }
        }
    }

    fn conditions(&self, e: &Sexpr, out: &mut Vec<LiftedCondition>) -> Result<()> {
        let items = expect_list(e, "condition")?;
        let Some(head) = items.first() else {
            // `()` is the empty conjunction.
            return Ok(());
        };
        let head_tok = head.as_atom().unwrap_or("");
        match head_tok {
            "and" => {
                for c in &items[1..] {
                    self.conditions(c, out)?;
                }
                Ok(())
            }
            "not" => {
                if items.len() != 2 {
                    return syntax(e.span(), "`not` takes one argument");
                }
                let inner = &items[1];
                if matches!(inner.head(), Some(">=" | ">" | "<=" | "<" | "=")) {
                    return err(inner.span(), PddlErrorKind::Unsupported("negated numeric condition".into()));
                }
                let atom = self.predicate_atom(inner)?;
                out.push(LiftedCondition::Literal { atom, positive: false });
                Ok(())
            }
            ">=" | ">" | "<=" | "<" | "=" => {
                if items.len() != 3 {
                    return syntax(e.span(), format!("`{head_tok}` takes two arguments"));
                }
                let is_term = |s: &Sexpr| matches!(s, Sexpr::Atom(a, _) if !looks_numeric(a));
                if head_tok == "=" && is_term(&items[1]) && is_term(&items[2]) {
                    return err(e.span(), PddlErrorKind::Unsupported("equality between objects".into()));
                }
                let a = self.expr(&items[1])?;
                let b = self.expr(&items[2])?;
                let (cmp, lhs, rhs) = match head_tok {
                    ">=" => (Comparator::Ge, a, b),
                    ">" => (Comparator::Gt, a, b),
                    "<=" => (Comparator::Ge, b, a),
                    "<" => (Comparator::Gt, b, a),
                    _ => (Comparator::Eq, a, b),
                };
                out.push(LiftedCondition::Numeric { cmp, lhs, rhs });
                Ok(())
            }
            "or" | "imply" | "forall" | "exists" | "when" | "preference" => {
                err(head.span(), PddlErrorKind::Unsupported(format!("`{head_tok}` conditions")))
            }
            _ => {
                let atom = self.predicate_atom(e)?;
                out.push(LiftedCondition::Literal { atom, positive: true });
                Ok(())
            }
        }
    }

    /// Collects effects; `total-cost` increases are routed into `cost`.
    fn effects(&self, e: &Sexpr, out: &mut Vec<LiftedEffect>, cost: &mut Option<(ArithExpr, Span)>) -> Result<()> {
        let items = expect_list(e, "effect")?;
        let Some(head) = items.first() else {
            return Ok(());
        };
        let head_tok = head.as_atom().unwrap_or("");
        match head_tok {
            "and" => {
                for c in &items[1..] {
                    self.effects(c, out, cost)?;
                }
                Ok(())
            }
            "not" => {
                if items.len() != 2 {
                    return syntax(e.span(), "`not` takes one argument");
                }
                out.push(LiftedEffect::Delete(self.predicate_atom(&items[1])?));
                Ok(())
            }
            "assign" | "increase" | "decrease" => {
                if items.len() != 3 {
                    return syntax(e.span(), format!("`{head_tok}` takes two arguments"));
                }
                let op = match head_tok {
                    "assign" => NumericOp::Assign,
                    "increase" => NumericOp::Increase,
                    _ => NumericOp::Decrease,
                };
                let fluent = self.fluent_atom(&items[1])?;
                let expr = self.expr(&items[2])?;
                if fluent.symbol == TOTAL_COST && fluent.args.is_empty() {
                    if op != NumericOp::Increase {
                        return err(e.span(), PddlErrorKind::Unsupported("total-cost may only be increased".into()));
                    }
                    if cost.is_some() {
                        return err(e.span(), PddlErrorKind::ConflictingEffects(TOTAL_COST.into()));
                    }
                    *cost = Some((expr, e.span()));
                    return Ok(());
                }
                let clash =
                    out.iter().any(|other| matches!(other, LiftedEffect::Numeric { fluent: f, .. } if *f == fluent));
                if clash {
                    return err(e.span(), PddlErrorKind::ConflictingEffects(fluent.symbol.clone()));
                }
                out.push(LiftedEffect::Numeric { op, fluent, expr });
                Ok(())
            }
            "scale-up" | "scale-down" | "when" | "forall" => {
                err(head.span(), PddlErrorKind::Unsupported(format!("`{head_tok}` effects")))
            }
            _ => {
                out.push(LiftedEffect::Add(self.predicate_atom(e)?));
                Ok(())
            }
        }
    }
}

fn symbol_decls(
    items: &[Sexpr],
    domain: &LiftedDomain,
    what: &'static str,
    allow_number_suffix: bool,
) -> Result<Vec<SymbolDecl>> {
    let mut out: Vec<SymbolDecl> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if allow_number_suffix && item.as_atom() == Some("-") {
            // `(f ?x) - number`
            match items.get(i + 1).and_then(Sexpr::as_atom) {
                Some("number") => {
                    i += 2;
                    continue;
                }
                _ => return syntax(item.span(), "only `- number` function types are supported"),
            }
        }
        let decl = expect_list(item, what)?;
        let Some(head) = decl.first() else {
            return syntax(item.span(), format!("empty {what} declaration"));
        };
        let name = expect_atom(head, what)?;
        let params = typed_list(&decl[1..], true)?;
        let mut seen = HashSet::new();
        for p in &params {
            if !domain.has_type(&p.ty) {
                return err(p.ty_span, PddlErrorKind::UnknownType(p.ty.clone()));
            }
            if !seen.insert(p.name.as_str()) {
                return err(p.span, PddlErrorKind::Duplicate { what: "parameter", name: p.name.clone() });
            }
        }
        if out.iter().any(|d| d.name == name) {
            return err(head.span(), PddlErrorKind::Duplicate { what, name });
        }
        out.push(SymbolDecl {
            name,
            params: params.into_iter().map(|p| TypedName { name: p.name, ty: p.ty }).collect(),
        });
        i += 1;
    }
    Ok(out)
}

fn check_types(entries: &[Entry]) -> Result<Vec<(String, String)>> {
    let mut types: Vec<(String, String)> = Vec::new();
    for e in entries {
        if e.name == OBJECT_TYPE {
            continue;
        }
        if types.iter().any(|(t, _)| *t == e.name) {
            return err(e.span, PddlErrorKind::Duplicate { what: "type", name: e.name.clone() });
        }
        types.push((e.name.clone(), e.ty.clone()));
    }
    // Parents that are never declared themselves hang off `object`.
    let mut implicit = Vec::new();
    for (_, parent) in &types {
        if parent != OBJECT_TYPE
            && !types.iter().any(|(t, _)| t == parent)
            && !implicit.iter().any(|(t, _): &(String, String)| t == parent)
        {
            implicit.push((parent.clone(), OBJECT_TYPE.to_string()));
        }
    }
    types.extend(implicit);
    for e in entries {
        let mut cur = e.name.as_str();
        for _ in 0..=types.len() {
            match types.iter().find(|(t, _)| t == cur) {
                Some((_, p)) => cur = p,
                None => break,
            }
        }
        if cur != OBJECT_TYPE && types.iter().any(|(t, _)| t == cur) {
            return err(e.span, PddlErrorKind::CyclicType(e.name.clone()));
        }
    }
    Ok(types)
}

pub fn parse_domain(text: &str) -> Result<LiftedDomain> {
    let top = sexpr::parse(text)?;
    let (name, sections) = split_define(&top, "domain")?;
    let mut domain = LiftedDomain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        functions: Vec::new(),
        schemata: Vec::new(),
    };

    let mut by_kind: HashMap<&str, &Sexpr> = HashMap::new();
    let mut actions = Vec::new();
    for s in sections {
        let key = match s.head() {
            Some(k) => k,
            None => return syntax(s.span(), "expected a `(:section ...)`"),
        };
        match key {
            ":action" => actions.push(s),
            ":requirements" | ":types" | ":constants" | ":predicates" | ":functions" => {
                if by_kind.insert(key, s).is_some() {
                    return err(s.span(), PddlErrorKind::Duplicate { what: "section", name: key.into() });
                }
            }
            other => return err(s.span(), PddlErrorKind::Unsupported(format!("domain section `{other}`"))),
        }
    }

    if let Some(s) = by_kind.get(":requirements") {
        for r in &s.as_list().unwrap_or_default()[1..] {
            let r = expect_atom(r, "requirement")?;
            if !KNOWN_REQUIREMENTS.contains(&r.as_str()) {
                log::warn!("ignoring unknown requirement `{r}`");
            }
            domain.requirements.push(r);
        }
    }
    if let Some(s) = by_kind.get(":types") {
        let entries = typed_list(&s.as_list().unwrap_or_default()[1..], false)?;
        domain.types = check_types(&entries)?;
    }
    if let Some(s) = by_kind.get(":constants") {
        for e in typed_list(&s.as_list().unwrap_or_default()[1..], false)? {
            if !domain.has_type(&e.ty) {
                return err(e.ty_span, PddlErrorKind::UnknownType(e.ty));
            }
            if domain.constants.iter().any(|c| c.name == e.name) {
                return err(e.span, PddlErrorKind::Duplicate { what: "constant", name: e.name });
            }
            domain.constants.push(TypedName { name: e.name, ty: e.ty });
        }
    }
    if let Some(s) = by_kind.get(":predicates") {
        domain.predicates = symbol_decls(&s.as_list().unwrap_or_default()[1..], &domain, "predicate", false)?;
    }
    if let Some(s) = by_kind.get(":functions") {
        domain.functions = symbol_decls(&s.as_list().unwrap_or_default()[1..], &domain, "function", true)?;
    }

    let mut schemata = Vec::new();
    for a in actions {
        let schema = parse_action(a, &domain)?;
        if schemata.iter().any(|s: &ActionSchema| s.name == schema.name) {
            return err(a.span(), PddlErrorKind::Duplicate { what: "action", name: schema.name });
        }
        schemata.push(schema);
    }
    domain.schemata = schemata;
    Ok(domain)
}

fn parse_action(a: &Sexpr, domain: &LiftedDomain) -> Result<ActionSchema> {
    let items = a.as_list().unwrap_or_default();
    let name = match items.get(1) {
        Some(n) => expect_atom(n, "action name")?,
        None => return syntax(a.span(), "missing action name"),
    };
    let mut params_expr = None;
    let mut pre_expr = None;
    let mut eff_expr = None;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?;
        let value = items.get(i + 1).ok_or_else(|| {
            PddlError::new(items[i].span(), PddlErrorKind::Syntax(format!("missing value for `{key}`")))
        })?;
        let slot = match key.as_str() {
            ":parameters" => &mut params_expr,
            ":precondition" => &mut pre_expr,
            ":effect" => &mut eff_expr,
            _ => return err(items[i].span(), PddlErrorKind::Unsupported(format!("action field `{key}`"))),
        };
        if slot.replace(value).is_some() {
            return err(items[i].span(), PddlErrorKind::Duplicate { what: "action field", name: key });
        }
        i += 2;
    }

    let mut params = Vec::new();
    if let Some(p) = params_expr {
        for e in typed_list(expect_list(p, "parameter list")?, true)? {
            if !domain.has_type(&e.ty) {
                return err(e.ty_span, PddlErrorKind::UnknownType(e.ty));
            }
            if params.iter().any(|q: &TypedName| q.name == e.name) {
                return err(e.span, PddlErrorKind::Duplicate { what: "parameter", name: e.name });
            }
            params.push(TypedName { name: e.name, ty: e.ty });
        }
    }

    let scope = Scope {
        domain,
        vars: params.iter().map(|p| (p.name.as_str(), p.ty.as_str())).collect(),
        objects: domain.constants.iter().map(|c| (c.name.as_str(), c.ty.as_str())).collect(),
    };
    let mut precondition = Vec::new();
    if let Some(p) = pre_expr {
        scope.conditions(p, &mut precondition)?;
    }
    let mut effects = Vec::new();
    let mut cost = None;
    if let Some(e) = eff_expr {
        scope.effects(e, &mut effects, &mut cost)?;
    }
    Ok(ActionSchema {
        name,
        params,
        precondition,
        effects,
        cost: cost.map(|(c, _)| c).unwrap_or_else(|| ArithExpr::constant(1)),
    })
}

fn ground_atom(atom: Atom) -> GroundAtom {
    GroundAtom {
        symbol: atom.symbol,
        args: atom
            .args
            .into_iter()
            .map(|t| match t {
                Term::Object(o) | Term::Var(o) => o,
            })
            .collect(),
    }
}

pub fn parse_problem(text: &str, domain: &LiftedDomain) -> Result<LiftedProblem> {
    let top = sexpr::parse(text)?;
    let (name, sections) = split_define(&top, "problem")?;
    let mut problem = LiftedProblem {
        name,
        domain_name: String::new(),
        objects: Vec::new(),
        init_atoms: Vec::new(),
        init_numeric: Vec::new(),
        goal: Vec::new(),
    };

    let mut by_kind: HashMap<&str, &Sexpr> = HashMap::new();
    for s in sections {
        let key = match s.head() {
            Some(k) => k,
            None => return syntax(s.span(), "expected a `(:section ...)`"),
        };
        match key {
            ":domain" | ":objects" | ":init" | ":goal" | ":metric" | ":requirements" => {
                if by_kind.insert(key, s).is_some() {
                    return err(s.span(), PddlErrorKind::Duplicate { what: "section", name: key.into() });
                }
            }
            other => return err(s.span(), PddlErrorKind::Unsupported(format!("problem section `{other}`"))),
        }
    }
    match by_kind.get(":domain") {
        Some(s) => {
            let items = s.as_list().unwrap_or_default();
            if items.len() != 2 {
                return syntax(s.span(), "expected `(:domain <name>)`");
            }
            problem.domain_name = expect_atom(&items[1], "domain name")?;
            if problem.domain_name != domain.name {
                log::warn!("problem refers to domain `{}` but `{}` was supplied", problem.domain_name, domain.name);
            }
        }
        None => return syntax(top.span(), "missing `(:domain ...)`"),
    }
    if by_kind.contains_key(":metric") {
        log::warn!("ignoring `:metric`; plans are ranked by action cost");
    }

    if let Some(s) = by_kind.get(":objects") {
        for e in typed_list(&s.as_list().unwrap_or_default()[1..], false)? {
            if !domain.has_type(&e.ty) {
                return err(e.ty_span, PddlErrorKind::UnknownType(e.ty));
            }
            let dup =
                problem.objects.iter().any(|o| o.name == e.name) || domain.constants.iter().any(|c| c.name == e.name);
            if dup {
                return err(e.span, PddlErrorKind::Duplicate { what: "object", name: e.name });
            }
            problem.objects.push(TypedName { name: e.name, ty: e.ty });
        }
    }

    let scope = Scope {
        domain,
        vars: HashMap::new(),
        objects: domain.constants.iter().chain(&problem.objects).map(|c| (c.name.as_str(), c.ty.as_str())).collect(),
    };

    let mut init_atoms = Vec::new();
    let mut init_numeric: Vec<(GroundAtom, Rational64)> = Vec::new();
    if let Some(s) = by_kind.get(":init") {
        for item in &s.as_list().unwrap_or_default()[1..] {
            match item.head() {
                Some("=") => {
                    let parts = item.as_list().unwrap_or_default();
                    if parts.len() != 3 {
                        return syntax(item.span(), "expected `(= (fluent ...) value)`");
                    }
                    let fluent = ground_atom(scope.fluent_atom(&parts[1])?);
                    let tok = expect_atom(&parts[2], "number")?;
                    let value = parse_number(&tok, parts[2].span())?;
                    if init_numeric.iter().any(|(f, _)| *f == fluent) {
                        return err(
                            item.span(),
                            PddlErrorKind::Duplicate { what: "initial value", name: fluent.to_string() },
                        );
                    }
                    init_numeric.push((fluent, value));
                }
                Some("not") => return err(item.span(), PddlErrorKind::Unsupported("negative initial literal".into())),
                _ => {
                    let atom = ground_atom(scope.predicate_atom(item)?);
                    if !init_atoms.contains(&atom) {
                        init_atoms.push(atom);
                    }
                }
            }
        }
    }

    let mut goal = Vec::new();
    if let Some(s) = by_kind.get(":goal") {
        let items = s.as_list().unwrap_or_default();
        match items.len() {
            1 => {}
            2 => scope.conditions(&items[1], &mut goal)?,
            _ => return syntax(s.span(), "expected `(:goal <condition>)`"),
        }
    }
    for g in &goal {
        if let LiftedCondition::Numeric { lhs, rhs, .. } = g {
            for f in lhs.fluents().into_iter().chain(rhs.fluents()) {
                let ground = ground_atom(f.clone());
                if !init_numeric.iter().any(|(x, _)| *x == ground) {
                    return err(s_span(&by_kind), PddlErrorKind::UndefinedGoalFluent(ground.to_string()));
                }
            }
        }
    }

    problem.init_atoms = init_atoms;
    problem.init_numeric = init_numeric;
    problem.goal = goal;
    Ok(problem)
}

fn s_span(by_kind: &HashMap<&str, &Sexpr>) -> Span {
    by_kind.get(":goal").map(|s| s.span()).unwrap_or_default()
}
