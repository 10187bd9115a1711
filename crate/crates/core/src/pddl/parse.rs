//! Parser for the STRIPS subset: positive conjunctive preconditions,
//! add/delete effects, optional flat-or-hierarchical types compiled into
//! unary predicates. No constants, equality, negative preconditions,
//! conditional effects, or costs.

use std::collections::HashSet;

use thiserror::Error;

use super::model::{
    ActionSchema, Atom, DomainDef, InstanceDef, PredicateSchema, SchemaAtom, TypeDecl,
};
use super::sexpr::{self, Pos, Sexpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("undeclared predicate `{name}` at {pos}")]
    UndeclaredPredicate { name: String, pos: Pos },
    #[error("arity mismatch for atom `{atom}` at {pos}: predicate has arity {expected}, atom has {found} arguments")]
    ArityMismatch {
        atom: String,
        pos: Pos,
        expected: usize,
        found: usize,
    },
    #[error("duplicate {kind} `{name}` at {pos}")]
    Duplicate {
        kind: &'static str,
        name: String,
        pos: Pos,
    },
    #[error("unknown object `{name}` at {pos}")]
    UnknownObject { name: String, pos: Pos },
    #[error("variable `{name}` at {pos} is not a parameter of action `{action}`")]
    UnboundVariable {
        name: String,
        action: String,
        pos: Pos,
    },
    #[error("action `{action}` both adds and deletes `{atom}`")]
    ConflictingEffects { action: String, atom: String },
    #[error("unknown type `{name}` at {pos}")]
    UnknownType { name: String, pos: Pos },
    #[error("instance is for domain `{found}` but domain `{expected}` was given")]
    DomainMismatch { expected: String, found: String },
    #[error("unsupported construct `{what}` at {pos}")]
    Unsupported { what: String, pos: Pos },
}

impl From<sexpr::ReadError> for ParseError {
    fn from(e: sexpr::ReadError) -> Self {
        ParseError::Syntax {
            pos: e.pos,
            message: e.message,
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        message: message.into(),
    }
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_atom()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}, found a list")))
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], ParseError> {
    e.as_list()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}, found a symbol")))
}

/// Splits the header of `(define (domain X) ...)` or `(domain X ...)`.
fn header<'a>(top: &'a Sexpr, keyword: &str) -> Result<(String, &'a [Sexpr]), ParseError> {
    let items = expect_list(top, "a top-level list")?;
    let first = items
        .first()
        .ok_or_else(|| syntax(top.pos(), "empty top-level list"))?;
    match first.as_atom() {
        Some("define") => {
            let head = items
                .get(1)
                .and_then(|h| h.as_list())
                .ok_or_else(|| syntax(first.pos(), format!("expected ({keyword} <name>)")))?;
            if head.len() != 2 || head[0].as_atom() != Some(keyword) {
                return Err(syntax(
                    items[1].pos(),
                    format!("expected ({keyword} <name>)"),
                ));
            }
            Ok((expect_atom(&head[1], "a name")?.to_string(), &items[2..]))
        }
        Some(k) if k == keyword => {
            let name = items
                .get(1)
                .ok_or_else(|| syntax(first.pos(), "missing name"))?;
            Ok((expect_atom(name, "a name")?.to_string(), &items[2..]))
        }
        _ => Err(syntax(
            first.pos(),
            format!("expected `define` or `{keyword}`"),
        )),
    }
}

/// Parses `a b - t c d - u e` into (name, type) pairs.
fn typed_list(items: &[Sexpr]) -> Result<Vec<(String, Option<String>, Pos)>, ParseError> {
    let mut out: Vec<(String, Option<String>, Pos)> = Vec::new();
    let mut pending = 0usize;
    let mut i = 0;
    while i < items.len() {
        let tok = expect_atom(&items[i], "a name")?;
        if tok == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "missing type after '-'"))?;
            let ty = expect_atom(ty, "a type name")?;
            if pending == 0 {
                return Err(syntax(items[i].pos(), "type annotation without names"));
            }
            let n = out.len();
            for entry in &mut out[n - pending..] {
                entry.1 = Some(ty.to_string());
            }
            pending = 0;
            i += 2;
        } else {
            out.push((tok.to_string(), None, items[i].pos()));
            pending += 1;
            i += 1;
        }
    }
    Ok(out)
}

fn section(e: &Sexpr) -> Result<(&str, &[Sexpr]), ParseError> {
    let items = expect_list(e, "a section")?;
    let key = items
        .first()
        .ok_or_else(|| syntax(e.pos(), "empty section"))?;
    Ok((expect_atom(key, "a section keyword")?, &items[1..]))
}

/// Reads a conjunction of positive atoms: `(and a b)`, a single atom, or `()`.
fn conjunction(e: &Sexpr) -> Result<Vec<(String, Vec<String>, Pos)>, ParseError> {
    let items = expect_list(e, "a formula")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    match items[0].as_atom() {
        Some("and") => {
            let mut out = Vec::new();
            for sub in &items[1..] {
                out.extend(conjunction(sub)?);
            }
            Ok(out)
        }
        Some(k @ ("not" | "or" | "imply" | "forall" | "exists" | "when" | "=")) => {
            Err(ParseError::Unsupported {
                what: k.to_string(),
                pos: e.pos(),
            })
        }
        Some(pred) => {
            let args = items[1..]
                .iter()
                .map(|a| expect_atom(a, "an argument").map(str::to_string))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(vec![(pred.to_string(), args, e.pos())])
        }
        None => Err(syntax(items[0].pos(), "expected a predicate name")),
    }
}

/// Reads an effect: conjunction of atoms and `(not atom)`.
fn effect(
    e: &Sexpr,
    add: &mut Vec<(String, Vec<String>, Pos)>,
    del: &mut Vec<(String, Vec<String>, Pos)>,
) -> Result<(), ParseError> {
    let items = expect_list(e, "an effect")?;
    if items.is_empty() {
        return Ok(());
    }
    match items[0].as_atom() {
        Some("and") => {
            for sub in &items[1..] {
                effect(sub, add, del)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "`not` takes exactly one atom"));
            }
            let mut inner = conjunction(&items[1])?;
            if inner.len() != 1 {
                return Err(syntax(items[1].pos(), "`not` takes exactly one atom"));
            }
            del.push(inner.pop().unwrap());
            Ok(())
        }
        _ => {
            add.extend(conjunction(e)?);
            Ok(())
        }
    }
}

fn check_arity(
    domain_preds: &[PredicateSchema],
    name: &str,
    args: &[String],
    pos: Pos,
) -> Result<(), ParseError> {
    let p = domain_preds
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| ParseError::UndeclaredPredicate {
            name: name.to_string(),
            pos,
        })?;
    if p.arity != args.len() {
        return Err(ParseError::ArityMismatch {
            atom: format!("({} {})", name, args.join(" ")).replace(" )", ")"),
            pos,
            expected: p.arity,
            found: args.len(),
        });
    }
    Ok(())
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, item: T) {
    if !v.contains(&item) {
        v.push(item);
    }
}

pub fn parse_domain(text: &str) -> Result<DomainDef, ParseError> {
    let top = sexpr::read(text)?;
    let (name, sections) = header(&top, "domain")?;
    let mut types: Vec<TypeDecl> = Vec::new();
    let mut predicates: Vec<PredicateSchema> = Vec::new();
    let mut actions: Vec<ActionSchema> = Vec::new();

    for sec in sections {
        let (key, body) = section(sec)?;
        match key {
            ":requirements" => {}
            ":types" => {
                for (t, parent, pos) in typed_list(body)? {
                    if t == "object" {
                        continue;
                    }
                    if types.iter().any(|d| d.name == t) {
                        return Err(ParseError::Duplicate {
                            kind: "type",
                            name: t,
                            pos,
                        });
                    }
                    types.push(TypeDecl {
                        name: t,
                        parent: parent.filter(|p| p != "object"),
                    });
                }
                for t in &types {
                    if let Some(p) = &t.parent {
                        if !types.iter().any(|d| &d.name == p) {
                            return Err(ParseError::UnknownType {
                                name: p.clone(),
                                pos: sec.pos(),
                            });
                        }
                    }
                }
                // Type predicates always lead the predicate table.
                for (i, t) in types.iter().enumerate() {
                    if predicates.iter().any(|p| p.name == t.name) {
                        return Err(ParseError::Duplicate {
                            kind: "predicate",
                            name: t.name.clone(),
                            pos: sec.pos(),
                        });
                    }
                    predicates.insert(
                        i,
                        PredicateSchema {
                            name: t.name.clone(),
                            arity: 1,
                        },
                    );
                }
            }
            ":predicates" => {
                for p in body {
                    let items = expect_list(p, "a predicate declaration")?;
                    let pname = expect_atom(
                        items
                            .first()
                            .ok_or_else(|| syntax(p.pos(), "empty predicate declaration"))?,
                        "a predicate name",
                    )?;
                    // Argument types in predicate declarations carry no semantics here.
                    let arity = typed_list(&items[1..])?.len();
                    if predicates.iter().any(|q| q.name == pname) {
                        return Err(ParseError::Duplicate {
                            kind: "predicate",
                            name: pname.to_string(),
                            pos: p.pos(),
                        });
                    }
                    predicates.push(PredicateSchema {
                        name: pname.to_string(),
                        arity,
                    });
                }
            }
            ":action" => {
                let action = parse_action(sec.pos(), body, &types, &predicates)?;
                if actions.iter().any(|a| a.name == action.name) {
                    return Err(ParseError::Duplicate {
                        kind: "action",
                        name: action.name,
                        pos: sec.pos(),
                    });
                }
                actions.push(action);
            }
            ":constants" => {
                return Err(ParseError::Unsupported {
                    what: ":constants".into(),
                    pos: sec.pos(),
                })
            }
            other => {
                return Err(syntax(
                    sec.pos(),
                    format!("unknown domain section `{other}`"),
                ))
            }
        }
    }
    Ok(DomainDef {
        name,
        types,
        predicates,
        actions,
    })
}

fn parse_action(
    pos: Pos,
    body: &[Sexpr],
    types: &[TypeDecl],
    predicates: &[PredicateSchema],
) -> Result<ActionSchema, ParseError> {
    let name = expect_atom(
        body.first()
            .ok_or_else(|| syntax(pos, "missing action name"))?,
        "an action name",
    )?
    .to_string();
    let mut parameters: Vec<String> = Vec::new();
    let mut precondition: Vec<SchemaAtom> = Vec::new();
    let mut raw_pre = Vec::new();
    let mut raw_add = Vec::new();
    let mut raw_del = Vec::new();
    let mut i = 1;
    while i < body.len() {
        let key = expect_atom(&body[i], "an action keyword")?;
        let val = body
            .get(i + 1)
            .ok_or_else(|| syntax(body[i].pos(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => {
                for (v, ty, vpos) in typed_list(expect_list(val, "a parameter list")?)? {
                    if !v.starts_with('?') {
                        return Err(syntax(vpos, format!("parameter `{v}` must start with '?'")));
                    }
                    if parameters.contains(&v) {
                        return Err(ParseError::Duplicate {
                            kind: "parameter",
                            name: v,
                            pos: vpos,
                        });
                    }
                    if let Some(t) = ty.filter(|t| t != "object") {
                        if !types.iter().any(|d| d.name == t) {
                            return Err(ParseError::UnknownType { name: t, pos: vpos });
                        }
                        precondition.push(SchemaAtom {
                            predicate: t,
                            args: vec![v.clone()],
                        });
                    }
                    parameters.push(v);
                }
            }
            ":precondition" => raw_pre = conjunction(val)?,
            ":effect" => effect(val, &mut raw_add, &mut raw_del)?,
            other => {
                return Err(syntax(
                    body[i].pos(),
                    format!("unknown action keyword `{other}`"),
                ))
            }
        }
        i += 2;
    }

    let resolve = |raw: Vec<(String, Vec<String>, Pos)>| -> Result<Vec<SchemaAtom>, ParseError> {
        let mut out = Vec::new();
        for (pred, args, apos) in raw {
            check_arity(predicates, &pred, &args, apos)?;
            for a in &args {
                if !parameters.contains(a) {
                    return Err(if a.starts_with('?') {
                        ParseError::UnboundVariable {
                            name: a.clone(),
                            action: name.clone(),
                            pos: apos,
                        }
                    } else {
                        ParseError::Unsupported {
                            what: format!("constant `{a}`"),
                            pos: apos,
                        }
                    });
                }
            }
            push_unique(
                &mut out,
                SchemaAtom {
                    predicate: pred,
                    args,
                },
            );
        }
        Ok(out)
    };
    for atom in resolve(raw_pre)? {
        push_unique(&mut precondition, atom);
    }
    let add_effects = resolve(raw_add)?;
    let del_effects = resolve(raw_del)?;
    if let Some(a) = add_effects.iter().find(|a| del_effects.contains(a)) {
        return Err(ParseError::ConflictingEffects {
            action: name,
            atom: format!("({} {})", a.predicate, a.args.join(" ")),
        });
    }
    Ok(ActionSchema {
        name,
        parameters,
        precondition,
        add_effects,
        del_effects,
    })
}

pub fn parse_instance(text: &str, domain: &DomainDef) -> Result<InstanceDef, ParseError> {
    let top = sexpr::read(text)?;
    let (name, sections) = header(&top, "problem")?;
    let mut domain_name: Option<String> = None;
    let mut objects: Vec<String> = Vec::new();
    let mut type_atoms: Vec<Atom> = Vec::new();
    let mut raw_init = Vec::new();
    let mut raw_goal = Vec::new();

    for sec in sections {
        let (key, body) = section(sec)?;
        match key {
            ":domain" => {
                let d = expect_atom(
                    body.first()
                        .ok_or_else(|| syntax(sec.pos(), "missing domain name"))?,
                    "a domain name",
                )?;
                if d != domain.name {
                    return Err(ParseError::DomainMismatch {
                        expected: domain.name.clone(),
                        found: d.to_string(),
                    });
                }
                domain_name = Some(d.to_string());
            }
            ":requirements" => {}
            ":objects" => {
                for (o, ty, opos) in typed_list(body)? {
                    if objects.contains(&o) {
                        return Err(ParseError::Duplicate {
                            kind: "object",
                            name: o,
                            pos: opos,
                        });
                    }
                    if let Some(t) = ty.filter(|t| t != "object") {
                        if !domain.types.iter().any(|d| d.name == t) {
                            return Err(ParseError::UnknownType { name: t, pos: opos });
                        }
                        for anc in domain.type_closure(&t) {
                            push_unique(
                                &mut type_atoms,
                                Atom {
                                    predicate: anc,
                                    args: vec![o.clone()],
                                },
                            );
                        }
                    }
                    objects.push(o);
                }
            }
            ":init" => {
                for a in body {
                    raw_init.extend(conjunction(a)?);
                }
            }
            ":goal" => {
                if body.len() != 1 {
                    return Err(syntax(sec.pos(), ":goal takes exactly one formula"));
                }
                raw_goal = conjunction(&body[0])?;
            }
            other => {
                return Err(syntax(
                    sec.pos(),
                    format!("unknown problem section `{other}`"),
                ))
            }
        }
    }

    let known: HashSet<&str> = objects.iter().map(String::as_str).collect();
    let resolve = |raw: Vec<(String, Vec<String>, Pos)>| -> Result<Vec<Atom>, ParseError> {
        let mut out = Vec::new();
        for (pred, args, apos) in raw {
            check_arity(&domain.predicates, &pred, &args, apos)?;
            if let Some(bad) = args.iter().find(|a| !known.contains(a.as_str())) {
                return Err(ParseError::UnknownObject {
                    name: bad.clone(),
                    pos: apos,
                });
            }
            push_unique(
                &mut out,
                Atom {
                    predicate: pred,
                    args,
                },
            );
        }
        Ok(out)
    };
    let mut init = type_atoms;
    for a in resolve(raw_init)? {
        push_unique(&mut init, a);
    }
    let goal = resolve(raw_goal)?;
    Ok(InstanceDef {
        name,
        domain: domain_name.unwrap_or_else(|| domain.name.clone()),
        objects,
        init,
        goal,
    })
}
