use std::fmt;

/// A predicate symbol with its arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredicateSchema {
    pub name: String,
    pub arity: usize,
}

/// An atom inside an action schema; arguments are parameter names (`?x`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchemaAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<String>,
    pub precondition: Vec<SchemaAtom>,
    pub add_effects: Vec<SchemaAtom>,
    pub del_effects: Vec<SchemaAtom>,
}

/// A declared type. Types compile to unary predicates of the same name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

impl DomainDef {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn is_type_predicate(&self, name: &str) -> bool {
        self.types.iter().any(|t| t.name == name)
    }

    /// The type itself followed by its ancestors, excluding the implicit `object`.
    pub fn type_closure(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = Some(name.to_string());
        while let Some(t) = cur {
            if t == "object" || out.contains(&t) {
                break;
            }
            cur = self
                .types
                .iter()
                .find(|d| d.name == t)
                .and_then(|d| d.parent.clone());
            out.push(t);
        }
        out
    }
}

/// A ground atom over object names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Atom {
    /// Compact token form `pred(a,b)` used in dataset files.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceDef {
    pub name: String,
    pub domain: String,
    pub objects: Vec<String>,
    pub init: Vec<Atom>,
    pub goal: Vec<Atom>,
}

fn write_atom_sexpr(f: &mut fmt::Formatter<'_>, predicate: &str, args: &[String]) -> fmt::Result {
    write!(f, "({}", predicate)?;
    for a in args {
        write!(f, " {}", a)?;
    }
    write!(f, ")")
}

impl fmt::Display for DomainDef {
    /// Pretty-prints in the accepted grammar. Type predicates are implied by
    /// `:types` and parameters are printed untyped with explicit type
    /// preconditions, so re-parsing yields an identical value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.types.is_empty() {
            write!(f, "  (:types")?;
            for t in &self.types {
                match &t.parent {
                    Some(p) => write!(f, " {} - {}", t.name, p)?,
                    None => write!(f, " {}", t.name)?,
                }
            }
            writeln!(f, ")")?;
        }
        write!(f, "  (:predicates")?;
        for p in self
            .predicates
            .iter()
            .filter(|p| !self.is_type_predicate(&p.name))
        {
            write!(f, " ({}", p.name)?;
            for i in 0..p.arity {
                write!(f, " ?a{}", i)?;
            }
            write!(f, ")")?;
        }
        write!(f, ")")?;
        for a in &self.actions {
            writeln!(f)?;
            writeln!(f, "  (:action {}", a.name)?;
            writeln!(f, "    :parameters ({})", a.parameters.join(" "))?;
            write!(f, "    :precondition (and")?;
            for atom in &a.precondition {
                write!(f, " ")?;
                write_atom_sexpr(f, &atom.predicate, &atom.args)?;
            }
            writeln!(f, ")")?;
            write!(f, "    :effect (and")?;
            for atom in &a.add_effects {
                write!(f, " ")?;
                write_atom_sexpr(f, &atom.predicate, &atom.args)?;
            }
            for atom in &a.del_effects {
                write!(f, " (not ")?;
                write_atom_sexpr(f, &atom.predicate, &atom.args)?;
                write!(f, ")")?;
            }
            write!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for InstanceDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        writeln!(f, "  (:objects {})", self.objects.join(" "))?;
        write!(f, "  (:init")?;
        for a in &self.init {
            write!(f, " ")?;
            write_atom_sexpr(f, &a.predicate, &a.args)?;
        }
        writeln!(f, ")")?;
        write!(f, "  (:goal (and")?;
        for a in &self.goal {
            write!(f, " ")?;
            write_atom_sexpr(f, &a.predicate, &a.args)?;
        }
        writeln!(f, ")))")
    }
}
