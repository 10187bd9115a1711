//! Planning tasks: the STRIPS-subset language, its parser and printer,
//! grounding, and the explicit state model.
//!
//! Accepted grammar (s-expressions, case-insensitive symbols, `;` comments):
//!
//! ```text
//! domain   := (define (domain NAME) SECTION*) | (domain NAME SECTION*)
//! SECTION  := (:requirements ...)            ; ignored
//!           | (:types TYPED-LIST)            ; each type becomes a unary predicate
//!           | (:predicates (PRED ?v*)*)
//!           | (:action NAME :parameters (TYPED-VARS) :precondition CONJ :effect EFFECT)
//! CONJ     := (and ATOM*) | ATOM | ()
//! EFFECT   := (and (ATOM | (not ATOM))*) | ATOM | (not ATOM)
//! problem  := (define (problem NAME) (:domain NAME) (:objects TYPED-LIST)
//!                     (:init ATOM*) (:goal CONJ))
//! ```
//!
//! A typed parameter `?x - t` adds the precondition `(t ?x)`; a typed object
//! `o - t` adds `(t o)` and the atoms of all ancestor types to the initial
//! state.

mod model;
mod parse;
pub mod sexpr;
mod task;

pub use model::{
    ActionSchema, Atom, DomainDef, InstanceDef, PredicateSchema, SchemaAtom, TypeDecl,
};
pub use parse::{parse_domain, parse_instance, ParseError};
pub use task::{
    ground, ground_with_limit, ActionId, AtomId, GroundAction, GroundAtom, GroundTask, State,
    StateBits, TaskError, DEFAULT_GROUNDING_LIMIT,
};

/// Parses a domain/instance pair and grounds it.
pub fn load_task(domain_text: &str, instance_text: &str) -> Result<GroundTask, crate::Error> {
    let domain = parse_domain(domain_text)?;
    let instance = parse_instance(instance_text, &domain)?;
    Ok(ground(&domain, &instance)?)
}
