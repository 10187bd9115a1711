//! Grounding and the explicit state model.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::model::{Atom, DomainDef, InstanceDef};

pub type AtomId = u32;
pub type ActionId = u32;

/// Bindings examined before grounding gives up.
pub const DEFAULT_GROUNDING_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    /// Index into the domain's predicate table.
    pub predicate: u32,
    /// Object indices.
    pub args: Box<[u32]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    /// Index into the domain's action table.
    pub schema: u32,
    pub binding: Box<[u32]>,
    pub pre: Box<[AtomId]>,
    pub add: Box<[AtomId]>,
    pub del: Box<[AtomId]>,
}

/// A set of true atoms, stored sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Box<[AtomId]>);

impl State {
    pub fn new(mut atoms: Vec<AtomId>) -> Self {
        atoms.sort_unstable();
        atoms.dedup();
        State(atoms.into_boxed_slice())
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.0
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.0.binary_search(&atom).is_ok()
    }

    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|a| self.contains(*a))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error(
        "grounding exceeded {limit} candidate bindings (reached {examined}, {atoms} atoms so far)"
    )]
    TooLarge {
        limit: usize,
        examined: usize,
        atoms: usize,
    },
    #[error("action `{action}` is not applicable in the given state")]
    NotApplicable { action: String },
    #[error("atom `{atom}` is not part of the task")]
    UnknownAtom { atom: String },
}

/// A fully grounded task: the state model of one instance.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub domain: Arc<DomainDef>,
    pub name: String,
    pub objects: Vec<String>,
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<GroundAction>,
    pub initial: State,
    pub goal: Box<[AtomId]>,
    atom_ids: HashMap<GroundAtom, AtomId>,
}

/// Grounds every schema over the bindings reachable under the delete
/// relaxation from the initial state. The atom universe is the relaxed
/// reachable set plus the goal atoms. Atoms sort by predicate name then
/// argument indices; actions by schema name then binding.
pub fn ground(domain: &DomainDef, instance: &InstanceDef) -> Result<GroundTask, TaskError> {
    ground_with_limit(domain, instance, DEFAULT_GROUNDING_LIMIT)
}

pub fn ground_with_limit(
    domain: &DomainDef,
    instance: &InstanceDef,
    limit: usize,
) -> Result<GroundTask, TaskError> {
    let obj_index: HashMap<&str, u32> = instance
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.as_str(), i as u32))
        .collect();
    let to_ground = |a: &Atom| -> GroundAtom {
        GroundAtom {
            predicate: domain
                .predicate_index(&a.predicate)
                .expect("instance validated against domain") as u32,
            args: a.args.iter().map(|o| obj_index[o.as_str()]).collect(),
        }
    };

    struct Compiled {
        nparams: usize,
        pre: Vec<(u32, Vec<usize>)>,
        add: Vec<(u32, Vec<usize>)>,
        del: Vec<(u32, Vec<usize>)>,
    }
    let compile =
        |atoms: &[super::model::SchemaAtom], params: &[String]| -> Vec<(u32, Vec<usize>)> {
            atoms
                .iter()
                .map(|a| {
                    (
                        domain.predicate_index(&a.predicate).expect("validated") as u32,
                        a.args
                            .iter()
                            .map(|v| params.iter().position(|p| p == v).expect("validated"))
                            .collect(),
                    )
                })
                .collect()
        };
    let schemas: Vec<Compiled> = domain
        .actions
        .iter()
        .map(|a| Compiled {
            nparams: a.parameters.len(),
            pre: compile(&a.precondition, &a.parameters),
            add: compile(&a.add_effects, &a.parameters),
            del: compile(&a.del_effects, &a.parameters),
        })
        .collect();

    let nobj = instance.objects.len() as u32;
    let mut reached: HashSet<GroundAtom> = instance.init.iter().map(to_ground).collect();
    let mut by_pred: Vec<Vec<Box<[u32]>>> = vec![Vec::new(); domain.predicates.len()];
    for a in &reached {
        by_pred[a.predicate as usize].push(a.args.clone());
    }
    let mut examined = 0usize;
    let mut bindings: Vec<BTreeSet<Vec<u32>>> = vec![BTreeSet::new(); schemas.len()];

    loop {
        let mut fresh: Vec<GroundAtom> = Vec::new();
        let mut fresh_set: HashSet<GroundAtom> = HashSet::new();
        for (si, s) in schemas.iter().enumerate() {
            let mut partial: Vec<Option<u32>> = vec![None; s.nparams];
            let mut found = Vec::new();
            join(
                &s.pre,
                0,
                &by_pred,
                &mut partial,
                nobj,
                &mut found,
                &mut examined,
                limit,
            )
            .map_err(|_| TaskError::TooLarge {
                limit,
                examined,
                atoms: reached.len(),
            })?;
            for b in found {
                if bindings[si].contains(&b) {
                    continue;
                }
                for (p, args) in &s.add {
                    let atom = GroundAtom {
                        predicate: *p,
                        args: args.iter().map(|&i| b[i]).collect(),
                    };
                    if !reached.contains(&atom) && fresh_set.insert(atom.clone()) {
                        fresh.push(atom);
                    }
                }
                bindings[si].insert(b);
            }
        }
        if fresh.is_empty() {
            break;
        }
        for a in fresh {
            by_pred[a.predicate as usize].push(a.args.clone());
            reached.insert(a);
        }
    }

    let mut universe: Vec<GroundAtom> = reached.into_iter().collect();
    for g in &instance.goal {
        let ga = to_ground(g);
        if !universe.contains(&ga) {
            universe.push(ga);
        }
    }
    universe.sort_by(|a, b| {
        let na = &domain.predicates[a.predicate as usize].name;
        let nb = &domain.predicates[b.predicate as usize].name;
        na.cmp(nb).then_with(|| a.args.cmp(&b.args))
    });
    let atom_ids: HashMap<GroundAtom, AtomId> = universe
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i as AtomId))
        .collect();

    let mut schema_order: Vec<usize> = (0..schemas.len()).collect();
    schema_order.sort_by(|&a, &b| domain.actions[a].name.cmp(&domain.actions[b].name));
    let mut actions = Vec::new();
    for si in schema_order {
        let s = &schemas[si];
        for b in &bindings[si] {
            let resolve = |atoms: &[(u32, Vec<usize>)]| -> Vec<AtomId> {
                let mut ids: Vec<AtomId> = atoms
                    .iter()
                    .filter_map(|(p, args)| {
                        atom_ids
                            .get(&GroundAtom {
                                predicate: *p,
                                args: args.iter().map(|&i| b[i]).collect(),
                            })
                            .copied()
                    })
                    .collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            };
            let pre = resolve(&s.pre);
            let add = resolve(&s.add);
            // Delete-then-add: an atom both added and deleted stays true.
            let del: Vec<AtomId> = resolve(&s.del)
                .into_iter()
                .filter(|a| add.binary_search(a).is_err())
                .collect();
            actions.push(GroundAction {
                schema: si as u32,
                binding: b.clone().into_boxed_slice(),
                pre: pre.into(),
                add: add.into(),
                del: del.into(),
            });
        }
    }

    let initial = State::new(
        instance
            .init
            .iter()
            .map(|a| atom_ids[&to_ground(a)])
            .collect(),
    );
    let mut goal: Vec<AtomId> = instance
        .goal
        .iter()
        .map(|a| atom_ids[&to_ground(a)])
        .collect();
    goal.sort_unstable();
    goal.dedup();

    Ok(GroundTask {
        domain: Arc::new(domain.clone()),
        name: instance.name.clone(),
        objects: instance.objects.clone(),
        atoms: universe,
        actions,
        initial,
        goal: goal.into(),
        atom_ids,
    })
}

struct LimitExceeded;

/// Backtracking join of precondition atoms against the reached atom lists.
/// Parameters not fixed by any precondition range over all objects.
#[allow(clippy::too_many_arguments)]
fn join(
    pre: &[(u32, Vec<usize>)],
    depth: usize,
    by_pred: &[Vec<Box<[u32]>>],
    partial: &mut Vec<Option<u32>>,
    nobj: u32,
    out: &mut Vec<Vec<u32>>,
    examined: &mut usize,
    limit: usize,
) -> Result<(), LimitExceeded> {
    *examined += 1;
    if *examined > limit {
        return Err(LimitExceeded);
    }
    if depth == pre.len() {
        return match partial.iter().position(Option::is_none) {
            None => {
                out.push(partial.iter().map(|v| v.unwrap()).collect());
                Ok(())
            }
            Some(free) => {
                for o in 0..nobj {
                    partial[free] = Some(o);
                    join(pre, depth, by_pred, partial, nobj, out, examined, limit)?;
                }
                partial[free] = None;
                Ok(())
            }
        };
    }
    let (pred, vars) = &pre[depth];
    for tuple in &by_pred[*pred as usize] {
        let mut assigned = Vec::new();
        let mut ok = true;
        for (pos, &v) in vars.iter().enumerate() {
            match partial[v] {
                Some(o) if o != tuple[pos] => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    partial[v] = Some(tuple[pos]);
                    assigned.push(v);
                }
            }
        }
        if ok {
            join(pre, depth + 1, by_pred, partial, nobj, out, examined, limit)?;
        }
        for v in assigned {
            partial[v] = None;
        }
    }
    Ok(())
}

impl GroundTask {
    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.atom_ids.get(atom).copied()
    }

    pub fn lookup(&self, atom: &Atom) -> Option<AtomId> {
        let predicate = self.domain.predicate_index(&atom.predicate)? as u32;
        let args = atom
            .args
            .iter()
            .map(|o| self.objects.iter().position(|x| x == o).map(|i| i as u32))
            .collect::<Option<Box<[u32]>>>()?;
        self.atom_id(&GroundAtom { predicate, args })
    }

    pub fn atom(&self, id: AtomId) -> Atom {
        let g = &self.atoms[id as usize];
        Atom {
            predicate: self.domain.predicates[g.predicate as usize].name.clone(),
            args: g
                .args
                .iter()
                .map(|&o| self.objects[o as usize].clone())
                .collect(),
        }
    }

    pub fn predicate_name(&self, id: AtomId) -> &str {
        &self.domain.predicates[self.atoms[id as usize].predicate as usize].name
    }

    pub fn action_name(&self, id: ActionId) -> String {
        let a = &self.actions[id as usize];
        let schema = &self.domain.actions[a.schema as usize];
        let args: Vec<&str> = a
            .binding
            .iter()
            .map(|&o| self.objects[o as usize].as_str())
            .collect();
        format!("({} {})", schema.name, args.join(" ")).replace(" )", ")")
    }

    /// Builds a state from named atoms; every atom must be in the universe.
    pub fn state_from_atoms(&self, atoms: &[Atom]) -> Result<State, TaskError> {
        atoms
            .iter()
            .map(|a| {
                self.lookup(a).ok_or_else(|| TaskError::UnknownAtom {
                    atom: a.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(State::new)
    }

    pub fn decode(&self, state: &State) -> Vec<Atom> {
        state.atoms().iter().map(|&a| self.atom(a)).collect()
    }

    pub fn is_applicable(&self, state: &State, action: ActionId) -> bool {
        state.contains_all(&self.actions[action as usize].pre)
    }

    pub fn is_goal(&self, state: &State) -> bool {
        state.contains_all(&self.goal)
    }

    /// `(state \ del) ∪ add`, rejecting inapplicable actions.
    pub fn apply(&self, state: &State, action: ActionId) -> Result<State, TaskError> {
        if !self.is_applicable(state, action) {
            return Err(TaskError::NotApplicable {
                action: self.action_name(action),
            });
        }
        Ok(self.successor(state, action))
    }

    /// Applies without the applicability check; callers must have checked.
    pub fn successor(&self, state: &State, action: ActionId) -> State {
        let a = &self.actions[action as usize];
        let mut out = Vec::with_capacity(state.len() + a.add.len());
        let (mut i, mut j) = (0, 0);
        let s = state.atoms();
        while i < s.len() || j < a.add.len() {
            let next = match (s.get(i), a.add.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    if a.del.binary_search(&x).is_ok() {
                        continue;
                    }
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    if a.del.binary_search(&x).is_ok() {
                        continue;
                    }
                    x
                }
                (_, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        State(out.into_boxed_slice())
    }

    /// Applicable actions in ground-action order.
    pub fn applicable_actions(&self, state: &State) -> Vec<ActionId> {
        let bits = StateBits::new(self.atoms.len(), state);
        (0..self.actions.len() as ActionId)
            .filter(|&a| bits.contains_all(&self.actions[a as usize].pre))
            .collect()
    }

    /// `(action, successor)` pairs in ground-action order.
    pub fn successors(&self, state: &State) -> Vec<(ActionId, State)> {
        self.applicable_actions(state)
            .into_iter()
            .map(|a| (a, self.successor(state, a)))
            .collect()
    }

    pub fn format_state(&self, state: &State) -> String {
        self.decode(state)
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Dense membership bitmap for fast precondition checks.
pub struct StateBits(Vec<u64>);

impl StateBits {
    pub fn new(universe: usize, state: &State) -> Self {
        let mut words = vec![0u64; universe.div_ceil(64)];
        for &a in state.atoms() {
            words[a as usize / 64] |= 1 << (a % 64);
        }
        StateBits(words)
    }

    #[inline]
    pub fn contains(&self, atom: AtomId) -> bool {
        self.0[atom as usize / 64] & (1 << (atom % 64)) != 0
    }

    #[inline]
    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|&a| self.contains(a))
    }
}

impl fmt::Display for GroundTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} objects, {} atoms, {} actions",
            self.name,
            self.objects.len(),
            self.atoms.len(),
            self.actions.len()
        )
    }
}
