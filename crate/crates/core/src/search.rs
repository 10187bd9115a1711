//! Optimal planning: `h_max`, A*, and brute-force reachability used as a
//! test oracle.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;

use crate::pddl::{ActionId, GroundTask, State};

/// A heuristic estimate; `Infinite` when the goal is unreachable even under
/// the delete relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicValue {
    Finite(u32),
    Infinite,
}

impl HeuristicValue {
    pub fn finite(self) -> Option<u32> {
        match self {
            HeuristicValue::Finite(v) => Some(v),
            HeuristicValue::Infinite => None,
        }
    }
}

impl Ord for HeuristicValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (HeuristicValue::Finite(a), HeuristicValue::Finite(b)) => a.cmp(b),
            (HeuristicValue::Finite(_), HeuristicValue::Infinite) => Ordering::Less,
            (HeuristicValue::Infinite, HeuristicValue::Finite(_)) => Ordering::Greater,
            (HeuristicValue::Infinite, HeuristicValue::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for HeuristicValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for HeuristicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeuristicValue::Finite(v) => write!(f, "{v}"),
            HeuristicValue::Infinite => write!(f, "inf"),
        }
    }
}

/// `h_max` by Bellman-Ford iteration to the least fixed point:
/// atoms in `state` cost 0, an atom added by an action costs at most
/// `1 + max(cost of its preconditions)`; `h` is the max over goal atoms.
pub fn hmax(task: &GroundTask, state: &State) -> HeuristicValue {
    let mut cost: Vec<Option<u32>> = vec![None; task.atoms.len()];
    for &a in state.atoms() {
        cost[a as usize] = Some(0);
    }
    loop {
        let mut changed = false;
        'actions: for action in &task.actions {
            let mut m = 0;
            for &p in action.pre.iter() {
                match cost[p as usize] {
                    Some(c) => m = m.max(c),
                    None => continue 'actions,
                }
            }
            let c = m + 1;
            for &a in action.add.iter() {
                if cost[a as usize].is_none_or(|old| c < old) {
                    cost[a as usize] = Some(c);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut h = 0;
    for &g in task.goal.iter() {
        match cost[g as usize] {
            Some(c) => h = h.max(c),
            None => return HeuristicValue::Infinite,
        }
    }
    HeuristicValue::Finite(h)
}

/// An action sequence with its state trajectory (`states.len() == actions.len() + 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<ActionId>,
    pub states: Vec<State>,
}

impl Plan {
    pub fn cost(&self) -> u32 {
        self.actions.len() as u32
    }

    /// Checks the trajectory against the transition function and the goal.
    pub fn validate(&self, task: &GroundTask) -> bool {
        self.states.len() == self.actions.len() + 1
            && self.actions.iter().enumerate().all(|(i, &a)| {
                task.apply(&self.states[i], a)
                    .is_ok_and(|s| s == self.states[i + 1])
            })
            && self.states.last().is_some_and(|s| task.is_goal(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Solved(Plan),
    /// No plan exists.
    Unsolvable,
    /// The expansion budget ran out before the search finished.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: usize,
    pub generated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub max_expansions: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_expansions: 1_000_000,
        }
    }
}

/// A* with `h_max` under the default budget.
pub fn astar_optimal(task: &GroundTask, state: &State) -> SearchResult {
    astar_with(task, state, SearchConfig::default())
}

struct Node {
    state: State,
    g: u32,
    h: u32,
    parent: Option<(usize, ActionId)>,
    closed: bool,
}

/// Open-list key: smallest f, then largest g, then first inserted.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct OpenKey(u32, Reverse<u32>, u64, usize);

pub fn astar_with(task: &GroundTask, start: &State, config: SearchConfig) -> SearchResult {
    let mut stats = SearchStats::default();
    let h0 = match hmax(task, start) {
        HeuristicValue::Finite(h) => h,
        HeuristicValue::Infinite => {
            return SearchResult {
                outcome: SearchOutcome::Unsolvable,
                stats,
            }
        }
    };
    let mut nodes = vec![Node {
        state: start.clone(),
        g: 0,
        h: h0,
        parent: None,
        closed: false,
    }];
    let mut index: HashMap<State, usize> = HashMap::new();
    index.insert(start.clone(), 0);
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse(OpenKey(h0, Reverse(0), seq, 0)));

    while let Some(Reverse(OpenKey(_, Reverse(g), _, id))) = open.pop() {
        if nodes[id].closed || nodes[id].g != g {
            continue;
        }
        if task.is_goal(&nodes[id].state) {
            return SearchResult {
                outcome: SearchOutcome::Solved(reconstruct(&nodes, id)),
                stats,
            };
        }
        if stats.expansions >= config.max_expansions {
            return SearchResult {
                outcome: SearchOutcome::BudgetExhausted,
                stats,
            };
        }
        nodes[id].closed = true;
        stats.expansions += 1;
        let current = nodes[id].state.clone();
        for (action, succ) in task.successors(&current) {
            stats.generated += 1;
            let g2 = g + 1;
            let target = match index.get(&succ) {
                Some(&sid) => {
                    if g2 >= nodes[sid].g {
                        continue;
                    }
                    nodes[sid].g = g2;
                    nodes[sid].parent = Some((id, action));
                    nodes[sid].closed = false;
                    sid
                }
                None => {
                    let h = match hmax(task, &succ) {
                        HeuristicValue::Finite(h) => h,
                        // Dead end under the relaxation: no plan through it.
                        HeuristicValue::Infinite => continue,
                    };
                    nodes.push(Node {
                        state: succ.clone(),
                        g: g2,
                        h,
                        parent: Some((id, action)),
                        closed: false,
                    });
                    index.insert(succ, nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            seq += 1;
            open.push(Reverse(OpenKey(
                g2 + nodes[target].h,
                Reverse(g2),
                seq,
                target,
            )));
        }
    }
    SearchResult {
        outcome: SearchOutcome::Unsolvable,
        stats,
    }
}

fn reconstruct(nodes: &[Node], mut id: usize) -> Plan {
    let mut actions = Vec::new();
    let mut states = vec![nodes[id].state.clone()];
    while let Some((parent, action)) = nodes[id].parent {
        actions.push(action);
        states.push(nodes[parent].state.clone());
        id = parent;
    }
    actions.reverse();
    states.reverse();
    Plan { actions, states }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

impl fmt::Display for BudgetExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("search budget exhausted")
    }
}

impl std::error::Error for BudgetExhausted {}

/// Optimal cost-to-go; `Ok(None)` when no plan exists.
pub fn optimal_cost(task: &GroundTask, state: &State) -> Result<Option<u32>, BudgetExhausted> {
    match astar_optimal(task, state).outcome {
        SearchOutcome::Solved(p) => Ok(Some(p.cost())),
        SearchOutcome::Unsolvable => Ok(None),
        SearchOutcome::BudgetExhausted => Err(BudgetExhausted),
    }
}

/// States reachable from the initial state in breadth-first order.
#[derive(Debug, Clone)]
pub struct Reachable {
    pub states: Vec<State>,
    /// Set when the limit cut the closure short.
    pub truncated: bool,
}

pub fn reachable_states(task: &GroundTask, limit: usize) -> Reachable {
    assert!(limit > 0, "reachable_states needs a positive limit");
    let mut seen: HashMap<State, ()> = HashMap::new();
    let mut states = vec![task.initial.clone()];
    seen.insert(task.initial.clone(), ());
    let mut next = 0;
    let mut truncated = false;
    while next < states.len() {
        let s = states[next].clone();
        next += 1;
        for (_, succ) in task.successors(&s) {
            if seen.contains_key(&succ) {
                continue;
            }
            if states.len() >= limit {
                truncated = true;
                break;
            }
            seen.insert(succ.clone(), ());
            states.push(succ);
        }
        if truncated {
            break;
        }
    }
    Reachable { states, truncated }
}

/// Plain breadth-first search cost, stopping after `limit` expansions.
pub fn bfs_cost(
    task: &GroundTask,
    start: &State,
    limit: usize,
) -> Result<Option<u32>, BudgetExhausted> {
    let mut dist: HashMap<State, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(start.clone(), 0);
    queue.push_back(start.clone());
    let mut expansions = 0;
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if task.is_goal(&s) {
            return Ok(Some(d));
        }
        expansions += 1;
        if expansions > limit {
            return Err(BudgetExhausted);
        }
        for (_, succ) in task.successors(&s) {
            if !dist.contains_key(&succ) {
                dist.insert(succ.clone(), d + 1);
                queue.push_back(succ);
            }
        }
    }
    Ok(None)
}

/// Exact cost-to-go for every state of a closed reachable set, by backward
/// breadth-first search from its goal states over the explicit transition
/// graph. States with no path to the goal are absent from the map.
pub fn exact_costs(task: &GroundTask, states: &[State]) -> HashMap<State, u32> {
    let id: HashMap<&State, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (i, s) in states.iter().enumerate() {
        for (_, succ) in task.successors(s) {
            if let Some(&j) = id.get(&succ) {
                preds[j].push(i);
            }
        }
    }
    let mut dist: Vec<Option<u32>> = vec![None; states.len()];
    let mut queue = VecDeque::new();
    for (i, s) in states.iter().enumerate() {
        if task.is_goal(s) {
            dist[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        let d = dist[j].unwrap();
        for &i in &preds[j] {
            if dist[i].is_none() {
                dist[i] = Some(d + 1);
                queue.push_back(i);
            }
        }
    }
    states
        .iter()
        .zip(dist)
        .filter_map(|(s, d)| d.map(|d| (s.clone(), d)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains;
    use crate::pddl::{load_task, Atom};

    fn fixture(domain: &str, instance: &str) -> GroundTask {
        load_task(domain, instance).unwrap()
    }

    fn chain() -> GroundTask {
        fixture(
            include_str!("../fixtures/misc/chain-domain.pddl"),
            include_str!("../fixtures/misc/chain-instance.pddl"),
        )
    }

    #[test]
    fn hmax_is_zero_on_goal_states() {
        let t = fixture(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-3-table.pddl"),
        );
        assert_eq!(hmax(&t, &t.initial), HeuristicValue::Finite(0));
    }

    #[test]
    fn hmax_on_chain_is_two() {
        let t = chain();
        assert_eq!(hmax(&t, &t.initial), HeuristicValue::Finite(2));
    }

    #[test]
    fn hmax_is_infinite_for_unachievable_goal() {
        let t = chain();
        let empty = State::new(vec![]);
        assert_eq!(hmax(&t, &empty), HeuristicValue::Infinite);
    }

    #[test]
    fn astar_on_goal_state_returns_empty_plan() {
        let t = fixture(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-3-table.pddl"),
        );
        match astar_optimal(&t, &t.initial).outcome {
            SearchOutcome::Solved(p) => {
                assert_eq!(p.cost(), 0);
                assert_eq!(p.states.len(), 1);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn blocks_clear_two_above_costs_three() {
        // b1 under b2 under b3, arm empty.
        let t = fixture(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-4.pddl"),
        );
        match astar_optimal(&t, &t.initial).outcome {
            SearchOutcome::Solved(p) => {
                assert_eq!(p.cost(), 3);
                assert!(p.validate(&t));
            }
            o => panic!("{o:?}"),
        }
        assert_eq!(bfs_cost(&t, &t.initial, 1_000_000), Ok(Some(3)));
    }

    #[test]
    fn disconnected_dirt_is_unsolvable() {
        let t = fixture(
            domains::VACUUM,
            include_str!("../fixtures/instances/vacuum-unreachable.pddl"),
        );
        assert_eq!(
            astar_optimal(&t, &t.initial).outcome,
            SearchOutcome::Unsolvable
        );
        assert_eq!(optimal_cost(&t, &t.initial), Ok(None));
    }

    #[test]
    fn budget_exhaustion_is_distinct_from_unsolvable() {
        let t = fixture(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-5.pddl"),
        );
        let r = astar_with(&t, &t.initial, SearchConfig { max_expansions: 1 });
        assert_eq!(r.outcome, SearchOutcome::BudgetExhausted);
    }

    #[test]
    fn two_block_reachable_set_has_five_states() {
        // both on table; b1 on b2; b2 on b1; holding b1; holding b2
        let t = fixture(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-2.pddl"),
        );
        let r = reachable_states(&t, 1000);
        assert_eq!(r.states.len(), 5);
        assert!(!r.truncated);
    }

    #[test]
    fn reachable_limit_one_truncates() {
        let t = fixture(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-2.pddl"),
        );
        let r = reachable_states(&t, 1);
        assert_eq!(r.states, vec![t.initial.clone()]);
        assert!(r.truncated);
    }

    #[test]
    fn reachable_without_actions_is_not_truncated() {
        let d = crate::pddl::parse_domain("(define (domain d) (:predicates (p)))").unwrap();
        let i = crate::pddl::parse_instance(
            "(define (problem q) (:domain d) (:objects) (:init (p)) (:goal (p)))",
            &d,
        )
        .unwrap();
        let t = crate::pddl::ground(&d, &i).unwrap();
        let r = reachable_states(&t, 1);
        assert_eq!(r.states.len(), 1);
        assert!(!r.truncated);
    }

    #[test]
    fn hmax_is_monotone_under_atom_addition() {
        let t = fixture(
            domains::GRIPPER,
            include_str!("../fixtures/instances/gripper-2.pddl"),
        );
        let base = t.initial.clone();
        let h0 = hmax(&t, &base);
        for extra in 0..t.atoms.len() as u32 {
            let mut atoms = base.atoms().to_vec();
            atoms.push(extra);
            assert!(hmax(&t, &State::new(atoms)) <= h0);
        }
    }

    #[test]
    fn searches_are_deterministic() {
        let t = fixture(
            domains::GRIPPER,
            include_str!("../fixtures/instances/gripper-4.pddl"),
        );
        assert_eq!(astar_optimal(&t, &t.initial), astar_optimal(&t, &t.initial));
    }

    #[test]
    fn exact_costs_agree_with_bfs() {
        let t = fixture(
            domains::VISITALL,
            include_str!("../fixtures/instances/visitall-path.pddl"),
        );
        let r = reachable_states(&t, 10_000);
        let costs = exact_costs(&t, &r.states);
        for s in &r.states {
            assert_eq!(costs.get(s).copied(), bfs_cost(&t, s, 1_000_000).unwrap());
        }
        let _ = Atom::new("visited", &["v6"]);
    }
}
