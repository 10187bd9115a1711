use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use relvalue::data::{generate_instances, random_walk, GeneratorSpec};
use relvalue::oracle::{
    conn, shortest_path_distance, vstar, DerivedUnary, Distance, EdgeRelation, OracleValue,
};
use relvalue::rng::seeded;
use relvalue::search::{
    astar_optimal, bfs_cost, hmax, reachable_states, HeuristicValue, SearchOutcome,
};
use relvalue::{Atom, DomainTag, GroundTask, State};

const ALL: [DomainTag; 9] = [
    DomainTag::BlocksClear,
    DomainTag::BlocksOn,
    DomainTag::Gripper,
    DomainTag::Transport,
    DomainTag::Visitall,
    DomainTag::Vacuum,
    DomainTag::VacuumR,
    DomainTag::VacuumM,
    DomainTag::Rovers,
];

fn small_task(tag: DomainTag, size: usize, seed: u64) -> GroundTask {
    let g = generate_instances(&GeneratorSpec::new(tag, size..=size, 1), seed).unwrap();
    g.instances.into_iter().next().expect("instance").1
}

fn tag_strategy() -> impl Strategy<Value = DomainTag> {
    prop::sample::select(ALL.to_vec())
}

fn walk_state(task: &GroundTask, steps: usize, seed: u64) -> State {
    random_walk(task, steps + 1, &mut seeded(seed))
        .pop()
        .unwrap()
}

/// Successors by enumerating every binding of every schema over all objects.
fn brute_successors(task: &GroundTask, state: &State) -> BTreeSet<(String, BTreeSet<Atom>)> {
    let now: BTreeSet<Atom> = task.decode(state).into_iter().collect();
    let n = task.objects.len();
    let mut out = BTreeSet::new();
    for schema in &task.domain.actions {
        let p = schema.parameters.len();
        let mut binding = vec![0usize; p];
        loop {
            let env: HashMap<&str, &str> = schema
                .parameters
                .iter()
                .zip(&binding)
                .map(|(v, &o)| (v.as_str(), task.objects[o].as_str()))
                .collect();
            let inst = |a: &relvalue::pddl::SchemaAtom| Atom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|x| env.get(x.as_str()).map_or(x.clone(), |o| o.to_string()))
                    .collect(),
            };
            if schema.precondition.iter().all(|a| now.contains(&inst(a))) {
                let mut next = now.clone();
                for d in &schema.del_effects {
                    next.remove(&inst(d));
                }
                for a in &schema.add_effects {
                    next.insert(inst(a));
                }
                let args: Vec<&str> = binding.iter().map(|&o| task.objects[o].as_str()).collect();
                let name = if args.is_empty() {
                    format!("({})", schema.name)
                } else {
                    format!("({} {})", schema.name, args.join(" "))
                };
                out.insert((name, next));
            }
            // Odometer over object indices.
            let mut i = 0;
            while i < p {
                binding[i] += 1;
                if binding[i] < n {
                    break;
                }
                binding[i] = 0;
                i += 1;
            }
            if i == p {
                break;
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn grounded_successors_match_brute_force(tag in tag_strategy(), size in 2usize..=3, seed in 0u64..1000, steps in 0usize..6) {
        let task = small_task(tag, size, seed);
        let s = walk_state(&task, steps, seed);
        let grounded: BTreeSet<(String, BTreeSet<Atom>)> = task
            .successors(&s)
            .into_iter()
            .map(|(a, t)| (task.action_name(a), task.decode(&t).into_iter().collect()))
            .collect();
        prop_assert_eq!(grounded, brute_successors(&task, &s));
    }

    #[test]
    fn hmax_is_admissible_and_consistent(tag in tag_strategy(), size in 2usize..=4, seed in 0u64..1000, steps in 0usize..10) {
        let task = small_task(tag, size, seed);
        let s = walk_state(&task, steps, seed);
        let h = hmax(&task, &s);
        if let Some(c) = bfs_cost(&task, &s, 200_000).unwrap() { prop_assert!(h <= HeuristicValue::Finite(c), "h={h} above V*={c}") }
        if task.is_goal(&s) {
            prop_assert_eq!(h, HeuristicValue::Finite(0));
        }
        if let HeuristicValue::Finite(v) = h {
            for (_, t) in task.successors(&s) {
                let ht = hmax(&task, &t);
                prop_assert!(ht.finite().is_some_and(|w| w + 1 >= v), "h drops from {v} to {ht}");
            }
        }
    }

    #[test]
    fn astar_agrees_with_bfs(tag in tag_strategy(), size in 2usize..=4, seed in 0u64..1000, steps in 0usize..10) {
        let task = small_task(tag, size, seed);
        let s = walk_state(&task, steps, seed);
        let bfs = bfs_cost(&task, &s, 500_000).unwrap();
        let r = astar_optimal(&task, &s);
        match (&r.outcome, bfs) {
            (SearchOutcome::Solved(plan), Some(c)) => {
                prop_assert_eq!(plan.cost(), c);
                let mut cur = s.clone();
                for &a in &plan.actions {
                    cur = task.apply(&cur, a).unwrap();
                }
                prop_assert!(task.is_goal(&cur));
            }
            (SearchOutcome::Unsolvable, None) => {}
            (o, b) => prop_assert!(false, "A* {o:?} vs BFS {b:?}"),
        }
    }

    #[test]
    fn oracle_values_satisfy_bellman(
        tag in prop::sample::select(vec![
            DomainTag::BlocksClear, DomainTag::BlocksOn, DomainTag::Gripper,
            DomainTag::Transport, DomainTag::Visitall, DomainTag::VacuumM,
        ]),
        size in 2usize..=4,
        seed in 0u64..1000,
    ) {
        let task = small_task(tag, size, seed);
        let reach = reachable_states(&task, 5_000);
        for s in reach.states.iter().take(300) {
            let v = vstar(tag, &task, s).unwrap();
            if task.is_goal(s) {
                prop_assert_eq!(v, OracleValue::Defined(0));
                continue;
            }
            let OracleValue::Defined(v) = v else { continue };
            prop_assert!(v > 0);
            let best = task
                .successors(s)
                .iter()
                .filter_map(|(_, t)| vstar(tag, &task, t).unwrap().value())
                .min();
            prop_assert_eq!(best, Some(v - 1), "state {}", task.format_state(s));
        }
    }

    #[test]
    fn shortest_paths_match_floyd_warshall(
        n in 1u32..9,
        edges in prop::collection::vec((0u32..9, 0u32..9), 0..20),
        targets in prop::collection::btree_set(0u32..9, 0..3),
        sources in prop::collection::btree_set(0u32..9, 1..3),
        bound in 0u32..6,
    ) {
        let edges: Vec<(u32, u32)> = edges.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let targets: BTreeSet<u32> = targets.into_iter().filter(|&t| t < n).collect();
        let sources: BTreeSet<u32> = sources.into_iter().filter(|&s| s < n).collect();
        let inf = u32::MAX / 4;
        let m = n as usize;
        let mut d = vec![vec![inf; m]; m];
        for i in 0..m {
            d[i][i] = 0;
        }
        for &(a, b) in &edges {
            d[a as usize][b as usize] = d[a as usize][b as usize].min(1);
        }
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        let expected = sources
            .iter()
            .flat_map(|&s| targets.iter().map(move |&t| (s, t)))
            .map(|(s, t)| d[s as usize][t as usize])
            .filter(|&x| x < inf)
            .min();
        let t = DerivedUnary::new("T", targets);
        let e = EdgeRelation::new("E", edges);
        let s = DerivedUnary::new("S", sources);
        let got = shortest_path_distance(&t, &e, &s);
        prop_assert_eq!(got.finite(), expected);
        prop_assert_eq!(got == Distance::Unbounded, expected.is_none());
        prop_assert_eq!(conn(&t, &e, &s, bound), expected.is_some_and(|x| x <= bound));
    }
}
