//! Random solvable instances per family. `size` is the family's main
//! parameter: blocks, balls, locations, vertices, cells or waypoints.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domains::DomainTag;
use crate::pddl::{ground, parse_instance, Atom, GroundTask, InstanceDef};
use crate::rng::stream;
use crate::search::{astar_with, SearchConfig, SearchOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub tag: DomainTag,
    pub sizes: RangeInclusive<usize>,
    pub count: usize,
    /// Keep only instances whose optimal cost lies in this range.
    pub cost: Option<RangeInclusive<u32>>,
    pub attempts_per_instance: usize,
    pub search: SearchConfig,
}

impl GeneratorSpec {
    pub fn new(tag: DomainTag, sizes: RangeInclusive<usize>, count: usize) -> Self {
        GeneratorSpec {
            tag,
            sizes,
            count,
            cost: None,
            attempts_per_instance: 1000,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    /// Instance, its grounding and its optimal cost.
    pub instances: Vec<(InstanceDef, GroundTask, u32)>,
    /// Candidates discarded as unsolvable, too hard or outside the cost range.
    pub rejected: usize,
    /// Requested but not produced within the attempt budget.
    pub shortfall: usize,
}

/// Sizes cycle over `spec.sizes` so every size gets an equal share.
pub fn generate_instances(spec: &GeneratorSpec, seed: u64) -> Result<Generated, crate::Error> {
    let min = min_size(spec.tag);
    if *spec.sizes.start() < min || spec.sizes.is_empty() {
        return Err(crate::Error::Config(format!(
            "{} needs sizes of at least {min}, got {}..={}",
            spec.tag,
            spec.sizes.start(),
            spec.sizes.end()
        )));
    }
    let domain = spec.tag.domain();
    let sizes: Vec<usize> = spec.sizes.clone().collect();
    let mut out = Generated {
        instances: Vec::new(),
        rejected: 0,
        shortfall: 0,
    };
    for i in 0..spec.count {
        let size = sizes[i % sizes.len()];
        let mut rng = stream(seed, &format!("instances/{}/{i}", spec.tag));
        let mut done = false;
        for _ in 0..spec.attempts_per_instance {
            let name = format!("{}-{size}-{i:03}", spec.tag);
            let Some(mut inst) = candidate(spec.tag, size, &mut rng) else {
                out.rejected += 1;
                continue;
            };
            inst.name = name;
            inst.domain = domain.name.clone();
            // Validate through the text form, exactly as a saved file is read.
            let inst = parse_instance(&inst.to_string(), &domain)?;
            let task = ground(&domain, &inst)?;
            let cost = match astar_with(&task, &task.initial, spec.search).outcome {
                SearchOutcome::Solved(p) => p.cost(),
                _ => {
                    out.rejected += 1;
                    continue;
                }
            };
            if spec.cost.as_ref().is_some_and(|r| !r.contains(&cost)) {
                out.rejected += 1;
                continue;
            }
            out.instances.push((inst, task, cost));
            done = true;
            break;
        }
        if !done {
            out.shortfall += 1;
        }
    }
    Ok(out)
}

pub fn min_size(tag: DomainTag) -> usize {
    match tag {
        DomainTag::BlocksClear | DomainTag::BlocksOn => 2,
        DomainTag::Gripper => 1,
        _ => 2,
    }
}

fn candidate(tag: DomainTag, size: usize, rng: &mut impl Rng) -> Option<InstanceDef> {
    match tag {
        DomainTag::BlocksClear => blocks(size, false, rng),
        DomainTag::BlocksOn => blocks(size, true, rng),
        DomainTag::Gripper => Some(gripper(size, rng)),
        DomainTag::Transport => Some(transport(size, rng)),
        DomainTag::Visitall => Some(visitall(size, rng)),
        DomainTag::Vacuum => Some(vacuum(size, rng.random_range(1..=8), false, rng)),
        DomainTag::VacuumR => Some(vacuum(size, rng.random_range(1..=5), false, rng)),
        DomainTag::VacuumM => Some(vacuum(size, rng.random_range(1..=5), true, rng)),
        DomainTag::Rovers => Some(rovers(size, rng)),
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn atom(p: &str, args: &[&String]) -> Atom {
    Atom {
        predicate: p.to_string(),
        args: args.iter().map(|s| s.to_string()).collect(),
    }
}

fn shell(objects: Vec<String>, init: Vec<Atom>, goal: Vec<Atom>) -> InstanceDef {
    InstanceDef {
        name: String::new(),
        domain: String::new(),
        objects,
        init,
        goal,
    }
}

/// Random connected graph: a spanning tree plus about `n/3` extra edges.
/// Each new vertex attaches to one of the `window` vertices added just
/// before it, so small windows give long, thin graphs. Undirected, as
/// index pairs with `a < b`.
fn connected_graph(n: usize, window: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(i.saturating_sub(window)..i);
        let (a, b) = (order[i], order[j]);
        edges.push((a.min(b), a.max(b)));
    }
    for _ in 0..n / 3 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && !edges.contains(&(a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    edges
}

fn both_ways(
    p: &str,
    prefix: &[&String],
    objs: &[String],
    edges: &[(usize, usize)],
    out: &mut Vec<Atom>,
) {
    for &(a, b) in edges {
        for (x, y) in [(a, b), (b, a)] {
            let mut args: Vec<&String> = prefix.to_vec();
            args.push(&objs[x]);
            args.push(&objs[y]);
            out.push(atom(p, &args));
        }
    }
}

fn blocks(n: usize, on_goal: bool, rng: &mut impl Rng) -> Option<InstanceDef> {
    let objs = names("b", n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut towers: Vec<Vec<usize>> = Vec::new();
    for b in order {
        let t = rng.random_range(0..=towers.len());
        if t == towers.len() {
            towers.push(vec![b]);
        } else {
            towers[t].push(b);
        }
    }
    let mut init = vec![Atom::new("armempty", &[])];
    for t in &towers {
        init.push(atom("ontable", &[&objs[t[0]]]));
        for w in t.windows(2) {
            init.push(atom("on", &[&objs[w[1]], &objs[w[0]]]));
        }
        init.push(atom("clear", &[&objs[*t.last().unwrap()]]));
    }
    let goal = if on_goal {
        let x = rng.random_range(0..n);
        let y = (x + rng.random_range(1..n)) % n;
        let g = atom("on", &[&objs[x], &objs[y]]);
        if init.contains(&g) {
            return None;
        }
        g
    } else {
        let covered: Vec<usize> = towers
            .iter()
            .flat_map(|t| t[..t.len() - 1].iter().copied())
            .collect();
        if covered.is_empty() {
            return None;
        }
        atom(
            "clear",
            &[&objs[covered[rng.random_range(0..covered.len())]]],
        )
    };
    Some(shell(objs, init, vec![goal]))
}

fn gripper(balls: usize, rng: &mut impl Rng) -> InstanceDef {
    let rooms = vec!["rooma".to_string(), "roomb".to_string()];
    let grippers = vec!["left".to_string(), "right".to_string()];
    let bs = names("ball", balls);
    let mut init = Vec::new();
    for r in &rooms {
        init.push(atom("room", &[r]));
    }
    for g in &grippers {
        init.push(atom("gripper", &[g]));
        init.push(atom("free", &[g]));
    }
    let mut at = Vec::new();
    for b in &bs {
        let r = rng.random_range(0..2);
        init.push(atom("ball", &[b]));
        init.push(atom("at", &[b, &rooms[r]]));
        at.push(r);
    }
    init.push(atom("at-robby", &[&rooms[rng.random_range(0..2)]]));
    let target = rng.random_range(0..balls);
    let goal = atom("at", &[&bs[target], &rooms[1 - at[target]]]);
    let mut objects = rooms;
    objects.extend(grippers);
    objects.extend(bs);
    shell(objects, init, vec![goal])
}

fn transport(n: usize, rng: &mut impl Rng) -> InstanceDef {
    let locs = names("l", n);
    let trucks = names("t", 1 + n / 4);
    let packages = names("p", 1 + n / 3);
    let sizes = names("s", 4);
    let mut init = Vec::new();
    both_ways("road", &[], &locs, &connected_graph(n, n, rng), &mut init);
    for w in sizes.windows(2) {
        init.push(atom("capacity-predecessor", &[&w[0], &w[1]]));
    }
    for t in &trucks {
        init.push(atom("vehicle", &[t]));
        init.push(atom("at", &[t, &locs[rng.random_range(0..n)]]));
        init.push(atom("capacity", &[t, &sizes[rng.random_range(1..=3)]]));
    }
    let mut start = Vec::new();
    for p in &packages {
        let l = rng.random_range(0..n);
        init.push(atom("package", &[p]));
        init.push(atom("at", &[p, &locs[l]]));
        start.push(l);
    }
    let dest = (start[0] + rng.random_range(1..n)) % n;
    let goal = atom("at", &[&packages[0], &locs[dest]]);
    let mut objects = locs;
    objects.extend(trucks);
    objects.extend(packages);
    objects.extend(sizes);
    shell(objects, init, vec![goal])
}

fn visitall(n: usize, rng: &mut impl Rng) -> InstanceDef {
    let vs = names("v", n);
    let mut init = Vec::new();
    both_ways(
        "connected",
        &[],
        &vs,
        &connected_graph(n, n, rng),
        &mut init,
    );
    let start = rng.random_range(0..n);
    let target = (start + rng.random_range(1..n)) % n;
    init.push(atom("at-robot", &[&vs[start]]));
    init.push(atom("visited", &[&vs[start]]));
    let goal = atom("visited", &[&vs[target]]);
    shell(vs, init, vec![goal])
}

const THIN: usize = 2;

/// Shared map: every robot traverses one graph over all cells. Otherwise
/// each robot gets its own connected map over a random subset of at least
/// half the cells and starts inside it; draws where no robot can reach the
/// dirt are left to the search filter.
fn vacuum(n: usize, robots: usize, shared: bool, rng: &mut impl Rng) -> InstanceDef {
    let cells = names("c", n);
    let rs = names("r", robots);
    let mut init = Vec::new();
    let common = connected_graph(n, THIN, rng);
    for r in &rs {
        if shared {
            both_ways("adjacent", &[r], &cells, &common, &mut init);
            init.push(atom("at", &[r, &cells[rng.random_range(0..n)]]));
            continue;
        }
        let mut subset: Vec<usize> = (0..n).collect();
        subset.shuffle(rng);
        subset.truncate(rng.random_range(n.div_ceil(2).max(2)..=n));
        let local = connected_graph(subset.len(), THIN, rng);
        let edges: Vec<(usize, usize)> =
            local.iter().map(|&(a, b)| (subset[a], subset[b])).collect();
        both_ways("adjacent", &[r], &cells, &edges, &mut init);
        init.push(atom(
            "at",
            &[r, &cells[subset[rng.random_range(0..subset.len())]]],
        ));
    }
    let dirt = &cells[rng.random_range(0..n)];
    init.push(atom("dirty", &[dirt]));
    let goal = atom("cleaned", &[dirt]);
    let mut objects = rs;
    objects.extend(cells);
    shell(objects, init, vec![goal])
}

/// One or two rovers with their own traversal maps; the lander is visible
/// from its own waypoint and its map neighbours. Unsolvable draws are left
/// to the search filter.
fn rovers(n: usize, rng: &mut impl Rng) -> InstanceDef {
    let ws = names("w", n);
    let rs = names("r", rng.random_range(1..=2));
    let mut init = Vec::new();
    let lander = rng.random_range(0..n);
    init.push(atom("at-lander", &[&ws[lander]]));
    let soil = rng.random_range(0..n);
    init.push(atom("at-soil-sample", &[&ws[soil]]));
    let visible = connected_graph(n, n, rng);
    init.push(atom("visible", &[&ws[lander], &ws[lander]]));
    for &(a, b) in &visible {
        if a == lander || b == lander {
            both_ways("visible", &[], &ws, &[(a, b)], &mut init);
        }
    }
    for r in &rs {
        init.push(atom("rover", &[r]));
        init.push(atom("equipped-soil", &[r]));
        init.push(atom("empty-store", &[r]));
        init.push(atom("at", &[r, &ws[rng.random_range(0..n)]]));
        both_ways(
            "can-traverse",
            &[r],
            &ws,
            &connected_graph(n, n, rng),
            &mut init,
        );
    }
    for w in &ws {
        init.push(atom("waypoint", &[w]));
    }
    let goal = atom("communicated-soil", &[&ws[soil]]);
    let mut objects = rs;
    objects.extend(ws);
    shell(objects, init, vec![goal])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{has_oracle, vstar, OracleValue};

    #[test]
    fn every_family_generates_solvable_instances() {
        for tag in DomainTag::ALL {
            let spec = GeneratorSpec::new(tag, 3..=4, 4);
            let g = generate_instances(&spec, 11).unwrap();
            assert_eq!(g.shortfall, 0, "{tag}");
            assert_eq!(g.instances.len(), 4, "{tag}");
            for (inst, task, cost) in &g.instances {
                assert!(!task.is_goal(&task.initial), "{tag} {}", inst.name);
                assert!(*cost >= 1);
                if has_oracle(tag) {
                    assert_eq!(
                        vstar(tag, task, &task.initial).unwrap(),
                        OracleValue::Defined(*cost),
                        "{tag}"
                    );
                }
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = GeneratorSpec::new(DomainTag::Transport, 4..=6, 3);
        let a = generate_instances(&spec, 5).unwrap();
        let b = generate_instances(&spec, 5).unwrap();
        let text = |g: &Generated| {
            g.instances
                .iter()
                .map(|(i, _, _)| i.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(text(&a), text(&b));
    }

    #[test]
    fn cost_filter_is_respected() {
        let mut spec = GeneratorSpec::new(DomainTag::Visitall, 6..=6, 5);
        spec.cost = Some(2..=3);
        let g = generate_instances(&spec, 2).unwrap();
        assert!(g.instances.iter().all(|(_, _, c)| (2..=3).contains(c)));
    }

    #[test]
    fn undersized_request_is_a_config_error() {
        let spec = GeneratorSpec::new(DomainTag::BlocksOn, 1..=3, 1);
        assert!(generate_instances(&spec, 0).is_err());
    }
}
