//! Optimally labeled state datasets: random walks from the initial state,
//! A* relabeling along optimal trajectories, label balancing, and a
//! line-oriented file format.
//!
//! Dataset file:
//!
//! ```text
//! relvalue-dataset<TAB>v1<TAB>domain=<tag><TAB>seed=<u64><TAB>cap=<usize>
//! @instance<TAB><id><TAB><objects, space separated><TAB><goal atoms>
//! <id><TAB><label><TAB><sorted atoms><TAB>walk=<i>,pos=<j>
//! ```
//!
//! Atoms are written as `pred(a,b)` tokens separated by single spaces.

mod generators;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use generators::{generate_instances, Generated, GeneratorSpec};

use crate::domains::DomainTag;
use crate::gnn::{encode_atoms, GnnError, RelationalStructure};
use crate::pddl::{ground, parse_instance, Atom, DomainDef, GroundTask, InstanceDef, State};
use crate::rng::{stream, stream_seed};
use crate::search::{astar_with, SearchConfig, SearchOutcome};

pub const FORMAT_VERSION: &str = "v1";
pub const DEFAULT_CAP: usize = 40_000;
pub const DEFAULT_WALK_LENGTH: usize = 200;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("instance `{0}` is not declared in the dataset")]
    UnknownInstance(String),
    #[error(transparent)]
    Encode(#[from] GnnError),
}

fn format_err(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Format {
        line,
        message: message.into(),
    }
}

/// `⟨state, optimal cost-to-go⟩` with provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub instance: String,
    pub label: u32,
    /// Sorted true atoms.
    pub atoms: Vec<Atom>,
    /// Position of the labeled walk state in its walk.
    pub walk: u32,
    /// Position along the optimal trajectory from that walk state.
    pub pos: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRecord {
    pub id: String,
    pub objects: Vec<String>,
    pub goal: Vec<Atom>,
}

impl InstanceRecord {
    pub fn from_task(id: &str, task: &GroundTask) -> Self {
        let mut goal: Vec<Atom> = task.goal.iter().map(|&g| task.atom(g)).collect();
        goal.sort();
        InstanceRecord {
            id: id.to_string(),
            objects: task.objects.clone(),
            goal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    pub domain: DomainTag,
    pub seed: u64,
    pub cap: usize,
    pub instances: Vec<InstanceRecord>,
    pub samples: Vec<LabeledSample>,
}

impl LabeledDataset {
    pub fn empty(domain: DomainTag, seed: u64) -> Self {
        LabeledDataset {
            domain,
            seed,
            cap: DEFAULT_CAP,
            instances: Vec::new(),
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label_counts(&self) -> BTreeMap<u32, usize> {
        label_counts(&self.samples)
    }

    pub fn instance(&self, id: &str) -> Option<&InstanceRecord> {
        self.instances.iter().find(|r| r.id == id)
    }

    /// The network input of every sample, in sample order.
    pub fn structures(&self, domain: &DomainDef) -> Result<Vec<RelationalStructure>, DatasetError> {
        let index: HashMap<&str, &InstanceRecord> =
            self.instances.iter().map(|r| (r.id.as_str(), r)).collect();
        self.samples
            .iter()
            .map(|s| {
                let rec = index
                    .get(s.instance.as_str())
                    .ok_or_else(|| DatasetError::UnknownInstance(s.instance.clone()))?;
                Ok(encode_atoms(domain, &rec.objects, &s.atoms, &rec.goal)?)
            })
            .collect()
    }

    /// One grounding per instance, valid for every sample of it: the
    /// initial state is the union of the samples' atoms, which makes every
    /// sample's atoms relaxed-reachable. Paired with each sample's state,
    /// in sample order.
    pub fn grounded_samples(
        &self,
        domain: &DomainDef,
    ) -> Result<(Vec<GroundTask>, Vec<(usize, State)>), crate::Error> {
        let mut union: BTreeMap<&str, std::collections::BTreeSet<&Atom>> = BTreeMap::new();
        for s in &self.samples {
            union
                .entry(s.instance.as_str())
                .or_default()
                .extend(s.atoms.iter());
        }
        let mut tasks = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for (id, atoms) in union {
            let rec = self
                .instance(id)
                .ok_or_else(|| DatasetError::UnknownInstance(id.to_string()))?;
            let inst = InstanceDef {
                name: rec.id.clone(),
                domain: domain.name.clone(),
                objects: rec.objects.clone(),
                init: atoms.into_iter().cloned().collect(),
                goal: rec.goal.clone(),
            };
            let inst = parse_instance(&inst.to_string(), domain)?;
            slot.insert(id, tasks.len());
            tasks.push(ground(domain, &inst)?);
        }
        let states = self
            .samples
            .iter()
            .map(|s| {
                let t = slot[s.instance.as_str()];
                Ok((t, tasks[t].state_from_atoms(&s.atoms)?))
            })
            .collect::<Result<Vec<_>, crate::Error>>()?;
        Ok((tasks, states))
    }

    /// Rebuilds the planning task whose initial state is sample `i`.
    pub fn task_for(&self, domain: &DomainDef, i: usize) -> Result<GroundTask, crate::Error> {
        let s = &self.samples[i];
        let rec = self
            .instance(&s.instance)
            .ok_or_else(|| DatasetError::UnknownInstance(s.instance.clone()))?;
        let inst = InstanceDef {
            name: rec.id.clone(),
            domain: domain.name.clone(),
            objects: rec.objects.clone(),
            init: s.atoms.clone(),
            goal: rec.goal.clone(),
        };
        // Round-trip through the text form so the atoms are validated
        // against the domain before grounding.
        let inst = parse_instance(&inst.to_string(), domain)?;
        Ok(ground(domain, &inst)?)
    }
}

pub fn label_counts(samples: &[LabeledSample]) -> BTreeMap<u32, usize> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(s.label).or_insert(0) += 1;
    }
    m
}

/// `s_1 = initial`, then uniformly random applicable actions; stops early
/// at a state without applicable actions.
pub fn random_walk(task: &GroundTask, length: usize, rng: &mut impl Rng) -> Vec<State> {
    assert!(length >= 1, "walk length must be positive");
    let mut walk = vec![task.initial.clone()];
    while walk.len() < length {
        let current = walk.last().unwrap();
        let actions = task.applicable_actions(current);
        if actions.is_empty() {
            break;
        }
        let a = actions[rng.random_range(0..actions.len())];
        walk.push(task.successor(current, a));
    }
    walk
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    Unsolvable,
    BudgetExhausted,
}

/// A walk state that produced no samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipRecord {
    pub instance: String,
    pub walk: u32,
    pub reason: SkipReason,
}

/// Labels every walk state by an optimal trajectory `s'_1..s'_m` to the
/// goal (the goal state included) and emits `⟨s'_j, m−j⟩`. States already
/// labeled are not searched again; duplicates keep their minimum label.
pub fn label_walk(
    task: &GroundTask,
    instance: &str,
    walk: &[State],
    search: SearchConfig,
) -> (Vec<LabeledSample>, Vec<SkipRecord>) {
    let mut labels: HashMap<State, usize> = HashMap::new();
    let mut out: Vec<(State, u32, u32, u32)> = Vec::new();
    let mut skipped = Vec::new();
    for (i, s) in walk.iter().enumerate() {
        if labels.contains_key(s) {
            continue;
        }
        let plan = match astar_with(task, s, search).outcome {
            SearchOutcome::Solved(p) => p,
            SearchOutcome::Unsolvable => {
                skipped.push(SkipRecord {
                    instance: instance.to_string(),
                    walk: i as u32,
                    reason: SkipReason::Unsolvable,
                });
                continue;
            }
            SearchOutcome::BudgetExhausted => {
                skipped.push(SkipRecord {
                    instance: instance.to_string(),
                    walk: i as u32,
                    reason: SkipReason::BudgetExhausted,
                });
                continue;
            }
        };
        let m = plan.states.len() - 1;
        for (j, t) in plan.states.into_iter().enumerate() {
            let label = (m - j) as u32;
            match labels.get(&t) {
                Some(&k) => {
                    if label < out[k].1 {
                        out[k] = (t, label, i as u32, j as u32);
                    }
                }
                None => {
                    labels.insert(t.clone(), out.len());
                    out.push((t, label, i as u32, j as u32));
                }
            }
        }
    }
    let samples = out
        .into_iter()
        .map(|(s, label, walk, pos)| {
            let mut atoms = task.decode(&s);
            atoms.sort();
            LabeledSample {
                instance: instance.to_string(),
                label,
                atoms,
                walk,
                pos,
            }
        })
        .collect();
    (samples, skipped)
}

/// Keeps at most `cap / #labels` samples per label (the remainder goes to
/// the smallest labels), sampled without replacement. Relative order of the
/// kept samples is preserved.
pub fn balance(samples: Vec<LabeledSample>, cap: usize, rng: &mut impl Rng) -> Vec<LabeledSample> {
    let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_label.entry(s.label).or_default().push(i);
    }
    if by_label.is_empty() {
        return samples;
    }
    let labels = by_label.len();
    let (quota, extra) = (cap / labels, cap % labels);
    let mut keep: Vec<usize> = Vec::new();
    for (rank, idx) in by_label.values().enumerate() {
        let q = quota + usize::from(rank < extra);
        if idx.len() <= q {
            keep.extend_from_slice(idx);
        } else {
            keep.extend(sample(rng, idx.len(), q).into_iter().map(|j| idx[j]));
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<LabeledSample>> = samples.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataConfig {
    pub walk_length: usize,
    pub cap: usize,
    pub seed: u64,
    pub search: SearchConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            walk_length: DEFAULT_WALK_LENGTH,
            cap: DEFAULT_CAP,
            seed: 0,
            search: SearchConfig::default(),
        }
    }
}

/// One walk per instance, labeled and deduplicated per instance, then
/// balanced over the union. Instances are labeled in parallel; each uses
/// its own random stream, so the result does not depend on scheduling.
pub fn build_dataset(
    tag: DomainTag,
    tasks: &[(String, GroundTask)],
    config: DataConfig,
) -> (LabeledDataset, Vec<SkipRecord>) {
    let per_instance: Vec<(Vec<LabeledSample>, Vec<SkipRecord>)> = tasks
        .par_iter()
        .map(|(id, task)| {
            let mut rng = stream(config.seed, &format!("walks/{id}"));
            let walk = random_walk(task, config.walk_length, &mut rng);
            label_walk(task, id, &walk, config.search)
        })
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (s, k) in per_instance {
        samples.extend(s);
        skipped.extend(k);
    }
    let samples = balance(samples, config.cap, &mut stream(config.seed, "balance"));
    let dataset = LabeledDataset {
        domain: tag,
        seed: config.seed,
        cap: config.cap,
        instances: tasks
            .iter()
            .map(|(id, t)| InstanceRecord::from_task(id, t))
            .collect(),
        samples,
    };
    (dataset, skipped)
}

/// Outcome of recomputing labels from scratch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelCheck {
    pub checked: usize,
    /// `(sample index, stored label, recomputed cost)`.
    pub mismatches: Vec<(usize, u32, Option<u32>)>,
}

/// Re-grounds the instance of each chosen sample with the sample as
/// initial state and compares the stored label with a fresh optimal cost.
/// Checks `fraction` of the samples (at least one when non-empty).
pub fn verify_labels(
    domain: &DomainDef,
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<LabelCheck, crate::Error> {
    let n = ds.samples.len();
    if n == 0 {
        return Ok(LabelCheck::default());
    }
    let want = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    let mut chosen = sample(&mut stream(seed, "verify"), n, want).into_vec();
    chosen.sort_unstable();
    let mut check = LabelCheck::default();
    for i in chosen {
        let task = ds.task_for(domain, i)?;
        let cost = match astar_with(&task, &task.initial, SearchConfig::default()).outcome {
            SearchOutcome::Solved(p) => Some(p.cost()),
            _ => None,
        };
        check.checked += 1;
        if cost != Some(ds.samples[i].label) {
            check.mismatches.push((i, ds.samples[i].label, cost));
        }
    }
    Ok(check)
}

fn atoms_text(atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_atom(token: &str, line: usize) -> Result<Atom, DatasetError> {
    let (pred, rest) = token
        .split_once('(')
        .ok_or_else(|| format_err(line, format!("bad atom `{token}`")))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| format_err(line, format!("bad atom `{token}`")))?;
    if pred.is_empty() {
        return Err(format_err(line, format!("bad atom `{token}`")));
    }
    Ok(Atom {
        predicate: pred.to_string(),
        args: if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(str::to_string).collect()
        },
    })
}

fn parse_atoms(text: &str, line: usize) -> Result<Vec<Atom>, DatasetError> {
    text.split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| parse_atom(t, line))
        .collect()
}

pub fn write_dataset(mut w: impl Write, ds: &LabeledDataset) -> Result<(), DatasetError> {
    let mut out = String::new();
    writeln!(
        out,
        "relvalue-dataset\t{FORMAT_VERSION}\tdomain={}\tseed={}\tcap={}",
        ds.domain, ds.seed, ds.cap
    )
    .unwrap();
    for r in &ds.instances {
        writeln!(
            out,
            "@instance\t{}\t{}\t{}",
            r.id,
            r.objects.join(" "),
            atoms_text(&r.goal)
        )
        .unwrap();
    }
    for s in &ds.samples {
        writeln!(
            out,
            "{}\t{}\t{}\twalk={},pos={}",
            s.instance,
            s.label,
            atoms_text(&s.atoms),
            s.walk,
            s.pos
        )
        .unwrap();
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_dataset(r: impl BufRead) -> Result<LabeledDataset, DatasetError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(1, "missing header"))??;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 5 || fields[0] != "relvalue-dataset" {
        return Err(format_err(1, "not a dataset header"));
    }
    if fields[1] != FORMAT_VERSION {
        return Err(format_err(
            1,
            format!("unsupported version `{}`", fields[1]),
        ));
    }
    let value = |f: &str, key: &str| -> Result<String, DatasetError> {
        f.strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| format_err(1, format!("expected `{key}=`")))
    };
    let domain: DomainTag = value(fields[2], "domain")?
        .parse()
        .map_err(|e: String| format_err(1, e))?;
    let seed: u64 = value(fields[3], "seed")?
        .parse()
        .map_err(|_| format_err(1, "bad seed"))?;
    let cap: usize = value(fields[4], "cap")?
        .parse()
        .map_err(|_| format_err(1, "bad cap"))?;
    let mut ds = LabeledDataset {
        domain,
        seed,
        cap,
        instances: Vec::new(),
        samples: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols[0] == "@instance" {
            if cols.len() != 4 {
                return Err(format_err(n, "instance line needs 4 columns"));
            }
            ds.instances.push(InstanceRecord {
                id: cols[1].to_string(),
                objects: cols[2]
                    .split(' ')
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
                goal: parse_atoms(cols[3], n)?,
            });
            continue;
        }
        if cols.len() != 4 {
            return Err(format_err(
                n,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let label = cols[1]
            .parse()
            .map_err(|_| format_err(n, format!("bad label `{}`", cols[1])))?;
        let (walk, pos) = cols[3]
            .strip_prefix("walk=")
            .and_then(|r| r.split_once(",pos="))
            .and_then(|(w, p)| Some((w.parse().ok()?, p.parse().ok()?)))
            .ok_or_else(|| format_err(n, format!("bad provenance `{}`", cols[3])))?;
        if ds.instance(cols[0]).is_none() {
            return Err(format_err(n, format!("undeclared instance `{}`", cols[0])));
        }
        ds.samples.push(LabeledSample {
            instance: cols[0].to_string(),
            label,
            atoms: parse_atoms(cols[2], n)?,
            walk,
            pos,
        });
    }
    Ok(ds)
}

pub fn save_dataset(path: &Path, ds: &LabeledDataset) -> Result<(), DatasetError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_dataset(&mut w, ds)?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset, DatasetError> {
    read_dataset(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Seed for the `i`-th item of a named stream, for components that need
/// per-item seeds rather than a generator.
pub fn item_seed(master: u64, name: &str, i: usize) -> u64 {
    stream_seed(master, &format!("{name}/{i}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains;
    use crate::pddl::load_task;
    use crate::rng::seeded;
    use crate::search::bfs_cost;

    fn task(d: &str, i: &str) -> GroundTask {
        load_task(d, i).unwrap()
    }

    fn sample_with(label: u32, i: usize) -> LabeledSample {
        LabeledSample {
            instance: "x".into(),
            label,
            atoms: vec![Atom::new("p", &[&format!("o{i}")])],
            walk: i as u32,
            pos: 0,
        }
    }

    #[test]
    fn walk_of_length_one_is_initial() {
        let t = task(
            domains::BLOCKS,
            include_str!("../../fixtures/instances/blocks-clear-4.pddl"),
        );
        assert_eq!(random_walk(&t, 1, &mut seeded(0)), vec![t.initial.clone()]);
    }

    #[test]
    fn walks_are_reproducible_and_valid() {
        let t = task(
            domains::GRIPPER,
            include_str!("../../fixtures/instances/gripper-4.pddl"),
        );
        let a = random_walk(&t, 30, &mut seeded(4));
        assert_eq!(a, random_walk(&t, 30, &mut seeded(4)));
        for w in a.windows(2) {
            assert!(t.successors(&w[0]).iter().any(|(_, s)| *s == w[1]));
        }
    }

    #[test]
    fn walk_stops_without_applicable_actions() {
        let t = task(
            domains::VISITALL,
            include_str!("../../fixtures/instances/visitall-path.pddl"),
        );
        let w = random_walk(&t, 50, &mut seeded(1));
        assert_eq!(w.len(), 50);
        let dead = task(
            include_str!("../../fixtures/misc/chain-domain.pddl"),
            "(define (problem p) (:domain chain) (:objects) (:init (g)) (:goal (g)))",
        );
        assert_eq!(random_walk(&dead, 10, &mut seeded(1)).len(), 1);
    }

    #[test]
    fn labels_along_plan_count_down_to_goal() {
        let t = task(
            domains::BLOCKS,
            include_str!("../../fixtures/instances/blocks-clear-4.pddl"),
        );
        let (samples, skipped) = label_walk(
            &t,
            "i",
            std::slice::from_ref(&t.initial),
            SearchConfig::default(),
        );
        assert!(skipped.is_empty());
        assert_eq!(
            samples.iter().map(|s| s.label).collect::<Vec<_>>(),
            vec![3, 2, 1, 0]
        );
        assert_eq!(
            samples.iter().map(|s| s.pos).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn goal_walk_state_gives_one_zero_sample() {
        let t = task(
            domains::BLOCKS,
            include_str!("../../fixtures/instances/blocks-clear-3-table.pddl"),
        );
        let (samples, _) = label_walk(
            &t,
            "i",
            std::slice::from_ref(&t.initial),
            SearchConfig::default(),
        );
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].label, 0);
    }

    #[test]
    fn unsolvable_walk_state_is_logged() {
        let t = task(
            domains::VACUUM,
            include_str!("../../fixtures/instances/vacuum-unreachable.pddl"),
        );
        let (samples, skipped) = label_walk(
            &t,
            "u",
            std::slice::from_ref(&t.initial),
            SearchConfig::default(),
        );
        assert!(samples.is_empty());
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].reason, SkipReason::Unsolvable);
    }

    #[test]
    fn walk_labels_match_breadth_first_costs() {
        let t = task(
            domains::GRIPPER,
            include_str!("../../fixtures/instances/gripper-4.pddl"),
        );
        let walk = random_walk(&t, 40, &mut seeded(9));
        let (samples, _) = label_walk(&t, "g", &walk, SearchConfig::default());
        let mut seen = std::collections::HashSet::new();
        for s in &samples {
            let state = t.state_from_atoms(&s.atoms).unwrap();
            assert!(seen.insert(state.clone()), "duplicate state");
            assert_eq!(bfs_cost(&t, &state, 1_000_000).unwrap(), Some(s.label));
        }
    }

    #[test]
    fn balance_examples() {
        let many: Vec<LabeledSample> = (0..300).map(|i| sample_with((i % 3) as u32, i)).collect();
        let b = balance(many, 150, &mut seeded(0));
        assert_eq!(
            label_counts(&b).values().copied().collect::<Vec<_>>(),
            vec![50, 50, 50]
        );

        let one: Vec<LabeledSample> = (0..10).map(|i| sample_with(4, i)).collect();
        assert_eq!(balance(one.clone(), 7, &mut seeded(0)).len(), 7);
        assert_eq!(balance(one, 70, &mut seeded(0)).len(), 10);

        let mut mixed: Vec<LabeledSample> = (0..5).map(|i| sample_with(0, i)).collect();
        mixed.extend((0..200).map(|i| sample_with(1, i)));
        let b = balance(mixed, 100, &mut seeded(0));
        assert_eq!(label_counts(&b)[&0], 5);
        assert_eq!(label_counts(&b)[&1], 50);
    }

    #[test]
    fn balance_remainder_goes_to_smallest_labels() {
        let many: Vec<LabeledSample> = (0..300).map(|i| sample_with((i % 3) as u32, i)).collect();
        let b = balance(many, 152, &mut seeded(0));
        assert_eq!(
            label_counts(&b).values().copied().collect::<Vec<_>>(),
            vec![51, 51, 50]
        );
    }

    fn small_dataset() -> LabeledDataset {
        let t = task(
            domains::BLOCKS,
            include_str!("../../fixtures/instances/blocks-clear-5.pddl"),
        );
        let tasks = vec![("b5".to_string(), t)];
        let (ds, _) = build_dataset(
            DomainTag::BlocksClear,
            &tasks,
            DataConfig {
                walk_length: 20,
                seed: 3,
                ..DataConfig::default()
            },
        );
        ds
    }

    #[test]
    fn dataset_round_trip() {
        let ds = small_dataset();
        assert!(!ds.is_empty());
        let mut bytes = Vec::new();
        write_dataset(&mut bytes, &ds).unwrap();
        let back = read_dataset(&bytes[..]).unwrap();
        assert_eq!(back, ds);

        let empty = LabeledDataset::empty(DomainTag::Gripper, 1);
        let mut bytes = Vec::new();
        write_dataset(&mut bytes, &empty).unwrap();
        assert_eq!(read_dataset(&bytes[..]).unwrap(), empty);
    }

    #[test]
    fn datasets_are_byte_reproducible() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_dataset(&mut a, &small_dataset()).unwrap();
        write_dataset(&mut b, &small_dataset()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_header_is_rejected() {
        let err = read_dataset(&b"relvalue-dataset\tv9\tdomain=gripper\tseed=1\tcap=5\n"[..])
            .unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 1, .. }));
        assert!(read_dataset(&b"garbage\n"[..]).is_err());
        assert!(read_dataset(&b""[..]).is_err());
    }

    #[test]
    fn stored_labels_survive_recomputation() {
        let ds = small_dataset();
        let check = verify_labels(&domains::DomainTag::BlocksClear.domain(), &ds, 1.0, 0).unwrap();
        assert_eq!(check.checked, ds.len());
        assert!(check.mismatches.is_empty(), "{:?}", check.mismatches);
    }
}
