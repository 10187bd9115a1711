//! The relational message-passing value network.
//!
//! A state becomes a relational structure: one relation per domain
//! predicate (its true atoms) and one `p_G` relation per goal predicate
//! (the goal atoms). Every object starts from a `k`-vector whose first half
//! is zero and whose second half is standard normal. Each of `L` rounds,
//! every atom `R(o_1..o_n)` maps the embeddings of its objects through
//! `MLP_R` to one message per argument position; each object aggregates
//! its messages (sum, or LogSumExp as a smooth max; no messages gives zero)
//! and updates with `MLP_U(s_o, agg)`. The readout is
//! `MLP_2(Σ_o MLP_1(s_o))`.
//!
//! 0-ary predicates (e.g. `armempty`) are encoded as a unary relation
//! holding for every object, so they reach all embeddings without a
//! special global node.
//!
//! Every MLP is dense → ReLU → dense with hidden width `k`.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::numeric::{
    glorot_uniform, Checkpoint, Graph, NumericError, ParamId, ParamStore, Tensor, Var,
};
use crate::pddl::{Atom, DomainDef, GroundTask, State};
use crate::rng::seeded;

pub const GOAL_SUFFIX: &str = "_G";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GnnError {
    #[error("relation `{0}` is not in the model vocabulary")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {found}, the model expects {expected}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("object `{0}` is not declared")]
    UnknownObject(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl From<NumericError> for GnnError {
    fn from(e: NumericError) -> Self {
        GnnError::Checkpoint(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    Sum,
    /// LogSumExp at temperature 1.
    SmoothMax,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Sum => "sum",
            Aggregation::SmoothMax => "max",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Aggregation::Sum),
            "max" | "smooth-max" => Ok(Aggregation::SmoothMax),
            _ => Err(format!("unknown aggregation `{s}` (expected sum or max)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMode {
    /// Zero first half, standard normal second half.
    RandomHalf,
    Zero,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::RandomHalf => "random-half",
            InitMode::Zero => "zero",
        }
    }
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random-half" => Ok(InitMode::RandomHalf),
            "zero" => Ok(InitMode::Zero),
            _ => Err(format!("unknown init mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnnConfig {
    /// Embedding dimension; even.
    pub k: usize,
    /// Message-passing rounds `L`.
    pub rounds: usize,
    pub aggregation: Aggregation,
    /// Output dimension.
    pub q: usize,
    pub init: InitMode,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            k: 32,
            rounds: 30,
            aggregation: Aggregation::SmoothMax,
            q: 1,
            init: InitMode::RandomHalf,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        if self.k == 0 || !self.k.is_multiple_of(2) {
            return Err(GnnError::Config(format!(
                "k must be even and positive, got {}",
                self.k
            )));
        }
        if self.rounds == 0 {
            return Err(GnnError::Config("at least one round is required".into()));
        }
        if self.q == 0 {
            return Err(GnnError::Config("output dimension must be positive".into()));
        }
        Ok(())
    }
}

/// Relation names and arities the model has message networks for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    relations: Vec<(String, usize)>,
}

impl Vocabulary {
    /// Sorted by name; duplicates must agree on arity.
    pub fn new(relations: impl IntoIterator<Item = (String, usize)>) -> Result<Self, GnnError> {
        let mut map: BTreeMap<String, usize> = BTreeMap::new();
        for (name, arity) in relations {
            if arity == 0 {
                return Err(GnnError::Config(format!("relation `{name}` has arity 0")));
            }
            if let Some(&a) = map.get(&name) {
                if a != arity {
                    return Err(GnnError::ArityMismatch {
                        relation: name,
                        expected: a,
                        found: arity,
                    });
                }
            }
            map.insert(name, arity);
        }
        Ok(Vocabulary {
            relations: map.into_iter().collect(),
        })
    }

    /// Every domain predicate plus the goal versions of `goal_predicates`.
    pub fn for_domain(domain: &DomainDef, goal_predicates: &[&str]) -> Result<Self, GnnError> {
        let mut rels: Vec<(String, usize)> = domain
            .predicates
            .iter()
            .map(|p| (p.name.clone(), p.arity.max(1)))
            .collect();
        for g in goal_predicates {
            let p = domain
                .predicate(g)
                .ok_or_else(|| GnnError::UnknownRelation(g.to_string()))?;
            rels.push((format!("{}{GOAL_SUFFIX}", p.name), p.arity.max(1)));
        }
        Vocabulary::new(rels)
    }

    /// Domain predicates plus every goal predicate used by any task.
    pub fn from_tasks<'a>(
        tasks: impl IntoIterator<Item = &'a GroundTask>,
    ) -> Result<Self, GnnError> {
        let mut rels = Vec::new();
        for t in tasks {
            for p in &t.domain.predicates {
                rels.push((p.name.clone(), p.arity.max(1)));
            }
            for &g in t.goal.iter() {
                let p = &t.domain.predicates[t.atoms[g as usize].predicate as usize];
                rels.push((format!("{}{GOAL_SUFFIX}", p.name), p.arity.max(1)));
            }
        }
        Vocabulary::new(rels)
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.relations
            .binary_search_by(|(n, _)| n.as_str().cmp(name))
            .ok()
    }

    fn encode(&self) -> String {
        self.relations
            .iter()
            .map(|(n, a)| format!("{n}/{a}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn decode(s: &str) -> Result<Self, GnnError> {
        let bad = || GnnError::Checkpoint(format!("bad vocabulary `{s}`"));
        let rels = s
            .split(',')
            .filter(|x| !x.is_empty())
            .map(|item| {
                let (n, a) = item.rsplit_once('/').ok_or_else(bad)?;
                Ok((n.to_string(), a.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>, GnnError>>()?;
        Vocabulary::new(rels)
    }
}

/// A relation's tuples, flattened (`tuples.len() == count · arity`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub tuples: Vec<u32>,
}

impl Relation {
    pub fn len(&self) -> usize {
        self.tuples.len() / self.arity
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, i: usize) -> &[u32] {
        &self.tuples[i * self.arity..(i + 1) * self.arity]
    }
}

/// Objects plus one tuple set per relation, sorted by relation name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalStructure {
    pub objects: usize,
    pub relations: Vec<Relation>,
}

impl RelationalStructure {
    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    /// Relabels object `o` as `perm[o]`, keeping tuple order.
    pub fn permuted(&self, perm: &[u32]) -> RelationalStructure {
        assert_eq!(perm.len(), self.objects, "permutation length");
        RelationalStructure {
            objects: self.objects,
            relations: self
                .relations
                .iter()
                .map(|r| Relation {
                    name: r.name.clone(),
                    arity: r.arity,
                    tuples: r.tuples.iter().map(|&o| perm[o as usize]).collect(),
                })
                .collect(),
        }
    }
}

/// One relation per domain predicate with the state's true atoms, and one
/// `p_G` relation per goal predicate with the goal atoms.
pub fn encode(task: &GroundTask, state: &State) -> RelationalStructure {
    let n = task.objects.len();
    let preds = &task.domain.predicates;
    let mut rels: BTreeMap<String, Relation> = BTreeMap::new();
    for p in preds {
        rels.insert(
            p.name.clone(),
            Relation {
                name: p.name.clone(),
                arity: p.arity.max(1),
                tuples: Vec::new(),
            },
        );
    }
    let push = |name: String, args: &[u32], rels: &mut BTreeMap<String, Relation>| {
        let r = rels.entry(name.clone()).or_insert_with(|| Relation {
            name,
            arity: args.len().max(1),
            tuples: Vec::new(),
        });
        if args.is_empty() {
            r.tuples.extend(0..n as u32);
        } else {
            r.tuples.extend_from_slice(args);
        }
    };
    for &a in state.atoms() {
        let g = &task.atoms[a as usize];
        push(preds[g.predicate as usize].name.clone(), &g.args, &mut rels);
    }
    for &a in task.goal.iter() {
        let g = &task.atoms[a as usize];
        push(
            format!("{}{GOAL_SUFFIX}", preds[g.predicate as usize].name),
            &g.args,
            &mut rels,
        );
    }
    RelationalStructure {
        objects: n,
        relations: rels.into_values().collect(),
    }
}

/// Same structure as [`encode`], built from named atoms without grounding.
pub fn encode_atoms(
    domain: &DomainDef,
    objects: &[String],
    atoms: &[Atom],
    goal: &[Atom],
) -> Result<RelationalStructure, GnnError> {
    let n = objects.len();
    let index: BTreeMap<&str, u32> = objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.as_str(), i as u32))
        .collect();
    let resolve = |a: &Atom| -> Result<(usize, Vec<u32>), GnnError> {
        let p = domain
            .predicate_index(&a.predicate)
            .ok_or_else(|| GnnError::UnknownRelation(a.predicate.clone()))?;
        let args = a
            .args
            .iter()
            .map(|o| {
                index
                    .get(o.as_str())
                    .copied()
                    .ok_or_else(|| GnnError::UnknownObject(o.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != domain.predicates[p].arity {
            return Err(GnnError::ArityMismatch {
                relation: a.predicate.clone(),
                expected: domain.predicates[p].arity,
                found: args.len(),
            });
        }
        Ok((p, args))
    };
    let mut rels: BTreeMap<String, Relation> = domain
        .predicates
        .iter()
        .map(|p| {
            (
                p.name.clone(),
                Relation {
                    name: p.name.clone(),
                    arity: p.arity.max(1),
                    tuples: Vec::new(),
                },
            )
        })
        .collect();
    for (list, suffix) in [(atoms, ""), (goal, GOAL_SUFFIX)] {
        // Grounded atom order: predicate name, then argument indices.
        let mut resolved = list.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
        resolved.sort_by(|a, b| {
            domain.predicates[a.0]
                .name
                .cmp(&domain.predicates[b.0].name)
                .then_with(|| a.1.cmp(&b.1))
        });
        resolved.dedup();
        for (p, args) in resolved {
            let name = format!("{}{suffix}", domain.predicates[p].name);
            let r = rels.entry(name.clone()).or_insert_with(|| Relation {
                name,
                arity: args.len().max(1),
                tuples: Vec::new(),
            });
            if args.is_empty() {
                r.tuples.extend(0..n as u32);
            } else {
                r.tuples.extend_from_slice(&args);
            }
        }
    }
    Ok(RelationalStructure {
        objects: n,
        relations: rels.into_values().collect(),
    })
}

/// Initial object embeddings (`objects × k`).
pub fn init_embeddings(objects: usize, config: &GnnConfig, seed: u64) -> Tensor {
    let k = config.k;
    let mut t = Tensor::zeros(objects, k);
    if config.init == InitMode::RandomHalf {
        let mut rng = seeded(seed);
        let data = t.data_mut();
        for o in 0..objects {
            for j in k / 2..k {
                data[o * k + j] = StandardNormal.sample(&mut rng);
            }
        }
    }
    t
}

#[derive(Debug, Clone, Copy)]
struct Mlp {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

#[derive(Clone, Copy)]
struct MlpVars {
    w1: Var,
    b1: Var,
    w2: Var,
    b2: Var,
}

impl Mlp {
    fn create(
        store: &mut ParamStore,
        prefix: &str,
        din: usize,
        dh: usize,
        dout: usize,
        rng: &mut crate::rng::Rng,
    ) -> Mlp {
        Mlp {
            w1: store.add(&format!("{prefix}.w1"), glorot_uniform(din, dh, rng)),
            b1: store.add(&format!("{prefix}.b1"), Tensor::zeros(1, dh)),
            w2: store.add(&format!("{prefix}.w2"), glorot_uniform(dh, dout, rng)),
            b2: store.add(&format!("{prefix}.b2"), Tensor::zeros(1, dout)),
        }
    }

    fn lookup(store: &ParamStore, prefix: &str) -> Result<Mlp, GnnError> {
        let get = |s: &str| {
            store
                .id(&format!("{prefix}.{s}"))
                .ok_or_else(|| GnnError::Checkpoint(format!("missing parameter `{prefix}.{s}`")))
        };
        Ok(Mlp {
            w1: get("w1")?,
            b1: get("b1")?,
            w2: get("w2")?,
            b2: get("b2")?,
        })
    }

    fn vars(&self, g: &mut Graph, store: &ParamStore) -> MlpVars {
        MlpVars {
            w1: g.param(store, self.w1),
            b1: g.param(store, self.b1),
            w2: g.param(store, self.w2),
            b2: g.param(store, self.b2),
        }
    }
}

impl MlpVars {
    fn hidden(&self, g: &mut Graph, x: Var) -> Var {
        let h = g.dense(x, self.w1, self.b1);
        g.relu(h)
    }

    fn apply(&self, g: &mut Graph, x: Var) -> Var {
        let h = self.hidden(g, x);
        g.dense(h, self.w2, self.b2)
    }

    fn all(&self) -> [Var; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }
}

/// Trainable parameters plus configuration and vocabulary.
#[derive(Debug, Clone)]
pub struct GnnModel {
    pub config: GnnConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
    messages: Vec<Mlp>,
    update: Mlp,
    readout1: Mlp,
    readout2: Mlp,
}

/// Graph nodes produced by [`GnnModel::build`].
#[derive(Debug, Clone, Copy)]
pub struct Outputs {
    /// Final object embeddings, all structures stacked (`N × k`).
    pub objects: Var,
    /// Per-object `MLP_1` outputs (`N × k`).
    pub per_object: Var,
    /// Summed readout per structure (`B × k`).
    pub layer3: Var,
    /// `MLP_2` hidden activation (`B × k`).
    pub layer4: Var,
    /// Output (`B × q`).
    pub value: Var,
}

/// Readout intermediates of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub objects: Tensor,
    pub per_object: Tensor,
    pub layer3: Vec<f64>,
    pub layer4: Vec<f64>,
    pub layer5: Vec<f64>,
}

impl ForwardTrace {
    /// Layers 3, 4 and 5 concatenated (`2k + q` entries).
    pub fn readout_features(&self) -> Vec<f64> {
        let mut x = self.layer3.clone();
        x.extend_from_slice(&self.layer4);
        x.extend_from_slice(&self.layer5);
        x
    }
}

impl GnnModel {
    pub fn new(config: GnnConfig, vocab: Vocabulary, seed: u64) -> Result<Self, GnnError> {
        config.validate()?;
        let k = config.k;
        let mut rng = seeded(seed);
        let mut params = ParamStore::new();
        let messages = vocab
            .relations
            .iter()
            .map(|(name, arity)| {
                Mlp::create(
                    &mut params,
                    &format!("msg.{name}"),
                    arity * k,
                    k,
                    arity * k,
                    &mut rng,
                )
            })
            .collect();
        let update = Mlp::create(&mut params, "update", 2 * k, k, k, &mut rng);
        let readout1 = Mlp::create(&mut params, "readout1", k, k, k, &mut rng);
        let readout2 = Mlp::create(&mut params, "readout2", k, k, config.q, &mut rng);
        Ok(GnnModel {
            config,
            vocab,
            params,
            messages,
            update,
            readout1,
            readout2,
        })
    }

    /// Maps each structure relation to its vocabulary slot.
    fn resolve(&self, s: &RelationalStructure) -> Result<Vec<(usize, usize)>, GnnError> {
        s.relations
            .iter()
            .enumerate()
            .map(|(ri, r)| {
                let vi = self
                    .vocab
                    .index(&r.name)
                    .ok_or_else(|| GnnError::UnknownRelation(r.name.clone()))?;
                let expected = self.vocab.relations[vi].1;
                if expected != r.arity {
                    return Err(GnnError::ArityMismatch {
                        relation: r.name.clone(),
                        expected,
                        found: r.arity,
                    });
                }
                Ok((vi, ri))
            })
            .collect()
    }

    pub fn check(&self, s: &RelationalStructure) -> Result<(), GnnError> {
        self.resolve(s).map(|_| ())
    }

    /// Records the forward pass of a batch of structures on `g`.
    /// `init[i]` holds the initial embeddings of `structures[i]`.
    /// Returns the outputs and the parameter nodes (for regularization).
    pub fn build(
        &self,
        g: &mut Graph,
        structures: &[&RelationalStructure],
        init: &[Tensor],
    ) -> Result<(Outputs, Vec<Var>), GnnError> {
        assert_eq!(
            structures.len(),
            init.len(),
            "one initial embedding per structure"
        );
        let k = self.config.k;
        let mut offsets = Vec::with_capacity(structures.len());
        let mut total = 0usize;
        for (s, x) in structures.iter().zip(init) {
            assert_eq!(
                x.shape(),
                [s.objects, k],
                "initial embeddings for {} objects",
                s.objects
            );
            offsets.push(total as u32);
            total += s.objects;
        }

        // Per vocabulary relation: argument object ids, flattened over atoms.
        let mut index: Vec<Vec<u32>> = vec![Vec::new(); self.vocab.relations.len()];
        for (s, &off) in structures.iter().zip(&offsets) {
            for (vi, ri) in self.resolve(s)? {
                index[vi].extend(s.relations[ri].tuples.iter().map(|&o| o + off));
            }
        }
        let index: Vec<Rc<[u32]>> = index.into_iter().map(Rc::from).collect();
        let active: Vec<usize> = (0..index.len()).filter(|&i| !index[i].is_empty()).collect();
        let segment: Rc<[u32]> = active
            .iter()
            .flat_map(|&i| index[i].iter().copied())
            .collect();

        let mut all_params = Vec::new();
        let msg_vars: Vec<(usize, MlpVars)> = active
            .iter()
            .map(|&i| {
                let v = self.messages[i].vars(g, &self.params);
                all_params.extend(v.all());
                (i, v)
            })
            .collect();
        let upd = self.update.vars(g, &self.params);
        let ro1 = self.readout1.vars(g, &self.params);
        let ro2 = self.readout2.vars(g, &self.params);
        all_params.extend(upd.all());
        all_params.extend(ro1.all());
        all_params.extend(ro2.all());

        let mut stacked = Vec::with_capacity(total * k);
        for x in init {
            stacked.extend_from_slice(x.data());
        }
        let mut x = g.input(Tensor::new(total, k, stacked));

        for _ in 0..self.config.rounds {
            let agg = if msg_vars.is_empty() {
                g.input(Tensor::zeros(total, k))
            } else {
                let mut parts = Vec::with_capacity(msg_vars.len());
                for (i, mlp) in &msg_vars {
                    let arity = self.vocab.relations[*i].1;
                    let atoms = index[*i].len() / arity;
                    let gathered = g.gather_rows(x, index[*i].clone());
                    let rows = g.reshape(gathered, atoms, arity * k);
                    let m = mlp.apply(g, rows);
                    parts.push(g.reshape(m, atoms * arity, k));
                }
                let messages = if parts.len() == 1 {
                    parts[0]
                } else {
                    g.concat_rows(&parts)
                };
                match self.config.aggregation {
                    Aggregation::Sum => g.segment_sum(messages, segment.clone(), total),
                    Aggregation::SmoothMax => g.segment_logsumexp(messages, segment.clone(), total),
                }
            };
            let cat = g.concat_cols(&[x, agg]);
            x = upd.apply(g, cat);
        }

        let per_object = ro1.apply(g, x);
        let owner: Rc<[u32]> = structures
            .iter()
            .enumerate()
            .flat_map(|(i, s)| std::iter::repeat_n(i as u32, s.objects))
            .collect();
        let layer3 = g.segment_sum(per_object, owner, structures.len());
        let layer4 = ro2.hidden(g, layer3);
        let value = g.dense(layer4, ro2.w2, ro2.b2);
        Ok((
            Outputs {
                objects: x,
                per_object,
                layer3,
                layer4,
                value,
            },
            all_params,
        ))
    }

    pub fn forward_with_init(
        &self,
        s: &RelationalStructure,
        init: &Tensor,
    ) -> Result<(Vec<f64>, ForwardTrace), GnnError> {
        let mut g = Graph::new();
        let (out, _) = self.build(&mut g, &[s], std::slice::from_ref(init))?;
        let trace = ForwardTrace {
            objects: g.value(out.objects).clone(),
            per_object: g.value(out.per_object).clone(),
            layer3: g.value(out.layer3).data().to_vec(),
            layer4: g.value(out.layer4).data().to_vec(),
            layer5: g.value(out.value).data().to_vec(),
        };
        Ok((trace.layer5.clone(), trace))
    }

    /// Forward pass with embeddings drawn from `seed`.
    pub fn forward(
        &self,
        s: &RelationalStructure,
        seed: u64,
    ) -> Result<(Vec<f64>, ForwardTrace), GnnError> {
        self.forward_with_init(s, &init_embeddings(s.objects, &self.config, seed))
    }

    /// First output of each structure; structure `i` uses `seeds[i]`.
    pub fn values(
        &self,
        structures: &[&RelationalStructure],
        seeds: &[u64],
    ) -> Result<Vec<f64>, GnnError> {
        if structures.is_empty() {
            return Ok(Vec::new());
        }
        let init: Vec<Tensor> = structures
            .iter()
            .zip(seeds)
            .map(|(s, &seed)| init_embeddings(s.objects, &self.config, seed))
            .collect();
        let mut g = Graph::new();
        let (out, _) = self.build(&mut g, structures, &init)?;
        let v = g.value(out.value);
        Ok((0..v.rows()).map(|r| v.get(r, 0)).collect())
    }

    /// `|v − label| + coef · Σ|θ|` for one structure.
    pub fn loss(
        &self,
        s: &RelationalStructure,
        label: f64,
        seed: u64,
        l1_coefficient: f64,
    ) -> Result<f64, GnnError> {
        let (v, _) = self.forward(s, seed)?;
        Ok((v[0] - label).abs() + l1_coefficient * self.params.abs_sum())
    }

    pub fn to_checkpoint(&self, seed: u64) -> Checkpoint {
        let c = &self.config;
        Checkpoint {
            seed,
            meta: vec![
                ("k".into(), c.k.to_string()),
                ("rounds".into(), c.rounds.to_string()),
                ("aggregation".into(), c.aggregation.as_str().into()),
                ("q".into(), c.q.to_string()),
                ("init".into(), c.init.as_str().into()),
                ("hidden".into(), c.k.to_string()),
                ("vocabulary".into(), self.vocab.encode()),
            ],
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, GnnError> {
        let field = |key: &str| {
            ckpt.meta(key)
                .ok_or_else(|| GnnError::Checkpoint(format!("missing `{key}`")))
        };
        let num = |key: &str| -> Result<usize, GnnError> {
            field(key)?
                .parse()
                .map_err(|_| GnnError::Checkpoint(format!("bad `{key}`")))
        };
        let config = GnnConfig {
            k: num("k")?,
            rounds: num("rounds")?,
            aggregation: field("aggregation")?
                .parse()
                .map_err(GnnError::Checkpoint)?,
            q: num("q")?,
            init: field("init")?.parse().map_err(GnnError::Checkpoint)?,
        };
        config.validate()?;
        let vocab = Vocabulary::decode(field("vocabulary")?)?;
        let params = ckpt.params.clone();
        let messages = vocab
            .relations
            .iter()
            .map(|(n, _)| Mlp::lookup(&params, &format!("msg.{n}")))
            .collect::<Result<_, _>>()?;
        Ok(GnnModel {
            config,
            messages,
            update: Mlp::lookup(&params, "update")?,
            readout1: Mlp::lookup(&params, "readout1")?,
            readout2: Mlp::lookup(&params, "readout2")?,
            vocab,
            params,
        })
    }
}
