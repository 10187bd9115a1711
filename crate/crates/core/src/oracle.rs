//! Closed-form optimal value functions for single-atom-goal benchmark
//! families, and the path features they are built from.
//!
//! Path features: with targets `T` and edges `E`, `P_0 = T` and
//! `P_k(x) = ∃y E(x,y) ∧ P_{k-1}(y)`. The shortest-path distance of `x` is
//! the least `k` with `P_k(x)`, computed exactly by breadth-first search.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domains::DomainTag;
use crate::pddl::{GroundTask, State};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{family} oracle does not apply: {reason}")]
    DomainMismatch {
        family: &'static str,
        reason: String,
    },
    #[error("no closed-form value function for `{0}`")]
    NoOracle(String),
}

fn mismatch(family: &'static str, reason: impl Into<String>) -> OracleError {
    OracleError::DomainMismatch {
        family,
        reason: reason.into(),
    }
}

/// Extension of a derived unary predicate: a set of object indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DerivedUnary {
    pub name: String,
    pub members: BTreeSet<u32>,
}

impl DerivedUnary {
    pub fn new(name: impl Into<String>, members: impl IntoIterator<Item = u32>) -> Self {
        DerivedUnary {
            name: name.into(),
            members: members.into_iter().collect(),
        }
    }

    pub fn contains(&self, o: u32) -> bool {
        self.members.contains(&o)
    }
}

/// Extension of a binary relation over objects.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeRelation {
    pub name: String,
    pub pairs: BTreeSet<(u32, u32)>,
}

impl EdgeRelation {
    pub fn new(name: impl Into<String>, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        EdgeRelation {
            name: name.into(),
            pairs: pairs.into_iter().collect(),
        }
    }

    /// `E⁻¹(x,y) ⇔ E(y,x)`.
    pub fn inverse(&self) -> EdgeRelation {
        EdgeRelation {
            name: format!("{}^-1", self.name),
            pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distance {
    Finite(u32),
    Unbounded,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(k) => Some(k),
            Distance::Unbounded => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(k) => write!(f, "{k}"),
            Distance::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Least `k` with `P_k(x)` for every object from which a target is reachable.
pub fn distance_map(targets: &DerivedUnary, edges: &EdgeRelation) -> HashMap<u32, u32> {
    let mut rev: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(a, b) in &edges.pairs {
        rev.entry(b).or_default().push(a);
    }
    let mut dist: HashMap<u32, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    for &t in &targets.members {
        dist.insert(t, 0);
        queue.push_back(t);
    }
    while let Some(b) = queue.pop_front() {
        let d = dist[&b];
        for &a in rev.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(a) {
                e.insert(d + 1);
                queue.push_back(a);
            }
        }
    }
    dist
}

/// Minimum over `sources` of the `SP[targets, edges]` distance.
pub fn shortest_path_distance(
    targets: &DerivedUnary,
    edges: &EdgeRelation,
    sources: &DerivedUnary,
) -> Distance {
    let dist = distance_map(targets, edges);
    sources
        .members
        .iter()
        .filter_map(|s| dist.get(s).copied())
        .min()
        .map_or(Distance::Unbounded, Distance::Finite)
}

/// `CONN_N`: some source has a path of length at most `bound` to a target.
pub fn conn(
    targets: &DerivedUnary,
    edges: &EdgeRelation,
    sources: &DerivedUnary,
    bound: u32,
) -> bool {
    shortest_path_distance(targets, edges, sources) <= Distance::Finite(bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleValue {
    Defined(u32),
    /// The formula's features say no plan exists.
    Undefined,
}

impl OracleValue {
    pub fn value(self) -> Option<u32> {
        match self {
            OracleValue::Defined(v) => Some(v),
            OracleValue::Undefined => None,
        }
    }
}

impl fmt::Display for OracleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleValue::Defined(v) => write!(f, "{v}"),
            OracleValue::Undefined => f.write_str("undefined"),
        }
    }
}

/// Read access to the relations of one state and of the goal.
struct View<'a> {
    task: &'a GroundTask,
    state: &'a State,
}

impl<'a> View<'a> {
    fn new(task: &'a GroundTask, state: &'a State) -> Self {
        View { task, state }
    }

    fn pred(&self, name: &str) -> Option<u32> {
        self.task.domain.predicate_index(name).map(|i| i as u32)
    }

    fn atoms_of(&self, ids: &'a [u32], name: &str) -> Vec<&'a [u32]> {
        let Some(p) = self.pred(name) else {
            return Vec::new();
        };
        ids.iter()
            .map(|&a| &self.task.atoms[a as usize])
            .filter(|g| g.predicate == p)
            .map(|g| &*g.args)
            .collect()
    }

    fn tuples(&self, name: &str) -> Vec<&'a [u32]> {
        self.atoms_of(self.state.atoms(), name)
    }

    fn goal_tuples(&self, name: &str) -> Vec<&'a [u32]> {
        self.atoms_of(&self.task.goal, name)
    }

    fn unary(&self, name: &str) -> DerivedUnary {
        DerivedUnary::new(name, self.tuples(name).into_iter().map(|t| t[0]))
    }

    /// `P|pos`: objects at argument `pos` of some atom.
    fn projection(&self, name: &str, pos: usize) -> DerivedUnary {
        DerivedUnary::new(
            format!("{name}|{}", pos + 1),
            self.tuples(name).into_iter().map(|t| t[pos]),
        )
    }

    fn edges(&self, name: &str) -> EdgeRelation {
        EdgeRelation::new(name, self.tuples(name).into_iter().map(|t| (t[0], t[1])))
    }

    fn holds(&self, name: &str, args: &[u32]) -> bool {
        self.tuples(name).contains(&args)
    }

    /// The single goal atom of the expected predicate.
    fn single_goal(&self, family: &'static str, name: &str) -> Result<Vec<u32>, OracleError> {
        if self.task.goal.len() != 1 {
            return Err(mismatch(
                family,
                format!(
                    "expected a single `{name}` goal, found {} goal atoms",
                    self.task.goal.len()
                ),
            ));
        }
        match self.goal_tuples(name).as_slice() {
            [t] => Ok(t.to_vec()),
            _ => Err(mismatch(family, format!("goal is not a `{name}` atom"))),
        }
    }
}

fn iv(b: bool) -> u32 {
    b as u32
}

fn singleton(o: u32) -> DerivedUnary {
    DerivedUnary::new("", [o])
}

/// Number of blocks above `z`: `η_k = SP_k[Clear, On⁻¹]`.
fn blocks_above(v: &View, z: u32) -> Distance {
    shortest_path_distance(&v.unary("clear"), &v.edges("on").inverse(), &singleton(z))
}

struct BlocksClear {
    alpha: bool,
    h: bool,
    above: Distance,
}

fn blocks_clear_features(task: &GroundTask, state: &State) -> Result<BlocksClear, OracleError> {
    let v = View::new(task, state);
    let x = v.single_goal("blocks-clear", "clear")?[0];
    Ok(BlocksClear {
        alpha: !v.holds("clear", &[x]),
        h: !v.tuples("holding").is_empty(),
        above: blocks_above(&v, x),
    })
}

/// `[α∧H] + Σ_k (2k−1)[B_k]`.
pub fn vstar_blocks_clear(task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    let f = blocks_clear_features(task, state)?;
    let b = match f.above {
        Distance::Finite(k) if k >= 1 => 2 * k - 1,
        _ => 0,
    };
    Ok(OracleValue::Defined(iv(f.alpha && f.h) + b))
}

struct BlocksOn {
    alpha: bool,
    h: bool,
    l: bool,
    /// Blocks above x when x is not above y.
    x: Option<u32>,
    /// Blocks above y when y is not above x.
    y: Option<u32>,
    x_above_y: bool,
    y_above_x: bool,
}

fn blocks_on_features(task: &GroundTask, state: &State) -> Result<BlocksOn, OracleError> {
    let v = View::new(task, state);
    let g = v.single_goal("blocks-on", "on")?;
    let (x, y) = (g[0], g[1]);
    let on = v.edges("on");
    let n = task.objects.len() as u32;
    let x_above_y = conn(&singleton(y), &on, &singleton(x), n);
    let y_above_x = conn(&singleton(x), &on, &singleton(y), n);
    let count = |z: u32, excluded: bool| match blocks_above(&v, z) {
        Distance::Finite(k) if k >= 1 && !excluded => Some(k),
        _ => None,
    };
    Ok(BlocksOn {
        alpha: !v.holds("on", &[x, y]),
        h: !v.tuples("holding").is_empty(),
        l: !v.holds("clear", &[y]) || !v.holds("holding", &[x]),
        x: count(x, x_above_y),
        y: count(y, y_above_x),
        x_above_y,
        y_above_x,
    })
}

/// `[α∧H] + 2[α∧L] + 2Σ_k k([α∧X_k] + [α∧Y_k])`.
///
/// `X_k`/`Y_k` are conjoined with `α` here: with `On(x,y)` true, `y` has
/// blocks above it and is not above `x`, so the unguarded `Y_k` would be
/// nonzero on goal states.
pub fn vstar_blocks_on(task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    let f = blocks_on_features(task, state)?;
    if !f.alpha {
        return Ok(OracleValue::Defined(0));
    }
    Ok(OracleValue::Defined(
        iv(f.h) + 2 * iv(f.l) + 2 * (f.x.unwrap_or(0) + f.y.unwrap_or(0)),
    ))
}

struct Gripper {
    alpha: bool,
    p: bool,
    b: bool,
    d: bool,
    g: bool,
    f: bool,
}

fn gripper_features(task: &GroundTask, state: &State) -> Result<Gripper, OracleError> {
    let v = View::new(task, state);
    let goal = v.single_goal("gripper", "at")?;
    let (ball, target) = (goal[0], goal[1]);
    let rooms = v.unary("room");
    if rooms.members.len() != 2 {
        return Err(mismatch(
            "gripper",
            format!(
                "the closed form holds for two rooms, found {}",
                rooms.members.len()
            ),
        ));
    }
    let robby = v.unary("at-robby");
    let ball_room = v
        .tuples("at")
        .into_iter()
        .find(|t| t[0] == ball)
        .map(|t| t[1]);
    let free_gripper = v.tuples("free").iter().any(|t| v.holds("gripper", &[t[0]]));
    Ok(Gripper {
        alpha: !v.holds("at", &[ball, target]),
        p: ball_room.is_some_and(|r| robby.contains(r)),
        b: ball_room.is_some_and(|r| !robby.contains(r)),
        d: robby.contains(target),
        g: !robby.contains(target),
        f: ball_room.is_some() && !free_gripper,
    })
}

/// `[α∧P] + 3[α∧B] + [α∧D] + 2[α∧G] + [α∧F]`, two-room instances.
pub fn vstar_gripper(task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    let f = gripper_features(task, state)?;
    if !f.alpha {
        return Ok(OracleValue::Defined(0));
    }
    Ok(OracleValue::Defined(
        iv(f.p) + 3 * iv(f.b) + iv(f.d) + 2 * iv(f.g) + iv(f.f),
    ))
}

struct Transport {
    alpha: bool,
    /// Closest truck to the package, when the package is on the ground.
    t: Option<u32>,
    /// All closest trucks are full.
    full: bool,
    /// Package location to destination.
    d: Option<u32>,
    /// Location of the truck holding the package to destination.
    d2: Option<u32>,
}

fn transport_features(task: &GroundTask, state: &State) -> Result<Transport, OracleError> {
    let v = View::new(task, state);
    let goal = v.single_goal("transport", "at")?;
    let (pkg, dest) = (goal[0], goal[1]);
    if !v.holds("package", &[pkg]) {
        return Err(mismatch("transport", "goal object is not a package"));
    }
    let vehicles = v.unary("vehicle");
    let at: Vec<&[u32]> = v.tuples("at");
    let l = DerivedUnary::new(
        "L",
        at.iter().filter(|t| vehicles.contains(t[0])).map(|t| t[1]),
    );
    let has_pred = v.projection("capacity-predecessor", 1);
    let spare: BTreeSet<u32> = v
        .tuples("capacity")
        .into_iter()
        .filter(|t| has_pred.contains(t[1]))
        .map(|t| t[0])
        .collect();
    let c = DerivedUnary::new(
        "C",
        at.iter()
            .filter(|t| vehicles.contains(t[0]) && spare.contains(&t[0]))
            .map(|t| t[1]),
    );
    let road = v.edges("road");
    let road_inv = road.inverse();
    let dest_set = singleton(dest);
    let beta = at.iter().find(|t| t[0] == pkg).map(|t| t[1]);
    let gamma = v
        .tuples("in")
        .into_iter()
        .find(|t| t[0] == pkg)
        .map(|t| t[1]);

    let (t, full, d) = match beta {
        Some(y) => {
            let t = shortest_path_distance(&l, &road_inv, &singleton(y)).finite();
            let tc = shortest_path_distance(&c, &road_inv, &singleton(y)).finite();
            let d = shortest_path_distance(&dest_set, &road, &singleton(y)).finite();
            (t, t.is_some() && tc != t, d)
        }
        None => (None, false, None),
    };
    let d2 = gamma.and_then(|truck| {
        let loc = at.iter().find(|t| t[0] == truck).map(|t| t[1])?;
        shortest_path_distance(&dest_set, &road, &singleton(loc)).finite()
    });
    Ok(Transport {
        alpha: !v.holds("at", &[pkg, dest]),
        t,
        full,
        d,
        d2,
    })
}

/// `Σ_k (k+1)([α∧T_k] + [α∧D_k] + [α∧D'_k]) + [α∧T_k∧F_k]`, with `k`
/// ranging from 0: a truck already at the package still has to pick it up,
/// and a loaded truck at the destination still has to drop it.
pub fn vstar_transport(task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    let f = transport_features(task, state)?;
    if !f.alpha {
        return Ok(OracleValue::Defined(0));
    }
    let reach = match (f.t, f.d, f.d2) {
        (Some(t), Some(d), _) => (t + 1) + (d + 1) + iv(f.full),
        (_, _, Some(d2)) => d2 + 1,
        _ => return Ok(OracleValue::Undefined),
    };
    Ok(OracleValue::Defined(reach))
}

fn visitall_distance(task: &GroundTask, state: &State) -> Result<(bool, Distance), OracleError> {
    let v = View::new(task, state);
    let target = v.single_goal("visitall", "visited")?[0];
    let alpha = !v.holds("visited", &[target]);
    let d = shortest_path_distance(
        &singleton(target),
        &v.edges("connected"),
        &v.unary("at-robot"),
    );
    Ok((alpha, d))
}

/// `Σ_k k[α∧D_k]`.
pub fn vstar_visitall(task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    let (alpha, d) = visitall_distance(task, state)?;
    Ok(match (alpha, d) {
        (false, _) => OracleValue::Defined(0),
        (true, Distance::Finite(k)) => OracleValue::Defined(k),
        (true, Distance::Unbounded) => OracleValue::Undefined,
    })
}

/// `Σ_k (k+1)[α∧D_k]` over the shared map, `k` from 0 (a robot standing on
/// the dirty cell still has to clean it). The goal is `cleaned(x)`.
pub fn vstar_vacuum_m(task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    let v = View::new(task, state);
    let x = v.single_goal("vacuum-m", "cleaned")?[0];
    let mut maps: BTreeMap<u32, BTreeSet<(u32, u32)>> = BTreeMap::new();
    for t in v.tuples("at") {
        maps.entry(t[0]).or_default();
    }
    for t in v.tuples("adjacent") {
        maps.entry(t[0]).or_default().insert((t[1], t[2]));
    }
    let mut it = maps.values();
    let shared = it.next().cloned().unwrap_or_default();
    if it.any(|m| *m != shared) {
        return Err(mismatch("vacuum-m", "robots do not share one map"));
    }
    if v.holds("cleaned", &[x]) {
        return Ok(OracleValue::Defined(0));
    }
    if !v.holds("dirty", &[x]) {
        return Ok(OracleValue::Undefined);
    }
    // SP[At|2, Adjacent'⁻¹]: distance from some robot's cell to x.
    let adj = EdgeRelation::new("adjacent'", shared);
    let d = shortest_path_distance(&v.projection("at", 1), &adj.inverse(), &singleton(x));
    Ok(match d {
        Distance::Finite(k) => OracleValue::Defined(k + 1),
        Distance::Unbounded => OracleValue::Undefined,
    })
}

/// Closed-form `V*` for the families that have one.
pub fn vstar(tag: DomainTag, task: &GroundTask, state: &State) -> Result<OracleValue, OracleError> {
    match tag {
        DomainTag::BlocksClear => vstar_blocks_clear(task, state),
        DomainTag::BlocksOn => vstar_blocks_on(task, state),
        DomainTag::Gripper => vstar_gripper(task, state),
        DomainTag::Transport => vstar_transport(task, state),
        DomainTag::Visitall => vstar_visitall(task, state),
        DomainTag::VacuumM => vstar_vacuum_m(task, state),
        other => Err(OracleError::NoOracle(other.to_string())),
    }
}

pub fn has_oracle(tag: DomainTag) -> bool {
    !matches!(
        tag,
        DomainTag::Vacuum | DomainTag::VacuumR | DomainTag::Rovers
    )
}

/// Hand-crafted feature sets for the linear probe. The Σ variants replace
/// two numerical features by their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureTag {
    BlocksClear,
    BlocksOn,
    BlocksOnSigma,
    Gripper,
    Transport,
    TransportSigma,
    Visitall,
}

impl FeatureTag {
    pub const ALL: [FeatureTag; 7] = [
        FeatureTag::BlocksClear,
        FeatureTag::BlocksOn,
        FeatureTag::BlocksOnSigma,
        FeatureTag::Gripper,
        FeatureTag::Transport,
        FeatureTag::TransportSigma,
        FeatureTag::Visitall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureTag::BlocksClear => "blocks-clear",
            FeatureTag::BlocksOn => "blocks-on",
            FeatureTag::BlocksOnSigma => "blocks-on-sigma",
            FeatureTag::Gripper => "gripper",
            FeatureTag::Transport => "transport",
            FeatureTag::TransportSigma => "transport-sigma",
            FeatureTag::Visitall => "visitall",
        }
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureTag::BlocksClear => &["alpha&H", "B"],
            FeatureTag::BlocksOn => &["alpha&H", "alpha&L", "X", "Y", "CONN_x", "CONN_y"],
            FeatureTag::BlocksOnSigma => &["alpha&H", "alpha&L", "X+Y", "CONN_x", "CONN_y"],
            FeatureTag::Gripper => &["alpha&P", "alpha&B", "alpha&D", "alpha&G", "alpha&F"],
            FeatureTag::Transport => &["T", "D", "D'", "T&F"],
            FeatureTag::TransportSigma => &["T", "D+D'", "T&F"],
            FeatureTag::Visitall => &["D"],
        }
    }

    pub fn len(self) -> usize {
        self.names().len()
    }

    pub fn domain(self) -> DomainTag {
        match self {
            FeatureTag::BlocksClear => DomainTag::BlocksClear,
            FeatureTag::BlocksOn | FeatureTag::BlocksOnSigma => DomainTag::BlocksOn,
            FeatureTag::Gripper => DomainTag::Gripper,
            FeatureTag::Transport | FeatureTag::TransportSigma => DomainTag::Transport,
            FeatureTag::Visitall => DomainTag::Visitall,
        }
    }

    /// The unsummed feature set of a family, if it has one.
    pub fn for_domain(tag: DomainTag) -> Option<FeatureTag> {
        FeatureTag::ALL.into_iter().find(|f| {
            f.domain() == tag
                && !matches!(f, FeatureTag::BlocksOnSigma | FeatureTag::TransportSigma)
        })
    }

    /// The summed variant, if this tag has one.
    pub fn sigma(self) -> Option<FeatureTag> {
        match self {
            FeatureTag::BlocksOn => Some(FeatureTag::BlocksOnSigma),
            FeatureTag::Transport => Some(FeatureTag::TransportSigma),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown feature set `{s}`"))
    }
}

/// Named feature values. Booleans are 0/1; distances are non-negative, and
/// 0 when the feature does not hold for any `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub tag: FeatureTag,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn names(&self) -> &'static [&'static str] {
        self.tag.names()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names()
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    /// Replaces the two summed features by their sum; identity for tags
    /// without a Σ variant.
    pub fn sigma(&self) -> FeatureVector {
        let v = &self.values;
        match self.tag {
            FeatureTag::BlocksOn => FeatureVector {
                tag: FeatureTag::BlocksOnSigma,
                values: vec![v[0], v[1], v[2] + v[3], v[4], v[5]],
            },
            FeatureTag::Transport => FeatureVector {
                tag: FeatureTag::TransportSigma,
                values: vec![v[0], v[1] + v[2], v[3]],
            },
            _ => self.clone(),
        }
    }
}

fn b(x: bool) -> f64 {
    x as u8 as f64
}

fn n(x: Option<u32>) -> f64 {
    x.unwrap_or(0) as f64
}

pub fn handcrafted_feature_vector(
    tag: FeatureTag,
    task: &GroundTask,
    state: &State,
) -> Result<FeatureVector, OracleError> {
    let values = match tag {
        FeatureTag::BlocksClear => {
            let f = blocks_clear_features(task, state)?;
            let above = f.above.finite().filter(|_| f.alpha);
            vec![b(f.alpha && f.h), n(above)]
        }
        FeatureTag::BlocksOn | FeatureTag::BlocksOnSigma => {
            let f = blocks_on_features(task, state)?;
            let a = f.alpha;
            let full = FeatureVector {
                tag: FeatureTag::BlocksOn,
                values: vec![
                    b(a && f.h),
                    b(a && f.l),
                    n(f.x.filter(|_| a)),
                    n(f.y.filter(|_| a)),
                    b(f.x_above_y),
                    b(f.y_above_x),
                ],
            };
            return Ok(if tag == FeatureTag::BlocksOnSigma {
                full.sigma()
            } else {
                full
            });
        }
        FeatureTag::Gripper => {
            let f = gripper_features(task, state)?;
            let a = f.alpha;
            vec![
                b(a && f.p),
                b(a && f.b),
                b(a && f.d),
                b(a && f.g),
                b(a && f.f),
            ]
        }
        FeatureTag::Transport | FeatureTag::TransportSigma => {
            let f = transport_features(task, state)?;
            let a = f.alpha;
            let full = FeatureVector {
                tag: FeatureTag::Transport,
                values: vec![
                    n(f.t.filter(|_| a)),
                    n(f.d.filter(|_| a)),
                    n(f.d2.filter(|_| a)),
                    b(a && f.full),
                ],
            };
            return Ok(if tag == FeatureTag::TransportSigma {
                full.sigma()
            } else {
                full
            });
        }
        FeatureTag::Visitall => {
            let (alpha, d) = visitall_distance(task, state)?;
            vec![n(d.finite().filter(|_| alpha))]
        }
    };
    Ok(FeatureVector { tag, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains;
    use crate::pddl::{load_task, Atom};
    use crate::search::optimal_cost;

    fn task(domain: &str, instance: &str) -> GroundTask {
        load_task(domain, instance).unwrap()
    }

    fn state(t: &GroundTask, atoms: &[(&str, &[&str])]) -> State {
        let atoms: Vec<Atom> = atoms.iter().map(|(p, a)| Atom::new(*p, a)).collect();
        t.state_from_atoms(&atoms).unwrap()
    }

    fn chain() -> (DerivedUnary, EdgeRelation) {
        // a=0 -> b=1 -> c=2
        (
            DerivedUnary::new("T", [2]),
            EdgeRelation::new("E", [(0, 1), (1, 2)]),
        )
    }

    #[test]
    fn source_in_targets_is_distance_zero() {
        let (t, e) = chain();
        assert_eq!(
            shortest_path_distance(&t, &e, &DerivedUnary::new("S", [2])),
            Distance::Finite(0)
        );
        assert!(conn(&t, &e, &DerivedUnary::new("S", [2]), 0));
    }

    #[test]
    fn chain_distance_is_two() {
        let (t, e) = chain();
        let s = DerivedUnary::new("S", [0]);
        assert_eq!(shortest_path_distance(&t, &e, &s), Distance::Finite(2));
        assert!(!conn(&t, &e, &s, 1));
        assert!(conn(&t, &e, &s, 2));
    }

    #[test]
    fn disconnected_source_is_unbounded() {
        let (t, e) = chain();
        let s = DerivedUnary::new("S", [7]);
        assert_eq!(shortest_path_distance(&t, &e, &s), Distance::Unbounded);
        assert!(!conn(
            &t,
            &EdgeRelation::default(),
            &DerivedUnary::new("S", [0]),
            5
        ));
    }

    #[test]
    fn blocks_clear_examples() {
        let t = task(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-3-table.pddl"),
        );
        assert_eq!(
            vstar_blocks_clear(&t, &t.initial),
            Ok(OracleValue::Defined(0))
        );
        let fv = handcrafted_feature_vector(FeatureTag::BlocksClear, &t, &t.initial).unwrap();
        assert_eq!(fv.values, vec![0.0, 0.0]);

        let t = task(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-4.pddl"),
        );
        assert_eq!(
            vstar_blocks_clear(&t, &t.initial),
            Ok(OracleValue::Defined(3))
        );
        assert_eq!(optimal_cost(&t, &t.initial), Ok(Some(3)));

        // b2 on b1, holding b4.
        let s = state(
            &t,
            &[
                ("ontable", &["b1"]),
                ("on", &["b2", "b1"]),
                ("clear", &["b2"]),
                ("ontable", &["b3"]),
                ("clear", &["b3"]),
                ("holding", &["b4"]),
            ],
        );
        assert_eq!(vstar_blocks_clear(&t, &s), Ok(OracleValue::Defined(2)));
        assert_eq!(optimal_cost(&t, &s), Ok(Some(2)));
    }

    #[test]
    fn blocks_clear_rejects_other_goals() {
        let t = task(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-on-4.pddl"),
        );
        assert!(matches!(
            vstar_blocks_clear(&t, &t.initial),
            Err(OracleError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn blocks_on_examples() {
        let t = task(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-on-4.pddl"),
        );
        // goal on(b2, b1)
        let goal = state(
            &t,
            &[
                ("ontable", &["b1"]),
                ("on", &["b2", "b1"]),
                ("clear", &["b2"]),
                ("ontable", &["b3"]),
                ("clear", &["b3"]),
                ("ontable", &["b4"]),
                ("clear", &["b4"]),
                ("armempty", &[]),
            ],
        );
        assert_eq!(vstar_blocks_on(&t, &goal), Ok(OracleValue::Defined(0)));

        let held = state(
            &t,
            &[
                ("ontable", &["b1"]),
                ("clear", &["b1"]),
                ("holding", &["b2"]),
                ("ontable", &["b3"]),
                ("clear", &["b3"]),
                ("ontable", &["b4"]),
                ("clear", &["b4"]),
            ],
        );
        assert_eq!(vstar_blocks_on(&t, &held), Ok(OracleValue::Defined(1)));
        assert_eq!(optimal_cost(&t, &held), Ok(Some(1)));

        // Both on the table and clear: pickup + stack.
        let table = state(
            &t,
            &[
                ("ontable", &["b1"]),
                ("clear", &["b1"]),
                ("ontable", &["b2"]),
                ("clear", &["b2"]),
                ("ontable", &["b3"]),
                ("clear", &["b3"]),
                ("ontable", &["b4"]),
                ("clear", &["b4"]),
                ("armempty", &[]),
            ],
        );
        assert_eq!(vstar_blocks_on(&t, &table), Ok(OracleValue::Defined(2)));
        assert_eq!(optimal_cost(&t, &table), Ok(Some(2)));

        let v = vstar_blocks_on(&t, &t.initial).unwrap().value();
        assert_eq!(v, optimal_cost(&t, &t.initial).unwrap());
    }

    #[test]
    fn gripper_examples() {
        let t = task(
            domains::GRIPPER,
            include_str!("../fixtures/instances/gripper-2.pddl"),
        );
        assert_eq!(vstar_gripper(&t, &t.initial), Ok(OracleValue::Defined(3)));
        assert_eq!(optimal_cost(&t, &t.initial), Ok(Some(3)));
        let carried = state(
            &t,
            &[
                ("room", &["rooma"]),
                ("room", &["roomb"]),
                ("gripper", &["left"]),
                ("gripper", &["right"]),
                ("ball", &["ball1"]),
                ("ball", &["ball2"]),
                ("at-robby", &["roomb"]),
                ("carry", &["ball1", "left"]),
                ("free", &["right"]),
                ("at", &["ball2", "rooma"]),
            ],
        );
        assert_eq!(vstar_gripper(&t, &carried), Ok(OracleValue::Defined(1)));
        let fv = handcrafted_feature_vector(FeatureTag::Gripper, &t, &carried).unwrap();
        assert_eq!(fv.values, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gripper_rejects_three_rooms() {
        let d = domains::GRIPPER;
        let i = "(define (problem g3) (:domain gripper) (:objects ra rb rc l b)
                 (:init (room ra) (room rb) (room rc) (gripper l) (ball b) (free l) (at-robby rb) (at b ra))
                 (:goal (at b rc)))";
        let t = task(d, i);
        assert!(matches!(
            vstar_gripper(&t, &t.initial),
            Err(OracleError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn transport_examples() {
        let t = task(
            domains::TRANSPORT,
            include_str!("../fixtures/instances/transport-small.pddl"),
        );
        // p1 at l3 with empty truck t1, destination l4 adjacent.
        let base: Vec<(&str, &[&str])> = vec![
            ("road", &["l1", "l2"]),
            ("road", &["l2", "l1"]),
            ("road", &["l2", "l3"]),
            ("road", &["l3", "l2"]),
            ("road", &["l3", "l4"]),
            ("road", &["l4", "l3"]),
            ("vehicle", &["t1"]),
            ("vehicle", &["t2"]),
            ("package", &["p1"]),
            ("package", &["p2"]),
            ("package", &["p3"]),
            ("capacity-predecessor", &["s0", "s1"]),
            ("capacity-predecessor", &["s1", "s2"]),
            ("at", &["t2", "l1"]),
            ("capacity", &["t2", "s1"]),
            ("in", &["p3", "t2"]),
            ("at", &["p2", "l2"]),
        ];
        let mut a = base.clone();
        a.extend([
            ("at", &["t1", "l3"][..]),
            ("capacity", &["t1", "s2"]),
            ("at", &["p1", "l3"]),
        ]);
        let s = state(&t, &a);
        assert_eq!(vstar_transport(&t, &s), Ok(OracleValue::Defined(3)));
        assert_eq!(optimal_cost(&t, &s), Ok(Some(3)));

        let mut a = base.clone();
        a.extend([
            ("at", &["t1", "l3"][..]),
            ("capacity", &["t1", "s1"]),
            ("in", &["p1", "t1"]),
        ]);
        let s = state(&t, &a);
        assert_eq!(vstar_transport(&t, &s), Ok(OracleValue::Defined(2)));
        assert_eq!(optimal_cost(&t, &s), Ok(Some(2)));

        assert_eq!(
            vstar_transport(&t, &t.initial).unwrap().value(),
            optimal_cost(&t, &t.initial).unwrap()
        );
    }

    #[test]
    fn visitall_examples() {
        let t = task(
            domains::VISITALL,
            include_str!("../fixtures/instances/visitall-path.pddl"),
        );
        let fv = handcrafted_feature_vector(FeatureTag::Visitall, &t, &t.initial).unwrap();
        assert_eq!(fv.values.len(), 1);
        assert_eq!(vstar_visitall(&t, &t.initial), Ok(OracleValue::Defined(3)));
        let s = state(
            &t,
            &[
                ("connected", &["v4", "v5"]),
                ("connected", &["v5", "v4"]),
                ("connected", &["v5", "v6"]),
                ("at-robot", &["v4"]),
                ("visited", &["v4"]),
            ],
        );
        assert_eq!(vstar_visitall(&t, &s), Ok(OracleValue::Defined(2)));
        let cut = state(&t, &[("at-robot", &["v4"]), ("visited", &["v4"])]);
        assert_eq!(vstar_visitall(&t, &cut), Ok(OracleValue::Undefined));
        let done = state(&t, &[("at-robot", &["v6"]), ("visited", &["v6"])]);
        assert_eq!(vstar_visitall(&t, &done), Ok(OracleValue::Defined(0)));
    }

    #[test]
    fn vacuum_m_examples() {
        let t = task(
            domains::VACUUM,
            include_str!("../fixtures/instances/vacuum-m-grid.pddl"),
        );
        // r2 at c13 is two moves from c33.
        assert_eq!(vstar_vacuum_m(&t, &t.initial), Ok(OracleValue::Defined(3)));
        assert_eq!(optimal_cost(&t, &t.initial), Ok(Some(3)));
        let mut atoms = t.decode(&t.initial);
        atoms.retain(|a| !(a.predicate == "at" && a.args[0] == "r1"));
        atoms.push(Atom::new("at", &["r1", "c33"]));
        let s = t.state_from_atoms(&atoms).unwrap();
        assert_eq!(vstar_vacuum_m(&t, &s), Ok(OracleValue::Defined(1)));
        atoms.retain(|a| a.predicate != "dirty");
        atoms.push(Atom::new("cleaned", &["c33"]));
        let s = t.state_from_atoms(&atoms).unwrap();
        assert_eq!(vstar_vacuum_m(&t, &s), Ok(OracleValue::Defined(0)));
    }

    #[test]
    fn vacuum_m_rejects_private_maps() {
        let t = task(
            domains::VACUUM,
            include_str!("../fixtures/instances/vacuum-split.pddl"),
        );
        assert!(matches!(
            vstar_vacuum_m(&t, &t.initial),
            Err(OracleError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn feature_counts() {
        let expected = [
            (FeatureTag::BlocksClear, 2),
            (FeatureTag::BlocksOn, 6),
            (FeatureTag::BlocksOnSigma, 5),
            (FeatureTag::Gripper, 5),
            (FeatureTag::Transport, 4),
            (FeatureTag::TransportSigma, 3),
            (FeatureTag::Visitall, 1),
        ];
        for (tag, count) in expected {
            assert_eq!(tag.len(), count, "{tag}");
            assert_eq!(tag.as_str().parse::<FeatureTag>().unwrap(), tag);
        }
    }

    #[test]
    fn sigma_sums_the_paired_features() {
        let fv = FeatureVector {
            tag: FeatureTag::BlocksOn,
            values: vec![0.0, 1.0, 2.0, 3.0, 0.0, 0.0],
        };
        let s = fv.sigma();
        assert_eq!(s.tag, FeatureTag::BlocksOnSigma);
        assert_eq!(s.get("X+Y"), Some(5.0));
        assert_eq!(s.values.len(), 5);
        let fv = FeatureVector {
            tag: FeatureTag::Transport,
            values: vec![1.0, 2.0, 0.0, 1.0],
        };
        assert_eq!(fv.sigma().values, vec![1.0, 2.0, 1.0]);
    }
}
