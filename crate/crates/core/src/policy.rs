//! The greedy policy induced by a value function, and its scoring against
//! optimal plan lengths.

use std::fmt;

use rayon::prelude::*;

use crate::domains::DomainTag;
use crate::gnn::{encode, GnnModel, RelationalStructure};
use crate::oracle::{vstar, OracleValue};
use crate::pddl::{ActionId, GroundTask, State};
use crate::search::optimal_cost;

pub const DEFAULT_MAX_STEPS: usize = 100;

/// A state value function. Lower is closer to the goal.
pub trait Valuer: Sync {
    fn values(&self, task: &GroundTask, states: &[State]) -> Result<Vec<f64>, crate::Error>;

    fn value(&self, task: &GroundTask, state: &State) -> Result<f64, crate::Error> {
        Ok(self.values(task, std::slice::from_ref(state))?[0])
    }
}

/// Closed-form optimal values; undefined values count as infinite.
#[derive(Debug, Clone, Copy)]
pub struct OracleValuer(pub DomainTag);

impl Valuer for OracleValuer {
    fn values(&self, task: &GroundTask, states: &[State]) -> Result<Vec<f64>, crate::Error> {
        states
            .iter()
            .map(|s| {
                Ok(match vstar(self.0, task, s)? {
                    OracleValue::Defined(v) => v as f64,
                    OracleValue::Undefined => f64::INFINITY,
                })
            })
            .collect()
    }
}

/// Network values with every forward of a run drawing its initial
/// embeddings from one fixed seed.
#[derive(Debug, Clone)]
pub struct GnnValuer {
    pub model: GnnModel,
    pub seed: u64,
}

impl Valuer for GnnValuer {
    fn values(&self, task: &GroundTask, states: &[State]) -> Result<Vec<f64>, crate::Error> {
        let structures: Vec<RelationalStructure> = states.iter().map(|s| encode(task, s)).collect();
        let refs: Vec<&RelationalStructure> = structures.iter().collect();
        let seeds = vec![self.seed; refs.len()];
        Ok(self.model.values(&refs, &seeds)?)
    }
}

/// Adapts a plain function.
pub struct FnValuer<F>(pub F);

impl<F: Fn(&GroundTask, &State) -> f64 + Sync> Valuer for FnValuer<F> {
    fn values(&self, task: &GroundTask, states: &[State]) -> Result<Vec<f64>, crate::Error> {
        Ok(states.iter().map(|s| (self.0)(task, s)).collect())
    }
}

/// The first successor, in ground-action order, of minimum value; `None`
/// at a dead end.
pub fn greedy_step(
    valuer: &dyn Valuer,
    task: &GroundTask,
    state: &State,
) -> Result<Option<(ActionId, State)>, crate::Error> {
    let succ = task.successors(state);
    if succ.is_empty() {
        return Ok(None);
    }
    let states: Vec<State> = succ.iter().map(|(_, s)| s.clone()).collect();
    let values = valuer.values(task, &states)?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        // NaN never wins; a strictly smaller value replaces the incumbent.
        if *v < values[best] || values[best].is_nan() && !v.is_nan() {
            best = i;
        }
    }
    Ok(succ.into_iter().nth(best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Optimal,
    Suboptimal,
    Unsolved,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Optimal => "optimal",
            RunStatus::Suboptimal => "suboptimal",
            RunStatus::Unsolved => "unsolved",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps: usize,
    /// `None` when the instance is unsolvable.
    pub optimal_cost: Option<u32>,
    /// Visited states, initial state first.
    pub trajectory: Vec<State>,
    pub dead_end: bool,
}

/// Follows the greedy policy for at most `max_steps` steps and classifies
/// the run against the A* optimum.
pub fn run_policy(
    valuer: &dyn Valuer,
    task: &GroundTask,
    max_steps: usize,
) -> Result<RunOutcome, crate::Error> {
    let optimal = optimal_cost(task, &task.initial)?;
    let mut trajectory = vec![task.initial.clone()];
    let mut dead_end = false;
    while !task.is_goal(trajectory.last().unwrap()) && trajectory.len() <= max_steps {
        match greedy_step(valuer, task, trajectory.last().unwrap())? {
            Some((_, next)) => trajectory.push(next),
            None => {
                dead_end = true;
                break;
            }
        }
    }
    let steps = trajectory.len() - 1;
    let status = if !task.is_goal(trajectory.last().unwrap()) {
        RunStatus::Unsolved
    } else if Some(steps as u32) == optimal {
        RunStatus::Optimal
    } else {
        RunStatus::Suboptimal
    };
    Ok(RunOutcome {
        status,
        steps,
        optimal_cost: optimal,
        trajectory,
        dead_end,
    })
}

/// Table-2 style counts for one test suite.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageTable {
    pub domain: String,
    pub optimal: usize,
    pub suboptimal: usize,
    pub unsolved: usize,
    /// Sum of optimal plan lengths over solvable instances.
    pub total_optimal_length: u64,
    /// Per instance: `(name, status, steps, optimal cost)`.
    pub runs: Vec<(String, RunStatus, usize, Option<u32>)>,
}

impl CoverageTable {
    pub fn instances(&self) -> usize {
        self.optimal + self.suboptimal + self.unsolved
    }

    pub fn optimal_rate(&self) -> f64 {
        if self.instances() == 0 {
            0.0
        } else {
            self.optimal as f64 / self.instances() as f64
        }
    }

    pub fn header() -> &'static str {
        "domain\tinstances\toptimal\tsuboptimal\tunsolved\tL"
    }

    fn add(&mut self, name: String, outcome: &RunOutcome) {
        match outcome.status {
            RunStatus::Optimal => self.optimal += 1,
            RunStatus::Suboptimal => self.suboptimal += 1,
            RunStatus::Unsolved => self.unsolved += 1,
        }
        self.total_optimal_length += outcome.optimal_cost.unwrap_or(0) as u64;
        self.runs
            .push((name, outcome.status, outcome.steps, outcome.optimal_cost));
    }
}

impl fmt::Display for CoverageTable {
    /// One row under [`CoverageTable::header`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.domain,
            self.instances(),
            self.optimal,
            self.suboptimal,
            self.unsolved,
            self.total_optimal_length
        )
    }
}

/// Runs every instance (in parallel) and aggregates in input order.
pub fn evaluate_suite(
    valuer: &dyn Valuer,
    domain: &str,
    tasks: &[(String, GroundTask)],
    max_steps: usize,
) -> Result<CoverageTable, crate::Error> {
    let outcomes: Vec<Result<RunOutcome, crate::Error>> = tasks
        .par_iter()
        .map(|(_, t)| run_policy(valuer, t, max_steps))
        .collect();
    let mut table = CoverageTable {
        domain: domain.to_string(),
        ..CoverageTable::default()
    };
    for ((name, _), o) in tasks.iter().zip(outcomes) {
        table.add(name.clone(), &o?);
    }
    Ok(table)
}
