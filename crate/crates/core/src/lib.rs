//! Learning optimal general value functions for classical planning with a
//! relational message-passing network.
//!
//! The crate covers the whole pipeline: a STRIPS-subset parser and grounder
//! ([`pddl`]), optimal search with `h_max` ([`search`]), closed-form optimal
//! value functions for several tractable families ([`oracle`]), a small
//! reverse-mode autodiff engine ([`numeric`]), the relational network
//! ([`gnn`]), dataset generation ([`data`]), training ([`trainer`]), greedy
//! policy evaluation ([`policy`]) and linear probing of learned features
//! ([`probe`]).

pub mod data;
pub mod domains;
pub mod gnn;
pub mod numeric;
pub mod oracle;
pub mod pddl;
pub mod pipeline;
pub mod policy;
pub mod probe;
pub mod rng;
pub mod search;
pub mod trainer;

mod error;

pub use domains::DomainTag;
pub use error::Error;
pub use gnn::{Aggregation, GnnConfig, GnnModel, RelationalStructure};
pub use pddl::{load_task, Atom, DomainDef, GroundTask, InstanceDef, State};
pub use search::{astar_optimal, hmax, optimal_cost, HeuristicValue, Plan, SearchOutcome};
