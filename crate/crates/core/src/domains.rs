//! Shipped domain encodings and the benchmark family tags built on them.

use std::fmt;
use std::str::FromStr;

use crate::pddl::{parse_domain, DomainDef};

pub const BLOCKS: &str = include_str!("../fixtures/domains/blocks.pddl");
pub const GRIPPER: &str = include_str!("../fixtures/domains/gripper.pddl");
pub const TRANSPORT: &str = include_str!("../fixtures/domains/transport.pddl");
pub const VISITALL: &str = include_str!("../fixtures/domains/visitall.pddl");
pub const VACUUM: &str = include_str!("../fixtures/domains/vacuum.pddl");
pub const ROVERS: &str = include_str!("../fixtures/domains/rovers.pddl");

pub const ALL: &[(&str, &str)] = &[
    ("blocks", BLOCKS),
    ("gripper", GRIPPER),
    ("transport", TRANSPORT),
    ("visitall", VISITALL),
    ("vacuum", VACUUM),
    ("rovers", ROVERS),
];

/// A benchmark family: a domain encoding plus a goal shape / map regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainTag {
    BlocksClear,
    BlocksOn,
    Gripper,
    Transport,
    Visitall,
    /// Every robot has its own map.
    Vacuum,
    /// Own maps, at most five robots.
    VacuumR,
    /// All robots share one map.
    VacuumM,
    Rovers,
}

impl DomainTag {
    pub const ALL: [DomainTag; 9] = [
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

    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::BlocksClear => "blocks-clear",
            DomainTag::BlocksOn => "blocks-on",
            DomainTag::Gripper => "gripper",
            DomainTag::Transport => "transport",
            DomainTag::Visitall => "visitall",
            DomainTag::Vacuum => "vacuum",
            DomainTag::VacuumR => "vacuum-r",
            DomainTag::VacuumM => "vacuum-m",
            DomainTag::Rovers => "rovers",
        }
    }

    pub fn domain_text(self) -> &'static str {
        match self {
            DomainTag::BlocksClear | DomainTag::BlocksOn => BLOCKS,
            DomainTag::Gripper => GRIPPER,
            DomainTag::Transport => TRANSPORT,
            DomainTag::Visitall => VISITALL,
            DomainTag::Vacuum | DomainTag::VacuumR | DomainTag::VacuumM => VACUUM,
            DomainTag::Rovers => ROVERS,
        }
    }

    /// Predicates that appear in this family's goals; the network gets a
    /// goal relation for each.
    pub fn goal_predicates(self) -> &'static [&'static str] {
        match self {
            DomainTag::BlocksClear => &["clear"],
            DomainTag::BlocksOn => &["on"],
            DomainTag::Gripper | DomainTag::Transport => &["at"],
            DomainTag::Visitall => &["visited"],
            DomainTag::Vacuum | DomainTag::VacuumR | DomainTag::VacuumM => &["cleaned"],
            DomainTag::Rovers => &["communicated-soil"],
        }
    }

    /// Parses the shipped encoding. The fixtures are covered by tests, so a
    /// failure here is a build defect.
    pub fn domain(self) -> DomainDef {
        parse_domain(self.domain_text()).expect("shipped domain fixture parses")
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown domain tag `{s}`"))
    }
}
