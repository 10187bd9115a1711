use thiserror::Error;

use crate::data::DatasetError;
use crate::gnn::GnnError;
use crate::numeric::NumericError;
use crate::oracle::OracleError;
use crate::pddl::{ParseError, TaskError};
use crate::probe::ProbeError;
use crate::search::BudgetExhausted;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Search(#[from] BudgetExhausted),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Config(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable name of the variant, for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Task(_) => "task",
            Error::Oracle(_) => "oracle",
            Error::Search(_) => "search",
            Error::Numeric(_) => "numeric",
            Error::Gnn(_) => "gnn",
            Error::Probe(_) => "probe",
            Error::Dataset(_) => "dataset",
            Error::Config(_) => "config",
            Error::Training(_) => "training",
            Error::Io(_) => "io",
        }
    }
}
