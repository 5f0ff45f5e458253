use std::fmt::Debug;

use thiserror::Error;
use zhat::ajrec::AjError;
use zhat::knotinv::KnotError;
use zhat::plumbing::GraphError;
use zhat::qseries::SeriesError;
use zhat::spinc::SpincError;
use zhat::zhat::ZhatError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NotComputable(String),
}

impl CliError {
    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Invalid(format!("Io: {}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotComputable(_) => 3,
        }
    }
}

/// `Variant: message`, with the variant name taken from the Debug output.
fn describe<E: Debug + std::fmt::Display>(e: &E) -> String {
    let dbg = format!("{e:?}");
    let name: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
    format!("{name}: {e}")
}

fn graph_is_input(e: &GraphError) -> bool {
    !matches!(e, GraphError::Exact(_))
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        if graph_is_input(&e) {
            CliError::Invalid(describe(&e))
        } else {
            CliError::NotComputable(describe(&e))
        }
    }
}

impl From<ZhatError> for CliError {
    fn from(e: ZhatError) -> Self {
        match &e {
            ZhatError::BadInput(_) => CliError::Invalid(describe(&e)),
            ZhatError::Graph(g) if graph_is_input(g) => CliError::Invalid(describe(&e)),
            _ => CliError::NotComputable(describe(&e)),
        }
    }
}

impl From<SpincError> for CliError {
    fn from(e: SpincError) -> Self {
        match &e {
            SpincError::BadParity => CliError::Invalid(describe(&e)),
            SpincError::Graph(g) if graph_is_input(g) => CliError::Invalid(describe(&e)),
            _ => CliError::NotComputable(describe(&e)),
        }
    }
}

impl From<KnotError> for CliError {
    fn from(e: KnotError) -> Self {
        match &e {
            KnotError::BadInput(_) => CliError::Invalid(describe(&e)),
            KnotError::Graph(g) if graph_is_input(g) => CliError::Invalid(describe(&e)),
            _ => CliError::NotComputable(describe(&e)),
        }
    }
}

impl From<AjError> for CliError {
    fn from(e: AjError) -> Self {
        match &e {
            AjError::BadInput(_) => CliError::Invalid(describe(&e)),
            _ => CliError::NotComputable(describe(&e)),
        }
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        match &e {
            SeriesError::Json(_) => CliError::Invalid(describe(&e)),
            _ => CliError::NotComputable(describe(&e)),
        }
    }
}
