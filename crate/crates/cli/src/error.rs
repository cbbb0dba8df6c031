use fpp_core::{CapacityError, CutError, EstimateError, FlowError, JunctionError, LatticeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io: {0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("{0} property violations")]
    Violations(u64),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Overflow(_) => 4,
            CliError::Violations(_) => 5,
            CliError::Internal(_) => 6,
        }
    }
}

fn flow_kind(e: &FlowError) -> Option<u8> {
    match e {
        FlowError::Overflow | FlowError::Capacity(CapacityError::Overflow(_)) => Some(4),
        FlowError::Capacity(_) | FlowError::Lattice(_) | FlowError::Shape(_) => Some(2),
        _ => None,
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        use EstimateError as E;
        let kind = match &e {
            E::Budget { .. } => Some(3),
            E::Capacity(CapacityError::Overflow(_)) => Some(4),
            E::Flow(f) | E::Cut(CutError::Flow(f)) | E::Junction(JunctionError::Flow(f)) => flow_kind(f),
            E::Cut(CutError::Capacity(CapacityError::Overflow(_))) => Some(4),
            E::NotFinite | E::Parameter(_) | E::Mismatch(_) | E::Lattice(_) | E::Capacity(_) => Some(2),
            E::Cut(CutError::Incompatible | CutError::Lattice(_) | CutError::Capacity(_)) => Some(2),
            _ => None,
        };
        let msg = e.to_string();
        match kind {
            Some(2) => CliError::Config(msg),
            Some(3) => CliError::Budget(msg),
            Some(4) => CliError::Overflow(msg),
            _ => CliError::Internal(msg),
        }
    }
}

macro_rules! via_estimate {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                EstimateError::from(e).into()
            }
        }
    )*};
}

via_estimate!(FlowError, CutError, CapacityError, LatticeError, JunctionError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
