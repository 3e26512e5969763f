use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A named parameter is outside its domain.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("no plan-table entry for batch size {batch_size}, AQL {aql}, {case}")]
    PlanNotFound {
        batch_size: u64,
        aql: f64,
        case: String,
    },

    #[error("unknown sample-size code letter `{0}`")]
    UnknownCodeLetter(char),

    #[error("sequential test already stopped with verdict {0}")]
    SteppedAfterStop(String),

    #[error("result list exhausted after {consumed} items without a verdict")]
    ExhaustedWithoutVerdict { consumed: usize },

    #[error("sample of {n} items exceeds lot size {lot_size}")]
    SampleExceedsLot { n: u64, lot_size: u64 },

    #[error("degenerate variance: both samples have zero variance")]
    DegenerateVariance,

    #[error("simulation report `{0}` carries no per-replication counts")]
    MissingPerRepData(String),

    #[error("malformed plan table: {0}")]
    PlanTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Name of the offending field for validation errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::InvalidParameter { field, .. } => Some(field),
            _ => None,
        }
    }

    /// True for errors caused by caller input rather than internal failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::PlanNotFound { .. }
                | Error::UnknownCodeLetter(_)
                | Error::SampleExceedsLot { .. }
                | Error::MissingPerRepData(_)
                | Error::DegenerateVariance
        )
    }
}

/// Checks `0 < value < 1`.
pub(crate) fn check_open_unit(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must lie strictly between 0 and 1, got {value}"),
        ))
    }
}
