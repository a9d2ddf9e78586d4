use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("negative value: {0}")]
    Negative(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} exceeds cap: {size} > {cap}")]
    CapExceeded { what: String, size: u128, cap: u128 },
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("structure is not clean: {0}")]
    NotClean(String),
    #[error("invalid modulator: {0}")]
    InvalidModulator(String),
    #[error("partitioner broke its contract: {0}")]
    PartitionerContract(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn cap_check(what: &str, size: u128, cap: u128) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded {
            what: what.to_string(),
            size,
            cap,
        })
    } else {
        Ok(())
    }
}
