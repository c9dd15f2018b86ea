use thiserror::Error;

use crate::dram::DramError;
use crate::workload::WorkloadError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dram(#[from] DramError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
