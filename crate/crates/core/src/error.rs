use std::io;

use thiserror::Error;

use crate::ingest::rpc::RpcError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed trace record: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("block {block}: invalid `{field}`: {message}")]
    InvalidBlock {
        block: u64,
        field: &'static str,
        message: String,
    },

    #[error("block {block} does not follow block {previous}")]
    NonConsecutive { previous: u64, block: u64 },

    #[error("block {block} is not after block {previous} in trace file")]
    OutOfOrder { previous: u64, block: u64 },

    #[error("price data: {0}")]
    Price(String),

    #[error("sample plan: {0}")]
    SamplePlan(String),

    #[error("disentangle config: {0}")]
    Config(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("statistic undefined: {0}")]
    Statistic(&'static str),

    #[error(transparent)]
    Rpc(#[from] RpcError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
