use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("item count {0} is not of the form 2^d - 1")]
    NotPerfect(usize),

    #[error("server {server} out of range for a tree of {n} servers")]
    ServerOutOfRange { server: usize, n: usize },

    #[error("unknown item {item} (tree holds {n} items)")]
    UnknownItem { item: usize, n: usize },

    #[error("the root server has no parent to swap with")]
    RootSwap,

    #[error("relocation of item {item} into server {dest}: destination is occupied")]
    DestinationOccupied { item: usize, dest: usize },

    #[error("relocation chain is malformed: {0}")]
    MalformedChain(String),

    #[error("tree is not an MRU tree")]
    NotMru,

    #[error("malformed frequency distribution: {0}")]
    MalformedDistribution(String),

    #[error("configurations differ in size ({0} vs {1})")]
    SizeMismatch(usize, usize),

    #[error("instance too large for the exact oracle: {0}")]
    InstanceTooLarge(String),

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),

    #[error("{path}:{line}: {message}")]
    Trace {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}
