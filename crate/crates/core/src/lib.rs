//! Self-adjusting complete-tree networks.
//!
//! Items live on the servers of a perfect binary tree stored in heap order.
//! Serving a request costs the depth of the requested item plus whatever
//! the policy spends rearranging the tree afterwards.

pub mod algorithms;
pub mod bench;
pub mod error;
pub mod markov;
pub mod oracle;
pub mod report;
pub mod tree;
pub mod workloads;
pub mod workset;

pub use algorithms::{Network, Policy, PolicyKind, Served};
pub use error::{Error, Result};
pub use report::{Format, RunReport};
pub use tree::{CostLedger, Item, RequestCost, Server, TreeState};
pub use workloads::{RequestSequence, WorkloadKind, WorkloadSpec};
pub use workset::{RankTable, WsAccumulator};

pub(crate) fn check_item(v: tree::Item, n: usize) -> Result<()> {
    if v < n {
        Ok(())
    } else {
        Err(Error::UnknownItem { item: v, n })
    }
}
