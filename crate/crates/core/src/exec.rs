//! Parallel/sequential execution switch.
//!
//! Work is always partitioned into fixed blocks and reduced in block index
//! order, so the result is bitwise identical whichever mode (or rayon pool
//! size) runs it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    /// Rayon data-parallel path (falls back to sequential when the
    /// `parallel` feature is disabled).
    #[default]
    Parallel,
    Sequential,
}

/// Map `op` over `0..n` items, returning results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(op).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(op).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(op).collect()
            }
        }
    }
}
