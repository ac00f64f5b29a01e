//! Order-preserving map over independent work items, parallel when the
//! `parallel` feature is enabled.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// Whether `Parallel` actually runs on multiple threads in this build.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Maps `func` over `items`, keeping input order in the output.
pub fn map_ordered<T, R, F>(items: Vec<T>, mode: ExecMode, func: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(func).collect()
        }
        _ => items.into_iter().map(func).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..100).collect();
        let seq = map_ordered(items.clone(), ExecMode::Sequential, |v| v * v);
        let par = map_ordered(items, ExecMode::Parallel, |v| v * v);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
