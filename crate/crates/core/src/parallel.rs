//! Backend selection for data-parallel loops.
//!
//! Work items are indexed and collected in index order, so both backends
//! return identical results.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Sequential,
    /// Rayon thread pool; falls back to sequential without the `parallel` feature.
    Parallel,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Backend::Parallel
        } else {
            Backend::Sequential
        }
    }
}

impl Backend {
    /// `(0..count).map(f)` collected in index order.
    pub fn map<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Backend::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(f).collect()
            }
            _ => (0..count).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backends_agree_and_keep_order() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let seq = Backend::Sequential.map(10_000, f);
        let par = Backend::Parallel.map(10_000, f);
        assert_eq!(seq, par);
        assert_eq!(seq[7], f(7));
    }
}
