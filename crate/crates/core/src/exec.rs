//! Order-preserving batch execution, data parallel when the `parallel`
//! feature is enabled.

/// How a batch of independent items is processed. Results are always
/// returned in input order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// `threads == 0` uses the global pool. Falls back to sequential
    /// execution when built without the `parallel` feature.
    Parallel { threads: usize },
}

impl Execution {
    /// `Parallel` with `threads` workers when more than one is requested.
    pub fn with_threads(threads: usize) -> Self {
        if threads <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { threads }
        }
    }

    pub fn map_ordered<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(usize, &T) -> U + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            Execution::Parallel { threads } => parallel_map(threads, items, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, U, F>(threads: usize, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    let run = || items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    if threads == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, U, F>(_threads: usize, items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..500).collect();
        let seq = Execution::Sequential.map_ordered(&items, |i, x| (i as u64) * x);
        let par = Execution::Parallel { threads: 4 }.map_ordered(&items, |i, x| (i as u64) * x);
        assert_eq!(seq, par);
    }

    #[test]
    fn one_thread_is_sequential() {
        assert_eq!(Execution::with_threads(1), Execution::Sequential);
        assert_eq!(Execution::with_threads(8), Execution::Parallel { threads: 8 });
    }
}
