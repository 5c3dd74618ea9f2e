/// Selects between the rayon-backed and the plain sequential code path.
///
/// Both paths produce bit-identical results: every parallel section writes
/// into its own slot and reductions happen afterwards in index order. When
/// the crate is built without the `parallel` feature, `Parallel` silently
/// runs sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub(crate) fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// `out[i] = f(i)` for every slot, possibly in parallel.
pub(crate) fn fill<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(i, slot)| *slot = f(i));
        return;
    }
    let _ = exec;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}
