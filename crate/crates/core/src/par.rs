//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! pool; without it, or with [`Execution::Sequential`], the same closures run
//! on the calling thread. Results are identical either way: every helper
//! preserves index order and never reorders floating-point reductions.

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, in index order.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
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

/// Fills `out` in chunks of `chunk` elements; `f(chunk_index, slice)`.
pub fn for_each_chunk<T, F>(exec: Execution, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk).enumerate().for_each(|(k, s)| f(k, s));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk).enumerate().for_each(|(k, s)| f(k, s));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        assert_eq!(map_range(Execution::Sequential, 1000, f), map_range(Execution::Parallel, 1000, f));

        let mut a = vec![0usize; 97];
        let mut b = vec![0usize; 97];
        let fill = |k: usize, s: &mut [usize]| s.iter_mut().enumerate().for_each(|(i, v)| *v = k * 10 + i);
        for_each_chunk(Execution::Sequential, &mut a, 10, fill);
        for_each_chunk(Execution::Parallel, &mut b, 10, fill);
        assert_eq!(a, b);
        assert_eq!(a[96], 96);
    }
}
