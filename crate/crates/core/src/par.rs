//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) work is spread across the rayon
//! pool; without it, or when [`Execution::Sequential`] is requested, the same
//! closures run on the calling thread. Results never depend on the mode:
//! every helper writes disjoint output slots.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to schedule independent work items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
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

/// Fills `out` row by row: `f(row_index, row_slice)`.
pub fn for_each_row<T, F>(exec: Execution, out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    debug_assert!(width > 0 && out.len() % width == 0);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(width).enumerate().for_each(|(r, row)| f(r, row));
        return;
    }
    let _ = exec;
    out.chunks_mut(width).enumerate().for_each(|(r, row)| f(r, row));
}

/// Ordered map over a slice.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Runs `f` inside a pool limited to `jobs` threads (or the global pool when
/// `jobs` is `None`).
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<u64> = (0..1000).collect();
        let a = map(Execution::Sequential, &items, |x| x * x);
        let b = map(Execution::Parallel, &items, |x| x * x);
        assert_eq!(a, b);

        let mut s = vec![0usize; 12];
        let mut p = vec![0usize; 12];
        for_each_row(Execution::Sequential, &mut s, 4, |r, row| {
            row.iter_mut().enumerate().for_each(|(c, v)| *v = r * 10 + c)
        });
        for_each_row(Execution::Parallel, &mut p, 4, |r, row| {
            row.iter_mut().enumerate().for_each(|(c, v)| *v = r * 10 + c)
        });
        assert_eq!(s, p);
    }
}
