//! Order-preserving parallel map over independent work items.
//!
//! With the `parallel` feature the work runs on a rayon pool whose size is
//! capped by `BLOWUP_THREADS`; without it, or with `BLOWUP_THREADS=1`, the
//! items are processed in order on the calling thread. Results are always
//! returned in input order.

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BLOWUP_THREADS";

fn requested_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

/// Number of workers a call to [`map`] will use.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        pool().current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new().thread_name(|i| format!("blowup-{i}"));
        if let Some(n) = requested_threads() {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if requested_threads() == Some(1) {
            return map_sequential(items, f);
        }
        use rayon::prelude::*;
        pool().install(|| items.par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested_threads;
        map_sequential(items, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v: Vec<u64> = (0..1000).collect();
        let a = map(&v, |x| x * x);
        assert_eq!(a, map_sequential(&v, |x| x * x));
        assert!(worker_count() >= 1);
    }
}
