//! Data-parallel helpers. With the `parallel` feature the work runs on a rayon
//! pool capped by `RCJC_THREADS`; without it everything runs in order on the
//! calling thread. Results always come back in input order.

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RCJC_THREADS";

/// Worker cap from `RCJC_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n: &usize| n > 0)
}

/// Workers to use for a request of `jobs`, after applying the cap.
pub fn effective_jobs(jobs: Option<usize>) -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let want = jobs.filter(|&j| j > 0).unwrap_or(avail);
    match thread_cap() {
        Some(cap) => want.min(cap),
        None => want,
    }
}

/// Pin dense linear algebra to one thread so results do not depend on the
/// pool a run lands in. Parallelism lives at the run level.
pub fn sequential_linalg() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
fn pool(jobs: Option<usize>) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(effective_jobs(jobs))
        .build()
        .expect("thread pool")
}

/// `items.map(f)` with at most `jobs` workers.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], jobs: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    pool(jobs).install(|| items.par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], _jobs: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Run two closures, concurrently when possible.
#[cfg(feature = "parallel")]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    if rayon::current_thread_index().is_some() {
        rayon::join(a, b)
    } else {
        pool(None).install(|| rayon::join(a, b))
    }
}

#[cfg(not(feature = "parallel"))]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    (a(), b())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        let v: Vec<u64> = (0..100).collect();
        for jobs in [Some(1), Some(3), None] {
            let out = map(&v, jobs, |x| x * x);
            assert_eq!(out, v.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn join_runs_both() {
        let (a, b) = join(|| 1 + 1, || "x".repeat(3));
        assert_eq!((a, b.as_str()), (2, "xxx"));
    }

    #[test]
    fn jobs_positive() {
        assert!(effective_jobs(Some(4)) >= 1);
        assert!(effective_jobs(None) >= 1);
    }
}
