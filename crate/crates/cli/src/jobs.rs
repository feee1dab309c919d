//! Sweep execution: independent points run as parallel jobs.
//!
//! Every job owns its own outputs; results are joined back in submission
//! order, so file contents and the manifest index never depend on
//! scheduling.

use crate::CliResult;

pub fn run_all<T, F>(jobs: Vec<F>) -> CliResult<Vec<T>>
where
    T: Send,
    F: FnOnce() -> CliResult<T> + Send,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.into_iter().map(|job| scope.spawn(job)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|panic| std::panic::resume_unwind(panic)))
            .collect()
    })
}
