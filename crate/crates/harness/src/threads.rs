use anyhow::{bail, Context, Result};

/// Environment variable capping the worker pool.
pub const THREADS_VAR: &str = "TTR_THREADS";

/// Sizes the global rayon pool from `TTR_THREADS` when it is set. Results do
/// not depend on the pool size.
pub fn init_pool() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_VAR}={raw:?} is not a thread count"))?;
    if n == 0 {
        bail!("{THREADS_VAR} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")
}
