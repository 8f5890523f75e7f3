//! Worker-count control through `NGASH_THREADS`.

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "NGASH_THREADS";

/// Requested worker count, or `None` to use rayon's default.
pub fn requested_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Contract(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Runs `f` on a pool sized by `NGASH_THREADS`.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = requested_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
