//! Wall-clock helpers.

use std::time::Instant;

use crate::error::Result;

/// Run `f` `repeats` times (at least once) and return the last result with
/// the fastest wall-clock time in seconds.
pub fn best_of<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        let v = f()?;
        best = best.min(t0.elapsed().as_secs_f64());
        out = Some(v);
    }
    Ok((out.expect("at least one repeat"), best))
}
