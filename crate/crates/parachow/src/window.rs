//! Iteration over integer boxes of multi-indices.

use crate::error::{Error, Result};

/// Lexicographic iterator over the half-open box `[lo_i, hi_i)` per axis.
/// Zero axes yield exactly one empty index.
pub struct BoxIter {
    lo: Vec<i64>,
    hi: Vec<i64>,
    cur: Option<Vec<i64>>,
}

impl BoxIter {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        let cur = if lo.iter().zip(&hi).all(|(a, b)| a < b) || lo.is_empty() {
            Some(lo.clone())
        } else {
            None
        };
        BoxIter { lo, hi, cur }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let cur = self.cur.as_mut()?;
        let item = cur.clone();
        // Odometer increment from the last axis.
        let mut axis = cur.len();
        loop {
            if axis == 0 {
                self.cur = None;
                break;
            }
            axis -= 1;
            cur[axis] += 1;
            if cur[axis] < self.hi[axis] {
                break;
            }
            cur[axis] = self.lo[axis];
        }
        Some(item)
    }
}

/// The cube `[0, n)^m`.
pub fn cube(n: i64, m: usize) -> BoxIter {
    BoxIter::new(vec![0; m], vec![n; m])
}

/// Row-major linear index of `idx` inside the uniform box starting at `lo`
/// with side `n`; the first axis is the slowest.
pub fn linear_index(idx: &[i64], lo: i64, n: i64) -> usize {
    let mut acc: usize = 0;
    for &a in idx {
        debug_assert!(a >= lo && a < lo + n);
        acc = acc * (n as usize) + (a - lo) as usize;
    }
    acc
}

fn cell_limit() -> u128 {
    std::env::var("PARACHOW_MAX_CELLS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000)
}

/// Guard against silently enormous dense windows: n^m must stay within the
/// configured cell limit (env `PARACHOW_MAX_CELLS`, default 10^6).
pub fn checked_cell_count(n: i64, m: usize) -> Result<usize> {
    if n < 1 {
        return Err(Error::validation("denominator n must be at least 1"));
    }
    let mut acc: u128 = 1;
    for _ in 0..m {
        acc = acc.saturating_mul(n as u128);
        if acc > cell_limit() {
            return Err(Error::validation(format!(
                "window of {n}^{m} cells exceeds the limit {}; raise PARACHOW_MAX_CELLS to override",
                cell_limit()
            )));
        }
    }
    Ok(acc as usize)
}
