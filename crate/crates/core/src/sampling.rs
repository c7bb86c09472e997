//! D-tracking with forced exploration.

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::estimator::PairStats;
use crate::model::{Pair, PairIndex, PairSet};

/// Pairs with `N_ij(t) < (sqrt(t) - |I|/2)_+`.
pub fn forced_set(stats: &PairStats) -> PairSet {
    let pairs = stats.counts().len() as f64;
    let bar = ((stats.t() as f64).sqrt() - pairs / 2.0).max(0.0);
    stats
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| (n as f64) < bar)
        .map(|(k, _)| k)
        .collect()
}

/// Next pair index: the least-sampled forced pair if any, otherwise the pair
/// furthest behind `t * target`. Ties go to the smallest index.
pub fn select_index(stats: &PairStats, target: &[f64]) -> usize {
    let forced = forced_set(stats);
    let counts = stats.counts();
    if !forced.is_empty() {
        // iter() is increasing, so min_by_key keeps the first minimum
        return forced.iter().min_by_key(|&k| counts[k]).expect("nonempty");
    }
    let t = stats.t() as f64;
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, (&w, &n)) in target.iter().zip(counts).enumerate() {
        let score = t * w - n as f64;
        if score > best.0 {
            best = (score, k);
        }
    }
    best.1
}

/// [`select_index`] with validation, returning the pair itself.
pub fn select_pair(stats: &PairStats, target: &Allocation) -> Result<Pair> {
    if target.len() != stats.counts().len() {
        return Err(Error::InvalidAllocation(format!(
            "target has {} weights for {} pairs",
            target.len(),
            stats.counts().len()
        )));
    }
    Ok(stats.pair_index().pair(select_index(stats, target.weights())))
}

/// Every pair once, in lexicographic order.
pub fn init_round(m: usize) -> Result<Vec<Pair>> {
    Ok(PairIndex::new(m)?.pairs().to_vec())
}
