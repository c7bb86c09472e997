//! Per-pair counts and means, and the projection of the empirical pair
//! matrix onto a valid clustering.

use crate::error::{Error, Result};
use crate::model::{Catalog, Pair, PairIndex, PairSet, Partition};
use crate::oracle::QueryRecord;

/// Keeps projected probabilities strictly on their side of 1/2.
pub const CLAMP_MARGIN: f64 = 1e-6;

/// Sufficient statistics: `N_ij(t)` and the number of positive answers.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStats {
    index: PairIndex,
    counts: Vec<u64>,
    sums: Vec<u64>,
    t: u64,
}

impl PairStats {
    pub fn new(m: usize) -> Result<Self> {
        let index = PairIndex::new(m)?;
        let n = index.len();
        Ok(PairStats {
            index,
            counts: vec![0; n],
            sums: vec![0; n],
            t: 0,
        })
    }

    /// Builds stats directly from per-pair counts and positive totals.
    pub fn from_counts(m: usize, counts: Vec<u64>, sums: Vec<u64>) -> Result<Self> {
        let index = PairIndex::new(m)?;
        if counts.len() != index.len() || sums.len() != index.len() {
            return Err(Error::Config(format!(
                "expected {} pair entries, got {} counts and {} sums",
                index.len(),
                counts.len(),
                sums.len()
            )));
        }
        if let Some(k) = (0..counts.len()).find(|&k| sums[k] > counts[k]) {
            return Err(Error::Config(format!(
                "pair {} has more positives than queries",
                index.pair(k)
            )));
        }
        let t = counts.iter().sum();
        Ok(PairStats {
            index,
            counts,
            sums,
            t,
        })
    }

    pub fn items(&self) -> usize {
        self.index.items()
    }

    pub fn pair_index(&self) -> &PairIndex {
        &self.index
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[u64] {
        &self.sums
    }

    pub fn count(&self, pair: Pair) -> Result<u64> {
        Ok(self.counts[self.index.index_of(pair)?])
    }

    pub fn min_count(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    pub fn update(&mut self, pair: Pair, y: bool) -> Result<()> {
        let k = self.index.index_of(pair)?;
        self.update_index(k, y);
        Ok(())
    }

    #[inline]
    pub fn update_index(&mut self, k: usize, y: bool) {
        self.counts[k] += 1;
        self.sums[k] += y as u64;
        self.t += 1;
    }

    pub fn record(&mut self, rec: &QueryRecord) -> Result<()> {
        self.update(rec.pair, rec.y)
    }

    pub fn empirical_mean(&self, pair: Pair) -> Result<f64> {
        let k = self.index.index_of(pair)?;
        self.mean_at(k)
    }

    fn mean_at(&self, k: usize) -> Result<f64> {
        if self.counts[k] == 0 {
            let (i, j) = self.index.pair(k).labels();
            return Err(Error::ZeroCount { i, j });
        }
        Ok(self.sums[k] as f64 / self.counts[k] as f64)
    }

    /// All `c_hat_ij` in pair order; fails if some pair is still unqueried.
    pub fn means(&self) -> Result<Vec<f64>> {
        (0..self.counts.len()).map(|k| self.mean_at(k)).collect()
    }

    /// Pairs whose empirical mean is at least 1/2.
    pub fn binarized(&self) -> Result<PairSet> {
        let means = self.means()?;
        Ok(means
            .iter()
            .enumerate()
            .filter(|(_, &c)| c >= 0.5)
            .map(|(k, _)| k)
            .collect())
    }
}

/// The empirical instance projected onto the feasible set.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedInstance {
    pub partition: Partition,
    /// Position of `partition` in the catalog.
    pub class_id: usize,
    pub p: f64,
    pub q: f64,
}

/// Catalog index minimizing the pair Hamming distance to `target`; the first
/// one in catalog order wins ties.
pub fn nearest_class(target: PairSet, catalog: &Catalog) -> usize {
    let mut best = (u32::MAX, 0);
    for (k, same) in catalog.same_masks().iter().enumerate() {
        let dist = (same.bits() ^ target.bits()).count_ones();
        if dist < best.0 {
            best = (dist, k);
            if dist == 0 {
                break;
            }
        }
    }
    best.1
}

/// Binarize, snap to the nearest clustering, then estimate `(p, q)` as
/// count-weighted means over that clustering's same and cross pairs.
pub fn project(stats: &PairStats, catalog: &Catalog) -> Result<ProjectedInstance> {
    if catalog.items() != stats.items() {
        return Err(Error::ItemCountMismatch {
            left: catalog.items(),
            right: stats.items(),
        });
    }
    let target = stats.binarized()?;
    let class_id = nearest_class(target, catalog);
    let same = catalog.same_masks()[class_id];

    let (mut sp, mut np, mut sq, mut nq) = (0u64, 0u64, 0u64, 0u64);
    for k in 0..stats.counts.len() {
        if same.contains(k) {
            sp += stats.sums[k];
            np += stats.counts[k];
        } else {
            sq += stats.sums[k];
            nq += stats.counts[k];
        }
    }
    let p = if np == 0 {
        1.0
    } else {
        (sp as f64 / np as f64).clamp(0.5 + CLAMP_MARGIN, 1.0)
    };
    let q = if nq == 0 {
        0.0
    } else {
        (sq as f64 / nq as f64).clamp(0.0, 0.5 - CLAMP_MARGIN)
    };
    Ok(ProjectedInstance {
        partition: catalog.partition(class_id).clone(),
        class_id,
        p,
        q,
    })
}
