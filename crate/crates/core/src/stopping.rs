//! Stopping thresholds and the two test statistics: the exact generalized
//! likelihood ratio and the feasible lower bound that factors out the
//! smallest pair count.

use std::f64::consts::PI;

use crate::allocation::{catalog_inf, class_value};
use crate::divergence::entropy;
use crate::error::{Error, Result};
use crate::estimator::PairStats;
use crate::model::{bell_number, pair_count, Catalog, PairSet, Partition};

/// `h(u) = u - ln u`.
pub fn h_fn(u: f64) -> Result<f64> {
    if !(u >= 1.0) {
        return Err(Error::Domain(format!("h is defined for u >= 1, got {u}")));
    }
    Ok(u - u.ln())
}

/// Inverse of `h` on `[1, inf)` by Newton iteration from above.
pub fn h_inv(x: f64) -> Result<f64> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("h_inv is defined for x >= 1, got {x}")));
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    // h is convex and increasing here, so Newton from the right is monotone
    let mut u = x + x.ln() + 1.0;
    for _ in 0..100 {
        let f = u - u.ln() - x;
        let next = u - f / (1.0 - 1.0 / u);
        if !(next > 1.0) {
            u = 0.5 * (u + 1.0);
            continue;
        }
        let done = (next - u).abs() <= 1e-15 * u;
        u = next;
        if done {
            break;
        }
    }
    Ok(u)
}

/// `h~_{3/2}`.
fn h_tilde(y: f64) -> Result<f64> {
    let z = 1.5f64;
    let branch = h_fn(1.0 / z.ln())?;
    if y >= branch {
        let u = h_inv(y)?;
        Ok((1.0 / u).exp() * u)
    } else {
        Ok(z * (y - z.ln().ln()))
    }
}

/// Point where `h~_{3/2}` switches branches, `h(1 / ln 1.5)`.
pub fn h_tilde_branch_point() -> f64 {
    let u = 1.0 / 1.5f64.ln();
    u - u.ln()
}

/// `C_exp(x) = 2 h~_{3/2}((h_inv(1 + x) + ln(2 zeta(2))) / 2)`.
pub fn c_exp(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("C_exp needs x >= 0, got {x}")));
    }
    let zeta2 = PI * PI / 6.0;
    Ok(2.0 * h_tilde((h_inv(1.0 + x)? + (2.0 * zeta2).ln()) / 2.0)?)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `3 sum ln(1 + ln N_ij) + |I| C_exp(ln(1/delta) / |I|)`.
pub fn beta_theory(stats: &PairStats, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if let Some(k) = stats.counts().iter().position(|&n| n == 0) {
        let (i, j) = stats.pair_index().pair(k).labels();
        return Err(Error::ZeroCount { i, j });
    }
    let pairs = stats.counts().len() as f64;
    let first: f64 = stats.counts().iter().map(|&n| (1.0 + (n as f64).ln()).ln()).sum();
    Ok(3.0 * first + pairs * c_exp((1.0 / delta).ln() / pairs)?)
}

/// `3 R ln(1 + ln(t / R)) + R C_exp(ln((Bell(M) - 1) / delta) / R)` with
/// rank `R = M - 1`.
pub fn beta_experimental(t: u64, delta: f64, m: usize) -> Result<f64> {
    check_delta(delta)?;
    if m < 2 {
        return Err(Error::Domain("the experimental threshold needs M >= 2".into()));
    }
    let r = (m - 1) as f64;
    if (t as f64) < r {
        return Err(Error::Domain(format!("t = {t} is below the rank {r}")));
    }
    let bell = bell_number(m)? as f64;
    Ok(3.0 * r * (1.0 + (t as f64 / r).ln()).ln() + r * c_exp(((bell - 1.0) / delta).ln() / r)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdKind {
    Theory,
    Experimental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatisticKind {
    /// Smallest count times the unweighted distance to the nearest other class.
    Feasible,
    /// The exact generalized likelihood ratio.
    Glr,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdConfig {
    pub kind: ThresholdKind,
    pub delta: f64,
    pub m: usize,
    /// `R = M - 1`.
    pub rank: usize,
    /// `Bell(M)`, the number of clusterings.
    pub bell: u128,
}

impl ThresholdConfig {
    pub fn new(kind: ThresholdKind, delta: f64, m: usize) -> Result<Self> {
        check_delta(delta)?;
        if m < 2 {
            return Err(Error::Domain("thresholds need M >= 2".into()));
        }
        Ok(ThresholdConfig {
            kind,
            delta,
            m,
            rank: m - 1,
            bell: bell_number(m)?,
        })
    }

    pub fn threshold(&self, stats: &PairStats) -> Result<f64> {
        match self.kind {
            ThresholdKind::Theory => beta_theory(stats, self.delta),
            ThresholdKind::Experimental => beta_experimental(stats.t(), self.delta, self.m),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopDecision {
    pub statistic: f64,
    pub threshold: f64,
    pub stop: bool,
    pub kind: StatisticKind,
}

impl StopDecision {
    pub fn new(statistic: f64, threshold: f64, kind: StatisticKind) -> Self {
        StopDecision {
            statistic,
            threshold,
            stop: statistic > threshold,
            kind,
        }
    }
}

fn counts_as_weights(stats: &PairStats) -> Vec<f64> {
    stats.counts().iter().map(|&n| n as f64).collect()
}

/// Distance from the empirical pair matrix to the class of `part`.
/// Unweighted sums use unit weights; weighted ones use the pair counts in
/// both the means and the divergence sum.
pub fn class_objective(stats: &PairStats, part: &Partition, weighted: bool) -> Result<f64> {
    let c = stats.means()?;
    let w = if weighted {
        counts_as_weights(stats)
    } else {
        vec![1.0; c.len()]
    };
    Ok(class_value(&w, &c, part.same_pairs()))
}

/// Feasible statistic, reference version: a full scan over the catalog.
pub fn z_hat(stats: &PairStats, current: &Partition, catalog: &Catalog) -> Result<f64> {
    let c = stats.means()?;
    let ones = vec![1.0; c.len()];
    Ok(stats.min_count() as f64 * catalog_inf(&ones, &c, catalog, current))
}

/// Exact GLR statistic by a full scan over the catalog.
pub fn z_exact(stats: &PairStats, current: &Partition, catalog: &Catalog) -> Result<f64> {
    let c = stats.means()?;
    Ok(catalog_inf(&counts_as_weights(stats), &c, catalog, current))
}

/// Catalog classes grouped by the number of same pairs, for the closed-form
/// feasible statistic.
#[derive(Clone, Debug)]
pub struct ClassGroups {
    n_pairs: usize,
    masks: Vec<PairSet>,
    by_size: Vec<(usize, Vec<usize>)>,
}

impl ClassGroups {
    pub fn new(catalog: &Catalog) -> Self {
        let n_pairs = pair_count(catalog.items());
        let mut by_size: Vec<(usize, Vec<usize>)> = (0..=n_pairs).map(|n| (n, Vec::new())).collect();
        for (k, mask) in catalog.same_masks().iter().enumerate() {
            by_size[mask.len()].1.push(k);
        }
        by_size.retain(|(_, ids)| !ids.is_empty());
        ClassGroups {
            n_pairs,
            masks: catalog.same_masks().to_vec(),
            by_size,
        }
    }

    /// Feasible statistic without scanning every class's divergence sum.
    ///
    /// The unit-weight distance to a class with `n` same pairs whose means
    /// sum to `s` is `n H(max(s/n, 1/2)) + n' H(min((C - s)/n', 1/2)) - sum H(c)`
    /// with `n' = |I| - n` and `C` the total of all means. For fixed `n` this
    /// is minimized by the largest `s`, or, when `C <= |I|/2`, possibly by the
    /// smallest `s` among classes whose cross mean stays below 1/2.
    pub fn z_hat(&self, stats: &PairStats, current: &Partition) -> Result<f64> {
        let c = stats.means()?;
        let own = current.same_pairs();
        let total: f64 = c.iter().sum();
        let base: f64 = c.iter().map(|&x| entropy(x)).sum();
        let pairs = self.n_pairs as f64;
        let value = |n: usize, s: f64| {
            let nq = self.n_pairs - n;
            let mut v = 0.0;
            if n > 0 {
                v += n as f64 * entropy((s / n as f64).max(0.5));
            }
            if nq > 0 {
                v += nq as f64 * entropy(((total - s) / nq as f64).min(0.5));
            }
            v
        };

        let mut best = f64::INFINITY;
        for (n, ids) in &self.by_size {
            let nq = (self.n_pairs - n) as f64;
            let mut s_max = f64::NEG_INFINITY;
            let mut s_min = f64::INFINITY;
            for &k in ids {
                let mask = self.masks[k];
                if mask == own {
                    continue;
                }
                let s = mask.sum(&c);
                s_max = s_max.max(s);
                if total - s < 0.5 * nq {
                    s_min = s_min.min(s);
                }
            }
            if s_max.is_finite() {
                best = best.min(value(*n, s_max));
            }
            if total <= pairs / 2.0 && s_min.is_finite() {
                best = best.min(value(*n, s_min));
            }
        }
        if !best.is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok(stats.min_count() as f64 * (best - base).max(0.0))
    }

    /// Exact GLR statistic through the same entropy identity, with counts as
    /// weights. Linear in the catalog size with two entropies per class.
    pub fn z_exact(&self, stats: &PairStats, current: &Partition) -> Result<f64> {
        let c = stats.means()?;
        let own = current.same_pairs();
        let counts = stats.counts();
        let sums = stats.sums();
        let total_n: u64 = counts.iter().sum();
        let total_s: u64 = sums.iter().sum();
        let base: f64 = counts.iter().zip(&c).map(|(&n, &x)| n as f64 * entropy(x)).sum();
        let mut best = f64::INFINITY;
        for &mask in &self.masks {
            if mask == own {
                continue;
            }
            let (mut np, mut sp) = (0u64, 0u64);
            for k in mask.iter() {
                np += counts[k];
                sp += sums[k];
            }
            let (nq, sq) = (total_n - np, total_s - sp);
            let mut v = 0.0;
            if np > 0 {
                v += np as f64 * entropy((sp as f64 / np as f64).max(0.5));
            }
            if nq > 0 {
                v += nq as f64 * entropy((sq as f64 / nq as f64).min(0.5));
            }
            best = best.min(v);
        }
        if !best.is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok((best - base).max(0.0))
    }

    pub fn statistic(&self, kind: StatisticKind, stats: &PairStats, current: &Partition) -> Result<f64> {
        match kind {
            StatisticKind::Feasible => self.z_hat(stats, current),
            StatisticKind::Glr => self.z_exact(stats, current),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::bernoulli_kl;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_stats(m: usize, n: u64, successes: &[u64]) -> PairStats {
        PairStats::from_counts(m, vec![n; successes.len()], successes.to_vec()).unwrap()
    }

    fn random_stats(rng: &mut impl Rng, m: usize, equal: bool) -> PairStats {
        let n = pair_count(m);
        let shared = rng.gen_range(1..30u64);
        let counts: Vec<u64> = (0..n).map(|_| if equal { shared } else { rng.gen_range(1..30) }).collect();
        let sums = counts.iter().map(|&c| rng.gen_range(0..=c)).collect();
        PairStats::from_counts(m, counts, sums).unwrap()
    }

    #[test]
    fn h_and_inverse() {
        assert_eq!(h_fn(1.0).unwrap(), 1.0);
        assert_eq!(h_inv(1.0).unwrap(), 1.0);
        assert!((h_inv(2.0).unwrap() - 3.14619).abs() < 1e-5);
        assert!(h_inv(0.5).is_err());
        assert!(h_fn(0.5).is_err());
        let mut x = 1.0;
        while x <= 1e3 {
            let u = h_inv(x).unwrap();
            assert!((h_fn(u).unwrap() - x).abs() < 1e-10, "x = {x}");
            x *= 1.05;
        }
    }

    #[test]
    fn c_exp_values() {
        assert!((h_tilde_branch_point() - 1.5635).abs() < 1e-3);
        assert!((c_exp(0.0).unwrap() - 5.994433).abs() < 1e-5);
        assert!((c_exp(1.0).unwrap() - 9.104517).abs() < 1e-5);
        assert!((c_exp(2.0).unwrap() - 10.868487).abs() < 1e-5);
        assert!(c_exp(-1.0).is_err());
        let mut prev = c_exp(0.0).unwrap();
        for k in 1..200 {
            let v = c_exp(k as f64 * 0.05).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn thresholds() {
        let s = uniform_stats(6, 1, &[0; 15]);
        let b = beta_theory(&s, 0.1).unwrap();
        assert!((b - 15.0 * c_exp(10f64.ln() / 15.0).unwrap()).abs() < 1e-12);
        let mut bigger = s.clone();
        bigger.update_index(3, true);
        assert!(beta_theory(&bigger, 0.1).unwrap() > b);
        assert!(beta_theory(&s, 0.01).unwrap() > b);
        assert!(beta_theory(&PairStats::new(3).unwrap(), 0.1).is_err());

        let at_rank = beta_experimental(5, 0.1, 6).unwrap();
        assert!((at_rank - 5.0 * c_exp((202f64 / 0.1).ln() / 5.0).unwrap()).abs() < 1e-12);
        assert!(beta_experimental(4, 0.1, 6).is_err());
        assert!(beta_experimental(100, 0.1, 6).unwrap() > at_rank);
        assert!(beta_experimental(100, 0.01, 6).unwrap() > beta_experimental(100, 0.1, 6).unwrap());
        let cfg = ThresholdConfig::new(ThresholdKind::Experimental, 0.1, 6).unwrap();
        assert_eq!((cfg.rank, cfg.bell), (5, 203));
        assert!(ThresholdConfig::new(ThresholdKind::Theory, 1.0, 6).is_err());
    }

    #[test]
    fn uninformative_data_never_stops() {
        let cat = Catalog::new(4).unwrap();
        let s = uniform_stats(4, 2, &[1; 6]);
        let groups = ClassGroups::new(&cat);
        for part in cat.partitions() {
            assert_eq!(class_objective(&s, part, false).unwrap(), 0.0);
            assert_eq!(z_hat(&s, part, &cat).unwrap(), 0.0);
            assert_eq!(z_exact(&s, part, &cat).unwrap(), 0.0);
            assert!(groups.z_hat(&s, part).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn split_class_of_four_items() {
        let cat = Catalog::new(4).unwrap();
        let truth = Partition::from_clusters(&[vec![1, 2], vec![3, 4]]).unwrap();
        // c_hat equals the true matrix at p = 0.6, q = 0.4
        let same = truth.same_pairs();
        let succ: Vec<u64> = (0..6).map(|k| if same.contains(k) { 6 } else { 4 }).collect();
        let s = uniform_stats(4, 10, &succ);
        assert_eq!(class_objective(&s, &truth, false).unwrap(), 0.0);
        let split = Partition::from_clusters(&[vec![1], vec![2], vec![3, 4]]).unwrap();
        let expected = bernoulli_kl(0.6, 0.44) + 4.0 * bernoulli_kl(0.4, 0.44);
        let v = class_objective(&s, &split, false).unwrap();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.0645907).abs() < 1e-7);
        // the split is the nearest other class; counts of 10 scale the result
        assert!((z_hat(&s, &truth, &cat).unwrap() - 10.0 * expected).abs() < 1e-10);
        assert!((z_exact(&s, &truth, &cat).unwrap() - 10.0 * expected).abs() < 1e-10);
    }

    #[test]
    fn exact_dominates_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let m = rng.gen_range(2..=5);
            let cat = Catalog::new(m).unwrap();
            let current = cat.partition(rng.gen_range(0..cat.len())).clone();
            let equal = rng.gen_bool(0.3);
            let s = random_stats(&mut rng, m, equal);
            let zh = z_hat(&s, &current, &cat).unwrap();
            let ze = z_exact(&s, &current, &cat).unwrap();
            assert!(ze >= zh - 1e-12);
            if equal {
                assert!((ze - zh).abs() <= 1e-9 * ze.max(1.0));
            }
        }
    }

    #[test]
    fn fast_paths_agree_with_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let m = rng.gen_range(2..=6);
            let cat = Catalog::new(m).unwrap();
            let groups = ClassGroups::new(&cat);
            let current = cat.partition(rng.gen_range(0..cat.len())).clone();
            let s = random_stats(&mut rng, m, false);
            let zh = z_hat(&s, &current, &cat).unwrap();
            let fast = groups.z_hat(&s, &current).unwrap();
            assert!((zh - fast).abs() <= 1e-9 * zh.max(1.0), "{zh} vs {fast}");
            let ze = z_exact(&s, &current, &cat).unwrap();
            let fast = groups.z_exact(&s, &current).unwrap();
            assert!((ze - fast).abs() <= 1e-9 * ze.max(1.0), "{ze} vs {fast}");
        }
    }

    proptest! {
        #[test]
        fn beta_monotone_in_counts(k in 0usize..15, extra in 1u64..100, base in 1u64..50) {
            let s = uniform_stats(6, base, &[0; 15]);
            let mut counts = s.counts().to_vec();
            counts[k] += extra;
            let more = PairStats::from_counts(6, counts, vec![0; 15]).unwrap();
            prop_assert!(beta_theory(&more, 0.05).unwrap() >= beta_theory(&s, 0.05).unwrap());
        }

        #[test]
        fn beta_experimental_monotone_in_t(t in 5u64..1_000_000, dt in 1u64..1000) {
            prop_assert!(beta_experimental(t + dt, 0.05, 6).unwrap() >= beta_experimental(t, 0.05, 6).unwrap());
        }
    }
}
