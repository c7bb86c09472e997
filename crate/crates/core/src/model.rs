//! Items, pairs, set partitions and the merge/split neighbourhood of a clustering.
//!
//! Items are 1-indexed at every external boundary (JSON, CSV, `Display`) and
//! 0-indexed internally. Pair sets are bitmasks over the lexicographic pair
//! index, so set algebra in the hot loops is a handful of integer operations.

use std::collections::HashMap;
use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest item count representable: `C(16, 2) = 120` pairs fit in a `u128`.
pub const MAX_ITEMS: usize = 16;

/// Default guard on exhaustive partition enumeration (`Bell(10) = 115_975`).
pub const DEFAULT_ENUMERATION_LIMIT: usize = 10;

/// An unordered pair of distinct items, stored 0-indexed with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
}

impl Pair {
    pub fn new(a: usize, b: usize) -> Self {
        if a < b {
            Pair { i: a, j: b }
        } else {
            Pair { i: b, j: a }
        }
    }

    /// Builds a pair from 1-indexed item labels.
    pub fn one_based(i: usize, j: usize, m: usize) -> Result<Self> {
        if i == 0 || j == 0 || i == j || i > m || j > m {
            return Err(Error::PairOutOfRange { i, j, m });
        }
        Ok(Pair::new(i - 1, j - 1))
    }

    /// The 1-indexed labels `(i, j)` with `i < j`.
    pub fn labels(&self) -> (usize, usize) {
        (self.i + 1, self.j + 1)
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i + 1, self.j + 1)
    }
}

/// A set of pair indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairSet(u128);

impl PairSet {
    pub const EMPTY: PairSet = PairSet(0);

    /// The set `{0, .., len - 1}`.
    pub fn full(len: usize) -> Self {
        debug_assert!(len <= 128);
        if len == 128 {
            PairSet(u128::MAX)
        } else {
            PairSet((1u128 << len) - 1)
        }
    }

    pub fn from_bits(bits: u128) -> Self {
        PairSet(bits)
    }

    pub fn bits(&self) -> u128 {
        self.0
    }

    pub fn contains(&self, idx: usize) -> bool {
        idx < 128 && (self.0 >> idx) & 1 == 1
    }

    pub fn insert(&mut self, idx: usize) {
        self.0 |= 1u128 << idx;
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(&self, other: &PairSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Indices in increasing order.
    pub fn iter(&self) -> PairSetIter {
        PairSetIter(self.0)
    }

    /// Sum of `values[k]` over the members of the set.
    pub fn sum(&self, values: &[f64]) -> f64 {
        self.iter().map(|k| values[k]).sum()
    }
}

impl BitOr for PairSet {
    type Output = PairSet;
    fn bitor(self, rhs: PairSet) -> PairSet {
        PairSet(self.0 | rhs.0)
    }
}

impl BitAnd for PairSet {
    type Output = PairSet;
    fn bitand(self, rhs: PairSet) -> PairSet {
        PairSet(self.0 & rhs.0)
    }
}

impl Sub for PairSet {
    type Output = PairSet;
    fn sub(self, rhs: PairSet) -> PairSet {
        PairSet(self.0 & !rhs.0)
    }
}

impl Not for PairSet {
    type Output = PairSet;
    fn not(self) -> PairSet {
        PairSet(!self.0)
    }
}

impl FromIterator<usize> for PairSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = PairSet::EMPTY;
        for idx in iter {
            set.insert(idx);
        }
        set
    }
}

pub struct PairSetIter(u128);

impl Iterator for PairSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let idx = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(idx)
    }
}

/// The index set `I` of all pairs `i < j`, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairIndex {
    m: usize,
    pairs: Vec<Pair>,
}

impl PairIndex {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::ItemCount {
                m,
                min: 1,
                max: MAX_ITEMS,
            });
        }
        let pairs = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| Pair { i, j }))
            .collect();
        Ok(PairIndex { m, pairs })
    }

    pub fn items(&self) -> usize {
        self.m
    }

    /// `|I| = M(M-1)/2`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn pair(&self, idx: usize) -> Pair {
        self.pairs[idx]
    }

    pub fn index_of(&self, pair: Pair) -> Result<usize> {
        let Pair { i, j } = pair;
        if i >= j || j >= self.m {
            return Err(Error::PairOutOfRange {
                i: i + 1,
                j: j + 1,
                m: self.m,
            });
        }
        Ok(i * (2 * self.m - i - 1) / 2 + (j - i - 1))
    }

    pub fn all(&self) -> PairSet {
        PairSet::full(self.len())
    }
}

/// Number of pairs among `m` items.
pub fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// A clustering of `[M]`, stored as canonical labels: item 0 has label 0 and
/// each new cluster takes the next unused label in order of first occurrence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PartitionJson", into = "PartitionJson")]
pub struct Partition {
    labels: Vec<u8>,
}

/// JSON form of a partition: `{"clusters": [[1,2],[3,4,5],[6]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionJson {
    pub clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes an arbitrary labelling.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Result<Self> {
        let m = labels.len();
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::ItemCount {
                m,
                min: 1,
                max: MAX_ITEMS,
            });
        }
        let mut seen: HashMap<L, u8> = HashMap::new();
        let canonical = labels
            .iter()
            .map(|l| {
                let next = seen.len() as u8;
                *seen.entry(*l).or_insert(next)
            })
            .collect();
        Ok(Partition { labels: canonical })
    }

    /// Builds a partition from 1-indexed clusters covering `1..=m` exactly once.
    pub fn from_clusters(clusters: &[Vec<usize>]) -> Result<Self> {
        let m: usize = clusters.iter().map(Vec::len).sum();
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::ItemCount {
                m,
                min: 1,
                max: MAX_ITEMS,
            });
        }
        let mut labels = vec![usize::MAX; m];
        for (c, block) in clusters.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty cluster".into()));
            }
            for &item in block {
                if item == 0 || item > m {
                    return Err(Error::InvalidPartition(format!(
                        "item {item} outside 1..={m}"
                    )));
                }
                if labels[item - 1] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "item {item} appears more than once"
                    )));
                }
                labels[item - 1] = c;
            }
        }
        Partition::from_labels(&labels)
    }

    /// Every item in one cluster.
    pub fn single_cluster(m: usize) -> Result<Self> {
        Partition::from_labels(&vec![0u8; m])
    }

    /// Every item in its own cluster.
    pub fn singletons(m: usize) -> Result<Self> {
        Partition::from_labels(&(0..m).collect::<Vec<_>>())
    }

    pub fn items(&self) -> usize {
        self.labels.len()
    }

    /// Number of clusters `K`.
    pub fn clusters(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |l| l as usize + 1)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, item: usize) -> usize {
        self.labels[item] as usize
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }

    /// Blocks as sorted 0-indexed item lists, ordered by least element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.clusters()];
        for (item, &l) in self.labels.iter().enumerate() {
            blocks[l as usize].push(item);
        }
        blocks
    }

    /// Blocks with 1-indexed items.
    pub fn clusters_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks()
            .into_iter()
            .map(|b| b.into_iter().map(|i| i + 1).collect())
            .collect()
    }

    /// Pairs placed in the same cluster (`N_p`, i.e. the ones of `C_=`).
    pub fn same_pairs(&self) -> PairSet {
        let m = self.items();
        let mut set = PairSet::EMPTY;
        let mut idx = 0;
        for i in 0..m {
            for j in i + 1..m {
                if self.labels[i] == self.labels[j] {
                    set.insert(idx);
                }
                idx += 1;
            }
        }
        set
    }

    /// `(N_p, N_q)`: same-cluster and cross-cluster pairs.
    pub fn within_cross_pairs(&self) -> (PairSet, PairSet) {
        let same = self.same_pairs();
        (same, PairSet::full(pair_count(self.items())) - same)
    }

    /// Equality of equivalence classes.
    pub fn same_class(&self, other: &Partition) -> Result<bool> {
        if self.items() != other.items() {
            return Err(Error::ItemCountMismatch {
                left: self.items(),
                right: other.items(),
            });
        }
        Ok(self.labels == other.labels)
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition({self})")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in self.clusters_one_based() {
            let items: Vec<String> = block.iter().map(usize::to_string).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        Ok(())
    }
}

impl TryFrom<PartitionJson> for Partition {
    type Error = Error;

    fn try_from(value: PartitionJson) -> Result<Self> {
        Partition::from_clusters(&value.clusters)
    }
}

impl From<Partition> for PartitionJson {
    fn from(value: Partition) -> Self {
        PartitionJson {
            clusters: value.clusters_one_based(),
        }
    }
}

/// Equivalence test between two partitions of the same item set.
pub fn same_class(a: &Partition, b: &Partition) -> Result<bool> {
    a.same_class(b)
}

/// A hidden ground truth: a clustering plus the oracle probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    partition: Partition,
    p: f64,
    q: f64,
}

impl Instance {
    pub fn new(partition: Partition, p: f64, q: f64) -> Result<Self> {
        check_oracle_parameters(p, q)?;
        Ok(Instance { partition, p, q })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn items(&self) -> usize {
        self.partition.items()
    }

    /// The pair matrix `c_ij` in pair-index order.
    pub fn pair_means(&self) -> Vec<f64> {
        let same = self.partition.same_pairs();
        (0..pair_count(self.items()))
            .map(|k| if same.contains(k) { self.p } else { self.q })
            .collect()
    }
}

pub(crate) fn check_oracle_parameters(p: f64, q: f64) -> Result<()> {
    if !(0.0..0.5).contains(&q) || !(p > 0.5 && p <= 1.0) {
        return Err(Error::InvalidOracleParameters { p, q });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Split,
    Merge,
}

/// A merge-or-split neighbour of a clustering.
///
/// `n1` holds the pairs that are together in `source` but apart in `result`;
/// `n2` the pairs apart in `source` and together in `result`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AltMove {
    pub kind: MoveKind,
    pub source: Partition,
    pub result: Partition,
    pub n1: PairSet,
    pub n2: PairSet,
}

/// All merges of two clusters followed by all splits of one cluster into two.
///
/// A split is identified by the side containing the cluster's least item, so
/// `{A, B}` and `{B, A}` are emitted once.
pub fn min_moves(part: &Partition) -> Vec<AltMove> {
    let k = part.clusters();
    let blocks = part.blocks();
    let same = part.same_pairs();
    let mut moves = Vec::new();

    for a in 0..k {
        for b in a + 1..k {
            let labels: Vec<usize> = part
                .labels()
                .iter()
                .map(|&l| if l as usize == b { a } else { l as usize })
                .collect();
            let result = Partition::from_labels(&labels).expect("merge keeps item count");
            let n2 = result.same_pairs() - same;
            moves.push(AltMove {
                kind: MoveKind::Merge,
                source: part.clone(),
                result,
                n1: PairSet::EMPTY,
                n2,
            });
        }
    }

    for (c, block) in blocks.iter().enumerate() {
        let s = block.len();
        if s < 2 {
            continue;
        }
        let others = &block[1..];
        // mask over `others` marks the items leaving for the new cluster
        for mask in 1u32..(1u32 << (s - 1)) {
            let mut labels: Vec<usize> = part.labels().iter().map(|&l| l as usize).collect();
            for (bit, &item) in others.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    labels[item] = k;
                }
            }
            let result = Partition::from_labels(&labels).expect("split keeps item count");
            let n1 = same - result.same_pairs();
            debug_assert!(block.iter().all(|&i| part.label(i) == c));
            moves.push(AltMove {
                kind: MoveKind::Split,
                source: part.clone(),
                result,
                n1,
                n2: PairSet::EMPTY,
            });
        }
    }
    moves
}

/// Bell number via `B(n+1) = sum_k C(n, k) B(k)`, exact in 128-bit arithmetic.
pub fn bell_number(m: usize) -> Result<u128> {
    let mut bell: Vec<u128> = vec![1];
    let mut row: Vec<u128> = vec![1]; // binomial row C(n, .)
    for n in 0..m {
        let mut next = 0u128;
        for (c, b) in row.iter().zip(&bell) {
            next = c
                .checked_mul(*b)
                .and_then(|v| v.checked_add(next))
                .ok_or(Error::BellOverflow(m))?;
        }
        bell.push(next);
        let mut new_row = vec![1u128; n + 2];
        for k in 1..=n {
            new_row[k] = row[k - 1]
                .checked_add(row[k])
                .ok_or(Error::BellOverflow(m))?;
        }
        row = new_row;
    }
    Ok(bell[m])
}

/// All set partitions of `m` items in canonical order (restricted growth
/// strings in lexicographic order), refusing `m` above `limit`.
pub fn enumerate_partitions_with_limit(m: usize, limit: usize) -> Result<Vec<Partition>> {
    if m == 0 || m > MAX_ITEMS {
        return Err(Error::ItemCount {
            m,
            min: 1,
            max: MAX_ITEMS,
        });
    }
    if m > limit {
        return Err(Error::SizeLimit { m, limit });
    }
    let mut out = Vec::new();
    let mut labels = vec![0u8; m];
    // maxima[i] = max(labels[..i])
    fn recurse(pos: usize, max_so_far: u8, labels: &mut Vec<u8>, out: &mut Vec<Partition>) {
        if pos == labels.len() {
            out.push(Partition {
                labels: labels.clone(),
            });
            return;
        }
        for l in 0..=max_so_far + 1 {
            labels[pos] = l;
            recurse(pos + 1, max_so_far.max(l), labels, out);
        }
    }
    recurse(1, 0, &mut labels, &mut out);
    Ok(out)
}

/// [`enumerate_partitions_with_limit`] with the default guard.
pub fn enumerate_partitions(m: usize) -> Result<Vec<Partition>> {
    enumerate_partitions_with_limit(m, DEFAULT_ENUMERATION_LIMIT)
}

/// Every clustering of `[M]` with its same-pair mask, in canonical order.
#[derive(Clone, Debug)]
pub struct Catalog {
    index: PairIndex,
    partitions: Vec<Partition>,
    same: Vec<PairSet>,
    lookup: HashMap<PairSet, usize>,
}

impl Catalog {
    pub fn new(m: usize) -> Result<Self> {
        Catalog::with_limit(m, DEFAULT_ENUMERATION_LIMIT)
    }

    pub fn with_limit(m: usize, limit: usize) -> Result<Self> {
        let partitions = enumerate_partitions_with_limit(m, limit)?;
        let index = PairIndex::new(m)?;
        let same: Vec<PairSet> = partitions.iter().map(Partition::same_pairs).collect();
        let lookup = same.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Catalog {
            index,
            partitions,
            same,
            lookup,
        })
    }

    pub fn items(&self) -> usize {
        self.index.items()
    }

    pub fn pair_index(&self) -> &PairIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition(&self, idx: usize) -> &Partition {
        &self.partitions[idx]
    }

    /// Same-pair masks aligned with [`Catalog::partitions`].
    pub fn same_masks(&self) -> &[PairSet] {
        &self.same
    }

    pub fn index_of(&self, part: &Partition) -> Option<usize> {
        if part.items() != self.items() {
            return None;
        }
        self.lookup.get(&part.same_pairs()).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(clusters: &[&[usize]]) -> Partition {
        Partition::from_clusters(&clusters.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn pair_index_is_lexicographic() {
        let idx = PairIndex::new(4).unwrap();
        let labels: Vec<_> = idx.pairs().iter().map(Pair::labels).collect();
        assert_eq!(labels, vec![(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        for (k, p) in idx.pairs().iter().enumerate() {
            assert_eq!(idx.index_of(*p).unwrap(), k);
        }
        assert!(idx.index_of(Pair { i: 2, j: 4 }).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
        let three: Vec<String> = enumerate_partitions(3)
            .unwrap()
            .iter()
            .map(|p| p.to_string())
            .collect();
        assert_eq!(
            three,
            vec!["{1,2,3}", "{1,2}{3}", "{1,3}{2}", "{1}{2,3}", "{1}{2}{3}"]
        );
        assert_eq!(enumerate_partitions(6).unwrap().len(), 203);
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_partitions(11),
            Err(Error::SizeLimit { m: 11, limit: 10 })
        ));
        assert_eq!(enumerate_partitions_with_limit(11, 11).unwrap().len(), 678_570);
    }

    #[test]
    fn bell_numbers() {
        let expected = [1u128, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (m, &b) in expected.iter().enumerate() {
            assert_eq!(bell_number(m).unwrap(), b);
        }
        for m in 1..=8 {
            assert_eq!(enumerate_partitions(m).unwrap().len() as u128, bell_number(m).unwrap());
        }
        assert!(bell_number(200).is_err());
    }

    #[test]
    fn within_and_cross_pairs() {
        let p = part(&[&[1, 2], &[3]]);
        let (np, nq) = p.within_cross_pairs();
        assert_eq!(np.iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(nq.iter().collect::<Vec<_>>(), vec![1, 2]);

        let one = Partition::single_cluster(4).unwrap();
        let (np, nq) = one.within_cross_pairs();
        assert_eq!((np.len(), nq.len()), (6, 0));

        let all = Partition::singletons(5).unwrap();
        let (np, nq) = all.within_cross_pairs();
        assert_eq!((np.len(), nq.len()), (0, 10));
    }

    #[test]
    fn moves_of_fixture() {
        let p = part(&[&[1, 2], &[3, 4, 5], &[6]]);
        let moves = min_moves(&p);
        assert_eq!(moves.len(), 7);
        assert_eq!(moves.iter().filter(|m| m.kind == MoveKind::Merge).count(), 3);
        let splits: Vec<_> = moves.iter().filter(|m| m.kind == MoveKind::Split).collect();
        assert_eq!(splits.len(), 4);
        assert_eq!(splits[0].result.to_string(), "{1}{2}{3,4,5}{6}");
    }

    #[test]
    fn moves_of_extremes() {
        let one = Partition::single_cluster(3).unwrap();
        let moves = min_moves(&one);
        assert_eq!(moves.len(), 3);
        assert!(moves.iter().all(|m| m.kind == MoveKind::Split));

        let all = Partition::singletons(5).unwrap();
        let moves = min_moves(&all);
        assert_eq!(moves.len(), 10);
        assert!(moves.iter().all(|m| m.kind == MoveKind::Merge));
    }

    #[test]
    fn move_invariants_hold_for_every_partition() {
        for m in 2..=6 {
            for p in enumerate_partitions(m).unwrap() {
                let k = p.clusters();
                let moves = min_moves(&p);
                let splits: usize = p
                    .blocks()
                    .iter()
                    .filter(|b| b.len() >= 2)
                    .map(|b| (1usize << (b.len() - 1)) - 1)
                    .sum();
                assert_eq!(moves.len(), k * (k - 1) / 2 + splits);
                let (np, nq) = p.within_cross_pairs();
                let mut seen = std::collections::HashSet::new();
                for mv in &moves {
                    assert!(seen.insert(mv.result.clone()), "duplicate move");
                    match mv.kind {
                        MoveKind::Split => {
                            assert!(mv.n2.is_empty());
                            assert_eq!(mv.result.clusters(), k + 1);
                        }
                        MoveKind::Merge => {
                            assert!(mv.n1.is_empty());
                            assert_eq!(mv.result.clusters(), k - 1);
                        }
                    }
                    assert!(mv.n1.is_subset(&np));
                    assert!(mv.n2.is_subset(&nq));
                    let flipped = PairSet::from_bits(p.same_pairs().bits() ^ mv.result.same_pairs().bits());
                    assert_eq!(flipped, mv.n1 | mv.n2);
                }
            }
        }
    }

    #[test]
    fn canonical_labels_and_same_class() {
        let a = Partition::from_labels(&[7, 7, 3, 3, 3, 1]).unwrap();
        let b = Partition::from_labels(&[0, 0, 1, 1, 1, 2]).unwrap();
        assert_eq!(a.labels(), b.labels());
        assert!(same_class(&a, &b).unwrap());
        assert!(!same_class(&part(&[&[1, 2], &[3]]), &part(&[&[1], &[2, 3]])).unwrap());
        assert!(same_class(&a, &Partition::singletons(3).unwrap()).is_err());
        let again = Partition::from_labels(a.labels()).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn partition_json_round_trip() {
        let p = part(&[&[6], &[3, 4, 5], &[1, 2]]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"clusters":[[1,2],[3,4,5],[6]]}"#);
        let back: Partition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Partition>(r#"{"clusters":[[1,2],[2,3]]}"#).is_err());
        assert!(serde_json::from_str::<Partition>(r#"{"clusters":[[1,4]]}"#).is_err());
    }

    #[test]
    fn catalog_lookup() {
        let cat = Catalog::new(4).unwrap();
        assert_eq!(cat.len(), 15);
        for (i, p) in cat.partitions().iter().enumerate() {
            assert_eq!(cat.index_of(p), Some(i));
        }
    }

    #[test]
    fn instance_validation() {
        let p = part(&[&[1, 2], &[3]]);
        assert!(Instance::new(p.clone(), 0.6, 0.4).is_ok());
        assert!(Instance::new(p.clone(), 1.0, 0.0).is_ok());
        assert!(Instance::new(p.clone(), 0.5, 0.4).is_err());
        assert!(Instance::new(p.clone(), 0.6, 0.5).is_err());
        let inst = Instance::new(p, 0.7, 0.2).unwrap();
        assert_eq!(inst.pair_means(), vec![0.7, 0.2, 0.2]);
    }
}
