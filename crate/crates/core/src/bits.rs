//! Points of the Boolean cube, coordinate sets and block partitions.
//!
//! Coordinates are 1-indexed at every external surface (`from_coords`,
//! `coords`, bitstrings read left to right as x1 x2 .. xn) and 0-indexed in
//! storage. A [`Point`] packs its bits into `u64` words with every bit above
//! `n` kept at zero, so word-wise equality is bitwise equality.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

const WORD: usize = 64;

fn word_count(n: usize) -> usize {
    n.div_ceil(WORD)
}

fn tail_mask(n: usize) -> u64 {
    match n % WORD {
        0 => u64::MAX,
        rem => (1u64 << rem) - 1,
    }
}

/// An assignment in {0,1}^n.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    n: usize,
    words: Vec<u64>,
}

impl Point {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            words: vec![0; word_count(n)],
        }
    }

    pub fn ones(n: usize) -> Self {
        let mut p = Self {
            n,
            words: vec![u64::MAX; word_count(n)],
        };
        p.clear_tail();
        p
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut p = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            p.set(i, b);
        }
        p
    }

    /// Point whose coordinate `i` (0-based) is bit `i` of `index`.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= 64, "from_index supports n <= 64");
        let mut p = Self::zeros(n);
        if n > 0 {
            p.words[0] = index;
            p.clear_tail();
        }
        p
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut p = Self {
            n,
            words: (0..word_count(n)).map(|_| rng.random()).collect(),
        };
        p.clear_tail();
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Bit at 0-based position `i`.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.n);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of ones among the coordinates in `set`.
    pub fn count_ones_in(&self, set: &IndexSet) -> usize {
        self.words
            .iter()
            .zip(&set.mask.words)
            .map(|(a, m)| (a & m).count_ones() as usize)
            .sum()
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(move |i| self.get(i))
    }

    /// Gathers the bits at `indices` (0-based) into a little-endian integer.
    pub fn gather(&self, indices: &[usize]) -> u64 {
        debug_assert!(indices.len() <= 64);
        indices
            .iter()
            .enumerate()
            .fold(0u64, |acc, (pos, &i)| acc | (u64::from(self.get(i)) << pos))
    }

    pub fn compose(&self, set: &IndexSet, other: &Point) -> Result<Point> {
        check_dim(self.n, other.n)?;
        check_dim(self.n, set.n)?;
        Ok(self.compose_unchecked(set, other))
    }

    pub fn zero_out(&self, set: &IndexSet) -> Result<Point> {
        check_dim(self.n, set.n)?;
        Ok(self.zero_out_unchecked(set))
    }

    pub fn xor(&self, other: &Point) -> Result<Point> {
        check_dim(self.n, other.n)?;
        Ok(self.zip_with(other, |a, b| a ^ b))
    }

    pub fn negate_on(&self, set: &IndexSet) -> Result<Point> {
        check_dim(self.n, set.n)?;
        Ok(self.negate_on_unchecked(set))
    }

    pub fn negate(&self) -> Point {
        let mut p = Point {
            n: self.n,
            words: self.words.iter().map(|w| !w).collect(),
        };
        p.clear_tail();
        p
    }

    pub(crate) fn compose_unchecked(&self, set: &IndexSet, other: &Point) -> Point {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .zip(&set.mask.words)
            .map(|((a, b), m)| (a & m) | (b & !m))
            .collect();
        Point { n: self.n, words }
    }

    pub(crate) fn zero_out_unchecked(&self, set: &IndexSet) -> Point {
        self.zip_with(&set.mask, |a, m| a & !m)
    }

    pub(crate) fn negate_on_unchecked(&self, set: &IndexSet) -> Point {
        self.zip_with(&set.mask, |a, m| a ^ m)
    }

    fn zip_with(&self, other: &Point, op: impl Fn(u64, u64) -> u64) -> Point {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Point { n: self.n, words }
    }

    fn clear_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.n);
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({self})")
    }
}

impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Point::from_bits(&bits))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A subset of the coordinates of {0,1}^n, kept both as a sorted list and as a
/// bit mask for word-parallel composition.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n: usize,
    members: Vec<usize>,
    mask: Point,
}

impl IndexSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            members: Vec::new(),
            mask: Point::zeros(n),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            members: (0..n).collect(),
            mask: Point::ones(n),
        }
    }

    /// Builds a set from 0-based indices. Duplicates are merged.
    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = Point::zeros(n);
        for i in indices {
            if i >= n {
                return Err(Error::CoordinateOutOfRange { coord: i + 1, n });
            }
            mask.set(i, true);
        }
        Ok(Self::from_mask(mask))
    }

    /// Builds a set from 1-based coordinates.
    pub fn from_coords(n: usize, coords: &[usize]) -> Result<Self> {
        let mut mask = Point::zeros(n);
        for &c in coords {
            if c == 0 || c > n {
                return Err(Error::CoordinateOutOfRange { coord: c, n });
            }
            mask.set(c - 1, true);
        }
        Ok(Self::from_mask(mask))
    }

    pub fn from_mask(mask: Point) -> Self {
        let members = (0..mask.dim()).filter(|&i| mask.get(i)).collect();
        Self {
            n: mask.dim(),
            members,
            mask,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.mask.get(i)
    }

    /// Members as 0-based indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.members
    }

    /// Members as 1-based coordinates, ascending.
    pub fn coords(&self) -> Vec<usize> {
        self.members.iter().map(|i| i + 1).collect()
    }

    pub fn mask(&self) -> &Point {
        &self.mask
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.mask.negate())
    }

    pub fn union(&self, other: &IndexSet) -> Result<Self> {
        check_dim(self.n, other.n)?;
        Ok(Self::from_mask(
            self.mask.zip_with(&other.mask, |a, b| a | b),
        ))
    }

    /// Splits the set into the members where `w` is 0 and where `w` is 1.
    pub fn split_by(&self, w: &Point) -> (IndexSet, IndexSet) {
        let ones = self.mask.zip_with(w, |m, b| m & b);
        let zeros = self.mask.zip_with(w, |m, b| m & !b);
        (IndexSet::from_mask(zeros), IndexSet::from_mask(ones))
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.mask
            .words
            .iter()
            .zip(&other.mask.words)
            .all(|(a, b)| a & b == 0)
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.coords()).finish()
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.coords())
    }
}

/// `r` pairwise-disjoint blocks covering `[n]`. Blocks may be empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    n: usize,
    blocks: Vec<IndexSet>,
}

impl BlockPartition {
    /// Validates that `blocks` are disjoint and cover `[n]`.
    pub fn from_blocks(n: usize, blocks: Vec<IndexSet>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter(
                "a partition needs at least one block".into(),
            ));
        }
        let mut seen = IndexSet::empty(n);
        for block in &blocks {
            check_dim(n, block.dim())?;
            if !seen.is_disjoint(block) {
                return Err(Error::InvalidParameter(format!(
                    "block {block:?} overlaps another"
                )));
            }
            seen = seen.union(block)?;
        }
        if seen.len() != n {
            return Err(Error::InvalidParameter("blocks do not cover [n]".into()));
        }
        Ok(Self { n, blocks })
    }

    /// Partition from 1-based coordinate lists, one per block.
    pub fn from_coord_lists(n: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let blocks = lists
            .iter()
            .map(|c| IndexSet::from_coords(n, c))
            .collect::<Result<_>>()?;
        Self::from_blocks(n, blocks)
    }

    /// Assigns every coordinate independently and uniformly to one of `r` blocks.
    pub fn random<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(Error::InvalidParameter(format!(
                "random partition needs n >= 1 and r >= 1, got n={n}, r={r}"
            )));
        }
        let mut masks = vec![Point::zeros(n); r];
        for i in 0..n {
            masks[rng.random_range(0..r)].set(i, true);
        }
        let blocks = masks.into_iter().map(IndexSet::from_mask).collect();
        Ok(Self { n, blocks })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, index: usize) -> &IndexSet {
        &self.blocks[index]
    }

    pub fn blocks(&self) -> &[IndexSet] {
        &self.blocks
    }

    /// Index of the block holding 0-based coordinate `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(i))
            .expect("partition covers [n]")
    }

    pub fn union_of(&self, block_indices: &[usize]) -> IndexSet {
        let mut mask = Point::zeros(self.n);
        for &b in block_indices {
            mask = mask.zip_with(self.blocks[b].mask(), |a, m| a | m);
        }
        IndexSet::from_mask(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    fn set(n: usize, coords: &[usize]) -> IndexSet {
        IndexSet::from_coords(n, coords).unwrap()
    }

    #[test]
    fn compose_examples() {
        assert_eq!(
            p("1111").compose(&set(4, &[1, 2]), &p("0000")).unwrap(),
            p("1100")
        );
        let x = p("10110");
        let y = p("01011");
        assert_eq!(x.compose(&IndexSet::full(5), &y).unwrap(), x);
        assert_eq!(x.compose(&IndexSet::empty(5), &y).unwrap(), y);
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let err = p("111").compose(&set(3, &[1]), &p("0000")).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                found: 4
            }
        ));
    }

    #[test]
    fn zero_out_examples() {
        assert_eq!(p("1111").zero_out(&set(4, &[3, 4])).unwrap(), p("1100"));
        assert_eq!(p("1011").zero_out(&IndexSet::empty(4)).unwrap(), p("1011"));
        assert_eq!(
            p("1011").zero_out(&IndexSet::full(4)).unwrap(),
            Point::zeros(4)
        );
    }

    #[test]
    fn xor_examples() {
        assert_eq!(p("1100").xor(&p("0110")).unwrap(), p("1010"));
        assert_eq!(p("1101").xor(&Point::zeros(4)).unwrap(), p("1101"));
        assert_eq!(p("1101").xor(&p("1101")).unwrap(), Point::zeros(4));
        assert!(p("11").xor(&p("110")).is_err());
    }

    #[test]
    fn negate_on_examples() {
        assert_eq!(p("1010").negate_on(&set(4, &[1, 2])).unwrap(), p("0110"));
        assert_eq!(p("1010").negate_on(&IndexSet::empty(4)).unwrap(), p("1010"));
    }

    #[test]
    fn split_by_partitions_the_set() {
        let (y0, y1) = set(5, &[1, 2, 4, 5]).split_by(&p("10011"));
        assert_eq!(y0.coords(), vec![2]);
        assert_eq!(y1.coords(), vec![1, 4, 5]);
    }

    #[test]
    fn coordinates_are_validated() {
        assert!(IndexSet::from_coords(4, &[0]).is_err());
        assert!(IndexSet::from_coords(4, &[5]).is_err());
        assert_eq!(
            IndexSet::from_coords(4, &[2, 2, 1]).unwrap().coords(),
            vec![1, 2]
        );
    }

    #[test]
    fn point_parse_and_display() {
        let x = p("0100110");
        assert_eq!(x.to_string(), "0100110");
        assert!(x.get(1));
        assert!(!x.get(0));
        assert!("01x".parse::<Point>().is_err());
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, "\"0100110\"");
        assert_eq!(serde_json::from_str::<Point>(&json).unwrap(), x);
    }

    #[test]
    fn wide_points_keep_tail_clear() {
        let ones = Point::ones(130);
        assert_eq!(ones.count_ones(), 130);
        assert_eq!(ones.negate(), Point::zeros(130));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = Point::random(130, &mut rng);
        assert_eq!(r.negate().negate(), r);
        assert_eq!(r.count_ones() + r.negate().count_ones(), 130);
    }

    #[test]
    fn single_block_partition_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let part = BlockPartition::random(4, 1, &mut rng).unwrap();
        assert_eq!(part.num_blocks(), 1);
        assert_eq!(part.block(0).coords(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn sparse_partition_has_empty_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let part = BlockPartition::random(3, 8, &mut rng).unwrap();
            assert_eq!(part.num_blocks(), 8);
            assert!(part.blocks().iter().filter(|b| b.is_empty()).count() >= 5);
            let covered: usize = part.blocks().iter().map(IndexSet::len).sum();
            assert_eq!(covered, 3);
        }
    }

    #[test]
    fn pair_collision_rate_is_one_over_r() {
        // Two fixed coordinates share a block with probability 1/r.
        let trials = 100_000;
        let mut shared = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let part = BlockPartition::random(2, 8, &mut rng).unwrap();
            if part.block_of(0) == part.block_of(1) {
                shared += 1;
            }
        }
        let rate = shared as f64 / trials as f64;
        assert!((rate - 0.125).abs() < 0.01, "collision rate {rate}");
    }

    #[test]
    fn from_blocks_validates() {
        assert!(BlockPartition::from_coord_lists(3, &[vec![1, 2], vec![2, 3]]).is_err());
        assert!(BlockPartition::from_coord_lists(3, &[vec![1], vec![3]]).is_err());
        assert!(BlockPartition::from_coord_lists(3, &[]).is_err());
        let part = BlockPartition::from_coord_lists(3, &[vec![1, 3], vec![], vec![2]]).unwrap();
        assert_eq!(part.union_of(&[0, 2]).coords(), vec![1, 2, 3]);
        assert_eq!(part.block_of(1), 2);
    }

    fn point_strategy(n: usize) -> impl Strategy<Value = Point> {
        proptest::collection::vec(any::<bool>(), n).prop_map(|b| Point::from_bits(&b))
    }

    fn triple() -> impl Strategy<Value = (Point, Point, IndexSet)> {
        (1usize..150).prop_flat_map(|n| {
            (
                point_strategy(n),
                point_strategy(n),
                point_strategy(n).prop_map(IndexSet::from_mask),
            )
        })
    }

    proptest! {
        #[test]
        fn composition_algebra((x, y, s) in triple()) {
            let n = x.dim();
            let c = x.compose(&s, &y).unwrap();
            for i in 0..n {
                prop_assert_eq!(c.get(i), if s.contains(i) { x.get(i) } else { y.get(i) });
            }
            prop_assert_eq!(x.compose(&s, &x).unwrap(), x.clone());
            prop_assert_eq!(
                x.zero_out(&s.complement()).unwrap(),
                x.compose(&s, &Point::zeros(n)).unwrap()
            );
            prop_assert_eq!(x.negate_on(&s).unwrap().negate_on(&s).unwrap(), x.clone());
        }

        #[test]
        fn random_partition_is_valid(n in 1usize..200, r in 1usize..40, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let part = BlockPartition::random(n, r, &mut rng).unwrap();
            prop_assert_eq!(part.num_blocks(), r);
            BlockPartition::from_blocks(n, part.blocks().to_vec()).unwrap();
        }
    }
}
