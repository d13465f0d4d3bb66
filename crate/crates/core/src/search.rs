//! Binary search over hybrid strings for a new relevant block.
//!
//! Given a point `u` whose value differs from a background hybrid, the search
//! walks prefixes of the not-yet-found blocks. `q(T)` keeps `u` on the found
//! blocks and on every block of the prefix `T`, and the background elsewhere.
//! `q(all) = u` and `q(empty)` is the background hybrid, so some adjacent pair
//! of prefixes disagrees; halving the gap isolates it in ⌈log₂ |B|⌉ queries.

use serde::Serialize;

use crate::bits::{BlockPartition, IndexSet, Point};
use crate::error::{check_dim, Error, Result};
use crate::oracle::{BooleanFunction, QueryOracle};

/// A block `X_ℓ` with a point `v` such that `f(v) != f(v with X_ℓ replaced by the background)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelevantBlockWitness {
    /// 0-based block index.
    pub block: usize,
    pub witness: Point,
    /// The point `v` with block `X_ℓ` reset to the background.
    pub partner: Point,
}

impl RelevantBlockWitness {
    /// Re-checks the certificate with two uncounted evaluations.
    pub fn verify(&self, f: &dyn BooleanFunction) -> bool {
        f.eval(&self.witness) != f.eval(&self.partner)
    }
}

/// Finds a relevant block outside `found`, with zeros as the background.
///
/// `f_u = f(u)` and `f_u0 = f(u_X ∘ 0_{X̄})` for `X` the union of the found
/// blocks; both are supplied by the caller and not re-queried.
pub fn find_relevant_block<O: QueryOracle>(
    oracle: &mut O,
    partition: &BlockPartition,
    found: &[usize],
    u: &Point,
    f_u: bool,
    f_u0: bool,
) -> Result<RelevantBlockWitness> {
    let zeros = Point::zeros(partition.dim());
    find_relevant_block_between(oracle, partition, found, u, &zeros, f_u, f_u0)
}

/// General form: hybrids keep `u` on the found blocks and a prefix of the
/// remaining ones, and `background` on the rest.
pub fn find_relevant_block_between<O: QueryOracle>(
    oracle: &mut O,
    partition: &BlockPartition,
    found: &[usize],
    u: &Point,
    background: &Point,
    f_u: bool,
    f_background: bool,
) -> Result<RelevantBlockWitness> {
    let n = partition.dim();
    check_dim(n, oracle.dim())?;
    check_dim(n, u.dim())?;
    check_dim(n, background.dim())?;
    if f_u == f_background {
        return Err(Error::Contract(
            "binary search needs endpoints with different values".into(),
        ));
    }
    let candidates: Vec<usize> = (0..partition.num_blocks())
        .filter(|b| !found.contains(b))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Contract(
            "every block is already found, yet the endpoints differ".into(),
        ));
    }
    let fixed = partition.union_of(found);

    let hybrid = |prefix: usize| -> Point {
        let keep = fixed
            .union(&partition.union_of(&candidates[..prefix]))
            .expect("same dimension");
        u.compose_unchecked(&keep, background)
    };

    // Invariant: q(candidates[..lo]) = f_background != f_u = q(candidates[..hi]).
    let (mut lo, mut hi) = (0, candidates.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if oracle.query(&hybrid(mid)) != f_background {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let block = candidates[lo];
    let witness = hybrid(hi);
    let partner = witness.compose_unchecked(&partition.block(block).complement(), background);
    debug_assert_eq!(partner, hybrid(lo));
    Ok(RelevantBlockWitness {
        block,
        witness,
        partner,
    })
}

/// Ceil of log2 for `x >= 1`.
pub fn ceil_log2(x: usize) -> u32 {
    assert!(x >= 1);
    usize::BITS - (x - 1).leading_zeros()
}

/// Blocks of `partition` that contain at least one coordinate of `set`.
pub fn blocks_touching(partition: &BlockPartition, set: &IndexSet) -> Vec<usize> {
    (0..partition.num_blocks())
        .filter(|&b| !partition.block(b).is_disjoint(set))
        .collect()
}
