//! One-sided k-junta tester under the uniform distribution.
//!
//! The coordinates are split into `s` random blocks. Each round draws uniform
//! `x`, `y` and compares `g(x)` with `g(x on R, y elsewhere)`, where `R` is the
//! set of blocks already certified relevant. A disagreement is localized to a
//! new relevant block by binary search. More than `k` certified blocks means
//! more than `k` relevant variables, so the tester never rejects a k-junta.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BlockPartition, Point};
use crate::error::{Error, Result};
use crate::oracle::QueryOracle;
use crate::search::{ceil_log2, find_relevant_block_between, RelevantBlockWitness};

/// Default multiplier on the round count. See `calibrate_uj` in the harness.
pub const DEFAULT_C_ROUNDS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UjParams {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub c_rounds: f64,
    /// Block count, `max(2k², ⌈3·C(k+1, 2)/δ⌉, 2)`.
    pub s: usize,
    pub rounds: u64,
}

impl UjParams {
    pub fn new(k: usize, eps: f64, delta: f64, c_rounds: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {eps}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        if !(c_rounds > 0.0 && c_rounds.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c_rounds must be positive, got {c_rounds}"
            )));
        }
        let kf = k as f64;
        // A fixed set of k+1 relevant variables shares a block with
        // probability at most C(k+1,2)/s; keep that below delta/3.
        let pairs = (k * (k + 1) / 2) as f64;
        let s = (2 * k * k)
            .max((3.0 * pairs / delta).ceil() as usize)
            .max(2);
        let log_term = if k >= 2 { kf * kf.log2() } else { 0.0 };
        let per_unit = kf / eps + log_term.max(1.0);
        let rounds = (c_rounds * per_unit * (3.0 / delta).ln()).ceil().max(1.0) as u64;
        Ok(Self {
            k,
            eps,
            delta,
            c_rounds,
            s,
            rounds,
        })
    }

    /// Worst-case queries: two per round plus one binary search per round.
    pub fn query_budget(&self) -> u64 {
        self.rounds * (2 + u64::from(ceil_log2(self.s)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UjOutcome {
    pub accept: bool,
    /// Certified relevant blocks, in the tested function's own coordinates.
    pub found: Vec<RelevantBlockWitness>,
    pub rounds_run: u64,
}

pub fn uniform_junta_test<O, R>(oracle: &mut O, params: &UjParams, rng: &mut R) -> Result<UjOutcome>
where
    O: QueryOracle,
    R: Rng + ?Sized,
{
    let m = oracle.dim();
    if m == 0 {
        return Err(Error::InvalidParameter(
            "uniform_junta_test needs at least one variable".into(),
        ));
    }
    let partition = BlockPartition::random(m, params.s, rng)?;
    let mut found_blocks: Vec<usize> = Vec::new();
    let mut found = Vec::new();

    for round in 1..=params.rounds {
        let x = Point::random(m, rng);
        let y = Point::random(m, rng);
        let kept = partition.union_of(&found_blocks);
        let hybrid = x.compose_unchecked(&kept, &y);
        let gx = oracle.query(&x);
        let gh = oracle.query(&hybrid);
        if gx == gh {
            continue;
        }
        let witness =
            find_relevant_block_between(oracle, &partition, &found_blocks, &x, &y, gx, gh)?;
        found_blocks.push(witness.block);
        found.push(witness);
        if found.len() > params.k {
            return Ok(UjOutcome {
                accept: false,
                found,
                rounds_run: round,
            });
        }
    }
    Ok(UjOutcome {
        accept: true,
        found,
        rounds_run: params.rounds,
    })
}
