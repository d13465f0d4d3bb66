//! The two-sided distribution-free adaptive k-junta tester.
//!
//! A run has four phases and halts on the first rejection:
//!
//! 1. Partition `[n]` into `r = 2k²` random blocks.
//! 2. Sample `u ~ D` and compare `f(u)` with `f(u_X ∘ 0)`. Each disagreement is
//!    localized to a new relevant block by binary search; more than `k` blocks
//!    rejects. The phase ends once `t_threshold` consecutive samples agree.
//! 3. For every found block `X_ℓ` with witness `v`, check that
//!    `a ↦ f(a on X_ℓ, v elsewhere)` is close to a 1-junta and is not constant
//!    on an antipodal pair.
//! 4. `M'` times: build a uniform mask `z` on `X` that is zero on the single
//!    relevant coordinate of each block (located through the `G` counters),
//!    then compare `f(u_X ∘ 0)` with `f((u ⊕ z)_X ∘ 0)` for a fresh `u ~ D`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BlockPartition, IndexSet, Point};
use crate::dist::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::oracle::{restriction_oracle, BooleanFunction, CountingOracle, QueryOracle};
use crate::search::{ceil_log2, find_relevant_block, RelevantBlockWitness};
use crate::uniform_junta::{uniform_junta_test, UjParams, DEFAULT_C_ROUNDS};

/// Parameters of the per-block 1-junta check.
pub const LITERAL_EPS: f64 = 1.0 / 30.0;
pub const LITERAL_DELTA: f64 = 1.0 / 15.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterParams {
    pub k: usize,
    pub eps: f64,
    /// Block count, `2k²`.
    pub r: usize,
    /// Phase-2 loop bound, `⌈2k·ln(15k)/ε⌉`.
    pub m: u64,
    /// Stability target, `⌈2·ln(15k)/ε⌉`.
    pub t_threshold: u64,
    /// Final-test repetitions, `⌈2·ln(15)/ε⌉`.
    pub m_prime: u64,
    /// Repetitions per G-counter, `⌈ln(15·M'·k)/ln(4/3)⌉`.
    pub h: u64,
    pub seed: u64,
    pub uj: UjParams,
}

impl TesterParams {
    pub fn derive(k: usize, eps: f64, seed: u64) -> Result<Self> {
        Self::derive_with(k, eps, seed, DEFAULT_C_ROUNDS)
    }

    pub fn derive_with(k: usize, eps: f64, seed: u64, c_rounds: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {eps}"
            )));
        }
        let kf = k as f64;
        let ln15k = (15.0 * kf).ln();
        let m = (2.0 * kf * ln15k / eps).ceil() as u64;
        let t_threshold = (2.0 * ln15k / eps).ceil() as u64;
        let m_prime = (2.0 * 15f64.ln() / eps).ceil() as u64;
        let h = ((15.0 * m_prime as f64 * kf).ln() / (4.0f64 / 3.0).ln()).ceil() as u64;
        let uj = UjParams::new(1, LITERAL_EPS, LITERAL_DELTA, c_rounds)?;
        Ok(Self {
            k,
            eps,
            r: 2 * k * k,
            m,
            t_threshold,
            m_prime,
            h,
            seed,
            uj,
        })
    }

    /// Worst-case query count of one run.
    ///
    /// Counts 2 per phase-2 sample, ⌈log₂ r⌉ per binary search (at most k+1
    /// searches; their endpoints were paid for by the sample), the 1-junta
    /// check plus the antipodal pair per block, and 4 per G-counter iteration
    /// plus the final pair per M' round.
    pub fn query_budget(&self) -> u64 {
        let k = self.k as u64;
        2 * self.m
            + (k + 1) * u64::from(ceil_log2(self.r))
            + k * (self.uj.query_budget() + 2)
            + self.m_prime * (4 * k * self.h + 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Accept,
    Reject,
}

/// The step that produced a rejection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectSite {
    /// More than k relevant blocks.
    #[serde(rename = "8-overflow")]
    Overflow,
    /// A block restriction failed the 1-junta check.
    #[serde(rename = "14-uniformjunta")]
    UniformJunta,
    /// A block restriction agreed on an antipodal pair.
    #[serde(rename = "15-constant")]
    Constant,
    /// The G counters were not {0, h}.
    #[serde(rename = "23-Gcounter")]
    GCounter,
    /// The masked comparison disagreed.
    #[serde(rename = "26-final")]
    Final,
}

impl RejectSite {
    pub const ALL: [RejectSite; 5] = [
        RejectSite::Overflow,
        RejectSite::UniformJunta,
        RejectSite::Constant,
        RejectSite::GCounter,
        RejectSite::Final,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RejectSite::Overflow => "8-overflow",
            RejectSite::UniformJunta => "14-uniformjunta",
            RejectSite::Constant => "15-constant",
            RejectSite::GCounter => "23-Gcounter",
            RejectSite::Final => "26-final",
        }
    }
}

impl fmt::Display for RejectSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Two points whose values were compared; `differ` records the observed result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCheck {
    pub a: Point,
    pub b: Point,
    pub differ: bool,
}

impl PairCheck {
    fn observe(oracle: &mut impl QueryOracle, a: Point, b: Point) -> Self {
        let differ = oracle.query(&a) != oracle.query(&b);
        Self { a, b, differ }
    }

    pub fn holds(&self, f: &dyn BooleanFunction) -> bool {
        (f.eval(&self.a) != f.eval(&self.b)) == self.differ
    }
}

/// Replayable record of why a run rejected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    /// 1-based block number, where the site concerns one block.
    pub block: Option<usize>,
    pub pairs: Vec<PairCheck>,
    /// The G counters, for G-counter rejections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters: Option<(u64, u64)>,
}

impl Evidence {
    /// Re-evaluates every recorded pair on the raw function.
    pub fn verify(&self, f: &dyn BooleanFunction) -> bool {
        self.pairs.iter().all(|p| p.holds(f))
    }

    /// Oracle calls `verify` makes.
    pub fn verification_cost(&self) -> usize {
        2 * self.pairs.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub reject_site: Option<RejectSite>,
    pub evidence: Option<Evidence>,
}

impl Verdict {
    fn accept() -> Self {
        Self {
            outcome: Outcome::Accept,
            reject_site: None,
            evidence: None,
        }
    }

    fn reject(site: RejectSite, evidence: Evidence) -> Self {
        Self {
            outcome: Outcome::Reject,
            reject_site: Some(site),
            evidence: Some(evidence),
        }
    }

    pub fn is_accept(&self) -> bool {
        self.outcome == Outcome::Accept
    }
}

/// Queries billed to each part of the run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub relevance_samples: u64,
    pub binary_search: u64,
    pub uniform_junta: u64,
    pub antipodal_check: u64,
    pub g_counters: u64,
    pub final_compare: u64,
}

impl StageCounts {
    pub fn total(&self) -> u64 {
        self.relevance_samples
            + self.binary_search
            + self.uniform_junta
            + self.antipodal_check
            + self.g_counters
            + self.final_compare
    }
}

/// How the relevance phase ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase2Exit {
    Threshold,
    Exhausted,
    Overflow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: TesterParams,
    pub queries_by_stage: StageCounts,
    pub total_queries: u64,
    pub verdict: Verdict,
    /// 1-based numbers of the blocks found relevant, in discovery order.
    pub found_blocks: Vec<usize>,
    pub phase2_exit: Phase2Exit,
}

/// Result of one pass of the mask construction for the final test.
#[derive(Clone, Debug)]
pub enum MaskOutcome {
    /// `w` is the uniform draw and `z` the mask built from it.
    Mask {
        w: Point,
        z: Point,
    },
    Reject(Evidence),
}

/// Runs the tester with a generator seeded from `params.seed`.
pub fn run_seeded(
    f: &dyn BooleanFunction,
    dist: &Distribution,
    params: &TesterParams,
    partition_override: Option<&BlockPartition>,
) -> Result<Transcript> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    test_distribution_free(f, dist, params, &mut rng, partition_override)
}

/// One run of the tester. `partition_override` replaces the random partition
/// of phase 1 and exists for tests.
pub fn test_distribution_free<R: Rng + ?Sized>(
    f: &dyn BooleanFunction,
    dist: &Distribution,
    params: &TesterParams,
    rng: &mut R,
    partition_override: Option<&BlockPartition>,
) -> Result<Transcript> {
    let n = f.dim();
    check_dim(n, dist.dim())?;
    let partition = match partition_override {
        Some(p) => {
            check_dim(n, p.dim())?;
            p.clone()
        }
        None => BlockPartition::random(n, params.r, rng)?,
    };
    let mut run = Run {
        oracle: CountingOracle::new(f),
        partition,
        params,
        stages: StageCounts::default(),
    };
    let mut found: Vec<RelevantBlockWitness> = Vec::new();
    let (verdict, phase2_exit) = run.execute(dist, rng, &mut found)?;
    let total_queries = run.oracle.count();
    debug_assert_eq!(total_queries, run.stages.total());
    Ok(Transcript {
        params: params.clone(),
        queries_by_stage: run.stages,
        total_queries,
        verdict,
        found_blocks: found.iter().map(|w| w.block + 1).collect(),
        phase2_exit,
    })
}

struct Run<'f, 'p> {
    oracle: CountingOracle<'f>,
    partition: BlockPartition,
    params: &'p TesterParams,
    stages: StageCounts,
}

impl Run<'_, '_> {
    fn billed<T>(
        &mut self,
        stage: fn(&mut StageCounts) -> &mut u64,
        body: impl FnOnce(&mut Self) -> T,
    ) -> T {
        let before = self.oracle.count();
        let out = body(self);
        let spent = self.oracle.count() - before;
        *stage(&mut self.stages) += spent;
        out
    }

    fn execute<R: Rng + ?Sized>(
        &mut self,
        dist: &Distribution,
        rng: &mut R,
        found: &mut Vec<RelevantBlockWitness>,
    ) -> Result<(Verdict, Phase2Exit)> {
        let exit = self.find_relevant_blocks(dist, rng, found)?;
        if exit == Phase2Exit::Overflow {
            let pairs = found
                .iter()
                .map(|w| PairCheck {
                    a: w.witness.clone(),
                    b: w.partner.clone(),
                    differ: true,
                })
                .collect();
            return Ok((
                Verdict::reject(
                    RejectSite::Overflow,
                    Evidence {
                        block: None,
                        pairs,
                        counters: None,
                    },
                ),
                exit,
            ));
        }
        debug_assert!(found.iter().all(|w| w.verify(self.oracle.inner())));

        for w in found.iter() {
            if let Some(verdict) = self.check_literal(w, rng)? {
                return Ok((verdict, exit));
            }
        }

        let x = self
            .partition
            .union_of(&found.iter().map(|w| w.block).collect::<Vec<_>>());
        let zeros = Point::zeros(self.partition.dim());
        for _ in 0..self.params.m_prime {
            let z = match self.billed(
                |s| &mut s.g_counters,
                |run| draw_final_mask(&mut run.oracle, &run.partition, found, run.params.h, rng),
            )? {
                MaskOutcome::Mask { z, .. } => z,
                MaskOutcome::Reject(evidence) => {
                    return Ok((Verdict::reject(RejectSite::GCounter, evidence), exit))
                }
            };
            let u = dist.sample(rng);
            let a = u.compose_unchecked(&x, &zeros);
            let b = u.xor(&z)?.compose_unchecked(&x, &zeros);
            let pair = self.billed(
                |s| &mut s.final_compare,
                |run| PairCheck::observe(&mut run.oracle, a, b),
            );
            if pair.differ {
                let evidence = Evidence {
                    block: None,
                    pairs: vec![pair],
                    counters: None,
                };
                return Ok((Verdict::reject(RejectSite::Final, evidence), exit));
            }
        }
        Ok((Verdict::accept(), exit))
    }

    fn find_relevant_blocks<R: Rng + ?Sized>(
        &mut self,
        dist: &Distribution,
        rng: &mut R,
        found: &mut Vec<RelevantBlockWitness>,
    ) -> Result<Phase2Exit> {
        let n = self.partition.dim();
        let zeros = Point::zeros(n);
        let mut found_blocks: Vec<usize> = Vec::new();
        let mut x = IndexSet::empty(n);
        let mut t = 0u64;
        for _ in 0..self.params.m {
            let u = dist.sample(rng);
            t += 1;
            let hybrid = u.compose_unchecked(&x, &zeros);
            let (f_u, f_hybrid) = self.billed(
                |s| &mut s.relevance_samples,
                |run| (run.oracle.query(&u), run.oracle.query(&hybrid)),
            );
            if f_u != f_hybrid {
                let witness = self.billed(
                    |s| &mut s.binary_search,
                    |run| {
                        find_relevant_block(
                            &mut run.oracle,
                            &run.partition,
                            &found_blocks,
                            &u,
                            f_u,
                            f_hybrid,
                        )
                    },
                )?;
                found_blocks.push(witness.block);
                x = x.union(self.partition.block(witness.block))?;
                found.push(witness);
                if found.len() > self.params.k {
                    return Ok(Phase2Exit::Overflow);
                }
                t = 0;
            }
            if t == self.params.t_threshold {
                return Ok(Phase2Exit::Threshold);
            }
        }
        Ok(Phase2Exit::Exhausted)
    }

    fn check_literal<R: Rng + ?Sized>(
        &mut self,
        w: &RelevantBlockWitness,
        rng: &mut R,
    ) -> Result<Option<Verdict>> {
        let n = self.partition.dim();
        let block = self.partition.block(w.block).clone();
        let uj = self.params.uj.clone();
        let outcome = self.billed(
            |s| &mut s.uniform_junta,
            |run| -> Result<_> {
                let mut restricted = restriction_oracle(&mut run.oracle, n, &block, &w.witness)?;
                let out = uniform_junta_test(&mut restricted, &uj, rng)?;
                let lifted: Vec<PairCheck> = out
                    .found
                    .iter()
                    .map(|c| PairCheck {
                        a: restricted.lift(&c.witness),
                        b: restricted.lift(&c.partner),
                        differ: true,
                    })
                    .collect();
                Ok((out.accept, lifted))
            },
        )?;
        if let (false, pairs) = outcome {
            let evidence = Evidence {
                block: Some(w.block + 1),
                pairs,
                counters: None,
            };
            return Ok(Some(Verdict::reject(RejectSite::UniformJunta, evidence)));
        }

        let b = Point::random(n, rng);
        let p = b.compose_unchecked(&block, &w.witness);
        let q = p.negate_on_unchecked(&block);
        let pair = self.billed(
            |s| &mut s.antipodal_check,
            |run| PairCheck::observe(&mut run.oracle, p, q),
        );
        if !pair.differ {
            let evidence = Evidence {
                block: Some(w.block + 1),
                pairs: vec![pair],
                counters: None,
            };
            return Ok(Some(Verdict::reject(RejectSite::Constant, evidence)));
        }
        Ok(None)
    }
}

/// Draws `w` uniformly and builds the mask `z` of the final test.
///
/// For each found block, `w` splits `X_ℓ` into `Y₀` (where `w` is 0) and `Y₁`.
/// Over `h` uniform draws of `b`, `G₀` counts flips of `b` on `Y₀` that change
/// `f(b on X_ℓ, v elsewhere)` and `G₁` the same for `Y₁`. Unless
/// `{G₀, G₁} = {0, h}` this rejects. Otherwise `z` takes `w` on `X_ℓ` when
/// `G₀ = h` and its negation when `G₁ = h`, which puts a 0 on the coordinate
/// the restriction depends on. `z` is zero off the found blocks.
///
/// Each iteration compares three distinct points; the unflipped one is
/// memoized so it is billed once.
pub fn draw_final_mask<R: Rng + ?Sized>(
    oracle: &mut CountingOracle<'_>,
    partition: &BlockPartition,
    found: &[RelevantBlockWitness],
    h: u64,
    rng: &mut R,
) -> Result<MaskOutcome> {
    let n = partition.dim();
    check_dim(n, oracle.dim())?;
    let w = Point::random(n, rng);
    let mut z = Point::zeros(n);
    for fw in found {
        let block = partition.block(fw.block);
        let (y0, y1) = block.split_by(&w);
        let (mut g0, mut g1) = (0u64, 0u64);
        let (mut seen_y0, mut seen_y1): (Option<PairCheck>, Option<PairCheck>) = (None, None);
        let mut quiet_y0: Option<PairCheck> = None;
        let mut quiet_y1: Option<PairCheck> = None;
        for _ in 0..h {
            let b = Point::random(n, rng);
            let base = b.compose_unchecked(block, &fw.witness);
            let flip0 = base.negate_on_unchecked(&y0);
            let flip1 = base.negate_on_unchecked(&y1);
            oracle.begin_memo_scope();
            let c0 = PairCheck::observe(oracle, base.clone(), flip0);
            let c1 = PairCheck::observe(oracle, base, flip1);
            oracle.end_memo_scope();
            if c0.differ {
                g0 += 1;
                seen_y0.get_or_insert(c0);
            } else {
                quiet_y0.get_or_insert(c0);
            }
            if c1.differ {
                g1 += 1;
                seen_y1.get_or_insert(c1);
            } else {
                quiet_y1.get_or_insert(c1);
            }
        }
        let valid = (g0 == h && g1 == 0) || (g0 == 0 && g1 == h);
        if !valid {
            // Two pairs that cannot both be consistent with a valid {0, h} split.
            let pairs = if g0 > 0 && g1 > 0 {
                vec![seen_y0, seen_y1]
            } else if g0 > 0 {
                vec![seen_y0, quiet_y0]
            } else if g1 > 0 {
                vec![seen_y1, quiet_y1]
            } else {
                vec![quiet_y0, quiet_y1]
            };
            let evidence = Evidence {
                block: Some(fw.block + 1),
                pairs: pairs.into_iter().flatten().collect(),
                counters: Some((g0, g1)),
            };
            return Ok(MaskOutcome::Reject(evidence));
        }
        let fill = if g0 == h { w.clone() } else { w.negate() };
        z = fill.compose_unchecked(block, &z);
    }
    Ok(MaskOutcome::Mask { w, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FunctionSpec;

    fn approx_eq(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn derived_constants_k2_eps_tenth() {
        let p = TesterParams::derive(2, 0.1, 0).unwrap();
        assert_eq!(
            (p.r, p.m, p.t_threshold, p.m_prime, p.h),
            (8, 137, 69, 55, 26)
        );
    }

    #[test]
    fn derived_constants_k1_eps_half() {
        let p = TesterParams::derive(1, 0.5, 0).unwrap();
        assert_eq!(
            (p.r, p.m, p.t_threshold, p.m_prime, p.h),
            (2, 11, 11, 11, 18)
        );
    }

    #[test]
    fn loop_bound_matches_threshold_times_k() {
        for k in 1..=12 {
            for eps in [0.01, 0.05, 0.1, 0.2, 0.33, 0.5, 0.9] {
                let p = TesterParams::derive(k, eps, 0).unwrap();
                let slack = k as u64 * p.t_threshold - p.m;
                assert!(slack < k as u64, "k={k} eps={eps} slack={slack}");
            }
        }
    }

    #[test]
    fn parameter_domain() {
        assert!(TesterParams::derive(0, 0.1, 0).is_err());
        assert!(TesterParams::derive(1, 0.0, 0).is_err());
        assert!(TesterParams::derive(1, 1.0, 0).is_err());
        assert!(TesterParams::derive(1, f64::NAN, 0).is_err());
    }

    #[test]
    fn budget_formula_k2_eps_tenth() {
        // 2·137 + 3·⌈log₂ 8⌉ + 2·(355·(2 + ⌈log₂ 45⌉) + 2) + 55·(4·2·26 + 2)
        let p = TesterParams::derive(2, 0.1, 0).unwrap();
        assert_eq!(p.query_budget(), 274 + 9 + 2 * (355 * 8 + 2) + 55 * 210);
        assert_eq!(p.query_budget(), 17_517);
        assert!(approx_eq(p.eps, 0.1));
    }

    #[test]
    fn budget_is_monotone() {
        for k in 1..10 {
            for eps in [0.05, 0.1, 0.2, 0.4] {
                let b = TesterParams::derive(k, eps, 0).unwrap().query_budget();
                assert!(TesterParams::derive(k + 1, eps, 0).unwrap().query_budget() >= b);
                assert!(
                    TesterParams::derive(k, eps / 2.0, 0)
                        .unwrap()
                        .query_budget()
                        >= b
                );
            }
        }
    }

    #[test]
    fn constant_function_always_accepts() {
        let f = FunctionSpec::Constant {
            n: 12,
            value: false,
        }
        .build()
        .unwrap();
        let dists = [
            Distribution::uniform(12),
            crate::dist::DistributionSpec::RandomSupport {
                n: 12,
                size: 5,
                seed: 1,
                weights: crate::dist::SupportWeights::Dirichlet,
            }
            .build()
            .unwrap(),
        ];
        for d in &dists {
            for seed in 0..50 {
                let p = TesterParams::derive(1, 0.2, seed).unwrap();
                let t = run_seeded(&f, d, &p, None).unwrap();
                assert!(t.verdict.is_accept());
                assert!(t.found_blocks.is_empty());
                assert_eq!(t.phase2_exit, Phase2Exit::Threshold);
                assert_eq!(t.total_queries, t.queries_by_stage.total());
                assert!(t.total_queries <= p.query_budget());
            }
        }
    }

    #[test]
    fn separated_junta_never_rejects() {
        let f = FunctionSpec::Junta {
            n: 9,
            coords: vec![2, 5, 9],
            table: "01101001".into(),
        }
        .build()
        .unwrap();
        let part = BlockPartition::from_coord_lists(
            9,
            &[
                vec![1, 2],
                vec![3, 4, 5],
                vec![6],
                vec![],
                vec![7, 8, 9],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![],
            ],
        )
        .unwrap();
        let d = Distribution::uniform(9);
        for seed in 0..200 {
            let p = TesterParams::derive(3, 0.2, seed).unwrap();
            let t = run_seeded(&f, &d, &p, Some(&part)).unwrap();
            assert!(t.verdict.is_accept(), "seed {seed}: {:?}", t.verdict);
            assert!(t.total_queries <= p.query_budget());
        }
    }

    #[test]
    fn mask_zeroes_the_relevant_coordinate() {
        // f = x3 XOR x6 with x3 in block 0 and x6 in block 1.
        let f = FunctionSpec::Parity {
            n: 8,
            coords: vec![3, 6],
        }
        .build()
        .unwrap();
        let part =
            BlockPartition::from_coord_lists(8, &[vec![1, 2, 3, 4], vec![5, 6, 7, 8]]).unwrap();
        let found: Vec<RelevantBlockWitness> = [0usize, 1]
            .into_iter()
            .map(|b| {
                let witness = Point::zeros(8).negate_on(part.block(b)).unwrap();
                let partner = witness.zero_out(part.block(b)).unwrap();
                RelevantBlockWitness {
                    block: b,
                    witness,
                    partner,
                }
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ones = [0usize; 8];
        let draws = 4000;
        for _ in 0..draws {
            let mut oracle = CountingOracle::new(&f);
            let MaskOutcome::Mask { w, z } =
                draw_final_mask(&mut oracle, &part, &found, 10, &mut rng).unwrap()
            else {
                panic!("separated parity must not reject");
            };
            assert!(!z.get(2) && !z.get(5));
            for b in 0..2 {
                let blk = part.block(b);
                let zb = z.zero_out(&blk.complement()).unwrap();
                let wb = w.zero_out(&blk.complement()).unwrap();
                let nwb = w.negate().zero_out(&blk.complement()).unwrap();
                assert!(zb == wb || zb == nwb);
            }
            // three distinct points per iteration, two when w is constant on the block
            let per_iter: u64 = (0..2)
                .map(|b| {
                    let (y0, y1) = part.block(b).split_by(&w);
                    if y0.is_empty() || y1.is_empty() {
                        2
                    } else {
                        3
                    }
                })
                .sum();
            assert_eq!(oracle.count(), 10 * per_iter);
            for (i, c) in ones.iter_mut().enumerate() {
                *c += usize::from(z.get(i));
            }
        }
        for (i, &c) in ones.iter().enumerate() {
            if i == 2 || i == 5 {
                continue;
            }
            let freq = c as f64 / draws as f64;
            // 3σ for a fair coin at 4000 draws is about 0.024.
            assert!(
                (freq - 0.5).abs() < 0.03,
                "coordinate {} frequency {freq}",
                i + 1
            );
        }
    }

    #[test]
    fn evidence_reverifies() {
        let f = FunctionSpec::Parity {
            n: 6,
            coords: vec![1, 2, 3],
        }
        .build()
        .unwrap();
        let d = Distribution::uniform(6);
        let mut rejects = 0;
        for seed in 0..100 {
            let p = TesterParams::derive(2, 0.4, seed).unwrap();
            let t = run_seeded(&f, &d, &p, None).unwrap();
            if let Some(ev) = &t.verdict.evidence {
                rejects += 1;
                assert!(ev.verify(&f), "seed {seed}: {ev:?}");
                if t.verdict.reject_site != Some(RejectSite::Overflow) {
                    assert!(ev.verification_cost() <= 4);
                }
            }
            assert!(t.total_queries <= p.query_budget());
        }
        assert!(rejects > 60);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = FunctionSpec::Constant { n: 4, value: true }
            .build()
            .unwrap();
        let p = TesterParams::derive(1, 0.2, 0).unwrap();
        assert!(run_seeded(&f, &Distribution::uniform(5), &p, None).is_err());
    }
}
