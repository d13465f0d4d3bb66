//! Distribution-free adaptive testing of k-juntas.
//!
//! [`tester::test_distribution_free`] decides, with one-sided error, whether a
//! black-box `f: {0,1}^n -> {0,1}` is a k-junta or ε-far from every k-junta
//! under an unknown distribution it can only sample. Everything else in the
//! crate is support: bit vectors, oracles, distributions, a brute-force
//! distance oracle for small `n`, and a seeded experiment harness.

pub mod bits;
pub mod bruteforce;
pub mod dist;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod search;
pub mod tester;
pub mod uniform_junta;

pub use bits::{BlockPartition, IndexSet, Point};
pub use dist::{Distribution, DistributionSpec, SupportWeights};
pub use error::{Error, Result};
pub use oracle::{BooleanFunction, CountingOracle, Function, FunctionSpec, QueryOracle};
pub use tester::{test_distribution_free, Outcome, RejectSite, TesterParams, Transcript, Verdict};
