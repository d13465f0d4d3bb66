//! Exhaustive ground truth for small instances: relevant variables, the exact
//! distance to the nearest k-junta under D, and the exact hybrid-disagreement
//! probability `Pr_{x~D, y~U}[f(x) != f(x_J ∘ y_J̄)]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{BlockPartition, IndexSet, Point};
use crate::dist::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::oracle::{BooleanFunction, FunctionSpec};

/// Cap on n for relevant-variable scans.
pub const MAX_RELEVANCE_VARS: usize = 20;
/// Cap on n when the distance or hybrid computation enumerates the whole cube.
pub const MAX_CUBE_VARS: usize = 16;
/// Cap on (subsets × support points) for the distance search.
pub const MAX_DISTANCE_WORK: u128 = 4_000_000_000;
/// Cap on (support points × completions) for the exact hybrid probability.
pub const MAX_HYBRID_WORK: u128 = 1 << 30;

fn capacity(what: String, limit: impl ToString) -> Error {
    Error::Capacity {
        what,
        limit: limit.to_string(),
    }
}

fn cube_values(f: &dyn BooleanFunction) -> Vec<bool> {
    let n = f.dim();
    (0..1u64 << n)
        .into_par_iter()
        .map(|a| f.eval(&Point::from_index(n, a)))
        .collect()
}

/// Coordinates `i` with `f(a) != f(a ⊕ e_i)` for some `a`.
pub fn relevant_variables(f: &dyn BooleanFunction) -> Result<IndexSet> {
    let n = f.dim();
    if n > MAX_RELEVANCE_VARS {
        return Err(capacity(
            format!("relevant-variable scan over {n} variables"),
            format!("n <= {MAX_RELEVANCE_VARS}"),
        ));
    }
    let values = cube_values(f);
    let relevant = (0..n).filter(|&i| {
        let bit = 1usize << i;
        (0..values.len()).any(|a| a & bit == 0 && values[a] != values[a | bit])
    });
    IndexSet::from_indices(n, relevant)
}

/// Blocks `X` of `partition` with `f(a) != f(b_X ∘ a_X̄)` for some `a`, `b`,
/// found by direct enumeration of both points.
pub fn relevant_blocks(f: &dyn BooleanFunction, partition: &BlockPartition) -> Result<Vec<usize>> {
    let n = f.dim();
    check_dim(n, partition.dim())?;
    if n > 12 {
        return Err(capacity(
            format!("relevant-block scan over {n} variables"),
            "n <= 12",
        ));
    }
    let values = cube_values(f);
    let blocks = (0..partition.num_blocks())
        .filter(|&b| {
            let mask = partition
                .block(b)
                .indices()
                .iter()
                .fold(0usize, |m, &i| m | (1 << i));
            (0..values.len()).any(|a| {
                // Enumerate every b_X by walking the submasks of `mask`.
                let mut sub = mask;
                loop {
                    if values[(a & !mask) | sub] != values[a] {
                        return true;
                    }
                    if sub == 0 {
                        return false;
                    }
                    sub = (sub - 1) & mask;
                }
            })
        })
        .collect();
    Ok(blocks)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    pub distance: f64,
    pub best_j: IndexSet,
    /// Outputs of the nearest junta by assignment index over `best_j`.
    pub best_table: String,
}

impl DistanceReport {
    /// The nearest junta as a buildable spec.
    pub fn nearest_junta(&self) -> FunctionSpec {
        FunctionSpec::Junta {
            n: self.best_j.dim(),
            coords: self.best_j.coords(),
            table: self.best_table.clone(),
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..=n - (k - current.len()) {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exact `min over |J| <= k, g of Pr_{x~D}[f(x) != g(x_J)]`.
///
/// For fixed `J` the best `g` takes, on each assignment `a` of `J`, the value
/// carrying more D-mass among points with `x_J = a` (ties go to 0), so the
/// distance is `Σ_a min(mass₀(a), mass₁(a))`. Supersets never do worse, so
/// only subsets of size `min(k, n)` are enumerated.
pub fn distance_to_nearest_kjunta(
    f: &dyn BooleanFunction,
    dist: &Distribution,
    k: usize,
) -> Result<DistanceReport> {
    let n = f.dim();
    check_dim(n, dist.dim())?;
    if dist.support_size_hint() > (1u128 << MAX_CUBE_VARS) {
        return Err(capacity(
            format!(
                "distance certification over a support of {} points",
                dist.support_size_hint()
            ),
            format!("2^{MAX_CUBE_VARS}"),
        ));
    }
    let k = k.min(n);
    if k > 24 {
        return Err(capacity(
            format!("junta tables over {k} variables"),
            "k <= 24",
        ));
    }
    let support = dist.support()?;
    let work = binomial(n, k) * support.len() as u128;
    if work > MAX_DISTANCE_WORK {
        return Err(capacity(
            format!("distance search of {work} steps"),
            MAX_DISTANCE_WORK,
        ));
    }
    let labelled: Vec<(&Point, f64, bool)> =
        support.iter().map(|(x, w)| (x, *w, f.eval(x))).collect();

    let best = combinations(n, k)
        .into_par_iter()
        .map(|subset| {
            let mut mass = vec![[0.0f64; 2]; 1 << k];
            for &(x, w, fx) in &labelled {
                mass[x.gather(&subset) as usize][usize::from(fx)] += w;
            }
            let distance: f64 = mass.iter().map(|m| m[0].min(m[1])).sum();
            (distance, subset, mass)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least one subset");

    let (distance, subset, mass) = best;
    let best_table = mass
        .iter()
        .map(|m| if m[1] > m[0] { '1' } else { '0' })
        .collect();
    Ok(DistanceReport {
        distance,
        best_j: IndexSet::from_indices(n, subset)?,
        best_table,
    })
}

/// Exact `Pr_{x~D, y~U}[f(x) != f(x_J ∘ y_J̄)]`.
pub fn lemma4_exact(f: &dyn BooleanFunction, dist: &Distribution, j: &IndexSet) -> Result<f64> {
    let n = f.dim();
    check_dim(n, dist.dim())?;
    check_dim(n, j.dim())?;
    let free = j.complement();
    let completions = 1u128.checked_shl(free.len() as u32).unwrap_or(u128::MAX);
    let work = dist.support_size_hint().saturating_mul(completions);
    if work > MAX_HYBRID_WORK {
        return Err(capacity(
            format!("hybrid enumeration of {work} pairs"),
            MAX_HYBRID_WORK,
        ));
    }
    let support = dist.support()?;
    let free_idx = free.indices();
    let total: f64 = support
        .par_iter()
        .map(|(x, w)| {
            let fx = f.eval(x);
            let mut y = x.clone();
            let mut differ = 0u64;
            for c in 0..completions as u64 {
                for (pos, &i) in free_idx.iter().enumerate() {
                    y.set(i, (c >> pos) & 1 == 1);
                }
                differ += u64::from(f.eval(&y) != fx);
            }
            w * differ as f64 / completions as f64
        })
        .sum();
    Ok(total)
}
