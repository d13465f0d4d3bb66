//! The sampling oracle for D, with exact point weights for certification.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::bits::Point;
use crate::error::{check_dim, Error, Result};
use crate::oracle::BooleanFunction;

/// Largest n for which the cube is enumerated exhaustively.
pub const MAX_ENUM_VARS: usize = 24;

/// Tolerance on the total mass of a finite-support distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability given either as a number or as a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Value(f64),
    Ratio(String),
}

impl Weight {
    pub fn value(&self) -> Result<f64> {
        match self {
            Weight::Value(v) => Ok(*v),
            Weight::Ratio(s) => {
                let (num, den) = s.split_once('/').ok_or_else(|| {
                    Error::MalformedSpec(format!("weight {s:?} is not of the form p/q"))
                })?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::MalformedSpec(format!("weight {s:?}: {e}")))
                };
                let (num, den) = (parse(num)?, parse(den)?);
                if den == 0 {
                    return Err(Error::MalformedSpec(format!(
                        "weight {s:?} has zero denominator"
                    )));
                }
                Ok(num as f64 / den as f64)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub point: Point,
    pub weight: Weight,
}

/// Serializable record of a distribution over {0,1}^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        n: usize,
    },
    FiniteSupport {
        n: usize,
        support: Vec<WeightedPoint>,
    },
    /// Independent coordinates; `probs[i]` is Pr[x_{i+1} = 1].
    Product {
        n: usize,
        probs: Vec<f64>,
    },
    /// `size` distinct uniform points.
    RandomSupport {
        n: usize,
        size: usize,
        seed: u64,
        #[serde(default)]
        weights: SupportWeights,
    },
}

/// How a random support is weighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportWeights {
    /// Dirichlet(1, .., 1).
    #[default]
    Dirichlet,
    Equal,
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Uniform { n }
            | Self::FiniteSupport { n, .. }
            | Self::Product { n, .. }
            | Self::RandomSupport { n, .. } => n,
        }
    }

    pub fn build(&self) -> Result<Distribution> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::MalformedSpec("dimension must be at least 1".into()));
        }
        match self {
            Self::Uniform { .. } => Ok(Distribution {
                n,
                kind: Kind::Uniform,
            }),
            Self::Product { probs, .. } => {
                check_dim(n, probs.len())?;
                if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::MalformedSpec(format!(
                        "product probability {p} outside [0,1]"
                    )));
                }
                Ok(Distribution {
                    n,
                    kind: Kind::Product(probs.clone()),
                })
            }
            Self::FiniteSupport { support, .. } => {
                let points = support
                    .iter()
                    .map(|wp| Ok((wp.point.clone(), wp.weight.value()?)))
                    .collect::<Result<Vec<_>>>()?;
                Distribution::finite(n, points)
            }
            Self::RandomSupport {
                size,
                seed,
                weights,
                ..
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let points = random_support(n, *size, *weights, &mut rng)?;
                Distribution::finite(n, points)
            }
        }
    }
}

fn random_support<R: Rng>(
    n: usize,
    size: usize,
    weights: SupportWeights,
    rng: &mut R,
) -> Result<Vec<(Point, f64)>> {
    if size == 0 || (n < 64 && (size as u128) > (1u128 << n)) {
        return Err(Error::MalformedSpec(format!(
            "cannot draw {size} distinct points in dimension {n}"
        )));
    }
    let mut seen = HashMap::new();
    let mut points = Vec::with_capacity(size);
    while points.len() < size {
        let x = Point::random(n, rng);
        if seen.insert(x.clone(), ()).is_none() {
            points.push(x);
        }
    }
    let raw: Vec<f64> = match weights {
        SupportWeights::Dirichlet => (0..size).map(|_| rng.sample::<f64, _>(Exp1)).collect(),
        SupportWeights::Equal => vec![1.0; size],
    };
    let total: f64 = raw.iter().sum();
    Ok(points
        .into_iter()
        .zip(raw)
        .map(|(x, w)| (x, w / total))
        .collect())
}

#[derive(Clone, Debug)]
enum Kind {
    Uniform,
    Finite {
        points: Vec<(Point, f64)>,
        lookup: HashMap<Point, f64>,
        sampler: WeightedIndex<f64>,
    },
    Product(Vec<f64>),
}

/// A validated distribution. Immutable; sampling takes the caller's generator.
#[derive(Clone, Debug)]
pub struct Distribution {
    n: usize,
    kind: Kind,
}

impl Distribution {
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            kind: Kind::Uniform,
        }
    }

    pub fn finite(n: usize, points: Vec<(Point, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::MalformedSpec("finite support is empty".into()));
        }
        let mut lookup = HashMap::with_capacity(points.len());
        for (x, w) in &points {
            check_dim(n, x.dim())?;
            if w.is_nan() || *w <= 0.0 {
                return Err(Error::MalformedSpec(format!(
                    "weight {w} of {x} is not strictly positive"
                )));
            }
            if lookup.insert(x.clone(), *w).is_some() {
                return Err(Error::MalformedSpec(format!(
                    "support point {x} listed twice"
                )));
            }
        }
        let total: f64 = points.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MalformedSpec(format!(
                "support weights sum to {total}, not 1"
            )));
        }
        let sampler = WeightedIndex::new(points.iter().map(|(_, w)| *w))
            .map_err(|e| Error::MalformedSpec(e.to_string()))?;
        Ok(Self {
            n,
            kind: Kind::Finite {
                points,
                lookup,
                sampler,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            Kind::Uniform => Point::random(self.n, rng),
            Kind::Finite {
                points, sampler, ..
            } => points[sampler.sample(rng)].0.clone(),
            Kind::Product(probs) => {
                let mut x = Point::zeros(self.n);
                for (i, &p) in probs.iter().enumerate() {
                    // random::<f64>() lies in [0, 1), so p = 1 always fires and p = 0 never does.
                    x.set(i, rng.random::<f64>() < p);
                }
                x
            }
        }
    }

    /// Exact probability mass of `x`.
    pub fn weight(&self, x: &Point) -> f64 {
        match &self.kind {
            Kind::Uniform => 0.5f64.powi(self.n as i32),
            Kind::Finite { lookup, .. } => lookup.get(x).copied().unwrap_or(0.0),
            Kind::Product(probs) => probs
                .iter()
                .enumerate()
                .map(|(i, &p)| if x.get(i) { p } else { 1.0 - p })
                .product(),
        }
    }

    /// Every point of positive mass with its weight.
    ///
    /// Uniform and product distributions are enumerated over the whole cube,
    /// which is refused above [`MAX_ENUM_VARS`].
    pub fn support(&self) -> Result<Vec<(Point, f64)>> {
        match &self.kind {
            Kind::Finite { points, .. } => Ok(points.clone()),
            _ => {
                if self.n > MAX_ENUM_VARS {
                    return Err(Error::Capacity {
                        what: format!("enumerating {{0,1}}^{}", self.n),
                        limit: format!("n <= {MAX_ENUM_VARS}"),
                    });
                }
                Ok((0..1u64 << self.n)
                    .map(|a| Point::from_index(self.n, a))
                    .map(|x| {
                        let w = self.weight(&x);
                        (x, w)
                    })
                    .filter(|(_, w)| *w > 0.0)
                    .collect())
            }
        }
    }

    pub fn support_size_hint(&self) -> u128 {
        match &self.kind {
            Kind::Finite { points, .. } => points.len() as u128,
            _ => 1u128.checked_shl(self.n as u32).unwrap_or(u128::MAX),
        }
    }
}

/// Exact Pr_{x ~ D}[f(x) != g(x)].
pub fn disagreement_weight(
    f: &dyn BooleanFunction,
    g: &dyn BooleanFunction,
    dist: &Distribution,
) -> Result<f64> {
    check_dim(dist.dim(), f.dim())?;
    check_dim(dist.dim(), g.dim())?;
    Ok(dist
        .support()?
        .iter()
        .filter(|(x, _)| f.eval(x) != g.eval(x))
        .map(|(_, w)| w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FunctionSpec;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    fn finite(n: usize, pts: &[(&str, f64)]) -> Distribution {
        Distribution::finite(n, pts.iter().map(|(s, w)| (p(s), *w)).collect()).unwrap()
    }

    #[test]
    fn degenerate_distributions_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mass = finite(4, &[("1010", 1.0)]);
        let prod = DistributionSpec::Product {
            n: 3,
            probs: vec![1.0, 0.0, 1.0],
        }
        .build()
        .unwrap();
        for _ in 0..1000 {
            assert_eq!(mass.sample(&mut rng), p("1010"));
            assert_eq!(prod.sample(&mut rng), p("101"));
        }
    }

    #[test]
    fn uniform_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Distribution::uniform(2);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[d.sample(&mut rng).gather(&[0, 1]) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn finite_and_product_frequencies_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000usize;
        let dists = [
            DistributionSpec::RandomSupport {
                n: 6,
                size: 7,
                seed: 11,
                weights: SupportWeights::Dirichlet,
            }
            .build()
            .unwrap(),
            DistributionSpec::Product {
                n: 3,
                probs: vec![0.2, 0.5, 0.9],
            }
            .build()
            .unwrap(),
        ];
        for d in dists {
            let mut counts: HashMap<Point, usize> = HashMap::new();
            for _ in 0..draws {
                *counts.entry(d.sample(&mut rng)).or_default() += 1;
            }
            for (x, w) in d.support().unwrap() {
                let freq = counts.get(&x).copied().unwrap_or(0) as f64 / draws as f64;
                let sigma = (w * (1.0 - w) / draws as f64).sqrt();
                assert!(
                    (freq - w).abs() <= 3.0 * sigma + 1e-9,
                    "{x}: freq {freq} weight {w}"
                );
            }
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(Distribution::uniform(3).weight(&p("101")), 0.125);
        let d = finite(2, &[("00", 0.3), ("11", 0.7)]);
        assert_eq!(d.weight(&p("11")), 0.7);
        assert_eq!(d.weight(&p("01")), 0.0);
        let prod = DistributionSpec::Product {
            n: 2,
            probs: vec![0.5, 1.0],
        }
        .build()
        .unwrap();
        assert_eq!(prod.weight(&p("01")), 0.5);
        assert_eq!(prod.weight(&p("00")), 0.0);
    }

    #[test]
    fn invalid_specs_are_refused() {
        let bad = |pts: &[(&str, f64)]| {
            Distribution::finite(2, pts.iter().map(|(s, w)| (p(s), *w)).collect())
        };
        assert!(bad(&[("00", 0.5), ("00", 0.5)]).is_err());
        assert!(bad(&[("00", 0.5), ("01", 0.4)]).is_err());
        assert!(bad(&[("00", 1.0), ("01", 0.0)]).is_err());
        assert!(bad(&[("000", 1.0)]).is_err());
        assert!(DistributionSpec::Product {
            n: 2,
            probs: vec![0.5, 1.5]
        }
        .build()
        .is_err());
        assert!(DistributionSpec::RandomSupport {
            n: 2,
            size: 5,
            seed: 0,
            weights: SupportWeights::Dirichlet
        }
        .build()
        .is_err());
    }

    #[test]
    fn rational_weights_parse() {
        let spec: DistributionSpec = serde_json::from_str(
            r#"{"kind":"finite_support","n":2,"support":[{"point":"00","weight":"1/3"},{"point":"11","weight":"2/3"}]}"#,
        )
        .unwrap();
        let d = spec.build().unwrap();
        assert!((d.weight(&p("11")) - 2.0 / 3.0).abs() < 1e-15);
        assert!(Weight::Ratio("1/0".into()).value().is_err());
        assert!(Weight::Ratio("0.5".into()).value().is_err());
    }

    #[test]
    fn disagreement_examples() {
        let x1 = FunctionSpec::Literal {
            n: 2,
            coord: 1,
            positive: true,
        }
        .build()
        .unwrap();
        let not_x1 = FunctionSpec::Literal {
            n: 2,
            coord: 1,
            positive: false,
        }
        .build()
        .unwrap();
        let par = FunctionSpec::Parity {
            n: 2,
            coords: vec![1, 2],
        }
        .build()
        .unwrap();
        let u = Distribution::uniform(2);
        assert_eq!(disagreement_weight(&x1, &x1, &u).unwrap(), 0.0);
        assert_eq!(disagreement_weight(&x1, &not_x1, &u).unwrap(), 1.0);
        assert_eq!(disagreement_weight(&par, &x1, &u).unwrap(), 0.5);
    }

    #[test]
    fn disagreement_is_symmetric_and_a_metric() {
        let d = DistributionSpec::RandomSupport {
            n: 5,
            size: 12,
            seed: 4,
            weights: SupportWeights::Dirichlet,
        }
        .build()
        .unwrap();
        for seed in 0..20 {
            let fs: Vec<_> = (0..3)
                .map(|i| {
                    FunctionSpec::RandomTable {
                        n: 5,
                        seed: seed * 3 + i,
                    }
                    .build()
                    .unwrap()
                })
                .collect();
            let dist = |a: usize, b: usize| disagreement_weight(&fs[a], &fs[b], &d).unwrap();
            assert!((dist(0, 1) - dist(1, 0)).abs() < 1e-15);
            assert!(dist(0, 2) <= dist(0, 1) + dist(1, 2) + 1e-12);
        }
    }

    #[test]
    fn enumeration_is_capped() {
        let big = Distribution::uniform(MAX_ENUM_VARS + 1);
        assert!(matches!(big.support(), Err(Error::Capacity { .. })));
    }
}
