//! Black-box Boolean functions, query counting and restrictions.
//!
//! A [`FunctionSpec`] is the replayable record of how a function was built; it
//! materializes into a [`Function`], which is immutable and shareable across
//! trial workers. Testers never touch a `Function` directly: they go through a
//! [`QueryOracle`], normally a [`CountingOracle`] owned by a single trial.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{IndexSet, Point};
use crate::error::{check_dim, Error, Result};

/// Largest table a `truth_table`, `junta` or `random_table` spec may carry.
pub const MAX_TABLE_VARS: usize = 24;

/// A deterministic map {0,1}^n -> {0,1}.
pub trait BooleanFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Point) -> bool;
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Point) -> bool {
        (**self).eval(x)
    }
}

/// Adapts a closure into a [`BooleanFunction`].
pub struct FromFn<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&Point) -> bool + Send + Sync> FromFn<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&Point) -> bool + Send + Sync> BooleanFunction for FromFn<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &Point) -> bool {
        (self.f)(x)
    }
}

/// Serializable construction record for a test function. Coordinates are 1-based.
///
/// Table strings list outputs by assignment index: character `a` is the value
/// on the input whose `j`-th listed variable equals bit `j` of `a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        n: usize,
        value: bool,
    },
    Literal {
        n: usize,
        coord: usize,
        #[serde(default = "default_true")]
        positive: bool,
    },
    Parity {
        n: usize,
        coords: Vec<usize>,
    },
    TruthTable {
        n: usize,
        table: String,
    },
    Junta {
        n: usize,
        coords: Vec<usize>,
        table: String,
    },
    RandomJunta {
        n: usize,
        k: usize,
        seed: u64,
    },
    RandomTable {
        n: usize,
        seed: u64,
    },
    /// OR of `count` ANDs over consecutive groups of `width` coordinates.
    Tribes {
        n: usize,
        width: usize,
        count: usize,
    },
}

fn default_true() -> bool {
    true
}

impl FunctionSpec {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Constant { n, .. }
            | Self::Literal { n, .. }
            | Self::Parity { n, .. }
            | Self::TruthTable { n, .. }
            | Self::Junta { n, .. }
            | Self::RandomJunta { n, .. }
            | Self::RandomTable { n, .. }
            | Self::Tribes { n, .. } => n,
        }
    }

    pub fn build(&self) -> Result<Function> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::MalformedSpec("dimension must be at least 1".into()));
        }
        let body = match self {
            Self::Constant { value, .. } => Body::Constant(*value),
            Self::Literal {
                coord, positive, ..
            } => {
                let set = IndexSet::from_coords(n, &[*coord])?;
                Body::Literal {
                    index: set.indices()[0],
                    positive: *positive,
                }
            }
            Self::Parity { coords, .. } => Body::Parity(distinct_coords(n, coords)?),
            Self::TruthTable { table, .. } => {
                if n > MAX_TABLE_VARS {
                    return Err(Error::Capacity {
                        what: format!("truth table over {n} variables"),
                        limit: format!("{MAX_TABLE_VARS} variables"),
                    });
                }
                Body::Table {
                    vars: (0..n).collect(),
                    table: parse_table(table, n)?,
                }
            }
            Self::Junta { coords, table, .. } => {
                distinct_coords(n, coords)?;
                if coords.len() > MAX_TABLE_VARS {
                    return Err(Error::Capacity {
                        what: format!("junta over {} variables", coords.len()),
                        limit: format!("{MAX_TABLE_VARS} variables"),
                    });
                }
                // Table variable order follows the listed coordinates.
                let vars = coords.iter().map(|c| c - 1).collect();
                Body::Table {
                    vars,
                    table: parse_table(table, coords.len())?,
                }
            }
            Self::RandomJunta { k, seed, .. } => {
                if *k > n || *k > MAX_TABLE_VARS {
                    return Err(Error::MalformedSpec(format!(
                        "random_junta needs k <= min(n, {MAX_TABLE_VARS}), got k={k}, n={n}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut vars = sample(&mut rng, n, *k).into_vec();
                vars.sort_unstable();
                Body::Table {
                    vars,
                    table: random_table(*k, &mut rng),
                }
            }
            Self::RandomTable { seed, .. } => {
                if n > MAX_TABLE_VARS {
                    return Err(Error::Capacity {
                        what: format!("random table over {n} variables"),
                        limit: format!("{MAX_TABLE_VARS} variables"),
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Body::Table {
                    vars: (0..n).collect(),
                    table: random_table(n, &mut rng),
                }
            }
            Self::Tribes { width, count, .. } => {
                if *width == 0 || *count == 0 || width * count > n {
                    return Err(Error::MalformedSpec(format!(
                        "tribes needs 1 <= width*count <= n, got {width}x{count} with n={n}"
                    )));
                }
                Body::Tribes {
                    width: *width,
                    count: *count,
                }
            }
        };
        Ok(Function {
            n,
            spec: self.clone(),
            body,
        })
    }
}

fn distinct_coords(n: usize, coords: &[usize]) -> Result<IndexSet> {
    let set = IndexSet::from_coords(n, coords)?;
    if set.len() != coords.len() {
        return Err(Error::MalformedSpec(format!(
            "repeated coordinate in {coords:?}"
        )));
    }
    Ok(set)
}

fn parse_table(s: &str, vars: usize) -> Result<Vec<u64>> {
    let len = 1usize << vars;
    if s.len() != len {
        return Err(Error::MalformedSpec(format!(
            "table over {vars} variables needs {len} bits, got {}",
            s.len()
        )));
    }
    let mut words = vec![0u64; len.div_ceil(64)];
    for (a, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => words[a / 64] |= 1 << (a % 64),
            other => {
                return Err(Error::MalformedSpec(format!(
                    "invalid table character {other:?}"
                )))
            }
        }
    }
    Ok(words)
}

fn random_table<R: Rng>(vars: usize, rng: &mut R) -> Vec<u64> {
    let len = 1usize << vars;
    let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
    if len < 64 {
        words[0] &= (1u64 << len) - 1;
    }
    words
}

#[derive(Clone, Debug)]
enum Body {
    Constant(bool),
    Literal { index: usize, positive: bool },
    Parity(IndexSet),
    Table { vars: Vec<usize>, table: Vec<u64> },
    Tribes { width: usize, count: usize },
}

/// A materialized function together with the spec that produced it.
#[derive(Clone, Debug)]
pub struct Function {
    n: usize,
    spec: FunctionSpec,
    body: Body,
}

impl Function {
    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    /// The variable set the construction is known to depend on at most.
    /// `None` when the construction records no such set.
    pub fn declared_support(&self) -> Option<IndexSet> {
        let n = self.n;
        let set = match &self.body {
            Body::Constant(_) => IndexSet::empty(n),
            Body::Literal { index, .. } => IndexSet::from_indices(n, [*index]).ok()?,
            Body::Parity(set) => set.clone(),
            Body::Table { vars, .. } => IndexSet::from_indices(n, vars.iter().copied()).ok()?,
            Body::Tribes { width, count } => IndexSet::from_indices(n, 0..width * count).ok()?,
        };
        Some(set)
    }
}

impl BooleanFunction for Function {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &Point) -> bool {
        debug_assert_eq!(x.dim(), self.n);
        match &self.body {
            Body::Constant(b) => *b,
            Body::Literal { index, positive } => x.get(*index) == *positive,
            Body::Parity(set) => x.count_ones_in(set) % 2 == 1,
            Body::Table { vars, table } => {
                let a = x.gather(vars) as usize;
                (table[a / 64] >> (a % 64)) & 1 == 1
            }
            Body::Tribes { width, count } => {
                (0..*count).any(|t| (t * width..(t + 1) * width).all(|i| x.get(i)))
            }
        }
    }
}

/// Query access to a black box: the only interface testers use.
pub trait QueryOracle {
    fn dim(&self) -> usize;
    fn query(&mut self, x: &Point) -> bool;
}

impl<O: QueryOracle + ?Sized> QueryOracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn query(&mut self, x: &Point) -> bool {
        (**self).query(x)
    }
}

/// Counts the evaluations that reach the wrapped function.
///
/// While a memo scope is open, repeated points are answered from the memo and
/// not counted. Scopes do not nest.
pub struct CountingOracle<'f> {
    inner: &'f dyn BooleanFunction,
    count: u64,
    memo: Option<HashMap<Point, bool>>,
}

impl<'f> CountingOracle<'f> {
    pub fn new(inner: &'f dyn BooleanFunction) -> Self {
        Self {
            inner,
            count: 0,
            memo: None,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// The uncounted function, for certificate checks that must not be billed.
    pub fn inner(&self) -> &'f dyn BooleanFunction {
        self.inner
    }

    pub fn begin_memo_scope(&mut self) {
        self.memo = Some(HashMap::new());
    }

    pub fn end_memo_scope(&mut self) {
        self.memo = None;
    }
}

impl QueryOracle for CountingOracle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn query(&mut self, x: &Point) -> bool {
        if let Some(memo) = &self.memo {
            if let Some(&v) = memo.get(x) {
                return v;
            }
        }
        self.count += 1;
        let v = self.inner.eval(x);
        if let Some(memo) = &mut self.memo {
            memo.insert(x.clone(), v);
        }
        v
    }
}

/// `a ↦ f(a on X, base elsewhere)`, a function over {0,1}^|X|.
///
/// Wraps either a [`BooleanFunction`] (uncounted) or a [`QueryOracle`], in
/// which case every query is forwarded and billed to the underlying oracle.
pub struct Restriction<T> {
    inner: T,
    set: IndexSet,
    base: Point,
}

impl<T> Restriction<T> {
    pub fn set(&self) -> &IndexSet {
        &self.set
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    /// Embeds a point of {0,1}^|X| into {0,1}^n.
    pub fn lift(&self, a: &Point) -> Point {
        debug_assert_eq!(a.dim(), self.set.len());
        let mut x = self.base.clone();
        for (pos, &i) in self.set.indices().iter().enumerate() {
            x.set(i, a.get(pos));
        }
        x
    }
}

pub fn restriction_oracle<T>(
    inner: T,
    n: usize,
    set: &IndexSet,
    base: &Point,
) -> Result<Restriction<T>> {
    check_dim(n, set.dim())?;
    check_dim(n, base.dim())?;
    Ok(Restriction {
        inner,
        set: set.clone(),
        base: base.clone(),
    })
}

impl<T: BooleanFunction> BooleanFunction for Restriction<T> {
    fn dim(&self) -> usize {
        self.set.len()
    }
    fn eval(&self, a: &Point) -> bool {
        self.inner.eval(&self.lift(a))
    }
}

impl<T: QueryOracle> QueryOracle for Restriction<T> {
    fn dim(&self) -> usize {
        self.set.len()
    }
    fn query(&mut self, a: &Point) -> bool {
        let x = self.lift(a);
        self.inner.query(&x)
    }
}
