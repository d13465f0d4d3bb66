//! Seeded trial batches, statistics and report emission.
//!
//! Trial `i` of an experiment runs with seed `base_seed ^ i`, so a single row
//! of a report is enough to replay that trial bit-exactly.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{BlockPartition, IndexSet, Point};
use crate::bruteforce::{distance_to_nearest_kjunta, DistanceReport};
use crate::dist::{Distribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::oracle::{BooleanFunction, CountingOracle, Function, FunctionSpec};
use crate::tester::{run_seeded, Outcome, RejectSite, TesterParams, Transcript};
use crate::uniform_junta::{uniform_junta_test, UjParams, DEFAULT_C_ROUNDS};

/// Default number of binomial standard deviations subtracted from 2/3.
pub const DEFAULT_SLACK_SIGMAS: f64 = 3.0;

pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    base_seed ^ trial
}

/// Lower bound on an observed rate whose true value is at least `p`.
pub fn rate_floor(p: f64, trials: u64, sigmas: f64) -> f64 {
    p - sigmas * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub name: String,
    pub function: FunctionSpec,
    pub distribution: DistributionSpec,
    /// Attach a brute-force distance certificate to the row.
    #[serde(default)]
    pub certify: bool,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    /// What a correct tester should mostly output; checked against `2/3 - slack`.
    pub expect: Option<Expect>,
    /// Fixed block partition (1-based coordinate lists) replacing the random one.
    /// Only meant for conditional-completeness fixtures.
    pub partition: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub eps: f64,
    pub trials: u64,
    pub base_seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_c_rounds")]
    pub c_rounds: f64,
    #[serde(default = "default_slack")]
    pub slack_sigmas: f64,
    pub instances: Vec<InstanceConfig>,
}

fn default_c_rounds() -> f64 {
    DEFAULT_C_ROUNDS
}

fn default_slack() -> f64 {
    DEFAULT_SLACK_SIGMAS
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.instances.is_empty() {
            return Err(Error::InvalidParameter("no instances configured".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub reject_site: Option<RejectSite>,
    pub queries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceRow {
    pub name: String,
    pub k: usize,
    pub eps: f64,
    pub trials: u64,
    pub accept_rate: f64,
    pub reject_rate: f64,
    pub reject_sites: BTreeMap<RejectSite, u64>,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub stddev_queries: f64,
    pub budget: u64,
    pub budget_violations: u64,
    /// Trials whose rejection evidence failed to re-verify on the raw function.
    pub evidence_failures: u64,
    pub certificate: Option<DistanceReport>,
    pub certificate_error: Option<String>,
    pub expect: Option<Expect>,
    /// `2/3 - slack_sigmas·σ` for the expected outcome's rate.
    pub threshold: Option<f64>,
    pub passed: Option<bool>,
    pub error: Option<String>,
    pub wall_time_ms: u128,
    pub records: Vec<TrialRecord>,
}

impl InstanceRow {
    fn failed(name: &str, k: usize, eps: f64, error: Error) -> Self {
        Self {
            name: name.to_string(),
            k,
            eps,
            trials: 0,
            accept_rate: 0.0,
            reject_rate: 0.0,
            reject_sites: BTreeMap::new(),
            mean_queries: 0.0,
            max_queries: 0,
            stddev_queries: 0.0,
            budget: 0,
            budget_violations: 0,
            evidence_failures: 0,
            certificate: None,
            certificate_error: None,
            expect: None,
            threshold: None,
            passed: None,
            error: Some(error.to_string()),
            wall_time_ms: 0,
            records: Vec::new(),
        }
    }

    /// Everything except wall time, for replay comparisons.
    pub fn same_results(&self, other: &InstanceRow) -> bool {
        let strip = |r: &InstanceRow| InstanceRow {
            wall_time_ms: 0,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub base_seed: u64,
    pub rows: Vec<InstanceRow>,
}

impl ExperimentReport {
    pub fn same_results(&self, other: &ExperimentReport) -> bool {
        self.base_seed == other.base_seed
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.same_results(b))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// One line per instance; per-trial records are left to the JSON form.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "name",
            "k",
            "eps",
            "trials",
            "accept_rate",
            "reject_rate",
            "mean_queries",
            "max_queries",
            "stddev_queries",
            "budget",
            "budget_violations",
            "evidence_failures",
            "certified_distance",
            "threshold",
            "passed",
            "wall_time_ms",
            "error",
        ];
        let sites: Vec<String> = RejectSite::ALL
            .iter()
            .map(|s| format!("reject_{s}"))
            .collect();
        header.extend(sites.iter().map(String::as_str));
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![
                row.name.clone(),
                row.k.to_string(),
                row.eps.to_string(),
                row.trials.to_string(),
                row.accept_rate.to_string(),
                row.reject_rate.to_string(),
                format!("{:.3}", row.mean_queries),
                row.max_queries.to_string(),
                format!("{:.3}", row.stddev_queries),
                row.budget.to_string(),
                row.budget_violations.to_string(),
                row.evidence_failures.to_string(),
                row.certificate
                    .as_ref()
                    .map(|c| c.distance.to_string())
                    .unwrap_or_default(),
                row.threshold.map(|t| format!("{t:.4}")).unwrap_or_default(),
                row.passed.map(|p| p.to_string()).unwrap_or_default(),
                row.wall_time_ms.to_string(),
                row.error.clone().unwrap_or_default(),
            ];
            rec.extend(
                RejectSite::ALL
                    .iter()
                    .map(|s| row.reject_sites.get(s).copied().unwrap_or(0).to_string()),
            );
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Runs `body` on a dedicated pool when `threads > 0`.
fn with_pool<T: Send>(threads: usize, body: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(body());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(pool.install(body))
}

/// A materialized instance, ready to run trials.
pub struct PreparedInstance {
    pub function: Function,
    pub distribution: Distribution,
    pub params: TesterParams,
    pub partition: Option<BlockPartition>,
}

impl PreparedInstance {
    pub fn new(inst: &InstanceConfig, cfg: &ExperimentConfig) -> Result<Self> {
        let function = inst.function.build()?;
        let distribution = inst.distribution.build()?;
        let params = TesterParams::derive_with(
            inst.k.unwrap_or(cfg.k),
            inst.eps.unwrap_or(cfg.eps),
            cfg.base_seed,
            cfg.c_rounds,
        )?;
        let partition = inst
            .partition
            .as_ref()
            .map(|lists| BlockPartition::from_coord_lists(function.dim(), lists))
            .transpose()?;
        Ok(Self {
            function,
            distribution,
            params,
            partition,
        })
    }

    pub fn run_trial(&self, base_seed: u64, trial: u64) -> Result<Transcript> {
        let params = TesterParams {
            seed: trial_seed(base_seed, trial),
            ..self.params.clone()
        };
        run_seeded(
            &self.function,
            &self.distribution,
            &params,
            self.partition.as_ref(),
        )
    }
}

/// Replays one trial of one instance exactly as `run_experiment` ran it.
pub fn replay_trial(cfg: &ExperimentConfig, instance: &str, trial: u64) -> Result<Transcript> {
    let inst = cfg
        .instances
        .iter()
        .find(|i| i.name == instance)
        .ok_or_else(|| Error::InvalidParameter(format!("no instance named {instance:?}")))?;
    PreparedInstance::new(inst, cfg)?.run_trial(cfg.base_seed, trial)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let rows = with_pool(cfg.parallelism, || {
        cfg.instances
            .iter()
            .map(|inst| run_instance(inst, cfg))
            .collect()
    })?;
    Ok(ExperimentReport {
        base_seed: cfg.base_seed,
        rows,
    })
}

fn run_instance(inst: &InstanceConfig, cfg: &ExperimentConfig) -> InstanceRow {
    let k = inst.k.unwrap_or(cfg.k);
    let eps = inst.eps.unwrap_or(cfg.eps);
    let start = Instant::now();
    let prepared = match PreparedInstance::new(inst, cfg) {
        Ok(p) => p,
        Err(e) => return InstanceRow::failed(&inst.name, k, eps, e),
    };
    let outcomes: Result<Vec<(TrialRecord, bool)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let t = prepared.run_trial(cfg.base_seed, trial)?;
            let evidence_ok = t
                .verdict
                .evidence
                .as_ref()
                .is_none_or(|e| e.verify(&prepared.function));
            let record = TrialRecord {
                trial,
                seed: t.params.seed,
                outcome: t.verdict.outcome,
                reject_site: t.verdict.reject_site,
                queries: t.total_queries,
            };
            Ok((record, evidence_ok))
        })
        .collect();
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => return InstanceRow::failed(&inst.name, k, eps, e),
    };

    let (certificate, certificate_error) = if inst.certify {
        match distance_to_nearest_kjunta(&prepared.function, &prepared.distribution, k) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };

    let budget = prepared.params.query_budget();
    let trials = outcomes.len() as u64;
    let accepts = outcomes
        .iter()
        .filter(|(r, _)| r.outcome == Outcome::Accept)
        .count() as u64;
    let mut reject_sites = BTreeMap::new();
    for (r, _) in &outcomes {
        if let Some(site) = r.reject_site {
            *reject_sites.entry(site).or_insert(0) += 1;
        }
    }
    let queries: Vec<f64> = outcomes.iter().map(|(r, _)| r.queries as f64).collect();
    let mean = queries.iter().sum::<f64>() / trials as f64;
    let var = queries.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / trials as f64;
    let accept_rate = accepts as f64 / trials as f64;
    let reject_rate = (trials - accepts) as f64 / trials as f64;
    let threshold = inst
        .expect
        .map(|_| rate_floor(2.0 / 3.0, trials, cfg.slack_sigmas));
    let passed = inst.expect.zip(threshold).map(|(e, t)| match e {
        Expect::Accept => accept_rate >= t,
        Expect::Reject => reject_rate >= t,
    });

    InstanceRow {
        name: inst.name.clone(),
        k,
        eps,
        trials,
        accept_rate,
        reject_rate,
        reject_sites,
        mean_queries: mean,
        max_queries: outcomes.iter().map(|(r, _)| r.queries).max().unwrap_or(0),
        stddev_queries: var.sqrt(),
        budget,
        budget_violations: outcomes.iter().filter(|(r, _)| r.queries > budget).count() as u64,
        evidence_failures: outcomes.iter().filter(|(_, ok)| !ok).count() as u64,
        certificate,
        certificate_error,
        expect: inst.expect,
        threshold,
        passed,
        error: None,
        wall_time_ms: start.elapsed().as_millis(),
        records: outcomes.into_iter().map(|(r, _)| r).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub k: usize,
    pub eps: f64,
    pub trials: u64,
    pub max_observed: u64,
    pub mean_observed: f64,
    pub budget: u64,
    pub violations: u64,
    /// `(k/ε)·ln(k/ε)`.
    pub scale: f64,
    /// `max_observed / scale`.
    pub ratio: f64,
    pub budget_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub median_ratio: f64,
    pub max_ratio: f64,
}

impl SweepTable {
    /// True when no cell's ratio exceeds `factor` times the median ratio.
    pub fn bounded_by_median(&self, factor: f64) -> bool {
        self.cells
            .iter()
            .all(|c| c.ratio <= factor * self.median_ratio)
    }

    pub fn total_violations(&self) -> u64 {
        self.cells.iter().map(|c| c.violations).sum()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "k",
            "eps",
            "trials",
            "max_observed",
            "mean_observed",
            "budget",
            "violations",
            "scale",
            "ratio",
            "budget_ratio",
        ])
        .map_err(csv_err)?;
        for c in &self.cells {
            w.write_record([
                c.k.to_string(),
                c.eps.to_string(),
                c.trials.to_string(),
                c.max_observed.to_string(),
                format!("{:.2}", c.mean_observed),
                c.budget.to_string(),
                c.violations.to_string(),
                format!("{:.4}", c.scale),
                format!("{:.4}", c.ratio),
                format!("{:.4}", c.budget_ratio),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub trials: u64,
    pub base_seed: u64,
    /// Dimension of the random junta used in every cell.
    pub n: usize,
}

/// Runs `trials` tester runs per (k, ε) cell on a random k-junta under the
/// uniform distribution and relates the largest observed query count to
/// `(k/ε)·ln(k/ε)`.
pub fn sweep_budget(cfg: &SweepConfig) -> Result<SweepTable> {
    if cfg.k_list.is_empty() || cfg.eps_list.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs nonempty k and eps lists and trials >= 1".into(),
        ));
    }
    let grid: Vec<(usize, f64)> = cfg
        .k_list
        .iter()
        .flat_map(|&k| cfg.eps_list.iter().map(move |&e| (k, e)))
        .collect();
    let cells = grid
        .into_iter()
        .map(|(k, eps)| -> Result<SweepCell> {
            let function = FunctionSpec::RandomJunta {
                n: cfg.n,
                k,
                seed: cfg.base_seed ^ (k as u64),
            }
            .build()?;
            let dist = Distribution::uniform(cfg.n);
            let params = TesterParams::derive(k, eps, cfg.base_seed)?;
            let budget = params.query_budget();
            let queries = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let p = TesterParams {
                        seed: trial_seed(cfg.base_seed, trial),
                        ..params.clone()
                    };
                    run_seeded(&function, &dist, &p, None).map(|t| t.total_queries)
                })
                .collect::<Result<Vec<u64>>>()?;
            let max_observed = queries.iter().copied().max().unwrap_or(0);
            let scale = (k as f64 / eps) * (k as f64 / eps).ln();
            Ok(SweepCell {
                k,
                eps,
                trials: cfg.trials,
                max_observed,
                mean_observed: queries.iter().sum::<u64>() as f64 / queries.len() as f64,
                budget,
                violations: queries.iter().filter(|&&q| q > budget).count() as u64,
                scale,
                ratio: max_observed as f64 / scale,
                budget_ratio: budget as f64 / scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ratios: Vec<f64> = cells.iter().map(|c| c.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let mid = ratios.len() / 2;
    let median_ratio = if ratios.len() % 2 == 1 {
        ratios[mid]
    } else {
        (ratios[mid - 1] + ratios[mid]) / 2.0
    };
    let max_ratio = *ratios.last().expect("nonempty grid");
    Ok(SweepTable {
        cells,
        median_ratio,
        max_ratio,
    })
}

/// Monte-Carlo estimate of `Pr_{x~D, y~U}[f(x) != f(x_J ∘ y_J̄)]`.
pub fn estimate_lemma4<R: Rng + ?Sized>(
    f: &dyn BooleanFunction,
    dist: &Distribution,
    j: &IndexSet,
    samples: u64,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let n = f.dim();
    crate::error::check_dim(n, dist.dim())?;
    crate::error::check_dim(n, j.dim())?;
    let mut differ = 0u64;
    for _ in 0..samples {
        let x = dist.sample(rng);
        let y = Point::random(n, rng);
        let hybrid = x.compose(j, &y)?;
        differ += u64::from(f.eval(&x) != f.eval(&hybrid));
    }
    Ok(differ as f64 / samples as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub c_rounds: f64,
    pub k: usize,
    pub instance: String,
    /// Uniform-distribution distance to the nearest k-junta; 0 for juntas.
    pub certified_distance: f64,
    pub eps: f64,
    pub delta: f64,
    pub trials: u64,
    pub reject_rate: f64,
    pub mean_queries: f64,
    pub query_budget: u64,
    /// `1 - δ` for far instances, 0 (never reject) for juntas.
    pub target: f64,
    pub meets_target: bool,
}

/// The calibration panel at arity `k`: juntas that must always pass and
/// certified far instances that must be rejected.
pub fn calibration_panel(k: usize) -> Vec<(String, FunctionSpec)> {
    let m = k + 5;
    vec![
        (
            format!("parity{}", k + 1),
            FunctionSpec::Parity {
                n: m,
                coords: (1..=k + 1).collect(),
            },
        ),
        (
            "random_table8".into(),
            FunctionSpec::RandomTable {
                n: 8,
                seed: 1000 + k as u64,
            },
        ),
        (
            "tribes".into(),
            FunctionSpec::Tribes {
                n: 2 * (k + 1) + 2,
                width: 2,
                count: k + 1,
            },
        ),
        (
            format!("junta{k}"),
            FunctionSpec::RandomJunta { n: m, k, seed: 77 },
        ),
        (
            "constant".into(),
            FunctionSpec::Constant { n: m, value: true },
        ),
    ]
}

/// Runs the uniform-distribution junta tester over the calibration panel for
/// each candidate round multiplier.
pub fn calibrate_uj(
    c_values: &[f64],
    ks: &[usize],
    eps: f64,
    delta: f64,
    trials: u64,
    base_seed: u64,
) -> Result<Vec<CalibrationRow>> {
    let mut rows = Vec::new();
    for &c in c_values {
        for &k in ks {
            let params = UjParams::new(k, eps, delta, c)?;
            for (name, spec) in calibration_panel(k) {
                let f = spec.build()?;
                let distance =
                    distance_to_nearest_kjunta(&f, &Distribution::uniform(f.dim()), k)?.distance;
                if distance > 0.0 && distance < eps {
                    continue;
                }
                let results = (0..trials)
                    .into_par_iter()
                    .map(|trial| {
                        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(base_seed, trial));
                        let mut oracle = CountingOracle::new(&f);
                        uniform_junta_test(&mut oracle, &params, &mut rng)
                            .map(|o| (o.accept, oracle.count()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let rejects = results.iter().filter(|(a, _)| !a).count() as f64;
                let reject_rate = rejects / trials as f64;
                let target = if distance > 0.0 { 1.0 - delta } else { 0.0 };
                let meets_target = if distance > 0.0 {
                    reject_rate >= target
                } else {
                    rejects == 0.0
                };
                rows.push(CalibrationRow {
                    c_rounds: c,
                    k,
                    instance: name,
                    certified_distance: distance,
                    eps,
                    delta,
                    trials,
                    reject_rate,
                    mean_queries: results.iter().map(|(_, q)| *q as f64).sum::<f64>()
                        / trials as f64,
                    query_budget: params.query_budget(),
                    target,
                    meets_target,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(instances: Vec<InstanceConfig>, trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            k: 1,
            eps: 0.2,
            trials,
            base_seed: 17,
            parallelism: 2,
            c_rounds: DEFAULT_C_ROUNDS,
            slack_sigmas: DEFAULT_SLACK_SIGMAS,
            instances,
        }
    }

    fn instance(name: &str, function: FunctionSpec, n: usize) -> InstanceConfig {
        InstanceConfig {
            name: name.into(),
            function,
            distribution: DistributionSpec::Uniform { n },
            certify: false,
            k: None,
            eps: None,
            expect: None,
            partition: None,
        }
    }

    #[test]
    fn constant_instance_always_accepts() {
        let cfg = config(
            vec![instance(
                "zero",
                FunctionSpec::Constant {
                    n: 16,
                    value: false,
                },
                16,
            )],
            100,
        );
        let report = run_experiment(&cfg).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.accept_rate, 1.0);
        assert_eq!(row.accept_rate + row.reject_rate, 1.0);
        assert_eq!(row.budget_violations, 0);
        assert_eq!(row.records.len(), 100);
        assert_eq!(row.records[5].seed, 17 ^ 5);
    }

    #[test]
    fn instance_errors_are_reported_per_row() {
        let mut bad = instance(
            "bad",
            FunctionSpec::Parity {
                n: 4,
                coords: vec![9],
            },
            4,
        );
        bad.certify = true;
        let good = instance("good", FunctionSpec::Constant { n: 4, value: true }, 4);
        let report = run_experiment(&config(vec![bad, good], 10)).unwrap();
        assert!(report.rows[0].error.is_some());
        assert!(report.rows[1].error.is_none());
    }

    #[test]
    fn certificate_capacity_error_is_not_fatal() {
        let mut inst = instance(
            "wide",
            FunctionSpec::RandomJunta {
                n: 40,
                k: 1,
                seed: 0,
            },
            40,
        );
        inst.certify = true;
        let report = run_experiment(&config(vec![inst], 5)).unwrap();
        assert!(report.rows[0].certificate.is_none());
        assert!(report.rows[0].certificate_error.is_some());
        assert!(report.rows[0].error.is_none());
    }

    #[test]
    fn reports_replay_bit_exactly() {
        let mut far = instance(
            "parity",
            FunctionSpec::Parity {
                n: 6,
                coords: vec![1, 2],
            },
            6,
        );
        far.expect = Some(Expect::Reject);
        far.certify = true;
        let cfg = config(
            vec![
                far,
                instance(
                    "junta",
                    FunctionSpec::RandomJunta {
                        n: 30,
                        k: 1,
                        seed: 2,
                    },
                    30,
                ),
            ],
            40,
        );
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&ExperimentConfig {
            parallelism: 1,
            ..cfg.clone()
        })
        .unwrap();
        assert!(a.same_results(&b));
        let row = &a.rows[0];
        for rec in row.records.iter().take(5) {
            let t = replay_trial(&cfg, "parity", rec.trial).unwrap();
            assert_eq!(t.verdict.outcome, rec.outcome);
            assert_eq!(t.total_queries, rec.queries);
        }
        assert_eq!(row.certificate.as_ref().unwrap().distance, 0.5);
        assert_eq!(row.passed, Some(true));
        let csv = a.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("name,k,eps"));
    }

    #[test]
    fn config_parses_from_toml() {
        let text = r#"
k = 2
eps = 0.1
trials = 10
base_seed = 5

[[instances]]
name = "junta"
function = { kind = "random_junta", n = 64, k = 2, seed = 1 }
distribution = { kind = "random_support", n = 64, size = 20, seed = 3 }
expect = "accept"

[[instances]]
name = "separated"
function = { kind = "parity", n = 4, coords = [1, 3] }
distribution = { kind = "uniform", n = 4 }
partition = [[1, 2], [3, 4], [], [], [], [], [], []]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.c_rounds, DEFAULT_C_ROUNDS);
        assert_eq!(cfg.instances[0].expect, Some(Expect::Accept));
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows[1].accept_rate, 1.0);
        assert!(ExperimentConfig::from_toml(
            "k = 1\neps = 0.1\ntrials = 0\nbase_seed = 0\ninstances = []"
        )
        .is_err());
    }

    #[test]
    fn rate_floor_matches_three_sigma() {
        let t = rate_floor(2.0 / 3.0, 500, 3.0);
        assert!((t - 0.6034).abs() < 1e-3);
    }

    #[test]
    fn lemma4_estimates() {
        let f = FunctionSpec::Parity {
            n: 2,
            coords: vec![1, 2],
        }
        .build()
        .unwrap();
        let d = Distribution::uniform(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let full = IndexSet::full(2);
        assert_eq!(estimate_lemma4(&f, &d, &full, 1000, &mut rng).unwrap(), 0.0);
        let j = IndexSet::from_coords(2, &[1]).unwrap();
        let est = estimate_lemma4(&f, &d, &j, 100_000, &mut rng).unwrap();
        assert!((est - 0.5).abs() < 0.01, "{est}");
        assert!(estimate_lemma4(&f, &d, &j, 0, &mut rng).is_err());
    }

    #[test]
    fn small_sweep() {
        let table = sweep_budget(&SweepConfig {
            k_list: vec![1, 2],
            eps_list: vec![0.2],
            trials: 4,
            base_seed: 3,
            n: 32,
        })
        .unwrap();
        assert_eq!(table.cells.len(), 2);
        assert_eq!(table.total_violations(), 0);
        assert!(table.cells[1].budget >= table.cells[0].budget);
        assert!(table.to_csv().unwrap().lines().count() == 3);
    }
}
