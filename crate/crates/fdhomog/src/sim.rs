//! Monte-Carlo power and size experiments.
//!
//! An experiment repeatedly simulates a sample from each of two models,
//! runs the configured homogeneity tests on the pair, and tallies
//! rejections. When both models coincide the rejection rate estimates the
//! empirical size of each test; otherwise it estimates power. Parameter
//! sweeps re-run the same protocol while varying the mean shift or the
//! covariance amplitude.
//!
//! Per-replication seeds are derived from the master seed by a counter
//! construction, so all tests within a replication see identical data
//! (paired comparisons) and tables are bit-reproducible regardless of the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{make_grid, simulate_sample, FunctionalSample, MeanFunction, ModelSpec};
use crate::ddplot::{bootstrap_test, NullScheme, TestResult};
use crate::depth::{DepthConfig, Fd2Config, RpConfig, DEFAULT_NUM_PROJECTIONS};
use crate::error::{Error, Result};
use crate::flores::flores_test;
use crate::seed::RngSeed;

/// Default sample size per group.
pub const DEFAULT_N_PER_SAMPLE: usize = 50;
/// Default grid resolution on [0, 1].
pub const DEFAULT_GRID_SIZE: usize = 30;
/// Default bootstrap replicate count for a single test invocation.
pub const DEFAULT_NUM_BOOT: usize = 500;

// seed-derivation tags
const TAG_SAMPLE_A: u64 = 0;
const TAG_SAMPLE_B: u64 = 1;
const TAG_TEST_BASE: u64 = 2;
const TAG_RP_DIRECTIONS: u64 = 101;
const TAG_FD2_PAIRS: u64 = 102;

/// The six built-in models: two mean shapes, mean shifts of 0, 1, or 0.5,
/// and two exponential-covariance parameterizations.
pub fn builtin_model(id: u8) -> Result<ModelSpec> {
    let spec = match id {
        0 => ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.0,
            amp: 0.3,
            rate: 3.33,
        },
        1 => ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 1.0,
            amp: 0.3,
            rate: 3.33,
        },
        2 => ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.5,
            amp: 0.3,
            rate: 3.33,
        },
        3 => ModelSpec {
            mean: MeanFunction::Peak12,
            delta: 0.0,
            amp: 0.3,
            rate: 3.33,
        },
        4 => ModelSpec {
            mean: MeanFunction::Peak12,
            delta: 0.0,
            amp: 0.5,
            rate: 5.0,
        },
        5 => ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.0,
            amp: 0.5,
            rate: 5.0,
        },
        other => return Err(Error::UnknownModel(other)),
    };
    Ok(spec)
}

/// Which homogeneity test to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    #[serde(rename = "dd-fm")]
    DdFm,
    #[serde(rename = "dd-rp")]
    DdRp,
    #[serde(rename = "dd-fd2")]
    DdFd2,
    #[serde(rename = "flores")]
    Flores,
}

impl TestMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TestMethod::DdFm => "dd-fm",
            TestMethod::DdRp => "dd-rp",
            TestMethod::DdFd2 => "dd-fd2",
            TestMethod::Flores => "flores",
        }
    }
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_num_boot() -> usize {
    DEFAULT_NUM_BOOT
}

fn default_alpha() -> f64 {
    0.05
}

fn default_null_scheme() -> NullScheme {
    NullScheme::Relabel
}

/// One test to run inside an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: TestMethod,
    #[serde(default = "default_num_boot")]
    pub num_boot: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_null_scheme")]
    pub null_scheme: NullScheme,
}

impl TestConfig {
    pub fn new(method: TestMethod) -> Self {
        TestConfig {
            method,
            num_boot: DEFAULT_NUM_BOOT,
            alpha: 0.05,
            null_scheme: NullScheme::Relabel,
        }
    }
}

/// Run one configured test on a simulated pair, with all internal seeds
/// derived from `test_seed`.
pub fn run_single_test(
    config: &TestConfig,
    a: &FunctionalSample,
    b: &FunctionalSample,
    test_seed: RngSeed,
) -> Result<TestResult> {
    match config.method {
        TestMethod::DdFm => bootstrap_test(
            a,
            b,
            &DepthConfig::Fm,
            config.alpha,
            config.num_boot,
            test_seed,
            config.null_scheme,
        ),
        TestMethod::DdRp => bootstrap_test(
            a,
            b,
            &DepthConfig::Rp(RpConfig {
                num_projections: DEFAULT_NUM_PROJECTIONS,
                direction_seed: test_seed.derive(TAG_RP_DIRECTIONS),
            }),
            config.alpha,
            config.num_boot,
            test_seed,
            config.null_scheme,
        ),
        TestMethod::DdFd2 => bootstrap_test(
            a,
            b,
            &DepthConfig::Fd2(Fd2Config::new(test_seed.derive(TAG_FD2_PAIRS))),
            config.alpha,
            config.num_boot,
            test_seed,
            config.null_scheme,
        ),
        // the baseline runs on FM depth, its strongest configuration
        TestMethod::Flores => flores_test(
            a,
            b,
            &DepthConfig::Fm,
            config.alpha,
            config.num_boot,
            test_seed,
        ),
    }
}

/// Protocol shared by every experiment in a sweep: everything but the two
/// models under comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    #[serde(default = "default_n_per_sample")]
    pub n_per_sample: usize,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    pub replications: usize,
    pub tests: Vec<TestConfig>,
    pub master_seed: RngSeed,
}

fn default_n_per_sample() -> usize {
    DEFAULT_N_PER_SAMPLE
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_sample < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_per_sample must be >= 2, got {}",
                self.n_per_sample
            )));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid_size must be >= 2, got {}",
                self.grid_size
            )));
        }
        if self.replications < 1 {
            return Err(Error::InvalidSpec(format!(
                "replications must be >= 1, got {}",
                self.replications
            )));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidSpec("tests must not be empty".into()));
        }
        for (i, t) in self.tests.iter().enumerate() {
            if !(t.alpha > 0.0 && t.alpha < 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "tests[{i}].alpha must be in (0, 1), got {}",
                    t.alpha
                )));
            }
            if t.num_boot < crate::ddplot::MIN_NUM_BOOT {
                return Err(Error::InvalidSpec(format!(
                    "tests[{i}].num_boot must be >= {}, got {}",
                    crate::ddplot::MIN_NUM_BOOT,
                    t.num_boot
                )));
            }
        }
        Ok(())
    }
}

/// A fully specified pairwise experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Row label for the model pair, e.g. `0v1` or `delta=0.2`.
    pub label: String,
    pub model_a: ModelSpec,
    pub model_b: ModelSpec,
    #[serde(flatten)]
    pub protocol: Protocol,
}

/// One `(model pair, test)` cell of a power table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub pair: String,
    pub test: TestMethod,
    /// Replications attempted.
    pub attempted: usize,
    /// Replications that completed without error.
    pub replications: usize,
    pub rejections: usize,
    /// `rejections / replications`: empirical size when the two models
    /// coincide, empirical power otherwise.
    pub rate: f64,
    pub mean_p_adjusted: f64,
    /// True when the two models of the pair are identical.
    pub homogeneous: bool,
}

/// Rows for every `(pair, test)` cell produced by one or more experiments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn extend(&mut self, other: PowerTable) {
        self.rows.extend(other.rows);
    }

    /// Fixed-schema CSV: `pair,test,replications,rejections,rate,mean_p_adjusted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,test,replications,rejections,rate,mean_p_adjusted\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.pair, r.test, r.replications, r.rejections, r.rate, r.mean_p_adjusted
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("PowerTable serializes")
    }

    /// Aggregate sizes over homogeneous rows and powers over heterogeneous
    /// rows, per test.
    pub fn summary(&self) -> PowerSummary {
        let mut tests: Vec<TestMethod> = Vec::new();
        for r in &self.rows {
            if !tests.contains(&r.test) {
                tests.push(r.test);
            }
        }
        let entries = tests
            .into_iter()
            .map(|test| {
                let sizes: Vec<&PowerRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.test == test && r.homogeneous)
                    .collect();
                let powers: Vec<&PowerRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.test == test && !r.homogeneous)
                    .collect();
                let mean = |rows: &[&PowerRow]| {
                    rows.iter().map(|r| r.rate).sum::<f64>() / rows.len() as f64
                };
                let (minimum_power, minimum_power_pair) = powers
                    .iter()
                    .min_by(|a, b| a.rate.total_cmp(&b.rate))
                    .map(|r| (Some(r.rate), Some(r.pair.clone())))
                    .unwrap_or((None, None));
                TestSummary {
                    test,
                    average_size: (!sizes.is_empty()).then(|| mean(&sizes)),
                    maximum_size: sizes
                        .iter()
                        .map(|r| r.rate)
                        .max_by(f64::total_cmp),
                    average_power: (!powers.is_empty()).then(|| mean(&powers)),
                    minimum_power,
                    minimum_power_pair,
                }
            })
            .collect();
        PowerSummary { tests: entries }
    }
}

/// Table-style aggregation of an experiment suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test: TestMethod,
    pub average_size: Option<f64>,
    pub maximum_size: Option<f64>,
    pub average_power: Option<f64>,
    pub minimum_power: Option<f64>,
    pub minimum_power_pair: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub tests: Vec<TestSummary>,
}

impl PowerSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("PowerSummary serializes")
    }
}

/// Run one pairwise experiment.
///
/// Replication `r` simulates sample A from `model_a` with seed
/// `(master, r, 0)` and sample B from `model_b` with seed `(master, r, 1)`,
/// then runs every configured test with seed `(master, r, 2 + i)`. A
/// failing replication is dropped with a diagnostic on stderr; the table
/// tracks attempted versus completed counts. Bit-reproducible from the
/// spec, in parallel or not.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<PowerTable> {
    spec.protocol.validate()?;
    spec.model_a.validate()?;
    spec.model_b.validate()?;
    let proto = &spec.protocol;
    let grid = make_grid(0.0, 1.0, proto.grid_size)?;
    let n = proto.n_per_sample;
    let homogeneous = spec.model_a == spec.model_b;

    // (reject, p_adjusted) per test, or None when the replication failed
    let outcomes: Vec<Option<Vec<(bool, f64)>>> = (0..proto.replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = proto.master_seed.derive(r as u64);
            let run = || -> Result<Vec<(bool, f64)>> {
                let a = simulate_sample(&spec.model_a, n, &grid, rep_seed.derive(TAG_SAMPLE_A))?;
                let b = simulate_sample(&spec.model_b, n, &grid, rep_seed.derive(TAG_SAMPLE_B))?;
                proto
                    .tests
                    .iter()
                    .enumerate()
                    .map(|(i, tc)| {
                        let res =
                            run_single_test(tc, &a, &b, rep_seed.derive(TAG_TEST_BASE + i as u64))?;
                        Ok((res.reject, res.p_adjusted))
                    })
                    .collect()
            };
            match run() {
                Ok(v) => Some(v),
                Err(e) => {
                    eprintln!(
                        "experiment {}: replication {r} aborted: {e}",
                        spec.label
                    );
                    None
                }
            }
        })
        .collect();

    let completed = outcomes.iter().flatten().count();
    let rows = proto
        .tests
        .iter()
        .enumerate()
        .map(|(i, tc)| {
            let mut rejections = 0usize;
            let mut p_sum = 0.0;
            for outcome in outcomes.iter().flatten() {
                let (reject, p) = outcome[i];
                rejections += usize::from(reject);
                p_sum += p;
            }
            let rate = if completed > 0 {
                rejections as f64 / completed as f64
            } else {
                0.0
            };
            let mean_p_adjusted = if completed > 0 {
                p_sum / completed as f64
            } else {
                0.0
            };
            PowerRow {
                pair: spec.label.clone(),
                test: tc.method,
                attempted: proto.replications,
                replications: completed,
                rejections,
                rate,
                mean_p_adjusted,
                homogeneous,
            }
        })
        .collect();
    Ok(PowerTable { rows })
}

/// Power as the mean shift grows: one experiment per value of `deltas`,
/// comparing `base` at shift zero against `base` shifted by that value.
pub fn delta_sweep(base: &ModelSpec, deltas: &[f64], protocol: &Protocol) -> Result<PowerTable> {
    if deltas.is_empty() {
        return Err(Error::InvalidSpec("deltas must not be empty".into()));
    }
    let mut table = PowerTable::default();
    for &delta in deltas {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "delta values must be finite and >= 0, got {delta}"
            )));
        }
        let spec = ExperimentSpec {
            label: format!("delta={delta}"),
            model_a: ModelSpec {
                delta: 0.0,
                ..*base
            },
            model_b: ModelSpec { delta, ..*base },
            protocol: protocol.clone(),
        };
        table.extend(run_experiment(&spec)?);
    }
    Ok(table)
}

/// Power as the covariance amplitude ratio changes: one experiment per
/// value of `m_values`, comparing amplitude `base_k` against `base_k * m`
/// with all other parameters fixed. `m = 1` is the homogeneous control.
pub fn m_sweep(base_k: f64, m_values: &[f64], protocol: &Protocol) -> Result<PowerTable> {
    if m_values.is_empty() {
        return Err(Error::InvalidSpec("m_values must not be empty".into()));
    }
    if !(base_k > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "base_k must be > 0, got {base_k}"
        )));
    }
    let base = ModelSpec {
        mean: MeanFunction::Peak32,
        delta: 0.0,
        amp: base_k,
        rate: 3.33,
    };
    let mut table = PowerTable::default();
    for &m in m_values {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "m values must be finite and > 0, got {m}"
            )));
        }
        let spec = ExperimentSpec {
            label: format!("m={m}"),
            model_a: base,
            model_b: ModelSpec {
                amp: base_k * m,
                ..base
            },
            protocol: protocol.clone(),
        };
        table.extend(run_experiment(&spec)?);
    }
    Ok(table)
}

/// File-level schema for a batch of builtin-model pairs sharing one
/// protocol. This is what the `experiment` CLI subcommand consumes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSuite {
    /// Builtin model id pairs, e.g. `[[0, 0], [0, 1], [3, 4]]`.
    pub pairs: Vec<(u8, u8)>,
    #[serde(flatten)]
    pub protocol: Protocol,
}

impl ExperimentSuite {
    pub fn from_json(text: &str) -> Result<Self> {
        let suite: ExperimentSuite =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::InvalidSpec("pairs must not be empty".into()));
        }
        for &(a, b) in &self.pairs {
            builtin_model(a)?;
            builtin_model(b)?;
        }
        self.protocol.validate()
    }

    /// Run every pair with the shared protocol and concatenate the rows.
    /// Every pair reuses the same master seed, so a pair's rows depend only
    /// on the models compared, never on its position in the list.
    pub fn run(&self) -> Result<PowerTable> {
        self.validate()?;
        let mut table = PowerTable::default();
        for &(a, b) in &self.pairs {
            let spec = ExperimentSpec {
                label: format!("{a}v{b}"),
                model_a: builtin_model(a)?,
                model_b: builtin_model(b)?,
                protocol: self.protocol.clone(),
            };
            table.extend(run_experiment(&spec)?);
        }
        Ok(table)
    }
}
