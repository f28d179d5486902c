//! Functional depth measures.
//!
//! Three depths are provided, all defined directly on discretized curves:
//!
//! * [`fm_depth`] — mean over grid points of the univariate depth
//!   `1 - |1/2 - F(x(t))|`, where `F` is the empirical CDF of the reference
//!   values at `t`.
//! * [`rp_depth`] — mean over random directions of a univariate depth of
//!   the curve's projection, `min(F(r), 1 - F(r))`, with `F` the empirical
//!   CDF of the reference projections along the same direction.
//! * [`fd2_depth`] — mean over pairs of grid points of the exact bivariate
//!   halfspace depth of the curve's paired values with respect to the
//!   reference sample's paired values. Sensitive to shape and covariance
//!   structure, not just location.
//!
//! Empirical CDFs use the `<=` convention throughout: `F(x) = #{r <= x}/n`.
//! Evaluation curves that also belong to the reference sample are not
//! removed; depth is always computed against the reference exactly as given.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{FunctionalSample, Grid};
use crate::error::{Error, Result};
use crate::halfspace::{depth_with_scratch, HalfspaceScratch};
use crate::seed::{standard_normal, RngSeed};

/// Default number of random projections.
pub const DEFAULT_NUM_PROJECTIONS: usize = 50;

/// Cap on the number of grid-point pairs used by the automatic FD2 budget.
pub const FD2_AUTO_PAIR_CAP: usize = 2000;

/// Depth-method tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthMethod {
    #[serde(rename = "fm")]
    Fm,
    #[serde(rename = "rp")]
    Rp,
    #[serde(rename = "fd2")]
    Fd2,
}

impl DepthMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DepthMethod::Fm => "fm",
            DepthMethod::Rp => "rp",
            DepthMethod::Fd2 => "fd2",
        }
    }
}

impl std::fmt::Display for DepthMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-curve depth values of an evaluation set with respect to a reference
/// sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthVector {
    values: Vec<f64>,
    reference_size: usize,
    method: DepthMethod,
}

impl DepthVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reference_size(&self) -> usize {
        self.reference_size
    }

    pub fn method(&self) -> DepthMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Random-projection depth configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpConfig {
    pub num_projections: usize,
    pub direction_seed: RngSeed,
}

impl RpConfig {
    pub fn new(direction_seed: RngSeed) -> Self {
        RpConfig {
            num_projections: DEFAULT_NUM_PROJECTIONS,
            direction_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_projections == 0 {
            return Err(Error::InvalidArgument("num_projections must be >= 1".into()));
        }
        Ok(())
    }
}

/// Number of grid-point pairs averaged by FD2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairBudget {
    /// All pairs when their number is at most [`FD2_AUTO_PAIR_CAP`], else
    /// that many sampled pairs.
    #[default]
    Auto,
    /// Every unordered pair of distinct grid points.
    All,
    /// A fixed number of pairs sampled uniformly without replacement
    /// (clamped to all pairs when it exceeds their number).
    Count(usize),
}

/// FD2 depth configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fd2Config {
    pub pair_budget: PairBudget,
    pub pair_seed: RngSeed,
}

impl Fd2Config {
    pub fn new(pair_seed: RngSeed) -> Self {
        Fd2Config {
            pair_budget: PairBudget::Auto,
            pair_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if let PairBudget::Count(0) = self.pair_budget {
            return Err(Error::InvalidArgument("pair budget must be >= 1".into()));
        }
        Ok(())
    }
}

/// A depth method together with its configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DepthConfig {
    Fm,
    Rp(RpConfig),
    Fd2(Fd2Config),
}

impl DepthConfig {
    pub fn method(&self) -> DepthMethod {
        match self {
            DepthConfig::Fm => DepthMethod::Fm,
            DepthConfig::Rp(_) => DepthMethod::Rp,
            DepthConfig::Fd2(_) => DepthMethod::Fd2,
        }
    }

    /// Depth of every curve in `eval` with respect to `reference`.
    pub fn evaluate(
        &self,
        eval: &FunctionalSample,
        reference: &FunctionalSample,
    ) -> Result<DepthVector> {
        match self {
            DepthConfig::Fm => fm_depth(eval, reference),
            DepthConfig::Rp(cfg) => rp_depth(eval, reference, cfg),
            DepthConfig::Fd2(cfg) => fd2_depth(eval, reference, cfg),
        }
    }
}

fn require_shared_grid(a: &FunctionalSample, b: &FunctionalSample) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Univariate depth `1 - |1/2 - F(x0)|` with `F(x0) = #{r <= x0}/n` over a
/// nonempty reference set. Values lie in `[1/2, 1]`.
pub fn univariate_fm_depth(x0: f64, reference: &[f64]) -> f64 {
    assert!(!reference.is_empty(), "reference must be nonempty");
    let count = reference.iter().filter(|&&r| r <= x0).count();
    let f = count as f64 / reference.len() as f64;
    1.0 - (0.5 - f).abs()
}

/// Count of sorted values `<= x`.
#[inline]
fn count_le(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Per-column sorted copies of a sample's values. Shared by the FM path and
/// by the augmented-reference evaluations in the baseline test.
pub(crate) fn sorted_columns(sample: &FunctionalSample) -> Vec<Vec<f64>> {
    (0..sample.num_points())
        .map(|j| {
            let mut col = sample.column(j);
            col.sort_unstable_by(f64::total_cmp);
            col
        })
        .collect()
}

pub(crate) fn fm_depth_from_sorted_columns(curve: &[f64], columns: &[Vec<f64>], n: usize) -> f64 {
    let g = curve.len();
    let mut total = 0.0;
    for (j, &x) in curve.iter().enumerate() {
        let f = count_le(&columns[j], x) as f64 / n as f64;
        total += 1.0 - (0.5 - f).abs();
    }
    total / g as f64
}

/// Mean over grid points of [`univariate_fm_depth`] against the reference
/// values at each point.
pub fn fm_depth(eval: &FunctionalSample, reference: &FunctionalSample) -> Result<DepthVector> {
    require_shared_grid(eval, reference)?;
    let columns = sorted_columns(reference);
    let n = reference.len();
    let values: Vec<f64> = eval
        .curves()
        .map(|curve| fm_depth_from_sorted_columns(curve, &columns, n))
        .collect();
    Ok(DepthVector {
        values,
        reference_size: n,
        method: DepthMethod::Fm,
    })
}

/// Draw `num_projections` direction curves: independent standard normal
/// values at the grid points, normalized to unit norm under the trapezoid
/// inner product.
pub fn rp_directions(grid: &Grid, config: &RpConfig) -> Vec<Vec<f64>> {
    let weights = grid.trapezoid_weights();
    let g = grid.len();
    let mut rng = config.direction_seed.rng();
    (0..config.num_projections)
        .map(|_| {
            let mut v: Vec<f64> = (0..g).map(|_| standard_normal(&mut rng)).collect();
            let norm = v
                .iter()
                .zip(&weights)
                .map(|(vi, wi)| wi * vi * vi)
                .sum::<f64>()
                .sqrt();
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            v
        })
        .collect()
}

#[inline]
fn project(curve: &[f64], direction: &[f64], weights: &[f64]) -> f64 {
    curve
        .iter()
        .zip(direction)
        .zip(weights)
        .map(|((x, v), w)| w * v * x)
        .sum()
}

/// Random-projection depth with explicit directions. Exposed so callers can
/// hold the directions fixed across several evaluations.
pub fn rp_depth_with_directions(
    eval: &FunctionalSample,
    reference: &FunctionalSample,
    directions: &[Vec<f64>],
) -> Result<DepthVector> {
    require_shared_grid(eval, reference)?;
    if directions.is_empty() {
        return Err(Error::InvalidArgument("need at least one projection direction".into()));
    }
    let weights = eval.grid().trapezoid_weights();
    let n = reference.len();

    // reference projections, sorted once per direction
    let sorted_ref: Vec<Vec<f64>> = directions
        .iter()
        .map(|dir| {
            let mut proj: Vec<f64> = reference
                .curves()
                .map(|c| project(c, dir, &weights))
                .collect();
            proj.sort_unstable_by(f64::total_cmp);
            proj
        })
        .collect();

    let values: Vec<f64> = eval
        .curves()
        .map(|curve| {
            let mut total = 0.0;
            for (dir, sorted) in directions.iter().zip(&sorted_ref) {
                let r = project(curve, dir, &weights);
                let f = count_le(sorted, r) as f64 / n as f64;
                total += f.min(1.0 - f);
            }
            total / directions.len() as f64
        })
        .collect();

    Ok(DepthVector {
        values,
        reference_size: n,
        method: DepthMethod::Rp,
    })
}

/// Random-projection depth: directions are drawn from
/// `config.direction_seed`, so results are deterministic given the config.
pub fn rp_depth(
    eval: &FunctionalSample,
    reference: &FunctionalSample,
    config: &RpConfig,
) -> Result<DepthVector> {
    config.validate()?;
    let directions = rp_directions(eval.grid(), config);
    rp_depth_with_directions(eval, reference, &directions)
}

/// The grid-point pairs FD2 will average over, resolved from the budget.
/// Deterministic given `(grid size, config)`.
pub fn fd2_pairs(grid_len: usize, config: &Fd2Config) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..grid_len)
        .flat_map(|a| ((a + 1)..grid_len).map(move |b| (a, b)))
        .collect();
    let total = all.len();
    let take = match config.pair_budget {
        PairBudget::All => total,
        PairBudget::Auto => total.min(FD2_AUTO_PAIR_CAP),
        PairBudget::Count(c) => c.min(total), // clamped to all pairs
    };
    if take == total {
        return all;
    }
    // partial Fisher-Yates: uniform sample without replacement
    let mut pool = all;
    let mut rng = config.pair_seed.rng();
    for i in 0..take {
        let j = crate::seed::uniform_index(&mut rng, pool.len() - i) + i;
        pool.swap(i, j);
    }
    pool.truncate(take);
    pool
}

/// Second-order integrated depth: mean over unordered pairs of distinct
/// grid points of the exact bivariate halfspace depth of the curve's paired
/// values with respect to the reference sample's paired values.
pub fn fd2_depth(
    eval: &FunctionalSample,
    reference: &FunctionalSample,
    config: &Fd2Config,
) -> Result<DepthVector> {
    require_shared_grid(eval, reference)?;
    config.validate()?;
    let pairs = fd2_pairs(eval.grid().len(), config);
    let n = reference.len();

    // per-pair reference clouds, shared across evaluation curves
    let clouds: Vec<Vec<(f64, f64)>> = pairs
        .iter()
        .map(|&(a, b)| {
            (0..n)
                .map(|kk| (reference.value(kk, a), reference.value(kk, b)))
                .collect()
        })
        .collect();

    let rows: Vec<&[f64]> = eval.curves().collect();
    let values: Vec<f64> = rows
        .par_iter()
        .map_init(HalfspaceScratch::default, |scratch, curve| {
            let mut total = 0.0;
            for (&(a, b), cloud) in pairs.iter().zip(&clouds) {
                total += depth_with_scratch((curve[a], curve[b]), cloud, scratch);
            }
            total / pairs.len() as f64
        })
        .collect();

    Ok(DepthVector {
        values,
        reference_size: n,
        method: DepthMethod::Fd2,
    })
}
