//! Depth-versus-depth plots and the bootstrap-t homogeneity test.
//!
//! For two samples `F` (n curves) and `G` (m curves) on a shared grid, the
//! DD-plot pairs, for every curve `x` in the pooled sample, its depth with
//! respect to `F` against its depth with respect to `G`. When both samples
//! come from the same process the scatter concentrates on the unit
//! diagonal, so homogeneity is tested by fitting
//!
//! ```text
//! depth_F = beta0 + beta1 * depth_G + u
//! ```
//!
//! and checking `beta0 = 0` and `beta1 = 1` with studentized statistics.
//! Residuals are bounded (depths live in [0, 1]), so normal-theory t tests
//! do not apply; the null distribution of each statistic is estimated by
//! bootstrap instead, and the two p-values are combined with the
//! Holm-Bonferroni rule.
//!
//! Two bootstrap null schemes are provided:
//!
//! * [`NullScheme::Relabel`] (default) — the pooled sample is resampled
//!   and split into new reference samples of the original sizes, which
//!   imposes the null by construction; replicate statistics are centered
//!   at the hypothesized values. Every replicate recomputes all depths
//!   against the resampled references, which captures the full
//!   realization-to-realization variability of the depth functions.
//! * [`NullScheme::LiteralHStar`] — the reference samples stay fixed and
//!   only the evaluation set is resampled, which amounts to resampling the
//!   DD-plot points. Replicate statistics are centered at the observed
//!   estimates (the usual studentized-pivot construction; centering at the
//!   hypothesized values would make every p-value collapse to 1). Cheap,
//!   but it ignores the variability of the depth functions themselves and
//!   over-rejects under the null; it is kept as the documented literal
//!   reading of the resampling wording, not as the recommended test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::FunctionalSample;
use crate::depth::{DepthConfig, DepthMethod};
use crate::error::{Error, Result};
use crate::pooled_depth::PooledEngine;
use crate::seed::{uniform_index, RngSeed};

/// Minimum accepted bootstrap replicate count.
pub const MIN_NUM_BOOT: usize = 50;

/// Retry budget per replicate when a resample has a degenerate regressor.
const MAX_ATTEMPTS_PER_REPLICATE: usize = 10;

/// Paired depth coordinates `(depth wrt F, depth wrt G)` for every curve in
/// the pooled sample, F's curves first.
#[derive(Clone, Debug, PartialEq)]
pub struct DdPlot {
    points: Vec<(f64, f64)>,
    n: usize,
    m: usize,
    method: DepthMethod,
}

impl DdPlot {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Size of the first sample.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of the second sample.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn method(&self) -> DepthMethod {
        self.method
    }
}

/// Build the DD-plot of `f` and `g`: every pooled curve is evaluated
/// against both samples with the same depth configuration.
pub fn build_ddplot(
    f: &FunctionalSample,
    g: &FunctionalSample,
    depth: &DepthConfig,
) -> Result<DdPlot> {
    let pooled = f.pooled(g)?;
    let wrt_f = depth.evaluate(&pooled, f)?;
    let wrt_g = depth.evaluate(&pooled, g)?;
    let points: Vec<(f64, f64)> = wrt_f
        .values()
        .iter()
        .copied()
        .zip(wrt_g.values().iter().copied())
        .collect();
    Ok(DdPlot {
        points,
        n: f.len(),
        m: g.len(),
        method: depth.method(),
    })
}

/// Least-squares fit of the DD-plot line with textbook standard errors.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub beta0: f64,
    pub beta1: f64,
    pub se0: f64,
    pub se1: f64,
    pub residuals: Vec<f64>,
    /// True when the residual sum of squares is exactly zero; the standard
    /// errors are then zero and the t statistics undefined.
    pub degenerate: bool,
}

pub(crate) fn fit_ols_points(points: &[(f64, f64)]) -> Result<OlsFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "line fit needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    // regressor x = depth wrt G, response y = depth wrt F
    if points.iter().all(|p| p.1 == points[0].1) {
        return Err(Error::DegenerateRegressor);
    }
    let mean_x = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut sum_x_sq = 0.0;
    for &(y, x) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        sum_x_sq += x * x;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let beta1 = sxy / sxx;
    let beta0 = mean_y - beta1 * mean_x;
    let residuals: Vec<f64> = points.iter().map(|&(y, x)| y - beta0 - beta1 * x).collect();
    let ssr: f64 = residuals.iter().map(|u| u * u).sum();

    let var1 = ssr / ((nf - 2.0) * sxx);
    let var0 = var1 * sum_x_sq / nf;
    let (se0, se1) = (var0.sqrt(), var1.sqrt());
    let degenerate = ssr == 0.0 || !se0.is_finite() || !se1.is_finite();
    Ok(OlsFit {
        beta0,
        beta1,
        se0,
        se1,
        residuals,
        degenerate,
    })
}

/// Regress `depth_F` on `depth_G` by ordinary least squares.
///
/// Standard errors follow the usual simple-regression formulas:
/// `se(beta1)^2 = rss / ((N-2) * Sxx)` and
/// `se(beta0)^2 = se(beta1)^2 * sum(x^2) / N`.
pub fn fit_ols(dd: &DdPlot) -> Result<OlsFit> {
    fit_ols_points(dd.points())
}

/// The studentized statistics `(beta0 / se0, (beta1 - 1) / se1)`.
pub fn t_statistics(fit: &OlsFit) -> Result<(f64, f64)> {
    if fit.degenerate {
        return Err(Error::DegenerateFit);
    }
    Ok((fit.beta0 / fit.se0, (fit.beta1 - 1.0) / fit.se1))
}

/// How the bootstrap builds its replicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullScheme {
    /// Resample only the evaluation set; reference samples stay fixed.
    #[serde(rename = "literal-H*")]
    LiteralHStar,
    /// Resample the pooled sample and relabel it into two new samples of
    /// the original sizes.
    #[serde(rename = "relabel")]
    Relabel,
    /// Resample both samples independently from the pool (used by the
    /// baseline deepest-curve test, not by the DD-plot test).
    #[serde(rename = "pooled")]
    Pooled,
}

impl std::fmt::Display for NullScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NullScheme::LiteralHStar => "literal-H*",
            NullScheme::Relabel => "relabel",
            NullScheme::Pooled => "pooled",
        })
    }
}

/// Outcome of a homogeneity test.
///
/// For the DD-plot test `t0`/`t1` are the observed studentized statistics
/// and `p0`/`p1` their bootstrap p-values. For the baseline deepest-curve
/// test `t0` holds the observed statistic and `t1`/`p1` are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub t0: f64,
    pub t1: Option<f64>,
    pub p0: f64,
    pub p1: Option<f64>,
    pub p_adjusted: f64,
    pub reject: bool,
    pub alpha: f64,
    pub num_boot: usize,
    pub seed: u64,
    pub null_scheme: NullScheme,
}

impl TestResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("TestResult serializes")
    }
}

fn validate_test_args(alpha: f64, num_boot: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if num_boot < MIN_NUM_BOOT {
        return Err(Error::InvalidArgument(format!(
            "num_boot must be at least {MIN_NUM_BOOT}, got {num_boot}"
        )));
    }
    Ok(())
}

/// Holm-Bonferroni combination of two p-values at level `alpha`:
/// reject when the smaller is below `alpha/2` or the larger below `alpha`;
/// the adjusted p-value is `min(2 p_[1], p_[2])`.
fn holm_bonferroni(p0: f64, p1: f64, alpha: f64) -> (f64, bool) {
    let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
    let reject = lo < alpha / 2.0 || hi < alpha;
    ((2.0 * lo).min(hi), reject)
}

/// One replicate's contribution to the four tail counts.
struct TailCounts {
    gt0: u64,
    lt0: u64,
    gt1: u64,
    lt1: u64,
}

/// Bootstrap-t test of DD-plot diagonality.
///
/// Computes the observed statistics, draws `num_boot` resamples of the
/// pooled evaluation set under `scheme`, and estimates each p-value as
/// twice the smaller tail fraction (strict inequalities; ties count toward
/// neither tail). Deterministic given `(inputs, seed)`; replicates run in
/// parallel without affecting the result.
///
/// Identical samples produce an exactly diagonal DD-plot with zero
/// residuals; that degenerate fit short-circuits to `p_adjusted = 1`
/// (maximal evidence for homogeneity).
pub fn bootstrap_test(
    f: &FunctionalSample,
    g: &FunctionalSample,
    depth: &DepthConfig,
    alpha: f64,
    num_boot: usize,
    seed: RngSeed,
    scheme: NullScheme,
) -> Result<TestResult> {
    validate_test_args(alpha, num_boot)?;
    if scheme == NullScheme::Pooled {
        return Err(Error::InvalidArgument(
            "the pooled scheme belongs to the baseline test; use literal-H* or relabel".into(),
        ));
    }

    let dd = build_ddplot(f, g, depth)?;
    let fit = fit_ols(&dd)?;
    let base = TestResult {
        method: depth.method().as_str().to_string(),
        n: f.len(),
        m: g.len(),
        t0: 0.0,
        t1: Some(0.0),
        p0: 1.0,
        p1: Some(1.0),
        p_adjusted: 1.0,
        reject: false,
        alpha,
        num_boot,
        seed: seed.0,
        null_scheme: scheme,
    };
    if fit.degenerate {
        // perfect line, zero residuals: report certainty of homogeneity
        return Ok(base);
    }
    let (t0, t1) = t_statistics(&fit)?;

    let total = f.len() + g.len();
    let pooled = f.pooled(g)?;
    let points = dd.points();
    let n = f.len();

    // the relabel scheme recomputes every depth per replicate; all its
    // reference samples are multisets over the pooled curves, so the
    // order structure is precomputed once
    let engine = match scheme {
        NullScheme::Relabel => Some(PooledEngine::new(&pooled, depth)?),
        _ => None,
    };

    let counts: Result<Vec<TailCounts>> = (0..num_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.stream_rng(b as u64);
            let mut scratch_points: Vec<(f64, f64)> = Vec::new();
            for _ in 0..MAX_ATTEMPTS_PER_REPLICATE {
                let indices: Vec<usize> =
                    (0..total).map(|_| uniform_index(&mut rng, total)).collect();
                let replicate = match scheme {
                    NullScheme::LiteralHStar => {
                        // reference samples fixed: the replicate DD points
                        // are the observed points at the resampled indices
                        let pts: Vec<(f64, f64)> =
                            indices.iter().map(|&i| points[i]).collect();
                        fit_ols_points(&pts).map(|rfit| {
                            // center at the observed estimates: the pivot
                            // approximates the sampling distribution of the
                            // studentized estimator
                            (
                                (rfit.beta0 - fit.beta0) / rfit.se0,
                                (rfit.beta1 - fit.beta1) / rfit.se1,
                            )
                        })
                    }
                    NullScheme::Relabel => {
                        let engine = engine.as_ref().expect("engine built for relabel");
                        let mut counts_f = vec![0u32; total];
                        let mut counts_g = vec![0u32; total];
                        let mut present = vec![false; total];
                        for &i in &indices[..n] {
                            counts_f[i] += 1;
                            present[i] = true;
                        }
                        for &i in &indices[n..] {
                            counts_g[i] += 1;
                            present[i] = true;
                        }
                        let side_f = engine.prepare(&counts_f, n as u32);
                        let side_g = engine.prepare(&counts_g, (total - n) as u32);
                        engine.dd_points(&side_f, &side_g, &present, &mut scratch_points);
                        let pts: Vec<(f64, f64)> =
                            indices.iter().map(|&i| scratch_points[i]).collect();
                        fit_ols_points(&pts).map(|rfit| {
                            // the relabeled resample obeys the null, so
                            // center at the hypothesized values
                            (rfit.beta0 / rfit.se0, (rfit.beta1 - 1.0) / rfit.se1)
                        })
                    }
                    NullScheme::Pooled => unreachable!(),
                };
                match replicate {
                    Ok((r0, r1)) => {
                        return Ok(TailCounts {
                            gt0: u64::from(r0 > t0),
                            lt0: u64::from(r0 < t0),
                            gt1: u64::from(r1 > t1),
                            lt1: u64::from(r1 < t1),
                        });
                    }
                    Err(Error::DegenerateRegressor) => continue, // redraw
                    Err(e) => return Err(e),
                }
            }
            Err(Error::InsufficientVariation {
                needed: num_boot,
                attempts: MAX_ATTEMPTS_PER_REPLICATE * num_boot,
            })
        })
        .collect();
    let counts = counts?;

    let bf = num_boot as f64;
    let (mut gt0, mut lt0, mut gt1, mut lt1) = (0u64, 0u64, 0u64, 0u64);
    for c in &counts {
        gt0 += c.gt0;
        lt0 += c.lt0;
        gt1 += c.gt1;
        lt1 += c.lt1;
    }
    let p0 = 2.0 * (gt0.min(lt0) as f64) / bf;
    let p1 = 2.0 * (gt1.min(lt1) as f64) / bf;
    let (p_adjusted, reject) = holm_bonferroni(p0, p1, alpha);

    Ok(TestResult {
        t0,
        t1: Some(t1),
        p0,
        p1: Some(p1),
        p_adjusted,
        reject,
        ..base
    })
}
