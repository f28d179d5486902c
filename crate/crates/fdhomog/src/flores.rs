//! Baseline homogeneity test built on the deepest curves of each sample.
//!
//! For samples `F` and `G`, write `d_F(g)` for the depth of a curve `g`
//! within the augmented sample `F ∪ {g}`, and `D_F(G)` for the curve of `G`
//! maximizing `d_F`. Four statistics compare the most representative
//! curves across samples:
//!
//! ```text
//! P1(F, G) = d_F(D_G(G))
//! P2(F, G) = P1(F, F) - P1(F, G)
//! P3(F, G) = d_F(D_F(G))
//! P4(F, G) = |P3(F, G) - P1(F, F)| * |P3(F, G) - P1(G, G)|
//! ```
//!
//! `P4` with FM depth is the statistic used by [`flores_test`]: large
//! observed values indicate heterogeneity, and the null distribution is
//! built by resampling both samples, at their original sizes, from the
//! pooled sample.

use rayon::prelude::*;

use crate::curves::FunctionalSample;
use crate::ddplot::{NullScheme, TestResult};
use crate::depth::{sorted_columns, DepthConfig};
use crate::error::{Error, Result};
use crate::pooled_depth::PooledEngine;
use crate::seed::{uniform_index, RngSeed};

/// The four statistics plus the argmax indices they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct FloresStats {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    /// Index in `G` of the deepest curve of `G` within `G`.
    pub deepest_in_g: usize,
    /// Index in `G` of the curve of `G` deepest within `F`.
    pub deepest_of_g_in_f: usize,
}

/// Depth of a single curve within the sample formed by appending it to `f`.
/// A curve already present in `f` is simply duplicated; no special casing.
pub fn depth_in_augmented(
    g_curve: &[f64],
    f: &FunctionalSample,
    depth: &DepthConfig,
) -> Result<f64> {
    let augmented = f.with_appended(g_curve)?;
    let eval = FunctionalSample::new(f.grid().clone(), vec![g_curve.to_vec()])?;
    let d = depth.evaluate(&eval, &augmented)?;
    Ok(d.values()[0])
}

/// `d_F(g)` for every curve of `g_sample`, with the generic depth dispatch.
fn augmented_depths(
    g_sample: &FunctionalSample,
    f: &FunctionalSample,
    depth: &DepthConfig,
) -> Result<Vec<f64>> {
    if g_sample.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    g_sample
        .curves()
        .map(|c| depth_in_augmented(c, f, depth))
        .collect()
}

/// Fast path for FM depth: the augmented empirical CDF at `x` is the
/// reference count plus the curve's own contribution, over `n + 1`.
fn augmented_fm_depths(g_sample: &FunctionalSample, f: &FunctionalSample) -> Result<Vec<f64>> {
    if g_sample.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    let columns = sorted_columns(f);
    let n1 = f.len() as f64 + 1.0;
    let g_points = f.num_points() as f64;
    Ok(g_sample
        .curves()
        .map(|curve| {
            let mut total = 0.0;
            for (j, &x) in curve.iter().enumerate() {
                let count = columns[j].partition_point(|&v| v <= x) + 1; // + itself
                let fhat = count as f64 / n1;
                total += 1.0 - (0.5 - fhat).abs();
            }
            total / g_points
        })
        .collect())
}

fn depths_of_in(
    g_sample: &FunctionalSample,
    f: &FunctionalSample,
    depth: &DepthConfig,
) -> Result<Vec<f64>> {
    match depth {
        DepthConfig::Fm => augmented_fm_depths(g_sample, f),
        _ => augmented_depths(g_sample, f, depth),
    }
}

/// Argmax with ties broken by the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Compute the four deepest-curve statistics of `f` versus `g`.
pub fn flores_statistics(
    f: &FunctionalSample,
    g: &FunctionalSample,
    depth: &DepthConfig,
) -> Result<FloresStats> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let d_g_of_g = depths_of_in(g, g, depth)?; // d_G(g) for g in G
    let d_f_of_g = depths_of_in(g, f, depth)?; // d_F(g) for g in G
    let d_f_of_f = depths_of_in(f, f, depth)?; // d_F(f) for f in F

    let deepest_in_g = argmax(&d_g_of_g);
    let deepest_of_g_in_f = argmax(&d_f_of_g);

    let p1_ff = d_f_of_f[argmax(&d_f_of_f)]; // P1(F, F)
    let p1_gg = d_g_of_g[deepest_in_g]; // P1(G, G)
    let p1 = d_f_of_g[deepest_in_g]; // P1(F, G) = d_F(D_G(G))
    let p3 = d_f_of_g[deepest_of_g_in_f]; // P3(F, G) = d_F(D_F(G))
    let p2 = p1_ff - p1;
    let p4 = (p3 - p1_ff).abs() * (p3 - p1_gg).abs();

    Ok(FloresStats {
        p1,
        p2,
        p3,
        p4,
        deepest_in_g,
        deepest_of_g_in_f,
    })
}

/// Bootstrap homogeneity test on the `P4` statistic.
///
/// The null distribution is built by drawing both replicate samples, at
/// the original sizes, with replacement from the pooled sample; the
/// p-value is the fraction of replicate statistics at least as large as
/// the observed one (large `P4` indicates heterogeneity). Deterministic
/// given `(inputs, seed)`.
pub fn flores_test(
    f: &FunctionalSample,
    g: &FunctionalSample,
    depth: &DepthConfig,
    alpha: f64,
    num_boot: usize,
    seed: RngSeed,
) -> Result<TestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if num_boot < crate::ddplot::MIN_NUM_BOOT {
        return Err(Error::InvalidArgument(format!(
            "num_boot must be at least {}, got {num_boot}",
            crate::ddplot::MIN_NUM_BOOT
        )));
    }

    let observed = flores_statistics(f, g, depth)?.p4;
    let pooled = f.pooled(g)?;
    let total = pooled.len();
    let (n, m) = (f.len(), g.len());

    // every replicate sample is a multiset over the pooled curves; the
    // engine precomputes the shared order structure once
    let engine = PooledEngine::new(&pooled, depth)?;

    let hits: Vec<u64> = (0..num_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.stream_rng(b as u64);
            let mut scratch: Vec<u32> = Vec::new();
            let draw = |rng: &mut rand_chacha::ChaCha8Rng, count: usize| -> Vec<u32> {
                let mut counts = vec![0u32; total];
                for _ in 0..count {
                    counts[uniform_index(rng, total)] += 1;
                }
                counts
            };
            let counts_f = draw(&mut rng, n);
            let counts_g = draw(&mut rng, m);
            let s = p4_from_counts(&engine, &counts_f, &counts_g, n as u32, m as u32, &mut scratch);
            u64::from(s >= observed)
        })
        .collect();
    let p = hits.iter().sum::<u64>() as f64 / num_boot as f64;

    Ok(TestResult {
        method: "flores".to_string(),
        n,
        m,
        t0: observed,
        t1: None,
        p0: p,
        p1: None,
        p_adjusted: p,
        reject: p < alpha,
        alpha,
        num_boot,
        seed: seed.0,
        null_scheme: NullScheme::Pooled,
    })
}

/// `P4` of a resampled pair given as multiset counts over the pooled
/// curves. Only the three maximal depths matter, so argmax tie-breaking
/// never affects the value.
fn p4_from_counts(
    engine: &PooledEngine,
    counts_f: &[u32],
    counts_g: &[u32],
    n: u32,
    m: u32,
    scratch: &mut Vec<u32>,
) -> f64 {
    let side_f = engine.prepare(counts_f, n);
    let side_g = engine.prepare(counts_g, m);
    let mut max_over = |present: &[u32], side: &crate::pooled_depth::PreparedSide| -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (q, &c) in present.iter().enumerate() {
            if c > 0 {
                let d = engine.depth_augmented(q, side, scratch);
                if d > best {
                    best = d;
                }
            }
        }
        best
    };
    let p1_ff = max_over(counts_f, &side_f);
    let p1_gg = max_over(counts_g, &side_g);
    let p3 = max_over(counts_g, &side_f);
    (p3 - p1_ff).abs() * (p3 - p1_gg).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{make_grid, simulate_sample, MeanFunction, ModelSpec};
    use crate::depth::{Fd2Config, RpConfig};

    fn model0() -> ModelSpec {
        ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.0,
            amp: 0.3,
            rate: 3.33,
        }
    }

    fn constant_sample(levels: &[f64], grid_len: usize) -> FunctionalSample {
        let grid = make_grid(0.0, 1.0, grid_len).unwrap();
        let rows: Vec<Vec<f64>> = levels.iter().map(|&v| vec![v; grid_len]).collect();
        FunctionalSample::new(grid, rows).unwrap()
    }

    #[test]
    fn augmented_depth_hand_case() {
        // f = two constant curves {1, 3}; g = constant 2:
        // FM depth of 2 within {1, 2, 3} is 5/6 at every grid point
        let f = constant_sample(&[1.0, 3.0], 6);
        let g = vec![2.0; 6];
        let d = depth_in_augmented(&g, &f, &DepthConfig::Fm).unwrap();
        assert!((d - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn augmented_depth_far_outside_envelope() {
        let grid = make_grid(0.0, 1.0, 8).unwrap();
        let f = simulate_sample(&model0(), 10, &grid, RngSeed(1)).unwrap();
        let g = vec![1e6; 8];
        let d = depth_in_augmented(&g, &f, &DepthConfig::Fm).unwrap();
        // FM of the topmost curve: the augmented CDF is 1 everywhere
        assert_eq!(d, 0.5);
    }

    #[test]
    fn augmented_depth_duplicate_curve_is_well_defined() {
        let f = constant_sample(&[1.0, 2.0, 3.0], 5);
        let dup = f.curve(1).to_vec();
        let d = depth_in_augmented(&dup, &f, &DepthConfig::Fm).unwrap();
        // within {1, 2, 2, 3}: F(2) = 3/4, depth 1 - |1/2 - 3/4| = 3/4
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn fm_fast_path_matches_generic_dispatch() {
        let grid = make_grid(0.0, 1.0, 9).unwrap();
        let f = simulate_sample(&model0(), 12, &grid, RngSeed(2)).unwrap();
        let g = simulate_sample(&model0(), 7, &grid, RngSeed(3)).unwrap();
        let fast = augmented_fm_depths(&g, &f).unwrap();
        let slow = augmented_depths(&g, &f, &DepthConfig::Fm).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_samples_zero_p2_and_p4() {
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let f = simulate_sample(&model0(), 15, &grid, RngSeed(4)).unwrap();
        for depth in [
            DepthConfig::Fm,
            DepthConfig::Rp(RpConfig::new(RngSeed(5))),
            DepthConfig::Fd2(Fd2Config::new(RngSeed(6))),
        ] {
            let s = flores_statistics(&f, &f, &depth).unwrap();
            assert_eq!(s.p2, 0.0, "{depth:?}");
            assert_eq!(s.p4, 0.0, "{depth:?}");
        }
    }

    #[test]
    fn statistics_verified_by_exhaustive_hand_enumeration() {
        // constant curves make every augmented FM depth a closed-form count
        let f = constant_sample(&[0.0, 1.0, 2.0], 4);
        let g = constant_sample(&[3.0, 4.0, 5.0], 4);
        let s = flores_statistics(&f, &g, &DepthConfig::Fm).unwrap();

        // d_G(g) within {3,4,5} + g: augmented CDFs 2/4, 3/4, 4/4 give
        // depths 1, 3/4, 1/2 -> deepest is level 3 (index 0)
        assert_eq!(s.deepest_in_g, 0);
        // d_F(g) within {0,1,2} + g: every curve of G lies above all of F,
        // so all three depths tie at 1/2 and the lowest index wins
        assert_eq!(s.deepest_of_g_in_f, 0);
        // P1(F,G) = d_F(level 3) = 1/2; P3 is the tied maximum 1/2
        assert!((s.p1 - 0.5).abs() < 1e-15);
        assert!((s.p3 - 0.5).abs() < 1e-15);
        // d_F(f) over F peaks at level 0 with depth 1, so P1(F,F) = 1
        assert!((s.p2 - 0.5).abs() < 1e-15);
        // P1(G,G) = 1 as well: P4 = |1/2 - 1| * |1/2 - 1| = 1/4
        assert!((s.p4 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn permuting_f_rows_leaves_statistics_unchanged() {
        let grid = make_grid(0.0, 1.0, 8).unwrap();
        let f = simulate_sample(&model0(), 10, &grid, RngSeed(7)).unwrap();
        let g = simulate_sample(&model0(), 9, &grid, RngSeed(8)).unwrap();
        let mut rows: Vec<Vec<f64>> = f.curves().map(|c| c.to_vec()).collect();
        rows.reverse();
        rows.swap(1, 6);
        let f_perm = FunctionalSample::new(grid, rows).unwrap();
        let a = flores_statistics(&f, &g, &DepthConfig::Fm).unwrap();
        let b = flores_statistics(&f_perm, &g, &DepthConfig::Fm).unwrap();
        assert_eq!(a.p1, b.p1);
        assert_eq!(a.p2, b.p2);
        assert_eq!(a.p3, b.p3);
        assert_eq!(a.p4, b.p4);
    }

    #[test]
    fn identical_samples_never_reject() {
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let f = simulate_sample(&model0(), 12, &grid, RngSeed(9)).unwrap();
        let res = flores_test(&f, &f, &DepthConfig::Fm, 0.05, 60, RngSeed(10)).unwrap();
        assert_eq!(res.t0, 0.0);
        assert_eq!(res.p0, 1.0);
        assert!(!res.reject);
        assert_eq!(res.t1, None);
        assert_eq!(res.p1, None);
        assert_eq!(res.null_scheme, NullScheme::Pooled);
    }

    #[test]
    fn flores_test_is_reproducible() {
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let f = simulate_sample(&model0(), 10, &grid, RngSeed(11)).unwrap();
        let g = simulate_sample(&model0(), 12, &grid, RngSeed(12)).unwrap();
        let a = flores_test(&f, &g, &DepthConfig::Fm, 0.05, 80, RngSeed(13)).unwrap();
        let b = flores_test(&f, &g, &DepthConfig::Fm, 0.05, 80, RngSeed(13)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_statistic_matches_materialized_resamples() {
        let grid = make_grid(0.0, 1.0, 8).unwrap();
        let pooled = simulate_sample(&model0(), 12, &grid, RngSeed(40)).unwrap();
        let mut rng = RngSeed(41).rng();
        for depth in [
            DepthConfig::Fm,
            DepthConfig::Rp(RpConfig::new(RngSeed(42))),
            DepthConfig::Fd2(Fd2Config::new(RngSeed(43))),
        ] {
            let engine = PooledEngine::new(&pooled, &depth).unwrap();
            let mut scratch = Vec::new();
            for _ in 0..3 {
                let mut draw = |count: usize| -> Vec<u32> {
                    let mut c = vec![0u32; pooled.len()];
                    for _ in 0..count {
                        c[crate::seed::uniform_index(&mut rng, pooled.len())] += 1;
                    }
                    c
                };
                let counts_f = draw(6);
                let counts_g = draw(7);
                let materialize = |counts: &[u32]| {
                    let mut rows = Vec::new();
                    for (i, &c) in counts.iter().enumerate() {
                        for _ in 0..c {
                            rows.push(pooled.curve(i).to_vec());
                        }
                    }
                    FunctionalSample::new(pooled.grid().clone(), rows).unwrap()
                };
                let fast =
                    p4_from_counts(&engine, &counts_f, &counts_g, 6, 7, &mut scratch);
                let slow = flores_statistics(
                    &materialize(&counts_f),
                    &materialize(&counts_g),
                    &depth,
                )
                .unwrap()
                .p4;
                assert_eq!(fast, slow, "{depth:?}");
            }
        }
    }

    #[test]
    fn mean_shift_is_detected_by_p4() {
        let grid = make_grid(0.0, 1.0, 12).unwrap();
        let f = simulate_sample(&model0(), 25, &grid, RngSeed(14)).unwrap();
        let shifted = ModelSpec {
            delta: 1.5,
            ..model0()
        };
        let g = simulate_sample(&shifted, 25, &grid, RngSeed(15)).unwrap();
        let res = flores_test(&f, &g, &DepthConfig::Fm, 0.05, 150, RngSeed(16)).unwrap();
        assert!(res.reject, "p = {}", res.p0);
    }
}
