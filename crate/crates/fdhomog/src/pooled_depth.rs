//! Fast depth evaluation against resampled reference multisets.
//!
//! Every bootstrap replicate draws its reference samples, with
//! replacement, from the observed pooled sample. A replicate reference is
//! therefore a multiset over the pooled curves, and depth evaluations only
//! ever compare pooled curves with pooled curves. This module precomputes
//! the order structure those comparisons need — per-axis value ranks for
//! the FM and RP depths, per-query angular orders for FD2 — so one
//! replicate costs integer prefix sums instead of fresh sorts and sweeps.
//!
//! Results are exactly the integer counts the plain depth functions
//! produce; the unit tests assert bitwise agreement.

use crate::curves::FunctionalSample;
use crate::depth::{fd2_pairs, rp_directions, DepthConfig, Fd2Config, RpConfig};
use crate::error::Result;
use crate::halfspace::{angle_cmp, in_upper_arc};

/// Multiset of pooled curves: `counts[i]` copies of curve `i`.
pub(crate) type Counts = [u32];

/// Rank structure shared by the FM (one axis per grid point) and RP (one
/// axis per direction) depths.
pub(crate) struct RankEngine {
    axes: usize,
    num_pooled: usize,
    /// axes x num_pooled: pooled indices sorted by value along each axis.
    perm: Vec<u32>,
    /// axes x num_pooled: per query, how many pooled values are <= its own.
    le: Vec<u32>,
}

impl RankEngine {
    fn new(values: impl Fn(usize, usize) -> f64, axes: usize, num_pooled: usize) -> Self {
        let mut perm = Vec::with_capacity(axes * num_pooled);
        let mut le = vec![0u32; axes * num_pooled];
        for a in 0..axes {
            let mut order: Vec<u32> = (0..num_pooled as u32).collect();
            order.sort_unstable_by(|&i, &j| {
                values(a, i as usize).total_cmp(&values(a, j as usize))
            });
            // rank of the last entry <= each query value, ties included
            for q in 0..num_pooled {
                let vq = values(a, q);
                // counts are tiny; a partition over the sorted order is exact
                let cnt = order.partition_point(|&i| values(a, i as usize) <= vq);
                le[a * num_pooled + q] = cnt as u32;
            }
            perm.extend_from_slice(&order);
        }
        RankEngine {
            axes,
            num_pooled,
            perm,
            le,
        }
    }

    /// Cumulative multiset counts along every axis order.
    fn prepare(&self, counts: &Counts) -> Vec<u32> {
        let n = self.num_pooled;
        let mut prefix = vec![0u32; self.axes * (n + 1)];
        for a in 0..self.axes {
            let base = a * n;
            let pbase = a * (n + 1);
            let mut acc = 0u32;
            for k in 0..n {
                acc += counts[self.perm[base + k] as usize];
                prefix[pbase + k + 1] = acc;
            }
        }
        prefix
    }

    /// Multiset count of values <= the query's value, per axis.
    #[inline]
    fn count_le(&self, prefix: &[u32], axis: usize, q: usize) -> u32 {
        prefix[axis * (self.num_pooled + 1) + self.le[axis * self.num_pooled + q] as usize]
    }
}

/// Per-(pair, query) angular order around the query point, with direction
/// groups and precomputed half-circle window ends.
pub(crate) struct Fd2Engine {
    num_pooled: usize,
    num_pairs: usize,
    /// Sorted noncoincident pooled indices, concatenated per slot.
    ord: Vec<u16>,
    /// Direction-group id of each `ord` entry, aligned with `ord`.
    group_of: Vec<u16>,
    /// Slot offsets into `ord` (len slots + 1).
    ord_bounds: Vec<u32>,
    /// Per group: last doubled group index inside `(angle, angle + pi]`;
    /// `group_bounds` delimits slots.
    arc_end: Vec<u16>,
    group_bounds: Vec<u32>,
    /// Pooled indices coincident with the query (always at least the
    /// query itself), concatenated per slot.
    coincident: Vec<u16>,
    coinc_bounds: Vec<u32>,
}

impl Fd2Engine {
    fn new(pooled: &FunctionalSample, config: &Fd2Config) -> Self {
        let n = pooled.len();
        assert!(n <= u16::MAX as usize, "pooled sample too large for the engine");
        let pairs = fd2_pairs(pooled.grid().len(), config);
        let slots = pairs.len() * n;

        let mut ord: Vec<u16> = Vec::with_capacity(slots * n.saturating_sub(1));
        let mut group_of: Vec<u16> = Vec::with_capacity(slots * n.saturating_sub(1));
        let mut ord_bounds: Vec<u32> = Vec::with_capacity(slots + 1);
        let mut group_bounds: Vec<u32> = Vec::with_capacity(slots + 1);
        let mut arc_end: Vec<u16> = Vec::new();
        let mut coincident: Vec<u16> = Vec::new();
        let mut coinc_bounds: Vec<u32> = Vec::with_capacity(slots + 1);
        ord_bounds.push(0);
        group_bounds.push(0);
        coinc_bounds.push(0);

        let mut vectors: Vec<(u16, (f64, f64))> = Vec::with_capacity(n);
        for &(a, b) in &pairs {
            let points: Vec<(f64, f64)> = (0..n)
                .map(|i| (pooled.value(i, a), pooled.value(i, b)))
                .collect();
            for q in 0..n {
                let pq = points[q];
                vectors.clear();
                for (i, &p) in points.iter().enumerate() {
                    if p == pq {
                        coincident.push(i as u16);
                    } else {
                        vectors.push((i as u16, (p.0 - pq.0, p.1 - pq.1)));
                    }
                }
                coinc_bounds.push(coincident.len() as u32);

                vectors.sort_unstable_by(|x, y| angle_cmp(x.1, y.1));
                let mut reps: Vec<(f64, f64)> = Vec::new();
                for (k, &(i, v)) in vectors.iter().enumerate() {
                    if k == 0 || angle_cmp(vectors[k - 1].1, v) != std::cmp::Ordering::Equal {
                        reps.push(v);
                    }
                    ord.push(i);
                    group_of.push((reps.len() - 1) as u16);
                }
                // window end per group: last group inside (angle, angle+pi]
                let k_groups = reps.len();
                let mut hi = 1usize;
                for g in 0..k_groups {
                    if hi < g + 1 {
                        hi = g + 1;
                    }
                    while hi < g + k_groups && in_upper_arc(reps[g], reps[hi % k_groups]) {
                        hi += 1;
                    }
                    arc_end.push((hi - 1) as u16); // inclusive doubled index
                }
                debug_assert_eq!(
                    arc_end.len() - (group_bounds.last().copied().unwrap() as usize),
                    k_groups
                );
                ord_bounds.push(ord.len() as u32);
                group_bounds.push(arc_end.len() as u32);
            }
        }

        Fd2Engine {
            num_pooled: n,
            num_pairs: pairs.len(),
            ord,
            group_of,
            ord_bounds,
            arc_end,
            group_bounds,
            coincident,
            coinc_bounds,
        }
    }

    /// Minimal closed-halfplane count (numerator of the Tukey depth) of
    /// pooled point `q` against the multiset, for one grid-point pair.
    #[inline]
    fn pair_count(&self, slot: usize, counts: &Counts, total: u32, mults: &mut Vec<u32>) -> u32 {
        let cs = self.coinc_bounds[slot] as usize;
        let ce = self.coinc_bounds[slot + 1] as usize;
        let mut n0 = 0u32;
        for &i in &self.coincident[cs..ce] {
            n0 += counts[i as usize];
        }
        let nonzero = total - n0;
        if nonzero == 0 {
            return n0;
        }

        let os = self.ord_bounds[slot] as usize;
        let oe = self.ord_bounds[slot + 1] as usize;
        let gs = self.group_bounds[slot] as usize;
        let ge = self.group_bounds[slot + 1] as usize;
        let k_groups = ge - gs;

        mults.clear();
        mults.resize(k_groups, 0);
        for k in os..oe {
            mults[self.group_of[k] as usize] += counts[self.ord[k] as usize];
        }
        n0 + window_min(mults, &self.arc_end[gs..ge], nonzero)
    }

    /// Fused two-side variant: one walk over the slot accumulates the
    /// group multiplicities of both reference multisets, packed into the
    /// low and high halves of a u64 (side totals are far below 2^32, so
    /// the halves can never carry into each other).
    #[inline]
    fn pair_count2(
        &self,
        slot: usize,
        counts_fg: &[u64],
        total_f: u32,
        total_g: u32,
        mults: &mut Vec<u64>,
        prefix: &mut Vec<u64>,
    ) -> (u32, u32) {
        let cs = self.coinc_bounds[slot] as usize;
        let ce = self.coinc_bounds[slot + 1] as usize;
        let mut n0 = 0u64;
        for &i in &self.coincident[cs..ce] {
            n0 += counts_fg[i as usize];
        }
        let n0f = (n0 & 0xFFFF_FFFF) as u32;
        let n0g = (n0 >> 32) as u32;
        let nzf = total_f - n0f;
        let nzg = total_g - n0g;
        if nzf == 0 && nzg == 0 {
            return (n0f, n0g);
        }

        let os = self.ord_bounds[slot] as usize;
        let oe = self.ord_bounds[slot + 1] as usize;
        let gs = self.group_bounds[slot] as usize;
        let ge = self.group_bounds[slot + 1] as usize;
        let k_groups = ge - gs;

        mults.clear();
        mults.resize(k_groups, 0);
        let ord = &self.ord[os..oe];
        let groups = &self.group_of[os..oe];
        for (&i, &g) in ord.iter().zip(groups) {
            // SAFETY: the constructor stores only i < num_pooled =
            // counts_fg.len() and g < k_groups = mults.len()
            unsafe {
                *mults.get_unchecked_mut(g as usize) += counts_fg.get_unchecked(i as usize);
            }
        }
        let ends = &self.arc_end[gs..ge];
        let (best_f, best_g) = window_min_packed(mults, ends, nzf, nzg, prefix);
        (n0f + best_f, n0g + best_g)
    }
}

/// Two-multiset variant of [`window_min`] over packed per-group
/// multiplicities, via prefix sums on the doubled circular order: the
/// window for group `g` covers groups `g+1 ..= ends[g]`.
#[inline]
fn window_min_packed(
    mults: &[u64],
    ends: &[u16],
    nzf: u32,
    nzg: u32,
    prefix: &mut Vec<u64>,
) -> (u32, u32) {
    let k_groups = mults.len();
    prefix.clear();
    prefix.reserve(2 * k_groups + 1);
    prefix.push(0);
    let mut acc = 0u64;
    for _ in 0..2 {
        for &m in mults {
            acc += m;
            prefix.push(acc);
        }
    }
    let mut best_f = nzf;
    let mut best_g = nzg;
    for (g, &end) in ends.iter().enumerate() {
        let window = prefix[end as usize + 1] - prefix[g + 1];
        let wf = (window & 0xFFFF_FFFF) as u32;
        let wg = (window >> 32) as u32;
        best_f = best_f.min(wf.min(nzf - wf));
        best_g = best_g.min(wg.min(nzg - wg));
    }
    (best_f, best_g)
}

/// Sliding half-circle window over doubled group indices: the window for
/// group `g` covers groups `g+1 ..= ends[g]`; returns the minimum of
/// `min(window, nonzero - window)` over all groups.
#[inline]
fn window_min(mults: &[u32], ends: &[u16], nonzero: u32) -> u32 {
    let k_groups = mults.len();
    let mut best = nonzero;
    let mut window = 0u32;
    let mut covered = 0usize; // exclusive doubled end of the window
    for (g, &end) in ends.iter().enumerate() {
        if covered < g + 1 {
            covered = g + 1;
        }
        let target = end as usize + 1;
        while covered < target {
            let idx = if covered >= k_groups {
                covered - k_groups
            } else {
                covered
            };
            window += mults[idx];
            covered += 1;
        }
        best = best.min(window.min(nonzero - window));
        if covered > g + 1 {
            let idx = if g + 1 >= k_groups { 0 } else { g + 1 };
            window -= mults[idx];
        }
    }
    best
}

/// Depth evaluator over an observed pooled sample, specialized to one
/// depth configuration.
pub(crate) enum PooledEngine {
    Fm {
        ranks: RankEngine,
    },
    Rp {
        ranks: RankEngine,
    },
    Fd2 {
        engine: Fd2Engine,
    },
}

/// Side-specific state: rank prefixes for FM/RP, the raw counts for FD2.
pub(crate) struct PreparedSide {
    prefix: Vec<u32>,
    counts: Vec<u32>,
    total: u32,
}

impl PooledEngine {
    pub fn new(pooled: &FunctionalSample, depth: &DepthConfig) -> Result<Self> {
        let n = pooled.len();
        Ok(match depth {
            DepthConfig::Fm => {
                let g = pooled.num_points();
                let ranks = RankEngine::new(|a, i| pooled.value(i, a), g, n);
                PooledEngine::Fm { ranks }
            }
            DepthConfig::Rp(cfg) => {
                let ranks = RankEngine::new(projections(pooled, cfg), cfg.num_projections, n);
                PooledEngine::Rp { ranks }
            }
            DepthConfig::Fd2(cfg) => PooledEngine::Fd2 {
                engine: Fd2Engine::new(pooled, cfg),
            },
        })
    }

    pub fn prepare(&self, counts: &Counts, total: u32) -> PreparedSide {
        let prefix = match self {
            PooledEngine::Fm { ranks } | PooledEngine::Rp { ranks } => ranks.prepare(counts),
            PooledEngine::Fd2 { .. } => Vec::new(),
        };
        PreparedSide {
            prefix,
            counts: counts.to_vec(),
            total,
        }
    }

    /// DD points `(depth wrt F, depth wrt G)` of every pooled curve marked
    /// in `present`, written into `out` (indexed by pooled curve; absent
    /// entries are left at zero). The FD2 path iterates pairs in the outer
    /// loop so one walk per slot serves both sides.
    pub fn dd_points(
        &self,
        side_f: &PreparedSide,
        side_g: &PreparedSide,
        present: &[bool],
        out: &mut Vec<(f64, f64)>,
    ) {
        let num_pooled = present.len();
        out.clear();
        out.resize(num_pooled, (0.0, 0.0));
        match self {
            PooledEngine::Fm { .. } | PooledEngine::Rp { .. } => {
                let mut scratch = Vec::new();
                for q in 0..num_pooled {
                    if present[q] {
                        out[q] = (
                            self.depth(q, side_f, &mut scratch),
                            self.depth(q, side_g, &mut scratch),
                        );
                    }
                }
            }
            PooledEngine::Fd2 { engine } => {
                let queries: Vec<usize> =
                    (0..num_pooled).filter(|&q| present[q]).collect();
                let denom_f = side_f.total as f64;
                let denom_g = side_g.total as f64;
                let counts_fg: Vec<u64> = side_f
                    .counts
                    .iter()
                    .zip(&side_g.counts)
                    .map(|(&f, &g)| f as u64 | ((g as u64) << 32))
                    .collect();
                let mut mults: Vec<u64> = Vec::new();
                let mut prefix: Vec<u64> = Vec::new();
                for p in 0..engine.num_pairs {
                    let base = p * engine.num_pooled;
                    for &q in &queries {
                        let (cf, cg) = engine.pair_count2(
                            base + q,
                            &counts_fg,
                            side_f.total,
                            side_g.total,
                            &mut mults,
                            &mut prefix,
                        );
                        let entry = &mut out[q];
                        entry.0 += cf as f64 / denom_f;
                        entry.1 += cg as f64 / denom_g;
                    }
                }
                let pairs = engine.num_pairs as f64;
                for &q in &queries {
                    out[q].0 /= pairs;
                    out[q].1 /= pairs;
                }
            }
        }
    }

    /// Depth of pooled curve `q` with respect to the prepared multiset.
    pub fn depth(&self, q: usize, side: &PreparedSide, scratch: &mut Vec<u32>) -> f64 {
        self.depth_inner(q, side, scratch, false)
    }

    /// Depth of pooled curve `q` with respect to the prepared multiset
    /// with `q` itself appended once.
    pub fn depth_augmented(&self, q: usize, side: &PreparedSide, scratch: &mut Vec<u32>) -> f64 {
        self.depth_inner(q, side, scratch, true)
    }

    fn depth_inner(&self, q: usize, side: &PreparedSide, scratch: &mut Vec<u32>, augment: bool) -> f64 {
        let extra = u32::from(augment);
        let denom = (side.total + extra) as f64;
        match self {
            PooledEngine::Fm { ranks } => {
                let mut total = 0.0;
                for a in 0..ranks.axes {
                    let f = (ranks.count_le(&side.prefix, a, q) + extra) as f64 / denom;
                    total += 1.0 - (0.5 - f).abs();
                }
                total / ranks.axes as f64
            }
            PooledEngine::Rp { ranks } => {
                let mut total = 0.0;
                for a in 0..ranks.axes {
                    let f = (ranks.count_le(&side.prefix, a, q) + extra) as f64 / denom;
                    total += f.min(1.0 - f);
                }
                total / ranks.axes as f64
            }
            PooledEngine::Fd2 { engine } => {
                // an appended copy of the query point lies in every closed
                // halfplane through it: the count rises by exactly one
                let mut total_depth = 0.0;
                for p in 0..engine.num_pairs {
                    let slot = p * engine.num_pooled + q;
                    let count = engine.pair_count(slot, &side.counts, side.total, scratch);
                    total_depth += (count + extra) as f64 / denom;
                }
                total_depth / engine.num_pairs as f64
            }
        }
    }
}

/// Pooled-curve projections along the RP directions, as an axis-major
/// closure for the rank engine.
fn projections(pooled: &FunctionalSample, cfg: &RpConfig) -> impl Fn(usize, usize) -> f64 {
    let dirs = rp_directions(pooled.grid(), cfg);
    let weights = pooled.grid().trapezoid_weights();
    let n = pooled.len();
    let mut proj = vec![0.0; cfg.num_projections * n];
    for (d, dir) in dirs.iter().enumerate() {
        for (i, curve) in pooled.curves().enumerate() {
            proj[d * n + i] = curve
                .iter()
                .zip(dir)
                .zip(&weights)
                .map(|((x, v), w)| w * v * x)
                .sum();
        }
    }
    move |a: usize, i: usize| proj[a * n + i]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{make_grid, simulate_sample, MeanFunction, ModelSpec};
    use crate::depth::{fd2_depth, fm_depth, rp_depth};
    use crate::seed::{uniform_index, RngSeed};

    fn model0() -> ModelSpec {
        ModelSpec {
            mean: MeanFunction::Peak32,
            delta: 0.0,
            amp: 0.3,
            rate: 3.33,
        }
    }

    /// Materialize the multiset as a plain sample (repeating curves).
    fn materialize(pooled: &FunctionalSample, counts: &[u32]) -> FunctionalSample {
        let mut rows = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                rows.push(pooled.curve(i).to_vec());
            }
        }
        FunctionalSample::new(pooled.grid().clone(), rows).unwrap()
    }

    fn random_counts(rng: &mut rand_chacha::ChaCha8Rng, n: usize, total: u32) -> Vec<u32> {
        let mut counts = vec![0u32; n];
        for _ in 0..total {
            counts[uniform_index(rng, n)] += 1;
        }
        counts
    }

    #[test]
    fn engine_matches_plain_depths_on_random_multisets() {
        let grid = make_grid(0.0, 1.0, 12).unwrap();
        let pooled = simulate_sample(&model0(), 20, &grid, RngSeed(1)).unwrap();
        let mut rng = RngSeed(2).rng();

        let configs = [
            DepthConfig::Fm,
            DepthConfig::Rp(RpConfig::new(RngSeed(3))),
            DepthConfig::Fd2(Fd2Config::new(RngSeed(4))),
        ];
        for depth in &configs {
            let engine = PooledEngine::new(&pooled, depth).unwrap();
            let mut scratch = Vec::new();
            for _ in 0..5 {
                let counts = random_counts(&mut rng, 20, 10);
                let side = engine.prepare(&counts, 10);
                let reference = materialize(&pooled, &counts);
                let expected = match depth {
                    DepthConfig::Fm => fm_depth(&pooled, &reference).unwrap(),
                    DepthConfig::Rp(cfg) => rp_depth(&pooled, &reference, cfg).unwrap(),
                    DepthConfig::Fd2(cfg) => fd2_depth(&pooled, &reference, cfg).unwrap(),
                };
                for q in 0..pooled.len() {
                    let got = engine.depth(q, &side, &mut scratch);
                    assert_eq!(
                        got,
                        expected.values()[q],
                        "{depth:?}, query {q}, counts {counts:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn engine_augmented_matches_materialized_append() {
        let grid = make_grid(0.0, 1.0, 10).unwrap();
        let pooled = simulate_sample(&model0(), 15, &grid, RngSeed(5)).unwrap();
        let mut rng = RngSeed(6).rng();
        for depth in [
            DepthConfig::Fm,
            DepthConfig::Rp(RpConfig::new(RngSeed(7))),
            DepthConfig::Fd2(Fd2Config::new(RngSeed(8))),
        ] {
            let engine = PooledEngine::new(&pooled, &depth).unwrap();
            let mut scratch = Vec::new();
            let counts = random_counts(&mut rng, 15, 8);
            let side = engine.prepare(&counts, 8);
            let reference = materialize(&pooled, &counts);
            for q in [0usize, 7, 14] {
                let augmented = reference.with_appended(pooled.curve(q)).unwrap();
                let eval =
                    FunctionalSample::new(pooled.grid().clone(), vec![pooled.curve(q).to_vec()])
                        .unwrap();
                let expected = match &depth {
                    DepthConfig::Fm => fm_depth(&eval, &augmented).unwrap(),
                    DepthConfig::Rp(cfg) => rp_depth(&eval, &augmented, cfg).unwrap(),
                    DepthConfig::Fd2(cfg) => fd2_depth(&eval, &augmented, cfg).unwrap(),
                };
                let got = engine.depth_augmented(q, &side, &mut scratch);
                assert_eq!(got, expected.values()[0], "{depth:?}, query {q}");
            }
        }
    }

    #[test]
    fn engine_handles_duplicate_pooled_curves() {
        // pooled sample with exact duplicate rows: coincident handling
        let grid = make_grid(0.0, 1.0, 6).unwrap();
        let base = simulate_sample(&model0(), 4, &grid, RngSeed(9)).unwrap();
        let mut rows: Vec<Vec<f64>> = base.curves().map(|c| c.to_vec()).collect();
        rows.push(base.curve(1).to_vec());
        rows.push(base.curve(1).to_vec());
        let pooled = FunctionalSample::new(grid, rows).unwrap();

        let depth = DepthConfig::Fd2(Fd2Config::new(RngSeed(10)));
        let engine = PooledEngine::new(&pooled, &depth).unwrap();
        let mut scratch = Vec::new();
        let counts = vec![1u32, 2, 0, 1, 1, 1];
        let side = engine.prepare(&counts, 6);
        let reference = materialize(&pooled, &counts);
        let expected = match &depth {
            DepthConfig::Fd2(cfg) => fd2_depth(&pooled, &reference, cfg).unwrap(),
            _ => unreachable!(),
        };
        for q in 0..pooled.len() {
            assert_eq!(
                engine.depth(q, &side, &mut scratch),
                expected.values()[q],
                "query {q}"
            );
        }
    }
}
