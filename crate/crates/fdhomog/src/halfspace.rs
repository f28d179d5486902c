//! Exact bivariate halfspace (Tukey) depth.
//!
//! `halfspace_depth_2d` computes, for a query point and a finite cloud, the
//! minimum over all closed halfplanes containing the point of the fraction
//! of cloud points inside the halfplane. The implementation is an angular
//! sweep around the query point; every decision is the sign of a cross or
//! dot product, so results are exact integer counts.
//!
//! `halfspace_depth_2d_oracle` recomputes the same quantity by exhaustive
//! enumeration of the critical directions, checking each side of every
//! boundary. It exists to cross-check the sweep and is capped at small
//! cloud sizes.

use crate::error::{Error, Result};

const ORACLE_LIMIT: usize = 2000;

#[inline]
pub(crate) fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

#[inline]
fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// 0 for angles in [0, pi), 1 for [pi, 2pi).
#[inline]
fn half_plane_index(v: (f64, f64)) -> u8 {
    if v.1 > 0.0 || (v.1 == 0.0 && v.0 > 0.0) {
        0
    } else {
        1
    }
}

/// Strict counterclockwise angular order from angle 0, with exact sign
/// tests. Parallel same-direction vectors compare equal.
pub(crate) fn angle_cmp(a: (f64, f64), b: (f64, f64)) -> std::cmp::Ordering {
    let (ha, hb) = (half_plane_index(a), half_plane_index(b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    let c = cross(a, b);
    if c > 0.0 {
        std::cmp::Ordering::Less
    } else if c < 0.0 {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    }
}

/// Is direction `w` inside the half-open arc `(angle(v), angle(v) + pi]`?
#[inline]
pub(crate) fn in_upper_arc(v: (f64, f64), w: (f64, f64)) -> bool {
    let c = cross(v, w);
    c > 0.0 || (c == 0.0 && dot(v, w) < 0.0)
}

/// Reusable buffers for repeated depth queries.
#[derive(Default)]
pub(crate) struct HalfspaceScratch {
    vectors: Vec<(f64, f64)>,
    mult: Vec<usize>,
}

pub(crate) fn depth_with_scratch(
    point: (f64, f64),
    cloud: &[(f64, f64)],
    scratch: &mut HalfspaceScratch,
) -> f64 {
    let n = cloud.len();
    debug_assert!(n > 0);

    scratch.vectors.clear();
    let mut coincident = 0usize;
    for &(x, y) in cloud {
        if x == point.0 && y == point.1 {
            coincident += 1;
        } else {
            scratch.vectors.push((x - point.0, y - point.1));
        }
    }
    let nonzero = scratch.vectors.len();
    if nonzero == 0 {
        // every cloud point sits on the query point
        return coincident as f64 / n as f64;
    }

    scratch.vectors.sort_unstable_by(|&a, &b| angle_cmp(a, b));

    // collapse equal directions into multiplicities
    scratch.mult.clear();
    let mut dirs_len = 0usize;
    for idx in 0..nonzero {
        let v = scratch.vectors[idx];
        if dirs_len > 0
            && angle_cmp(scratch.vectors[dirs_len - 1], v) == std::cmp::Ordering::Equal
        {
            scratch.mult[dirs_len - 1] += 1;
        } else {
            scratch.vectors[dirs_len] = v;
            scratch.mult.push(1);
            dirs_len += 1;
        }
    }
    let dirs = &scratch.vectors[..dirs_len];
    let mult = &scratch.mult[..dirs_len];
    let k = dirs_len;

    // For each direction i, arc_mult(i) = total multiplicity with angle in
    // (angle_i, angle_i + pi]. The minimal closed-halfplane count is
    //   coincident + min_i min(arc_mult(i), nonzero - arc_mult(i)).
    let mut best = nonzero; // any halfplane bounded by a line through the point
    let mut hi = 1usize; // exclusive end of the covered window, doubled index
    let mut arc_mult = 0usize;
    for i in 0..k {
        if hi < i + 1 {
            hi = i + 1;
        }
        while hi < i + k && in_upper_arc(dirs[i], dirs[hi % k]) {
            arc_mult += mult[hi % k];
            hi += 1;
        }
        best = best.min(arc_mult.min(nonzero - arc_mult));
        // slide the window start past direction i+1
        if hi > i + 1 {
            arc_mult -= mult[(i + 1) % k];
        }
    }

    (coincident + best) as f64 / n as f64
}

/// Exact Tukey depth of `point` with respect to `cloud`:
/// the minimum, over closed halfplanes containing `point`, of the fraction
/// of cloud points in the halfplane. Runs in O(n log n).
pub fn halfspace_depth_2d(point: (f64, f64), cloud: &[(f64, f64)]) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::InvalidArgument("halfspace depth needs a nonempty cloud".into()));
    }
    let mut scratch = HalfspaceScratch::default();
    Ok(depth_with_scratch(point, cloud, &mut scratch))
}

/// Brute-force Tukey depth by enumerating every critical boundary direction
/// and checking both sides of each. O(n^2); capped at 2000 cloud points.
///
/// Test oracle for [`halfspace_depth_2d`]; the two agree exactly.
pub fn halfspace_depth_2d_oracle(point: (f64, f64), cloud: &[(f64, f64)]) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::InvalidArgument("halfspace depth needs a nonempty cloud".into()));
    }
    if cloud.len() > ORACLE_LIMIT {
        return Err(Error::OracleSizeLimit {
            size: cloud.len(),
            limit: ORACLE_LIMIT,
        });
    }
    let n = cloud.len();
    let mut coincident = 0usize;
    let mut vectors = Vec::with_capacity(n);
    for &(x, y) in cloud {
        if x == point.0 && y == point.1 {
            coincident += 1;
        } else {
            vectors.push((x - point.0, y - point.1));
        }
    }
    if vectors.is_empty() {
        return Ok(coincident as f64 / n as f64);
    }

    let mut best = vectors.len();
    for &v in &vectors {
        // boundary directions perpendicular to v, both orientations
        for u in [(-v.1, v.0), (v.1, -v.0)] {
            let mut strict = 0usize;
            let mut zero_ccw = 0usize;
            let mut zero_cw = 0usize;
            for &w in &vectors {
                let d = dot(w, u);
                if d > 0.0 {
                    strict += 1;
                } else if d == 0.0 {
                    if cross(u, w) > 0.0 {
                        zero_ccw += 1;
                    } else {
                        zero_cw += 1;
                    }
                }
            }
            // closed halfplane at the boundary, then each side just off it
            best = best
                .min(strict + zero_ccw + zero_cw)
                .min(strict + zero_ccw)
                .min(strict + zero_cw);
        }
    }
    Ok((coincident + best) as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::RngSeed;
    use rand::Rng;

    #[test]
    fn vertex_of_triangle() {
        let cloud = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        let d = halfspace_depth_2d((0.0, 0.0), &cloud).unwrap();
        assert_eq!(d, 1.0 / 3.0);
    }

    #[test]
    fn point_outside_hull() {
        let cloud = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let d = halfspace_depth_2d((5.0, 5.0), &cloud).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn centroid_of_diamond() {
        let cloud = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
        let d = halfspace_depth_2d((0.0, 0.0), &cloud).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn collinear_interior_point() {
        let cloud = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        assert_eq!(halfspace_depth_2d((1.5, 1.5), &cloud).unwrap(), 0.5);
        assert_eq!(halfspace_depth_2d((0.5, 0.5), &cloud).unwrap(), 0.25);
        assert_eq!(halfspace_depth_2d_oracle((0.5, 0.5), &cloud).unwrap(), 0.25);
    }

    #[test]
    fn collinear_cloud_with_coincident_query() {
        // query coincides with the middle point of a collinear cloud;
        // the thin halfplane along the line keeps the point itself plus
        // the smaller side
        let cloud = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        let d = halfspace_depth_2d((2.0, 2.0), &cloud).unwrap();
        assert_eq!(d, 2.0 / 3.0);
        assert_eq!(halfspace_depth_2d_oracle((2.0, 2.0), &cloud).unwrap(), d);
    }

    #[test]
    fn single_point_cloud_equal_to_query() {
        let d = halfspace_depth_2d((1.0, 2.0), &[(1.0, 2.0)]).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(halfspace_depth_2d_oracle((1.0, 2.0), &[(1.0, 2.0)]).unwrap(), 1.0);
    }

    #[test]
    fn empty_cloud_is_an_error() {
        assert!(halfspace_depth_2d((0.0, 0.0), &[]).is_err());
        assert!(halfspace_depth_2d_oracle((0.0, 0.0), &[]).is_err());
    }

    #[test]
    fn oracle_size_limit() {
        let cloud = vec![(0.0, 0.0); 2001];
        assert!(matches!(
            halfspace_depth_2d_oracle((0.0, 0.0), &cloud),
            Err(Error::OracleSizeLimit { .. })
        ));
    }

    fn random_instance(rng: &mut rand_chacha::ChaCha8Rng, kind: usize) -> ((f64, f64), Vec<(f64, f64)>) {
        let n = rng.random_range(1..=50);
        match kind {
            // continuous cloud
            0 => {
                let cloud: Vec<(f64, f64)> = (0..n)
                    .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let q = if rng.random_bool(0.3) {
                    cloud[rng.random_range(0..n)]
                } else {
                    (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))
                };
                (q, cloud)
            }
            // small integer lattice: exact ties, duplicates, collinearity
            1 => {
                let cloud: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        (
                            rng.random_range(-3..=3) as f64,
                            rng.random_range(-3..=3) as f64,
                        )
                    })
                    .collect();
                let q = (
                    rng.random_range(-3..=3) as f64,
                    rng.random_range(-3..=3) as f64,
                );
                (q, cloud)
            }
            // exactly collinear cloud
            _ => {
                let dir = (
                    rng.random_range(-2..=2) as f64,
                    rng.random_range(-2..=2) as f64,
                );
                let dir = if dir == (0.0, 0.0) { (1.0, 1.0) } else { dir };
                let base = (rng.random_range(-1..=1) as f64, rng.random_range(-1..=1) as f64);
                let cloud: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        let s = rng.random_range(-4..=4) as f64;
                        (base.0 + s * dir.0, base.1 + s * dir.1)
                    })
                    .collect();
                let s = rng.random_range(-4..=4) as f64;
                let q = (base.0 + s * dir.0, base.1 + s * dir.1);
                (q, cloud)
            }
        }
    }

    #[test]
    fn sweep_matches_oracle_on_random_instances() {
        let mut rng = RngSeed(0xF00D).rng();
        for trial in 0..600 {
            let kind = match trial % 6 {
                0 | 1 | 2 => 0,
                3 | 4 => 1,
                _ => 2,
            };
            let (q, cloud) = random_instance(&mut rng, kind);
            let fast = halfspace_depth_2d(q, &cloud).unwrap();
            let slow = halfspace_depth_2d_oracle(q, &cloud).unwrap();
            assert_eq!(fast, slow, "trial {trial}: q={q:?} cloud={cloud:?}");
        }
    }

    #[test]
    fn affine_invariance() {
        let mut rng = RngSeed(0xAFF1).rng();
        let n = 40;
        let cloud: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let q = (0.1, -0.2);
        let base = halfspace_depth_2d(q, &cloud).unwrap();
        for trial in 0..100 {
            // random nonsingular linear map plus translation
            let (a, b, c, d) = loop {
                let m: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
                if (m[0] * m[3] - m[1] * m[2]).abs() > 0.1 {
                    break (m[0], m[1], m[2], m[3]);
                }
            };
            let (tx, ty) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let map = |(x, y): (f64, f64)| (a * x + b * y + tx, c * x + d * y + ty);
            let mapped_cloud: Vec<(f64, f64)> = cloud.iter().map(|&p| map(p)).collect();
            let mapped = halfspace_depth_2d(map(q), &mapped_cloud).unwrap();
            assert!(
                (mapped - base).abs() < 1e-12,
                "trial {trial}: {mapped} vs {base}"
            );
        }
    }

    #[test]
    fn cloud_order_does_not_matter() {
        let mut rng = RngSeed(0x0DD).rng();
        let cloud: Vec<(f64, f64)> = (0..30)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let q = (0.0, 0.0);
        let d = halfspace_depth_2d(q, &cloud).unwrap();
        let mut reversed = cloud.clone();
        reversed.reverse();
        assert_eq!(halfspace_depth_2d(q, &reversed).unwrap(), d);
    }
}
