//! Exhaustive reference computations for small spaces, by direct
//! enumeration of paths and subsets.

use crate::numeric::le_tol;
use crate::space::{FiniteSpace, PointId};

/// Inversion kernel at `p` over the remaining points, straight from the
/// definition.
pub fn inversion_kernel_rows(space: &impl FiniteSpace, p: PointId) -> Vec<Vec<f64>> {
    let rest: Vec<PointId> = space.point_ids().into_iter().filter(|&x| x != p).collect();
    let value = |x: PointId, y: PointId| -> f64 {
        if x == y {
            0.0
        } else if space.is_remote(x) {
            1.0 / space.dist(p, y)
        } else if space.is_remote(y) {
            1.0 / space.dist(p, x)
        } else {
            space.dist(x, y) / (space.dist(p, x) * space.dist(p, y))
        }
    };
    rest.iter()
        .map(|&x| rest.iter().map(|&y| value(x, y)).collect())
        .collect()
}

/// Minimum total weight over every simple path, by depth-first enumeration.
pub fn shortest_chains(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = weights.len();
    let mut best = vec![vec![f64::INFINITY; n]; n];
    fn walk(
        w: &[Vec<f64>],
        start: usize,
        at: usize,
        total: f64,
        seen: &mut Vec<bool>,
        best: &mut [Vec<f64>],
    ) {
        if total < best[start][at] {
            best[start][at] = total;
        }
        for next in 0..w.len() {
            if !seen[next] {
                seen[next] = true;
                walk(w, start, next, total + w[at][next], seen, best);
                seen[next] = false;
            }
        }
    }
    for start in 0..n {
        let mut seen = vec![false; n];
        seen[start] = true;
        walk(weights, start, start, 0.0, &mut seen, &mut best);
    }
    best
}

/// Smallest number of radius `r/2` balls (any centers) covering the closed
/// ball `B(center, r)`, by trying every center subset in order of size.
pub fn min_half_cover_size(space: &impl FiniteSpace, center: PointId, r: f64) -> usize {
    let n = space.len();
    let target: Vec<usize> = (0..n)
        .filter(|&x| space.dist(center, PointId(x)) <= r)
        .collect();
    let covers = |subset: &[usize]| {
        target.iter().all(|&x| {
            subset
                .iter()
                .any(|&c| space.dist(PointId(c), PointId(x)) <= r / 2.0)
        })
    };
    for k in 1..=target.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if covers(&idx) {
                return k;
            }
            // next k-combination of 0..n
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    target.len()
}

/// Whether some sequence of distinct points from `a` to `b` with at least
/// two links has every link at most `θ·d(a,b)`.
pub fn theta_chain_exists(space: &impl FiniteSpace, theta: f64, a: PointId, b: PointId) -> bool {
    let bound = theta * space.dist(a, b);
    let n = space.len();
    fn walk(
        space: &impl FiniteSpace,
        bound: f64,
        at: usize,
        target: usize,
        links: usize,
        seen: &mut Vec<bool>,
    ) -> bool {
        for next in 0..space.len() {
            if seen[next] || !le_tol(space.dist(PointId(at), PointId(next)), bound) {
                continue;
            }
            if next == target {
                if links >= 1 {
                    return true;
                }
                continue;
            }
            seen[next] = true;
            let found = walk(space, bound, next, target, links + 1, seen);
            seen[next] = false;
            if found {
                return true;
            }
        }
        false
    }
    let mut seen = vec![false; n];
    seen[a.0] = true;
    walk(space, bound, a.0, b.0, 0, &mut seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ExtendedMetricSpace;

    fn line(xs: &[f64]) -> ExtendedMetricSpace {
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|a| xs.iter().map(|b| (a - b).abs()).collect())
            .collect();
        ExtendedMetricSpace::from_rows(&rows).unwrap()
    }

    #[test]
    fn reference_values() {
        let s = line(&[0., 1., 2., 4.]);
        let k = inversion_kernel_rows(&s, PointId(0));
        assert_eq!(shortest_chains(&k)[0][2], 0.75);
        let l3 = line(&[0., 1., 2.]);
        assert_eq!(min_half_cover_size(&l3, PointId(1), 1.0), 3);
        assert_eq!(min_half_cover_size(&l3, PointId(1), 2.0), 1);
        assert!(theta_chain_exists(&l3, 0.5, PointId(0), PointId(2)));
        assert!(!theta_chain_exists(&l3, 0.49, PointId(0), PointId(2)));
    }
}
