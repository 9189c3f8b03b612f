//! Uniform-grid spatial hashing for planar point sets.

use std::collections::HashMap;

use crate::trigsys::Vec2;

pub struct SpatialHash {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialHash {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        Self { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Vec2, idx: usize) {
        self.buckets.entry(self.key(p)).or_default().push(idx);
    }

    /// Indices stored in the 3×3 block of cells around `p`. Every stored point
    /// within one cell width of `p` is among them.
    pub fn neighbors(&self, p: Vec2) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = self.key(p);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
            .filter_map(move |k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

fn dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Exact minimum pairwise distance. `None` for fewer than two points.
///
/// Seeds the estimate with the closest pair among lexicographic neighbours
/// (an upper bound), then buckets points into square cells of that size.
/// Cells are visited in key order; each is compared with itself, the cell
/// above it and the three cells of the next column, whose starts are found
/// with pointers that only move forward.
pub fn min_pairwise_distance(points: &[Vec2]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut best = order
        .windows(2)
        .map(|w| dist(points[w[0]], points[w[1]]))
        .fold(f64::INFINITY, f64::min);
    if best == 0.0 || !best.is_finite() {
        return Some(best);
    }
    let cell = best;
    let mut keyed: Vec<((i64, i64), usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64), i))
        .collect();
    keyed.sort_unstable();
    let n = keyed.len();
    let mut next_col = 0usize;
    let mut a = 0usize;
    while a < n {
        let k = keyed[a].0;
        let mut b = a + 1;
        while b < n && keyed[b].0 == k {
            b += 1;
        }
        // same cell and the cell above
        for i in a..b {
            let p = points[keyed[i].1];
            let mut j = i + 1;
            while j < n && keyed[j].0 <= (k.0, k.1 + 1) {
                best = best.min(dist(p, points[keyed[j].1]));
                j += 1;
            }
        }
        // next column, rows k.1 − 1 ..= k.1 + 1
        let lo = (k.0 + 1, k.1 - 1);
        while next_col < n && keyed[next_col].0 < lo {
            next_col += 1;
        }
        let mut j = next_col;
        while j < n && keyed[j].0 <= (k.0 + 1, k.1 + 1) {
            let q = points[keyed[j].1];
            for item in &keyed[a..b] {
                best = best.min(dist(points[item.1], q));
            }
            j += 1;
        }
        a = b;
    }
    Some(best)
}

/// Greedy merge: visiting points by increasing `score`, keep a point unless
/// an already kept point lies within `radius`. Returns kept indices in visit
/// order.
pub fn dedup_by_score(points: &[Vec2], score: &[f64], radius: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        score[a]
            .total_cmp(&score[b])
            .then(points[a][0].total_cmp(&points[b][0]))
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut grid = SpatialHash::new(radius);
    let mut kept = Vec::new();
    for i in order {
        let p = points[i];
        if grid.neighbors(p).any(|j| dist(p, points[j]) <= radius) {
            continue;
        }
        grid.insert(p, i);
        kept.push(i);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(points: &[Vec2]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                best = best.min(dist(points[i], points[j]));
            }
        }
        best
    }

    #[test]
    fn unit_lattice_separation() {
        let pts: Vec<Vec2> = (-5..=5)
            .flat_map(|i| (-5..=5).map(move |j| [i as f64, j as f64]))
            .collect();
        assert_eq!(min_pairwise_distance(&pts), Some(1.0));
    }

    #[test]
    fn single_point_has_no_separation() {
        assert_eq!(min_pairwise_distance(&[[0.0, 0.0]]), None);
    }

    #[test]
    fn dedup_keeps_lowest_score() {
        let pts = [[0.0, 0.0], [1e-4, 0.0], [1.0, 0.0]];
        let kept = dedup_by_score(&pts, &[2.0, 1.0, 5.0], 1e-3);
        assert_eq!(kept, vec![1, 2]);
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force(raw in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..120)) {
            let pts: Vec<Vec2> = raw.into_iter().map(|(x, y)| [x, y]).collect();
            let fast = min_pairwise_distance(&pts).unwrap();
            proptest::prop_assert_eq!(fast, brute(&pts));
        }
    }
}
