use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Point2;

/// Balanced, immutable 2D kd-tree.
///
/// Nodes are stored implicitly: the subtree over `idx[lo..hi]` has its
/// splitting point at the median position `(lo + hi) / 2`.
#[derive(Debug, Clone)]
pub struct KdTree2 {
    points: Vec<Point2>,
    /// Permutation of point indices in tree order.
    idx: Vec<usize>,
    /// Split axis of the node stored at each tree-order position.
    axis: Vec<u8>,
}

#[derive(PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree2 {
    pub fn new(points: Vec<Point2>) -> Self {
        let n = points.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut axis = vec![0u8; n];
        build(&points, &mut idx, &mut axis, 0, n);
        KdTree2 { points, idx, axis }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    /// Indices of the `k` nearest points, ascending by distance with ties
    /// broken by insertion order.
    pub fn nearest_indices(&self, query: Point2, k: usize) -> Vec<usize> {
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(query, k, 0, self.len(), &mut heap);
        let mut found = heap.into_vec();
        found.sort();
        found.into_iter().map(|c| c.index).collect()
    }

    pub fn nearest(&self, query: Point2, k: usize) -> Vec<Point2> {
        self.nearest_indices(query, k)
            .into_iter()
            .map(|i| self.points[i])
            .collect()
    }

    /// Squared distance to the nearest point.
    pub fn nearest_distance_squared(&self, query: Point2) -> Option<f64> {
        self.nearest_indices(query, 1)
            .first()
            .map(|&i| self.points[i].distance_squared(query))
    }

    fn search(&self, q: Point2, k: usize, lo: usize, hi: usize, heap: &mut BinaryHeap<Candidate>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let pi = self.idx[mid];
        let p = self.points[pi];
        let cand = Candidate {
            dist2: p.distance_squared(q),
            index: pi,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }
        let diff = if self.axis[mid] == 0 {
            q.x - p.x
        } else {
            q.y - p.y
        };
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, k, near.0, near.1, heap);
        // `<=` keeps equal-distance candidates reachable for the index tie-break.
        if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
            self.search(q, k, far.0, far.1, heap);
        }
    }
}

fn build(points: &[Point2], idx: &mut [usize], axis: &mut [u8], lo: usize, hi: usize) {
    if hi - lo <= 1 {
        if hi > lo {
            axis[lo] = 0;
        }
        return;
    }
    let (mut minx, mut maxx, mut miny, mut maxy) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &i in &idx[lo..hi] {
        minx = minx.min(points[i].x);
        maxx = maxx.max(points[i].x);
        miny = miny.min(points[i].y);
        maxy = maxy.max(points[i].y);
    }
    let ax = if maxx - minx >= maxy - miny { 0u8 } else { 1u8 };
    let key = |i: &usize| if ax == 0 { points[*i].x } else { points[*i].y };
    let mid = (lo + hi) / 2;
    idx[lo..hi].select_nth_unstable_by(mid - lo, |a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    axis[mid] = ax;
    build(points, idx, axis, lo, mid);
    build(points, idx, axis, mid + 1, hi);
}

/// The `k` points of `tree` nearest to `query`, closest first.
pub fn kd_nearest(tree: &KdTree2, query: Point2, k: usize) -> Vec<Point2> {
    tree.nearest(query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(points: &[Point2], q: Point2, k: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..points.len()).collect();
        all.sort_by(|&a, &b| {
            points[a]
                .distance_squared(q)
                .total_cmp(&points[b].distance_squared(q))
                .then(a.cmp(&b))
        });
        all.truncate(k);
        all
    }

    #[test]
    fn single_nearest() {
        let t = KdTree2::new(vec![Point2::new(0.0, 0.0), Point2::new(5.0, 5.0)]);
        assert_eq!(
            kd_nearest(&t, Point2::new(1.0, 1.0), 1),
            vec![Point2::new(0.0, 0.0)]
        );
    }

    #[test]
    fn k_larger_than_size_returns_everything_sorted() {
        let pts = vec![
            Point2::new(3.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ];
        let t = KdTree2::new(pts);
        assert_eq!(
            kd_nearest(&t, Point2::ZERO, 10),
            vec![
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(3.0, 0.0)
            ]
        );
    }

    #[test]
    fn ten_nearest_of_two_hundred_match_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..200)
            .map(|_| Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
            .collect();
        let t = KdTree2::new(pts.clone());
        for _ in 0..50 {
            let q = Point2::new(rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0));
            assert_eq!(t.nearest_indices(q, 10), brute_force(&pts, q, 10));
        }
    }

    #[test]
    fn ties_follow_insertion_order() {
        let pts = vec![
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(-1.0, 0.0),
            Point2::new(0.0, -1.0),
        ];
        let t = KdTree2::new(pts);
        assert_eq!(t.nearest_indices(Point2::ZERO, 3), vec![0, 1, 2]);
    }

    #[test]
    fn thousand_random_instances_match_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.random_range(1..80);
            // Coarse lattice coordinates produce plenty of exact ties.
            let pts: Vec<_> = (0..n)
                .map(|_| {
                    Point2::new(
                        rng.random_range(-5..5) as f64,
                        rng.random_range(-5..5) as f64,
                    )
                })
                .collect();
            let q = Point2::new(
                rng.random_range(-6..6) as f64 * 0.5,
                rng.random_range(-6..6) as f64 * 0.5,
            );
            let k = rng.random_range(1..12);
            let t = KdTree2::new(pts.clone());
            assert_eq!(t.nearest_indices(q, k), brute_force(&pts, q, k));
        }
    }

    proptest! {
        #[test]
        fn nearest_matches_brute_force(
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60),
            q in (-60.0f64..60.0, -60.0f64..60.0),
            k in 1usize..20,
        ) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            let q = Point2::new(q.0, q.1);
            let t = KdTree2::new(pts.clone());
            prop_assert_eq!(t.nearest_indices(q, k), brute_force(&pts, q, k));
        }
    }
}
