//! Alpha-shape (concave hull) boundary extraction.
//!
//! A Delaunay triangle belongs to the alpha complex when its circumradius is
//! at most `alpha`. The hull is the outer boundary of the union of those
//! triangles, traced counter-clockwise.

use std::collections::HashSet;
use std::f64::consts::TAU;

use super::delaunay::triangulate_with_reach;
use super::polygon::{point_segment_distance, polygon_area};
use super::{circumradius, GeometryError, Point2};

/// Outer alpha-shape boundary of `points`, counter-clockwise.
///
/// Fails with [`GeometryError::DegenerateInput`] for fewer than three or
/// collinear points and with [`GeometryError::DisconnectedHull`] when the
/// alpha complex splits into several regions or leaves input points outside.
pub fn concave_hull(points: &[Point2], alpha: f64) -> Result<Vec<Point2>, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateInput(
            "concave hull needs at least three points",
        ));
    }
    if !(alpha > 0.0) {
        return Err(GeometryError::DegenerateInput("alpha must be positive"));
    }
    let (tris, quantum) = triangulate_with_reach(points, 2.0 * alpha);
    if tris.is_empty() {
        return Err(GeometryError::DegenerateInput("all points are collinear"));
    }
    let kept: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| circumradius(points[t[0]], points[t[1]], points[t[2]]) <= alpha)
        .collect();
    if kept.is_empty() {
        return Err(GeometryError::DisconnectedHull);
    }
    if component_count(&kept) > 1 {
        return Err(GeometryError::DisconnectedHull);
    }

    let mut directed: Vec<(usize, usize)> = kept
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .collect();
    directed.sort_unstable();
    directed.dedup();
    let boundary: Vec<(usize, usize)> = directed
        .iter()
        .copied()
        .filter(|&(a, b)| directed.binary_search(&(b, a)).is_err())
        .collect();
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for &(a, b) in &boundary {
        outgoing[a].push(b);
    }

    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for &(start_a, start_b) in &boundary {
        if used.contains(&(start_a, start_b)) {
            continue;
        }
        let mut ring = vec![start_a];
        used.insert((start_a, start_b));
        let (mut prev, mut cur) = (start_a, start_b);
        while cur != start_a {
            ring.push(cur);
            let next = pick_same_fan(points, prev, cur, &outgoing[cur], &used);
            let Some(next) = next else { break };
            used.insert((cur, next));
            prev = cur;
            cur = next;
            if ring.len() > boundary.len() + 1 {
                break;
            }
        }
        let poly: Vec<Point2> = ring.iter().map(|&i| points[i]).collect();
        let area = polygon_area(&poly);
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            best = Some((area, ring));
        }
    }
    let (_, mut ring) = best.ok_or(GeometryError::DisconnectedHull)?;
    let lowest = ring
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap_or(0);
    ring.rotate_left(lowest);
    let hull: Vec<Point2> = ring.iter().map(|&i| points[i]).collect();

    let tol = (4.0 * quantum).max(1e-9);
    if !points.iter().all(|&p| inside_or_near(p, &hull, tol)) {
        return Err(GeometryError::DisconnectedHull);
    }
    Ok(hull)
}

/// At `cur` (reached from `prev`), the outgoing boundary edge that bounds the
/// same triangle fan: the first one met rotating clockwise from `prev`.
fn pick_same_fan(
    points: &[Point2],
    prev: usize,
    cur: usize,
    candidates: &[usize],
    used: &HashSet<(usize, usize)>,
) -> Option<usize> {
    let back = (points[prev] - points[cur]).angle();
    candidates
        .iter()
        .copied()
        .filter(|&w| !used.contains(&(cur, w)))
        .min_by(|&w1, &w2| {
            let cw = |w: usize| {
                let mut d = back - (points[w] - points[cur]).angle();
                while d <= 0.0 {
                    d += TAU;
                }
                while d > TAU {
                    d -= TAU;
                }
                d
            };
            cw(w1).total_cmp(&cw(w2)).then(w1.cmp(&w2))
        })
}

fn component_count(tris: &[[usize; 3]]) -> usize {
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut edges: Vec<((usize, usize), usize)> = tris
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| {
            [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].map(|(a, b)| ((a.min(b), a.max(b)), ti))
        })
        .collect();
    edges.sort_unstable();
    for pair in edges.windows(2) {
        if pair[0].0 == pair[1].0 {
            let (ra, rb) = (find(&mut parent, pair[0].1), find(&mut parent, pair[1].1));
            parent[ra] = rb;
        }
    }
    (0..tris.len())
        .filter(|&i| find(&mut parent, i) == i)
        .count()
}

fn inside_or_near(p: Point2, poly: &[Point2], tol: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside || (0..n).any(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]).0 <= tol)
}
