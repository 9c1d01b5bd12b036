use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_4;

use thiserror::Error;

use super::map::{polyline_distance, SidewalkMap};
use crate::geometry::Point2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("no collision-free path from ({:.2}, {:.2}) to ({:.2}, {:.2})", .start.x, .start.y, .goal.x, .goal.y)]
    NoPath { start: Point2, goal: Point2 },
}

/// Occupancy grid over the walkable area, shrunk by a clearance radius.
struct FreeGrid {
    origin: Point2,
    resolution: f64,
    nx: usize,
    ny: usize,
    free: Vec<bool>,
}

impl FreeGrid {
    fn new(map: &SidewalkMap, clearance: f64, resolution: f64) -> Option<Self> {
        let (lo, hi) = map.walkable_bounds()?;
        let nx = ((hi.x - lo.x) / resolution).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / resolution).ceil() as usize + 1;
        let segments: Vec<[Point2; 2]> = map.boundary_segments().map(|(a, b)| [a, b]).collect();
        let mut free = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = Point2::new(
                    lo.x + (i as f64 + 0.5) * resolution,
                    lo.y + (j as f64 + 0.5) * resolution,
                );
                free[j * nx + i] = is_free(map, &segments, p, clearance);
            }
        }
        Some(FreeGrid {
            origin: lo,
            resolution,
            nx,
            ny,
            free,
        })
    }

    fn center(&self, c: usize) -> Point2 {
        let (i, j) = (c % self.nx, c / self.nx);
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    fn cell(&self, p: Point2) -> Option<usize> {
        let i = ((p.x - self.origin.x) / self.resolution).floor();
        let j = ((p.y - self.origin.y) / self.resolution).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(j as usize * self.nx + i as usize)
    }

    fn is_free_at(&self, p: Point2) -> bool {
        self.cell(p).is_some_and(|c| self.free[c])
    }

    /// Nearest free cell to `p` within `max_dist`, scanning rings outward.
    fn nearest_free(&self, p: Point2, max_dist: f64) -> Option<usize> {
        let c = self.cell(p)?;
        if self.free[c] {
            return Some(c);
        }
        let (ci, cj) = ((c % self.nx) as i64, (c / self.nx) as i64);
        let rings = (max_dist / self.resolution).ceil() as i64;
        let mut best: Option<(f64, usize)> = None;
        for r in 1..=rings {
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let (i, j) = (ci + di, cj + dj);
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    let k = j as usize * self.nx + i as usize;
                    if !self.free[k] {
                        continue;
                    }
                    let d = self.center(k).distance(p);
                    if d <= max_dist && best.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
                        best = Some((d, k));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, k)| k)
    }

    fn line_of_sight(&self, a: Point2, b: Point2) -> bool {
        let n = ((a.distance(b) / (0.25 * self.resolution)).ceil() as usize).max(1);
        (0..=n).all(|k| self.is_free_at(a.lerp(b, k as f64 / n as f64)))
    }
}

fn is_free(map: &SidewalkMap, segments: &[[Point2; 2]], p: Point2, clearance: f64) -> bool {
    if !map.is_walkable(p) || map.in_obstacle(p, clearance) {
        return false;
    }
    if segments.iter().any(|s| polyline_distance(p, s) < clearance) {
        return false;
    }
    (0..8).all(|k| map.is_walkable(p + Point2::from_polar(clearance, k as f64 * FRAC_PI_4)))
}

/// Shortest collision-free polyline from `start` to `goal` inside the
/// walkable area shrunk by `clearance`.
///
/// Runs an any-angle search over an 8-connected grid of the given
/// resolution; path vertices are cell centres.
/// A start or goal inside the clearance band is attached to the nearest free
/// cell within twice the clearance.
pub fn shortest_path(
    map: &SidewalkMap,
    start: Point2,
    goal: Point2,
    clearance: f64,
    resolution: f64,
) -> Result<Vec<Point2>, PathError> {
    let no_path = PathError::NoPath { start, goal };
    if !map.is_walkable(start) || !map.is_walkable(goal) {
        return Err(no_path);
    }
    let grid = FreeGrid::new(map, clearance, resolution).ok_or_else(|| no_path.clone())?;
    let snap = 2.0 * clearance + resolution;
    let s = grid
        .nearest_free(start, snap)
        .ok_or_else(|| no_path.clone())?;
    let g = grid
        .nearest_free(goal, snap)
        .ok_or_else(|| no_path.clone())?;
    let cells = theta_star(&grid, s, g).ok_or(no_path)?;

    let mut out = Vec::with_capacity(cells.len() + 2);
    out.push(start);
    out.extend(cells.iter().map(|&c| grid.center(c)));
    out.push(goal);
    // Drop the attachment cells when start or goal already see past them.
    if out.len() > 2 && grid.is_free_at(start) && grid.line_of_sight(start, out[2]) {
        out.remove(1);
    }
    let n = out.len();
    if n > 2 && grid.is_free_at(goal) && grid.line_of_sight(out[n - 3], goal) {
        out.remove(n - 2);
    }
    out.dedup();
    Ok(out)
}

/// Lazy Theta*: A* on the grid where a node may take its grandparent as
/// parent whenever the straight segment between them is free, yielding
/// any-angle paths.
fn theta_star(grid: &FreeGrid, start: usize, goal: usize) -> Option<Vec<usize>> {
    let n = grid.free.len();
    let mut cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let goal_p = grid.center(goal);
    let heuristic = |c: usize| grid.center(c).distance(goal_p);
    cost[start] = 0.0;
    parent[start] = start;
    open.push(Reverse((Key(heuristic(start)), start)));
    let (nx, ny) = (grid.nx as i64, grid.ny as i64);
    let neighbours = |c: usize| {
        let (ci, cj) = ((c % grid.nx) as i64, (c / grid.nx) as i64);
        [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ]
        .into_iter()
        .filter_map(move |(di, dj)| {
            let (i, j) = (ci + di, cj + dj);
            if i < 0 || j < 0 || i >= nx || j >= ny {
                return None;
            }
            let k = (j * nx + i) as usize;
            let diagonal = di != 0 && dj != 0;
            let open_move = grid.free[k]
                && (!diagonal
                    || (grid.free[(cj * nx + i) as usize] && grid.free[(j * nx + ci) as usize]));
            open_move.then_some(k)
        })
    };
    while let Some(Reverse((Key(f), c))) = open.pop() {
        if closed[c] || f > cost[c] + heuristic(c) + 1e-9 {
            continue;
        }
        // Lazy check deferred from relaxation: fall back to the best
        // expanded grid neighbour if the parent is not actually visible.
        if !grid.line_of_sight(grid.center(parent[c]), grid.center(c)) {
            let (best_cost, best) = neighbours(c)
                .filter(|&k| closed[k])
                .map(|k| (cost[k] + grid.center(k).distance(grid.center(c)), k))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("an expanded neighbour pushed this node");
            cost[c] = best_cost;
            parent[c] = best;
        }
        closed[c] = true;
        if c == goal {
            let mut path = vec![goal];
            let mut k = goal;
            while k != start {
                k = parent[k];
                path.push(k);
            }
            path.reverse();
            return Some(path);
        }
        let pc = parent[c];
        for k in neighbours(c) {
            if closed[k] {
                continue;
            }
            let next = cost[pc] + grid.center(pc).distance(grid.center(k));
            if next < cost[k] {
                cost[k] = next;
                parent[k] = pc;
                open.push(Reverse((Key(next + heuristic(k)), k)));
            }
        }
    }
    None
}

/// Total order on finite path costs.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
