use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_in_polygon, point_segment_distance, segments_intersect, Point2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("{kind} polygon {index} needs at least three vertices")]
    TooFewVertices { kind: &'static str, index: usize },
    #[error("{kind} polygon {index} is self-intersecting")]
    SelfIntersecting { kind: &'static str, index: usize },
    #[error("obstacle {0} must have a positive radius")]
    BadObstacle(usize),
    #[error("curb {0} needs two points and a positive drop height")]
    BadCurb(usize),
}

/// Disc-shaped static obstacle (post, bin, bench).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

/// Sidewalk edge with the street surface `drop` meters below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curb {
    pub points: Vec<Point2>,
    #[serde(default = "default_drop")]
    pub drop: f64,
}

fn default_drop() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Landmark {
    pub name: String,
    pub position: Point2,
}

/// Static layout of the simulated neighbourhood.
///
/// Sidewalks and crosswalks are walkable at the wheel-contact height; street
/// polygons sit below the adjacent curb. Walls are building faces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SidewalkMap {
    pub sidewalks: Vec<Vec<Point2>>,
    pub crosswalks: Vec<Vec<Point2>>,
    pub streets: Vec<Vec<Point2>>,
    pub curbs: Vec<Curb>,
    pub walls: Vec<Vec<Point2>>,
    pub obstacles: Vec<Disc>,
    pub landmarks: Vec<Landmark>,
}

fn is_simple(poly: &[Point2]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            // Adjacent edges share a vertex by construction.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

impl SidewalkMap {
    pub fn validate(&self) -> Result<(), MapError> {
        for (kind, polys) in [
            ("sidewalk", &self.sidewalks),
            ("crosswalk", &self.crosswalks),
            ("street", &self.streets),
        ] {
            for (index, p) in polys.iter().enumerate() {
                if p.len() < 3 {
                    return Err(MapError::TooFewVertices { kind, index });
                }
                if !is_simple(p) {
                    return Err(MapError::SelfIntersecting { kind, index });
                }
            }
        }
        if let Some(i) = self.obstacles.iter().position(|o| !(o.radius > 0.0)) {
            return Err(MapError::BadObstacle(i));
        }
        if let Some(i) = self
            .curbs
            .iter()
            .position(|c| c.points.len() < 2 || !(c.drop > 0.0))
        {
            return Err(MapError::BadCurb(i));
        }
        Ok(())
    }

    pub fn is_walkable(&self, p: Point2) -> bool {
        self.sidewalks
            .iter()
            .chain(&self.crosswalks)
            .any(|poly| point_in_polygon(p, poly))
    }

    pub fn in_obstacle(&self, p: Point2, inflate: f64) -> bool {
        self.obstacles
            .iter()
            .any(|o| o.center.distance(p) <= o.radius + inflate)
    }

    /// Surface height of the street at `p` relative to the sidewalk, or
    /// `None` when `p` is not on a street. The drop is taken from the
    /// nearest curb.
    pub fn street_height(&self, p: Point2) -> Option<f64> {
        if self.is_walkable(p) || !self.streets.iter().any(|poly| point_in_polygon(p, poly)) {
            return None;
        }
        let drop = self
            .curbs
            .iter()
            .map(|c| (polyline_distance(p, &c.points), c.drop))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or(default_drop(), |(_, d)| d);
        Some(-drop)
    }

    /// Wall and curb segments, the boundaries pedestrians keep away from.
    pub fn boundary_segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.walls
            .iter()
            .chain(self.curbs.iter().map(|c| &c.points))
            .flat_map(|line| line.windows(2).map(|w| (w[0], w[1])))
    }

    /// Whether the straight move `a`-`b` crosses any curb line.
    pub fn crosses_curb(&self, a: Point2, b: Point2) -> bool {
        self.curbs.iter().any(|c| {
            c.points
                .windows(2)
                .any(|w| segments_intersect(a, b, w[0], w[1]))
        })
    }

    /// Bounding box of all walkable polygons as (min, max).
    pub fn walkable_bounds(&self) -> Option<(Point2, Point2)> {
        let mut it = self.sidewalks.iter().chain(&self.crosswalks).flatten();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}

pub fn polyline_distance(p: Point2, line: &[Point2]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => only.distance(p),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]).0)
            .fold(f64::INFINITY, f64::min),
    }
}
