//! Curb detection from a 3D point cloud and the parallel-line subgoal used
//! when no pedestrians are available to follow.

use thiserror::Error;

use crate::config::CurbParams;
use crate::geometry::{
    concave_hull, fit_line2, kd_nearest, ransac_plane, GeometryError, KdTree2, Line2, PlaneBasis,
    Point2, Point3,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurbError {
    #[error("no curb: only {found} returns below the wheel plane, {needed} needed")]
    TooFewPoints { found: usize, needed: usize },
    #[error("no curb: {0}")]
    Degenerate(#[from] GeometryError),
    #[error("no curb: fewer than two boundary points near the robot")]
    NoBoundaryNearby,
}

/// Returns strictly below the wheel-contact plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilteredCloud {
    points: Vec<Point3>,
}

impl FilteredCloud {
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Keeps the points with `z < -epsilon`, the wheel-contact plane being
/// `z = 0`.
pub fn height_filter(cloud: &[Point3], epsilon: f64) -> FilteredCloud {
    FilteredCloud {
        points: cloud.iter().copied().filter(|p| p.z < -epsilon).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurbEstimate {
    /// Concave hull of the lowered surface, in the horizontal frame of the
    /// input cloud.
    pub hull: Vec<Point2>,
    /// Hull points the curb line was fit to, closest to the robot first.
    pub boundary: Vec<Point2>,
    pub curb_line: Line2,
    pub subgoal: Point2,
}

/// Estimates the curb and the subgoal on the line through the robot
/// parallel to it.
///
/// The lowered surface is found with RANSAC, its inliers are projected onto
/// the fitted plane and outlined with a concave hull. The hull points within
/// `window` of the robot, at most `k_nearest` of them, define the curb line.
/// The subgoal sits `lookahead` ahead of the robot along the curb, on the
/// side of the waypoint. All positions are in the frame of `cloud`.
pub fn estimate_curb(
    cloud: &FilteredCloud,
    robot: Point2,
    waypoint: Point2,
    params: &CurbParams,
    seed: u64,
) -> Result<CurbEstimate, CurbError> {
    let needed = params.min_points.max(3);
    if cloud.len() < needed {
        return Err(CurbError::TooFewPoints {
            found: cloud.len(),
            needed,
        });
    }
    let (plane, inliers) = ransac_plane(
        cloud.points(),
        params.ransac_threshold,
        params.ransac_iterations,
        seed,
    )?;
    let basis = PlaneBasis::new(&plane);
    let projected: Vec<Point2> = inliers
        .iter()
        .map(|&i| basis.to_plane(cloud.points()[i]))
        .collect();
    let hull_in_plane = concave_hull(&projected, params.alpha)?;
    let hull: Vec<Point2> = hull_in_plane
        .iter()
        .map(|q| basis.to_world(*q).xy())
        .collect();

    let near: Vec<Point2> = hull
        .iter()
        .copied()
        .filter(|p| p.distance(robot) <= params.window)
        .collect();
    if near.len() < 2 {
        return Err(CurbError::NoBoundaryNearby);
    }
    let tree = KdTree2::new(near);
    let boundary = kd_nearest(&tree, robot, params.k_nearest.max(2));
    let fitted = fit_line2(&boundary)?;

    let mut dir = fitted.direction;
    if dir.dot(waypoint - robot) < 0.0 {
        dir = -dir;
    }
    Ok(CurbEstimate {
        hull,
        boundary,
        curb_line: Line2 {
            point: fitted.point,
            direction: dir,
        },
        subgoal: robot + dir * params.lookahead,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Robot-local cloud of a sidewalk with the street below `y < curb_y`,
    /// sampled on a 0.3 m lattice within 6 m, rotated by `angle`.
    fn straight_curb_cloud(curb_y: f64, angle: f64) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in -20..=20 {
            for j in -20..=20 {
                let p = Point2::new(i as f64 * 0.3, j as f64 * 0.3);
                if p.norm() > 6.0 {
                    continue;
                }
                let z = if p.y < curb_y { -0.1 } else { 0.0 };
                let q = p.rotated(angle);
                pts.push(Point3::new(q.x, q.y, z));
            }
        }
        pts
    }

    fn angle_between(a: Point2, b: Point2) -> f64 {
        a.cross(b).atan2(a.dot(b)).abs()
    }

    #[test]
    fn height_filter_is_strict() {
        let cloud = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, -0.05),
            Point3::new(2.0, 0.0, -0.12),
        ];
        let s = height_filter(&cloud, 0.02);
        assert_eq!(s.points(), &cloud[1..]);
        assert!(height_filter(&[], 0.02).is_empty());
        assert!(height_filter(&[Point3::new(1.0, 1.0, 0.0); 5], 0.02).is_empty());
        assert!(height_filter(&[Point3::new(1.0, 1.0, -0.02)], 0.02).is_empty());
    }

    #[test]
    fn straight_curb_gives_parallel_subgoal() {
        let s = height_filter(&straight_curb_cloud(-1.5, 0.0), 0.02);
        let p = CurbParams::default();
        let est = estimate_curb(&s, Point2::ZERO, Point2::new(20.0, 0.0), &p, 1).unwrap();
        assert!(angle_between(est.curb_line.direction, Point2::new(1.0, 0.0)) < 2f64.to_radians());
        assert!((est.subgoal.norm() - p.lookahead).abs() < 1e-12);
        assert!(est.subgoal.x > 0.0);
        assert!(est.curb_line.direction.cross(est.subgoal).abs() < 1e-9 * p.lookahead);
        // The boundary used for the line is the curb edge, not the range limit.
        assert!(est.boundary.iter().all(|q| q.y < -1.5 && q.y > -1.9));
    }

    #[test]
    fn rotated_curb_rotates_the_subgoal() {
        let angle = 30f64.to_radians();
        let s = height_filter(&straight_curb_cloud(-1.5, angle), 0.02);
        let waypoint = Point2::from_polar(20.0, angle);
        let est = estimate_curb(&s, Point2::ZERO, waypoint, &CurbParams::default(), 1).unwrap();
        assert!(angle_between(est.subgoal, Point2::from_polar(1.0, angle)) < 2f64.to_radians());
    }

    #[test]
    fn waypoint_behind_flips_direction() {
        let s = height_filter(&straight_curb_cloud(-1.5, 0.0), 0.02);
        let est = estimate_curb(
            &s,
            Point2::ZERO,
            Point2::new(-20.0, 3.0),
            &CurbParams::default(),
            1,
        )
        .unwrap();
        assert!(est.subgoal.x < -2.9);
    }

    #[test]
    fn sparse_street_is_no_curb() {
        let s = height_filter(&straight_curb_cloud(-5.9, 0.0), 0.02);
        assert!(s.len() < 30);
        let r = estimate_curb(
            &s,
            Point2::ZERO,
            Point2::new(20.0, 0.0),
            &CurbParams::default(),
            1,
        );
        assert!(matches!(r, Err(CurbError::TooFewPoints { .. })));
    }

    #[test]
    fn perpendicular_distance_is_preserved() {
        let s = height_filter(&straight_curb_cloud(-1.5, 0.0), 0.02);
        let robot = Point2::new(0.4, 0.2);
        let est =
            estimate_curb(&s, robot, Point2::new(20.0, 0.0), &CurbParams::default(), 3).unwrap();
        let (dr, ds) = (
            est.curb_line.distance(robot),
            est.curb_line.distance(est.subgoal),
        );
        assert!((dr - ds).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn rigid_motion_equivariance(angle in -3.1f64..3.1, tx in -50.0f64..50.0, ty in -50.0f64..50.0) {
            let base = straight_curb_cloud(-1.7, 0.2);
            let waypoint = Point2::new(15.0, 4.0);
            let p = CurbParams::default();
            let a = estimate_curb(&height_filter(&base, 0.02), Point2::ZERO, waypoint, &p, 5).unwrap();

            let t = Point2::new(tx, ty);
            let moved: Vec<Point3> = base
                .iter()
                .map(|q| {
                    let r = q.xy().rotated(angle) + t;
                    Point3::new(r.x, r.y, q.z)
                })
                .collect();
            let b = estimate_curb(&height_filter(&moved, 0.02), t, waypoint.rotated(angle) + t, &p, 5).unwrap();
            prop_assert!((a.subgoal.rotated(angle) + t - b.subgoal).norm() < 1e-6);
            prop_assert!((a.curb_line.direction.rotated(angle) - b.curb_line.direction).norm() < 1e-6);
            prop_assert!((a.curb_line.point.rotated(angle) + t - b.curb_line.point).norm() < 1e-6);
        }
    }
}
