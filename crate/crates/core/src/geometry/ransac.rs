use nalgebra::{Matrix3, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GeometryError, Plane, Point2, Point3};

/// Fits a plane with RANSAC and refines it by least squares.
///
/// Each iteration samples three points; samples whose spanning cross product
/// is shorter than `1e-9` are rejected and still consume the iteration. The
/// candidate with the most points within `inlier_threshold` wins (first found
/// on ties), is refit by least squares on its inliers, and the returned
/// indices are the points within `inlier_threshold` of the refit plane.
pub fn ransac_plane(
    points: &[Point3],
    inlier_threshold: f64,
    iterations: usize,
    rng_seed: u64,
) -> Result<(Plane, Vec<usize>), GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateInput(
            "plane fit needs at least three points",
        ));
    }
    if !(inlier_threshold > 0.0) || iterations == 0 {
        return Err(GeometryError::DegenerateInput(
            "threshold and iteration count must be positive",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best: Option<(usize, Plane)> = None;
    for _ in 0..iterations {
        let s = sample(&mut rng, points.len(), 3);
        let Some(candidate) =
            Plane::through(points[s.index(0)], points[s.index(1)], points[s.index(2)])
        else {
            continue;
        };
        let count = points
            .iter()
            .filter(|p| candidate.signed_distance(**p).abs() <= inlier_threshold)
            .count();
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, candidate));
        }
    }
    let (_, candidate) = best.ok_or(GeometryError::DegenerateInput(
        "every sampled triple was collinear",
    ))?;
    let winners: Vec<Point3> = points
        .iter()
        .copied()
        .filter(|p| candidate.signed_distance(*p).abs() <= inlier_threshold)
        .collect();
    let plane = least_squares_plane(&winners).unwrap_or(candidate);
    let inliers = inlier_indices(points, &plane, inlier_threshold);
    Ok((plane, inliers))
}

pub(crate) fn inlier_indices(points: &[Point3], plane: &Plane, threshold: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| plane.signed_distance(**p).abs() <= threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Orthogonal-regression plane: through the centroid, normal along the
/// eigenvector of the smallest covariance eigenvalue.
pub(crate) fn least_squares_plane(points: &[Point3]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let c = points.iter().fold(Point3::default(), |acc, p| acc + *p) * (1.0 / n);
    let mut cov = Matrix3::<f64>::zeros();
    for p in points {
        let d = *p - c;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let e = eig.eigenvectors.column(imin);
    // The two larger eigenvalues must span a plane.
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    if sorted[1] <= 1e-18 * sorted[2].max(1e-300) {
        return None;
    }
    Plane::from_normal_and_point(Point3::new(e[0], e[1], e[2]), c)
}

/// Right-handed orthonormal 2D frame embedded in a plane.
///
/// The first axis is world x projected onto the plane (world y when x is
/// parallel to the normal); the second completes `u × v = normal`. The
/// origin is the projection of the world origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneBasis {
    pub origin: Point3,
    pub u: Point3,
    pub v: Point3,
    pub normal: Point3,
}

impl PlaneBasis {
    pub fn new(plane: &Plane) -> Self {
        let n = plane.normal();
        let x = Point3::new(1.0, 0.0, 0.0);
        let u = (x - n * x.dot(n)).normalized().filter(|u| {
            // Reject near-parallel projections.
            (x - n * x.dot(n)).norm() > 1e-6 && u.is_finite()
        });
        let u = u.unwrap_or_else(|| {
            let y = Point3::new(0.0, 1.0, 0.0);
            (y - n * y.dot(n))
                .normalized()
                .expect("normal cannot be parallel to both x and y")
        });
        PlaneBasis {
            origin: n * -plane.offset(),
            u,
            v: n.cross(u),
            normal: n,
        }
    }

    pub fn to_plane(&self, p: Point3) -> Point2 {
        let d = p - self.origin;
        Point2::new(d.dot(self.u), d.dot(self.v))
    }

    pub fn to_world(&self, q: Point2) -> Point3 {
        self.origin + self.u * q.x + self.v * q.y
    }
}

/// Orthogonal projection of `points` onto `plane`, in the plane's basis.
pub fn project_to_plane(points: &[Point3], plane: &Plane) -> Vec<Point2> {
    let basis = PlaneBasis::new(plane);
    points.iter().map(|p| basis.to_plane(*p)).collect()
}
