use super::{GeometryError, Line2, Point2};

/// Total-least-squares line: through the centroid along the principal axis
/// of the sample covariance.
pub fn fit_line2(points: &[Point2]) -> Result<Line2, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::DegenerateInput(
            "line fit needs at least two points",
        ));
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Point2::ZERO, |acc, p| acc + *p) * (1.0 / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - centroid;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    if sxx + syy == 0.0 {
        return Err(GeometryError::DegenerateInput("all points coincide"));
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Ok(Line2 {
        point: centroid,
        direction: Point2::new(theta.cos(), theta.sin()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn residual(points: &[Point2], line: &Line2) -> f64 {
        points.iter().map(|p| line.distance(*p).powi(2)).sum()
    }

    #[test]
    fn exact_horizontal_line() {
        let l = fit_line2(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ])
        .unwrap();
        assert_eq!(l.point.y, 0.0);
        assert!((l.direction.x.abs() - 1.0).abs() < 1e-12 && l.direction.y.abs() < 1e-12);
    }

    #[test]
    fn two_points_on_the_diagonal() {
        let l = fit_line2(&[Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((l.direction.x.abs() - h).abs() < 1e-12);
        assert!((l.direction.y.abs() - h).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let p = Point2::new(1.0, 1.0);
        assert!(fit_line2(&[p, p, p]).is_err());
        assert!(fit_line2(&[p]).is_err());
    }

    #[test]
    fn noisy_line_matches_slope_and_brute_force_angle_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let pts: Vec<Point2> = (0..100)
            .map(|i| {
                let x = i as f64 * 0.05;
                Point2::new(x, 2.0 * x + 1.0 + noise.sample(&mut rng))
            })
            .collect();
        let l = fit_line2(&pts).unwrap();
        let angle = l
            .direction
            .y
            .atan2(l.direction.x)
            .rem_euclid(std::f64::consts::PI);
        assert!((angle - 2f64.atan()).abs() < 1f64.to_radians());

        // Independent oracle: scan directions through the centroid.
        let best = (0..180_000)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 180_000.0;
                let cand = Line2 {
                    point: l.point,
                    direction: Point2::from_polar(1.0, a),
                };
                (residual(&pts, &cand), a)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        assert!((best.1 - angle).abs() < 1e-4);
        assert!(residual(&pts, &l) <= best.0 + 1e-12);
    }
}
