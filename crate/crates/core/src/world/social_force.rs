use crate::config::SocialForceParams;
use crate::geometry::{point_segment_distance, Point2, Vec2};

/// Kinematic snapshot of another agent as seen by a walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbour {
    pub position: Point2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// Static surroundings a walker is repelled from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Obstacles<'a> {
    pub segments: &'a [(Point2, Point2)],
    pub discs: &'a [(Point2, f64)],
}

/// The walker whose acceleration is being computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walker {
    pub position: Point2,
    pub velocity: Vec2,
    pub radius: f64,
    pub desired_speed: f64,
    /// Route point currently walked toward, if any.
    pub target: Option<Point2>,
}

/// Acceleration of `walker` under the social force model.
///
/// The sum of relaxation toward the desired velocity, exponential repulsion
/// from neighbours and obstacles, and a sidestep away from predicted close
/// passes, clamped to `max_acceleration`.
pub fn social_force(
    walker: &Walker,
    neighbours: &[Neighbour],
    obstacles: Obstacles<'_>,
    params: &SocialForceParams,
) -> Vec2 {
    let mut acc = Vec2::ZERO;

    let desired = walker
        .target
        .and_then(|t| (t - walker.position).normalized())
        .map_or(Vec2::ZERO, |e| e * walker.desired_speed);
    acc += (desired - walker.velocity) * (1.0 / params.tau);

    let heading = walker
        .velocity
        .normalized()
        .or_else(|| desired.normalized());

    for n in neighbours {
        let offset = walker.position - n.position;
        let dist = offset.norm();
        if dist > params.neighbour_cutoff || dist == 0.0 {
            continue;
        }
        let reach = walker.radius + n.radius;
        let push = params.neighbour_strength * ((reach - dist) / params.neighbour_range).exp();
        acc += offset * (push / dist);
        acc += sidestep(walker, n, heading, params);
    }

    for &(a, b) in obstacles.segments {
        let (dist, closest) = point_segment_distance(walker.position, a, b);
        if dist > params.obstacle_cutoff || dist == 0.0 {
            continue;
        }
        let push =
            params.obstacle_strength * ((walker.radius - dist) / params.obstacle_range).exp();
        acc += (walker.position - closest) * (push / dist);
    }
    for &(center, radius) in obstacles.discs {
        let offset = walker.position - center;
        let dist = offset.norm() - radius;
        if dist > params.obstacle_cutoff || offset.norm() == 0.0 {
            continue;
        }
        let push =
            params.obstacle_strength * ((walker.radius - dist) / params.obstacle_range).exp();
        acc += offset * (push / offset.norm());
    }

    let mag = acc.norm();
    if mag > params.max_acceleration {
        acc = acc * (params.max_acceleration / mag);
    }
    acc
}

fn sidestep(
    walker: &Walker,
    n: &Neighbour,
    heading: Option<Vec2>,
    params: &SocialForceParams,
) -> Vec2 {
    let Some(heading) = heading else {
        return Vec2::ZERO;
    };
    let rel_pos = n.position - walker.position;
    let closing = walker.velocity - n.velocity;
    let closing_sq = closing.norm_squared();
    if closing_sq < 1e-12 || rel_pos.dot(heading) <= 0.0 {
        return Vec2::ZERO;
    }
    let t_closest = rel_pos.dot(closing) / closing_sq;
    if t_closest <= 0.0 || t_closest > params.anticipation_time {
        return Vec2::ZERO;
    }
    let miss = rel_pos - closing * t_closest;
    let pass_radius = walker.radius + n.radius + params.anticipation_margin;
    let miss_dist = miss.norm();
    if miss_dist >= pass_radius {
        return Vec2::ZERO;
    }
    let right = -heading.perp();
    let side = if miss.dot(right) > 0.0 { -1.0 } else { 1.0 };
    right * (side * params.sidestep * (1.0 - miss_dist / pass_radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walker(position: Point2, velocity: Vec2, target: Point2, desired_speed: f64) -> Walker {
        Walker {
            position,
            velocity,
            radius: 0.3,
            desired_speed,
            target: Some(target),
        }
    }

    #[test]
    fn equilibrium_has_zero_acceleration() {
        let w = walker(
            Point2::ZERO,
            Vec2::new(1.2, 0.0),
            Point2::new(10.0, 0.0),
            1.2,
        );
        let a = social_force(&w, &[], Obstacles::default(), &SocialForceParams::default());
        assert_eq!(a, Vec2::ZERO);
    }

    #[test]
    fn starting_acceleration_is_speed_over_tau() {
        let w = walker(Point2::ZERO, Vec2::ZERO, Point2::new(10.0, 0.0), 1.47);
        let p = SocialForceParams::default();
        let a = social_force(&w, &[], Obstacles::default(), &p);
        // (1.47 - 0) / 0.5, below the 5 m/s² cap.
        assert!((a.x - 2.94).abs() < 1e-12 && a.y == 0.0);

        let tight = SocialForceParams {
            max_acceleration: 2.0,
            ..p
        };
        let a = social_force(&w, &[], Obstacles::default(), &tight);
        assert!((a.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_neighbours_cancel_laterally() {
        let w = walker(
            Point2::ZERO,
            Vec2::new(1.0, 0.0),
            Point2::new(10.0, 0.0),
            1.0,
        );
        let side = |y: f64| Neighbour {
            position: Point2::new(0.0, y),
            velocity: Vec2::new(1.0, 0.0),
            radius: 0.3,
        };
        let a = social_force(
            &w,
            &[side(1.0), side(-1.0)],
            Obstacles::default(),
            &SocialForceParams::default(),
        );
        assert!(a.y.abs() < 1e-12);
    }

    #[test]
    fn oncoming_walker_triggers_a_step_to_the_right() {
        let w = walker(
            Point2::ZERO,
            Vec2::new(1.0, 0.0),
            Point2::new(10.0, 0.0),
            1.0,
        );
        let oncoming = Neighbour {
            position: Point2::new(3.0, 0.0),
            velocity: Vec2::new(-1.0, 0.0),
            radius: 0.3,
        };
        let a = social_force(
            &w,
            &[oncoming],
            Obstacles::default(),
            &SocialForceParams::default(),
        );
        assert!(a.y < -0.5, "expected a push to the right, got {a:?}");
    }

    #[test]
    fn walker_dodges_left_around_an_obstacle_already_on_its_right() {
        let w = walker(
            Point2::ZERO,
            Vec2::new(1.0, 0.0),
            Point2::new(10.0, 0.0),
            1.0,
        );
        let parked = Neighbour {
            position: Point2::new(3.0, -0.3),
            velocity: Vec2::ZERO,
            radius: 0.4,
        };
        let a = social_force(
            &w,
            &[parked],
            Obstacles::default(),
            &SocialForceParams::default(),
        );
        assert!(a.y > 0.0);
    }

    #[test]
    fn walls_push_away() {
        let w = walker(
            Point2::new(0.0, 0.4),
            Vec2::new(1.0, 0.0),
            Point2::new(10.0, 0.4),
            1.0,
        );
        let wall = [(Point2::new(-5.0, 0.0), Point2::new(5.0, 0.0))];
        let a = social_force(
            &w,
            &[],
            Obstacles {
                segments: &wall,
                discs: &[],
            },
            &SocialForceParams::default(),
        );
        assert!(a.y > 0.0 && a.x.abs() < 1e-12);
    }
}
