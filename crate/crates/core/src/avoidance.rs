//! Local collision avoidance: a sampled-trajectory policy mapping the robot
//! and agent state to a velocity command, keeping to the right and passing
//! oncoming pedestrians on the left.

use thiserror::Error;

use crate::config::AvoidanceParams;
use crate::geometry::{resample_polyline, Point2, Vec2};
use crate::world::Pose;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Point2,
    pub velocity: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavState {
    pub robot_pose: Pose,
    /// Current linear velocity (m/s).
    pub robot_speed: f64,
    pub robot_radius: f64,
    pub v_max: f64,
    /// Observed pedestrians, nearest first.
    pub agents: Vec<AgentState>,
    /// Static obstacles as stationary pseudo-pedestrians, nearest first.
    pub statics: Vec<AgentState>,
    pub subgoal: Point2,
}

impl NavState {
    /// Builds a state with pedestrians of radius `agent_radius`, sorted by
    /// distance to the robot (stable for equal distances).
    pub fn new(
        robot_pose: Pose,
        robot_speed: f64,
        robot_radius: f64,
        v_max: f64,
        pedestrians: &[(Point2, Vec2)],
        agent_radius: f64,
        subgoal: Point2,
    ) -> Self {
        let mut agents: Vec<AgentState> = pedestrians
            .iter()
            .map(|&(position, velocity)| AgentState {
                position,
                velocity,
                radius: agent_radius,
            })
            .collect();
        sort_by_distance(&mut agents, robot_pose.position());
        NavState {
            robot_pose,
            robot_speed,
            robot_radius,
            v_max,
            agents,
            statics: Vec::new(),
            subgoal,
        }
    }
}

fn sort_by_distance(list: &mut [AgentState], from: Point2) {
    list.sort_by(|a, b| {
        a.position
            .distance_squared(from)
            .total_cmp(&b.position.distance_squared(from))
    });
}

/// Adds stationary pseudo-pedestrians along the curb and at scanned
/// obstacle points.
///
/// `curb_points` is an ordered polyline resampled every `static_spacing`
/// meters of arc length. `scan_obstacles` is an unordered set, thinned so
/// that kept points are at least `static_spacing` apart (first come first
/// kept). Observed pedestrians are left untouched.
pub fn inject_statics(
    mut state: NavState,
    curb_points: &[Point2],
    scan_obstacles: &[Point2],
    params: &AvoidanceParams,
) -> NavState {
    let spacing = params.static_spacing;
    let mut added: Vec<Point2> = if curb_points.len() >= 2 {
        resample_polyline(curb_points, spacing)
    } else {
        curb_points.to_vec()
    };
    let mut kept: Vec<Point2> = Vec::new();
    let min_sq = (spacing * (1.0 - 1e-9)).powi(2);
    for &p in scan_obstacles {
        if kept.iter().all(|q| q.distance_squared(p) >= min_sq) {
            kept.push(p);
        }
    }
    added.extend(kept);
    state
        .statics
        .extend(added.into_iter().map(|position| AgentState {
            position,
            velocity: Vec2::ZERO,
            radius: params.static_radius,
        }));
    sort_by_distance(&mut state.statics, state.robot_pose.position());
    state
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavAction {
    /// Linear velocity (m/s).
    pub linear: f64,
    /// Angular velocity (rad/s), positive counter-clockwise.
    pub angular: f64,
}

impl NavAction {
    pub const STOP: NavAction = NavAction {
        linear: 0.0,
        angular: 0.0,
    };
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("every candidate action leads into a predicted collision")]
pub struct AllBlocked;

/// The sampled action grid in canonical order: linear velocity descending,
/// then angular velocity by magnitude ascending with the clockwise turn
/// first.
pub fn candidate_actions(v_max: f64, params: &AvoidanceParams) -> Vec<NavAction> {
    let nv = params.linear_samples.max(1);
    let nw = params.angular_samples.max(1);
    let linear: Vec<f64> = (0..nv)
        .rev()
        .map(|i| {
            if nv == 1 {
                v_max
            } else {
                v_max * i as f64 / (nv - 1) as f64
            }
        })
        .collect();
    let mut angular: Vec<f64> = (0..nw)
        .map(|j| {
            if nw == 1 {
                0.0
            } else {
                params.max_angular_velocity * (2.0 * j as f64 / (nw - 1) as f64 - 1.0)
            }
        })
        .collect();
    angular.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    linear
        .iter()
        .flat_map(|&v| {
            angular.iter().map(move |&w| NavAction {
                linear: v,
                angular: w,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub action: NavAction,
    pub feasible: bool,
    pub score: f64,
    /// Smallest predicted gap to any agent beyond its safety radius.
    /// Obstacles that stay outside their safety radius of the rollout's
    /// bounding box are not counted.
    pub min_margin: f64,
}

/// Poses of a constant-command unicycle rollout, starting pose included.
pub fn rollout(pose: Pose, action: NavAction, params: &AvoidanceParams) -> Vec<Pose> {
    let steps = (params.horizon / params.rollout_dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = pose;
    out.push(p);
    for _ in 0..steps {
        let (s, c) = p.heading.sin_cos();
        p.x += action.linear * c * params.rollout_dt;
        p.y += action.linear * s * params.rollout_dt;
        p.heading += action.angular * params.rollout_dt;
        out.push(p);
    }
    out
}

/// Scores every candidate action against constant-velocity agent
/// predictions.
///
/// A candidate is infeasible when, at some rollout step, the robot is
/// inside an agent's safety radius and getting closer. Feasible candidates
/// score the best approach to the subgoal, a small facing bonus, and
/// penalties for passing oncoming pedestrians on the wrong side or too
/// close, and for ending left of the robot-subgoal line.
pub fn score_candidates(state: &NavState, params: &AvoidanceParams) -> Vec<CandidateScore> {
    let origin = state.robot_pose.position();
    let travel = (state.subgoal - origin)
        .normalized()
        .unwrap_or_else(|| state.robot_pose.heading_vector());
    let reach = state.v_max * params.horizon;

    // Agents that cannot come within their safety radius or social range
    // during the horizon are irrelevant.
    let relevant: Vec<(AgentState, f64, bool)> = state
        .agents
        .iter()
        .map(|a| (*a, false))
        .chain(state.statics.iter().map(|a| (*a, true)))
        .filter_map(|(a, is_static)| {
            let r_safe = state.robot_radius + a.radius + params.safety_margin;
            let bound = a.position.distance(origin) - reach - a.velocity.norm() * params.horizon;
            let range = if is_static {
                r_safe
            } else {
                r_safe.max(params.interaction_range)
            };
            (bound <= range).then_some((a, r_safe, is_static))
        })
        .collect();

    candidate_actions(state.v_max, params)
        .into_iter()
        .map(|action| {
            let poses = rollout(state.robot_pose, action, params);
            let (lo, hi) = poses.iter().fold(
                (
                    Point2::new(f64::INFINITY, f64::INFINITY),
                    Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
                ),
                |(lo, hi), p| {
                    (
                        Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                        Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
                    )
                },
            );
            let mut feasible = true;
            let mut min_margin = f64::INFINITY;
            let mut pass_penalty = 0.0;
            for (a, r_safe, is_static) in &relevant {
                if *is_static {
                    let dx = (lo.x - a.position.x).max(a.position.x - hi.x).max(0.0);
                    let dy = (lo.y - a.position.y).max(a.position.y - hi.y).max(0.0);
                    if dx.hypot(dy) >= *r_safe {
                        continue;
                    }
                }
                let mut prev = a.position.distance(origin);
                let mut closest = (prev, 0usize);
                for (k, pose) in poses.iter().enumerate().skip(1) {
                    let predicted = a.position + a.velocity * (k as f64 * params.rollout_dt);
                    let d = predicted.distance(pose.position());
                    if d < *r_safe && d < prev {
                        feasible = false;
                    }
                    if d < closest.0 {
                        closest = (d, k);
                    }
                    prev = d;
                }
                min_margin = min_margin.min(closest.0 - r_safe);
                let oncoming = !is_static && a.velocity.dot(travel) < -params.oncoming_min_speed;
                if oncoming && closest.0 <= params.interaction_range {
                    let k = closest.1;
                    let pose = poses[k];
                    let predicted = a.position + a.velocity * (k as f64 * params.rollout_dt);
                    let left = pose.heading_vector().cross(predicted - pose.position());
                    pass_penalty += params.pass_weight * (params.pass_clearance - left).max(0.0);
                }
            }

            let (best_k, best_d) = poses
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, p)| (k, p.position().distance(state.subgoal)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, (k, d)| if d < acc.1 { (k, d) } else { acc },
                );
            let progress = origin.distance(state.subgoal) - best_d;
            let at_best = poses[best_k];
            let facing = (state.subgoal - at_best.position())
                .normalized()
                .map_or(1.0, |dir| at_best.heading_vector().dot(dir));
            let end = poses[poses.len() - 1].position();
            let left_of_line = travel.cross(end - origin).max(0.0);

            let score = params.progress_weight * progress + params.heading_weight * facing
                - pass_penalty
                - params.left_weight * left_of_line;
            CandidateScore {
                action,
                feasible,
                score,
                min_margin,
            }
        })
        .collect()
}

/// Best feasible action; ties go to the earliest candidate in canonical
/// order.
pub fn policy(state: &NavState, params: &AvoidanceParams) -> Result<NavAction, AllBlocked> {
    let mut best: Option<&CandidateScore> = None;
    let scores = score_candidates(state, params);
    for c in scores.iter().filter(|c| c.feasible) {
        if best.is_none_or(|b| c.score > b.score) {
            best = Some(c);
        }
    }
    best.map(|c| c.action).ok_or(AllBlocked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AvoidanceParams {
        AvoidanceParams::default()
    }

    fn state(pedestrians: &[(Point2, Vec2)], subgoal: Point2) -> NavState {
        NavState::new(Pose::default(), 0.0, 0.4, 0.8, pedestrians, 0.3, subgoal)
    }

    #[test]
    fn candidate_order() {
        let c = candidate_actions(0.8, &params());
        assert_eq!(c.len(), 231);
        assert_eq!(
            c[0],
            NavAction {
                linear: 0.8,
                angular: 0.0
            }
        );
        assert!((c[1].angular + 0.1).abs() < 1e-12 && (c[2].angular - 0.1).abs() < 1e-12);
        assert_eq!(c[230].linear, 0.0);
        assert!(c
            .iter()
            .all(|a| (0.0..=0.8).contains(&a.linear) && a.angular.abs() <= 1.0));
    }

    #[test]
    fn free_space_goes_straight_at_full_speed() {
        let a = policy(&state(&[], Point2::new(10.0, 0.0)), &params()).unwrap();
        assert_eq!(
            a,
            NavAction {
                linear: 0.8,
                angular: 0.0
            }
        );
    }

    #[test]
    fn empty_obstacle_lists_leave_state_unchanged() {
        let s = state(
            &[(Point2::new(3.0, 1.0), Vec2::ZERO)],
            Point2::new(5.0, 0.0),
        );
        assert_eq!(inject_statics(s.clone(), &[], &[], &params()), s);
    }

    #[test]
    fn wall_points_at_static_spacing_all_become_statics() {
        let wall: Vec<Point2> = (0..10).map(|i| Point2::new(i as f64 * 0.5, 2.0)).collect();
        let s = inject_statics(state(&[], Point2::new(5.0, 0.0)), &[], &wall, &params());
        assert_eq!(s.statics.len(), 10);
        assert!(s
            .statics
            .iter()
            .all(|a| a.velocity == Vec2::ZERO && a.radius == 0.1));
    }

    #[test]
    fn ten_meter_curb_gives_twenty_one_statics() {
        let curb = [Point2::new(0.0, -1.5), Point2::new(10.0, -1.5)];
        let s = inject_statics(state(&[], Point2::new(5.0, 0.0)), &curb, &[], &params());
        assert_eq!(s.statics.len(), 21);
        let d: Vec<f64> = s.statics.iter().map(|a| a.position.norm()).collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }

    fn head_on_action(mirror: bool) -> NavAction {
        let flip = |p: Point2| if mirror { Point2::new(p.x, -p.y) } else { p };
        let s = state(
            &[(flip(Point2::new(6.0, 0.05)), Vec2::new(-1.3, 0.0))],
            flip(Point2::new(10.0, 0.0)),
        );
        policy(&s, &params()).unwrap()
    }

    #[test]
    fn oncoming_pedestrian_is_kept_on_the_left() {
        let p = params();
        let s = state(
            &[(Point2::new(6.0, 0.0), Vec2::new(-1.3, 0.0))],
            Point2::new(10.0, 0.0),
        );
        let a = policy(&s, &p).unwrap();
        // Forward-simulate the chosen action at a finer step as the check.
        let fine = AvoidanceParams {
            rollout_dt: 0.01,
            ..p.clone()
        };
        let poses = rollout(s.robot_pose, a, &fine);
        let (k, _) = poses
            .iter()
            .enumerate()
            .map(|(k, q)| {
                (
                    k,
                    (Point2::new(6.0 - 1.3 * k as f64 * 0.01, 0.0)).distance(q.position()),
                )
            })
            .fold(
                (0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
        let q = poses[k];
        let ped = Point2::new(6.0 - 1.3 * k as f64 * 0.01, 0.0);
        assert!(
            q.heading_vector().cross(ped - q.position()) > 0.0,
            "action {a:?}"
        );
        assert!(a.angular < 0.0);
    }

    #[test]
    fn mirror_symmetry_is_broken_only_by_social_rules() {
        let a = head_on_action(false);
        let b = head_on_action(true);
        assert!(a.angular < 0.0 && b.angular < 0.0, "{a:?} {b:?}");
        assert_ne!(a.angular, -b.angular);

        let free = policy(&state(&[], Point2::new(10.0, 0.0)), &params()).unwrap();
        let mirrored = policy(&state(&[], Point2::new(10.0, -0.0)), &params()).unwrap();
        assert_eq!(free.angular, 0.0);
        assert_eq!(free, mirrored);
    }

    #[test]
    fn steers_around_a_static_pedestrian_just_ahead() {
        let p = params();
        let s = inject_statics(
            state(&[], Point2::new(5.0, 0.0)),
            &[],
            &[Point2::new(1.0, 0.0)],
            &p,
        );
        let scores = score_candidates(&s, &p);
        let a = policy(&s, &p).unwrap();
        assert!(a.linear > 0.0 && a.angular != 0.0, "{a:?}");

        // Oracle: exhaustive maximum over the feasible grid.
        let best = scores
            .iter()
            .filter(|c| c.feasible)
            .map(|c| c.score)
            .fold(f64::NEG_INFINITY, f64::max);
        let chosen = scores.iter().find(|c| c.action == a).unwrap();
        assert_eq!(chosen.score, best);

        // Fine-step simulation of the chosen action never enters r_safe.
        let r_safe = 0.4 + 0.1 + 0.2;
        let fine = AvoidanceParams {
            rollout_dt: 0.005,
            ..p
        };
        let min = rollout(s.robot_pose, a, &fine)
            .iter()
            .map(|q| q.position().distance(Point2::new(1.0, 0.0)))
            .fold(f64::INFINITY, f64::min);
        assert!(min > r_safe, "clearance {min}");
    }

    #[test]
    fn boxed_in_robot_is_blocked() {
        let p = params();
        let ring: Vec<(Point2, Vec2)> = (0..12)
            .map(|i| {
                let pos = Point2::from_polar(1.5, i as f64 * std::f64::consts::PI / 6.0);
                (pos, -pos * (1.0 / 1.5))
            })
            .collect();
        assert_eq!(
            policy(&state(&ring, Point2::new(5.0, 0.0)), &p),
            Err(AllBlocked)
        );
    }

    #[test]
    fn subgoal_behind_turns_in_place() {
        let a = policy(&state(&[], Point2::new(-5.0, 0.0)), &params()).unwrap();
        assert!(a.angular != 0.0);
    }

    #[test]
    fn selected_rollout_respects_safety_radius() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = params();
        for _ in 0..200 {
            let peds: Vec<(Point2, Vec2)> = (0..rng.random_range(0..6))
                .map(|_| {
                    (
                        Point2::new(rng.random_range(-6.0..8.0), rng.random_range(-4.0..4.0)),
                        Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
                    )
                })
                .filter(|(q, _)| q.norm() > 1.0)
                .collect();
            let s = state(&peds, Point2::new(6.0, rng.random_range(-2.0..2.0)));
            let Ok(a) = policy(&s, &p) else { continue };
            assert!((0.0..=0.8).contains(&a.linear) && a.angular.abs() <= 1.0);
            assert_eq!(policy(&s, &p), Ok(a));
            let poses = rollout(s.robot_pose, a, &p);
            for ag in &s.agents {
                let mut prev = ag.position.norm();
                for (k, q) in poses.iter().enumerate().skip(1) {
                    let d = (ag.position + ag.velocity * (k as f64 * 0.1)).distance(q.position());
                    assert!(!(d < 0.9 && d < prev));
                    prev = d;
                }
            }
        }
    }
}
