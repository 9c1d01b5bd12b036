//! Deterministic 2D simulation: map, social-force pedestrians, unicycle
//! robot and simulated sensors.

mod map;
mod path;
mod social_force;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{Params, SensorParams, SocialForceParams};
use crate::geometry::{resample_polyline, Point2, Point3, Vec2};

pub use map::{polyline_distance, Curb, Disc, Landmark, MapError, SidewalkMap};
pub use path::{shortest_path, PathError};
pub use social_force::{social_force, Neighbour, Obstacles, Walker};

/// Height at which walls and obstacles are sampled in the point cloud (m).
const OBSTACLE_RETURN_HEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from world x.
    pub heading: f64,
}

impl Pose {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn heading_vector(&self) -> Vec2 {
        Vec2::new(self.heading.cos(), self.heading.sin())
    }

    /// Expresses a world point in this pose's frame (x forward, y left).
    pub fn to_local(&self, p: Point2) -> Point2 {
        (p - self.position()).rotated(-self.heading)
    }

    pub fn to_world(&self, p: Point2) -> Point2 {
        p.rotated(self.heading) + self.position()
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub linear_velocity: f64,
    pub angular_velocity: f64,
    pub radius: f64,
    pub v_max: f64,
}

impl RobotState {
    pub fn new(pose: Pose, radius: f64, v_max: f64) -> Self {
        RobotState {
            pose,
            linear_velocity: 0.0,
            angular_velocity: 0.0,
            radius,
            v_max,
        }
    }

    pub fn position(&self) -> Point2 {
        self.pose.position()
    }

    pub fn velocity(&self) -> Vec2 {
        self.pose.heading_vector() * self.linear_velocity
    }

    /// Sets the velocity command, clamping the linear part to `±v_max`.
    pub fn command(&mut self, linear: f64, angular: f64) {
        self.linear_velocity = linear.clamp(-self.v_max, self.v_max);
        self.angular_velocity = angular;
    }

    /// Unicycle update using the heading at the start of the step.
    pub fn advance(&mut self, dt: f64) {
        let (s, c) = self.pose.heading.sin_cos();
        self.pose.x += self.linear_velocity * c * dt;
        self.pose.y += self.linear_velocity * s * dt;
        self.pose.heading = wrap_angle(self.pose.heading + self.angular_velocity * dt);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPedestrian {
    pub id: u32,
    pub position: Point2,
    pub velocity: Vec2,
    pub desired_speed: f64,
    pub route: Vec<Point2>,
    /// Index of the route point currently walked toward.
    pub route_index: usize,
    /// Whether the route restarts from its first point when finished.
    pub cyclic: bool,
    pub radius: f64,
}

impl SimPedestrian {
    pub fn target(&self) -> Option<Point2> {
        self.route.get(self.route_index).copied()
    }
}

/// A pedestrian that enters the world at `spawn_time` and, if set, leaves
/// at `despawn_time` regardless of route progress.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledPedestrian {
    pub spawn_time: f64,
    pub despawn_time: Option<f64>,
    pub pedestrian: SimPedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub id: u32,
    pub position: Point2,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub timestamp: f64,
    /// Returns in the robot frame (x forward, y left, z up from the wheel
    /// contact plane).
    pub cloud: Vec<Point3>,
    /// Pedestrians in view, world frame, ascending id.
    pub detections: Vec<Detection>,
}

/// Quantities measured from the simulator state rather than from sensing.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Smallest robot-pedestrian gap (centre distance minus both radii)
    /// over continuous motion within each step.
    pub min_clearance: f64,
    /// Number of times a pedestrian came into contact with the robot.
    pub collisions: usize,
    pub curb_crossings: usize,
    pub distance_travelled: f64,
}

impl Default for GroundTruth {
    fn default() -> Self {
        GroundTruth {
            min_clearance: f64::INFINITY,
            collisions: 0,
            curb_crossings: 0,
            distance_travelled: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    map: SidewalkMap,
    time: f64,
    robot: Option<RobotState>,
    pedestrians: Vec<SimPedestrian>,
    despawn_at: Vec<Option<f64>>,
    pending: Vec<ScheduledPedestrian>,
    social: SocialForceParams,
    sensor: SensorParams,
    rng: ChaCha8Rng,
    truth: GroundTruth,
    in_contact: BTreeSet<u32>,
    segments: Vec<(Point2, Point2)>,
    discs: Vec<(Point2, f64)>,
    static_returns: Vec<Point2>,
}

impl World {
    pub fn new(
        map: SidewalkMap,
        robot: Option<RobotState>,
        mut schedule: Vec<ScheduledPedestrian>,
        params: &Params,
        seed: u64,
    ) -> Self {
        // Popped from the back, so latest first.
        schedule.sort_by(|a, b| {
            b.spawn_time
                .total_cmp(&a.spawn_time)
                .then(b.pedestrian.id.cmp(&a.pedestrian.id))
        });
        let segments: Vec<_> = map.boundary_segments().collect();
        let discs: Vec<_> = map.obstacles.iter().map(|o| (o.center, o.radius)).collect();
        let spacing = params.sensor.cloud_spacing;
        let mut static_returns = Vec::new();
        for wall in &map.walls {
            static_returns.extend(resample_polyline(wall, spacing));
        }
        for o in &map.obstacles {
            let n = ((2.0 * PI * o.radius / spacing).ceil() as usize).max(8);
            static_returns.extend(
                (0..n).map(|i| {
                    o.center + Point2::from_polar(o.radius, 2.0 * PI * i as f64 / n as f64)
                }),
            );
        }
        World {
            map,
            time: 0.0,
            robot,
            pedestrians: Vec::new(),
            despawn_at: Vec::new(),
            pending: schedule,
            social: params.social_force.clone(),
            sensor: params.sensor.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            truth: GroundTruth::default(),
            in_contact: BTreeSet::new(),
            segments,
            discs,
            static_returns,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn map(&self) -> &SidewalkMap {
        &self.map
    }

    pub fn robot(&self) -> Option<&RobotState> {
        self.robot.as_ref()
    }

    pub fn robot_mut(&mut self) -> Option<&mut RobotState> {
        self.robot.as_mut()
    }

    pub fn pedestrians(&self) -> &[SimPedestrian] {
        &self.pedestrians
    }

    pub fn pedestrian(&self, id: u32) -> Option<&SimPedestrian> {
        self.pedestrians.iter().find(|p| p.id == id)
    }

    /// Whether the pedestrian has not entered yet or is still walking.
    pub fn pedestrian_pending_or_active(&self, id: u32) -> bool {
        self.pedestrian(id).is_some() || self.pending.iter().any(|s| s.pedestrian.id == id)
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Advances the simulation by `dt` seconds.
    ///
    /// # Panics
    /// If `dt` is outside `(0, 0.2]`.
    pub fn step(&mut self, dt: f64) {
        assert!(dt > 0.0 && dt <= 0.2, "time step {dt} outside (0, 0.2]");
        self.spawn_due();

        let robot_neighbour = self.robot.as_ref().map(|r| Neighbour {
            position: r.position(),
            velocity: r.velocity(),
            radius: r.radius,
        });
        let snapshot: Vec<Neighbour> = self
            .pedestrians
            .iter()
            .map(|p| Neighbour {
                position: p.position,
                velocity: p.velocity,
                radius: p.radius,
            })
            .chain(robot_neighbour)
            .collect();
        let obstacles = Obstacles {
            segments: &self.segments,
            discs: &self.discs,
        };
        let accelerations: Vec<Vec2> = self
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let others: Vec<Neighbour> = snapshot
                    .iter()
                    .enumerate()
                    .filter(|(j, n)| {
                        *j != i && n.position.distance(p.position) <= self.social.neighbour_cutoff
                    })
                    .map(|(_, n)| *n)
                    .collect();
                let walker = Walker {
                    position: p.position,
                    velocity: p.velocity,
                    radius: p.radius,
                    desired_speed: p.desired_speed,
                    target: p.target(),
                };
                social_force(&walker, &others, obstacles, &self.social)
            })
            .collect();

        let old_peds: Vec<(u32, Point2)> = self
            .pedestrians
            .iter()
            .map(|p| (p.id, p.position))
            .collect();
        let robot_body = self.robot.as_ref().map(|r| (r.position(), r.radius));
        for (p, a) in self.pedestrians.iter_mut().zip(&accelerations) {
            p.velocity += *a * dt;
            let cap = self.social.max_speed_factor * p.desired_speed;
            let speed = p.velocity.norm();
            if speed > cap {
                p.velocity = p.velocity * (cap / speed);
            }
            if let Some((centre, radius)) = robot_body {
                p.velocity = hold_off(
                    p.position,
                    p.velocity,
                    p.radius,
                    centre,
                    radius + self.social.robot_standoff,
                    dt,
                );
            }
            p.position += p.velocity * dt;
        }

        let old_robot = self.robot.as_ref().map(|r| r.position());
        if let Some(r) = self.robot.as_mut() {
            r.advance(dt);
        }
        self.time += dt;
        self.update_truth(old_robot, &old_peds);
        self.advance_routes();
    }

    fn spawn_due(&mut self) {
        let mut deferred = Vec::new();
        while let Some(next) = self.pending.last() {
            if next.spawn_time > self.time + 1e-9 {
                break;
            }
            let s = self.pending.pop().expect("peeked");
            if s.despawn_time.is_some_and(|t| t <= self.time) {
                continue;
            }
            let p = &s.pedestrian;
            let blocked = self
                .pedestrians
                .iter()
                .map(|o| (o.position, o.radius))
                .chain(self.robot.as_ref().map(|r| (r.position(), r.radius)))
                .any(|(q, r)| q.distance(p.position) < r + p.radius + 0.1);
            if blocked {
                deferred.push(s);
            } else {
                self.despawn_at.push(s.despawn_time);
                self.pedestrians.push(s.pedestrian);
            }
        }
        // Entry points that are occupied are retried on the next step.
        for s in deferred.into_iter().rev() {
            self.pending.push(s);
        }
    }

    fn advance_routes(&mut self) {
        let tol = self.social.route_tolerance;
        let time = self.time;
        let mut keep = Vec::with_capacity(self.pedestrians.len());
        for (p, despawn) in self.pedestrians.iter_mut().zip(&self.despawn_at) {
            let mut finished = false;
            if let Some(t) = p.target() {
                if t.distance(p.position) < tol {
                    p.route_index += 1;
                    if p.route_index >= p.route.len() {
                        if p.cyclic {
                            p.route_index = 0;
                        } else {
                            finished = true;
                        }
                    }
                }
            } else {
                finished = true;
            }
            keep.push(!finished && !despawn.is_some_and(|d| d <= time + 1e-9));
        }
        let mut it = keep.iter();
        self.pedestrians
            .retain(|_| *it.next().expect("same length"));
        let mut it = keep.iter();
        self.despawn_at.retain(|_| *it.next().expect("same length"));
        self.in_contact
            .retain(|id| self.pedestrians.iter().any(|p| p.id == *id));
    }

    fn update_truth(&mut self, old_robot: Option<Point2>, old_peds: &[(u32, Point2)]) {
        let Some(robot) = self.robot.as_ref() else {
            return;
        };
        let (r0, r1) = (
            old_robot.expect("robot existed before the step"),
            robot.position(),
        );
        self.truth.distance_travelled += r0.distance(r1);
        if self.map.crosses_curb(r0, r1) {
            self.truth.curb_crossings += 1;
        }
        for p in &self.pedestrians {
            let p0 = old_peds
                .iter()
                .find(|(id, _)| *id == p.id)
                .map_or(p.position, |(_, q)| *q);
            let gap =
                closest_approach(p0 - r0, (p.position - p0) - (r1 - r0)) - p.radius - robot.radius;
            self.truth.min_clearance = self.truth.min_clearance.min(gap);
            if gap <= 0.0 {
                if self.in_contact.insert(p.id) {
                    self.truth.collisions += 1;
                }
            } else {
                self.in_contact.remove(&p.id);
            }
        }
    }

    /// Simulated perception from the robot's current pose.
    ///
    /// Returns an empty frame when the world has no robot.
    pub fn sense(&mut self) -> SensorFrame {
        let Some(robot) = self.robot.as_ref() else {
            return SensorFrame {
                timestamp: self.time,
                cloud: Vec::new(),
                detections: Vec::new(),
            };
        };
        let pose = robot.pose;
        let origin = pose.position();
        let heading = pose.heading_vector();
        let half_fov = self.sensor.field_of_view_deg.to_radians() / 2.0;
        let noise = (self.sensor.detection_noise > 0.0)
            .then(|| Normal::new(0.0, self.sensor.detection_noise).expect("positive std dev"));

        let mut detections = Vec::new();
        for p in &self.pedestrians {
            let rel = p.position - origin;
            let dist = rel.norm();
            if dist > self.sensor.detection_range {
                continue;
            }
            if half_fov < PI && dist > 0.0 && heading.dot(rel) / dist < half_fov.cos() {
                continue;
            }
            let mut position = p.position;
            if let Some(n) = &noise {
                position += Vec2::new(n.sample(&mut self.rng), n.sample(&mut self.rng));
            }
            detections.push(Detection {
                id: p.id,
                position,
                velocity: p.velocity,
            });
        }
        detections.sort_by_key(|d| d.id);

        let range = self.sensor.lidar_range;
        let s = self.sensor.cloud_spacing;
        let height_noise = (self.sensor.cloud_noise > 0.0)
            .then(|| Normal::new(0.0, self.sensor.cloud_noise).expect("positive std dev"));
        let mut cloud = Vec::new();
        let (i0, i1) = (
            ((origin.x - range) / s).floor() as i64,
            ((origin.x + range) / s).ceil() as i64,
        );
        let (j0, j1) = (
            ((origin.y - range) / s).floor() as i64,
            ((origin.y + range) / s).ceil() as i64,
        );
        let push = |cloud: &mut Vec<Point3>, p: Point2, z: f64, rng: &mut ChaCha8Rng| {
            let local = pose.to_local(p);
            let dz = height_noise.as_ref().map_or(0.0, |n| n.sample(rng));
            cloud.push(Point3::new(local.x, local.y, z + dz));
        };
        for i in i0..=i1 {
            for j in j0..=j1 {
                let p = Point2::new(i as f64 * s, j as f64 * s);
                if p.distance(origin) > range {
                    continue;
                }
                let z = if self.map.is_walkable(p) {
                    0.0
                } else if let Some(h) = self.map.street_height(p) {
                    h
                } else {
                    continue;
                };
                push(&mut cloud, p, z, &mut self.rng);
            }
        }
        for &p in &self.static_returns {
            if p.distance(origin) <= range {
                push(&mut cloud, p, OBSTACLE_RETURN_HEIGHT, &mut self.rng);
            }
        }

        SensorFrame {
            timestamp: self.time,
            cloud,
            detections,
        }
    }
}

/// Velocity with the component toward a disc removed beyond what the
/// walker can cover this step without touching it. The walker keeps
/// sliding sideways.
fn hold_off(
    position: Point2,
    velocity: Vec2,
    radius: f64,
    centre: Point2,
    body: f64,
    dt: f64,
) -> Vec2 {
    let Some(outward) = (position - centre).normalized() else {
        return velocity;
    };
    let room = (position.distance(centre) - radius - body).max(0.0) / dt;
    let inward = -velocity.dot(outward);
    if inward > room {
        velocity + outward * (inward - room)
    } else {
        velocity
    }
}

/// Minimum of `|start + s·motion|` over `s ∈ [0, 1]`.
fn closest_approach(start: Vec2, motion: Vec2) -> f64 {
    let m2 = motion.norm_squared();
    if m2 == 0.0 {
        return start.norm();
    }
    let s = (-start.dot(motion) / m2).clamp(0.0, 1.0);
    (start + motion * s).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ]
    }

    fn open_plaza() -> SidewalkMap {
        SidewalkMap {
            sidewalks: vec![rect(-50.0, -50.0, 50.0, 50.0)],
            ..Default::default()
        }
    }

    fn ped(
        id: u32,
        position: Point2,
        velocity: Vec2,
        goal: Point2,
        speed: f64,
    ) -> ScheduledPedestrian {
        ScheduledPedestrian {
            spawn_time: 0.0,
            despawn_time: None,
            pedestrian: SimPedestrian {
                id,
                position,
                velocity,
                desired_speed: speed,
                route: vec![goal],
                route_index: 0,
                cyclic: false,
                radius: 0.3,
            },
        }
    }

    #[test]
    fn robot_moves_straight() {
        let mut r = RobotState::new(Pose::default(), 0.4, 2.0);
        r.command(1.0, 0.0);
        r.advance(0.1);
        assert!((r.pose.x - 0.1).abs() < 1e-15);
        assert_eq!(r.pose.y, 0.0);
    }

    #[test]
    fn robot_speed_is_clamped() {
        let mut r = RobotState::new(Pose::default(), 0.4, 0.8);
        r.command(3.0, 0.5);
        assert_eq!(r.linear_velocity, 0.8);
    }

    #[test]
    fn lone_pedestrian_at_desired_velocity_keeps_it() {
        let s = ped(
            1,
            Point2::ZERO,
            Vec2::new(1.2, 0.0),
            Point2::new(40.0, 0.0),
            1.2,
        );
        let mut w = World::new(open_plaza(), None, vec![s], &Params::default(), 0);
        for _ in 0..20 {
            w.step(0.05);
        }
        let p = &w.pedestrians()[0];
        assert!((p.velocity - Vec2::new(1.2, 0.0)).norm() < 1e-9);
        assert!((p.position.x - 1.2).abs() < 1e-9);
    }

    fn head_on_min_gap(dt: f64) -> f64 {
        let a = ped(
            1,
            Point2::new(-6.0, 0.0),
            Vec2::new(1.3, 0.0),
            Point2::new(20.0, 0.0),
            1.3,
        );
        let b = ped(
            2,
            Point2::new(6.0, 0.0),
            Vec2::new(-1.3, 0.0),
            Point2::new(-20.0, 0.0),
            1.3,
        );
        let mut w = World::new(open_plaza(), None, vec![a, b], &Params::default(), 0);
        let mut gap = f64::INFINITY;
        let steps = (12.0 / dt) as usize;
        for _ in 0..steps {
            w.step(dt);
            if let [p, q] = w.pedestrians() {
                gap = gap.min(p.position.distance(q.position) - p.radius - q.radius);
            }
        }
        gap
    }

    #[test]
    fn head_on_pedestrians_never_touch() {
        let coarse = head_on_min_gap(0.05);
        // A ten times finer integration serves as the reference.
        let fine = head_on_min_gap(0.005);
        assert!(coarse > 0.0, "gap {coarse}");
        assert!(fine > 0.0, "gap {fine}");
    }

    #[test]
    fn pedestrian_walks_around_a_stopped_robot() {
        let robot = RobotState::new(Pose::default(), 0.4, 0.8);
        for lateral in [-0.3, -0.1, 0.0, 0.1, 0.3] {
            let s = ped(
                1,
                Point2::new(8.0, lateral),
                Vec2::new(-1.47, 0.0),
                Point2::new(-20.0, lateral),
                1.47,
            );
            let mut w = World::new(
                open_plaza(),
                Some(robot.clone()),
                vec![s],
                &Params::default(),
                0,
            );
            for _ in 0..300 {
                w.step(0.05);
            }
            assert_eq!(w.truth().collisions, 0, "offset {lateral}");
            assert!(w.truth().min_clearance > 0.0);
        }
    }

    #[test]
    fn a_packed_row_cannot_push_through_a_stopped_robot() {
        let robot = RobotState::new(Pose::default(), 0.3, 0.8);
        let schedule = (0..4)
            .map(|i| {
                let y = -1.2 + 0.8 * i as f64;
                ped(
                    i,
                    Point2::new(6.0, y),
                    Vec2::new(-1.0, 0.0),
                    Point2::new(-20.0, y),
                    1.0,
                )
            })
            .collect();
        let mut w = World::new(open_plaza(), Some(robot), schedule, &Params::default(), 0);
        for _ in 0..400 {
            w.step(0.05);
        }
        assert_eq!(w.truth().collisions, 0);
        assert!(w.truth().min_clearance > 0.0);
    }

    #[test]
    fn hold_off_keeps_sideways_motion() {
        let v = hold_off(
            Point2::new(1.0, 0.0),
            Vec2::new(-1.0, 0.5),
            0.3,
            Point2::ZERO,
            0.7,
            0.1,
        );
        assert_eq!(v, Vec2::new(0.0, 0.5));
        let free = hold_off(
            Point2::new(5.0, 0.0),
            Vec2::new(-1.0, 0.5),
            0.3,
            Point2::ZERO,
            0.7,
            0.1,
        );
        assert_eq!(free, Vec2::new(-1.0, 0.5));
    }

    #[test]
    fn speed_never_exceeds_cap() {
        let mut schedule = Vec::new();
        for i in 0..12 {
            let y = (i % 4) as f64 * 0.7;
            let (x, goal) = if i % 2 == 0 { (-8.0, 8.0) } else { (8.0, -8.0) };
            schedule.push(ped(
                i,
                Point2::new(x, y),
                Vec2::ZERO,
                Point2::new(goal, y),
                1.0 + 0.05 * i as f64,
            ));
        }
        let mut w = World::new(open_plaza(), None, schedule, &Params::default(), 0);
        for _ in 0..400 {
            w.step(0.05);
            for p in w.pedestrians() {
                assert!(p.velocity.norm() <= 1.3 * p.desired_speed + 1e-12);
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_worlds() {
        let mut params = Params::default();
        params.sensor.detection_noise = 0.1;
        let run = || {
            let schedule = vec![
                ped(
                    1,
                    Point2::new(2.0, 0.5),
                    Vec2::ZERO,
                    Point2::new(20.0, 0.0),
                    1.1,
                ),
                ped(
                    2,
                    Point2::new(9.0, 0.0),
                    Vec2::ZERO,
                    Point2::new(-20.0, 0.0),
                    1.3,
                ),
            ];
            let mut w = World::new(
                open_plaza(),
                Some(RobotState::new(Pose::default(), 0.4, 0.8)),
                schedule,
                &params,
                42,
            );
            let mut frames = Vec::new();
            for _ in 0..100 {
                w.robot_mut().unwrap().command(0.5, 0.1);
                w.step(0.05);
                frames.push(w.sense().detections);
            }
            (frames, w.robot().unwrap().pose)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn detection_respects_field_of_view() {
        let behind = ped(
            1,
            Point2::new(-3.0, 0.0),
            Vec2::ZERO,
            Point2::new(-30.0, 0.0),
            1.0,
        );
        let ahead = ped(
            2,
            Point2::new(3.0, 0.5),
            Vec2::ZERO,
            Point2::new(30.0, 0.5),
            1.0,
        );
        let mut params = Params::default();
        params.sensor.field_of_view_deg = 90.0;
        let mut w = World::new(
            open_plaza(),
            Some(RobotState::new(Pose::default(), 0.4, 0.8)),
            vec![behind, ahead],
            &params,
            0,
        );
        w.step(0.05);
        let frame = w.sense();
        assert_eq!(
            frame.detections.iter().map(|d| d.id).collect::<Vec<_>>(),
            vec![2]
        );
        // Without noise detections are exact.
        assert_eq!(
            frame.detections[0].position,
            w.pedestrian(2).unwrap().position
        );
    }

    #[test]
    fn unlimited_sensor_sees_everyone() {
        let mut params = Params::default();
        params.sensor.field_of_view_deg = 360.0;
        params.sensor.detection_range = f64::INFINITY;
        let schedule: Vec<_> = (0..6)
            .map(|i| {
                let p = Point2::from_polar(3.0 + i as f64 * 7.0, i as f64);
                ped(i, p, Vec2::ZERO, p * 2.0, 1.0)
            })
            .collect();
        let mut w = World::new(
            open_plaza(),
            Some(RobotState::new(Pose::default(), 0.4, 0.8)),
            schedule,
            &params,
            0,
        );
        w.step(0.05);
        assert_eq!(w.sense().detections.len(), 6);
    }

    #[test]
    fn cloud_contains_street_at_curb_drop() {
        let map = SidewalkMap {
            sidewalks: vec![rect(-20.0, -3.0, 20.0, 4.0)],
            streets: vec![rect(-20.0, -12.0, 20.0, -3.0)],
            curbs: vec![Curb {
                points: vec![Point2::new(-20.0, -3.0), Point2::new(20.0, -3.0)],
                drop: 0.1,
            }],
            ..Default::default()
        };
        let mut w = World::new(
            map,
            Some(RobotState::new(Pose::default(), 0.4, 0.8)),
            Vec::new(),
            &Params::default(),
            0,
        );
        let cloud = w.sense().cloud;
        let street: Vec<_> = cloud.iter().filter(|p| p.z < 0.0).collect();
        assert!(!street.is_empty());
        assert!(street.iter().all(|p| p.z == -0.1 && p.y < -3.0 + 1e-9));
        assert!(cloud
            .iter()
            .filter(|p| p.z == 0.0)
            .all(|p| p.y >= -3.0 - 1e-9));
        assert!(cloud.iter().all(|p| p.xy().norm() <= 6.0 + 1e-9));
    }

    #[test]
    fn scheduled_pedestrians_enter_and_leave_on_time() {
        let mut s = ped(5, Point2::ZERO, Vec2::ZERO, Point2::new(40.0, 0.0), 1.0);
        s.spawn_time = 1.0;
        s.despawn_time = Some(2.0);
        let mut w = World::new(open_plaza(), None, vec![s], &Params::default(), 0);
        let mut seen = Vec::new();
        for _ in 0..60 {
            w.step(0.05);
            seen.push(w.pedestrian(5).is_some());
        }
        // Entry i holds the state after step i + 1.
        let first = (seen.iter().position(|&b| b).unwrap() + 1) as f64 * 0.05;
        let last = (seen.iter().rposition(|&b| b).unwrap() + 1) as f64 * 0.05;
        assert!((first - 1.0).abs() < 0.06, "entered at {first}");
        assert!((last - 2.0).abs() < 0.06, "left at {last}");
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.25) - 0.25).abs() < 1e-12);
    }
}
