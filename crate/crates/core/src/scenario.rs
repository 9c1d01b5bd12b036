//! Scenario files: map, robot, waypoints, pedestrian flows and parameter
//! overrides, in TOML.
//!
//! ```toml
//! name = "straight"
//! max_time = 90.0
//!
//! [robot]
//! start = [2.0, 1.5]
//! heading_deg = 0.0
//! radius = 0.3
//! v_max = 0.8
//!
//! [[waypoints]]
//! position = [22.0, 1.5]
//! tolerance = 0.5          # optional, defaults to params.mission.goal_tolerance
//!
//! [map]
//! sidewalks = [[[0.0, 0.0], [30.0, 0.0], [30.0, 4.0], [0.0, 4.0]]]
//! streets = [[[0.0, -8.0], [30.0, -8.0], [30.0, 0.0], [0.0, 0.0]]]
//! curbs = [{ points = [[0.0, 0.0], [30.0, 0.0]], drop = 0.1 }]
//!
//! [[flows]]
//! route = [[0.5, 1.2], [29.5, 1.2]]
//! count = 5
//! interval = 6.0
//! speed = 0.6
//!
//! [probe]                  # the comparison pedestrian
//! speed = 1.0
//!
//! [params.curb]
//! alpha = 5.0
//! ```
//!
//! Flow members spawn at the first route point and walk the remaining
//! points. Members of one group share a speed and walk side by side,
//! `group_spacing` apart, centred on the route. Positive lateral offsets are
//! to the left of the direction of travel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Params;
use crate::evaluation::{PathTrace, TraceLabel, TraceRow};
use crate::geometry::{resample_polyline, Point2};
use crate::mission::{Mission, MissionError, Waypoint};
use crate::world::{
    shortest_path, MapError, PathError, Pose, RobotState, ScheduledPedestrian, SidewalkMap,
    SimPedestrian, World,
};

/// Id of the comparison pedestrian; flow pedestrians are numbered from 1.
pub const PROBE_ID: u32 = 0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad override {0:?}: expected key=value")]
    BadOverride(String),
    #[error("invalid map: {0}")]
    Map(#[from] MapError),
    #[error("invalid waypoints: {0}")]
    Mission(#[from] MissionError),
    #[error("flow {index}: {reason}")]
    BadFlow { index: usize, reason: &'static str },
    #[error("robot: {0}")]
    BadRobot(&'static str),
    #[error("probe route needs at least two points")]
    BadProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub start: Point2,
    #[serde(default)]
    pub heading_deg: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
}

fn default_radius() -> f64 {
    0.3
}

fn default_v_max() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSpec {
    pub position: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// A stream of pedestrians (or pedestrian groups) along a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flow {
    pub route: Vec<Point2>,
    /// Number of groups.
    pub count: usize,
    pub start_time: f64,
    /// Seconds between consecutive groups.
    pub interval: f64,
    /// Extra spawn delay drawn uniformly from `[0, interval_jitter)`.
    pub interval_jitter: f64,
    pub group_size: usize,
    pub group_spacing: f64,
    /// Desired walking speed (m/s).
    pub speed: f64,
    /// Per-group speed perturbation, uniform in `±speed_jitter`.
    pub speed_jitter: f64,
    /// Per-group lateral shift of the route, uniform in `±lateral_jitter`.
    pub lateral_jitter: f64,
    pub cyclic: bool,
    /// Seconds after spawning at which members leave the world.
    pub lifetime: Option<f64>,
    pub radius: f64,
    /// Route points are inserted every `lane_step` meters so walkers hold
    /// their lane; zero keeps the route as given.
    pub lane_step: f64,
}

impl Default for Flow {
    fn default() -> Self {
        Flow {
            route: Vec::new(),
            count: 1,
            start_time: 0.0,
            interval: 0.0,
            interval_jitter: 0.0,
            group_size: 1,
            group_spacing: 0.7,
            speed: 1.0,
            speed_jitter: 0.0,
            lateral_jitter: 0.0,
            cyclic: false,
            lifetime: None,
            radius: 0.3,
            lane_step: 1.0,
        }
    }
}

/// The scripted pedestrian whose path the robot's is compared with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    /// Defaults to the robot start followed by the waypoints.
    pub route: Option<Vec<Point2>>,
    pub speed: f64,
    pub start_time: f64,
    pub radius: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            route: None,
            speed: 1.0,
            start_time: 0.0,
            radius: 0.3,
        }
    }
}

fn default_max_time() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    pub robot: RobotSpec,
    pub waypoints: Vec<WaypointSpec>,
    pub map: SidewalkMap,
    #[serde(default)]
    pub flows: Vec<Flow>,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub params: Params,
}

const TOP_LEVEL_KEYS: [&str; 9] = [
    "name",
    "description",
    "max_time",
    "robot",
    "waypoints",
    "map",
    "flows",
    "probe",
    "params",
];

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), ScenarioError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ScenarioError::BadOverride(s.to_string()))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() || k.split('.').any(str::is_empty) {
        return Err(ScenarioError::BadOverride(s.to_string()));
    }
    Ok((k.to_string(), v.to_string()))
}

fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `key` (dotted) in `doc`. Keys that do not start with a top-level
/// scenario field are taken relative to `[params]`.
fn apply_override(doc: &mut toml::Table, key: &str, raw: &str) -> Result<(), ScenarioError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    if !TOP_LEVEL_KEYS.contains(&parts[0]) {
        parts.insert(0, "params");
    }
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut table = doc;
    for p in path {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ScenarioError::BadOverride(format!("{key}={raw}")))?;
    }
    table.insert(last.to_string(), override_value(raw));
    Ok(())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses and validates a scenario after applying `key=value` overrides.
    pub fn from_toml_with_overrides(
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<Self, ScenarioError> {
        let mut scenario: Scenario = toml::from_str(text)?;
        if !overrides.is_empty() {
            let mut doc: toml::Table = toml::from_str(text)?;
            for (k, v) in overrides {
                apply_override(&mut doc, k, v)?;
            }
            scenario = toml::Value::Table(doc).try_into()?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.map.validate()?;
        if !(self.robot.radius > 0.0) {
            return Err(ScenarioError::BadRobot("radius must be positive"));
        }
        if !(self.robot.v_max > 0.0) {
            return Err(ScenarioError::BadRobot("v_max must be positive"));
        }
        self.mission()?;
        for (index, f) in self.flows.iter().enumerate() {
            let bad = |reason| Err(ScenarioError::BadFlow { index, reason });
            if f.route.len() < 2 {
                return bad("route needs at least two points");
            }
            if f.group_size == 0 {
                return bad("group_size must be at least 1");
            }
            if !(f.speed - f.speed_jitter > 0.0) {
                return bad("speed must stay positive");
            }
            if !(f.radius > 0.0) {
                return bad("radius must be positive");
            }
            if f.interval < 0.0
                || f.interval_jitter < 0.0
                || f.lateral_jitter < 0.0
                || f.lane_step < 0.0
            {
                return bad("interval and jitters must be non-negative");
            }
        }
        if self.probe_route().len() < 2 {
            return Err(ScenarioError::BadProbe);
        }
        Ok(())
    }

    pub fn mission(&self) -> Result<Mission, MissionError> {
        Mission::new(
            self.waypoints
                .iter()
                .map(|w| Waypoint {
                    position: w.position,
                    tolerance: w.tolerance.unwrap_or(self.params.mission.goal_tolerance),
                })
                .collect(),
        )
    }

    pub fn robot_state(&self) -> RobotState {
        let pose = Pose {
            x: self.robot.start.x,
            y: self.robot.start.y,
            heading: self.robot.heading_deg.to_radians(),
        };
        RobotState::new(pose, self.robot.radius, self.robot.v_max)
    }

    pub fn goal(&self) -> Point2 {
        self.waypoints
            .last()
            .map_or(self.robot.start, |w| w.position)
    }

    pub fn probe_route(&self) -> Vec<Point2> {
        self.probe.route.clone().unwrap_or_else(|| {
            std::iter::once(self.robot.start)
                .chain(self.waypoints.iter().map(|w| w.position))
                .collect()
        })
    }

    /// Flow pedestrians for one trial. Timing, speed and lateral jitter
    /// are drawn from `seed`.
    pub fn schedule(&self, seed: u64) -> Vec<ScheduledPedestrian> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F10E);
        let mut out = Vec::new();
        let mut next_id = PROBE_ID + 1;
        for f in &self.flows {
            for k in 0..f.count {
                let delay: f64 = rng.random::<f64>() * f.interval_jitter;
                let speed = f.speed + (2.0 * rng.random::<f64>() - 1.0) * f.speed_jitter;
                let shift = (2.0 * rng.random::<f64>() - 1.0) * f.lateral_jitter;
                let spawn_time = f.start_time + k as f64 * f.interval + delay;
                for m in 0..f.group_size {
                    let offset =
                        shift + (m as f64 - (f.group_size - 1) as f64 / 2.0) * f.group_spacing;
                    let mut route = offset_polyline(&f.route, offset);
                    if f.lane_step > 0.0 {
                        route = resample_polyline(&route, f.lane_step);
                    }
                    out.push(ScheduledPedestrian {
                        spawn_time,
                        despawn_time: f.lifetime.map(|l| spawn_time + l),
                        pedestrian: SimPedestrian {
                            id: next_id,
                            position: route[0],
                            velocity: Point2::ZERO,
                            desired_speed: speed,
                            route,
                            route_index: 1,
                            cyclic: f.cyclic,
                            radius: f.radius,
                        },
                    });
                    next_id += 1;
                }
            }
        }
        out
    }

    /// World with the robot and the flows, without the probe pedestrian.
    pub fn robot_world(&self, seed: u64) -> World {
        World::new(
            self.map.clone(),
            Some(self.robot_state()),
            self.schedule(seed),
            &self.params,
            seed,
        )
    }

    /// World with the flows and the probe pedestrian, without the robot.
    pub fn probe_world(&self, seed: u64) -> World {
        let route = self.probe_route();
        let mut schedule = self.schedule(seed);
        schedule.push(ScheduledPedestrian {
            spawn_time: self.probe.start_time,
            despawn_time: None,
            pedestrian: SimPedestrian {
                id: PROBE_ID,
                position: route[0],
                velocity: Point2::ZERO,
                desired_speed: self.probe.speed,
                route,
                route_index: 1,
                cyclic: false,
                radius: self.probe.radius,
            },
        });
        World::new(self.map.clone(), None, schedule, &self.params, seed)
    }

    /// Shortest collision-free path for the robot from its start to the
    /// final waypoint.
    pub fn shortest_path(&self) -> Result<Vec<Point2>, PathError> {
        shortest_path(
            &self.map,
            self.robot.start,
            self.goal(),
            self.robot.radius,
            self.params.evaluation.path_resolution,
        )
    }
}

/// Runs a probe world until the probe pedestrian finishes its route or
/// `max_time` elapses, sampling its position at the control rate.
///
/// Returns `None` if fewer than two samples were taken.
pub fn record_probe(world: &mut World, params: &Params, max_time: f64) -> Option<PathTrace> {
    let dt = params.sim.dt;
    let steps = ((1.0 / (params.sim.control_rate * dt)).round() as usize).max(1);
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut heading = 0.0;
    loop {
        if let Some(p) = world.pedestrian(PROBE_ID) {
            if p.velocity.norm() > 1e-9 {
                heading = p.velocity.angle();
            }
            rows.push(TraceRow {
                t: world.time(),
                x: p.position.x,
                y: p.position.y,
                heading,
                mode: "walking".to_string(),
                subgoal_x: None,
                subgoal_y: None,
            });
        } else if !world.pedestrian_pending_or_active(PROBE_ID) {
            break;
        }
        if world.time() + 1e-9 >= max_time {
            break;
        }
        for _ in 0..steps {
            world.step(dt);
        }
    }
    PathTrace::new(TraceLabel::Pedestrian, rows).ok()
}

/// Polyline shifted sideways by `offset` (left positive), with mitred
/// joints.
pub fn offset_polyline(points: &[Point2], offset: f64) -> Vec<Point2> {
    if offset == 0.0 {
        return points.to_vec();
    }
    let n = points.len();
    let normal =
        |i: usize| -> Option<Point2> { (points[i + 1] - points[i]).normalized().map(Point2::perp) };
    (0..n)
        .map(|i| {
            let before = if i > 0 { normal(i - 1) } else { None };
            let after = if i + 1 < n { normal(i) } else { None };
            let shift = match (before, after) {
                (Some(a), Some(b)) => match (a + b).normalized() {
                    Some(m) if m.dot(a) > 0.25 => m * (offset / m.dot(a)),
                    _ => a * offset,
                },
                (Some(a), None) | (None, Some(a)) => a * offset,
                (None, None) => Point2::ZERO,
            };
            points[i] + shift
        })
        .collect()
}
