//! Waypoint sequencing, arbitration between group surfing and curb
//! following, and the closed navigation loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::avoidance::{inject_statics, policy, NavAction, NavState};
use crate::config::Params;
use crate::curb::{estimate_curb, height_filter};
use crate::evaluation::{EvaluationError, PathTrace, TraceLabel, TraceRow};
use crate::geometry::Point2;
use crate::surfing::{GroupSurfer, SurfContext, SurfDecision};
use crate::tracking::{form_groups, Group, Tracker};
use crate::world::{Pose, RobotState, SensorFrame, World};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("a mission needs at least one waypoint")]
    NoWaypoints,
    #[error("waypoint {index} has a non-positive tolerance {tolerance}")]
    BadTolerance { index: usize, tolerance: f64 },
    #[error("the world has no robot")]
    NoRobot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Surfing,
    CurbFollowing,
    Complete,
    Blocked,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Surfing => "surfing",
            Mode::CurbFollowing => "curb_following",
            Mode::Complete => "complete",
            Mode::Blocked => "blocked",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Mode::Surfing,
            Mode::CurbFollowing,
            Mode::Complete,
            Mode::Blocked,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// Which subgoal sources the arbitration may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Auto,
    SurfOnly,
    CurbOnly,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "surf" | "surfing" => Ok(Strategy::SurfOnly),
            "curb" | "curb_following" => Ok(Strategy::CurbOnly),
            _ => Err(format!("unknown mode {s:?}, expected auto, surf or curb")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Point2,
    /// Arrival radius (m).
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    waypoints: Vec<Waypoint>,
    current: usize,
    mode: Mode,
}

impl Mission {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, MissionError> {
        if waypoints.is_empty() {
            return Err(MissionError::NoWaypoints);
        }
        if let Some((index, w)) = waypoints
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.tolerance > 0.0))
        {
            return Err(MissionError::BadTolerance {
                index,
                tolerance: w.tolerance,
            });
        }
        Ok(Mission {
            waypoints,
            current: 0,
            mode: Mode::CurbFollowing,
        })
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    /// Zero-based index of the waypoint being approached.
    pub fn current_index(&self) -> usize {
        self.current
    }

    pub fn current_waypoint(&self) -> Waypoint {
        self.waypoints[self.current]
    }

    pub fn global_goal(&self) -> Point2 {
        self.waypoints[self.waypoints.len() - 1].position
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_complete(&self) -> bool {
        self.mode == Mode::Complete
    }

    /// Moves on to the next waypoint, or completes the mission, when the
    /// robot is strictly inside the current waypoint's tolerance. Returns
    /// whether anything changed.
    pub fn check_arrival(&mut self, robot: Point2) -> bool {
        if self.is_complete() {
            return false;
        }
        let w = self.current_waypoint();
        if robot.distance(w.position) >= w.tolerance {
            return false;
        }
        if self.current + 1 == self.waypoints.len() {
            self.mode = Mode::Complete;
        } else {
            self.current += 1;
        }
        true
    }
}

/// Outcome of one arbitration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arbitration {
    pub mode: Mode,
    pub subgoal: Option<Point2>,
    pub selected_group: Option<u32>,
}

/// Chooses the subgoal source: a surfable group first, then the curb,
/// otherwise the robot is blocked and has no subgoal.
pub fn arbitrate(
    groups: &[Group],
    curb_subgoal: Option<Point2>,
    ctx: &SurfContext,
    surfer: &mut GroupSurfer,
    strategy: Strategy,
) -> Arbitration {
    let surf = if strategy == Strategy::CurbOnly {
        SurfDecision::default()
    } else {
        surfer.cycle(groups, ctx)
    };
    let curb = if strategy == Strategy::SurfOnly {
        None
    } else {
        curb_subgoal
    };
    match (surf.subgoal, curb) {
        (Some(subgoal), _) => Arbitration {
            mode: Mode::Surfing,
            subgoal: Some(subgoal),
            selected_group: surf.selected_group,
        },
        (None, Some(subgoal)) => Arbitration {
            mode: Mode::CurbFollowing,
            subgoal: Some(subgoal),
            selected_group: None,
        },
        (None, None) => Arbitration {
            mode: Mode::Blocked,
            subgoal: None,
            selected_group: None,
        },
    }
}

/// Everything decided in one control cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub t: f64,
    pub pose: Pose,
    pub waypoint_index: usize,
    pub waypoint: Point2,
    pub mode: Mode,
    pub subgoal: Option<Point2>,
    pub selected_group: Option<u32>,
    /// Groups formed from the confirmed tracks this cycle.
    pub groups: Vec<Group>,
    pub curb_available: bool,
    pub action: NavAction,
    /// The avoidance policy found no safe command and the robot stopped.
    pub avoidance_blocked: bool,
}

/// Per-cycle navigation pipeline: tracking, grouping, curb estimation,
/// arbitration and collision avoidance.
#[derive(Debug, Clone)]
pub struct Navigator {
    params: Params,
    strategy: Strategy,
    tracker: Tracker,
    surfer: GroupSurfer,
    mission: Mission,
    seed: u64,
    cycles: u64,
}

impl Navigator {
    pub fn new(mission: Mission, params: &Params, strategy: Strategy, seed: u64) -> Self {
        Navigator {
            params: params.clone(),
            strategy,
            tracker: Tracker::new(params.tracking.clone()),
            surfer: GroupSurfer::new(params.surfing.switch_margin),
            mission,
            seed,
            cycles: 0,
        }
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn cycle(&mut self, frame: &SensorFrame, robot: &RobotState) -> CycleRecord {
        let t = frame.timestamp;
        let pose = robot.pose;
        let here = pose.position();
        self.cycles += 1;
        self.tracker.update(&frame.detections, t);
        self.mission.check_arrival(here);
        let waypoint = self.mission.current_waypoint();
        let mut record = CycleRecord {
            t,
            pose,
            waypoint_index: self.mission.current_index(),
            waypoint: waypoint.position,
            mode: Mode::Complete,
            subgoal: None,
            selected_group: None,
            groups: Vec::new(),
            curb_available: false,
            action: NavAction::STOP,
            avoidance_blocked: false,
        };
        if self.mission.is_complete() {
            return record;
        }

        let tp = &self.params.tracking;
        record.groups = form_groups(&self.tracker.confirmed(t), here, tp);

        let cp = &self.params.curb;
        let below = height_filter(&frame.cloud, cp.height_epsilon);
        let curb_seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.cycles);
        let curb = estimate_curb(
            &below,
            Point2::ZERO,
            pose.to_local(waypoint.position),
            cp,
            curb_seed,
        )
        .ok();
        record.curb_available = curb.is_some();

        let ctx = SurfContext::new(here, waypoint.position, robot.v_max);
        let curb_subgoal = curb.as_ref().map(|c| pose.to_world(c.subgoal));
        let decision = arbitrate(
            &record.groups,
            curb_subgoal,
            &ctx,
            &mut self.surfer,
            self.strategy,
        );
        self.mission.mode = decision.mode;
        record.mode = decision.mode;
        record.subgoal = decision.subgoal;
        record.selected_group = decision.selected_group;
        let Some(subgoal) = decision.subgoal else {
            return record;
        };

        let agents: Vec<(Point2, Point2)> = self
            .tracker
            .tracks()
            .iter()
            .map(|tr| (tr.position + tr.velocity * (t - tr.last_seen), tr.velocity))
            .collect();
        let ap = &self.params.avoidance;
        let state = NavState::new(
            pose,
            robot.linear_velocity,
            robot.radius,
            robot.v_max,
            &agents,
            ap.agent_radius,
            subgoal,
        );
        let curb_runs = curb.as_ref().map_or_else(Vec::new, |c| {
            curb_runs(&c.hull, cp.window, ap.curb_max_gap)
                .into_iter()
                .map(|run| {
                    run.into_iter()
                        .map(|p| pose.to_world(p))
                        .collect::<Vec<_>>()
                })
                .collect()
        });
        // Raised returns are obstacles; lowered ones are street. Nearest
        // first so thinning keeps the returns that matter.
        let mut scan: Vec<Point2> = frame
            .cloud
            .iter()
            .filter(|q| q.z.abs() > cp.height_epsilon && q.xy().norm() <= cp.window)
            .map(|q| q.xy())
            .collect();
        scan.sort_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()));
        let scan: Vec<Point2> = scan.into_iter().map(|p| pose.to_world(p)).collect();
        let mut state = inject_statics(state, &[], &scan, ap);
        for run in &curb_runs {
            state = inject_statics(state, run, &[], ap);
        }
        match policy(&state, ap) {
            Ok(action) => record.action = action,
            Err(_) => record.avoidance_blocked = true,
        }
        record
    }
}

/// Stretches of the hull (in the robot frame) within `window` of the
/// robot, split wherever consecutive vertices are more than `max_gap`
/// apart. Long hull edges bridge unobserved or concave regions rather than
/// follow the curb.
pub fn curb_runs(hull: &[Point2], window: f64, max_gap: f64) -> Vec<Vec<Point2>> {
    let n = hull.len();
    let inside: Vec<bool> = hull.iter().map(|p| p.norm() <= window).collect();
    // Start just after an outside vertex or a gap so runs are not cut at the
    // arbitrary first vertex of the closed polygon.
    let start = (0..n)
        .find(|&i| {
            let prev = (i + n - 1) % n;
            inside[i] && (!inside[prev] || hull[prev].distance(hull[i]) > max_gap)
        })
        .unwrap_or(0);
    let mut runs: Vec<Vec<Point2>> = Vec::new();
    let mut current: Vec<Point2> = Vec::new();
    for k in 0..n {
        let i = (start + k) % n;
        let joined = current
            .last()
            .is_some_and(|&q: &Point2| q.distance(hull[i]) <= max_gap);
        if !inside[i] || !joined {
            if current.len() >= 2 {
                runs.push(std::mem::take(&mut current));
            }
            current.clear();
        }
        if inside[i] {
            current.push(hull[i]);
        }
    }
    if current.len() >= 2 {
        runs.push(current);
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Complete,
    Timeout,
    Blocked,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Complete => "complete",
            Outcome::Timeout => "timeout",
            Outcome::Blocked => "blocked",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub outcome: Outcome,
    pub duration: f64,
    /// Smallest robot-to-pedestrian surface gap.
    pub min_clearance: f64,
    pub collisions: usize,
    pub curb_crossings: usize,
    pub distance_travelled: f64,
    pub waypoints_reached: usize,
    pub final_position: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub records: Vec<CycleRecord>,
    pub summary: EpisodeSummary,
}

impl Episode {
    /// One row per control cycle.
    pub fn trace(&self) -> Result<PathTrace, EvaluationError> {
        let rows = self
            .records
            .iter()
            .map(|r| TraceRow {
                t: r.t,
                x: r.pose.x,
                y: r.pose.y,
                heading: r.pose.heading,
                mode: r.mode.as_str().to_string(),
                subgoal_x: r.subgoal.map(|s| s.x),
                subgoal_y: r.subgoal.map(|s| s.y),
            })
            .collect();
        PathTrace::new(TraceLabel::Robot, rows)
    }

    /// Mode per cycle with consecutive repeats collapsed.
    pub fn mode_sequence(&self) -> Vec<Mode> {
        let mut out: Vec<Mode> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.mode) {
                out.push(r.mode);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    pub max_time: f64,
    pub strategy: Strategy,
    /// Seeds the curb detector.
    pub seed: u64,
}

/// Runs the navigation loop at the control rate until the mission completes
/// or `max_time` elapses.
///
/// The simulator advances by `params.sim.dt` between cycles. A robot left
/// without a subgoal, or without a safe command, stops and re-arbitrates on
/// the next cycle; if that is still the situation when time runs out the
/// outcome is [`Outcome::Blocked`].
pub fn run_episode(
    world: &mut World,
    mission: Mission,
    params: &Params,
    options: EpisodeOptions,
) -> Result<Episode, MissionError> {
    run_episode_observed(world, mission, params, options, |_, _| {})
}

/// [`run_episode`] that also hands the world and the fresh record to
/// `observe` after every cycle, before the world advances.
pub fn run_episode_observed(
    world: &mut World,
    mission: Mission,
    params: &Params,
    options: EpisodeOptions,
    mut observe: impl FnMut(&World, &CycleRecord),
) -> Result<Episode, MissionError> {
    if world.robot().is_none() {
        return Err(MissionError::NoRobot);
    }
    let dt = params.sim.dt;
    let steps = ((1.0 / (params.sim.control_rate * dt)).round() as usize).max(1);
    let mut nav = Navigator::new(mission, params, options.strategy, options.seed);
    let mut records = Vec::new();
    loop {
        let robot = world.robot().cloned().ok_or(MissionError::NoRobot)?;
        let frame = world.sense();
        let record = nav.cycle(&frame, &robot);
        let action = record.action;
        observe(world, &record);
        records.push(record);
        if nav.mission().is_complete() || world.time() + 1e-9 >= options.max_time {
            break;
        }
        world
            .robot_mut()
            .ok_or(MissionError::NoRobot)?
            .command(action.linear, action.angular);
        for _ in 0..steps {
            world.step(dt);
        }
    }
    let last = records.last().expect("at least one cycle");
    let outcome = if nav.mission().is_complete() {
        Outcome::Complete
    } else if last.mode == Mode::Blocked || last.avoidance_blocked {
        Outcome::Blocked
    } else {
        Outcome::Timeout
    };
    let truth = world.truth();
    let summary = EpisodeSummary {
        outcome,
        duration: world.time(),
        min_clearance: truth.min_clearance,
        collisions: truth.collisions,
        curb_crossings: truth.curb_crossings,
        distance_travelled: truth.distance_travelled,
        waypoints_reached: nav.mission().current_index() + usize::from(nav.mission().is_complete()),
        final_position: world.robot().map_or(Point2::ZERO, RobotState::position),
    };
    Ok(Episode { records, summary })
}
