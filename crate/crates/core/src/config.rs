//! Tunable parameters for every module, with their default values.
//!
//! Everything here can be set from the `[params]` table of a scenario file
//! and overridden from the command line with dotted keys such as
//! `curb.alpha=4.0`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub sim: SimParams,
    pub social_force: SocialForceParams,
    pub sensor: SensorParams,
    pub tracking: TrackingParams,
    pub surfing: SurfingParams,
    pub curb: CurbParams,
    pub avoidance: AvoidanceParams,
    pub mission: MissionParams,
    pub evaluation: EvaluationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Integration step in seconds.
    pub dt: f64,
    /// Navigation loop rate in Hz.
    pub control_rate: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.05,
            control_rate: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialForceParams {
    /// Relaxation time toward the desired velocity (s).
    pub tau: f64,
    /// Pedestrian-pedestrian repulsion strength (m/s²) and range (m).
    pub neighbour_strength: f64,
    pub neighbour_range: f64,
    /// Boundary and obstacle repulsion strength (m/s²) and range (m).
    pub obstacle_strength: f64,
    pub obstacle_range: f64,
    pub max_acceleration: f64,
    /// Speed cap as a multiple of the desired speed.
    pub max_speed_factor: f64,
    /// Lateral acceleration used to step aside from a predicted close pass
    /// (m/s²). Walkers dodge to their right unless the other agent is
    /// already passing on that side.
    pub sidestep: f64,
    /// How far ahead close passes are anticipated (s).
    pub anticipation_time: f64,
    /// Extra clearance beyond the sum of radii that counts as a close pass (m).
    pub anticipation_margin: f64,
    /// Neighbours farther than this are ignored (m).
    pub neighbour_cutoff: f64,
    /// Boundaries farther than this are ignored (m).
    pub obstacle_cutoff: f64,
    /// Radius within which a route point counts as reached (m).
    pub route_tolerance: f64,
    /// Walkers never step closer than this to the robot's body (m).
    pub robot_standoff: f64,
}

impl Default for SocialForceParams {
    fn default() -> Self {
        SocialForceParams {
            tau: 0.5,
            neighbour_strength: 2.0,
            neighbour_range: 0.3,
            obstacle_strength: 3.0,
            obstacle_range: 0.2,
            max_acceleration: 5.0,
            max_speed_factor: 1.3,
            sidestep: 1.5,
            anticipation_time: 3.0,
            anticipation_margin: 0.3,
            neighbour_cutoff: 5.0,
            obstacle_cutoff: 2.0,
            route_tolerance: 0.5,
            robot_standoff: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    pub detection_range: f64,
    /// Full field-of-view angle in degrees, centred on the robot heading.
    pub field_of_view_deg: f64,
    /// Standard deviation of the detection position noise (m).
    pub detection_noise: f64,
    pub lidar_range: f64,
    /// Spacing of the simulated point-cloud returns (m).
    pub cloud_spacing: f64,
    /// Standard deviation of the vertical noise on cloud returns (m).
    pub cloud_noise: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            detection_range: 10.0,
            field_of_view_deg: 180.0,
            detection_noise: 0.0,
            lidar_range: 6.0,
            cloud_spacing: 0.3,
            cloud_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingParams {
    pub gate_radius: f64,
    /// Weight of the previous velocity estimate in the exponential smoother.
    pub smoothing: f64,
    /// Tracks unseen for longer than this are dropped (s).
    pub stale_after: f64,
    pub group_distance: f64,
    pub group_speed_delta: f64,
    pub group_heading_delta_deg: f64,
    /// Below this speed a track has no meaningful heading (m/s).
    pub heading_min_speed: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        TrackingParams {
            gate_radius: 0.8,
            smoothing: 0.5,
            stale_after: 1.0,
            group_distance: 1.5,
            group_speed_delta: 0.3,
            group_heading_delta_deg: 30.0,
            heading_min_speed: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfingParams {
    /// Speed advantage a new group needs before the robot switches away from
    /// the group it already follows. Zero reproduces plain re-selection every
    /// cycle.
    pub switch_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurbParams {
    /// Points must be this far below the wheel-contact plane (m).
    pub height_epsilon: f64,
    pub ransac_threshold: f64,
    pub ransac_iterations: usize,
    pub alpha: f64,
    /// Hull points used for the curb line.
    pub k_nearest: usize,
    /// Hull points farther than this from the robot are ignored (m).
    pub window: f64,
    /// Distance of the subgoal ahead of the robot along the curb direction (m).
    pub lookahead: f64,
    pub min_points: usize,
}

impl Default for CurbParams {
    fn default() -> Self {
        CurbParams {
            height_epsilon: 0.02,
            ransac_threshold: 0.05,
            ransac_iterations: 200,
            alpha: 5.0,
            k_nearest: 50,
            window: 5.0,
            lookahead: 3.0,
            min_points: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvoidanceParams {
    pub horizon: f64,
    pub rollout_dt: f64,
    pub linear_samples: usize,
    pub angular_samples: usize,
    pub max_angular_velocity: f64,
    /// Extra clearance added to the sum of radii (m).
    pub safety_margin: f64,
    /// Radius assumed for tracked pedestrians (m).
    pub agent_radius: f64,
    pub static_radius: f64,
    pub static_spacing: f64,
    /// Curb hull edges longer than this are not treated as curb when placing
    /// static pseudo-pedestrians (m).
    pub curb_max_gap: f64,
    /// Reward per meter of best approach to the subgoal along a rollout.
    pub progress_weight: f64,
    /// Reward for facing the subgoal at the best-approach point; mainly
    /// decides between turning in place and standing still.
    pub heading_weight: f64,
    /// Penalty per meter that an oncoming agent falls short of
    /// `pass_clearance` on the robot's left at closest approach.
    pub pass_weight: f64,
    pub pass_clearance: f64,
    /// Penalty per meter the rollout ends left of the robot-subgoal line.
    pub left_weight: f64,
    /// Agents farther than this at closest approach are not socially scored (m).
    pub interaction_range: f64,
    /// Agents slower than this are not treated as oncoming (m/s).
    pub oncoming_min_speed: f64,
}

impl Default for AvoidanceParams {
    fn default() -> Self {
        AvoidanceParams {
            horizon: 3.0,
            rollout_dt: 0.1,
            linear_samples: 11,
            angular_samples: 21,
            max_angular_velocity: 1.0,
            safety_margin: 0.2,
            agent_radius: 0.3,
            static_radius: 0.1,
            static_spacing: 0.5,
            curb_max_gap: 1.0,
            progress_weight: 1.0,
            heading_weight: 0.02,
            pass_weight: 5.0,
            pass_clearance: 1.5,
            left_weight: 0.3,
            interaction_range: 3.0,
            oncoming_min_speed: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionParams {
    /// Default arrival radius for waypoints that do not set their own (m).
    pub goal_tolerance: f64,
}

impl Default for MissionParams {
    fn default() -> Self {
        MissionParams {
            goal_tolerance: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationParams {
    /// Arc-length spacing used to turn traces into point sets (m).
    pub sample_spacing: f64,
    /// Grid resolution of the shortest-path search (m).
    pub path_resolution: f64,
}

impl Default for EvaluationParams {
    fn default() -> Self {
        EvaluationParams {
            sample_spacing: 0.1,
            path_resolution: 0.1,
        }
    }
}
