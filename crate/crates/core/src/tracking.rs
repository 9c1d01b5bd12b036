//! Persistent pedestrian tracks from per-frame detections, and grouping of
//! tracks into coherently moving clusters.

use crate::config::TrackingParams;
use crate::geometry::{Point2, Vec2};
use crate::world::Detection;

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u32,
    pub position: Point2,
    pub velocity: Vec2,
    /// Number of detections absorbed.
    pub observations: usize,
    pub last_seen: f64,
}

impl Track {
    /// A velocity needs at least two observations.
    pub fn has_velocity(&self) -> bool {
        self.observations >= 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Lowest member track id.
    pub id: u32,
    /// Member track ids, ascending.
    pub members: Vec<u32>,
    /// Mean member velocity.
    pub velocity: Vec2,
    /// Position of the member nearest the robot.
    pub closest: Point2,
}

impl Group {
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Matches `detections` at time `t` to `tracks` and returns the new track
/// list, ascending by id.
///
/// Tracks are predicted forward at constant velocity and matched greedily,
/// closest pair first, within `gate_radius`. Unmatched detections open new
/// tracks numbered from `next_id`; tracks unseen for longer than
/// `stale_after` are dropped.
pub fn update_tracks(
    mut tracks: Vec<Track>,
    detections: &[Detection],
    t: f64,
    params: &TrackingParams,
    next_id: &mut u32,
) -> Vec<Track> {
    let mut pairs = Vec::new();
    for (ti, track) in tracks.iter().enumerate() {
        let predicted = track.position + track.velocity * (t - track.last_seen);
        for (di, d) in detections.iter().enumerate() {
            let dist = predicted.distance(d.position);
            if dist <= params.gate_radius {
                pairs.push((dist, track.id, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));

    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    for (_, _, ti, di) in pairs {
        if track_used[ti] || det_used[di] {
            continue;
        }
        track_used[ti] = true;
        det_used[di] = true;
        let track = &mut tracks[ti];
        let elapsed = t - track.last_seen;
        if elapsed > 0.0 {
            let raw = (detections[di].position - track.position) * (1.0 / elapsed);
            track.velocity = if track.observations == 1 {
                raw
            } else {
                track.velocity * params.smoothing + raw * (1.0 - params.smoothing)
            };
        }
        track.position = detections[di].position;
        track.observations += 1;
        track.last_seen = t;
    }

    tracks.retain(|tr| t - tr.last_seen <= params.stale_after);
    for (d, used) in detections.iter().zip(&det_used) {
        if !used {
            tracks.push(Track {
                id: *next_id,
                position: d.position,
                velocity: Vec2::ZERO,
                observations: 1,
                last_seen: t,
            });
            *next_id += 1;
        }
    }
    tracks.sort_by_key(|tr| tr.id);
    tracks
}

/// Track state owned by the navigation loop.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackingParams,
    tracks: Vec<Track>,
    next_id: u32,
}

impl Tracker {
    pub fn new(params: TrackingParams) -> Self {
        Tracker {
            params,
            tracks: Vec::new(),
            next_id: 1,
        }
    }

    pub fn update(&mut self, detections: &[Detection], t: f64) {
        let tracks = std::mem::take(&mut self.tracks);
        self.tracks = update_tracks(tracks, detections, t, &self.params, &mut self.next_id);
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Tracks observed at time `t` that already carry a velocity estimate.
    pub fn confirmed(&self, t: f64) -> Vec<Track> {
        self.tracks
            .iter()
            .filter(|tr| tr.last_seen == t && tr.has_velocity())
            .cloned()
            .collect()
    }

    pub fn params(&self) -> &TrackingParams {
        &self.params
    }
}

fn coherent(a: &Track, b: &Track, params: &TrackingParams) -> bool {
    if a.position.distance(b.position) > params.group_distance {
        return false;
    }
    let (sa, sb) = (a.velocity.norm(), b.velocity.norm());
    if (sa - sb).abs() > params.group_speed_delta {
        return false;
    }
    if sa >= params.heading_min_speed && sb >= params.heading_min_speed {
        let cos = a.velocity.dot(b.velocity) / (sa * sb);
        let angle = cos.clamp(-1.0, 1.0).acos();
        if angle > params.group_heading_delta_deg.to_radians() {
            return false;
        }
    }
    true
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Partitions `tracks` into groups linked transitively by proximity and
/// similar speed and heading. Groups are returned ascending by id.
pub fn form_groups(
    tracks: &[Track],
    robot_position: Point2,
    params: &TrackingParams,
) -> Vec<Group> {
    let mut sorted: Vec<&Track> = tracks.iter().collect();
    sorted.sort_by_key(|t| t.id);
    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if coherent(sorted[i], sorted[j], params) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                // Root at the lower index so the root is the lowest id.
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        let slot = *root_slot[r].get_or_insert_with(|| {
            groups.push(Group {
                id: sorted[r].id,
                members: Vec::new(),
                velocity: Vec2::ZERO,
                closest: sorted[r].position,
            });
            groups.len() - 1
        });
        groups[slot].members.push(sorted[i].id);
    }
    for g in &mut groups {
        let members: Vec<&Track> = g
            .members
            .iter()
            .map(|id| *sorted.iter().find(|t| t.id == *id).expect("member exists"))
            .collect();
        let sum = members.iter().fold(Vec2::ZERO, |acc, t| acc + t.velocity);
        g.velocity = sum * (1.0 / members.len() as f64);
        // Strict comparison keeps the lowest id among equally close members.
        let mut best = members[0];
        for m in &members[1..] {
            if m.position.distance_squared(robot_position)
                < best.position.distance_squared(robot_position)
            {
                best = m;
            }
        }
        g.closest = best.position;
    }
    groups.sort_by_key(|g| g.id);
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn track(id: u32, x: f64, y: f64, vx: f64, vy: f64) -> Track {
        Track {
            id,
            position: Point2::new(x, y),
            velocity: Vec2::new(vx, vy),
            observations: 5,
            last_seen: 0.0,
        }
    }

    fn det(x: f64, y: f64) -> Detection {
        Detection {
            id: 0,
            position: Point2::new(x, y),
            velocity: Vec2::ZERO,
        }
    }

    #[test]
    fn velocity_converges_on_a_steady_walker() {
        let params = TrackingParams::default();
        let mut tracker = Tracker::new(params);
        for k in 0..10 {
            let t = k as f64 / 20.0;
            tracker.update(&[det(t, 0.0)], t);
        }
        let tr = &tracker.tracks()[0];
        assert_eq!(tracker.tracks().len(), 1);
        assert!((tr.velocity - Vec2::new(1.0, 0.0)).norm() < 0.05);
    }

    #[test]
    fn unseen_track_goes_stale() {
        let mut tracker = Tracker::new(TrackingParams::default());
        tracker.update(&[det(0.0, 0.0)], 0.0);
        tracker.update(&[], 0.9);
        assert_eq!(tracker.tracks().len(), 1);
        tracker.update(&[], 1.05);
        assert!(tracker.tracks().is_empty());
    }

    #[test]
    fn distant_detections_open_separate_tracks() {
        let params = TrackingParams {
            gate_radius: 1.0,
            ..Default::default()
        };
        let mut tracker = Tracker::new(params);
        tracker.update(&[det(0.0, 0.0), det(5.0, 0.0)], 0.0);
        tracker.update(&[det(0.05, 0.0), det(5.05, 0.0)], 0.05);
        assert_eq!(tracker.tracks().len(), 2);
        assert!(tracker.tracks().iter().all(|t| t.observations == 2));
    }

    #[test]
    fn confirmed_needs_two_observations_this_frame() {
        let mut tracker = Tracker::new(TrackingParams::default());
        tracker.update(&[det(0.0, 0.0)], 0.0);
        assert!(tracker.confirmed(0.0).is_empty());
        tracker.update(&[det(0.1, 0.0)], 0.1);
        assert_eq!(tracker.confirmed(0.1).len(), 1);
        tracker.update(&[], 0.2);
        assert!(tracker.confirmed(0.2).is_empty());
    }

    #[test]
    fn coherent_pair_forms_one_group() {
        let g = form_groups(
            &[track(1, 0.0, 0.0, 1.0, 0.0), track(2, 0.8, 0.0, 1.0, 0.0)],
            Point2::ZERO,
            &TrackingParams::default(),
        );
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].velocity, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn opposing_pair_splits() {
        let g = form_groups(
            &[track(1, 0.0, 0.0, 1.0, 0.0), track(2, 0.8, 0.0, -1.0, 0.0)],
            Point2::ZERO,
            &TrackingParams::default(),
        );
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn three_walkers_share_a_group_and_nearest_is_chosen() {
        let g = form_groups(
            &[
                track(1, 3.0, 0.4, 1.0, 0.0),
                track(2, 3.0, 0.6, 1.0, 0.0),
                track(3, 2.9, 0.5, 1.0, 0.0),
            ],
            Point2::ZERO,
            &TrackingParams::default(),
        );
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![1, 2, 3]);
        assert_eq!(g[0].closest, Point2::new(2.9, 0.5));
    }

    #[test]
    fn equally_close_members_resolve_to_lower_id() {
        let g = form_groups(
            &[track(7, 1.0, 1.0, 1.0, 0.0), track(4, 1.0, -1.0, 1.0, 0.0)],
            Point2::ZERO,
            &TrackingParams::default(),
        );
        assert_eq!(g[0].id, 4);
        assert_eq!(g[0].closest, Point2::new(1.0, -1.0));
    }

    fn partition(groups: &[Group]) -> Vec<Vec<u32>> {
        let mut p: Vec<Vec<u32>> = groups.iter().map(|g| g.members.clone()).collect();
        p.sort();
        p
    }

    proptest! {
        #[test]
        fn groups_partition_tracks_independently_of_order(
            raw in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.5f64..1.5, -1.5f64..1.5), 0..25),
            rotate in 0usize..25,
            robot in (-6.0f64..6.0, -6.0f64..6.0),
        ) {
            let tracks: Vec<Track> = raw
                .iter()
                .enumerate()
                .map(|(i, &(x, y, vx, vy))| track(i as u32 + 1, x, y, vx, vy))
                .collect();
            let robot = Point2::new(robot.0, robot.1);
            let params = TrackingParams::default();
            let groups = form_groups(&tracks, robot, &params);

            let mut all: Vec<u32> = groups.iter().flat_map(|g| g.members.clone()).collect();
            all.sort();
            prop_assert_eq!(all, tracks.iter().map(|t| t.id).collect::<Vec<_>>());

            for g in &groups {
                prop_assert_eq!(g.id, g.members[0]);
                let members: Vec<&Track> = tracks.iter().filter(|t| g.members.contains(&t.id)).collect();
                let d = g.closest.distance(robot);
                prop_assert!(members.iter().all(|m| d <= m.position.distance(robot)));
            }

            let mut shuffled = tracks.clone();
            if !shuffled.is_empty() {
                let k = rotate % shuffled.len();
                shuffled.rotate_left(k);
                shuffled.reverse();
            }
            let again = form_groups(&shuffled, robot, &params);
            prop_assert_eq!(partition(&groups), partition(&again));
            prop_assert_eq!(groups, again);
        }
    }
}
