//! Group surfing: follow the fastest pedestrian group that heads toward the
//! waypoint and that the robot can keep up with.

use crate::geometry::{Point2, Vec2};
use crate::tracking::Group;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfContext {
    pub robot: Point2,
    pub waypoint: Point2,
    /// `waypoint - robot`.
    pub to_waypoint: Vec2,
    pub v_max: f64,
}

impl SurfContext {
    pub fn new(robot: Point2, waypoint: Point2, v_max: f64) -> Self {
        SurfContext {
            robot,
            waypoint,
            to_waypoint: waypoint - robot,
            v_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurfDecision {
    pub selected_group: Option<u32>,
    pub subgoal: Option<Point2>,
}

impl SurfDecision {
    fn follow(g: &Group) -> Self {
        SurfDecision {
            selected_group: Some(g.id),
            subgoal: Some(g.closest),
        }
    }
}

/// Whether a group moves toward the waypoint (strictly positive projection).
pub fn heads_toward_waypoint(g: &Group, ctx: &SurfContext) -> bool {
    g.velocity.dot(ctx.to_waypoint) > 0.0
}

/// Groups whose mean velocity has a strictly positive component toward the
/// waypoint, in input order.
pub fn filter_candidates(groups: &[Group], ctx: &SurfContext) -> Vec<Group> {
    groups
        .iter()
        .filter(|g| heads_toward_waypoint(g, ctx))
        .cloned()
        .collect()
}

fn eligible(g: &Group, ctx: &SurfContext) -> bool {
    g.speed() <= ctx.v_max
}

fn fastest<'a>(candidates: impl Iterator<Item = &'a Group>) -> Option<&'a Group> {
    candidates.fold(None, |best: Option<&Group>, g| match best {
        Some(b) if b.speed() > g.speed() || (b.speed() == g.speed() && b.id < g.id) => Some(b),
        _ => Some(g),
    })
}

/// Picks the fastest candidate no faster than `v_max`; equal speeds go to the
/// lower group id.
pub fn select_group(candidates: &[Group], ctx: &SurfContext) -> SurfDecision {
    fastest(candidates.iter().filter(|g| eligible(g, ctx)))
        .map(SurfDecision::follow)
        .unwrap_or_default()
}

/// One planning cycle without memory of earlier selections.
pub fn surf_cycle(groups: &[Group], ctx: &SurfContext) -> SurfDecision {
    select_group(&filter_candidates(groups, ctx), ctx)
}

/// Surfing with optional hysteresis.
///
/// With a zero `switch_margin` every cycle is an independent
/// [`surf_cycle`]. Otherwise the robot keeps its current group while that
/// group remains a candidate and no other is faster by more than the margin.
#[derive(Debug, Clone, Default)]
pub struct GroupSurfer {
    switch_margin: f64,
    current: Option<u32>,
}

impl GroupSurfer {
    pub fn new(switch_margin: f64) -> Self {
        GroupSurfer {
            switch_margin,
            current: None,
        }
    }

    pub fn current(&self) -> Option<u32> {
        self.current
    }

    pub fn cycle(&mut self, groups: &[Group], ctx: &SurfContext) -> SurfDecision {
        let candidates = filter_candidates(groups, ctx);
        let mut decision = select_group(&candidates, ctx);
        if self.switch_margin > 0.0 {
            let kept = self
                .current
                .and_then(|id| candidates.iter().find(|g| g.id == id && eligible(g, ctx)));
            if let (Some(kept), Some(best)) = (kept, decision.selected_group) {
                let best_speed = candidates
                    .iter()
                    .find(|g| g.id == best)
                    .map_or(0.0, Group::speed);
                if best_speed <= kept.speed() + self.switch_margin {
                    decision = SurfDecision::follow(kept);
                }
            }
        }
        self.current = decision.selected_group;
        decision
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn group(id: u32, vx: f64, vy: f64) -> Group {
        Group {
            id,
            members: vec![id],
            velocity: Vec2::new(vx, vy),
            closest: Point2::new(id as f64, 1.0),
        }
    }

    fn ctx() -> SurfContext {
        SurfContext::new(Point2::ZERO, Point2::new(10.0, 0.0), 0.8)
    }

    #[test]
    fn filter_keeps_only_positive_projection() {
        let kept = filter_candidates(
            &[group(1, 1.0, 0.0), group(2, -1.0, 0.2), group(3, 0.0, 1.0)],
            &ctx(),
        );
        assert_eq!(kept.iter().map(|g| g.id).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn faster_eligible_group_wins() {
        let d = select_group(&[group(1, 0.5, 0.0), group(2, 0.7, 0.0)], &ctx());
        assert_eq!(d.selected_group, Some(2));
        assert_eq!(d.subgoal, Some(Point2::new(2.0, 1.0)));
    }

    #[test]
    fn too_fast_group_is_not_followed() {
        assert_eq!(
            select_group(&[group(1, 0.9, 0.0)], &ctx()),
            SurfDecision::default()
        );
    }

    #[test]
    fn speed_equal_to_limit_is_eligible() {
        assert_eq!(
            select_group(&[group(3, 0.8, 0.0)], &ctx()).selected_group,
            Some(3)
        );
    }

    #[test]
    fn single_slow_candidate_is_selected() {
        let d = select_group(&[group(4, 0.3, 0.0)], &ctx());
        assert_eq!(d.selected_group, Some(4));
        assert_eq!(d.subgoal, Some(Point2::new(4.0, 1.0)));
    }

    #[test]
    fn no_groups_no_decision() {
        assert_eq!(surf_cycle(&[], &ctx()), SurfDecision::default());
    }

    #[test]
    fn ties_go_to_lower_id() {
        let d = select_group(&[group(9, 0.6, 0.0), group(5, 0.6, 0.0)], &ctx());
        assert_eq!(d.selected_group, Some(5));
    }

    #[test]
    fn faster_newcomer_takes_over() {
        let mut surfer = GroupSurfer::new(0.0);
        assert_eq!(
            surfer.cycle(&[group(1, 0.5, 0.0)], &ctx()).selected_group,
            Some(1)
        );
        let d = surfer.cycle(&[group(1, 0.5, 0.0), group(2, 0.7, 0.0)], &ctx());
        assert_eq!(d.selected_group, Some(2));
    }

    #[test]
    fn reversing_group_is_dropped_next_cycle() {
        let mut surfer = GroupSurfer::new(0.0);
        let frames = [
            vec![group(1, 0.6, 0.0), group(2, 0.3, 0.0)],
            vec![group(1, -0.6, 0.0), group(2, 0.3, 0.0)],
        ];
        let picks: Vec<_> = frames
            .iter()
            .map(|f| surfer.cycle(f, &ctx()).selected_group)
            .collect();
        assert_eq!(picks, vec![Some(1), Some(2)]);
    }

    #[test]
    fn margin_suppresses_switching_between_similar_groups() {
        let mut surfer = GroupSurfer::new(0.1);
        surfer.cycle(&[group(1, 0.55, 0.0)], &ctx());
        let d = surfer.cycle(&[group(1, 0.55, 0.0), group(2, 0.6, 0.0)], &ctx());
        assert_eq!(d.selected_group, Some(1));
        let d = surfer.cycle(&[group(1, 0.55, 0.0), group(2, 0.7, 0.0)], &ctx());
        assert_eq!(d.selected_group, Some(2));
    }

    proptest! {
        #[test]
        fn selection_properties(
            raw in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5), 0..12),
            wx in -10.0f64..10.0, wy in -10.0f64..10.0,
            v_max in 0.1f64..1.5,
            scale in 0.1f64..10.0,
        ) {
            let groups: Vec<Group> = raw.iter().enumerate().map(|(i, &(x, y))| group(i as u32, x, y)).collect();
            let c = SurfContext::new(Point2::ZERO, Point2::new(wx, wy), v_max);
            let d = surf_cycle(&groups, &c);
            prop_assert_eq!(d.selected_group.is_some(), d.subgoal.is_some());
            for g in filter_candidates(&groups, &c) {
                prop_assert!(g.velocity.dot(c.to_waypoint) > 0.0);
            }
            if let Some(id) = d.selected_group {
                let chosen = &groups[id as usize];
                prop_assert!(chosen.speed() <= v_max);
                prop_assert_eq!(d.subgoal, Some(chosen.closest));
                for g in filter_candidates(&groups, &c) {
                    if g.speed() <= v_max {
                        prop_assert!(g.speed() <= chosen.speed());
                    }
                }
            }

            // Uniform scaling of speeds and limit; near ties and near-limit
            // speeds are excluded since rounding may legitimately flip them.
            let speeds: Vec<f64> = groups.iter().map(Group::speed).collect();
            let fragile = speeds.iter().any(|s| (s - v_max).abs() < 1e-9 * v_max)
                || speeds.iter().enumerate().any(|(i, a)| speeds[i + 1..].iter().any(|b| (a - b).abs() < 1e-9));
            prop_assume!(!fragile);
            let scaled: Vec<Group> = groups
                .iter()
                .map(|g| Group { velocity: g.velocity * scale, ..g.clone() })
                .collect();
            let cs = SurfContext::new(Point2::ZERO, Point2::new(wx, wy), v_max * scale);
            prop_assert_eq!(surf_cycle(&scaled, &cs).selected_group, d.selected_group);
        }
    }
}
