use super::Point2;

const ON_EDGE_EPS: f64 = 1e-9;

/// Distance from `p` to the segment `a`-`b`, together with the closest point.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> (f64, Point2) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    let q = a + ab * t;
    (p.distance(q), q)
}

/// Inside-or-on test for a simple polygon given as an open vertex ring.
pub fn point_in_polygon(p: Point2, polygon: &[Point2]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[j];
        if point_segment_distance(p, a, b).0 <= ON_EDGE_EPS {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed area, positive for counter-clockwise rings.
pub fn polygon_area(polygon: &[Point2]) -> f64 {
    let n = polygon.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += polygon[i].cross(polygon[(i + 1) % n]);
    }
    twice / 2.0
}

pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Samples a polyline at fixed arc-length spacing starting at the first
/// vertex. The last vertex is appended when it does not coincide with the
/// last regular sample.
pub fn resample_polyline(points: &[Point2], spacing: f64) -> Vec<Point2> {
    assert!(spacing > 0.0, "spacing must be positive");
    let Some(&first) = points.first() else {
        return Vec::new();
    };
    let total = polyline_length(points);
    let count = (total / spacing + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(count + 2);
    out.push(first);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 1..=count {
        let s = k as f64 * spacing;
        while seg + 1 < points.len() - 1 && seg_start + points[seg].distance(points[seg + 1]) < s {
            seg_start += points[seg].distance(points[seg + 1]);
            seg += 1;
        }
        let a = points[seg];
        let b = points[(seg + 1).min(points.len() - 1)];
        let len = a.distance(b);
        let t = if len == 0.0 {
            0.0
        } else {
            ((s - seg_start) / len).clamp(0.0, 1.0)
        };
        out.push(a.lerp(b, t));
    }
    let last = *points.last().unwrap();
    if out.last().unwrap().distance(last) > 1e-9 * spacing.max(1.0) {
        out.push(last);
    }
    out
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Closed-segment intersection test.
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2, b: Point2, p: Point2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}
