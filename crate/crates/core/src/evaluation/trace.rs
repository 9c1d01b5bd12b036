//! Logged paths and their CSV form.
//!
//! Every trace file has the header `t,x,y,heading,mode,subgoal_x,subgoal_y`.
//! `heading` is the robot yaw or, for pedestrians and planned paths, the
//! direction of travel. `mode` is the navigation mode for robot traces,
//! `walking` for pedestrians and `planned` for shortest paths. Subgoal
//! columns are empty when there is none.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::geometry::{resample_polyline, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceLabel {
    Pedestrian,
    Robot,
    Shortest,
}

impl TraceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceLabel::Pedestrian => "p_path",
            TraceLabel::Robot => "r_path",
            TraceLabel::Shortest => "s_path",
        }
    }
}

impl fmt::Display for TraceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceLabel {
    type Err = EvaluationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "p_path" => Ok(TraceLabel::Pedestrian),
            "r_path" => Ok(TraceLabel::Robot),
            "s_path" => Ok(TraceLabel::Shortest),
            _ => Err(EvaluationError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub mode: String,
    pub subgoal_x: Option<f64>,
    pub subgoal_y: Option<f64>,
}

impl TraceRow {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn subgoal(&self) -> Option<Point2> {
        Some(Point2::new(self.subgoal_x?, self.subgoal_y?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub label: TraceLabel,
    rows: Vec<TraceRow>,
}

impl PathTrace {
    /// Checks that there are at least two rows and that time strictly
    /// increases.
    pub fn new(label: TraceLabel, rows: Vec<TraceRow>) -> Result<Self, EvaluationError> {
        if rows.len() < 2 {
            return Err(EvaluationError::ShortTrace(rows.len()));
        }
        if let Some(i) = rows.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(EvaluationError::NonIncreasingTime { row: i + 1 });
        }
        Ok(PathTrace { label, rows })
    }

    /// A trace of an untimed polyline traversed at constant `speed`, with
    /// repeated vertices dropped.
    pub fn from_polyline(
        label: TraceLabel,
        points: &[Point2],
        speed: f64,
        mode: &str,
    ) -> Result<Self, EvaluationError> {
        let mut pts: Vec<Point2> = Vec::with_capacity(points.len());
        for &p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        let mut rows = Vec::with_capacity(pts.len());
        let mut s = 0.0;
        for (i, &p) in pts.iter().enumerate() {
            if i > 0 {
                s += pts[i - 1].distance(p);
            }
            let dir = if i + 1 < pts.len() {
                pts[i + 1] - p
            } else {
                p - pts[i.saturating_sub(1)]
            };
            rows.push(TraceRow {
                t: s / speed,
                x: p.x,
                y: p.y,
                heading: dir.angle(),
                mode: mode.to_string(),
                subgoal_x: None,
                subgoal_y: None,
            });
        }
        PathTrace::new(label, rows)
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.rows.iter().map(TraceRow::position).collect()
    }

    pub fn length(&self) -> f64 {
        crate::geometry::polyline_length(&self.positions())
    }

    /// Point set sampled every `spacing` meters of arc length.
    pub fn sample(&self, spacing: f64) -> Vec<Point2> {
        resample_polyline(&self.positions(), spacing)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvaluationError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(label: TraceLabel, input: R) -> Result<Self, EvaluationError> {
        let mut rd = csv::Reader::from_reader(input);
        let rows = rd.deserialize().collect::<Result<Vec<TraceRow>, _>>()?;
        PathTrace::new(label, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, x: f64, y: f64) -> TraceRow {
        TraceRow {
            t,
            x,
            y,
            heading: 0.1,
            mode: "walking".into(),
            subgoal_x: None,
            subgoal_y: None,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut rows = vec![row(0.0, 0.1, -2.0 / 3.0), row(0.1, 1e-7, 123456.789)];
        rows[1].mode = "curb_following".into();
        rows[1].subgoal_x = Some(0.3);
        rows[1].subgoal_y = Some(-1.0 / 7.0);
        let tr = PathTrace::new(TraceLabel::Robot, rows).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y,heading,mode,subgoal_x,subgoal_y\n"));
        assert!(text.lines().nth(1).unwrap().ends_with("walking,,"));
        let back = PathTrace::read_csv(TraceLabel::Robot, buf.as_slice()).unwrap();
        assert_eq!(back, tr);
        assert_eq!(back.rows()[1].subgoal(), Some(Point2::new(0.3, -1.0 / 7.0)));
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(matches!(
            PathTrace::new(TraceLabel::Robot, vec![row(0.0, 0.0, 0.0)]),
            Err(EvaluationError::ShortTrace(1))
        ));
        let r = PathTrace::new(
            TraceLabel::Robot,
            vec![row(0.0, 0.0, 0.0), row(0.0, 1.0, 0.0)],
        );
        assert!(matches!(
            r,
            Err(EvaluationError::NonIncreasingTime { row: 1 })
        ));
    }

    #[test]
    fn polyline_trace_times_follow_arc_length() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 4.0),
            Point2::new(3.0, 4.0),
            Point2::new(3.0, 6.0),
        ];
        let tr = PathTrace::from_polyline(TraceLabel::Shortest, &pts, 2.0, "planned").unwrap();
        let ts: Vec<f64> = tr.rows().iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 2.5, 3.5]);
        assert_eq!(tr.length(), 7.0);
        assert_eq!(tr.sample(0.1).len(), 71);
    }

    #[test]
    fn labels_round_trip() {
        for l in [
            TraceLabel::Pedestrian,
            TraceLabel::Robot,
            TraceLabel::Shortest,
        ] {
            assert_eq!(l.as_str().parse::<TraceLabel>().unwrap(), l);
        }
        assert!("q_path".parse::<TraceLabel>().is_err());
    }
}
