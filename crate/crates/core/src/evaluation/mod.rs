//! Path similarity between pedestrian, robot and shortest paths, with
//! per-trial statistics.
//!
//! Point-to-point distance is `sqrt(dx² + dy²)` throughout, so the
//! tree-accelerated metrics reproduce the exhaustive definition bit for bit.

mod stats;
mod trace;

pub use stats::{
    box_plot, mean, quantile, std_dev, summarize, welch_t_test, BoxPlot, Summary, WelchTest,
};
pub use trace::{PathTrace, TraceLabel, TraceRow};

use thiserror::Error;

use crate::geometry::{KdTree2, Point2};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("a path trace needs at least two rows, found {0}")]
    ShortTrace(usize),
    #[error("trace time does not increase at row {row}")]
    NonIncreasingTime { row: usize },
    #[error("unknown trace label {0:?}")]
    UnknownLabel(String),
    #[error("need at least {needed} values, found {found}")]
    TooFewValues { found: usize, needed: usize },
    #[error("empty point set")]
    EmptyPath,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn dist(a: Point2, b: Point2) -> f64 {
    a.distance_squared(b).sqrt()
}

/// Distance from each source point to its nearest target point, by
/// exhaustive search.
pub fn nearest_distances(source: &[Point2], target: &[Point2]) -> Vec<f64> {
    source
        .iter()
        .map(|&x| {
            target
                .iter()
                .map(|&y| dist(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Largest nearest-neighbour distance from `source` into `target`.
pub fn h_directional(source: &[Point2], target: &[Point2]) -> f64 {
    assert!(!source.is_empty() && !target.is_empty(), "empty point set");
    nearest_distances(source, target)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Mean nearest-neighbour distance from `source` into `target`.
pub fn h_average(source: &[Point2], target: &[Point2]) -> f64 {
    assert!(!source.is_empty() && !target.is_empty(), "empty point set");
    nearest_distances(source, target).iter().sum::<f64>() / source.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffReport {
    pub h_directional: f64,
    pub h_average: f64,
    /// Number of source points.
    pub source_points: usize,
}

/// Both metrics at once, with nearest neighbours found through a k-d tree
/// over `target`. Results equal [`h_directional`] and [`h_average`] exactly.
pub fn hausdorff(source: &[Point2], target: &[Point2]) -> Result<HausdorffReport, EvaluationError> {
    if source.is_empty() || target.is_empty() {
        return Err(EvaluationError::EmptyPath);
    }
    let tree = KdTree2::new(target.to_vec());
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for &x in source {
        let d = tree
            .nearest_distance_squared(x)
            .expect("non-empty tree")
            .sqrt();
        max = max.max(d);
        sum += d;
    }
    Ok(HausdorffReport {
        h_directional: max,
        h_average: sum / source.len() as f64,
        source_points: source.len(),
    })
}

/// Metrics of one pedestrian trial against one robot trial and against the
/// shortest path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub p_trial: usize,
    pub r_trial: usize,
    pub pr: HausdorffReport,
    pub ps: HausdorffReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricComparison {
    pub pr: Summary,
    pub ps: Summary,
    /// P-R population against P-S population.
    pub welch: WelchTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialComparison {
    /// Every pedestrian trial against every robot trial, pedestrian-major.
    pub pairs: Vec<PairMetrics>,
    /// Each pedestrian trial against the shortest path.
    pub ps: Vec<HausdorffReport>,
    pub h_directional: MetricComparison,
    pub h_average: MetricComparison,
}

/// Compares every pedestrian trace with every robot trace and with the
/// shortest path, using the pedestrian trace as the source set.
///
/// Traces are turned into point sets by sampling every `spacing` meters.
/// The P-S population has one value per pedestrian trial.
pub fn compare_trials(
    p_traces: &[PathTrace],
    r_traces: &[PathTrace],
    s_trace: &PathTrace,
    spacing: f64,
) -> Result<TrialComparison, EvaluationError> {
    for n in [p_traces.len(), r_traces.len()] {
        if n < 2 {
            return Err(EvaluationError::TooFewValues {
                found: n,
                needed: 2,
            });
        }
    }
    let p_sets: Vec<Vec<Point2>> = p_traces.iter().map(|t| t.sample(spacing)).collect();
    let r_sets: Vec<Vec<Point2>> = r_traces.iter().map(|t| t.sample(spacing)).collect();
    let s_set = s_trace.sample(spacing);

    let ps = p_sets
        .iter()
        .map(|p| hausdorff(p, &s_set))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pairs = Vec::with_capacity(p_sets.len() * r_sets.len());
    for (i, p) in p_sets.iter().enumerate() {
        for (j, r) in r_sets.iter().enumerate() {
            pairs.push(PairMetrics {
                p_trial: i,
                r_trial: j,
                pr: hausdorff(p, r)?,
                ps: ps[i],
            });
        }
    }

    let metric = |f: fn(&HausdorffReport) -> f64| -> Result<MetricComparison, EvaluationError> {
        let pr: Vec<f64> = pairs.iter().map(|m| f(&m.pr)).collect();
        let pss: Vec<f64> = ps.iter().map(f).collect();
        Ok(MetricComparison {
            pr: summarize(&pr)?,
            ps: summarize(&pss)?,
            welch: welch_t_test(&pr, &pss)?,
        })
    };
    Ok(TrialComparison {
        h_directional: metric(|h| h.h_directional)?,
        h_average: metric(|h| h.h_average)?,
        pairs,
        ps,
    })
}
