//! Batch runner: loads a scenario, runs seeded robot and pedestrian trials,
//! and writes traces, path-similarity metrics and episode summaries.
//!
//! Files written to the output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `r_path_NN.csv`, `p_path_NN.csv`, `s_path.csv` | traces, header `t,x,y,heading,mode,subgoal_x,subgoal_y` |
//! | `episodes.csv` | one row per robot trial |
//! | `pairwise_metrics.csv` | one row per (pedestrian trial, robot trial) |
//! | `report.csv` | mean and standard deviation per comparison and metric |
//! | `boxplot.csv` | min, quartiles and max per comparison and metric |
//! | `significance.csv` | Welch t-test of P-R against P-S per metric |
//! | `report.txt` | the same numbers as a table |
//! | `run_meta.toml` | run settings and the effective parameters |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sidewalk_core::evaluation::{
    compare_trials, EvaluationError, MetricComparison, PathTrace, TraceLabel, TrialComparison,
};
use sidewalk_core::mission::{
    run_episode, Episode, EpisodeOptions, MissionError, Outcome, Strategy,
};
use sidewalk_core::scenario::{parse_override, record_probe, Scenario, ScenarioError};
use sidewalk_core::world::PathError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: ScenarioError,
    },
    #[error(transparent)]
    Override(ScenarioError),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("{0}")]
    Evaluation(#[from] EvaluationError),
    #[error("{0}")]
    Mission(#[from] MissionError),
    #[error("{path}: {source}")]
    Trace {
        path: PathBuf,
        #[source]
        source: EvaluationError,
    },
    #[error("pedestrian trial {0} produced no trace")]
    EmptyProbe(usize),
    #[error("{dir}: no {label} traces found")]
    MissingTraces { dir: PathBuf, label: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub strategy: Strategy,
    /// `key=value` strings; keys are dotted paths, relative to `[params]`
    /// unless they name a top-level scenario field.
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub episode: Episode,
    pub probe: PathTrace,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: Scenario,
    pub trials: Vec<TrialResult>,
    /// `Err` when the goal cannot be reached from the start at all.
    pub shortest: Result<PathTrace, PathError>,
    /// Present when there are at least two trials and a shortest path.
    pub comparison: Option<TrialComparison>,
}

impl RunReport {
    pub fn all_complete(&self) -> bool {
        self.shortest.is_ok()
            && self
                .trials
                .iter()
                .all(|t| t.episode.summary.outcome == Outcome::Complete)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn write_trace(path: &Path, trace: &PathTrace) -> Result<(), CliError> {
    let mut buf = Vec::new();
    trace
        .write_csv(&mut buf)
        .map_err(|source| CliError::Trace {
            path: path.to_path_buf(),
            source,
        })?;
    write_file(path, &buf)
}

pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let overrides = overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Override)?;
    Scenario::from_toml_with_overrides(&text, &overrides).map_err(|source| CliError::Scenario {
        path: path.to_path_buf(),
        source,
    })
}

/// One robot trial and one pedestrian trial with the same flow seed.
pub fn run_trial(
    scenario: &Scenario,
    trial: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<TrialResult, CliError> {
    let mut world = scenario.robot_world(seed);
    let options = EpisodeOptions {
        max_time: scenario.max_time,
        strategy,
        seed,
    };
    let episode = run_episode(&mut world, scenario.mission()?, &scenario.params, options)?;
    let mut probe_world = scenario.probe_world(seed);
    let probe = record_probe(&mut probe_world, &scenario.params, scenario.max_time)
        .ok_or(CliError::EmptyProbe(trial))?;
    Ok(TrialResult {
        trial,
        seed,
        episode,
        probe,
    })
}

/// Runs all trials (in parallel) and computes the comparison, without
/// touching the file system.
pub fn simulate(
    scenario: &Scenario,
    trials: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<RunReport, CliError> {
    if trials == 0 {
        return Err(CliError::NoTrials);
    }
    let shortest = scenario.shortest_path().map(|pts| {
        PathTrace::from_polyline(TraceLabel::Shortest, &pts, scenario.robot.v_max, "planned")
            .expect("a path between distinct points has two vertices")
    });
    let results = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, i, seed.wrapping_add(i as u64), strategy))
        .collect::<Result<Vec<_>, _>>()?;
    let comparison = match &shortest {
        Ok(s) if trials >= 2 => {
            let p: Vec<PathTrace> = results.iter().map(|r| r.probe.clone()).collect();
            let r = results
                .iter()
                .map(|r| r.episode.trace())
                .collect::<Result<Vec<_>, _>>()?;
            Some(compare_trials(
                &p,
                &r,
                s,
                scenario.params.evaluation.sample_spacing,
            )?)
        }
        _ => None,
    };
    Ok(RunReport {
        scenario: scenario.clone(),
        trials: results,
        shortest,
        comparison,
    })
}

pub fn run(config: &RunConfig) -> Result<RunReport, CliError> {
    let scenario = load_scenario(&config.scenario, &config.overrides)?;
    let report = simulate(&scenario, config.trials, config.seed, config.strategy)?;
    write_artifacts(config, &report)?;
    Ok(report)
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Auto => "auto",
        Strategy::SurfOnly => "surf",
        Strategy::CurbOnly => "curb",
    }
}

pub fn write_artifacts(config: &RunConfig, report: &RunReport) -> Result<(), CliError> {
    let out = &config.out;
    fs::create_dir_all(out).map_err(io_err(out))?;
    for t in &report.trials {
        write_trace(
            &out.join(format!("r_path_{:02}.csv", t.trial)),
            &t.episode.trace()?,
        )?;
        write_trace(&out.join(format!("p_path_{:02}.csv", t.trial)), &t.probe)?;
    }
    if let Ok(s) = &report.shortest {
        write_trace(&out.join("s_path.csv"), s)?;
    }

    let mut csv = String::from(
        "trial,seed,outcome,duration,min_clearance,collisions,curb_crossings,distance_travelled,waypoints_reached,final_x,final_y\n",
    );
    for t in &report.trials {
        let s = &t.episode.summary;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            t.trial,
            t.seed,
            s.outcome,
            s.duration,
            s.min_clearance,
            s.collisions,
            s.curb_crossings,
            s.distance_travelled,
            s.waypoints_reached,
            s.final_position.x,
            s.final_position.y
        )
        .expect("write to string");
    }
    write_file(&out.join("episodes.csv"), csv.as_bytes())?;

    if let Some(c) = &report.comparison {
        write_comparison(out, c)?;
    }
    write_file(
        &out.join("report.txt"),
        report_text(config, report).as_bytes(),
    )?;
    write_file(
        &out.join("run_meta.toml"),
        run_meta(config, &report.scenario).as_bytes(),
    )
}

fn write_comparison(out: &Path, c: &TrialComparison) -> Result<(), CliError> {
    let mut pairs = String::from(
        "p_trial,r_trial,pr_h_directional,pr_h_average,ps_h_directional,ps_h_average\n",
    );
    for m in &c.pairs {
        writeln!(
            pairs,
            "{},{},{},{},{},{}",
            m.p_trial,
            m.r_trial,
            m.pr.h_directional,
            m.pr.h_average,
            m.ps.h_directional,
            m.ps.h_average
        )
        .expect("write to string");
    }
    write_file(&out.join("pairwise_metrics.csv"), pairs.as_bytes())?;

    let metrics = [
        ("h_directional", &c.h_directional),
        ("h_average", &c.h_average),
    ];
    let mut summary = String::from("metric,comparison,n,mean,std_dev\n");
    let mut boxes = String::from("metric,comparison,min,q1,median,q3,max\n");
    let mut sig = String::from("metric,t,df,p_value\n");
    for (name, m) in metrics {
        for (label, s) in [("P-R", &m.pr), ("P-S", &m.ps)] {
            writeln!(summary, "{name},{label},{},{},{}", s.n, s.mean, s.std_dev)
                .expect("write to string");
            let b = &s.boxplot;
            writeln!(
                boxes,
                "{name},{label},{},{},{},{},{}",
                b.min, b.q1, b.median, b.q3, b.max
            )
            .expect("write to string");
        }
        writeln!(
            sig,
            "{name},{},{},{}",
            m.welch.t, m.welch.df, m.welch.p_value
        )
        .expect("write to string");
    }
    write_file(&out.join("report.csv"), summary.as_bytes())?;
    write_file(&out.join("boxplot.csv"), boxes.as_bytes())?;
    write_file(&out.join("significance.csv"), sig.as_bytes())
}

/// Human-readable summary: a P-R / P-S table of mean distances followed by
/// the t-tests and per-trial outcomes.
pub fn report_text(config: &RunConfig, report: &RunReport) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "scenario: {}", report.scenario.name);
    let _ = writeln!(
        w,
        "trials: {}  seed: {}  mode: {}",
        config.trials,
        config.seed,
        strategy_name(config.strategy)
    );
    let _ = writeln!(w);
    match (&report.shortest, &report.comparison) {
        (Err(e), _) => {
            let _ = writeln!(w, "shortest path: {e}");
        }
        (Ok(_), None) => {
            let _ = writeln!(w, "path comparison needs at least two trials");
        }
        (Ok(_), Some(c)) => comparison_table(w, c),
    }
    let _ = writeln!(w);
    let _ = writeln!(
        w,
        "trial  outcome   duration  min_clearance  collisions  curb_crossings"
    );
    for t in &report.trials {
        let e = &t.episode.summary;
        let _ = writeln!(
            w,
            "{:>5}  {:<8}  {:>8.1}  {:>13.3}  {:>10}  {:>14}",
            t.trial,
            e.outcome.as_str(),
            e.duration,
            e.min_clearance,
            e.collisions,
            e.curb_crossings
        );
    }
    s
}

fn comparison_table(w: &mut String, c: &TrialComparison) {
    let _ = writeln!(w, "mean distance (m)   h_directional   h_average");
    let row = |w: &mut String, label: &str, a: f64, b: f64| {
        let _ = writeln!(w, "{label:<18}  {a:>13.4}   {b:>9.4}");
    };
    row(w, "P-R", c.h_directional.pr.mean, c.h_average.pr.mean);
    row(w, "P-S", c.h_directional.ps.mean, c.h_average.ps.mean);
    let _ = writeln!(w);
    for (name, m) in [
        ("h_directional", &c.h_directional),
        ("h_average", &c.h_average),
    ] {
        describe_metric(w, name, m);
    }
}

fn describe_metric(w: &mut String, name: &str, m: &MetricComparison) {
    let _ = writeln!(
        w,
        "{name}: P-R (M={:.4}, SD={:.4}, n={})  P-S (M={:.4}, SD={:.4}, n={})  Welch t={:.3} df={:.1} p={:.3e}",
        m.pr.mean, m.pr.std_dev, m.pr.n, m.ps.mean, m.ps.std_dev, m.ps.n, m.welch.t, m.welch.df, m.welch.p_value
    );
}

fn run_meta(config: &RunConfig, scenario: &Scenario) -> String {
    let mut run = toml::Table::new();
    run.insert("scenario".into(), scenario.name.clone().into());
    run.insert(
        "scenario_file".into(),
        config.scenario.display().to_string().into(),
    );
    run.insert("trials".into(), (config.trials as i64).into());
    run.insert("seed".into(), toml::Value::String(config.seed.to_string()));
    run.insert("mode".into(), strategy_name(config.strategy).into());
    run.insert("max_time".into(), scenario.max_time.into());
    run.insert(
        "overrides".into(),
        toml::Value::Array(config.overrides.iter().map(|o| o.clone().into()).collect()),
    );
    let sections: [(&str, toml::Value); 4] = [
        ("run", run.into()),
        (
            "robot",
            toml::Value::try_from(&scenario.robot).expect("serializable"),
        ),
        (
            "waypoints",
            toml::Value::try_from(&scenario.waypoints).expect("serializable"),
        ),
        (
            "params",
            toml::Value::try_from(&scenario.params).expect("serializable"),
        ),
    ];
    // One document per section keeps the run settings at the top.
    let mut out = String::new();
    for (key, value) in sections {
        let mut doc = toml::Table::new();
        doc.insert(key.into(), value);
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&toml::to_string(&doc).expect("serializable"));
    }
    out
}

fn read_traces(dir: &Path, prefix: &str, label: TraceLabel) -> Result<Vec<PathTrace>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let f = fs::File::open(p).map_err(io_err(p))?;
            PathTrace::read_csv(label, f).map_err(|source| CliError::Trace {
                path: p.clone(),
                source,
            })
        })
        .collect()
}

/// Recomputes the path comparison from the trace files in `dir`.
pub fn evaluate_dir(dir: &Path, spacing: f64) -> Result<TrialComparison, CliError> {
    let p = read_traces(dir, "p_path_", TraceLabel::Pedestrian)?;
    let r = read_traces(dir, "r_path_", TraceLabel::Robot)?;
    let s = read_traces(dir, "s_path", TraceLabel::Shortest)?;
    for (list, label) in [(&p, "p_path"), (&r, "r_path"), (&s, "s_path")] {
        if list.is_empty() {
            return Err(CliError::MissingTraces {
                dir: dir.to_path_buf(),
                label,
            });
        }
    }
    Ok(compare_trials(&p, &r, &s[0], spacing)?)
}

/// Writes the comparison files for `dir` back into `dir` and returns the
/// table text.
pub fn evaluate(dir: &Path, spacing: f64) -> Result<String, CliError> {
    let c = evaluate_dir(dir, spacing)?;
    write_comparison(dir, &c)?;
    let mut s = String::new();
    comparison_table(&mut s, &c);
    Ok(s)
}
