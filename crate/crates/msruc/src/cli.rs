//! Pipeline orchestration: fit → tree → solve → eval, decoupled through
//! files in a working directory so stages can be re-run or spliced with an
//! external solver at the MPS boundary.
//!
//! Two profiles run side by side: the configured one (cubic with matched
//! value and slope by default) and the first-order benchmark. Files are
//! suffixed `_ct` and `_dt` accordingly.

use crate::bernstein::{fit_spline, Spline};
use crate::evaluate::{self, BandMode, EvalReport, TestCase};
use crate::fleet::{self, SampleDay};
use crate::milp::{self, UcSolution};
use crate::scenario::{self, ScenarioTree};
use crate::solver::{self, MilpStatus};
use crate::svg;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("model infeasible: {0}")]
    Infeasible(String),
    #[error("resource limit: {0}")]
    Limit(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Documented process exit codes: 0 success, 2 infeasible, 3 input
    /// error, 4 resource limit, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Input(_) => 3,
            CliError::Limit(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

macro_rules! input_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}
input_from!(
    crate::fleet::FleetError,
    crate::bernstein::BernsteinError,
    crate::scenario::ScenarioError,
    crate::milp::MilpError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("json: {e}"))
    }
}

impl From<crate::solver::SolverError> for CliError {
    fn from(e: crate::solver::SolverError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<crate::evaluate::EvalError> for CliError {
    fn from(e: crate::evaluate::EvalError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Everything a pipeline stage needs; mirrors the command-line flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub load: PathBuf,
    pub fleet: PathBuf,
    pub workdir: PathBuf,
    pub degree: usize,
    pub continuity: usize,
    /// Per-stage node budget; derived from the horizon when absent.
    pub stages: Option<Vec<usize>>,
    pub rho: f64,
    pub gap: f64,
    pub seed: u64,
    pub train_frac: f64,
    pub scale: f64,
    /// Resampling step in hours for plot output.
    pub step: f64,
    pub export_only: bool,
    pub reproducible: bool,
    pub node_limit: u64,
    pub time_limit: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            load: PathBuf::new(),
            fleet: PathBuf::new(),
            workdir: PathBuf::from("."),
            degree: 3,
            continuity: 2,
            stages: None,
            rho: 3.0,
            gap: 0.05,
            seed: 0,
            train_frac: 0.7,
            scale: 1.0,
            step: 1.0 / 12.0,
            export_only: false,
            reproducible: false,
            node_limit: 5_000_000,
            time_limit: Duration::from_secs(3600),
        }
    }
}

impl RunConfig {
    /// Parameter-range validation shared by every stage; file existence is
    /// checked where the files are opened.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |message: String| Err(CliError::Input(message));
        if self.degree < 1 {
            return bad(format!("degree must be at least 1, got {}", self.degree));
        }
        if !(1..=2).contains(&self.continuity) || self.continuity > self.degree {
            return bad(format!(
                "continuity must be 1 or 2 and at most the degree, got {} with degree {}",
                self.continuity, self.degree
            ));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be a non-negative number, got {}", self.rho));
        }
        if !(0.0..=1.0).contains(&self.gap) {
            return bad(format!("gap must lie in [0, 1], got {}", self.gap));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_frac
            ));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if let Some(stages) = &self.stages {
            if stages.is_empty() {
                return bad("--stages must not be empty".into());
            }
        }
        Ok(())
    }
}

/// Timestamp header; dropped under `--reproducible`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub created_unix: u64,
}

fn meta(config: &RunConfig) -> Option<Meta> {
    if config.reproducible {
        None
    } else {
        Some(Meta {
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineDay {
    pub id: String,
    pub train: bool,
    pub rms_residual: f64,
    pub spline: Spline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub degree: usize,
    pub continuity: usize,
    pub hours: usize,
    pub scale: f64,
    pub dropped: Vec<(String, String)>,
    pub days: Vec<SplineDay>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    /// Day ids behind the tree's member indices, in order.
    pub train_ids: Vec<String>,
    pub tree: ScenarioTree,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub status: String,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub constraint_census: BTreeMap<String, usize>,
    pub variable_census: BTreeMap<String, usize>,
    pub solution: UcSolution,
}

/// The two model profiles a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Ct,
    Dt,
}

impl Profile {
    pub fn suffix(self) -> &'static str {
        match self {
            Profile::Ct => "ct",
            Profile::Dt => "dt",
        }
    }
}

pub fn splines_path(config: &RunConfig, profile: Profile) -> PathBuf {
    config.workdir.join(format!("splines_{}.json", profile.suffix()))
}

pub fn tree_path(config: &RunConfig, profile: Profile) -> PathBuf {
    config.workdir.join(format!("tree_{}.json", profile.suffix()))
}

pub fn solution_path(config: &RunConfig, profile: Profile) -> PathBuf {
    config.workdir.join(format!("solution_{}.json", profile.suffix()))
}

pub fn mps_path(config: &RunConfig, profile: Profile) -> PathBuf {
    config.workdir.join(format!("model_{}.mps", profile.suffix()))
}

pub fn report_path(config: &RunConfig, profile: Profile, ext: &str) -> PathBuf {
    config.workdir.join(format!("report_{}.{ext}", profile.suffix()))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Infer the horizon from the largest minute offset in the load CSV.
fn infer_hours(load: &Path) -> Result<usize, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(load)
        .map_err(|e| CliError::Input(format!("{}: {e}", load.display())))?;
    let mut max_minute = 0u32;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        if let Some(m) = record.get(1).and_then(|m| m.trim().parse::<u32>().ok()) {
            max_minute = max_minute.max(m);
        }
    }
    Ok(((max_minute / 60) + 1) as usize)
}

/// Default per-stage budget: one node in the first quarter of the horizon,
/// then 2, 4 and 8, capped by the training-set size.
pub fn default_stage_counts(hours: usize, train_count: usize) -> Vec<usize> {
    (0..hours)
        .map(|h| {
            let quarter = (4 * h) / hours.max(1);
            let c = [1usize, 2, 4, 8][quarter.min(3)];
            c.min(train_count.max(1))
        })
        .collect()
}

fn profiles(config: &RunConfig) -> [(Profile, usize, usize); 2] {
    [
        (Profile::Ct, config.degree, config.continuity),
        (Profile::Dt, 1, 1),
    ]
}

/// Fit every complete day for both profiles and record the train/test
/// split.
pub fn cmd_fit(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    std::fs::create_dir_all(&config.workdir)?;
    let hours = infer_hours(&config.load)?;
    let ingest = fleet::load_sample_days(&config.load, config.scale, hours)?;
    for (id, reason) in &ingest.dropped {
        eprintln!("warning: dropped day {id}: {reason}");
    }
    if ingest.days.len() < 2 {
        return Err(CliError::Input(format!(
            "need at least 2 complete days, found {}",
            ingest.days.len()
        )));
    }
    let (train, _) = fleet::split_train_test(&ingest.days, config.train_frac, config.seed)?;
    let train_ids: HashSet<&str> = train.iter().map(|d| d.id.as_str()).collect();

    for (profile, degree, continuity) in profiles(config) {
        let mut days = Vec::with_capacity(ingest.days.len());
        for day in &ingest.days {
            let fit = fit_spline(&day.hour_samples(hours), degree, continuity)
                .map_err(|e| CliError::Input(format!("day {}: {e}", day.id)))?;
            days.push(SplineDay {
                id: day.id.clone(),
                train: train_ids.contains(day.id.as_str()),
                rms_residual: fit.rms_residual,
                spline: fit.spline,
            });
        }
        let file = SplineFile {
            meta: meta(config),
            degree,
            continuity,
            hours,
            scale: config.scale,
            dropped: ingest.dropped.clone(),
            days,
        };
        write_json(&file, &splines_path(config, profile))?;
    }
    Ok(())
}

/// Reduce the training splines of each profile to a scenario tree; also
/// renders the tree figure.
pub fn cmd_tree(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    for (profile, _, _) in profiles(config) {
        let file: SplineFile = read_json(&splines_path(config, profile))?;
        let train: Vec<&SplineDay> = file.days.iter().filter(|d| d.train).collect();
        if train.is_empty() {
            return Err(CliError::Input("no training days in spline file".into()));
        }
        let stage_counts = match &config.stages {
            Some(c) => {
                if c.len() != file.hours {
                    return Err(CliError::Input(format!(
                        "--stages has {} entries for a {}-hour horizon",
                        c.len(),
                        file.hours
                    )));
                }
                c.clone()
            }
            None => default_stage_counts(file.hours, train.len()),
        };
        let splines: Vec<Spline> = train.iter().map(|d| d.spline.clone()).collect();
        let tree = scenario::build_tree(&splines, &stage_counts, file.continuity, config.seed)?;
        svg::write_tree_svg(
            &tree,
            &config.workdir.join(format!("tree_{}.svg", profile.suffix())),
        )?;
        let out = TreeFile {
            meta: meta(config),
            train_ids: train.iter().map(|d| d.id.clone()).collect(),
            tree,
        };
        write_json(&out, &tree_path(config, profile))?;
    }
    Ok(())
}

fn status_name(status: MilpStatus) -> &'static str {
    match status {
        MilpStatus::OptimalWithinGap => "optimal-within-gap",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::TimeLimit => "time-limit",
    }
}

/// Build both models, export them as MPS, and (unless `--export-only`)
/// solve and decode them.
pub fn cmd_solve(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let fleet = fleet::load_fleet(&config.fleet)?;
    let mut limited: Option<String> = None;
    for (profile, _, _) in profiles(config) {
        let tree_file: TreeFile = read_json(&tree_path(config, profile))?;
        let tree = &tree_file.tree;
        let (model, index) =
            milp::build_model(tree, &fleet, config.rho, tree.degree, tree.continuity_depth)?;
        solver::write_mps(&model, &mps_path(config, profile))?;
        if config.export_only {
            continue;
        }
        let result = solver::solve_milp(&model, config.gap, config.node_limit, config.time_limit)?;
        match result.status {
            MilpStatus::Infeasible => {
                return Err(CliError::Infeasible(format!(
                    "{} model has no feasible commitment",
                    profile.suffix()
                )));
            }
            MilpStatus::TimeLimit if result.assignment.is_none() => {
                return Err(CliError::Limit(format!(
                    "{} solve stopped at the node/time limit without an incumbent",
                    profile.suffix()
                )));
            }
            _ => {}
        }
        let assignment = result.assignment.as_ref().expect("incumbent present");
        let mut solution = milp::decode(&model, &index, assignment)?;
        solution.gap = result.gap.unwrap_or(0.0);
        let out = SolutionFile {
            meta: meta(config),
            status: status_name(result.status).to_string(),
            objective: result.objective.expect("incumbent objective"),
            best_bound: result.best_bound,
            gap: result.gap.unwrap_or(0.0),
            nodes: result.nodes,
            constraint_census: model.constraint_census(),
            variable_census: index.variable_census(),
            solution,
        };
        write_json(&out, &solution_path(config, profile))?;
        if result.status == MilpStatus::TimeLimit {
            limited = Some(format!(
                "{} solve hit the node/time limit at gap {:.4}",
                profile.suffix(),
                result.gap.unwrap_or(f64::NAN)
            ));
        }
    }
    match limited {
        Some(message) => Err(CliError::Limit(message)),
        None => Ok(()),
    }
}

/// Replay the held-out days against both solutions, write the reports and
/// band files, and print the comparison table.
pub fn cmd_eval(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let fleet = fleet::load_fleet(&config.fleet)?;
    let bands_dir = config.workdir.join("bands");
    std::fs::create_dir_all(&bands_dir)?;
    let mut reports: Vec<(Profile, EvalReport)> = Vec::new();

    for (profile, _, _) in profiles(config) {
        let spline_file: SplineFile = read_json(&splines_path(config, profile))?;
        let tree_file: TreeFile = read_json(&tree_path(config, profile))?;
        let solution_file: SolutionFile = read_json(&solution_path(config, profile))?;
        let solution = &solution_file.solution;

        let ingest = fleet::load_sample_days(&config.load, spline_file.scale, spline_file.hours)?;
        let samples_by_id: std::collections::HashMap<&str, &SampleDay> =
            ingest.days.iter().map(|d| (d.id.as_str(), d)).collect();

        let mut tests = Vec::new();
        for day in spline_file.days.iter().filter(|d| !d.train) {
            let Some(sample_day) = samples_by_id.get(day.id.as_str()) else {
                return Err(CliError::Input(format!(
                    "test day {} not found in {}",
                    day.id,
                    config.load.display()
                )));
            };
            let samples: Vec<(f64, f64)> = sample_day
                .samples
                .iter()
                .map(|&(m, mw)| (m as f64 / 60.0, mw))
                .collect();
            tests.push(TestCase { id: day.id.clone(), spline: day.spline.clone(), samples });
        }
        if tests.is_empty() {
            return Err(CliError::Input("no test days to evaluate".into()));
        }

        let report =
            evaluate::cost_report(solution, &tree_file.tree, &fleet, &tests, BandMode::Schedule)?;
        evaluate::write_report_csv(&report, &report_path(config, profile, "csv"))?;
        evaluate::write_summary_json(&report, &report_path(config, profile, "json"))?;

        // Band files per test day; figure for the worst offender (or the
        // first day when everything fits).
        let worst = report
            .days
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.max_violation_mw.total_cmp(&b.1.max_violation_mw))
            .map(|(i, _)| i)
            .unwrap_or(0);
        for (k, test) in tests.iter().enumerate() {
            let rs = evaluate::follow(solution, &tree_file.tree, &test.spline)?;
            let times: Vec<f64> = test.samples.iter().map(|&(t, _)| t).collect();
            let band = evaluate::band_at_times(&rs, &fleet, &times, BandMode::Schedule);
            evaluate::write_band_csv(
                &band,
                &test.samples,
                &bands_dir.join(format!("{}_{}.csv", test.id, profile.suffix())),
            )?;
            if k == worst {
                // Aggregate schedule polyline at the configured plot step.
                let mut plot_times = Vec::new();
                let mut i = 0usize;
                loop {
                    let t = i as f64 * config.step;
                    if t >= solution.hours as f64 - 1e-9 {
                        break;
                    }
                    plot_times.push(t);
                    i += 1;
                }
                let sched: Vec<(f64, f64)> = plot_times
                    .iter()
                    .map(|&t| {
                        let hour = (t.floor() as usize).min(solution.hours - 1);
                        let x = t - hour as f64;
                        let total: f64 = (0..fleet.len())
                            .filter(|&g| rs.commit[g][hour])
                            .map(|g| rs.schedule[g][hour].eval(x))
                            .sum();
                        (t, total)
                    })
                    .collect();
                svg::write_band_svg(
                    &band,
                    &test.samples,
                    Some(&sched),
                    &format!("{} ({})", test.id, profile.suffix()),
                    &config.workdir.join(format!("band_{}.svg", profile.suffix())),
                )?;
            }
        }
        reports.push((profile, report));
    }

    print_comparison(&reports);
    Ok(())
}

fn print_comparison(reports: &[(Profile, EvalReport)]) {
    println!("{:<28} {:>14} {:>14}", "metric", "ct", "dt");
    let get = |p: Profile| reports.iter().find(|(q, _)| *q == p).map(|(_, r)| r);
    let (ct, dt) = (get(Profile::Ct), get(Profile::Dt));
    let row = |name: &str, f: &dyn Fn(&EvalReport) -> f64| {
        let fmt = |r: Option<&EvalReport>| {
            r.map(|r| format!("{:.2}", f(r))).unwrap_or_else(|| "-".into())
        };
        println!("{:<28} {:>14} {:>14}", name, fmt(ct), fmt(dt));
    };
    row("expected day-ahead cost", &|r| r.expected_day_ahead_cost);
    row("mean testing cost", &|r| r.mean_testing_cost);
    row("reserve cost", &|r| r.reserve_cost);
    row("total testing cost", &|r| r.total_testing_cost);
    row("infeasibility rate [%]", &|r| 100.0 * r.infeasibility_rate);
}
