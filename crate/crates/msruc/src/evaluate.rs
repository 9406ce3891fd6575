//! Replay held-out days against a solved plan.
//!
//! For each test trajectory: follow the nearest tree path to fix the
//! realized commitment, turn schedule + reserves + commitment into the
//! serviceable load band, flag the samples the band cannot cover, and price
//! the followed path at day-ahead bids. The reserve and commitment-option
//! payments are decided up front by the solution, so they enter the report
//! once, not per day.

use crate::bernstein::{ControlPoly, Spline};
use crate::fleet::Fleet;
use crate::milp::UcSolution;
use crate::scenario::{ScenarioTree, TreePath};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("solution shape ({hours}h, degree {degree}) does not match tree ({tree_hours}h, degree {tree_degree})")]
    SolutionTreeMismatch { hours: usize, degree: usize, tree_hours: usize, tree_degree: usize },
    #[error("fleet does not match the solution's generators (expected {expected:?}, got {got:?})")]
    FleetMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("tree path error: {0}")]
    Tree(#[from] crate::scenario::ScenarioError),
    #[error("band and samples share no grid: {0}")]
    GridMismatch(String),
    #[error("no test days")]
    EmptyTests,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One held-out day: the fitted spline used to pick a tree path, and the
/// raw samples (fractional hours, MW) used for the feasibility check.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub id: String,
    pub spline: Spline,
    pub samples: Vec<(f64, f64)>,
}

/// The plan realized along one followed path.
#[derive(Debug, Clone)]
pub struct RealizedSchedule {
    pub path: TreePath,
    /// Commitment per generator per hour, read off the path nodes.
    pub commit: Vec<Vec<bool>>,
    /// Dispatch polynomials along the path, `[gen][hour]`.
    pub dispatch: Vec<Vec<ControlPoly>>,
    /// Edge reserves along the path, `[gen][hour]`.
    pub dispatch_res_up: Vec<Vec<ControlPoly>>,
    pub dispatch_res_down: Vec<Vec<ControlPoly>>,
    /// Published schedule and hourly reserve envelopes, `[gen][hour]`.
    pub schedule: Vec<Vec<ControlPoly>>,
    pub res_up: Vec<Vec<ControlPoly>>,
    pub res_down: Vec<Vec<ControlPoly>>,
    /// Start/stop indicators along the path, `[gen][hour]`.
    pub start: Vec<Vec<bool>>,
    pub stop: Vec<Vec<bool>>,
}

/// Which reserves define the service band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandMode {
    /// Published schedule ± hourly reserve envelopes (the market view).
    #[default]
    Schedule,
    /// Path dispatch ± edge reserves (sensitivity mode).
    PathDispatch,
}

/// Follow the tree for a test day: nearest path, then the commitment,
/// dispatch and reserve data realized along it.
pub fn follow(
    solution: &UcSolution,
    tree: &ScenarioTree,
    test: &Spline,
) -> Result<RealizedSchedule, EvalError> {
    if tree.horizon != solution.hours || tree.degree != solution.degree {
        return Err(EvalError::SolutionTreeMismatch {
            hours: solution.hours,
            degree: solution.degree,
            tree_hours: tree.horizon,
            tree_degree: tree.degree,
        });
    }
    let (path, _) = tree.nearest_path(test)?;
    let gens = solution.gen_names.len();
    let hours = solution.hours;
    let edge_idx: Vec<usize> = path
        .edge_nodes()
        .iter()
        .map(|&v| solution.edge_of_node(v).expect("path node is an edge node"))
        .collect();

    let mut rs = RealizedSchedule {
        path,
        commit: Vec::with_capacity(gens),
        dispatch: Vec::with_capacity(gens),
        dispatch_res_up: Vec::with_capacity(gens),
        dispatch_res_down: Vec::with_capacity(gens),
        schedule: solution.schedule.clone(),
        res_up: solution.res_up.clone(),
        res_down: solution.res_down.clone(),
        start: Vec::with_capacity(gens),
        stop: Vec::with_capacity(gens),
    };
    for g in 0..gens {
        rs.commit
            .push((0..hours).map(|h| solution.commit[g][edge_idx[h]]).collect());
        rs.dispatch
            .push((0..hours).map(|h| solution.dispatch[g][edge_idx[h]].clone()).collect());
        rs.dispatch_res_up
            .push((0..hours).map(|h| solution.res_edge_up[g][edge_idx[h]].clone()).collect());
        rs.dispatch_res_down
            .push((0..hours).map(|h| solution.res_edge_down[g][edge_idx[h]].clone()).collect());
        rs.start.push((0..hours).map(|h| solution.start[g][edge_idx[h]]).collect());
        rs.stop.push((0..hours).map(|h| solution.stop[g][edge_idx[h]]).collect());
    }
    Ok(rs)
}

fn check_fleet(rs: &RealizedSchedule, fleet: &Fleet, gen_names: &[String]) -> Result<(), EvalError> {
    let got: Vec<String> = fleet.generators.iter().map(|g| g.name.clone()).collect();
    if got != gen_names || rs.commit.len() != fleet.len() {
        return Err(EvalError::FleetMismatch { expected: gen_names.to_vec(), got });
    }
    Ok(())
}

/// Serviceable band at arbitrary times (fractional hours in `[0, H)`).
/// At each time, every committed unit contributes its reserve-widened
/// schedule clipped to its physical limits; offline units contribute
/// nothing.
pub fn band_at_times(
    rs: &RealizedSchedule,
    fleet: &Fleet,
    times: &[f64],
    mode: BandMode,
) -> Vec<(f64, f64, f64)> {
    let hours = rs.schedule[0].len();
    times
        .iter()
        .map(|&t| {
            let hour = (t.floor() as usize).min(hours - 1);
            let x = t - hour as f64;
            let mut lo = 0.0;
            let mut hi = 0.0;
            for (g, gen) in fleet.generators.iter().enumerate() {
                if !rs.commit[g][hour] {
                    continue;
                }
                let (center_hi, center_lo) = match mode {
                    BandMode::Schedule => {
                        let s = rs.schedule[g][hour].eval(x);
                        (s + rs.res_up[g][hour].eval(x), s - rs.res_down[g][hour].eval(x))
                    }
                    BandMode::PathDispatch => {
                        let d = rs.dispatch[g][hour].eval(x);
                        (
                            d + rs.dispatch_res_up[g][hour].eval(x),
                            d - rs.dispatch_res_down[g][hour].eval(x),
                        )
                    }
                };
                hi += center_hi.min(gen.p_max);
                lo += center_lo.max(gen.p_min);
            }
            (t, lo, hi)
        })
        .collect()
}

/// Band on a uniform grid covering `[0, H)` at multiples of `step` hours.
pub fn service_band(
    rs: &RealizedSchedule,
    fleet: &Fleet,
    step: f64,
    mode: BandMode,
) -> Vec<(f64, f64, f64)> {
    assert!(step > 0.0, "step must be positive");
    let hours = rs.schedule[0].len() as f64;
    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * step;
        if t >= hours - 1e-9 {
            break;
        }
        times.push(t);
        k += 1;
    }
    band_at_times(rs, fleet, &times, mode)
}

/// Excursions below this are evaluation noise, not violations; the band
/// arithmetic works at the 1e-14 relative level while loads are tens to
/// hundreds of MW.
const VIOLATION_EPS: f64 = 1e-9;

/// Closed-interval feasibility of a trajectory against a band on the same
/// grid. Returns `(feasible, max violation MW, violation minutes)`.
pub fn check_feasibility(
    band: &[(f64, f64, f64)],
    samples: &[(f64, f64)],
) -> Result<(bool, f64, f64), EvalError> {
    if band.len() != samples.len() {
        return Err(EvalError::GridMismatch(format!(
            "band has {} points, samples {}",
            band.len(),
            samples.len()
        )));
    }
    let mut max_violation = 0.0f64;
    let mut violating = 0usize;
    for (k, (&(bt, lo, hi), &(st, load))) in band.iter().zip(samples).enumerate() {
        if (bt - st).abs() > 1e-9 {
            return Err(EvalError::GridMismatch(format!(
                "point {k}: band at t={bt}, sample at t={st}"
            )));
        }
        let v = (lo - load).max(load - hi);
        if v > VIOLATION_EPS {
            violating += 1;
            max_violation = max_violation.max(v);
        }
    }
    let step_minutes = if samples.len() >= 2 {
        (samples[1].0 - samples[0].0) * 60.0
    } else {
        0.0
    };
    Ok((violating == 0, max_violation, violating as f64 * step_minutes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayResult {
    pub id: String,
    pub feasible: bool,
    pub max_violation_mw: f64,
    pub violation_minutes: f64,
    /// Energy, commitment and start/stop cost along the followed path at
    /// day-ahead bids.
    pub realized_cost: f64,
    /// The solution-wide reserve and commitment-option payment.
    pub reserve_cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub days: Vec<DayResult>,
    /// The solver objective, for cross-reference.
    pub expected_day_ahead_cost: f64,
    pub mean_testing_cost: f64,
    pub reserve_cost: f64,
    /// Exactly `mean_testing_cost + reserve_cost`.
    pub total_testing_cost: f64,
    pub infeasibility_rate: f64,
}

/// Up-front payment decided by the solution: reserve envelopes priced per
/// MW-hour plus the commitment-option payment.
pub fn reserve_cost(solution: &UcSolution, fleet: &Fleet) -> f64 {
    let mut total = 0.0;
    for (g, gen) in fleet.generators.iter().enumerate() {
        for h in 0..solution.hours {
            total += gen.price_res_up * solution.res_up[g][h].integral(1.0)
                + gen.price_res_down * solution.res_down[g][h].integral(1.0);
            if solution.commit_option[g][h] {
                total += gen.price_commit_option;
            }
        }
    }
    total
}

/// Energy + commitment + start/stop cost of one realized schedule at
/// day-ahead bids.
pub fn realized_cost(rs: &RealizedSchedule, fleet: &Fleet) -> f64 {
    let hours = rs.schedule[0].len();
    let mut total = 0.0;
    for (g, gen) in fleet.generators.iter().enumerate() {
        for h in 0..hours {
            if rs.commit[g][h] {
                total += gen.cost_commit + gen.cost_energy * rs.dispatch[g][h].integral(1.0);
            }
            if rs.start[g][h] {
                total += gen.cost_startup;
            }
            if rs.stop[g][h] {
                total += gen.cost_shutdown;
            }
        }
    }
    total
}

/// Replay all test days and aggregate the cost decomposition.
pub fn cost_report(
    solution: &UcSolution,
    tree: &ScenarioTree,
    fleet: &Fleet,
    tests: &[TestCase],
    mode: BandMode,
) -> Result<EvalReport, EvalError> {
    if tests.is_empty() {
        return Err(EvalError::EmptyTests);
    }
    let reserve = reserve_cost(solution, fleet);
    let mut days = Vec::with_capacity(tests.len());
    for test in tests {
        let rs = follow(solution, tree, &test.spline)?;
        check_fleet(&rs, fleet, &solution.gen_names)?;
        let times: Vec<f64> = test.samples.iter().map(|&(t, _)| t).collect();
        let band = band_at_times(&rs, fleet, &times, mode);
        let (feasible, max_violation_mw, violation_minutes) =
            check_feasibility(&band, &test.samples)?;
        days.push(DayResult {
            id: test.id.clone(),
            feasible,
            max_violation_mw,
            violation_minutes,
            realized_cost: realized_cost(&rs, fleet),
            reserve_cost: reserve,
        });
    }
    let mean_testing_cost =
        days.iter().map(|d| d.realized_cost).sum::<f64>() / days.len() as f64;
    let infeasibility_rate =
        days.iter().filter(|d| !d.feasible).count() as f64 / days.len() as f64;
    Ok(EvalReport {
        expected_day_ahead_cost: solution.objective,
        mean_testing_cost,
        reserve_cost: reserve,
        total_testing_cost: mean_testing_cost + reserve,
        infeasibility_rate,
        days,
    })
}

/// One row per test day plus aggregate rows.
pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "day_id",
        "feasible",
        "max_violation_mw",
        "violation_minutes",
        "realized_cost",
        "reserve_cost",
    ])?;
    for d in &report.days {
        w.write_record([
            d.id.as_str(),
            if d.feasible { "1" } else { "0" },
            &d.max_violation_mw.to_string(),
            &d.violation_minutes.to_string(),
            &d.realized_cost.to_string(),
            &d.reserve_cost.to_string(),
        ])?;
    }
    for (name, value) in [
        ("expected_day_ahead_cost", report.expected_day_ahead_cost),
        ("mean_testing_cost", report.mean_testing_cost),
        ("reserve_cost", report.reserve_cost),
        ("total_testing_cost", report.total_testing_cost),
        ("infeasibility_rate", report.infeasibility_rate),
    ] {
        w.write_record([name, "", "", "", &value.to_string(), ""])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json(report: &EvalReport, path: &Path) -> Result<(), EvalError> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report)?;
    Ok(())
}

/// Plot-ready `(t, lo, hi, load)` rows for one test day.
pub fn write_band_csv(
    band: &[(f64, f64, f64)],
    samples: &[(f64, f64)],
    path: &Path,
) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t_hours", "band_lo_mw", "band_hi_mw", "load_mw"])?;
    for (&(t, lo, hi), &(_, load)) in band.iter().zip(samples) {
        w.write_record([
            t.to_string(),
            lo.to_string(),
            hi.to_string(),
            load.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::Generator;
    use crate::milp::{build_model, decode};
    use crate::scenario::build_tree;

    fn flat_gen(name: &str, p_min: f64, p_max: f64) -> Generator {
        Generator {
            name: name.into(),
            unit_type: "t".into(),
            p_min,
            p_max,
            ramp_limit: 1000.0,
            min_on: 1,
            min_off: 1,
            cost_startup: 0.0,
            cost_shutdown: 0.0,
            cost_commit: 5.0,
            cost_energy: 10.0,
            price_res_up: 0.0,
            price_res_down: 0.0,
            price_commit_option: 0.0,
        }
    }

    fn constant_day(value: f64, hours: usize) -> Spline {
        Spline {
            hours: vec![ControlPoly::constant(value, 3); hours],
            continuity_depth: 2,
        }
    }

    /// A solved-looking plan over a constant-load chain, built by hand
    /// through the model's own decoder.
    fn tiny_solution(load: f64, hours: usize) -> (UcSolution, ScenarioTree, Fleet) {
        let days = vec![constant_day(load, hours); 3];
        let tree = build_tree(&days, &vec![1; hours], 2, 0).unwrap();
        let fleet = Fleet { generators: vec![flat_gen("G0", 10.0, 100.0)] };
        let (model, index) = build_model(&tree, &fleet, 0.0, 3, 2).unwrap();
        let mut a = vec![0.0; model.variables.len()];
        for e in 0..index.edges {
            for i in 0..4 {
                a[index.x(0, e, i)] = load;
            }
            a[index.y(0, e)] = 1.0;
        }
        a[index.s_up(0, 0)] = 1.0;
        for h in 0..index.hours {
            for i in 0..4 {
                a[index.x_sched(0, h, i)] = load;
            }
            a[index.y_bar(0, h)] = 1.0;
        }
        let solution = decode(&model, &index, &a).unwrap();
        (solution, tree, fleet)
    }

    #[test]
    fn follow_chain_returns_only_path() {
        let (solution, tree, _) = tiny_solution(50.0, 2);
        let rs = follow(&solution, &tree, &constant_day(123.0, 2)).unwrap();
        assert_eq!(rs.path.nodes.len(), 3);
        assert_eq!(rs.commit[0], vec![true, true]);
        assert_eq!(rs.dispatch[0][0].coeffs(), &[50.0; 4]);
    }

    #[test]
    fn follow_picks_minority_branch_when_nearby() {
        let mut days = Vec::new();
        for _ in 0..7 {
            days.push(constant_day(40.0, 2));
        }
        for _ in 0..3 {
            days.push(constant_day(60.0, 2));
        }
        let tree = build_tree(&days, &[1, 2], 1, 1).unwrap();
        let fleet = Fleet { generators: vec![flat_gen("G0", 0.0, 100.0)] };
        let (model, index) = build_model(&tree, &fleet, 0.0, 3, 1).unwrap();
        // Feasible point: follow the centroids, reserves cover the branch
        // spread around the majority-branch schedule.
        let mut a = vec![0.0; model.variables.len()];
        let edge_nodes = tree.edge_nodes();
        for (e, &v) in edge_nodes.iter().enumerate() {
            let xi = tree.nodes[v].edge_xi.as_ref().unwrap().coeffs();
            for i in 0..4 {
                a[index.x(0, e, i)] = xi[i];
            }
            a[index.y(0, e)] = 1.0;
        }
        a[index.s_up(0, 0)] = 1.0;
        let mlp = tree.most_likely_path();
        for h in 0..2 {
            let me = edge_nodes
                .iter()
                .position(|&v| v == mlp.edge_nodes()[h])
                .unwrap();
            for i in 0..4 {
                let sched = a[index.x(0, me, i)];
                a[index.x_sched(0, h, i)] = sched;
                // Envelope wide enough for every stage edge.
                for (e2, &v2) in edge_nodes.iter().enumerate() {
                    if tree.nodes[v2].stage == h + 1 {
                        let x2 = a[index.x(0, e2, i)];
                        let up = index.r_up(0, h, i);
                        let dn = index.r_down(0, h, i);
                        a[up] = a[up].max(x2 - sched);
                        a[dn] = a[dn].max(sched - x2);
                    }
                }
            }
            a[index.y_bar(0, h)] = 1.0;
        }
        let solution = decode(&model, &index, &a).unwrap();
        let rs = follow(&solution, &tree, &constant_day(58.0, 2)).unwrap();
        let leaf = *rs.path.nodes.last().unwrap();
        assert_eq!(tree.nodes[leaf].edge_xi.as_ref().unwrap().coeffs()[3], 60.0);
    }

    #[test]
    fn band_examples() {
        let rs = RealizedSchedule {
            path: TreePath { nodes: vec![0, 1], prob: 1.0 },
            commit: vec![vec![true]],
            dispatch: vec![vec![ControlPoly::constant(50.0, 3)]],
            dispatch_res_up: vec![vec![ControlPoly::constant(0.0, 3)]],
            dispatch_res_down: vec![vec![ControlPoly::constant(0.0, 3)]],
            schedule: vec![vec![ControlPoly::constant(50.0, 3)]],
            res_up: vec![vec![ControlPoly::constant(10.0, 3)]],
            res_down: vec![vec![ControlPoly::constant(10.0, 3)]],
            start: vec![vec![false]],
            stop: vec![vec![false]],
        };
        let close = |got: (f64, f64), want: (f64, f64)| {
            assert!(
                (got.0 - want.0).abs() < 1e-9 && (got.1 - want.1).abs() < 1e-9,
                "{got:?} vs {want:?}"
            );
        };
        let fleet = Fleet { generators: vec![flat_gen("G0", 0.0, 100.0)] };
        for &(_, lo, hi) in &service_band(&rs, &fleet, 1.0 / 12.0, BandMode::Schedule) {
            close((lo, hi), (40.0, 60.0));
        }
        // Unit off: contributes nothing.
        let mut off = rs.clone();
        off.commit[0][0] = false;
        for &(_, lo, hi) in &service_band(&off, &fleet, 0.25, BandMode::Schedule) {
            close((lo, hi), (0.0, 0.0));
        }
        // Zero reserves collapse the band onto the schedule.
        let mut tight = rs.clone();
        tight.res_up[0][0] = ControlPoly::constant(0.0, 3);
        tight.res_down[0][0] = ControlPoly::constant(0.0, 3);
        for &(_, lo, hi) in &service_band(&tight, &fleet, 0.25, BandMode::Schedule) {
            close((lo, hi), (50.0, 50.0));
        }
        // Clipping against the physical limits.
        let narrow = Fleet { generators: vec![flat_gen("G0", 45.0, 55.0)] };
        for &(_, lo, hi) in &service_band(&rs, &narrow, 0.25, BandMode::Schedule) {
            close((lo, hi), (45.0, 55.0));
        }
    }

    #[test]
    fn feasibility_examples() {
        let band: Vec<(f64, f64, f64)> =
            (0..12).map(|k| (k as f64 / 12.0, 40.0, 60.0)).collect();
        let inside: Vec<(f64, f64)> = band.iter().map(|&(t, _, _)| (t, 55.0)).collect();
        assert_eq!(check_feasibility(&band, &inside).unwrap(), (true, 0.0, 0.0));

        // 65 MW for two 5-minute samples.
        let mut spiky = inside.clone();
        spiky[3].1 = 65.0;
        spiky[4].1 = 65.0;
        let (ok, v, minutes) = check_feasibility(&band, &spiky).unwrap();
        assert!(!ok);
        assert_eq!(v, 5.0);
        assert!((minutes - 10.0).abs() < 1e-9);

        // Exactly on the edge is feasible: the band is closed.
        let mut edge = inside;
        edge[5].1 = 60.0;
        assert!(check_feasibility(&band, &edge).unwrap().0);

        let short: Vec<(f64, f64)> = vec![(0.0, 50.0)];
        assert!(matches!(
            check_feasibility(&band, &short),
            Err(EvalError::GridMismatch(_))
        ));
    }

    #[test]
    fn report_prices_tiny_instance_and_adds_up() {
        let (solution, tree, fleet) = tiny_solution(50.0, 2);
        let samples: Vec<(f64, f64)> = (0..24).map(|k| (k as f64 / 12.0, 50.0)).collect();
        let tests = vec![
            TestCase { id: "a".into(), spline: constant_day(50.0, 2), samples: samples.clone() },
            TestCase { id: "b".into(), spline: constant_day(50.0, 2), samples },
        ];
        let report = cost_report(&solution, &tree, &fleet, &tests, BandMode::Schedule).unwrap();
        // Most-likely-path day costs exactly the hand value.
        assert!((report.days[0].realized_cost - 1010.0).abs() < 1e-9);
        // Identical days, so the mean equals either day.
        assert_eq!(report.days[0].realized_cost, report.days[1].realized_cost);
        assert_eq!(report.mean_testing_cost, report.days[0].realized_cost);
        // Zero reserve prices and zero reserves: no reserve cost.
        assert_eq!(report.reserve_cost, 0.0);
        assert_eq!(
            report.total_testing_cost,
            report.mean_testing_cost + report.reserve_cost
        );
        assert_eq!(report.infeasibility_rate, 0.0);
        assert!(cost_report(&solution, &tree, &fleet, &[], BandMode::Schedule).is_err());
    }

    #[test]
    fn report_rejects_mismatched_fleet() {
        let (solution, tree, fleet) = tiny_solution(50.0, 2);
        let mut renamed = fleet.clone();
        renamed.generators[0].name = "other".into();
        let samples: Vec<(f64, f64)> = (0..24).map(|k| (k as f64 / 12.0, 50.0)).collect();
        let tests = vec![TestCase { id: "a".into(), spline: constant_day(50.0, 2), samples }];
        assert!(matches!(
            cost_report(&solution, &tree, &renamed, &tests, BandMode::Schedule),
            Err(EvalError::FleetMismatch { .. })
        ));
    }

    #[test]
    fn report_files_round_trip() {
        let (solution, tree, fleet) = tiny_solution(50.0, 2);
        let samples: Vec<(f64, f64)> = (0..24).map(|k| (k as f64 / 12.0, 50.0)).collect();
        let tests = vec![TestCase {
            id: "a".into(),
            spline: constant_day(50.0, 2),
            samples: samples.clone(),
        }];
        let report = cost_report(&solution, &tree, &fleet, &tests, BandMode::Schedule).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report_csv(&report, &dir.path().join("r.csv")).unwrap();
        write_summary_json(&report, &dir.path().join("r.json")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert!(text.contains("total_testing_cost"));
        let back: EvalReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
                .unwrap();
        assert_eq!(back.days.len(), 1);

        let rs = follow(&solution, &tree, &tests[0].spline).unwrap();
        let times: Vec<f64> = samples.iter().map(|&(t, _)| t).collect();
        let band = band_at_times(&rs, &fleet, &times, BandMode::Schedule);
        write_band_csv(&band, &samples, &dir.path().join("band.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("band.csv")).unwrap();
        assert!(text.starts_with("t_hours,band_lo_mw,band_hi_mw,load_mw"));
    }
}
