//! End-to-end pipeline tests: the library-level stage functions on a small
//! instance, plus the binary's exit-code and reproducibility contracts.

use msruc::cli::{
    cmd_eval, cmd_fit, cmd_solve, cmd_tree, mps_path, report_path, solution_path, splines_path,
    tree_path, Profile, RunConfig, SolutionFile, SplineFile, TreeFile,
};
use msruc::evaluate::EvalReport;
use msruc::fleet::write_load_csv;
use msruc::synth::{synth_days, SynthParams};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

fn desk_fleet() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/desk.toml")
}

fn small_config(dir: &Path) -> RunConfig {
    let load = dir.join("load.csv");
    let params = SynthParams { hours: 3, ..Default::default() };
    write_load_csv(&synth_days(8, 5, &params), &load).unwrap();
    RunConfig {
        load,
        fleet: desk_fleet(),
        workdir: dir.join("work"),
        stages: Some(vec![1, 2, 2]),
        rho: 1.0,
        gap: 0.05,
        seed: 7,
        reproducible: true,
        time_limit: Duration::from_secs(300),
        ..Default::default()
    }
}

#[test]
fn stage_functions_produce_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    cmd_fit(&config).unwrap();
    cmd_tree(&config).unwrap();
    cmd_solve(&config).unwrap();
    cmd_eval(&config).unwrap();

    for profile in [Profile::Ct, Profile::Dt] {
        let splines: SplineFile =
            serde_json::from_str(&std::fs::read_to_string(splines_path(&config, profile)).unwrap())
                .unwrap();
        assert_eq!(splines.days.len(), 8);
        let train = splines.days.iter().filter(|d| d.train).count();
        assert_eq!(train, 5, "70% of 8 days");

        let tree_file: TreeFile =
            serde_json::from_str(&std::fs::read_to_string(tree_path(&config, profile)).unwrap())
                .unwrap();
        tree_file.tree.validate().unwrap();
        assert_eq!(tree_file.train_ids.len(), train);

        let solution: SolutionFile = serde_json::from_str(
            &std::fs::read_to_string(solution_path(&config, profile)).unwrap(),
        )
        .unwrap();
        assert_eq!(solution.status, "optimal-within-gap");
        assert!(solution.gap <= 0.05 + 1e-9);
        assert!(solution.solution.max_violation <= 1e-6);
        // The stored census matches a fresh build of the same model.
        let fleet = msruc::fleet::load_fleet(&config.fleet).unwrap();
        let (model, index) = msruc::milp::build_model(
            &tree_file.tree,
            &fleet,
            config.rho,
            tree_file.tree.degree,
            tree_file.tree.continuity_depth,
        )
        .unwrap();
        assert_eq!(solution.constraint_census, model.constraint_census());
        assert_eq!(solution.variable_census, index.variable_census());
        assert!(mps_path(&config, profile).exists());

        let report: EvalReport = serde_json::from_str(
            &std::fs::read_to_string(report_path(&config, profile, "json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report.days.len(), 3);
        assert_eq!(
            report.total_testing_cost,
            report.mean_testing_cost + report.reserve_cost
        );
        assert!(report_path(&config, profile, "csv").exists());
    }
    assert!(config.workdir.join("tree_ct.svg").exists());
    assert!(config.workdir.join("band_ct.svg").exists());
    assert!(config.workdir.join("bands").read_dir().unwrap().count() >= 6);
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = small_config(dir.path());
    a.workdir = dir.path().join("work_a");
    let mut b = small_config(dir.path());
    b.workdir = dir.path().join("work_b");
    for config in [&a, &b] {
        cmd_fit(config).unwrap();
        cmd_tree(config).unwrap();
        cmd_solve(config).unwrap();
    }
    for name in [
        "splines_ct.json",
        "splines_dt.json",
        "tree_ct.json",
        "tree_dt.json",
        "solution_ct.json",
        "solution_dt.json",
        "model_ct.mps",
        "model_dt.mps",
    ] {
        let left = std::fs::read(a.workdir.join(name)).unwrap();
        let right = std::fs::read(b.workdir.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn export_only_writes_mps_without_solving() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.export_only = true;
    cmd_fit(&config).unwrap();
    cmd_tree(&config).unwrap();
    cmd_solve(&config).unwrap();
    assert!(mps_path(&config, Profile::Ct).exists());
    assert!(mps_path(&config, Profile::Dt).exists());
    assert!(!solution_path(&config, Profile::Ct).exists());
    assert!(!solution_path(&config, Profile::Dt).exists());
    // The exported file parses back.
    let model = msruc::solver::read_mps(&mps_path(&config, Profile::Ct)).unwrap();
    assert!(!model.variables.is_empty());
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msruc"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Input error: missing load file.
    let status = binary()
        .args(["fit", "--load", "/nonexistent/load.csv"])
        .arg("--workdir")
        .arg(dir.path().join("w"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // Build a real tiny pipeline through the binary.
    let load = dir.path().join("load.csv");
    let status = binary()
        .args(["gen-load", "--days", "6", "--hours", "2", "--seed", "1"])
        .arg("--out")
        .arg(&load)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let work = dir.path().join("work");
    for sub in ["fit", "tree"] {
        let status = binary()
            .arg(sub)
            .arg("--load")
            .arg(&load)
            .arg("--workdir")
            .arg(&work)
            .args(["--stages", "1,2", "--seed", "3", "--reproducible"])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0), "subcommand {sub}");
    }

    // Infeasible: a fleet far too small for the load.
    let tiny_fleet = dir.path().join("tiny.toml");
    std::fs::write(
        &tiny_fleet,
        r#"
[[unit]]
name = "puny"
type = "t"
p_min_mw = 0.0
p_max_mw = 5.0
ramp_mw_per_h = 10.0
min_on_h = 1
min_off_h = 1
cost_startup = 0.0
cost_shutdown = 0.0
cost_commit = 1.0
cost_energy = 1.0
price_res_up = 0.0
price_res_down = 0.0
price_commit_option = 0.0
"#,
    )
    .unwrap();
    let status = binary()
        .arg("solve")
        .arg("--load")
        .arg(&load)
        .arg("--fleet")
        .arg(&tiny_fleet)
        .arg("--workdir")
        .arg(&work)
        .args(["--rho", "0.5"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Success path with the bundled desk fleet, then eval prints the table.
    let status = binary()
        .arg("solve")
        .arg("--load")
        .arg(&load)
        .arg("--fleet")
        .arg(desk_fleet())
        .arg("--workdir")
        .arg(&work)
        .args(["--rho", "1.0", "--reproducible"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let output = binary()
        .arg("eval")
        .arg("--load")
        .arg(&load)
        .arg("--fleet")
        .arg(desk_fleet())
        .arg("--workdir")
        .arg(&work)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("infeasibility rate"), "table missing: {stdout}");
}

/// A two-hour day sampled exactly from a known C1 cubic, written in the
/// load CSV schema.
fn write_known_cubic_csv(path: &Path, copies: usize) {
    use msruc::bernstein::{ControlPoly, Spline};
    let day = Spline {
        hours: vec![
            ControlPoly::new(vec![120.0, 130.0, 110.0, 115.0]),
            ControlPoly::new(vec![115.0, 120.0, 140.0, 125.0]),
        ],
        continuity_depth: 2,
    };
    let mut text = String::from("day_id,minute,mw\n");
    for c in 0..copies {
        for k in 0..24u32 {
            let minute = k * 5;
            let t = minute as f64 / 60.0;
            let (hour, x) = day.locate(t);
            text.push_str(&format!("cubic{c},{minute},{}\n", day.hours[hour].eval(x)));
        }
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_reports_tiny_residual_for_exact_cubic_days() {
    let dir = tempfile::tempdir().unwrap();
    let load = dir.path().join("cubic.csv");
    write_known_cubic_csv(&load, 3);
    let config = RunConfig {
        load,
        fleet: desk_fleet(),
        workdir: dir.path().join("work"),
        reproducible: true,
        ..Default::default()
    };
    cmd_fit(&config).unwrap();
    let splines: SplineFile = serde_json::from_str(
        &std::fs::read_to_string(splines_path(&config, Profile::Ct)).unwrap(),
    )
    .unwrap();
    for day in &splines.days {
        assert!(day.rms_residual <= 1e-8, "day {}: {}", day.id, day.rms_residual);
    }
}

fn constant_load_csv(path: &Path, value: f64, days: usize, hours: u32) {
    let mut text = String::from("day_id,minute,mw\n");
    for d in 0..days {
        for k in 0..hours * 12 {
            text.push_str(&format!("flat{d},{},{value}\n", k * 5));
        }
    }
    std::fs::write(path, text).unwrap();
}

fn one_gen_fleet_toml(path: &Path) {
    std::fs::write(
        path,
        r#"
[[unit]]
name = "G"
type = "t"
p_min_mw = 10.0
p_max_mw = 100.0
ramp_mw_per_h = 1000.0
min_on_h = 1
min_off_h = 1
cost_startup = 0.0
cost_shutdown = 0.0
cost_commit = 5.0
cost_energy = 10.0
price_res_up = 0.0
price_res_down = 0.0
price_commit_option = 0.0
"#,
    )
    .unwrap();
}

#[test]
fn solve_writes_hand_value_and_eval_sees_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let load = dir.path().join("flat.csv");
    constant_load_csv(&load, 50.0, 3, 2);
    let fleet = dir.path().join("fleet.toml");
    one_gen_fleet_toml(&fleet);
    let config = RunConfig {
        load,
        fleet,
        workdir: dir.path().join("work"),
        stages: Some(vec![1, 1]),
        rho: 0.0,
        gap: 0.0,
        reproducible: true,
        ..Default::default()
    };
    cmd_fit(&config).unwrap();
    cmd_tree(&config).unwrap();
    cmd_solve(&config).unwrap();
    // Fitting a constant day reproduces the constant in every coefficient.
    let splines: SplineFile = serde_json::from_str(
        &std::fs::read_to_string(splines_path(&config, Profile::Ct)).unwrap(),
    )
    .unwrap();
    for day in &splines.days {
        for hour in &day.spline.hours {
            for c in hour.coeffs() {
                assert!((c - 50.0).abs() < 1e-9);
            }
        }
    }
    for profile in [Profile::Ct, Profile::Dt] {
        let solution: SolutionFile = serde_json::from_str(
            &std::fs::read_to_string(solution_path(&config, profile)).unwrap(),
        )
        .unwrap();
        assert!(
            (solution.objective - 1010.0).abs() < 1e-6,
            "{:?} objective {}",
            profile,
            solution.objective
        );
        // Identical training days collapse every bundle error to zero.
        let tree_file: TreeFile =
            serde_json::from_str(&std::fs::read_to_string(tree_path(&config, profile)).unwrap())
                .unwrap();
        for &v in &tree_file.tree.edge_nodes() {
            let eps = tree_file.tree.nodes[v].edge_eps.as_ref().unwrap();
            assert!(eps.iter().all(|&e| e < 1e-9));
        }
    }
    // Test days equal the centroid path: nothing can fall out of band.
    cmd_eval(&config).unwrap();
    for profile in [Profile::Ct, Profile::Dt] {
        let report: EvalReport = serde_json::from_str(
            &std::fs::read_to_string(report_path(&config, profile, "json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report.infeasibility_rate, 0.0);
    }
}

#[test]
fn eval_rejects_empty_test_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    cmd_fit(&config).unwrap();
    cmd_tree(&config).unwrap();
    cmd_solve(&config).unwrap();
    // Flip every day to training: no held-out days remain.
    for profile in [Profile::Ct, Profile::Dt] {
        let path = splines_path(&config, profile);
        let mut file: SplineFile =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for day in &mut file.days {
            day.train = true;
        }
        std::fs::write(&path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
    }
    let err = cmd_eval(&config).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}
