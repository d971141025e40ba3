//! Harness contract: byte-stable artifacts under a fixed seed, worker-count
//! invariance of every statistic, config round-trips, and exit codes.


use svi_cli::{run, ExitStatus, RunOptions};

fn run_to_dir(command: &str, config: &str, out: &std::path::Path, workers: usize) -> ExitStatus {
    run(&RunOptions {
        command: command.to_string(),
        config_text: config.to_string(),
        seed_override: None,
        workers_override: Some(workers),
        out_override: Some(out.to_path_buf()),
    })
}

fn read(dir: &std::path::Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

const SWEEP_CONFIG: &str = r#"
[problem]
kind = "half_line_reflection"
sigma = 0.3
x0 = 1.0

[numerics]
dt = 0.001
horizon = 0.5

[mc]
paths = 48
master_seed = 77

[averaging]
omega = 6.283185307179586
eps_grid = [0.5, 0.1, 0.02]
"#;

/// Zeroes the wall-clock column, the one declared non-reproducible field of
/// the sweep table.
fn mask_runtime(csv: &str) -> String {
    let (cols, rows) = svi_core::report::parse_csv_table(csv).unwrap();
    let idx = cols.iter().position(|c| c == "runtime_s");
    let mut out = cols.join(",");
    out.push('\n');
    for mut row in rows {
        if let Some(i) = idx {
            row[i] = 0.0;
        }
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();

    // a study without timing columns: full byte identity
    let cdt = r#"
[problem]
kind = "half_line_reflection"

[numerics]
dt_grid = [8e-3, 4e-3]
horizon = 0.4

[mc]
paths = 16
master_seed = 5
"#;
    let a = tmp.path().join("cdt_a");
    let b = tmp.path().join("cdt_b");
    let s1 = run_to_dir("converge-dt", cdt, &a, 1);
    let s2 = run_to_dir("converge-dt", cdt, &b, 1);
    assert_eq!(s1, s2);
    assert_eq!(read(&a, "report.csv"), read(&b, "report.csv"));

    // the sweep table carries wall-clock in runtime_s; everything else must
    // agree to the byte
    let a = tmp.path().join("swp_a");
    let b = tmp.path().join("swp_b");
    let s1 = run_to_dir("averaging-sweep", SWEEP_CONFIG, &a, 1);
    let s2 = run_to_dir("averaging-sweep", SWEEP_CONFIG, &b, 1);
    assert_eq!(s1, s2);
    let csv_a = String::from_utf8(read(&a, "report.csv")).unwrap();
    let csv_b = String::from_utf8(read(&b, "report.csv")).unwrap();
    assert_eq!(mask_runtime(&csv_a), mask_runtime(&csv_b));
}

#[test]
fn worker_count_does_not_change_statistics() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("w1");
    let four = tmp.path().join("w4");
    run_to_dir("averaging-sweep", SWEEP_CONFIG, &one, 1);
    run_to_dir("averaging-sweep", SWEEP_CONFIG, &four, 4);
    // runtime column varies; compare everything else cell by cell
    let parse = |dir: &std::path::Path| {
        let text = String::from_utf8(read(dir, "report.csv")).unwrap();
        svi_core::report::parse_csv_table(&text).unwrap()
    };
    let (cols1, rows1) = parse(&one);
    let (cols4, rows4) = parse(&four);
    assert_eq!(cols1, cols4);
    let runtime_idx = cols1.iter().position(|c| c == "runtime_s").unwrap();
    assert_eq!(rows1.len(), rows4.len());
    for (r1, r4) in rows1.iter().zip(&rows4) {
        for (i, (a, b)) in r1.iter().zip(r4).enumerate() {
            if i != runtime_idx {
                assert_eq!(a, b, "column {} differs across worker counts", cols1[i]);
            }
        }
    }
}

#[test]
fn trajectory_run_is_deterministic_and_constant_for_null_dynamics() {
    let config = r#"
[problem]
kind = "free_brownian"
sigma = 0.0
x0 = 0.7

[numerics]
dt = 0.1
horizon = 1.0
"#;
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run_to_dir("simulate", config, &a, 1), ExitStatus::Pass);
    assert_eq!(run_to_dir("simulate", config, &b, 1), ExitStatus::Pass);
    let csv_a = read(&a, "trajectory.csv");
    assert_eq!(csv_a, read(&b, "trajectory.csv"));
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x_1,eta_1,njumps");
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "0.7");
        assert_eq!(cells[2], "0");
        assert_eq!(cells[3], "0");
    }
}

#[test]
fn config_errors_exit_2_and_name_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let status = run_to_dir("simulate", "[numerics]\ndt = -0.1\ndtt = 3.0\n", &out, 1);
    assert_eq!(status, ExitStatus::ConfigError);
    // no artifacts on config failure
    assert!(!out.join("provenance.json").exists());
}

#[test]
fn mismatched_declared_command_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let status = run_to_dir("simulate", "command = \"picard\"\n", &out, 1);
    assert_eq!(status, ExitStatus::ConfigError);
}

#[test]
fn verdict_failure_exits_1() {
    // an impossible slope window forces a verdict failure on a healthy run
    let config = r#"
[problem]
kind = "half_line_reflection"

[numerics]
dt_grid = [8e-3, 4e-3]
horizon = 0.4
slope_min = 5.0
slope_max = 6.0

[mc]
paths = 8
master_seed = 3
"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run_to_dir("converge-dt", config, &out, 1), ExitStatus::VerdictFail);
    // artifacts still written for inspection
    assert!(out.join("report.csv").exists());
    assert!(out.join("provenance.json").exists());
}

#[test]
fn provenance_records_resolved_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    run_to_dir("simulate", "[mc]\nmaster_seed = 99\n", &out, 1);
    let prov: serde_json::Value =
        serde_json::from_slice(&read(&out, "provenance.json")).unwrap();
    assert_eq!(prov["master_seed"], 99);
    assert_eq!(prov["resolved_config"]["numerics"]["dt"], 1e-3);
    assert_eq!(prov["resolved_config"]["output"]["directory"], "out");
    assert_eq!(prov["command"], "simulate");
    assert!(prov["artifacts"].as_array().unwrap().iter().any(|a| a == "trajectory.csv"));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let with_flag = tmp.path().join("flag");
    let with_config = tmp.path().join("cfg");
    let config = "[mc]\nmaster_seed = 1\n";
    run(&RunOptions {
        command: "simulate".into(),
        config_text: config.into(),
        seed_override: Some(424242),
        workers_override: Some(1),
        out_override: Some(with_flag.clone()),
    });
    run(&RunOptions {
        command: "simulate".into(),
        config_text: "[mc]\nmaster_seed = 424242\n".into(),
        seed_override: None,
        workers_override: Some(1),
        out_override: Some(with_config.clone()),
    });
    assert_eq!(read(&with_flag, "trajectory.csv"), read(&with_config, "trajectory.csv"));
    // and a different seed gives a different trajectory
    let other = tmp.path().join("other");
    run(&RunOptions {
        command: "simulate".into(),
        config_text: config.into(),
        seed_override: None,
        workers_override: Some(1),
        out_override: Some(other.clone()),
    });
    assert_ne!(read(&other, "trajectory.csv"), read(&with_flag, "trajectory.csv"));
}

#[test]
fn spde_artifacts_have_declared_layouts() {
    let config = r#"
[numerics]
dt = 1e-2
horizon = 0.1

[spde]
modes = 2
noise_q = [1.0, 0.0]
initial_modes = [1.0, 0.5]

[output]
snapshot_every = 5
snapshot_points = 4
"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run_to_dir("spde", config, &out, 1), ExitStatus::Pass);
    let traj = String::from_utf8(read(&out, "trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,x_1,x_2,eta_1,eta_2,njumps");
    let field = String::from_utf8(read(&out, "field.csv")).unwrap();
    assert_eq!(field.lines().next().unwrap(), "t,x,u");
    // long format: 4 x-points per snapshot
    let body: Vec<&str> = field.lines().skip(1).collect();
    assert_eq!(body.len() % 4, 0);
}
