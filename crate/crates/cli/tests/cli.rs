use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn station_ems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_station-ems"))
        .args(args)
        .env_remove("EMS_SOLVER")
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Copy of the bundled dataset that a test may edit.
fn dataset() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&data_dir(), dir.path());
    dir
}

fn run_args<'a>(data: &'a Path, out: &'a Path, case: &'a str) -> Vec<String> {
    [
        "run",
        "--config",
        path(&data.join("station.toml")),
        "--scenarios",
        path(&data.join("scenarios")),
        "--out",
        path(out),
        "--case",
        case,
        "--no-timestamp",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run(args: &[String]) -> Output {
    station_ems(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn run_all_cases_writes_every_output() {
    let out = tempfile::tempdir().unwrap();
    let output = run(&run_args(&data_dir(), out.path(), "all"));
    assert_eq!(code(&output), 0, "{}", stderr(&output));

    let json = report(out.path());
    let cases = json["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 4);
    assert!(json.get("generated_at").is_none());
    let savings: Vec<f64> = cases.iter().map(|c| c["savings_pct"].as_f64().unwrap()).collect();
    assert_eq!(savings[0], 0.0);
    assert!(savings[1..].iter().all(|&s| s > 0.0));
    assert!(savings[3] > savings[1] && savings[3] > savings[2]);

    let costs = fs::read_to_string(out.path().join("costs.csv")).unwrap();
    assert!(costs.starts_with("case,scenario,cost_eur\n"));
    assert_eq!(costs.lines().count(), 1 + 4 * 2);

    let schedule = fs::read_to_string(out.path().join("schedules/case4_summer.csv")).unwrap();
    assert!(schedule.starts_with("t,p_buy,p_sell,p_ch,p_dis,p_rbe,soc,u_b,u_g\n"));
    assert_eq!(schedule.lines().count(), 1 + 96);
    for plot in ["soc_case2_summer.csv", "soc_case4_autumn.csv", "pv_summer.csv", "pv_autumn.csv"] {
        let text = fs::read_to_string(out.path().join("plots").join(plot)).unwrap();
        assert!(text.starts_with("t,value\n"), "{plot}");
    }
    assert!(stdout(&output).contains("savings_pct"));
}

#[test]
fn single_case_run_has_one_entry_and_is_reproducible() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    for out in [&first, &second] {
        let output = run(&run_args(&data_dir(), out.path(), "4"));
        assert_eq!(code(&output), 0, "{}", stderr(&output));
    }
    let json = report(first.path());
    assert_eq!(json["cases"].as_array().unwrap().len(), 1);
    assert_eq!(json["cases"][0]["case"], 4);
    assert!(json["cases"][0]["savings_pct"].is_null());

    let read = |dir: &TempDir, name: &str| fs::read(dir.path().join(name)).unwrap();
    for name in ["report.json", "costs.csv", "schedules/case4_summer.csv", "schedules/case4_autumn.csv", "plots/soc_case4_summer.csv"] {
        assert_eq!(read(&first, name), read(&second, name), "{name}");
    }
}

#[test]
fn timestamp_is_written_unless_suppressed() {
    let out = tempfile::tempdir().unwrap();
    let mut args = run_args(&data_dir(), out.path(), "1");
    args.retain(|a| a != "--no-timestamp");
    let output = run(&args);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let stamp = report(out.path())["generated_at"].as_str().unwrap().to_string();
    assert!(stamp.ends_with('Z') && stamp.len() == 20, "{stamp}");
}

#[test]
fn missing_fleet_is_a_data_error_naming_the_file() {
    let data = dataset();
    let out = tempfile::tempdir().unwrap();
    let missing = data.path().join("no_such_fleet.csv");
    let mut args = run_args(data.path(), out.path(), "1");
    args.extend(["--fleet".to_string(), path(&missing).to_string()]);
    let output = run(&args);
    assert_eq!(code(&output), 3);
    assert!(stderr(&output).contains("no_such_fleet.csv"), "{}", stderr(&output));
}

#[test]
fn bad_flags_are_config_errors() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&run_args(&data_dir(), out.path(), "7"))), 2);

    let mut args = run_args(&data_dir(), out.path(), "1");
    args.extend(["--dt-min".to_string(), "7".to_string()]);
    assert_eq!(code(&run(&args)), 2);

    let missing_config = station_ems(&["validate", "--config", "/nonexistent/station.toml", "--scenarios", "x"]);
    assert_eq!(code(&missing_config), 2);

    let args = run_args(&data_dir(), out.path(), "1");
    let output = Command::new(env!("CARGO_BIN_EXE_station-ems"))
        .args(&args)
        .env("EMS_SOLVER", "cplex")
        .output()
        .unwrap();
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("cplex"));
}

#[test]
fn coarser_step_from_the_command_line() {
    let out = tempfile::tempdir().unwrap();
    let mut args = run_args(&data_dir(), out.path(), "2");
    args.extend(["--dt-min".to_string(), "60".to_string(), "--jobs".to_string(), "1".to_string()]);
    let output = run(&args);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    assert_eq!(report(out.path())["steps"], 24);
}

#[test]
fn microlp_backend_is_selected_by_environment() {
    let output = Command::new(env!("CARGO_BIN_EXE_station-ems"))
        .args(["oracle", path(&data_dir().join("tiny.toml"))])
        .env("EMS_SOLVER", "microlp")
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("(microlp)"));
}

#[test]
fn infeasible_run_exits_4_and_keep_going_still_writes_reports() {
    let data = dataset();
    let config = data.path().join("station.toml");
    let text = fs::read_to_string(&config).unwrap().replace("p_buy_max_kw = 5000.0", "p_buy_max_kw = 100.0");
    fs::write(&config, text).unwrap();

    let out = tempfile::tempdir().unwrap();
    let output = run(&run_args(data.path(), out.path(), "1"));
    assert_eq!(code(&output), 4);
    assert!(stderr(&output).contains("infeasible"), "{}", stderr(&output));
    assert!(!out.path().join("report.json").exists());

    let mut args = run_args(data.path(), out.path(), "1");
    args.push("--keep-going".to_string());
    let output = run(&args);
    assert_eq!(code(&output), 4);
    let json = report(out.path());
    assert_eq!(json["partial"], true);
    assert!(json["cases"][0]["expected_cost_eur"].is_null());
}

#[test]
fn validate_accepts_the_bundled_dataset() {
    let data = data_dir();
    let output = station_ems(&[
        "validate",
        "--config",
        path(&data.join("station.toml")),
        "--scenarios",
        path(&data.join("scenarios")),
    ]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).starts_with("ok: 2 scenarios"));
}

#[test]
fn validate_reports_the_probability_sum() {
    let data = dataset();
    for dir in ["01_summer", "02_autumn"] {
        let meta = data.path().join("scenarios").join(dir).join("scenario.meta");
        let text = fs::read_to_string(&meta).unwrap().replace("probability = 0.5", "probability = 0.49");
        fs::write(&meta, text).unwrap();
    }
    let output = station_ems(&[
        "validate",
        "--config",
        path(&data.path().join("station.toml")),
        "--scenarios",
        path(&data.path().join("scenarios")),
    ]);
    assert_eq!(code(&output), 3);
    assert!(stderr(&output).contains("0.98"), "{}", stderr(&output));
}

#[test]
fn validate_rejects_overlapping_dwells() {
    let data = dataset();
    let fleet = data.path().join("fleet.csv");
    let mut text = fs::read_to_string(&fleet).unwrap();
    text.push_str("bus01,280,300,0.87,05:40,06:10\n");
    fs::write(&fleet, text).unwrap();
    let output = station_ems(&[
        "validate",
        "--config",
        path(&data.path().join("station.toml")),
        "--scenarios",
        path(&data.path().join("scenarios")),
    ]);
    assert_eq!(code(&output), 3);
    assert!(stderr(&output).contains("overlapping"), "{}", stderr(&output));
}

#[test]
fn oracle_matches_on_the_bundled_tiny_instance() {
    let output = station_ems(&["oracle", path(&data_dir().join("tiny.toml"))]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    let line = text.lines().find(|l| l.starts_with("difference:")).unwrap();
    let diff: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(diff.abs() <= 1e-6, "{text}");
    assert!(text.contains("oracle:") && text.contains("milp:"));
}

const FIVE_STEPS: &str = r#"
train_demand = [100.0, 100.0, 100.0, 100.0, 100.0]
rb_available = [0.0, 0.0, 0.0, 0.0, 0.0]
radiation = [0.0, 0.0, 0.0, 0.0, 0.0]
buy_price = [0.1, 0.1, 0.1, 0.1, 0.1]
"#;

const INFEASIBLE: &str = r#"
ess_enabled = false
train_demand = [100.0, 9000.0]
rb_available = [0.0, 0.0]
radiation = [0.0, 0.0]
buy_price = [0.1, 0.1]

[grid]
p_buy_max_kw = 1000.0
p_sell_max_kw = 1000.0
"#;

#[test]
fn oracle_refuses_long_horizons() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("five.toml");
    fs::write(&file, FIVE_STEPS).unwrap();
    let output = station_ems(&["oracle", path(&file)]);
    assert_eq!(code(&output), 2);
    assert!(stderr(&output).contains("5 steps"), "{}", stderr(&output));
}

#[test]
fn oracle_and_milp_agree_on_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("infeasible.toml");
    fs::write(&file, INFEASIBLE).unwrap();
    let output = station_ems(&["oracle", path(&file)]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("oracle:     infeasible"), "{text}");
    assert!(text.contains("milp:       infeasible"), "{text}");
}

#[test]
fn example_data_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("example");
    assert_eq!(code(&station_ems(&["example-data", "--out", path(&out)])), 0);
    for name in ["station.toml", "fleet.csv", "tiny.toml", "scenarios/01_summer/price.csv"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(data_dir().join(name)).unwrap(), "{name}");
    }
}
