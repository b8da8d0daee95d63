//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use platoon_core::instance::Instance;
use platoon_core::plan::{check_feasibility, solution_from_json};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_platoon-opt")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("platoon-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_fixture_instance(dir: &Path) -> PathBuf {
    let inst = platoon_core::fixtures::illustrative_instance();
    let path = dir.join("illustrative.json");
    inst.save(&path).unwrap();
    path
}

#[test]
fn solve_writes_feasible_solution_and_report() {
    let dir = temp_dir("solve");
    let instance_path = write_fixture_instance(&dir);
    let out = dir.join("out");
    let status = Command::new(bin())
        .args([
            "--instance",
            instance_path.to_str().unwrap(),
            "--mode",
            "platoon-swap",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let solution_path = out.join("solution_illustrative_platoon-swap_s7.json");
    let text = std::fs::read_to_string(&solution_path).unwrap();
    let inst = Instance::load(&instance_path).unwrap();
    let plan = solution_from_json(&inst, &text).unwrap();
    assert!(check_feasibility(&inst, &plan).is_empty());

    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.starts_with("instance,seed,mode,status"));
    assert!(report.contains("illustrative,7,platoon-swap,ok"));
    // Breakdown columns sum to the total.
    let line = report.lines().nth(1).unwrap();
    let cols: Vec<&str> = line.split(',').collect();
    let parts: f64 = cols[4..9].iter().map(|c| c.parse::<f64>().unwrap()).sum();
    let total: f64 = cols[9].parse().unwrap();
    assert!((parts - total).abs() < 1e-6);

    assert!(out.join("runlog_illustrative_platoon-swap_s7.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = temp_dir("determinism");
    let instance_path = write_fixture_instance(&dir);
    let mut outputs = Vec::new();
    for round in 0..2 {
        let out = dir.join(format!("out{round}"));
        let status = Command::new(bin())
            .args([
                "--instance",
                instance_path.to_str().unwrap(),
                "--seed",
                "99",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(
            std::fs::read(out.join("solution_illustrative_platoon-swap_s99.json")).unwrap(),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn single_truck_costs_match_across_modes() {
    let dir = temp_dir("one-truck");
    let full = platoon_core::fixtures::illustrative_instance();
    let solo = Instance::new(
        full.network.clone(),
        full.params.clone(),
        vec![full.trucks[0].clone()],
    )
    .unwrap();
    let path = dir.join("one_truck.json");
    solo.save(&path).unwrap();
    let mut totals = Vec::new();
    for mode in ["no-platoon", "platoon-no-swap", "platoon-swap"] {
        let out = dir.join(format!("out-{mode}"));
        let status = Command::new(bin())
            .args([
                "--instance",
                path.to_str().unwrap(),
                "--mode",
                mode,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
        let line = report.lines().nth(1).unwrap();
        let total: f64 = line.split(',').nth(9).unwrap().parse().unwrap();
        totals.push(total);
    }
    assert!((totals[0] - totals[1]).abs() < 1e-9);
    assert!((totals[1] - totals[2]).abs() < 1e-9);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unservable_instance_fails_with_diagnostic() {
    let dir = temp_dir("unservable");
    // 400 km single arc exceeds the 340 km range: no charging can help.
    let json = r#"{
        "nodes": [
            {"id": "o", "charger": false},
            {"id": "d", "charger": false, "price_per_kwh": 0.5}
        ],
        "arcs": [
            {"from": "o", "to": "d", "km": 400.0},
            {"from": "d", "to": "o", "km": 400.0}
        ],
        "params": {
            "max_platoon_size": 4,
            "leading_wage_per_hr": 30.0,
            "following_wage_per_hr": 15.0,
            "idle_wage_per_hr": 5.0,
            "restructuring_cost": 0.0,
            "platoon_saving_ratio": 0.1,
            "consumption_kwh_per_hr": 39.70588235294117,
            "charge_speed_kw": 100.0,
            "battery_kwh": 135.0,
            "soc_max": 1.0,
            "soc_min": 0.0,
            "speed_kmh": 100.0
        },
        "trucks": [
            {"id": "t1", "origin": "o", "destination": "d", "latest_arrival_hr": 10.0}
        ]
    }"#;
    let path = dir.join("unservable.json");
    std::fs::write(&path, json).unwrap();
    let out = dir.join("out");
    let output = Command::new(bin())
        .args(["--instance", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unservable"), "stderr: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn schema_error_fails_with_diagnostic() {
    let dir = temp_dir("schema");
    let path = dir.join("broken.json");
    std::fs::write(&path, "{\"nodes\": []").unwrap();
    let output = Command::new(bin())
        .args(["--instance", path.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn small3_suite_report_is_consistent() {
    let dir = temp_dir("suite");
    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["--suite", "small3", "--workers", "3", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("small3").join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 4, "header plus three mode rows");
    let mut totals = std::collections::HashMap::new();
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], "ok");
        let parts: f64 = cols[4..9].iter().map(|c| c.parse::<f64>().unwrap()).sum();
        let total: f64 = cols[9].parse().unwrap();
        assert!((parts - total).abs() < 1e-6);
        totals.insert(cols[2].to_string(), total);
        if cols[2] == "no-platoon" {
            // No multi-truck platoons means zero restructuring cost.
            let restructuring: f64 = cols[8].parse().unwrap();
            assert_eq!(restructuring, 0.0);
        }
    }
    assert!(totals["no-platoon"] > totals["platoon-no-swap"]);
    assert!(totals["platoon-no-swap"] >= totals["platoon-swap"]);
    // Charging column ordering mirrors the three-scenario comparison.
    let mut charging = std::collections::HashMap::new();
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        charging.insert(cols[2].to_string(), cols[4].parse::<f64>().unwrap());
    }
    assert!(charging["platoon-swap"] <= charging["platoon-no-swap"] + 1e-9);
    assert!(charging["platoon-no-swap"] <= charging["no-platoon"] + 1e-9);
    // The solution files reload as feasible plans.
    let inst = Instance::load(out.join("small3").join("small_test.json")).unwrap();
    for mode in ["no-platoon", "platoon-no-swap", "platoon-swap"] {
        let (scenario, _) = match mode {
            "no-platoon" => {
                let mut i = inst.clone();
                i.params.max_platoon_size = 1;
                (i, false)
            }
            _ => (inst.clone(), false),
        };
        let text = std::fs::read_to_string(
            out.join("small3").join(format!("solution_small_test_{mode}_s1234.json")),
        )
        .unwrap();
        let plan = solution_from_json(&scenario, &text).unwrap();
        assert!(check_feasibility(&scenario, &plan).is_empty(), "{mode}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}
